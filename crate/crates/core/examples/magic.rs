//! Closed-form Lie algebra contractions against explicit basis sums.

use ymh_loops::checks::magic_check;
use ymh_loops::groups::Family;

fn main() -> ymh_loops::Result<()> {
    let r = magic_check(&[Family::SO, Family::U, Family::SU], 2..=4, 20, 7, None)?;
    for row in &r.rows {
        println!(
            "{:<6} {:<16} {:.2e}",
            row.group, row.identity, row.max_residual
        );
    }
    println!("pass: {}", r.pass);

    // a wrong lambda is caught
    let bad = magic_check(&[Family::U], 2..=2, 5, 7, Some(0.9))?;
    println!(
        "with lambda = 0.9: pass = {}, max residual {:.2e}",
        bad.pass,
        bad.max_residual()
    );
    Ok(())
}

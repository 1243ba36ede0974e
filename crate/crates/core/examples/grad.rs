//! Analytic gradients of the action against central differences.

use ymh_loops::checks::{grad_check, GradSuite};
use ymh_loops::groups::{Family, Target};

fn main() -> ymh_loops::Result<()> {
    let suite = GradSuite {
        families: vec![Family::SO, Family::U, Family::SU],
        ns: vec![2, 3],
        targets: vec![
            Target::Sphere,
            Target::Flat {
                a: vec![-0.8, 0.3, -0.2],
            },
        ],
        d: 2,
        l: 3,
        beta: 0.7,
        kappa: 0.4,
        configs: 5,
        seed: 1,
    };
    let r = grad_check(&suite)?;
    for row in &r.rows {
        println!(
            "{:<6} {:<22} edge {:.1e}  site {:.1e}",
            row.group, row.target, row.edge_error, row.site_error
        );
    }
    println!("worst {:.2e}, pass {}", r.worst, r.pass);
    Ok(())
}

//! Sizes of a periodic lattice and the constants of each matrix group.
//!
//! cargo run --example lattice_info -- 3 4

use ymh_loops::groups::{Family, GroupSpec};
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let d = args.next().unwrap_or(2);
    let l = args.next().unwrap_or(4);
    let g = LatticeGeometry::new(d, l)?;
    println!(
        "d = {d}, L = {l}: {} sites, {} links, {} plaquettes",
        g.num_vertices(),
        g.num_links(),
        g.num_plaquettes()
    );
    println!("edges at the origin: {}", g.edges_at_site(0)?.len());

    println!(
        "{:<7} {:>7} {:>6} {:>6} {:>6} {:>3}",
        "group", "c_g", "lambda", "mu", "nu", "q"
    );
    for family in [Family::SO, Family::U, Family::SU] {
        for n in 2..=4 {
            let gr = GroupSpec::new(family, n)?;
            println!(
                "{:<7} {:>7.3} {:>6.3} {:>6.3} {:>6.3} {:>3}",
                gr.to_string(),
                gr.c_g(),
                gr.lambda(),
                gr.mu(),
                gr.nu(),
                gr.q()
            );
        }
    }
    Ok(())
}

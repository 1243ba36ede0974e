//! Observables before and after a random gauge transformation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ymh_loops::groups::{gauge_transform, Family, FieldConfig, GroupSpec, ModelParams, Target};
use ymh_loops::observables::gauge_invariance_check;
use ymh_loops::strings::parse_string;
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let g = LatticeGeometry::new(2, 4)?;
    let p = ModelParams::new(GroupSpec::new(Family::U, 3)?, Target::Sphere, g, 0.3, 0.2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = FieldConfig::random(&p, &mut rng);
    let gauge: Vec<_> = (0..p.geometry.num_vertices())
        .map(|_| p.group.haar(&mut rng))
        .collect();

    let t = gauge_transform(&p.geometry, &cfg, &gauge);
    println!("action {:.12} -> {:.12}", p.action(&cfg), p.action(&t));
    for src in [
        "loop (0,0)+x+y-x-y",
        "line (0,0)+x+x+y",
        "line (1,1)+x-y-x+y",
    ] {
        let s = vec![parse_string(src, &p.geometry)?];
        let c = gauge_invariance_check(&p, &cfg, &s, &gauge);
        println!("{src:<24} |change| {:.1e}  pass {}", c.difference, c.pass);
    }
    Ok(())
}

//! Loop equations at zero coupling, checked on exact product samples.
//!
//! cargo run --release --example haar_verify -- 200000

use ymh_loops::groups::{Family, GroupSpec, ModelParams, Target};
use ymh_loops::verifier::{
    catalog_jobs, render_report, run_batch, BatchOptions, Catalog, Mutation, SampleSource,
};
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let samples = std::env::args()
        .nth(1)
        .map_or(100_000, |s| s.parse().expect("sample count"));
    let g = LatticeGeometry::new(2, 4)?;
    let p = ModelParams::new(GroupSpec::new(Family::SU, 2)?, Target::Sphere, g, 0.0, 0.0)?;
    let text = include_str!("../catalogs/haar.cat");
    let cat = Catalog::parse(text, &p.geometry)?;
    let mut opts = BatchOptions::new(1, 4.0);
    opts.mutations = vec![Mutation::parse("2lambda=1.1")?];
    let report = run_batch(
        &p,
        catalog_jobs(&p, &cat.entries)?,
        &SampleSource::Iid { samples },
        &opts,
    )?;
    print!("{}", render_report(&report));
    Ok(())
}

//! Loop equations in the interacting regime, checked on Metropolis chains.
//!
//! cargo run --release --example mcmc_verify

use ymh_loops::groups::{Family, GroupSpec, ModelParams, Target};
use ymh_loops::sampler::SamplerPlan;
use ymh_loops::verifier::{
    catalog_jobs, render_report, run_batch, BatchOptions, Catalog, SampleSource,
};
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let g = LatticeGeometry::new(2, 4)?;
    let p = ModelParams::new(
        GroupSpec::new(Family::SO, 2)?,
        Target::Flat { a: vec![0.5, -0.5] },
        g,
        0.3,
        0.2,
    )?;
    let cat = Catalog::parse(include_str!("../catalogs/mcmc.cat"), &p.geometry)?;
    // shorter than the default plan; enough to see every equation balance within a few errors
    let plan = SamplerPlan {
        burn_in: 2000,
        chains: 4,
        samples_per_chain: 2000,
        tune_sweeps: 500,
        ..SamplerPlan::default()
    };
    let report = run_batch(
        &p,
        catalog_jobs(&p, &cat.entries)?,
        &SampleSource::Mcmc(plan),
        &BatchOptions::new(3, 4.0),
    )?;
    print!("{}", render_report(&report));
    Ok(())
}

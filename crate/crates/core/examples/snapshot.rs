//! Draw samples, store them, read them back and estimate a Wilson loop.

use ymh_loops::groups::{Family, GroupSpec, ModelParams, Target};
use ymh_loops::observables::estimate_phi;
use ymh_loops::sampler::{iid_product_sample, read_snapshot, write_snapshot, SnapshotHeader};
use ymh_loops::strings::parse_string;
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let g = LatticeGeometry::new(2, 3)?;
    let p = ModelParams::new(GroupSpec::new(Family::SO, 3)?, Target::Sphere, g, 0.0, 0.0)?;
    let samples = iid_product_sample(&p, 1, 2000)?;
    let header = SnapshotHeader {
        version: 1,
        params_hash: String::new(),
        d: 2,
        l: 3,
        n: 3,
        group: p.group.to_string(),
        scalar: "sphere".into(),
        samples: samples.len(),
    };
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &header, &samples)?;
    let (h, back) = read_snapshot(&mut buf.as_slice())?;
    println!("{} bytes, {} samples of {}", buf.len(), h.samples, h.group);

    // E Tr(Q_p Q_p) = 1 for Haar SO(N), N >= 3
    let s = vec![parse_string("loop (0,0)+x+y-x-y+x+y-x-y", &p.geometry)?];
    let est = estimate_phi(&back, 3, &s)?;
    println!(
        "doubled plaquette: {:.4} +- {:.4}",
        est.mean_re, est.stderr_re
    );
    Ok(())
}

//! Gauge invariance of the action and of every catalog observable.

mod support;

use support::{model, rng};
use ymh_loops::groups::{Family, FieldConfig, ModelParams, Target};
use ymh_loops::observables::eval_collection;
use ymh_loops::strings::LatticeString;
use ymh_loops::verifier::Catalog;
use ymh_loops::OrientedEdge;

/// `Q_e ↦ g_u Q_e g_v*`, `Φ_x ↦ g_x Φ_x`, written out independently of the library.
fn transform(p: &ModelParams, cfg: &FieldConfig, g: &[ymh_loops::linalg::Mat]) -> FieldConfig {
    let geo = &p.geometry;
    let mut out = cfg.clone();
    for (l, q) in out.links.iter_mut().enumerate() {
        let e = OrientedEdge::from_link(l, false);
        *q = (g[geo.u(e)] * cfg.links[l]) * g[geo.v(e)].adjoint();
    }
    for (x, phi) in out.sites.iter_mut().enumerate() {
        *phi = g[x] * cfg.sites[x];
    }
    out
}

fn catalog_strings(p: &ModelParams) -> Vec<Vec<LatticeString>> {
    let mut all = Vec::new();
    for name in ["haar.cat", "mcmc.cat"] {
        let text =
            std::fs::read_to_string(format!("{}/catalogs/{name}", env!("CARGO_MANIFEST_DIR")))
                .unwrap();
        let cat = Catalog::parse(&text, &p.geometry).unwrap();
        all.extend(cat.collections.into_iter().map(|c| c.strings));
    }
    all
}

/// Largest change of the action or any catalog observable over `transforms` random gauges,
/// on every group family and both targets.
pub fn max_gauge_defect(transforms: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for family in [Family::SO, Family::U, Family::SU] {
        for target in [Target::Sphere, Target::Flat { a: vec![0.5, -0.5] }] {
            let p = model(family, 3, target, 2, 4, 0.3, 0.2);
            let obs = catalog_strings(&p);
            for _ in 0..transforms / 6 + 1 {
                let cfg = FieldConfig::random(&p, &mut r);
                let g: Vec<_> = (0..p.geometry.num_vertices())
                    .map(|_| p.group.haar(&mut r))
                    .collect();
                let t = transform(&p, &cfg, &g);
                worst = worst
                    .max((p.action(&cfg) - p.action(&t)).abs() / p.action(&cfg).abs().max(1.0));
                for s in &obs {
                    let (a, b) = (eval_collection(&cfg, 3, s), eval_collection(&t, 3, s));
                    worst = worst.max((a - b).norm() / a.norm().max(1.0));
                }
            }
        }
    }
    worst
}

#[test]
pub fn action_and_observables_are_gauge_invariant() {
    let d = max_gauge_defect(100, 1);
    assert!(d < 1e-9, "{d}");
}

/// The library transform agrees with the one written here.
#[test]
pub fn library_transform_matches() {
    let mut r = rng(2);
    let p = model(Family::U, 2, Target::Sphere, 3, 2, 0.0, 0.0);
    let cfg = FieldConfig::random(&p, &mut r);
    let g: Vec<_> = (0..p.geometry.num_vertices())
        .map(|_| p.group.haar(&mut r))
        .collect();
    let a = transform(&p, &cfg, &g);
    let b = ymh_loops::groups::gauge_transform(&p.geometry, &cfg, &g);
    for (x, y) in a.links.iter().zip(&b.links) {
        assert!(ymh_loops::linalg::Mat::from_fn(2, |i, j| x[(i, j)] - y[(i, j)]).max_abs() < 1e-14);
    }
}

/// Transforming links alone is not a symmetry of open lines, so the check has teeth.
#[test]
pub fn partial_transform_is_detected() {
    let mut r = rng(3);
    let p = model(Family::SO, 3, Target::Sphere, 2, 4, 0.0, 1.0);
    let cfg = FieldConfig::random(&p, &mut r);
    let g: Vec<_> = (0..p.geometry.num_vertices())
        .map(|_| p.group.haar(&mut r))
        .collect();
    let mut t = transform(&p, &cfg, &g);
    t.sites = cfg.sites.clone();
    let line = support::strings(&p.geometry, &["line (0,0)+x"]);
    assert!((eval_collection(&cfg, 3, &line) - eval_collection(&t, 3, &line)).norm() > 1e-6);
    assert!((p.action(&cfg) - p.action(&t)).abs() > 1e-6);
}

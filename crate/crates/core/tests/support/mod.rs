//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ymh_loops::groups::{Family, FieldConfig, GroupSpec, ModelParams, Target};
use ymh_loops::linalg::{CVec, C64};
use ymh_loops::observables::eval_collection;
use ymh_loops::strings::{parse_string, LatticeString};
use ymh_loops::{LatticeGeometry, OrientedEdge, Vertex};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn model(
    family: Family,
    n: usize,
    target: Target,
    d: usize,
    l: usize,
    beta: f64,
    kappa: f64,
) -> ModelParams {
    let g = LatticeGeometry::new(d, l).unwrap();
    ModelParams::new(GroupSpec::new(family, n).unwrap(), target, g, beta, kappa).unwrap()
}

pub fn strings(g: &LatticeGeometry, src: &[&str]) -> Vec<LatticeString> {
    src.iter().map(|s| parse_string(s, g).unwrap()).collect()
}

const H: f64 = 1e-3;

/// Second derivative at 0 by the five-point stencil.
fn d2(f: impl Fn(f64) -> C64) -> C64 {
    (-f(2.0 * H) + f(H) * 16.0 - f(0.0) * 30.0 + f(-H) * 16.0 - f(-2.0 * H)) / (12.0 * H * H)
}

/// First derivative at 0 by the five-point stencil.
fn d1(f: impl Fn(f64) -> C64) -> C64 {
    (-f(2.0 * H) + f(H) * 8.0 - f(-H) * 8.0 + f(-2.0 * H)) / (12.0 * H)
}

/// Generator of the Langevin dynamics in the link `e`, applied to `W_s`:
/// `Σ_α ∂²_α W + ∂_α S ∂_α W` with `∂_α` along `exp(s v_α) Q_e`.
pub fn edge_generator(
    p: &ModelParams,
    cfg: &FieldConfig,
    s: &[LatticeString],
    e: OrientedEdge,
) -> C64 {
    let link = e.link();
    let n = p.n();
    let q0 = cfg.links[link];
    let mut total = C64::new(0.0, 0.0);
    for v in p.group.lie_basis() {
        let at = |t: f64| {
            let mut c = cfg.clone();
            c.links[link] = (v * t).exp() * q0;
            c
        };
        let w = |t: f64| eval_collection(&at(t), n, s);
        let act = |t: f64| C64::new(p.action(&at(t)), 0.0);
        total += d2(w) + d1(act) * d1(w);
    }
    total
}

/// Generator in the site `x`: flat Laplacian plus drift, or the sphere Laplace–Beltrami operator.
pub fn site_generator(p: &ModelParams, cfg: &FieldConfig, s: &[LatticeString], x: Vertex) -> C64 {
    let n = p.n();
    let phi = cfg.sites[x];
    let mut total = C64::new(0.0, 0.0);
    for b in p.higgs.real_basis() {
        let at = |t: f64| {
            let mut c = cfg.clone();
            c.sites[x] = if p.higgs.is_sphere() {
                let v: CVec = p.higgs.tangent(&phi, &b).scale_re(t);
                p.higgs.sphere_geodesic(&phi, &v)
            } else {
                phi + b.scale_re(t)
            };
            c
        };
        let w = |t: f64| eval_collection(&at(t), n, s);
        let act = |t: f64| C64::new(p.action(&at(t)), 0.0);
        total += d2(w) + d1(act) * d1(w);
    }
    total
}

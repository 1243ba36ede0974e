//! Deterministic self-checks: contraction identities and action gradients.

use crate::error::Result;
use crate::geometry::{LatticeGeometry, OrientedEdge};
use crate::groups::{
    Family, FieldConfig, GroupSpec, HiggsSpec, MagicConstants, MartingaleForm, ModelParams, Target,
};
use crate::linalg::{CVec, Mat, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ResidualRow {
    pub group: String,
    pub identity: String,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MagicReport {
    pub inputs: usize,
    pub tolerance: f64,
    pub rows: Vec<ResidualRow>,
    pub pass: bool,
}

impl MagicReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

fn rel_mat(a: &Mat, b: &Mat) -> f64 {
    (*a - *b).max_abs() / (1.0 + b.max_abs())
}

fn rel_vec(a: &CVec, b: &CVec) -> f64 {
    (*a - *b).norm() / (1.0 + b.norm())
}

/// Closed-form contractions against explicit sums over the Lie basis.
///
/// `lambda` replaces `λ` in the closed forms (a deliberately wrong value must fail).
pub fn magic_check(
    families: &[Family],
    ns: impl IntoIterator<Item = usize> + Clone,
    inputs: usize,
    seed: u64,
    lambda: Option<f64>,
) -> Result<MagicReport> {
    let tolerance = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &family in families {
        for n in ns.clone() {
            let g = GroupSpec::new(family, n)?;
            let c = MagicConstants {
                lambda: lambda.unwrap_or(g.lambda()),
                ..g.constants()
            };
            let mut worst = vec![0.0f64; 9];
            for _ in 0..inputs {
                let (m, k) = (ginibre(n, &mut rng), ginibre(n, &mut rng));
                worst[0] = worst[0].max(rel_mat(
                    &g.contract_single_with(&m, c),
                    &g.contract_single_basis(&m),
                ));
                worst[1] = worst[1].max(rel(
                    g.contract_double_with(&m, &k, c),
                    g.contract_double_basis(&m, &k),
                ));
                let q = g.haar(&mut rng);
                for (i, form) in MartingaleForm::ALL.into_iter().enumerate() {
                    let a = g.martingale_contraction_with(form, &q, &m, &k, c);
                    let b = g.martingale_contraction_basis(form, &q, &m, &k);
                    worst[2 + i] = worst[2 + i].max(rel(a, b));
                }
                for target in [Target::Sphere, Target::Flat { a: vec![-1.0] }] {
                    let h = HiggsSpec::new(&g, target)?;
                    let phi = h.random_point(&mut rng);
                    let r = h.gaussian(&mut rng);
                    worst[6] = worst[6].max(rel(
                        h.contraction_quadratic(&phi, &m),
                        h.contraction_quadratic_basis(&phi, &m),
                    ));
                    let (a1, a2) = h.contraction_vector(&phi, &r);
                    let (b1, b2) = h.contraction_vector_basis(&phi, &r);
                    worst[7] = worst[7].max(rel_vec(&a1, &b1).max(rel_vec(&a2, &b2)));
                }
            }
            let sum_sq = g
                .lie_basis()
                .iter()
                .fold(Mat::zeros(n), |acc, v| acc + v * v);
            worst[8] = (sum_sq - Mat::identity(n) * g.c_g()).max_abs();
            let names = [
                "single",
                "double",
                "trace-same",
                "trace-inverse",
                "product-same",
                "product-inverse",
                "higgs-quadratic",
                "higgs-vector",
                "casimir",
            ];
            for (name, w) in names.iter().zip(worst) {
                rows.push(ResidualRow {
                    group: g.to_string(),
                    identity: name.to_string(),
                    max_residual: w,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| {
        let tol = if r.identity == "casimir" {
            1e-12
        } else {
            tolerance
        };
        r.max_residual < tol
    });
    Ok(MagicReport {
        inputs,
        tolerance,
        rows,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GradRow {
    pub group: String,
    pub target: String,
    pub edge_error: f64,
    pub site_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradReport {
    pub configs: usize,
    pub step: f64,
    pub tolerance: f64,
    pub rows: Vec<GradRow>,
    pub worst: f64,
    pub pass: bool,
}

/// Derivative at 0 by the five-point central stencil.
pub fn central_difference(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn rel_err(fd: f64, exact: f64) -> f64 {
    (fd - exact).abs() / exact.abs().max(1e-4)
}

/// Worst relative error of the edge and site gradients over `configs` random configurations.
pub fn grad_errors(
    params: &ModelParams,
    configs: usize,
    rng: &mut ChaCha8Rng,
    h: f64,
) -> (f64, f64) {
    let g = &params.geometry;
    let (mut we, mut ws) = (0.0f64, 0.0f64);
    for _ in 0..configs {
        let cfg = FieldConfig::random(params, rng);
        for link in 0..g.num_links() {
            for reversed in [false, true] {
                let e = OrientedEdge::from_link(link, reversed);
                let x = params.group.random_algebra(rng);
                let q = cfg.q(e);
                let f = |s: f64| {
                    let mut c = cfg.clone();
                    let moved = (x * s).exp() * q;
                    c.links[link] = if reversed { moved.adjoint() } else { moved };
                    params.action(&c)
                };
                let exact = params.grad_edge(&cfg, e).inner(&(x * q));
                we = we.max(rel_err(central_difference(f, h), exact));
            }
        }
        for site in 0..g.num_vertices() {
            let phi = cfg.sites[site];
            let mut v = params.higgs.gaussian(rng);
            if params.higgs.is_sphere() {
                v = params.higgs.tangent(&phi, &v);
            }
            let f = |s: f64| {
                let mut c = cfg.clone();
                c.sites[site] = if params.higgs.is_sphere() {
                    params.higgs.sphere_geodesic(&phi, &v.scale_re(s))
                } else {
                    phi + v.scale_re(s)
                };
                params.action(&c)
            };
            let exact = params.grad_site(&cfg, site).dot(&v).re;
            ws = ws.max(rel_err(central_difference(f, h), exact));
        }
    }
    (we, ws)
}

/// Grid of models for the gradient check.
#[derive(Clone, Debug)]
pub struct GradSuite {
    pub families: Vec<Family>,
    pub ns: Vec<usize>,
    pub targets: Vec<Target>,
    pub d: usize,
    pub l: usize,
    pub beta: f64,
    pub kappa: f64,
    pub configs: usize,
    pub seed: u64,
}

/// Finite-difference check of every gradient, all group/target pairings.
pub fn grad_check(suite: &GradSuite) -> Result<GradReport> {
    let h = 1e-3;
    let tolerance = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    let geometry = LatticeGeometry::new(suite.d, suite.l)?;
    let mut rows = Vec::new();
    for &family in &suite.families {
        for &n in &suite.ns {
            for target in &suite.targets {
                let group = GroupSpec::new(family, n)?;
                let p = ModelParams::new(
                    group,
                    target.clone(),
                    geometry.clone(),
                    suite.beta,
                    suite.kappa,
                )?;
                let (edge_error, site_error) = grad_errors(&p, suite.configs, &mut rng, h);
                rows.push(GradRow {
                    group: p.group.to_string(),
                    target: target_name(target),
                    edge_error,
                    site_error,
                });
            }
        }
    }
    let worst = rows
        .iter()
        .map(|r| r.edge_error.max(r.site_error))
        .fold(0.0, f64::max);
    Ok(GradReport {
        configs: suite.configs,
        step: h,
        tolerance,
        rows,
        worst,
        pass: worst < tolerance,
    })
}

pub fn target_name(t: &Target) -> String {
    match t {
        Target::Sphere => "sphere".into(),
        Target::Flat { a } => format!("flat{a:?}"),
    }
}

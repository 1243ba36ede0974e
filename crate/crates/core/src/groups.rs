//! Matrix groups, Higgs targets, the action and its gradients.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, OrientedEdge, Vertex};
use crate::linalg::{CVec, Mat, C64, MAX_N};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "SO")]
    SO,
    #[serde(rename = "U")]
    U,
    #[serde(rename = "SU")]
    SU,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::SO => "SO",
            Family::U => "U",
            Family::SU => "SU",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupSpec {
    pub family: Family,
    pub n: usize,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

impl GroupSpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if !(2..=MAX_N).contains(&n) {
            return Err(Error::Parameter(format!(
                "N must be in 2..={MAX_N}, got {n}"
            )));
        }
        Ok(GroupSpec { family, n })
    }

    pub fn is_real(&self) -> bool {
        self.family == Family::SO
    }

    /// 1 for real groups, 2 for complex ones.
    pub fn q(&self) -> usize {
        if self.is_real() {
            1
        } else {
            2
        }
    }

    pub fn dim_algebra(&self) -> usize {
        let n = self.n;
        match self.family {
            Family::SO => n * (n - 1) / 2,
            Family::U => n * n,
            Family::SU => n * n - 1,
        }
    }

    /// `c_g` with `Σ v_α² = c_g I`.
    pub fn c_g(&self) -> f64 {
        let n = self.n as f64;
        match self.family {
            Family::SO => -(n - 1.0) / 2.0,
            Family::U => -n,
            Family::SU => -(n * n - 1.0) / n,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self.family {
            Family::SO => 0.5,
            Family::U | Family::SU => 1.0,
        }
    }

    pub fn mu(&self) -> f64 {
        match self.family {
            Family::SO => 0.5,
            Family::U | Family::SU => 0.0,
        }
    }

    pub fn nu(&self) -> f64 {
        match self.family {
            Family::SU => 1.0 / self.n as f64,
            Family::SO | Family::U => 0.0,
        }
    }

    /// Orthonormal basis of the Lie algebra under `Re Tr(X Y^*)`.
    pub fn lie_basis(&self) -> Vec<Mat> {
        let n = self.n;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(self.dim_algebra());
        for a in 0..n {
            for b in a + 1..n {
                out.push((Mat::unit(n, a, b, one) - Mat::unit(n, b, a, one)) * s);
                if !self.is_real() {
                    out.push((Mat::unit(n, a, b, i) + Mat::unit(n, b, a, i)) * s);
                }
            }
        }
        match self.family {
            Family::SO => {}
            Family::U => {
                for a in 0..n {
                    out.push(Mat::unit(n, a, a, i));
                }
            }
            Family::SU => {
                for k in 1..n {
                    let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    let mut h = Mat::zeros(n);
                    for a in 0..k {
                        h[(a, a)] = i * norm;
                    }
                    h[(k, k)] = -i * (k as f64 * norm);
                    out.push(h);
                }
            }
        }
        out
    }

    /// Orthogonal projection onto the Lie algebra.
    pub fn project_algebra(&self, x: &Mat) -> Mat {
        let n = self.n;
        let mut m = (*x - x.adjoint()) * 0.5;
        match self.family {
            Family::SO => {
                m = Mat::from_fn(n, |a, b| C64::new(m[(a, b)].re, 0.0));
            }
            Family::U => {}
            Family::SU => {
                let t = m.trace() / n as f64;
                for a in 0..n {
                    m[(a, a)] -= t;
                }
            }
        }
        m
    }

    /// Standard Gaussian element of the Lie algebra.
    pub fn random_algebra<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let n = self.n;
        let g = if self.is_real() {
            Mat::from_fn(n, |_, _| C64::new(normal(rng), 0.0))
        } else {
            Mat::from_fn(n, |_, _| C64::new(normal(rng), normal(rng)))
        };
        // the orthogonal projection of an isotropic Gaussian is isotropic on the subspace
        self.project_algebra(&g)
    }

    /// Haar-distributed element.
    pub fn haar<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let n = self.n;
        let g = if self.is_real() {
            Mat::from_fn(n, |_, _| C64::new(normal(rng), 0.0))
        } else {
            Mat::from_fn(n, |_, _| C64::new(normal(rng), normal(rng)))
        };
        self.fix_determinant(g.orthonormalize_columns())
    }

    fn fix_determinant(&self, mut q: Mat) -> Mat {
        let n = self.n;
        match self.family {
            Family::U => q,
            Family::SO => {
                if q.det().re < 0.0 {
                    for a in 0..n {
                        q[(a, 0)] = -q[(a, 0)];
                    }
                }
                q
            }
            Family::SU => {
                let d = q.det();
                let phase = C64::from_polar(1.0, -d.arg() / n as f64);
                q * phase
            }
        }
    }

    /// Pull a nearly unitary matrix back onto the group.
    pub fn reproject(&self, q: &Mat) -> Mat {
        let m = if self.is_real() {
            Mat::from_fn(self.n, |a, b| C64::new(q[(a, b)].re, 0.0))
        } else {
            *q
        };
        self.fix_determinant(m.orthonormalize_columns())
    }

    /// `exp(X Q^{-1}) Q` for a tangent vector `X` at `Q`.
    pub fn exp_map(&self, q: &Mat, x: &Mat) -> Mat {
        x.mul_adj(q).exp() * *q
    }

    /// Distance from the group: unitarity, realness and determinant defects.
    pub fn membership_defect(&self, q: &Mat) -> f64 {
        let mut d = q.unitarity_defect();
        match self.family {
            Family::SO => {
                d = d.max((q.det() - 1.0).norm());
                for a in 0..self.n {
                    for b in 0..self.n {
                        d = d.max(q[(a, b)].im.abs());
                    }
                }
            }
            Family::SU => d = d.max((q.det() - 1.0).norm()),
            Family::U => {}
        }
        d
    }

    pub fn constants(&self) -> MagicConstants {
        MagicConstants {
            lambda: self.lambda(),
            mu: self.mu(),
            nu: self.nu(),
        }
    }

    /// `ν M + μ M^t − λ Tr(M) I`.
    pub fn contract_single(&self, m: &Mat) -> Mat {
        self.contract_single_with(m, self.constants())
    }

    pub fn contract_single_with(&self, m: &Mat, c: MagicConstants) -> Mat {
        let mut out = *m * c.nu + m.transpose() * c.mu;
        let t = m.trace() * c.lambda;
        for a in 0..self.n {
            out[(a, a)] -= t;
        }
        out
    }

    /// `Σ_α v_α M v_α` by explicit summation.
    pub fn contract_single_basis(&self, m: &Mat) -> Mat {
        let mut out = Mat::zeros(self.n);
        for v in self.lie_basis() {
            out += (&v * m) * v;
        }
        out
    }

    /// `ν Tr M Tr N + μ Tr(M N^t) − λ Tr(M N)`.
    pub fn contract_double(&self, m: &Mat, n: &Mat) -> C64 {
        self.contract_double_with(m, n, self.constants())
    }

    pub fn contract_double_with(&self, m: &Mat, n: &Mat, c: MagicConstants) -> C64 {
        m.trace() * n.trace() * c.nu + (m * &n.transpose()).trace() * c.mu
            - (m * n).trace() * c.lambda
    }

    /// `Σ_α Tr(v_α M) Tr(v_α N)` by explicit summation.
    pub fn contract_double_basis(&self, m: &Mat, n: &Mat) -> C64 {
        self.lie_basis()
            .iter()
            .map(|v| (v * m).trace() * (v * n).trace())
            .sum()
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family, self.n)
    }
}

/// The constants `(λ, μ, ν)` of the contraction identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MagicConstants {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

/// Which of the four edge quadratic-variation identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MartingaleForm {
    /// `Tr(dM_e P dM_e R)`.
    TraceSame,
    /// `Tr(dM_e P dM_{e^{-1}} R)`.
    TraceInverse,
    /// `Tr(dM_e P) Tr(dM_e R)`.
    ProductSame,
    /// `Tr(dM_e P) Tr(dM_{e^{-1}} R)`.
    ProductInverse,
}

impl MartingaleForm {
    pub const ALL: [MartingaleForm; 4] = [
        MartingaleForm::TraceSame,
        MartingaleForm::TraceInverse,
        MartingaleForm::ProductSame,
        MartingaleForm::ProductInverse,
    ];
}

impl GroupSpec {
    /// Closed form of the `dt` coefficient, `Q = Q_e` with `e` positive.
    pub fn martingale_contraction(&self, form: MartingaleForm, q: &Mat, p: &Mat, r: &Mat) -> C64 {
        self.martingale_contraction_with(form, q, p, r, self.constants())
    }

    pub fn martingale_contraction_with(
        &self,
        form: MartingaleForm,
        q: &Mat,
        p: &Mat,
        r: &Mat,
        c: MagicConstants,
    ) -> C64 {
        let (l, m, nu) = (c.lambda, c.mu, c.nu);
        let qs = q.adjoint();
        let tr = |x: Mat| x.trace();
        let v = match form {
            MartingaleForm::TraceSame => {
                tr(q * p * *q * *r) * nu + tr(p.transpose() * *r) * m - tr(q * p) * tr(q * r) * l
            }
            MartingaleForm::TraceInverse => {
                -(tr(q * p * qs * *r) * nu + tr(q * &p.transpose() * q.transpose() * *r) * m
                    - p.trace() * r.trace() * l)
            }
            MartingaleForm::ProductSame => {
                tr(q * p) * tr(q * r) * nu + tr(p * &r.transpose()) * m - tr(q * p * *q * *r) * l
            }
            MartingaleForm::ProductInverse => {
                -(tr(q * p) * tr(r * &qs) * nu + tr(q * p * *q * r.transpose()) * m - tr(p * r) * l)
            }
        };
        v * 2.0
    }

    /// The same quantity by summing the noise forms over the Lie basis.
    pub fn martingale_contraction_basis(
        &self,
        form: MartingaleForm,
        q: &Mat,
        p: &Mat,
        r: &Mat,
    ) -> C64 {
        let qs = q.adjoint();
        let mut s = C64::new(0.0, 0.0);
        for v in self.lie_basis() {
            // dM_e = √2 v Q, dM_{e^{-1}} = −√2 Q^* v
            let de = &v * q;
            let di = -(qs * v);
            s += match form {
                MartingaleForm::TraceSame => (&((&de * p) * de) * r).trace(),
                MartingaleForm::TraceInverse => (&((&de * p) * di) * r).trace(),
                MartingaleForm::ProductSame => (&de * p).trace() * (&de * r).trace(),
                MartingaleForm::ProductInverse => (&de * p).trace() * (&di * r).trace(),
            };
        }
        s * 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Sphere,
    /// Flat target with potential `V(r) = Σ_j a_j r^j`, `r = |Φ|²`; `a[0]` multiplies `r`.
    Flat {
        a: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct HiggsSpec {
    pub target: Target,
    /// Number of complex components.
    pub n: usize,
    pub q: usize,
}

impl HiggsSpec {
    pub fn new(group: &GroupSpec, target: Target) -> Result<Self> {
        if let Target::Flat { a } = &target {
            match a.last() {
                None => {
                    return Err(Error::Parameter(
                        "flat target needs potential coefficients".into(),
                    ))
                }
                Some(&top) if top.is_nan() || top >= 0.0 => {
                    return Err(Error::Parameter(format!(
                        "leading potential coefficient must be negative, got {top}"
                    )))
                }
                _ => {}
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parameter(
                    "potential coefficients must be finite".into(),
                ));
            }
        }
        Ok(HiggsSpec {
            target,
            n: group.n,
            q: group.q(),
        })
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.target, Target::Sphere)
    }

    /// `1_S`.
    pub fn indicator(&self) -> f64 {
        if self.is_sphere() {
            1.0
        } else {
            0.0
        }
    }

    /// Real dimension of the ambient space, `qN`.
    pub fn real_dim(&self) -> usize {
        self.q * self.n
    }

    /// `c_M`: `qN − 1` for spheres, 0 otherwise.
    pub fn c_m(&self) -> f64 {
        if self.is_sphere() {
            (self.real_dim() - 1) as f64
        } else {
            0.0
        }
    }

    pub fn potential(&self, r: f64) -> f64 {
        match &self.target {
            Target::Sphere => 0.0,
            Target::Flat { a } => a.iter().rev().fold(0.0, |acc, &c| (acc + c) * r),
        }
    }

    /// `V'(r)`.
    pub fn potential_derivative(&self, r: f64) -> f64 {
        match &self.target {
            Target::Sphere => 0.0,
            Target::Flat { a } => a
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (j, &c)| acc * r + (j + 1) as f64 * c),
        }
    }

    /// Gradient coefficients `c_k`, `k = 0, 2, 4, ...`: `∇V = Σ c_k Φ |Φ|^k`, indexed by `k/2`.
    pub fn grad_coefficients(&self) -> Vec<f64> {
        match &self.target {
            Target::Sphere => Vec::new(),
            Target::Flat { a } => a
                .iter()
                .enumerate()
                .map(|(j, &c)| 2.0 * (j + 1) as f64 * c)
                .collect(),
        }
    }

    /// `c_k` for even `k`, zero otherwise.
    pub fn c(&self, k: usize) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        self.grad_coefficients().get(k / 2).copied().unwrap_or(0.0)
    }

    /// Largest null-line count with a nonzero potential coefficient.
    pub fn max_null(&self) -> usize {
        self.grad_coefficients().len().saturating_sub(1)
    }

    /// Real orthonormal basis of `ℝ^{qN}` as vectors in `ℂ^N`.
    pub fn real_basis(&self) -> Vec<CVec> {
        let mut out = Vec::with_capacity(self.real_dim());
        for k in 0..self.n {
            out.push(CVec::basis(self.n, k));
            if self.q == 2 {
                out.push(CVec::basis(self.n, k).scale(C64::new(0.0, 1.0)));
            }
        }
        out
    }

    /// Projection of an ambient vector onto the tangent space at `phi`.
    pub fn tangent(&self, phi: &CVec, b: &CVec) -> CVec {
        if self.is_sphere() {
            *b - phi.scale_re(phi.dot(b).re)
        } else {
            *b
        }
    }

    /// `dM^* P dM`, closed form.
    pub fn contraction_quadratic(&self, phi: &CVec, p: &Mat) -> C64 {
        p.trace() * (2 * self.q) as f64 - phi.dot(&(*p * *phi)) * (2.0 * self.indicator())
    }

    /// `dM R^* dM` (returned first) and `dM^* R dM^*` (as the entries of a row), closed forms.
    pub fn contraction_vector(&self, phi: &CVec, r: &CVec) -> (CVec, CVec) {
        let k = (2 * (2 - self.q)) as f64;
        let s = 2.0 * self.indicator();
        let a = r.scale_re(k) - phi.scale(r.dot(phi) * s);
        let b = r.conj().scale_re(k) - phi.conj().scale(phi.dot(r) * s);
        (a, b)
    }

    pub fn contraction_quadratic_basis(&self, phi: &CVec, p: &Mat) -> C64 {
        self.real_basis()
            .iter()
            .map(|b| {
                let t = self.tangent(phi, b);
                t.dot(&(*p * t))
            })
            .sum::<C64>()
            * 2.0
    }

    pub fn contraction_vector_basis(&self, phi: &CVec, r: &CVec) -> (CVec, CVec) {
        let mut a = CVec::zeros(self.n);
        let mut c = CVec::zeros(self.n);
        for b in self.real_basis() {
            let t = self.tangent(phi, &b);
            a += t.scale(r.dot(&t));
            c += t.conj().scale(t.dot(r));
        }
        (a.scale_re(2.0), c.scale_re(2.0))
    }

    pub fn sample_sphere<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        loop {
            let v = self.gaussian(rng);
            if v.norm_sqr() > 1e-20 {
                return v.normalized();
            }
        }
    }

    /// Standard Gaussian in `ℝ^{qN}`.
    pub fn gaussian<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        if self.q == 1 {
            CVec::from_fn(self.n, |_| C64::new(normal(rng), 0.0))
        } else {
            CVec::from_fn(self.n, |_| C64::new(normal(rng), normal(rng)))
        }
    }

    /// Geodesic step from `phi` along tangent vector `v`.
    pub fn sphere_geodesic(&self, phi: &CVec, v: &CVec) -> CVec {
        let t = v.norm();
        if t < 1e-300 {
            return *phi;
        }
        (phi.scale_re(t.cos()) + v.scale_re(t.sin() / t)).normalized()
    }

    /// Random point of the target: uniform on spheres, standard Gaussian on flat targets.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        if self.is_sphere() {
            self.sample_sphere(rng)
        } else {
            self.gaussian(rng)
        }
    }
}

/// `normalize(Φ + v)`.
pub fn sphere_retract(phi: &CVec, v: &CVec) -> CVec {
    (*phi + *v).normalized()
}

/// Exact sampler for the density `∝ exp(V(|Φ|²))` on a flat target.
#[derive(Clone, Debug)]
pub struct FlatSiteSampler {
    spec: HiggsSpec,
    /// Envelope `exp(−s |Φ|²)`.
    s: f64,
    /// `max_r (V(r) + s r)`.
    log_bound: f64,
    max_attempts: usize,
}

impl FlatSiteSampler {
    pub fn new(spec: &HiggsSpec) -> Result<Self> {
        let a = match &spec.target {
            Target::Flat { a } => a.clone(),
            Target::Sphere => return Err(Error::Usage("flat sampler on a sphere target".into())),
        };
        let dim = spec.real_dim() as f64;
        let mut best: Option<(f64, f64, f64)> = None;
        let candidates: Vec<f64> = if a.len() == 1 {
            vec![-a[0]]
        } else {
            (0..400)
                .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 399.0))
                .collect()
        };
        for s in candidates {
            let Some(lb) = envelope_bound(spec, s) else {
                continue;
            };
            // acceptance ∝ s^{dim/2} e^{−bound}
            let score = 0.5 * dim * s.ln() - lb;
            if best.is_none_or(|b| score > b.2) {
                best = Some((s, lb, score));
            }
        }
        let (s, log_bound, _) =
            best.ok_or_else(|| Error::Sampler("no Gaussian envelope bounds the potential".into()))?;
        Ok(FlatSiteSampler {
            spec: spec.clone(),
            s,
            log_bound,
            max_attempts: 1_000_000,
        })
    }

    pub fn envelope_scale(&self) -> f64 {
        self.s
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CVec> {
        let sd = (0.5 / self.s).sqrt();
        for _ in 0..self.max_attempts {
            let v = self.spec.gaussian(rng).scale_re(sd);
            let r = v.norm_sqr();
            let log_ratio = self.spec.potential(r) + self.s * r - self.log_bound;
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                return Ok(v);
            }
        }
        Err(Error::Sampler(format!(
            "flat-site rejection sampler gave up after {} attempts (envelope scale {})",
            self.max_attempts, self.s
        )))
    }
}

/// `max_{r ≥ 0} V(r) + s r`, from the roots of `V'(r) + s`; `None` if unbounded.
fn envelope_bound(spec: &HiggsSpec, s: f64) -> Option<f64> {
    let h = |r: f64| spec.potential(r) + s * r;
    let dh = |r: f64| spec.potential_derivative(r) + s;
    // beyond `hi` the derivative stays negative
    let mut hi = 1.0;
    let mut tries = 0;
    while dh(hi) > 0.0 || dh(2.0 * hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return None;
        }
    }
    let hi = 2.0 * hi;
    let steps = 4096;
    let mut best = h(0.0).max(h(hi));
    let mut prev = dh(0.0);
    for i in 1..=steps {
        let r = hi * i as f64 / steps as f64;
        let cur = dh(r);
        if prev > 0.0 && cur <= 0.0 {
            let (mut lo, mut up) = (hi * (i - 1) as f64 / steps as f64, r);
            for _ in 0..100 {
                let mid = 0.5 * (lo + up);
                if dh(mid) > 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            best = best.max(h(0.5 * (lo + up)));
        }
        prev = cur;
    }
    Some(best)
}

/// Link variables on `E+` and Higgs values on sites.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig {
    pub links: Vec<Mat>,
    pub sites: Vec<CVec>,
}

impl FieldConfig {
    pub fn identity(params: &ModelParams) -> Self {
        let n = params.group.n;
        let mut phi = CVec::zeros(n);
        phi[0] = C64::new(1.0, 0.0);
        FieldConfig {
            links: vec![Mat::identity(n); params.geometry.num_links()],
            sites: vec![phi; params.geometry.num_vertices()],
        }
    }

    /// Haar links and target-distributed sites (uniform sphere or standard Gaussian).
    pub fn random<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Self {
        let links = (0..params.geometry.num_links())
            .map(|_| params.group.haar(rng))
            .collect();
        let sites = (0..params.geometry.num_vertices())
            .map(|_| params.higgs.random_point(rng))
            .collect();
        FieldConfig { links, sites }
    }

    /// `Q_e`, with `Q_e = Q_{e^{-1}}^{-1}` for negative edges.
    #[inline]
    pub fn q(&self, e: OrientedEdge) -> Mat {
        let m = &self.links[e.link()];
        if e.is_positive() {
            *m
        } else {
            m.adjoint()
        }
    }

    #[inline]
    pub fn phi(&self, x: Vertex) -> &CVec {
        &self.sites[x]
    }

    /// Ordered product of link variables along an edge word.
    pub fn holonomy(&self, n: usize, edges: &[OrientedEdge]) -> Mat {
        let mut m = Mat::identity(n);
        for &e in edges {
            m = m * self.q(e);
        }
        m
    }

    /// Largest group-membership or sphere-norm defect.
    pub fn defect(&self, params: &ModelParams) -> f64 {
        let mut d: f64 = self
            .links
            .iter()
            .map(|q| params.group.membership_defect(q))
            .fold(0.0, f64::max);
        if params.higgs.is_sphere() {
            d = self
                .sites
                .iter()
                .map(|p| (p.norm() - 1.0).abs())
                .fold(d, f64::max);
        }
        if params.group.is_real() {
            d = self.sites.iter().map(|p| p.max_im()).fold(d, f64::max);
        }
        d
    }

    pub fn reproject(&mut self, params: &ModelParams) {
        for q in &mut self.links {
            *q = params.group.reproject(q);
        }
        if params.higgs.is_sphere() {
            for p in &mut self.sites {
                *p = p.normalized();
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub group: GroupSpec,
    pub higgs: HiggsSpec,
    pub geometry: LatticeGeometry,
    pub beta: f64,
    pub kappa: f64,
}

impl ModelParams {
    pub fn new(
        group: GroupSpec,
        target: Target,
        geometry: LatticeGeometry,
        beta: f64,
        kappa: f64,
    ) -> Result<Self> {
        if !beta.is_finite() || !kappa.is_finite() {
            return Err(Error::Parameter("couplings must be finite".into()));
        }
        let higgs = HiggsSpec::new(&group, target)?;
        if let Target::Flat { a } = &higgs.target {
            if a.len() == 1 && -a[0] <= kappa.abs() {
                return Err(Error::Parameter(format!(
                    "quadratic potential V = -m r needs m > |kappa| (m = {}, kappa = {kappa})",
                    -a[0]
                )));
            }
        }
        Ok(ModelParams {
            group,
            higgs,
            geometry,
            beta,
            kappa,
        })
    }

    pub fn n(&self) -> usize {
        self.group.n
    }

    /// `β Σ_{P+} Re Tr Q_p + κ Σ_{E+} Re(Φ_x^* Q_e Φ_y) + Σ_z V(|Φ_z|²)`.
    pub fn action(&self, cfg: &FieldConfig) -> f64 {
        let g = &self.geometry;
        let n = self.n();
        let mut s1 = 0.0;
        for p in g.positive_plaquettes() {
            s1 += cfg.holonomy(n, &p.edges).trace().re;
        }
        let mut s2 = 0.0;
        for link in 0..g.num_links() {
            let e = OrientedEdge::from_link(link, false);
            let (x, y) = (g.u(e), g.v(e));
            s2 += cfg.phi(x).dot(&(cfg.links[link] * *cfg.phi(y))).re;
        }
        let v: f64 = cfg
            .sites
            .iter()
            .map(|p| self.higgs.potential(p.norm_sqr()))
            .sum();
        self.beta * s1 + self.kappa * s2 + v
    }

    /// `Σ_{p ≻ e} Q_e^{-1} Q_p`, the staple sum of `e`.
    pub fn staple(&self, cfg: &FieldConfig, e: OrientedEdge) -> Mat {
        let n = self.n();
        let mut s = Mat::zeros(n);
        for (p, k) in self.geometry.plaquettes_through_unchecked(e) {
            let r = p.rotated(k);
            s += cfg.holonomy(n, &r[1..]);
        }
        s
    }

    /// Action terms involving `Q_e`, as `Re Tr(Q_e M)`: returns `M`.
    pub fn edge_environment(&self, cfg: &FieldConfig, e: OrientedEdge) -> Mat {
        let g = &self.geometry;
        let mut m = self.staple(cfg, e) * self.beta;
        if self.kappa != 0.0 {
            m += cfg.phi(g.v(e)).outer(cfg.phi(g.u(e))) * self.kappa;
        }
        m
    }

    /// `Σ_{u(e) = x} Q_e Φ_{v(e)}` over all `2d` edges leaving `x`.
    pub fn site_field(&self, cfg: &FieldConfig, x: Vertex) -> CVec {
        let mut h = CVec::zeros(self.n());
        for e in self.geometry.edges_at_site_unchecked(x) {
            h += cfg.q(e) * *cfg.phi(self.geometry.v(e));
        }
        h
    }

    /// Action terms involving `Φ_x` evaluated at `phi`.
    pub fn site_local_action(&self, h: &CVec, phi: &CVec) -> f64 {
        self.kappa * phi.dot(h).re + self.higgs.potential(phi.norm_sqr())
    }

    /// Gradient of the action in `Q_e`, as a tangent vector `X Q_e`; any orientation of `e`.
    pub fn grad_edge(&self, cfg: &FieldConfig, e: OrientedEdge) -> Mat {
        let g = &self.geometry;
        let n = self.n();
        let qe = cfg.q(e);
        let mut a = Mat::zeros(n);
        for (p, k) in g.plaquettes_through_unchecked(e) {
            let qp = cfg.holonomy(n, &p.rotated(k));
            a += qp - qp.adjoint();
        }
        a = a * (-0.5 * self.beta);
        if self.kappa != 0.0 {
            let (x, y) = (cfg.phi(g.u(e)), cfg.phi(g.v(e)));
            let t = x.outer(y).mul_adj(&qe) - qe * y.outer(x);
            a += t * (0.5 * self.kappa);
        }
        if self.group.family == Family::SU {
            let tr = a.trace() / n as f64;
            for i in 0..n {
                a[(i, i)] -= tr;
            }
        }
        if self.group.is_real() {
            a = Mat::from_fn(n, |i, j| C64::new(a[(i, j)].re, 0.0));
        }
        a * qe
    }

    /// Gradient of the action in `Φ_x`; tangent to the sphere for sphere targets.
    pub fn grad_site(&self, cfg: &FieldConfig, x: Vertex) -> CVec {
        let phi = *cfg.phi(x);
        let mut v = self.site_field(cfg, x).scale_re(self.kappa);
        if self.higgs.is_sphere() {
            v = self.higgs.tangent(&phi, &v);
        } else {
            v += phi.scale_re(2.0 * self.higgs.potential_derivative(phi.norm_sqr()));
        }
        v
    }
}

/// `Q_e ↦ g_x Q_e g_y^{-1}`, `Φ_x ↦ g_x Φ_x`.
pub fn gauge_transform(
    geometry: &LatticeGeometry,
    cfg: &FieldConfig,
    gauge: &[Mat],
) -> FieldConfig {
    let links = (0..geometry.num_links())
        .map(|l| {
            let e = OrientedEdge::from_link(l, false);
            (gauge[geometry.u(e)] * cfg.links[l]).mul_adj(&gauge[geometry.v(e)])
        })
        .collect();
    let sites = cfg.sites.iter().zip(gauge).map(|(p, g)| *g * *p).collect();
    FieldConfig { links, sites }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basis_is_orthonormal() {
        for family in [Family::SO, Family::U, Family::SU] {
            for n in 2..=4 {
                let g = GroupSpec::new(family, n).unwrap();
                let b = g.lie_basis();
                assert_eq!(b.len(), g.dim_algebra());
                for (i, x) in b.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((x.inner(y) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn haar_elements_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for family in [Family::SO, Family::U, Family::SU] {
            let g = GroupSpec::new(family, 3).unwrap();
            for _ in 0..20 {
                assert!(g.membership_defect(&g.haar(&mut rng)) < 1e-12);
            }
        }
    }

    #[test]
    fn flat_sampler_quadratic_is_exact_gaussian() {
        let g = GroupSpec::new(Family::SO, 2).unwrap();
        let h = HiggsSpec::new(&g, Target::Flat { a: vec![-1.5] }).unwrap();
        let s = FlatSiteSampler::new(&h).unwrap();
        assert!((s.envelope_scale() - 1.5).abs() < 1e-12);
    }
}

//! Wilson loop and line observables and batch-means estimates.

use crate::error::{Error, Result};
use crate::groups::{gauge_transform, FieldConfig, ModelParams};
use crate::linalg::{CVec, Mat, C64};
use crate::strings::LatticeString;
use serde::Serialize;
use std::collections::HashMap;

/// `W_ℓ`: trace of the holonomy for loops, `Φ_u^* Q_ℓ Φ_v` for lines; `N` for the null-loop.
pub fn eval_string(cfg: &FieldConfig, n: usize, l: &LatticeString) -> C64 {
    match l {
        LatticeString::Loop(lp) => {
            let w = lp.edges();
            if w.is_empty() {
                return C64::new(n as f64, 0.0);
            }
            let mut m = cfg.q(w[0]);
            for &e in &w[1..] {
                m = if e.is_positive() {
                    m * cfg.links[e.link()]
                } else {
                    m.mul_adj(&cfg.links[e.link()])
                };
            }
            m.trace()
        }
        LatticeString::Line(ln) => {
            let mut row: CVec = cfg.phi(ln.start()).conj();
            for &e in ln.edges() {
                let q: &Mat = &cfg.links[e.link()];
                row = if e.is_positive() {
                    CVec::row_mul(&row, q)
                } else {
                    CVec::row_mul_adj(&row, q)
                };
            }
            row.bilinear(cfg.phi(ln.end()))
        }
    }
}

/// `W_s = Π W_ℓ`; an empty collection gives 1 and null-loops give `N`.
pub fn eval_collection(cfg: &FieldConfig, n: usize, s: &[LatticeString]) -> C64 {
    s.iter().map(|l| eval_string(cfg, n, l)).product()
}

/// Distinct strings shared by many collections, evaluated once per configuration.
#[derive(Clone, Debug, Default)]
pub struct StringTable {
    strings: Vec<LatticeString>,
    index: HashMap<LatticeString, usize>,
}

impl StringTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, s: &LatticeString) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        self.strings.push(s.clone());
        self.index.insert(s.clone(), self.strings.len() - 1);
        self.strings.len() - 1
    }

    pub fn intern_all(&mut self, s: &[LatticeString]) -> Vec<usize> {
        s.iter().map(|l| self.intern(l)).collect()
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[LatticeString] {
        &self.strings
    }

    pub fn evaluate(&self, cfg: &FieldConfig, n: usize, out: &mut Vec<C64>) {
        out.clear();
        out.extend(self.strings.iter().map(|l| eval_string(cfg, n, l)));
    }
}

/// Mean with componentwise standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean_re: f64,
    pub mean_im: f64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub n: usize,
    pub batches: usize,
}

fn z_of(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY * mean.signum()
    }
}

impl Estimate {
    pub fn mean(&self) -> C64 {
        C64::new(self.mean_re, self.mean_im)
    }

    /// Distance of the mean from zero in standard errors, real and imaginary parts.
    pub fn z(&self) -> (f64, f64) {
        (
            z_of(self.mean_re, self.stderr_re),
            z_of(self.mean_im, self.stderr_im),
        )
    }

    /// `max(|z_re|, |z_im|)`.
    pub fn max_abs_z(&self) -> f64 {
        let (a, b) = self.z();
        a.abs().max(b.abs())
    }
}

/// Streaming batch means with `floor(√n)` near-equal batches for a known sample count `n`.
///
/// Samples may be pushed out of order by global index, so disjoint index ranges can be
/// accumulated separately and merged.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    total: usize,
    batches: usize,
    seen: usize,
    sums: Vec<C64>,
    counts: Vec<usize>,
}

impl BatchMeans {
    pub fn new(total: usize) -> Self {
        let batches = ((total as f64).sqrt().floor() as usize).max(1);
        BatchMeans {
            total,
            batches,
            seen: 0,
            sums: vec![C64::new(0.0, 0.0); batches],
            counts: vec![0; batches],
        }
    }

    fn start(&self, k: usize) -> usize {
        k * self.total / self.batches
    }

    fn batch_of(&self, i: usize) -> usize {
        let mut k = (i * self.batches / self.total.max(1)).min(self.batches - 1);
        while k > 0 && self.start(k) > i {
            k -= 1;
        }
        while k + 1 < self.batches && self.start(k + 1) <= i {
            k += 1;
        }
        k
    }

    /// Push the next sample in stream order.
    #[inline]
    pub fn push(&mut self, z: C64) {
        self.push_at(self.seen, z);
    }

    /// Push the sample with global index `i`.
    #[inline]
    pub fn push_at(&mut self, i: usize, z: C64) {
        let k = self.batch_of(i);
        self.sums[k] += z;
        self.counts[k] += 1;
        self.seen += 1;
    }

    pub fn count(&self) -> usize {
        self.seen
    }

    /// Add the samples of another accumulator over the same total.
    pub fn merge(&mut self, other: &BatchMeans) {
        for k in 0..self.batches {
            self.sums[k] += other.sums[k];
            self.counts[k] += other.counts[k];
        }
        self.seen += other.seen;
    }

    pub fn estimate(&self) -> Estimate {
        let used: Vec<usize> = (0..self.batches).filter(|&k| self.counts[k] > 0).collect();
        let n: usize = self.counts.iter().sum();
        let total: C64 = self.sums.iter().sum();
        let mean = if n > 0 {
            total / n as f64
        } else {
            C64::new(0.0, 0.0)
        };
        let nb = used.len();
        let (mut vr, mut vi) = (0.0, 0.0);
        for &k in &used {
            let m = self.sums[k] / self.counts[k] as f64;
            vr += (m.re - mean.re).powi(2);
            vi += (m.im - mean.im).powi(2);
        }
        let denom = if nb > 1 {
            (nb * (nb - 1)) as f64
        } else {
            f64::INFINITY
        };
        Estimate {
            mean_re: mean.re,
            mean_im: mean.im,
            stderr_re: (vr / denom).sqrt(),
            stderr_im: (vi / denom).sqrt(),
            n,
            batches: nb,
        }
    }
}

/// Batch-means estimate of `φ(s) = E W_s` from stored samples.
pub fn estimate_phi(samples: &[FieldConfig], n: usize, s: &[LatticeString]) -> Result<Estimate> {
    if samples.len() < 64 {
        return Err(Error::Usage(format!(
            "at least 64 samples are needed, got {}",
            samples.len()
        )));
    }
    let mut b = BatchMeans::new(samples.len());
    for cfg in samples {
        b.push(eval_collection(cfg, n, s));
    }
    Ok(b.estimate())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeCheck {
    pub before: C64Pair,
    pub after: C64Pair,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct C64Pair {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Pair {
    fn from(z: C64) -> Self {
        C64Pair { re: z.re, im: z.im }
    }
}

/// Compare `W_s` before and after a gauge transformation.
pub fn gauge_invariance_check(
    params: &ModelParams,
    cfg: &FieldConfig,
    s: &[LatticeString],
    gauge: &[Mat],
) -> GaugeCheck {
    let n = params.n();
    let before = eval_collection(cfg, n, s);
    let after = eval_collection(&gauge_transform(&params.geometry, cfg, gauge), n, s);
    let difference = (before - after).norm();
    GaugeCheck {
        before: before.into(),
        after: after.into(),
        difference,
        pass: difference < 1e-9,
    }
}

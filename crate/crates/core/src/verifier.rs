//! Loop equations at an edge or a site, and their Monte Carlo verification.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, OrientedEdge, Vertex};
use crate::groups::{FieldConfig, ModelParams};
use crate::linalg::C64;
use crate::observables::{eval_collection, BatchMeans, Estimate, StringTable};
use crate::sampler::{iid_stream, rhat, run_chains, ChainSummary, SamplerPlan, Support};
use crate::stringops::{
    edge_counts, edge_operations, site_count, site_operations, Anchor, CoefficientClass,
    EdgeCounts, OpKind, OperationEntry, Sign, SiteTarget,
};
use crate::strings::{
    parse_collections, parse_edge_at, render_collection, render_edge, strip_comment, Cursor,
    LatticeString, NamedCollection,
};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

/// Values of the coefficient classes for a model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientTable {
    rows: BTreeMap<CoefficientClass, f64>,
}

impl CoefficientTable {
    pub fn from_params(params: &ModelParams) -> Self {
        use CoefficientClass as C;
        let g = &params.group;
        let q = g.q() as f64;
        let mut rows = BTreeMap::new();
        rows.insert(C::Beta, params.beta);
        rows.insert(C::Kappa, params.kappa);
        rows.insert(C::TwoLambda, 2.0 * g.lambda());
        rows.insert(C::TwoMu, 2.0 * g.mu());
        rows.insert(C::BetaNu, params.beta * g.nu());
        rows.insert(C::KappaNu, params.kappa * g.nu());
        rows.insert(C::TwoQ, 2.0 * q);
        rows.insert(C::TwoTwoMinusQ, 2.0 * (2.0 - q));
        rows.insert(
            C::MinusKappaSphere,
            0.0 - params.kappa * params.higgs.indicator(),
        );
        for (j, c) in params.higgs.grad_coefficients().into_iter().enumerate() {
            rows.insert(C::Potential(2 * j), c);
        }
        CoefficientTable { rows }
    }

    /// Row value; classes without a row are zero.
    pub fn get(&self, class: CoefficientClass) -> f64 {
        self.rows.get(&class).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, class: CoefficientClass, value: f64) {
        self.rows.insert(class, value);
    }

    pub fn rows(&self) -> impl Iterator<Item = (CoefficientClass, f64)> + '_ {
        self.rows.iter().map(|(&c, &v)| (c, v))
    }

    /// Copy with one row multiplied by `factor`.
    pub fn perturbed(&self, class: CoefficientClass, factor: f64) -> Self {
        let mut t = self.clone();
        t.set(class, self.get(class) * factor);
        t
    }
}

/// An equation: the anchored collection, its operations and the left-hand multiplicity data.
#[derive(Clone, Debug)]
pub struct Equation {
    pub anchor: Anchor,
    pub strings: Vec<LatticeString>,
    pub entries: Vec<OperationEntry>,
    /// `r` and `t` at the edge; `None` for site equations.
    pub counts: Option<EdgeCounts>,
    /// `r_x` for site equations.
    pub r_x: usize,
}

impl Equation {
    pub fn edge(params: &ModelParams, s: &[LatticeString], e: OrientedEdge) -> Result<Self> {
        let entries = edge_operations(&params.geometry, s, e)?;
        Ok(Equation {
            anchor: Anchor::Edge(e),
            strings: s.to_vec(),
            entries,
            counts: Some(edge_counts(s, e)),
            r_x: 0,
        })
    }

    pub fn site(params: &ModelParams, s: &[LatticeString], x: Vertex) -> Result<Self> {
        let target = SiteTarget {
            sphere: params.higgs.is_sphere(),
            max_null: params.higgs.max_null(),
        };
        let entries = site_operations(&params.geometry, s, x, target)?;
        Ok(Equation {
            anchor: Anchor::Site(x),
            strings: s.to_vec(),
            entries,
            counts: None,
            r_x: site_count(s, x),
        })
    }

    /// The multiplier `C` of `φ(s)` on the left.
    pub fn lhs_coefficient(&self, params: &ModelParams, table: &CoefficientTable) -> f64 {
        match &self.counts {
            Some(c) => {
                let r = c.r as f64;
                let t = c.t as f64;
                -2.0 * r * params.group.c_g() + 2.0 * params.group.nu() * (r - t * t)
            }
            None => {
                let r = self.r_x as f64;
                if params.higgs.is_sphere() {
                    let qn = params.higgs.real_dim() as f64;
                    (qn - 2.0) * r + r * r
                } else {
                    -r * table.get(CoefficientClass::Potential(0))
                }
            }
        }
    }

    /// Signed coefficient of every entry, `∓ weight · row`.
    pub fn entry_coefficients(&self, table: &CoefficientTable) -> Vec<f64> {
        self.entries
            .iter()
            .map(|en| en.sign.factor() * en.weight * table.get(en.coefficient_class()))
            .collect()
    }

    /// `Σ coef · W(result) − C · W(s)` at one configuration.
    pub fn residual(
        &self,
        params: &ModelParams,
        table: &CoefficientTable,
        cfg: &FieldConfig,
    ) -> C64 {
        let n = params.n();
        let rhs: C64 = self
            .entry_coefficients(table)
            .iter()
            .zip(&self.entries)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, en)| eval_collection(cfg, n, &en.result) * *c)
            .sum();
        rhs - eval_collection(cfg, n, &self.strings) * self.lhs_coefficient(params, table)
    }

    pub fn render_anchor(&self, g: &LatticeGeometry) -> String {
        match self.anchor {
            Anchor::Edge(e) => format!("edge {}", render_edge(g, e)),
            Anchor::Site(x) => format!("site {}", render_vertex(g, x)),
        }
    }
}

fn render_vertex(g: &LatticeGeometry, x: Vertex) -> String {
    let c: Vec<String> = g.coords(x).iter().map(|c| c.to_string()).collect();
    format!("({})", c.join(","))
}

/// A named equation to verify.
#[derive(Clone, Debug)]
pub struct Job {
    pub name: String,
    pub equation: Equation,
}

/// Group of entries reported together: one kind and one sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct SlotKey {
    kind: OpKind,
    sign: Sign,
}

struct CompiledTerm {
    slot: usize,
    factor: f64,
    ids: Vec<u32>,
}

struct Compiled {
    base: Vec<u32>,
    slots: Vec<SlotKey>,
    /// `[variant][slot]` row values, already including the sign.
    slot_coef: Vec<Vec<f64>>,
    lhs: Vec<f64>,
    terms: Vec<CompiledTerm>,
}

/// Many equations over shared string evaluations, with optional perturbed coefficient tables.
pub struct Verifier {
    params: ModelParams,
    jobs: Vec<Job>,
    table: StringTable,
    compiled: Vec<Compiled>,
    variants: Vec<CoefficientTable>,
}

/// Per-stream accumulator for a [`Verifier`].
#[derive(Clone)]
pub struct Accumulator {
    values: Vec<C64>,
    slot_sums: Vec<C64>,
    w: Vec<BatchMeans>,
    rhs: Vec<BatchMeans>,
    slots: Vec<Vec<BatchMeans>>,
    /// `[equation][variant]` differences.
    diff: Vec<Vec<BatchMeans>>,
}

impl Verifier {
    /// `variants[0]` should be the model's own table; an empty list uses it alone.
    pub fn new(params: &ModelParams, jobs: Vec<Job>, mut variants: Vec<CoefficientTable>) -> Self {
        if variants.is_empty() {
            variants.push(CoefficientTable::from_params(params));
        }
        let mut table = StringTable::new();
        let mut compiled = Vec::with_capacity(jobs.len());
        for job in &jobs {
            let eq = &job.equation;
            let base = table
                .intern_all(&eq.strings)
                .into_iter()
                .map(|i| i as u32)
                .collect();
            let mut slots: Vec<SlotKey> = Vec::new();
            let mut merged: HashMap<(usize, Vec<u32>), f64> = HashMap::new();
            let mut order: Vec<(usize, Vec<u32>)> = Vec::new();
            for en in &eq.entries {
                let class = en.coefficient_class();
                if variants.iter().all(|t| t.get(class) == 0.0) {
                    continue;
                }
                let key = SlotKey {
                    kind: en.kind,
                    sign: en.sign,
                };
                let slot = match slots.iter().position(|k| *k == key) {
                    Some(i) => i,
                    None => {
                        slots.push(key);
                        slots.len() - 1
                    }
                };
                let mut ids: Vec<u32> = table
                    .intern_all(&en.result)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect();
                ids.sort_unstable();
                let k = (slot, ids);
                match merged.get_mut(&k) {
                    Some(f) => *f += en.weight,
                    None => {
                        merged.insert(k.clone(), en.weight);
                        order.push(k);
                    }
                }
            }
            let terms = order
                .into_iter()
                .map(|k| {
                    let factor = merged[&k];
                    CompiledTerm {
                        slot: k.0,
                        factor,
                        ids: k.1,
                    }
                })
                .collect();
            let slot_coef = variants
                .iter()
                .map(|t| {
                    slots
                        .iter()
                        .map(|k| k.sign.factor() * t.get(k.kind.coefficient_class()))
                        .collect()
                })
                .collect();
            let lhs = variants
                .iter()
                .map(|t| eq.lhs_coefficient(params, t))
                .collect();
            compiled.push(Compiled {
                base,
                slots,
                slot_coef,
                lhs,
                terms,
            });
        }
        Verifier {
            params: params.clone(),
            jobs,
            table,
            compiled,
            variants,
        }
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn variants(&self) -> &[CoefficientTable] {
        &self.variants
    }

    /// Number of distinct strings evaluated per sample.
    pub fn distinct_strings(&self) -> usize {
        self.table.len()
    }

    /// Links and sites read by any equation.
    pub fn support(&self) -> Support {
        Support::from_strings(self.table.strings())
    }

    pub fn accumulator(&self, total: usize) -> Accumulator {
        let ne = self.compiled.len();
        let bm = || BatchMeans::new(total);
        Accumulator {
            values: Vec::with_capacity(self.table.len()),
            slot_sums: Vec::new(),
            w: (0..ne).map(|_| bm()).collect(),
            rhs: (0..ne).map(|_| bm()).collect(),
            slots: self
                .compiled
                .iter()
                .map(|c| c.slots.iter().map(|_| bm()).collect())
                .collect(),
            diff: (0..ne)
                .map(|_| self.variants.iter().map(|_| bm()).collect())
                .collect(),
        }
    }

    /// Add the sample with global index `i`.
    pub fn observe(&self, acc: &mut Accumulator, i: usize, cfg: &FieldConfig) {
        self.table.evaluate(cfg, self.params.n(), &mut acc.values);
        let vals = &acc.values;
        let prod = |ids: &[u32]| {
            ids.iter()
                .fold(C64::new(1.0, 0.0), |a, &k| a * vals[k as usize])
        };
        for (q, c) in self.compiled.iter().enumerate() {
            let w = prod(&c.base);
            acc.slot_sums.clear();
            acc.slot_sums.resize(c.slots.len(), C64::new(0.0, 0.0));
            for t in &c.terms {
                acc.slot_sums[t.slot] += prod(&t.ids) * t.factor;
            }
            acc.w[q].push_at(i, w);
            let mut rhs = C64::new(0.0, 0.0);
            for (k, s) in acc.slot_sums.iter().enumerate() {
                let v = *s * c.slot_coef[0][k];
                acc.slots[q][k].push_at(i, v);
                rhs += v;
            }
            acc.rhs[q].push_at(i, rhs);
            for (v, coef) in c.slot_coef.iter().enumerate() {
                let r: C64 = acc.slot_sums.iter().zip(coef).map(|(s, c)| *s * *c).sum();
                acc.diff[q][v].push_at(i, r - w * c.lhs[v]);
            }
        }
    }

    pub fn merge(&self, into: &mut Accumulator, other: &Accumulator) {
        let pairs = into
            .w
            .iter_mut()
            .zip(&other.w)
            .chain(into.rhs.iter_mut().zip(&other.rhs));
        for (a, b) in pairs {
            a.merge(b);
        }
        for (a, b) in into
            .slots
            .iter_mut()
            .flatten()
            .zip(other.slots.iter().flatten())
        {
            a.merge(b);
        }
        for (a, b) in into
            .diff
            .iter_mut()
            .flatten()
            .zip(other.diff.iter().flatten())
        {
            a.merge(b);
        }
    }

    pub fn reports(&self, acc: &Accumulator, z_threshold: f64) -> Vec<EquationReport> {
        let g = &self.params.geometry;
        self.jobs
            .iter()
            .zip(&self.compiled)
            .enumerate()
            .map(|(q, (job, c))| {
                let w = acc.w[q].estimate();
                let lhs_c = c.lhs[0];
                let lhs = Estimate {
                    mean_re: w.mean_re * lhs_c,
                    mean_im: w.mean_im * lhs_c,
                    stderr_re: w.stderr_re * lhs_c.abs(),
                    stderr_im: w.stderr_im * lhs_c.abs(),
                    ..w
                };
                let rhs = acc.rhs[q].estimate();
                let difference = acc.diff[q][0].estimate();
                let exact = is_exact_zero(&difference, lhs.mean().norm().max(rhs.mean().norm()));
                let (z_re, z_im) = if exact { (0.0, 0.0) } else { difference.z() };
                let terms = c
                    .slots
                    .iter()
                    .zip(&acc.slots[q])
                    .zip(&c.slot_coef[0])
                    .map(|((k, b), coef)| TermReport {
                        kind: k.kind.name(),
                        sign: k.sign,
                        coefficient: *coef,
                        count: job
                            .equation
                            .entries
                            .iter()
                            .filter(|e| e.kind == k.kind && e.sign == k.sign)
                            .count(),
                        contribution: b.estimate(),
                    })
                    .collect();
                let variant_z = acc.diff[q][1..]
                    .iter()
                    .map(|b| {
                        let d = b.estimate();
                        if is_exact_zero(&d, lhs.mean().norm().max(rhs.mean().norm())) {
                            0.0
                        } else {
                            d.max_abs_z()
                        }
                    })
                    .collect();
                EquationReport {
                    name: job.name.clone(),
                    anchor: job.equation.render_anchor(g),
                    strings: render_collection(g, &job.equation.strings),
                    lhs_coefficient: lhs_c,
                    phi: w,
                    lhs,
                    rhs,
                    difference,
                    exact,
                    z_re,
                    z_im,
                    pass: z_re.abs() < z_threshold && z_im.abs() < z_threshold,
                    terms,
                    variant_z,
                }
            })
            .collect()
    }
}

/// A difference whose mean and spread are both at rounding level relative to `scale`.
fn is_exact_zero(d: &Estimate, scale: f64) -> bool {
    let tol = 1e-11 * scale.max(1.0);
    d.mean().norm() < tol && d.stderr_re < tol && d.stderr_im < tol
}

#[derive(Clone, Debug, Serialize)]
pub struct TermReport {
    pub kind: String,
    pub sign: Sign,
    pub coefficient: f64,
    pub count: usize,
    /// Mean of `coefficient · Σ W(result)` over the group.
    pub contribution: Estimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationReport {
    pub name: String,
    pub anchor: String,
    pub strings: String,
    pub lhs_coefficient: f64,
    pub phi: Estimate,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub difference: Estimate,
    /// The difference vanishes to rounding on every sample.
    pub exact: bool,
    pub z_re: f64,
    pub z_im: f64,
    pub pass: bool,
    pub terms: Vec<TermReport>,
    /// `max |z|` of the difference under each perturbed table.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variant_z: Vec<f64>,
}

/// Where samples come from.
#[derive(Clone, Debug)]
pub enum SampleSource {
    /// Exact product measure at `β = κ = 0`.
    Iid {
        samples: usize,
    },
    Mcmc(SamplerPlan),
    /// Previously drawn samples, in order.
    Stored(Vec<FieldConfig>),
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainReport {
    pub chain: usize,
    pub sigma_edge: f64,
    pub sigma_site: f64,
    pub edge_acceptance: f64,
    pub site_acceptance: f64,
    pub retained: usize,
}

impl From<&ChainSummary> for ChainReport {
    fn from(s: &ChainSummary) -> Self {
        ChainReport {
            chain: s.chain,
            sigma_edge: s.sigma_edge,
            sigma_site: s.sigma_site,
            edge_acceptance: s.edge_acceptance,
            site_acceptance: s.site_acceptance,
            retained: s.retained,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VariantReport {
    pub class: String,
    pub factor: f64,
    /// Largest `|z|` over all equations.
    pub max_abs_z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchReport {
    pub sampler: String,
    pub seed: u64,
    pub samples: usize,
    pub z_threshold: f64,
    pub equations: Vec<EquationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chains: Vec<ChainReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhat: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantReport>,
    pub pass: bool,
}

/// A perturbation of one coefficient row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mutation {
    pub class: CoefficientClass,
    pub factor: f64,
}

impl Mutation {
    /// Parse `class=factor`, e.g. `2lambda=1.1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (c, f) = s
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected class=factor, got '{s}'")))?;
        let class = parse_class(c.trim())?;
        let factor = f
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad factor '{f}'")))?;
        Ok(Mutation { class, factor })
    }
}

pub fn parse_class(s: &str) -> Result<CoefficientClass> {
    use CoefficientClass as C;
    let fixed = [
        C::Beta,
        C::Kappa,
        C::TwoLambda,
        C::TwoMu,
        C::BetaNu,
        C::KappaNu,
        C::TwoQ,
        C::TwoTwoMinusQ,
        C::MinusKappaSphere,
    ];
    if let Some(c) = fixed.into_iter().find(|c| c.to_string() == s) {
        return Ok(c);
    }
    s.strip_prefix('c')
        .and_then(|k| k.parse().ok())
        .map(C::Potential)
        .ok_or_else(|| Error::Usage(format!("unknown coefficient class '{s}'")))
}

#[derive(Clone, Debug)]
pub struct BatchOptions {
    pub seed: u64,
    pub z_threshold: f64,
    /// Replaces the model's own coefficient table.
    pub table: Option<CoefficientTable>,
    /// Extra tables evaluated on the same samples.
    pub mutations: Vec<Mutation>,
}

impl BatchOptions {
    pub fn new(seed: u64, z_threshold: f64) -> Self {
        BatchOptions {
            seed,
            z_threshold,
            table: None,
            mutations: Vec::new(),
        }
    }
}

/// Run all jobs on one sample stream.
pub fn run_batch(
    params: &ModelParams,
    jobs: Vec<Job>,
    source: &SampleSource,
    opts: &BatchOptions,
) -> Result<BatchReport> {
    let base = opts
        .table
        .clone()
        .unwrap_or_else(|| CoefficientTable::from_params(params));
    let mut variants = vec![base.clone()];
    variants.extend(
        opts.mutations
            .iter()
            .map(|m| base.perturbed(m.class, m.factor)),
    );
    let verifier = Verifier::new(params, jobs, variants);
    let seed = opts.seed;
    let min = |n: usize| {
        if n < 64 {
            Err(Error::Usage(format!(
                "at least 64 samples are needed, got {n}"
            )))
        } else {
            Ok(())
        }
    };
    let (acc, samples, chains, rh) = match source {
        SampleSource::Iid { samples } => {
            let n = *samples;
            min(n)?;
            let support = verifier.support();
            let accs = iid_stream(
                params,
                seed,
                n,
                &support,
                || verifier.accumulator(n),
                |a, i, c| verifier.observe(a, i, c),
            )?;
            (fold(&verifier, accs, n), n, Vec::new(), None)
        }
        SampleSource::Mcmc(plan) => {
            let n = plan.total_samples();
            min(n)?;
            let (accs, sums) = run_chains(
                params,
                plan,
                seed,
                || verifier.accumulator(n),
                |a, i, c| verifier.observe(a, i, c),
            )?;
            let series: Vec<Vec<f64>> = sums.iter().map(|s| s.plaquette.clone()).collect();
            let rh = rhat(&series);
            (
                fold(&verifier, accs, n),
                n,
                sums.iter().map(ChainReport::from).collect(),
                Some(rh),
            )
        }
        SampleSource::Stored(samples) => {
            let n = samples.len();
            min(n)?;
            let mut acc = verifier.accumulator(n);
            for (i, c) in samples.iter().enumerate() {
                verifier.observe(&mut acc, i, c);
            }
            (acc, n, Vec::new(), None)
        }
    };
    let equations = verifier.reports(&acc, opts.z_threshold);
    let variants = opts
        .mutations
        .iter()
        .enumerate()
        .map(|(v, m)| VariantReport {
            class: m.class.to_string(),
            factor: m.factor,
            max_abs_z: equations.iter().map(|e| e.variant_z[v]).fold(0.0, f64::max),
        })
        .collect();
    let pass = equations.iter().all(|e| e.pass);
    Ok(BatchReport {
        sampler: match source {
            SampleSource::Iid { .. } => "iid".into(),
            SampleSource::Mcmc(_) => "mcmc".into(),
            SampleSource::Stored(_) => "stored".into(),
        },
        seed,
        samples,
        z_threshold: opts.z_threshold,
        equations,
        chains,
        rhat: rh,
        variants,
        pass,
    })
}

fn fold(v: &Verifier, accs: Vec<Accumulator>, n: usize) -> Accumulator {
    let mut total = v.accumulator(n);
    for a in &accs {
        v.merge(&mut total, a);
    }
    total
}

/// Verify one edge equation.
pub fn verify_edge(
    params: &ModelParams,
    s: &[LatticeString],
    e: OrientedEdge,
    source: &SampleSource,
    seed: u64,
    z_threshold: f64,
) -> Result<EquationReport> {
    let job = Job {
        name: "edge".into(),
        equation: Equation::edge(params, s, e)?,
    };
    Ok(run_batch(
        params,
        vec![job],
        source,
        &BatchOptions::new(seed, z_threshold),
    )?
    .equations
    .remove(0))
}

/// Verify one site equation.
pub fn verify_site(
    params: &ModelParams,
    s: &[LatticeString],
    x: Vertex,
    source: &SampleSource,
    seed: u64,
    z_threshold: f64,
) -> Result<EquationReport> {
    let job = Job {
        name: "site".into(),
        equation: Equation::site(params, s, x)?,
    };
    Ok(run_batch(
        params,
        vec![job],
        source,
        &BatchOptions::new(seed, z_threshold),
    )?
    .equations
    .remove(0))
}

/// One catalog entry before it is bound to model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub collection: String,
    pub strings: Vec<LatticeString>,
    pub anchor: Anchor,
}

/// A parsed catalog: named string collections and the anchored entries that use them.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub collections: Vec<NamedCollection>,
    pub entries: Vec<CatalogEntry>,
}

impl Catalog {
    /// Parse `@name` string blocks plus `edge <collection> (c..) ±axis` and
    /// `site <collection> (c..)` lines.
    pub fn parse(text: &str, g: &LatticeGeometry) -> Result<Self> {
        let mut blocks = String::with_capacity(text.len());
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            let kw = line.split_whitespace().next().unwrap_or("");
            if kw == "edge" || kw == "site" {
                lines.push((i + 1, line.to_string()));
                blocks.push('\n');
            } else {
                blocks.push_str(raw);
                blocks.push('\n');
            }
        }
        let collections = parse_collections(&blocks, g)?;
        let mut entries = Vec::new();
        for (ln, line) in lines {
            let mut parts = line.splitn(3, char::is_whitespace);
            let kw = parts.next().unwrap_or("");
            let cname = parts.next().unwrap_or("").trim();
            let rest = parts.next().unwrap_or("").trim();
            let offset = line.len() - rest.len();
            let coll = collections
                .iter()
                .find(|c| c.name == cname)
                .ok_or_else(|| {
                    Error::parse(ln, kw.len() + 2, format!("unknown collection '{cname}'"))
                })?;
            let anchor = if kw == "edge" {
                Anchor::Edge(parse_edge_at(rest, g, ln).map_err(|e| shift(e, offset))?)
            } else {
                let mut c = Cursor::new(rest, ln);
                let x = c.vertex(g).map_err(|e| shift(e, offset))?;
                if !c.at_end() {
                    return Err(shift(c.err("unexpected trailing input"), offset));
                }
                Anchor::Site(x)
            };
            let name = format!("{cname} @ {kw} {rest}");
            entries.push(CatalogEntry {
                name,
                collection: cname.to_string(),
                strings: coll.strings.clone(),
                anchor,
            });
        }
        Ok(Catalog {
            collections,
            entries,
        })
    }

    pub fn collection(&self, name: &str) -> Result<&NamedCollection> {
        self.collections
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::Usage(format!("no collection named '{name}'")))
    }
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Parse {
            line,
            column,
            message,
        } => Error::Parse {
            line,
            column: column + by,
            message,
        },
        e => e,
    }
}

/// Bind catalog entries to a model.
pub fn catalog_jobs(params: &ModelParams, entries: &[CatalogEntry]) -> Result<Vec<Job>> {
    entries
        .iter()
        .map(|c| {
            let equation = match c.anchor {
                Anchor::Edge(e) => Equation::edge(params, &c.strings, e)?,
                Anchor::Site(x) => Equation::site(params, &c.strings, x)?,
            };
            Ok(Job {
                name: c.name.clone(),
                equation,
            })
        })
        .collect()
}

/// Plain-text report, one block per equation.
pub fn render_report(r: &BatchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "sampler {}  samples {}  seed {}  threshold {}",
        r.sampler, r.samples, r.seed, r.z_threshold
    );
    if r.equations.len() > 10 {
        let _ = writeln!(
            s,
            "note: {} equations, {} z-scores; the per-score threshold is not corrected for multiple comparisons",
            r.equations.len(),
            2 * r.equations.len()
        );
    }
    if let Some(rh) = r.rhat {
        let _ = writeln!(s, "R-hat (mean plaquette) {rh:.4}");
    }
    for c in &r.chains {
        let _ = writeln!(
            s,
            "  chain {}: sigma {:.3}/{:.3}  acceptance {:.3}/{:.3}",
            c.chain, c.sigma_edge, c.sigma_site, c.edge_acceptance, c.site_acceptance
        );
    }
    for e in &r.equations {
        let status = match (e.pass, e.exact) {
            (true, true) => "ok, exact",
            (true, false) => "ok",
            _ => "FAIL",
        };
        let _ = writeln!(s, "{} [{}]  {}", e.name, status, e.strings);
        let _ = writeln!(
            s,
            "  C = {:.6}  phi = {:.6} {:+.6}i",
            e.lhs_coefficient, e.phi.mean_re, e.phi.mean_im
        );
        let _ = writeln!(
            s,
            "  lhs {:.6}  rhs {:.6}  diff {:.3e} +- {:.1e}  z = ({:.2}, {:.2})",
            e.lhs.mean_re,
            e.rhs.mean_re,
            e.difference.mean_re,
            e.difference.stderr_re,
            e.z_re,
            e.z_im
        );
        for t in &e.terms {
            let _ = writeln!(
                s,
                "    {:<20} {:<8} x{:<3} coef {:+.4}  {:+.6} {:+.6}i",
                t.kind,
                format!("{:?}", t.sign).to_lowercase(),
                t.count,
                t.coefficient,
                t.contribution.mean_re,
                t.contribution.mean_im
            );
        }
    }
    for v in &r.variants {
        let _ = writeln!(
            s,
            "variant {} x{}: max |z| {:.2}",
            v.class, v.factor, v.max_abs_z
        );
    }
    let _ = writeln!(s, "{}", if r.pass { "PASS" } else { "FAIL" });
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Family, GroupSpec, Target};

    fn params() -> ModelParams {
        let g = LatticeGeometry::new(2, 4).unwrap();
        ModelParams::new(
            GroupSpec::new(Family::U, 2).unwrap(),
            Target::Sphere,
            g,
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn catalog_parses_entries() {
        let p = params();
        let text = "@plaq\nloop (0,0)+x+y-x-y\n\n@seg\nline (0,0)+x  # one edge\n\nedge plaq (0,0) +x\nsite seg (1,0)\n";
        let c = Catalog::parse(text, &p.geometry).unwrap().entries;
        assert_eq!(c.len(), 2);
        assert_eq!(
            c[1].anchor,
            Anchor::Site(p.geometry.vertex(&[1, 0]).unwrap())
        );
        let err = Catalog::parse("@a\nloop\n\nedge b (0,0) +x\n", &p.geometry).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn sphere_single_endpoint_lhs_is_c_m() {
        let p = params();
        let s = vec![crate::strings::parse_string("line (0,0)+x", &p.geometry).unwrap()];
        let eq = Equation::site(&p, &s, 0).unwrap();
        let t = CoefficientTable::from_params(&p);
        assert_eq!(eq.lhs_coefficient(&p, &t), p.higgs.c_m());
    }
}

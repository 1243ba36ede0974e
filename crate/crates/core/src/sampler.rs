//! Metropolis chains for the YMH measure and the exact product sampler at `β = κ = 0`.

use crate::error::{Error, Result};
use crate::geometry::{OrientedEdge, Vertex};
use crate::groups::{FieldConfig, FlatSiteSampler, ModelParams};
use crate::linalg::{CVec, Mat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerPlan {
    pub burn_in: usize,
    pub thinning: usize,
    pub chains: usize,
    pub samples_per_chain: usize,
    pub sigma_edge: f64,
    pub sigma_site: f64,
    /// Warm-up sweeps with adaptive step sizes, run before `burn_in`.
    pub tune_sweeps: usize,
    pub reproject_every: usize,
}

impl Default for SamplerPlan {
    fn default() -> Self {
        SamplerPlan {
            burn_in: 10_000,
            thinning: 10,
            chains: 8,
            samples_per_chain: 4_000,
            sigma_edge: 0.5,
            sigma_site: 0.5,
            tune_sweeps: 2_000,
            reproject_every: 100,
        }
    }
}

impl SamplerPlan {
    pub fn validate(&self) -> Result<()> {
        if self.thinning < 1 {
            return Err(Error::Parameter("thinning must be >= 1".into()));
        }
        if self.chains < 1 {
            return Err(Error::Parameter("at least one chain is needed".into()));
        }
        if !(self.sigma_edge > 0.0 && self.sigma_site > 0.0) {
            return Err(Error::Parameter("proposal scales must be positive".into()));
        }
        if self.reproject_every < 1 {
            return Err(Error::Parameter("reproject_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.chains * self.samples_per_chain
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Acceptance {
    pub proposed: u64,
    pub accepted: u64,
}

impl Acceptance {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, ok: bool) {
        self.proposed += 1;
        self.accepted += ok as u64;
    }
}

#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: FieldConfig,
    pub rng: ChaCha8Rng,
    pub sweeps: usize,
    pub edge: Acceptance,
    pub site: Acceptance,
}

impl ChainState {
    /// Random start (Haar links, target-distributed sites).
    pub fn new(params: &ModelParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = FieldConfig::random(params, &mut rng);
        ChainState {
            config,
            rng,
            sweeps: 0,
            edge: Acceptance::default(),
            site: Acceptance::default(),
        }
    }
}

/// One Metropolis step on the positive link `link`, proposal `exp(σξ) Q`.
pub fn metropolis_edge_update(
    params: &ModelParams,
    state: &mut ChainState,
    link: usize,
    sigma: f64,
) -> bool {
    let e = OrientedEdge::from_link(link, false);
    let m = params.edge_environment(&state.config, e);
    let q = state.config.links[link];
    let xi = params.group.random_algebra(&mut state.rng) * sigma;
    let q_new = xi.exp() * q;
    let ds = q_new.re_trace_mul(&m) - q.re_trace_mul(&m);
    let ok = ds >= 0.0 || state.rng.random::<f64>() < ds.exp();
    if ok {
        state.config.links[link] = q_new;
    }
    state.edge.record(ok);
    ok
}

/// One Metropolis step on the site `x`: geodesic move on spheres, Gaussian walk on flat targets.
pub fn metropolis_site_update(
    params: &ModelParams,
    state: &mut ChainState,
    x: Vertex,
    sigma: f64,
) -> bool {
    let h = params.site_field(&state.config, x);
    let phi = state.config.sites[x];
    let z = params.higgs.gaussian(&mut state.rng);
    let phi_new = if params.higgs.is_sphere() {
        let v = params.higgs.tangent(&phi, &z).scale_re(sigma);
        params.higgs.sphere_geodesic(&phi, &v)
    } else {
        phi + z.scale_re(sigma)
    };
    let ds = params.site_local_action(&h, &phi_new) - params.site_local_action(&h, &phi);
    let ok = ds >= 0.0 || state.rng.random::<f64>() < ds.exp();
    if ok {
        state.config.sites[x] = phi_new;
    }
    state.site.record(ok);
    ok
}

/// Systematic sweep over `E+` and then all sites.
pub fn sweep(
    params: &ModelParams,
    state: &mut ChainState,
    sigma_edge: f64,
    sigma_site: f64,
    reproject_every: usize,
) {
    for link in 0..params.geometry.num_links() {
        metropolis_edge_update(params, state, link, sigma_edge);
    }
    for x in 0..params.geometry.num_vertices() {
        metropolis_site_update(params, state, x, sigma_site);
    }
    state.sweeps += 1;
    if state.sweeps.is_multiple_of(reproject_every) {
        state.config.reproject(params);
    }
}

/// Adapt step sizes toward 30 to 60% acceptance; returns the frozen scales.
pub fn tune(params: &ModelParams, state: &mut ChainState, plan: &SamplerPlan) -> (f64, f64) {
    let (mut se, mut ss) = (plan.sigma_edge, plan.sigma_site);
    let window = 50;
    let mut done = 0;
    while done < plan.tune_sweeps {
        let (e0, s0) = (state.edge, state.site);
        let k = window.min(plan.tune_sweeps - done);
        for _ in 0..k {
            sweep(params, state, se, ss, plan.reproject_every);
        }
        done += k;
        let re = rate_since(&state.edge, &e0);
        let rs = rate_since(&state.site, &s0);
        se = adapt(se, re);
        ss = adapt(ss, rs);
    }
    state.edge = Acceptance::default();
    state.site = Acceptance::default();
    (se, ss)
}

fn rate_since(now: &Acceptance, before: &Acceptance) -> f64 {
    let p = now.proposed - before.proposed;
    if p == 0 {
        return 0.45;
    }
    (now.accepted - before.accepted) as f64 / p as f64
}

fn adapt(sigma: f64, rate: f64) -> f64 {
    if (0.35..=0.55).contains(&rate) {
        return sigma;
    }
    (sigma * (rate - 0.45).mul_add(2.0, 0.0).exp()).clamp(1e-3, 10.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub sigma_edge: f64,
    pub sigma_site: f64,
    pub edge_acceptance: f64,
    pub site_acceptance: f64,
    pub retained: usize,
    /// Mean `Re Tr Q_p` over `P+` at each retained sample.
    pub plaquette: Vec<f64>,
}

/// Seed of chain `c` derived from a run seed.
pub fn chain_seed(seed: u64, c: usize) -> u64 {
    seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(c as u64 + 1))
}

pub fn mean_plaquette(params: &ModelParams, cfg: &FieldConfig) -> f64 {
    let n = params.n();
    let ps = params.geometry.positive_plaquettes();
    if ps.is_empty() {
        return 0.0;
    }
    ps.iter()
        .map(|p| cfg.holonomy(n, &p.edges).trace().re)
        .sum::<f64>()
        / ps.len() as f64
}

/// Run one chain, calling `visit(global_index, config)` for each retained sample.
pub fn run_chain(
    params: &ModelParams,
    plan: &SamplerPlan,
    seed: u64,
    chain: usize,
    mut visit: impl FnMut(usize, &FieldConfig),
) -> ChainSummary {
    let mut state = ChainState::new(params, chain_seed(seed, chain));
    let (se, ss) = tune(params, &mut state, plan);
    for _ in 0..plan.burn_in {
        sweep(params, &mut state, se, ss, plan.reproject_every);
    }
    state.edge = Acceptance::default();
    state.site = Acceptance::default();
    let mut plaquette = Vec::with_capacity(plan.samples_per_chain);
    for k in 0..plan.samples_per_chain {
        for _ in 0..plan.thinning {
            sweep(params, &mut state, se, ss, plan.reproject_every);
        }
        plaquette.push(mean_plaquette(params, &state.config));
        visit(chain * plan.samples_per_chain + k, &state.config);
    }
    ChainSummary {
        chain,
        sigma_edge: se,
        sigma_site: ss,
        edge_acceptance: state.edge.rate(),
        site_acceptance: state.site.rate(),
        retained: plan.samples_per_chain,
        plaquette,
    }
}

/// Run all chains in parallel; each gets its own accumulator from `make`.
pub fn run_chains<A: Send>(
    params: &ModelParams,
    plan: &SamplerPlan,
    seed: u64,
    make: impl Fn() -> A + Sync,
    visit: impl Fn(&mut A, usize, &FieldConfig) + Sync,
) -> Result<(Vec<A>, Vec<ChainSummary>)> {
    plan.validate()?;
    let out: Vec<(A, ChainSummary)> = (0..plan.chains)
        .into_par_iter()
        .map(|c| {
            let mut acc = make();
            let summary = run_chain(params, plan, seed, c, |i, cfg| visit(&mut acc, i, cfg));
            (acc, summary)
        })
        .collect();
    Ok(out.into_iter().unzip())
}

/// Collect retained samples of all chains, in chain order.
pub fn collect_samples(
    params: &ModelParams,
    plan: &SamplerPlan,
    seed: u64,
) -> Result<(Vec<FieldConfig>, Vec<ChainSummary>)> {
    let (accs, sums) = run_chains(
        params,
        plan,
        seed,
        Vec::new,
        |acc: &mut Vec<FieldConfig>, _, cfg| acc.push(cfg.clone()),
    )?;
    Ok((accs.into_iter().flatten().collect(), sums))
}

/// Potential scale reduction factor over chains of equal length.
pub fn rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = chains
        .iter()
        .map(|c| c[..n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let b = n as f64 / (m - 1) as f64 * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64)
        .sum::<f64>()
        / m as f64;
    if w == 0.0 {
        return 1.0;
    }
    let var = (n - 1) as f64 / n as f64 * w + b / n as f64;
    (var / w).sqrt()
}

/// Links and sites that a set of observables reads.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Support {
    pub links: Vec<usize>,
    pub sites: Vec<Vertex>,
}

impl Support {
    pub fn all(params: &ModelParams) -> Self {
        Support {
            links: (0..params.geometry.num_links()).collect(),
            sites: (0..params.geometry.num_vertices()).collect(),
        }
    }

    pub fn from_strings<'a>(
        strings: impl IntoIterator<Item = &'a crate::strings::LatticeString>,
    ) -> Self {
        let mut links = Vec::new();
        let mut sites = Vec::new();
        for s in strings {
            links.extend(s.edges().iter().map(|e| e.link()));
            if let Some(l) = s.as_line() {
                sites.push(l.start());
                sites.push(l.end());
            }
        }
        links.sort_unstable();
        links.dedup();
        sites.sort_unstable();
        sites.dedup();
        Support { links, sites }
    }
}

/// Exact sampler for `β = κ = 0`: Haar links and independent sites.
#[derive(Clone, Debug)]
pub struct ProductSampler {
    params: ModelParams,
    flat: Option<FlatSiteSampler>,
}

impl ProductSampler {
    pub fn new(params: &ModelParams) -> Result<Self> {
        if params.beta != 0.0 || params.kappa != 0.0 {
            return Err(Error::Usage(format!(
                "the product sampler needs beta = kappa = 0 (got beta = {}, kappa = {})",
                params.beta, params.kappa
            )));
        }
        let flat = if params.higgs.is_sphere() {
            None
        } else {
            Some(FlatSiteSampler::new(&params.higgs)?)
        };
        Ok(ProductSampler {
            params: params.clone(),
            flat,
        })
    }

    /// Resample the supported variables of `cfg`.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        support: &Support,
        cfg: &mut FieldConfig,
    ) -> Result<()> {
        for &l in &support.links {
            cfg.links[l] = self.params.group.haar(rng);
        }
        for &x in &support.sites {
            cfg.sites[x] = match &self.flat {
                None => self.params.higgs.sample_sphere(rng),
                Some(f) => f.sample(rng)?,
            };
        }
        Ok(())
    }
}

/// `n` exact samples at `β = κ = 0`.
pub fn iid_product_sample(params: &ModelParams, seed: u64, n: usize) -> Result<Vec<FieldConfig>> {
    let sampler = ProductSampler::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = Support::all(params);
    let mut cfg = FieldConfig::identity(params);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        sampler.sample_into(&mut rng, &support, &mut cfg)?;
        out.push(cfg.clone());
    }
    Ok(out)
}

/// Stream `n` exact samples in fixed chunks with per-chunk seeds; chunks run in parallel and
/// their accumulators come back in chunk order, so results do not depend on the thread count.
pub fn iid_stream<A: Send>(
    params: &ModelParams,
    seed: u64,
    n: usize,
    support: &Support,
    make: impl Fn() -> A + Sync,
    visit: impl Fn(&mut A, usize, &FieldConfig) + Sync,
) -> Result<Vec<A>> {
    let sampler = ProductSampler::new(params)?;
    let chunk = 1usize << 14;
    let chunks = n.div_ceil(chunk);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(chain_seed(seed, c));
            let mut cfg = FieldConfig::identity(params);
            let mut acc = make();
            for i in c * chunk..((c + 1) * chunk).min(n) {
                sampler.sample_into(&mut rng, support, &mut cfg)?;
                visit(&mut acc, i, &cfg);
            }
            Ok(acc)
        })
        .collect()
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"YMHSNAP1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub params_hash: String,
    pub d: usize,
    pub l: usize,
    pub n: usize,
    pub group: String,
    pub scalar: String,
    pub samples: usize,
}

/// Binary snapshot: magic, header length, JSON header, then little-endian `f64` pairs.
pub fn write_snapshot(
    w: &mut impl Write,
    header: &SnapshotHeader,
    samples: &[FieldConfig],
) -> Result<()> {
    let h = serde_json::to_vec(header).map_err(|e| Error::Snapshot(e.to_string()))?;
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    for cfg in samples {
        for m in &cfg.links {
            for i in 0..header.n {
                for j in 0..header.n {
                    w.write_all(&m[(i, j)].re.to_le_bytes())?;
                    w.write_all(&m[(i, j)].im.to_le_bytes())?;
                }
            }
        }
        for p in &cfg.sites {
            for i in 0..header.n {
                w.write_all(&p[i].re.to_le_bytes())?;
                w.write_all(&p[i].im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_snapshot(r: &mut impl Read) -> Result<(SnapshotHeader, Vec<FieldConfig>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot("not a snapshot file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut h = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut h)?;
    let header: SnapshotHeader =
        serde_json::from_slice(&h).map_err(|e| Error::Snapshot(e.to_string()))?;
    if header.version != 1 {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {}",
            header.version
        )));
    }
    let n = header.n;
    let nv = header.l.pow(header.d as u32);
    let mut read_c = || -> Result<C64> {
        let mut b = [0u8; 16];
        r.read_exact(&mut b)?;
        let re = f64::from_le_bytes(b[..8].try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(b[8..].try_into().expect("8 bytes"));
        Ok(C64::new(re, im))
    };
    let mut out = Vec::with_capacity(header.samples);
    for _ in 0..header.samples {
        let mut links = Vec::with_capacity(nv * header.d);
        for _ in 0..nv * header.d {
            let mut m = Mat::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = read_c()?;
                }
            }
            links.push(m);
        }
        let mut sites = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut p = CVec::zeros(n);
            for i in 0..n {
                p[i] = read_c()?;
            }
            sites.push(p);
        }
        out.push(FieldConfig { links, sites });
    }
    Ok((header, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticeGeometry;
    use crate::groups::{Family, GroupSpec, Target};

    fn params(beta: f64, kappa: f64) -> ModelParams {
        let g = LatticeGeometry::new(2, 3).unwrap();
        ModelParams::new(
            GroupSpec::new(Family::SU, 2).unwrap(),
            Target::Sphere,
            g,
            beta,
            kappa,
        )
        .unwrap()
    }

    #[test]
    fn free_edges_always_accept() {
        let p = params(0.0, 0.0);
        let mut st = ChainState::new(&p, 1);
        for l in 0..p.geometry.num_links() {
            assert!(metropolis_edge_update(&p, &mut st, l, 0.7));
        }
    }

    #[test]
    fn local_difference_matches_global() {
        let p = params(0.8, 0.6);
        let mut st = ChainState::new(&p, 2);
        for l in 0..p.geometry.num_links() {
            let e = OrientedEdge::from_link(l, false);
            let m = p.edge_environment(&st.config, e);
            let before = p.action(&st.config);
            let local_before = st.config.links[l].re_trace_mul(&m);
            let xi = p.group.random_algebra(&mut st.rng);
            st.config.links[l] = xi.exp() * st.config.links[l];
            let after = p.action(&st.config);
            let local_after = st.config.links[l].re_trace_mul(&m);
            assert!(((after - before) - (local_after - local_before)).abs() < 1e-10);
        }
    }

    #[test]
    fn product_sampler_rejects_couplings() {
        assert!(ProductSampler::new(&params(0.1, 0.0)).is_err());
    }

    #[test]
    fn rhat_of_identical_chains_is_about_one() {
        let c: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!((rhat(&[c.clone(), c]) - 1.0).abs() < 0.02);
    }
}

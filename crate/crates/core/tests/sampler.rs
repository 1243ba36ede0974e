//! Sampler checks against closed forms and numerical integration.

mod support;

use std::f64::consts::PI;
use support::{model, rng, strings};
use ymh_loops::groups::{Family, FieldConfig, Target};
use ymh_loops::linalg::{CVec, Mat, C64};
use ymh_loops::observables::{eval_collection, BatchMeans};
use ymh_loops::sampler::{
    iid_product_sample, metropolis_edge_update, read_snapshot, run_chains, write_snapshot,
    ChainState, SamplerPlan, SnapshotHeader,
};

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn angle(q: &Mat) -> f64 {
    q[(1, 0)].re.atan2(q[(0, 0)].re)
}

fn bin(theta: f64, bins: usize) -> usize {
    (((theta + PI) / (2.0 * PI) * bins as f64) as usize).min(bins - 1)
}

/// Two sites joined by two links (d = 1, L = 2), SO(2) ≅ U(1), sphere target, κ only.
/// With both Higgs values pinned, the conditional law of link 0 is `∝ exp(κ cos θ) dθ`.
#[test]
#[allow(clippy::needless_range_loop)]
fn edge_kernel_is_reversible_and_stationary() {
    let kappa = 1.3;
    let p = model(Family::SO, 2, Target::Sphere, 1, 2, 0.0, kappa);
    assert_eq!(p.geometry.num_links(), 2);
    let mut st = ChainState::new(&p, 5);
    let e1 = CVec::basis(2, 0);
    st.config.sites = vec![e1, e1];
    st.config.links[0] = Mat::identity(2);

    let steps = 400_000;
    let bins = 8;
    let fine = 16;
    let mut pairs = vec![vec![0u64; bins]; bins];
    let mut hist = vec![0u64; fine];
    let mut cos = BatchMeans::new(steps);
    for _ in 0..1000 {
        metropolis_edge_update(&p, &mut st, 0, 1.0);
    }
    for t in 0..steps {
        let before = angle(&st.config.links[0]);
        metropolis_edge_update(&p, &mut st, 0, 1.0);
        let after = angle(&st.config.links[0]);
        if t % 10 == 0 {
            pairs[bin(before, bins)][bin(after, bins)] += 1;
        }
        hist[bin(after, fine)] += 1;
        cos.push(C64::new(after.cos(), 0.0));
        assert!(st.config.links[0].unitarity_defect() < 1e-9);
    }

    // reversibility: consecutive states have a symmetric joint law
    for i in 0..bins {
        for j in i + 1..bins {
            let (a, b) = (pairs[i][j] as f64, pairs[j][i] as f64);
            assert!(
                (a - b).abs() <= 4.0 * (a + b).sqrt() + 2.0,
                "bins {i},{j}: {a} vs {b}"
            );
        }
    }

    // stationarity against numerical integration of exp(κ cos θ)
    let z = simpson(|t| (kappa * t.cos()).exp(), -PI, PI, 2000);
    for (k, &c) in hist.iter().enumerate() {
        let lo = -PI + 2.0 * PI * k as f64 / fine as f64;
        let want = simpson(
            |t| (kappa * t.cos()).exp(),
            lo,
            lo + 2.0 * PI / fine as f64,
            200,
        ) / z;
        let got = c as f64 / steps as f64;
        assert!((got - want).abs() < 0.01, "bin {k}: {got} vs {want}");
    }
    let want = simpson(|t| t.cos() * (kappa * t.cos()).exp(), -PI, PI, 2000) / z;
    let est = cos.estimate();
    assert!(
        (est.mean_re - want).abs() < 4.0 * est.stderr_re,
        "{} vs {want} ± {}",
        est.mean_re,
        est.stderr_re
    );
}

/// Full sweeps on the same toy with free Higgs values: the gauge-invariant line variable
/// `θ + φ_1 − φ_0` has the same law, so `E[Φ_0* Q Φ_1] = ∫cos e^{κ cos} / ∫e^{κ cos}`.
#[test]
fn full_chain_matches_integrated_line_expectation() {
    let kappa = 0.8;
    let p = model(Family::SO, 2, Target::Sphere, 1, 2, 0.0, kappa);
    let line = strings(&p.geometry, &["line (0)+x"]);
    let plan = SamplerPlan {
        burn_in: 500,
        thinning: 2,
        chains: 4,
        samples_per_chain: 10_000,
        tune_sweeps: 500,
        ..SamplerPlan::default()
    };
    let total = plan.total_samples();
    let (accs, _) = run_chains(
        &p,
        &plan,
        9,
        || BatchMeans::new(total),
        |b, i, cfg| b.push_at(i, eval_collection(cfg, 2, &line)),
    )
    .unwrap();
    let mut b = BatchMeans::new(total);
    for a in &accs {
        b.merge(a);
    }
    let est = b.estimate();
    let z = simpson(|t| (kappa * t.cos()).exp(), -PI, PI, 2000);
    let want = simpson(|t| t.cos() * (kappa * t.cos()).exp(), -PI, PI, 2000) / z;
    assert!(
        (est.mean_re - want).abs() < 4.0 * est.stderr_re,
        "{} vs {want} ± {}",
        est.mean_re,
        est.stderr_re
    );
    assert!(est.mean_im.abs() < 1e-12);
}

fn phi_norm_sq(cfg: &FieldConfig, x: usize) -> f64 {
    cfg.sites[x].norm_sqr()
}

/// `V(r) = -r/2` makes every real coordinate standard normal.
#[test]
fn quadratic_potential_gives_gaussian_sites() {
    for (family, n) in [(Family::SO, 3), (Family::U, 2), (Family::SU, 2)] {
        let p = model(family, n, Target::Flat { a: vec![-0.5] }, 2, 3, 0.0, 0.0);
        let k = p.higgs.real_dim() as f64;

        let samples = iid_product_sample(&p, 3, 20_000).unwrap();
        let mean = samples.iter().map(|c| phi_norm_sq(c, 0)).sum::<f64>() / samples.len() as f64;
        let se = (2.0 * k / samples.len() as f64).sqrt();
        assert!(
            (mean - k).abs() < 4.0 * se,
            "{family:?}{n} iid: {mean} vs {k}"
        );
        let var0 = samples
            .iter()
            .map(|c| c.sites[1][0].re.powi(2))
            .sum::<f64>()
            / samples.len() as f64;
        assert!(
            (var0 - 1.0).abs() < 4.0 * (2.0 / samples.len() as f64).sqrt(),
            "{family:?}{n}: {var0}"
        );

        let plan = SamplerPlan {
            burn_in: 200,
            thinning: 1,
            chains: 2,
            samples_per_chain: 20_000,
            tune_sweeps: 200,
            ..SamplerPlan::default()
        };
        let total = plan.total_samples();
        let (accs, sums) = run_chains(
            &p,
            &plan,
            4,
            || BatchMeans::new(total),
            |b, i, cfg| b.push_at(i, C64::new(phi_norm_sq(cfg, 0), 0.0)),
        )
        .unwrap();
        let mut b = BatchMeans::new(total);
        for a in &accs {
            b.merge(a);
        }
        let est = b.estimate();
        assert!(
            (est.mean_re - k).abs() < 3.0 * est.stderr_re,
            "{family:?}{n} mcmc: {} ± {}",
            est.mean_re,
            est.stderr_re
        );
        // no couplings: every link proposal is accepted
        assert!(sums.iter().all(|s| s.edge_acceptance == 1.0));
    }
}

#[test]
fn haar_moments() {
    let mut r = rng(8);
    for (family, n) in [
        (Family::SO, 2),
        (Family::SO, 3),
        (Family::U, 2),
        (Family::U, 3),
        (Family::SU, 2),
        (Family::SU, 3),
    ] {
        let p = model(family, n, Target::Sphere, 2, 2, 0.0, 0.0);
        let m = 20_000;
        let mut second = vec![0.0; n * n];
        let mut first = vec![C64::new(0.0, 0.0); n * n];
        for _ in 0..m {
            let q = p.group.haar(&mut r);
            assert!(q.unitarity_defect() < 1e-12);
            match family {
                Family::U => assert!((q.det().norm() - 1.0).abs() < 1e-12),
                _ => assert!(
                    (q.det() - C64::new(1.0, 0.0)).norm() < 1e-12,
                    "{family:?}{n} det {:?}",
                    q.det()
                ),
            }
            if family == Family::SO {
                assert!(q.is_real(1e-14));
            }
            for i in 0..n {
                for j in 0..n {
                    second[i * n + j] += q[(i, j)].norm_sqr();
                    first[i * n + j] += q[(i, j)];
                }
            }
        }
        let want = 1.0 / n as f64;
        // Var |Q_ij|^2 <= E|Q_ij|^4 <= 1
        let tol = 4.0 / (m as f64).sqrt();
        for (k, s) in second.iter().enumerate() {
            assert!(
                (s / m as f64 - want).abs() < tol,
                "{family:?}{n} entry {k}: {}",
                s / m as f64
            );
        }
        for (k, s) in first.iter().enumerate() {
            assert!((s / m as f64).norm() < tol, "{family:?}{n} mean entry {k}");
        }
    }
}

#[test]
fn chains_do_not_depend_on_thread_count() {
    let p = model(
        Family::SU,
        2,
        Target::Flat { a: vec![0.5, -0.5] },
        2,
        3,
        0.3,
        0.2,
    );
    let plan = SamplerPlan {
        burn_in: 20,
        thinning: 2,
        chains: 3,
        samples_per_chain: 40,
        tune_sweeps: 100,
        ..SamplerPlan::default()
    };
    let s = strings(&p.geometry, &["loop (0,0)+x+y-x-y", "line (0,0)+x"]);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            run_chains(
                &p,
                &plan,
                17,
                Vec::new,
                |v: &mut Vec<(usize, C64)>, i, cfg| v.push((i, eval_collection(cfg, 2, &s))),
            )
            .unwrap()
        })
    };
    let (a, sa) = run(1);
    let (b, sb) = run(3);
    assert_eq!(a, b);
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(x.plaquette, y.plaquette);
        assert_eq!(x.sigma_edge, y.sigma_edge);
    }
    let (c, _) = run_chains(
        &p,
        &plan,
        18,
        Vec::new,
        |v: &mut Vec<(usize, C64)>, i, cfg| v.push((i, eval_collection(cfg, 2, &s))),
    )
    .unwrap();
    assert_ne!(a, c);
    // global indices cover 0..total exactly once
    let mut idx: Vec<usize> = a.iter().flatten().map(|x| x.0).collect();
    idx.sort_unstable();
    assert_eq!(idx, (0..plan.total_samples()).collect::<Vec<_>>());
}

#[test]
fn snapshot_round_trip() {
    let p = model(Family::U, 2, Target::Sphere, 2, 2, 0.0, 0.0);
    let samples = iid_product_sample(&p, 1, 5).unwrap();
    let header = SnapshotHeader {
        version: 1,
        params_hash: "abc".into(),
        d: 2,
        l: 2,
        n: 2,
        group: "U(2)".into(),
        scalar: "sphere".into(),
        samples: samples.len(),
    };
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &header, &samples).unwrap();
    let (h, back) = read_snapshot(&mut buf.as_slice()).unwrap();
    assert_eq!(h, header);
    assert_eq!(back, samples);

    let mut bad = buf.clone();
    bad[0] ^= 1;
    assert!(read_snapshot(&mut bad.as_slice()).is_err());
    assert!(read_snapshot(&mut &buf[..buf.len() - 3]).is_err());
}

//! Batch verification: statistics, degenerate inputs and sensitivity to wrong coefficients.

mod support;

use support::{model, strings};
use ymh_loops::groups::{Family, Target};
use ymh_loops::linalg::C64;
use ymh_loops::sampler::iid_product_sample;
use ymh_loops::stringops::CoefficientClass;
use ymh_loops::strings::parse_edge;
use ymh_loops::verifier::{
    run_batch, verify_edge, verify_site, BatchOptions, Catalog, CoefficientTable, Equation, Job,
    Mutation, SampleSource,
};

fn plaquette_job(p: &ymh_loops::groups::ModelParams) -> Job {
    let s = strings(&p.geometry, &["loop (0,0)+x+y-x-y+x+y-x-y"]);
    let e = parse_edge("(0,0) +x", &p.geometry).unwrap();
    Job {
        name: "square".into(),
        equation: Equation::edge(p, &s, e).unwrap(),
    }
}

#[test]
fn empty_job_list_passes() {
    let p = model(Family::SU, 2, Target::Sphere, 2, 3, 0.0, 0.0);
    let r = run_batch(
        &p,
        Vec::new(),
        &SampleSource::Iid { samples: 100 },
        &BatchOptions::new(1, 4.0),
    )
    .unwrap();
    assert!(r.equations.is_empty());
    assert!(r.pass);
}

#[test]
fn too_few_samples_is_an_error() {
    let p = model(Family::SU, 2, Target::Sphere, 2, 3, 0.0, 0.0);
    assert!(run_batch(
        &p,
        vec![plaquette_job(&p)],
        &SampleSource::Iid { samples: 10 },
        &BatchOptions::new(1, 4.0)
    )
    .is_err());
}

#[test]
fn correct_table_passes_and_scaled_row_is_detected() {
    let p = model(Family::SO, 3, Target::Sphere, 2, 3, 0.0, 0.0);
    let src = SampleSource::Iid { samples: 100_000 };
    let mut opts = BatchOptions::new(3, 4.0);
    opts.mutations = vec![
        Mutation::parse("2lambda=1.1").unwrap(),
        Mutation::parse("beta=1.1").unwrap(),
    ];
    let r = run_batch(&p, vec![plaquette_job(&p)], &src, &opts).unwrap();
    assert!(r.pass, "{}", ymh_loops::verifier::render_report(&r));
    assert!(r.variants[0].max_abs_z > 10.0, "{:?}", r.variants);
    // β = 0 makes this row inert
    assert_eq!(
        r.variants[1].max_abs_z,
        r.equations[0].z_re.abs().max(r.equations[0].z_im.abs())
    );

    opts.mutations.clear();
    opts.table =
        Some(CoefficientTable::from_params(&p).perturbed(CoefficientClass::TwoLambda, 1.1));
    let r = run_batch(&p, vec![plaquette_job(&p)], &src, &opts).unwrap();
    assert!(!r.pass);
}

#[test]
fn stderr_scales_as_inverse_root_n() {
    let p = model(Family::U, 2, Target::Sphere, 2, 3, 0.0, 0.0);
    let s = strings(&p.geometry, &["line (0,0)+x+y"]);
    let x = ymh_loops::strings::parse_vertex("(0,0)", &p.geometry).unwrap();
    let a = verify_site(&p, &s, x, &SampleSource::Iid { samples: 40_000 }, 5, 4.0).unwrap();
    let b = verify_site(&p, &s, x, &SampleSource::Iid { samples: 160_000 }, 6, 4.0).unwrap();
    let ratio = b.difference.stderr_re / a.difference.stderr_re;
    assert!((ratio - 0.5).abs() < 0.1, "{ratio}");
    assert!(a.pass && b.pass);
}

#[test]
fn edge_outside_the_strings_is_exact() {
    let p = model(Family::SU, 3, Target::Sphere, 2, 3, 0.0, 0.0);
    let s = strings(&p.geometry, &["loop (0,0)+x+y-x-y"]);
    let e = parse_edge("(2,2) +x", &p.geometry).unwrap();
    let r = verify_edge(&p, &s, e, &SampleSource::Iid { samples: 1000 }, 1, 4.0).unwrap();
    assert!(r.exact && r.pass);
    assert_eq!((r.z_re, r.z_im), (0.0, 0.0));
    assert!(r.terms.is_empty() || r.terms.iter().all(|t| t.count == 0));
}

#[test]
fn stored_source_averages_pointwise_residuals() {
    let p = model(
        Family::U,
        2,
        Target::Flat { a: vec![0.5, -0.5] },
        2,
        3,
        0.0,
        0.0,
    );
    let s = strings(&p.geometry, &["line (0,0)+x+y-x-y"]);
    let eq = Equation::site(&p, &s, 0).unwrap();
    let samples = iid_product_sample(&p, 11, 500).unwrap();
    let table = CoefficientTable::from_params(&p);
    let direct: C64 = samples
        .iter()
        .map(|c| eq.residual(&p, &table, c))
        .sum::<C64>()
        / samples.len() as f64;
    let job = Job {
        name: "closed".into(),
        equation: eq,
    };
    let r = run_batch(
        &p,
        vec![job],
        &SampleSource::Stored(samples),
        &BatchOptions::new(0, 4.0),
    )
    .unwrap();
    let d = r.equations[0].difference.mean();
    assert!(
        (d - direct).norm() < 1e-10 * (1.0 + direct.norm()),
        "{d} vs {direct}"
    );
    assert_eq!(r.sampler, "stored");
}

#[test]
fn iid_results_do_not_depend_on_threads() {
    let p = model(Family::SU, 2, Target::Sphere, 2, 3, 0.0, 0.0);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let r = run_batch(
                &p,
                vec![plaquette_job(&p)],
                &SampleSource::Iid { samples: 40_000 },
                &BatchOptions::new(9, 4.0),
            )
            .unwrap();
            serde_json::to_string(&r).unwrap()
        })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn catalog_binds_entries() {
    let p = model(Family::SU, 2, Target::Sphere, 2, 4, 0.3, 0.2);
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/catalogs/mcmc.cat")).unwrap();
    let cat = Catalog::parse(&text, &p.geometry).unwrap();
    assert_eq!(cat.entries.len(), 6);
    let jobs = ymh_loops::verifier::catalog_jobs(&p, &cat.entries).unwrap();
    assert!(jobs.iter().all(|j| !j.equation.entries.is_empty()));
    assert!(Catalog::parse("@a\nloop (0,0)+x+y-x-y\n\nedge a (9,0) +x\n", &p.geometry).is_err());
}

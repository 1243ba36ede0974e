//! Invariants checked on generated inputs.

mod support;

use proptest::prelude::*;
use support::{model, rng};
use ymh_loops::groups::{Family, FieldConfig, GroupSpec, Target};
use ymh_loops::linalg::C64;
use ymh_loops::observables::{eval_string, BatchMeans};
use ymh_loops::stringops::edge_operations;
use ymh_loops::strings::{
    erase_backtracks, nonbacktracking_core, parse_string, render_string, EraseMode, LatticePath,
    StringKind,
};
use ymh_loops::{LatticeGeometry, OrientedEdge};

fn geo() -> LatticeGeometry {
    LatticeGeometry::new(2, 4).unwrap()
}

fn walk(g: &LatticeGeometry, start: usize, steps: &[(usize, bool)]) -> LatticePath {
    let mut x = start;
    let mut edges = Vec::new();
    for &(axis, fwd) in steps {
        let e = g.edge(x, axis, fwd);
        edges.push(e);
        x = g.v(e);
    }
    LatticePath::new(g, start, edges).unwrap()
}

fn steps(max: usize) -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0..2usize, any::<bool>()), 0..max)
}

/// A closed path: two plaquettes, each conjugated by a walk from `start`.
fn closed(
    g: &LatticeGeometry,
    start: usize,
    tail: &[(usize, bool)],
    orient: bool,
    extra: &[(usize, bool)],
) -> LatticePath {
    let t = walk(g, start, tail);
    let x = t.end(g);
    let (a, b) = if orient { (0, 1) } else { (1, 0) };
    let p = walk(g, x, &[(a, true), (b, true), (a, false), (b, false)]);
    let ex = walk(g, start, extra);
    let back = ex.inverse(g);
    t.concat(&p)
        .concat(&t.inverse(g))
        .concat(&ex)
        .concat(&walk(
            g,
            ex.end(g),
            &[(0, true), (1, true), (0, false), (1, false)],
        ))
        .concat(&back)
}

fn is_reduced(w: &[OrientedEdge]) -> bool {
    w.windows(2).all(|p| p[1] != p[0].inv())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn line_render_parse_round_trip(start in 0..16usize, st in steps(14)) {
        let g = geo();
        let s = nonbacktracking_core(&g, &walk(&g, start, &st), StringKind::Line).unwrap();
        let text = render_string(&g, &s);
        prop_assert_eq!(parse_string(&text, &g).unwrap(), s);
    }

    #[test]
    fn loop_render_parse_round_trip(start in 0..16usize, tail in steps(6), extra in steps(6), o in any::<bool>()) {
        let g = geo();
        let s = nonbacktracking_core(&g, &closed(&g, start, &tail, o, &extra), StringKind::Loop).unwrap();
        let text = render_string(&g, &s);
        prop_assert_eq!(parse_string(&text, &g).unwrap(), s);
    }

    #[test]
    fn erasure_is_idempotent_and_reduces(start in 0..16usize, st in steps(24)) {
        let g = geo();
        let p = walk(&g, start, &st);
        let once = erase_backtracks(&g, &p, EraseMode::InteriorOnly).unwrap();
        prop_assert!(is_reduced(&once.edges));
        prop_assert_eq!(once.start, p.start);
        prop_assert_eq!(once.end(&g), p.end(&g));
        let twice = erase_backtracks(&g, &once, EraseMode::InteriorOnly).unwrap();
        prop_assert_eq!(&twice, &once);
        // erasing the appended inverse walk gives the empty path
        let trivial = erase_backtracks(&g, &p.concat(&p.inverse(&g)), EraseMode::InteriorOnly).unwrap();
        prop_assert!(trivial.edges.is_empty());
    }

    #[test]
    fn edge_counts_are_consistent(start in 0..16usize, tail in steps(6), extra in steps(6), o in any::<bool>()) {
        let g = geo();
        let s = nonbacktracking_core(&g, &closed(&g, start, &tail, o, &extra), StringKind::Loop).unwrap();
        let mut total = 0;
        for link in 0..g.num_links() {
            let e = OrientedEdge::from_link(link, false);
            prop_assert!(s.t(e).unsigned_abs() as usize <= s.r(e));
            prop_assert_eq!(s.r(e), s.r(e.inv()));
            prop_assert_eq!(s.t(e), -s.t(e.inv()));
            prop_assert_eq!((s.r(e) as i64 - s.t(e)) % 2, 0);
            total += s.r(e);
        }
        prop_assert_eq!(total, s.edges().len());
    }

    #[test]
    fn loops_do_not_depend_on_the_base_point(start in 0..16usize, tail in steps(5), extra in steps(5), o in any::<bool>(), k in 0..64usize, seed in any::<u64>()) {
        let g = geo();
        let p = closed(&g, start, &tail, o, &extra);
        let reduced = erase_backtracks(&g, &p, EraseMode::All).unwrap();
        prop_assume!(!reduced.edges.is_empty());
        let k = k % reduced.edges.len();
        let mut rot = reduced.edges.clone();
        rot.rotate_left(k);
        let rp = LatticePath::new(&g, g.u(rot[0]), rot).unwrap();
        let a = nonbacktracking_core(&g, &reduced, StringKind::Loop).unwrap();
        let b = nonbacktracking_core(&g, &rp, StringKind::Loop).unwrap();
        prop_assert_eq!(&a, &b);
        // and neither does the trace of the holonomy
        let m = model(Family::U, 3, Target::Sphere, 2, 4, 0.0, 0.0);
        let cfg = FieldConfig::random(&m, &mut rng(seed));
        let ta = cfg.holonomy(3, &reduced.edges).trace();
        let tb = cfg.holonomy(3, &rp.edges).trace();
        prop_assert!((ta - tb).norm() < 1e-10);
        prop_assert!((eval_string(&cfg, 3, &a) - ta).norm() < 1e-10);
    }

    #[test]
    fn inverse_anchor_gives_the_same_operations(start in 0..16usize, tail in steps(4), extra in steps(4), o in any::<bool>(), link in 0..32usize) {
        let g = geo();
        let s = vec![nonbacktracking_core(&g, &closed(&g, start, &tail, o, &extra), StringKind::Loop).unwrap()];
        let e = OrientedEdge::from_link(link, false);
        let key = |e: OrientedEdge| {
            let mut v: Vec<_> = edge_operations(&g, &s, e).unwrap().into_iter().map(|en| {
                let mut r = en.result.clone();
                r.sort();
                (en.kind, en.sign, r)
            }).collect();
            v.sort();
            v
        };
        prop_assert_eq!(key(e), key(e.inv()));
    }

    #[test]
    fn batch_means_merge_equals_sequential(values in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..300), parts in 1..6usize) {
        let n = values.len();
        let mut whole = BatchMeans::new(n);
        for &(a, b) in &values {
            whole.push(C64::new(a, b));
        }
        let mut merged = BatchMeans::new(n);
        for p in 0..parts {
            let mut part = BatchMeans::new(n);
            for (i, &(a, b)) in values.iter().enumerate().filter(|(i, _)| i % parts == p) {
                part.push_at(i, C64::new(a, b));
            }
            merged.merge(&part);
        }
        let (x, y) = (whole.estimate(), merged.estimate());
        prop_assert_eq!(x.n, y.n);
        prop_assert!((x.mean_re - y.mean_re).abs() < 1e-12 && (x.mean_im - y.mean_im).abs() < 1e-12);
        prop_assert!((x.stderr_re - y.stderr_re).abs() < 1e-12 && (x.stderr_im - y.stderr_im).abs() < 1e-12);
    }

    #[test]
    fn haar_samples_are_group_members(fam in 0..3usize, n in 2..7usize, seed in any::<u64>()) {
        let family = [Family::SO, Family::U, Family::SU][fam];
        let g = GroupSpec::new(family, n).unwrap();
        let mut r = rng(seed);
        for _ in 0..8 {
            let q = g.haar(&mut r);
            prop_assert!(g.membership_defect(&q) < 1e-12, "{:?}{} {}", family, n, g.membership_defect(&q));
        }
    }
}

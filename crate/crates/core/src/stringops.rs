//! String operations and the operation multisets entering the loop equations.
//!
//! Every entry carries its result with null-loops retained (each contributes a
//! factor `N` when evaluated) and the raw concatenated words before erasure.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, OrientedEdge, Plaquette, Vertex};
use crate::strings::{reduce_word, LatticeString, Line, Loop};
use serde::Serialize;
use std::fmt;

type Word = Vec<OrientedEdge>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    Deformation,
    Breaking,
    Splitting,
    Twisting,
    MergerU,
    MergerNotU,
    SwitchingU,
    SwitchingNotU,
    ExpansionPlaquette,
    ExpansionEdge,
    Gluing,
    RGluing,
    Extension,
    ExpansionAtSite,
    /// Expansion by this many null-lines.
    ExpansionNull(usize),
}

impl OpKind {
    pub const EDGE_KINDS: [OpKind; 10] = [
        OpKind::Deformation,
        OpKind::Breaking,
        OpKind::Splitting,
        OpKind::Twisting,
        OpKind::MergerU,
        OpKind::MergerNotU,
        OpKind::SwitchingU,
        OpKind::SwitchingNotU,
        OpKind::ExpansionPlaquette,
        OpKind::ExpansionEdge,
    ];

    pub fn is_edge_kind(self) -> bool {
        Self::EDGE_KINDS.contains(&self)
    }

    /// Equal kinds, treating every null-line count as the same kind.
    pub fn same_set(self, other: OpKind) -> bool {
        matches!(
            (self, other),
            (OpKind::ExpansionNull(_), OpKind::ExpansionNull(_))
        ) || self == other
    }

    pub fn coefficient_class(self) -> CoefficientClass {
        use CoefficientClass as C;
        match self {
            OpKind::Deformation => C::Beta,
            OpKind::Breaking => C::Kappa,
            OpKind::Splitting | OpKind::MergerU | OpKind::SwitchingU => C::TwoLambda,
            OpKind::Twisting | OpKind::MergerNotU | OpKind::SwitchingNotU => C::TwoMu,
            OpKind::ExpansionPlaquette => C::BetaNu,
            OpKind::ExpansionEdge => C::KappaNu,
            OpKind::Gluing => C::TwoQ,
            OpKind::RGluing => C::TwoTwoMinusQ,
            OpKind::Extension => C::Kappa,
            OpKind::ExpansionAtSite => C::MinusKappaSphere,
            OpKind::ExpansionNull(n) => C::Potential(2 * n),
        }
    }

    pub fn name(self) -> String {
        match self {
            OpKind::ExpansionNull(n) => format!("expansion-null({n})"),
            k => serde_json::to_value(k)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        }
    }

    pub fn parse(s: &str) -> Option<OpKind> {
        let all = [
            OpKind::Deformation,
            OpKind::Breaking,
            OpKind::Splitting,
            OpKind::Twisting,
            OpKind::MergerU,
            OpKind::MergerNotU,
            OpKind::SwitchingU,
            OpKind::SwitchingNotU,
            OpKind::ExpansionPlaquette,
            OpKind::ExpansionEdge,
            OpKind::Gluing,
            OpKind::RGluing,
            OpKind::Extension,
            OpKind::ExpansionAtSite,
        ];
        if s == "expansion-null" {
            return Some(OpKind::ExpansionNull(1));
        }
        all.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The coupling-dependent factor multiplying a set in the loop equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientClass {
    Beta,
    Kappa,
    TwoLambda,
    TwoMu,
    BetaNu,
    KappaNu,
    TwoQ,
    TwoTwoMinusQ,
    MinusKappaSphere,
    /// `c_k` of the potential gradient.
    Potential(usize),
}

impl fmt::Display for CoefficientClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoefficientClass::Beta => "beta".to_string(),
            CoefficientClass::Kappa => "kappa".to_string(),
            CoefficientClass::TwoLambda => "2lambda".to_string(),
            CoefficientClass::TwoMu => "2mu".to_string(),
            CoefficientClass::BetaNu => "beta*nu".to_string(),
            CoefficientClass::KappaNu => "kappa*nu".to_string(),
            CoefficientClass::TwoQ => "2q".to_string(),
            CoefficientClass::TwoTwoMinusQ => "2(2-q)".to_string(),
            CoefficientClass::MinusKappaSphere => "-kappa*1S".to_string(),
            CoefficientClass::Potential(k) => format!("c{k}"),
        };
        f.pad(&s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Unsigned,
}

impl Sign {
    /// The factor `∓` applied to the coefficient of a signed set.
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => -1.0,
            Sign::Negative | Sign::Unsigned => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Begin,
    End,
}

/// An edge location: position `index` in component `component`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Location {
    pub component: usize,
    pub index: usize,
}

/// A line endpoint sitting at the anchor vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Incidence {
    pub component: usize,
    pub endpoint: Endpoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperationEntry {
    pub kind: OpKind,
    pub sign: Sign,
    pub locations: Vec<Location>,
    pub incidences: Vec<Incidence>,
    pub plaquette: Option<Plaquette>,
    pub edge: Option<OrientedEdge>,
    pub weight: f64,
    /// Resulting collection; null-loops are kept.
    pub result: Vec<LatticeString>,
    /// Words of the new strings before backtrack erasure.
    pub raw: Vec<Word>,
}

impl OperationEntry {
    fn new(kind: OpKind, sign: Sign) -> Self {
        OperationEntry {
            kind,
            sign,
            locations: Vec::new(),
            incidences: Vec::new(),
            plaquette: None,
            edge: None,
            weight: 1.0,
            result: Vec::new(),
            raw: Vec::new(),
        }
    }

    pub fn coefficient_class(&self) -> CoefficientClass {
        self.kind.coefficient_class()
    }
}

/// The anchor of an equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Edge(OrientedEdge),
    Site(Vertex),
}

/// What the site operations need to know about the Higgs target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteTarget {
    pub sphere: bool,
    /// Largest null-line count `n` with a potential coefficient `c_{2n}`.
    pub max_null: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeCounts {
    pub r_components: Vec<usize>,
    pub t_components: Vec<i64>,
    pub r: usize,
    pub t: i64,
}

pub fn edge_counts(s: &[LatticeString], e: OrientedEdge) -> EdgeCounts {
    let r_components: Vec<usize> = s.iter().map(|l| l.r(e)).collect();
    let t_components: Vec<i64> = s.iter().map(|l| l.t(e)).collect();
    EdgeCounts {
        r: r_components.iter().sum(),
        t: t_components.iter().sum(),
        r_components,
        t_components,
    }
}

/// `r_x(s)`: endpoint incidences at `x`; a line with both ends at `x` counts twice.
pub fn site_count(s: &[LatticeString], x: Vertex) -> usize {
    incidences(s, x).len()
}

fn incidences(s: &[LatticeString], x: Vertex) -> Vec<Incidence> {
    let mut out = Vec::new();
    for (i, l) in s.iter().enumerate() {
        if let LatticeString::Line(l) = l {
            if l.start() == x {
                out.push(Incidence {
                    component: i,
                    endpoint: Endpoint::Begin,
                });
            }
            if l.end() == x {
                out.push(Incidence {
                    component: i,
                    endpoint: Endpoint::End,
                });
            }
        }
    }
    out
}

fn inv_word(w: &[OrientedEdge]) -> Word {
    w.iter().rev().map(|e| e.inv()).collect()
}

fn cat(parts: &[&[OrientedEdge]]) -> Word {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn mk_loop(w: &[OrientedEdge]) -> LatticeString {
    LatticeString::Loop(Loop::from_cyclic_word(w))
}

fn mk_line(g: &LatticeGeometry, start: Vertex, w: &[OrientedEdge]) -> LatticeString {
    let p = crate::strings::LatticePath {
        start,
        edges: reduce_word(w),
    };
    LatticeString::Line(Line::from_path(g, &p))
}

/// A string cut open at one location: `a f b`, with loops rotated so that `a` is empty.
struct Cut {
    a: Word,
    f: OrientedEdge,
    b: Word,
    start: Vertex,
    end: Vertex,
    is_loop: bool,
}

fn cut(g: &LatticeGeometry, l: &LatticeString, k: usize) -> Result<Cut> {
    let w = l.edges();
    if k >= w.len() {
        return Err(Error::Domain(format!(
            "location {k} is outside a string of length {}",
            w.len()
        )));
    }
    Ok(match l {
        LatticeString::Loop(_) => {
            let mut r = w.to_vec();
            r.rotate_left(k);
            let f = r[0];
            Cut {
                a: Vec::new(),
                f,
                b: r[1..].to_vec(),
                start: g.u(f),
                end: g.u(f),
                is_loop: true,
            }
        }
        LatticeString::Line(line) => Cut {
            a: w[..k].to_vec(),
            f: w[k],
            b: w[k + 1..].to_vec(),
            start: line.start(),
            end: line.end(),
            is_loop: false,
        },
    })
}

fn same_link(f: OrientedEdge, g: OrientedEdge) -> bool {
    f.link() == g.link()
}

/// Result of an operation on one or two strings: new strings and their raw words.
#[derive(Clone, Debug, PartialEq)]
pub struct Surgery {
    pub strings: Vec<LatticeString>,
    pub raw: Vec<Word>,
}

impl Surgery {
    fn one(s: LatticeString, raw: Word) -> Self {
        Surgery {
            strings: vec![s],
            raw: vec![raw],
        }
    }

    fn two(s1: LatticeString, r1: Word, s2: LatticeString, r2: Word) -> Self {
        Surgery {
            strings: vec![s1, s2],
            raw: vec![r1, r2],
        }
    }
}

fn two_locations(l: &LatticeString, k1: usize, k2: usize) -> Result<(usize, usize, bool)> {
    let w = l.edges();
    if k1 == k2 || k1.max(k2) >= w.len() {
        return Err(Error::Domain(
            "two distinct locations inside the string are required".into(),
        ));
    }
    let (i, j) = (k1.min(k2), k1.max(k2));
    if !same_link(w[i], w[j]) {
        return Err(Error::Domain(
            "the two locations do not hold the same edge".into(),
        ));
    }
    Ok((i, j, w[i] == w[j]))
}

/// Splitting at two locations of the same edge; the sign is fixed by the pattern.
pub fn split(
    g: &LatticeGeometry,
    l: &LatticeString,
    k1: usize,
    k2: usize,
) -> Result<(Sign, Surgery)> {
    let (i, j, same) = two_locations(l, k1, k2)?;
    let w = l.edges();
    let (a, f, b, c) = (&w[..i], w[i], &w[i + 1..j], &w[j + 1..]);
    let start = match l {
        LatticeString::Line(line) => line.start(),
        LatticeString::Loop(_) => g.u(w[0]),
    };
    let build_first = |word: Word| {
        if l.is_loop() {
            mk_loop(&word)
        } else {
            mk_line(g, start, &word)
        }
    };
    if same {
        let w1 = cat(&[a, &[f], c]);
        let w2 = cat(&[b, &[f]]);
        Ok((
            Sign::Positive,
            Surgery::two(build_first(w1.clone()), w1, mk_loop(&w2), w2),
        ))
    } else {
        let w1 = cat(&[a, c]);
        let w2 = b.to_vec();
        Ok((
            Sign::Negative,
            Surgery::two(build_first(w1.clone()), w1, mk_loop(&w2), w2),
        ))
    }
}

/// Twisting at two locations of the same edge.
pub fn twist(
    g: &LatticeGeometry,
    l: &LatticeString,
    k1: usize,
    k2: usize,
) -> Result<(Sign, Surgery)> {
    let (i, j, same) = two_locations(l, k1, k2)?;
    let w = l.edges();
    let (a, f, b, c) = (&w[..i], w[i], &w[i + 1..j], &w[j + 1..]);
    let binv = inv_word(b);
    let (sign, word) = if same {
        (Sign::Negative, cat(&[a, &binv, c]))
    } else {
        (Sign::Positive, cat(&[a, &[f], &binv, &[f.inv()], c]))
    };
    let s = match l {
        LatticeString::Loop(_) => mk_loop(&word),
        LatticeString::Line(line) => mk_line(g, line.start(), &word),
    };
    Ok((sign, Surgery::one(s, word)))
}

/// Merger of two strings, at most one a line, at locations `k` in `l` and `k2` in `l2`.
/// Returns the entry kind (U or not-U) with the result.
pub fn merge(
    g: &LatticeGeometry,
    l: &LatticeString,
    k: usize,
    l2: &LatticeString,
    k2: usize,
    sign: Sign,
) -> Result<(OpKind, Surgery)> {
    if l.is_line() && l2.is_line() {
        return Err(Error::Domain("both strings are lines; use switch".into()));
    }
    let x = cut(g, l, k)?;
    let y = cut(g, l2, k2)?;
    if !same_link(x.f, y.f) {
        return Err(Error::Domain(
            "the two locations do not hold the same edge".into(),
        ));
    }
    let same = x.f == y.f;
    let f = x.f;
    let positive = match sign {
        Sign::Positive => true,
        Sign::Negative => false,
        Sign::Unsigned => return Err(Error::Domain("mergers are signed".into())),
    };
    let kind = if same == positive {
        OpKind::MergerU
    } else {
        OpKind::MergerNotU
    };
    let fi = [f];
    match (x.is_loop, y.is_loop) {
        (true, true) => {
            let (a, b) = (&x.a, &x.b);
            let (c, d) = (&y.a, &y.b);
            let w = match (same, positive) {
                (true, true) => cat(&[a, &fi, d, c, &fi, b]),
                (true, false) => cat(&[a, &inv_word(c), &inv_word(d), b]),
                (false, true) => cat(&[a, &fi, &inv_word(c), &inv_word(d), &fi, b]),
                (false, false) => cat(&[a, d, c, b]),
            };
            Ok((kind, Surgery::one(mk_loop(&w), w)))
        }
        (true, false) => {
            // loop a f b first, line c g d second
            let (a, b) = (&x.a, &x.b);
            let (c, d) = (&y.a, &y.b);
            let (start, w) = match (same, positive) {
                (true, true) => (y.start, cat(&[c, &fi, b, a, &fi, d])),
                (true, false) => (y.end, cat(&[&inv_word(d), b, a, &inv_word(c)])),
                (false, true) => (y.end, cat(&[&inv_word(d), &fi, b, a, &fi, &inv_word(c)])),
                (false, false) => (y.start, cat(&[c, b, a, d])),
            };
            Ok((kind, Surgery::one(mk_line(g, start, &w), w)))
        }
        (false, true) => {
            // line c f d first, loop a g b second
            let (c, d) = (&x.a, &x.b);
            let (a, b) = (&y.a, &y.b);
            let w = match (same, positive) {
                (true, true) => cat(&[c, &fi, b, a, &fi, d]),
                (true, false) => cat(&[c, &inv_word(a), &inv_word(b), d]),
                (false, true) => cat(&[c, &fi, &inv_word(a), &inv_word(b), &fi, d]),
                (false, false) => cat(&[c, b, a, d]),
            };
            Ok((kind, Surgery::one(mk_line(g, x.start, &w), w)))
        }
        (false, false) => unreachable!(),
    }
}

/// Switching of two lines at locations `k` in `l` and `k2` in `l2`.
pub fn switch(
    g: &LatticeGeometry,
    l: &LatticeString,
    k: usize,
    l2: &LatticeString,
    k2: usize,
    sign: Sign,
) -> Result<(OpKind, Surgery)> {
    if !(l.is_line() && l2.is_line()) {
        return Err(Error::Domain("switching needs two lines".into()));
    }
    let x = cut(g, l, k)?;
    let y = cut(g, l2, k2)?;
    if !same_link(x.f, y.f) {
        return Err(Error::Domain(
            "the two locations do not hold the same edge".into(),
        ));
    }
    let same = x.f == y.f;
    let positive = match sign {
        Sign::Positive => true,
        Sign::Negative => false,
        Sign::Unsigned => return Err(Error::Domain("switchings are signed".into())),
    };
    let kind = if same == positive {
        OpKind::SwitchingU
    } else {
        OpKind::SwitchingNotU
    };
    let f = [x.f];
    let (a, b, c, d) = (&x.a, &x.b, &y.a, &y.b);
    let ((s1, w1), (s2, w2)) = match (same, positive) {
        (true, true) => ((x.start, cat(&[a, &f, d])), (y.start, cat(&[c, &f, b]))),
        (true, false) => (
            (x.start, cat(&[a, &inv_word(c)])),
            (y.end, cat(&[&inv_word(d), b])),
        ),
        (false, true) => (
            (x.start, cat(&[a, &f, &inv_word(c)])),
            (y.end, cat(&[&inv_word(d), &f, b])),
        ),
        (false, false) => ((x.start, cat(&[a, d])), (y.start, cat(&[c, b]))),
    };
    Ok((
        kind,
        Surgery::two(mk_line(g, s1, &w1), w1, mk_line(g, s2, &w2), w2),
    ))
}

/// Deformation at location `k` by plaquette `p`: positive needs `p ≻ f^{-1}`, negative `p ≻ f`.
pub fn deform(
    g: &LatticeGeometry,
    l: &LatticeString,
    k: usize,
    p: &Plaquette,
    sign: Sign,
) -> Result<Surgery> {
    let x = cut(g, l, k)?;
    let f = x.f;
    let w = match sign {
        Sign::Positive => {
            let pos = p
                .position_of(f.inv())
                .ok_or_else(|| Error::Domain("plaquette does not contain f^{-1}".into()))?;
            // p = f^{-1} d, so p^{-1} = f d^{-1}
            let d = &p.rotated(pos)[1..];
            cat(&[&x.a, &[f], &inv_word(d), &[f], &x.b])
        }
        Sign::Negative => {
            let pos = p
                .position_of(f)
                .ok_or_else(|| Error::Domain("plaquette does not contain f".into()))?;
            let r = &p.rotated(pos)[1..];
            cat(&[&x.a, &inv_word(r), &x.b])
        }
        Sign::Unsigned => return Err(Error::Domain("deformations are signed".into())),
    };
    let s = if x.is_loop {
        mk_loop(&w)
    } else {
        mk_line(g, x.start, &w)
    };
    Ok(Surgery::one(s, w))
}

/// Breaking at location `k`.
pub fn break_at(g: &LatticeGeometry, l: &LatticeString, k: usize, sign: Sign) -> Result<Surgery> {
    let x = cut(g, l, k)?;
    let f = x.f;
    match (x.is_loop, sign) {
        (true, Sign::Negative) => {
            let w = cat(&[&x.b, &x.a]);
            Ok(Surgery::one(mk_line(g, g.v(f), &w), w))
        }
        (true, Sign::Positive) => {
            let w = cat(&[&[f], &x.b, &x.a, &[f]]);
            Ok(Surgery::one(mk_line(g, g.u(f), &w), w))
        }
        (false, Sign::Negative) => {
            let w1 = x.a.clone();
            let w2 = x.b.clone();
            Ok(Surgery::two(
                mk_line(g, x.start, &w1),
                w1,
                mk_line(g, g.v(f), &w2),
                w2,
            ))
        }
        (false, Sign::Positive) => {
            let w1 = cat(&[&x.a, &[f]]);
            let w2 = cat(&[&[f], &x.b]);
            Ok(Surgery::two(
                mk_line(g, x.start, &w1),
                w1,
                mk_line(g, g.u(f), &w2),
                w2,
            ))
        }
        (_, Sign::Unsigned) => Err(Error::Domain("breakings are signed".into())),
    }
}

fn as_line<'a>(l: &'a LatticeString, what: &str) -> Result<&'a Line> {
    l.as_line()
        .ok_or_else(|| Error::Domain(format!("{what} needs a line")))
}

/// `△ℓ`: glue a line with `u = v` into a loop.
pub fn glue_closed(l: &LatticeString) -> Result<Surgery> {
    let line = as_line(l, "gluing")?;
    if line.start() != line.end() {
        return Err(Error::Domain("line endpoints differ".into()));
    }
    let w = line.edges().to_vec();
    Ok(Surgery::one(mk_loop(&w), w))
}

/// How two lines are joined at a shared vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    /// `v(ℓ1) = u(ℓ2)`: `[ℓ1 ℓ2]`.
    EndBegin,
    /// `u(ℓ1) = u(ℓ2)`: `[ℓ1^{-1} ℓ2]`.
    BeginBegin,
    /// `v(ℓ1) = v(ℓ2)`: `[ℓ1 ℓ2^{-1}]`.
    EndEnd,
}

/// Gluing (`EndBegin`) or R-gluing (the other pairings) of two lines.
pub fn glue(
    g: &LatticeGeometry,
    l1: &LatticeString,
    l2: &LatticeString,
    pairing: Pairing,
) -> Result<(OpKind, Surgery)> {
    let a = as_line(l1, "gluing")?;
    let b = as_line(l2, "gluing")?;
    let (ok, kind, start, w) = match pairing {
        Pairing::EndBegin => (
            a.end() == b.start(),
            OpKind::Gluing,
            a.start(),
            cat(&[a.edges(), b.edges()]),
        ),
        Pairing::BeginBegin => (
            a.start() == b.start(),
            OpKind::RGluing,
            a.end(),
            cat(&[&inv_word(a.edges()), b.edges()]),
        ),
        Pairing::EndEnd => (
            a.end() == b.end(),
            OpKind::RGluing,
            a.start(),
            cat(&[a.edges(), &inv_word(b.edges())]),
        ),
    };
    if !ok {
        return Err(Error::Domain("line endpoints do not meet".into()));
    }
    Ok((kind, Surgery::one(mk_line(g, start, &w), w)))
}

/// Extension of a line by an edge at its beginning (`[e ℓ]`) or end (`[ℓ e]`).
pub fn extend(
    g: &LatticeGeometry,
    l: &LatticeString,
    e: OrientedEdge,
    at: Endpoint,
) -> Result<Surgery> {
    let line = as_line(l, "extension")?;
    match at {
        Endpoint::End => {
            if line.end() != g.u(e) {
                return Err(Error::Domain("edge does not start at the line end".into()));
            }
            let w = cat(&[line.edges(), &[e]]);
            Ok(Surgery::one(mk_line(g, line.start(), &w), w))
        }
        Endpoint::Begin => {
            if line.start() != g.v(e) {
                return Err(Error::Domain(
                    "edge does not end at the line beginning".into(),
                ));
            }
            let w = cat(&[&[e], line.edges()]);
            Ok(Surgery::one(mk_line(g, g.u(e), &w), w))
        }
    }
}

/// What an expansion appends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expansion {
    Plaquette(Plaquette),
    EdgeLine(OrientedEdge),
    NullLines(Vertex, usize),
}

/// The strings appended by an expansion.
pub fn expand(g: &LatticeGeometry, what: Expansion) -> Surgery {
    match what {
        Expansion::Plaquette(p) => Surgery::one(mk_loop(&p.edges), p.edges.to_vec()),
        Expansion::EdgeLine(e) => Surgery::one(LatticeString::Line(Line::edge(g, e)), vec![e]),
        Expansion::NullLines(x, n) => Surgery {
            strings: vec![LatticeString::Line(Line::null(x)); n],
            raw: vec![Vec::new(); n],
        },
    }
}

fn replace_one(s: &[LatticeString], i: usize, new: Vec<LatticeString>) -> Vec<LatticeString> {
    let mut out = Vec::with_capacity(s.len() + new.len());
    out.extend_from_slice(&s[..i]);
    out.extend(new);
    out.extend_from_slice(&s[i + 1..]);
    out
}

/// Replace component `i` by `a` and drop component `j`.
fn replace_pair(s: &[LatticeString], i: usize, a: LatticeString, j: usize) -> Vec<LatticeString> {
    s.iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(k, x)| if k == i { a.clone() } else { x.clone() })
        .collect()
}

fn edge_locations(s: &[LatticeString], e: OrientedEdge) -> Vec<(Location, OrientedEdge)> {
    let mut out = Vec::new();
    for (c, l) in s.iter().enumerate() {
        for occ in l.locations_of(e) {
            let f = if occ.inverted { e.inv() } else { e };
            out.push((
                Location {
                    component: c,
                    index: occ.index,
                },
                f,
            ));
        }
    }
    out
}

/// All edge-anchored operations of `s` at `e` (equivalently at `e^{-1}`).
pub fn edge_operations(
    g: &LatticeGeometry,
    s: &[LatticeString],
    e: OrientedEdge,
) -> Result<Vec<OperationEntry>> {
    g.check_edge(e)?;
    for l in s {
        l.validate(g)?;
    }
    let locs = edge_locations(s, e);
    let mut out = Vec::new();

    for &(loc, f) in &locs {
        let l = &s[loc.component];
        let k = loc.index;
        // deformations and plaquette expansions
        for (p, _) in g.plaquettes_through_unchecked(f.inv()) {
            let r = deform(g, l, k, &p, Sign::Positive)?;
            let mut en = OperationEntry::new(OpKind::Deformation, Sign::Positive);
            en.locations.push(loc);
            en.plaquette = Some(p);
            en.result = replace_one(s, loc.component, r.strings);
            en.raw = r.raw;
            out.push(en);
        }
        for (p, _) in g.plaquettes_through_unchecked(f) {
            let r = deform(g, l, k, &p, Sign::Negative)?;
            let mut en = OperationEntry::new(OpKind::Deformation, Sign::Negative);
            en.locations.push(loc);
            en.plaquette = Some(p);
            en.result = replace_one(s, loc.component, r.strings);
            en.raw = r.raw;
            out.push(en);
        }
        for sign in [Sign::Positive, Sign::Negative] {
            let r = break_at(g, l, k, sign)?;
            let mut en = OperationEntry::new(OpKind::Breaking, sign);
            en.locations.push(loc);
            en.edge = Some(f);
            en.result = replace_one(s, loc.component, r.strings);
            en.raw = r.raw;
            out.push(en);
        }
        for (sign, target) in [(Sign::Positive, f.inv()), (Sign::Negative, f)] {
            for (p, _) in g.plaquettes_through_unchecked(target) {
                let r = expand(g, Expansion::Plaquette(p));
                let mut en = OperationEntry::new(OpKind::ExpansionPlaquette, sign);
                en.locations.push(loc);
                en.plaquette = Some(p);
                en.result = s.iter().cloned().chain(r.strings).collect();
                en.raw = r.raw;
                out.push(en);
            }
        }
        for (sign, edge) in [(Sign::Positive, f.inv()), (Sign::Negative, f)] {
            let r = expand(g, Expansion::EdgeLine(edge));
            let mut en = OperationEntry::new(OpKind::ExpansionEdge, sign);
            en.locations.push(loc);
            en.edge = Some(edge);
            en.result = s.iter().cloned().chain(r.strings).collect();
            en.raw = r.raw;
            out.push(en);
        }
    }

    // splittings and twistings: ordered pairs of distinct locations in one component
    for &(l1, _) in &locs {
        for &(l2, _) in &locs {
            if l1.component != l2.component || l1.index == l2.index {
                continue;
            }
            let l = &s[l1.component];
            let (sign, r) = split(g, l, l1.index, l2.index)?;
            let mut en = OperationEntry::new(OpKind::Splitting, sign);
            en.locations = vec![l1, l2];
            en.result = replace_one(s, l1.component, r.strings);
            en.raw = r.raw;
            out.push(en);
            let (sign, r) = twist(g, l, l1.index, l2.index)?;
            let mut en = OperationEntry::new(OpKind::Twisting, sign);
            en.locations = vec![l1, l2];
            en.result = replace_one(s, l1.component, r.strings);
            en.raw = r.raw;
            out.push(en);
        }
    }

    // mergers and switchings: ordered pairs of distinct components
    for &(l1, _) in &locs {
        for &(l2, _) in &locs {
            if l1.component == l2.component {
                continue;
            }
            let (a, b) = (&s[l1.component], &s[l2.component]);
            for sign in [Sign::Positive, Sign::Negative] {
                let (kind, r, result) = if a.is_line() && b.is_line() {
                    let (kind, r) = switch(g, a, l1.index, b, l2.index, sign)?;
                    let mut res = s.to_vec();
                    res[l1.component] = r.strings[0].clone();
                    res[l2.component] = r.strings[1].clone();
                    (kind, r.raw, res)
                } else {
                    let (kind, r) = merge(g, a, l1.index, b, l2.index, sign)?;
                    let res = replace_pair(s, l1.component, r.strings[0].clone(), l2.component);
                    (kind, r.raw, res)
                };
                let mut en = OperationEntry::new(kind, sign);
                en.locations = vec![l1, l2];
                en.result = result;
                en.raw = r;
                out.push(en);
            }
        }
    }
    Ok(out)
}

/// All site-anchored operations of `s` at `x`.
pub fn site_operations(
    g: &LatticeGeometry,
    s: &[LatticeString],
    x: Vertex,
    target: SiteTarget,
) -> Result<Vec<OperationEntry>> {
    g.check_vertex(x)?;
    for l in s {
        l.validate(g)?;
    }
    let inc = incidences(s, x);
    let mut out = Vec::new();
    let around = g.edges_at_site_unchecked(x);

    for &i in &inc {
        let l = &s[i.component];
        for &e in &around {
            let edge = match i.endpoint {
                Endpoint::End => e,
                Endpoint::Begin => e.inv(),
            };
            let r = extend(g, l, edge, i.endpoint)?;
            let mut en = OperationEntry::new(OpKind::Extension, Sign::Unsigned);
            en.incidences.push(i);
            en.edge = Some(edge);
            en.result = replace_one(s, i.component, r.strings);
            en.raw = r.raw;
            out.push(en);
        }
        if target.sphere {
            for &e in &around {
                for edge in [e, e.inv()] {
                    let r = expand(g, Expansion::EdgeLine(edge));
                    let mut en = OperationEntry::new(OpKind::ExpansionAtSite, Sign::Unsigned);
                    en.incidences.push(i);
                    en.edge = Some(edge);
                    en.weight = 0.5;
                    en.result = s.iter().cloned().chain(r.strings).collect();
                    en.raw = r.raw;
                    out.push(en);
                }
            }
        } else {
            for n in 1..=target.max_null {
                let r = expand(g, Expansion::NullLines(x, n));
                let mut en = OperationEntry::new(OpKind::ExpansionNull(n), Sign::Unsigned);
                en.incidences.push(i);
                en.result = s.iter().cloned().chain(r.strings).collect();
                en.raw = r.raw;
                out.push(en);
            }
        }
    }

    // gluings over unordered pairs of distinct incidences
    for (m, &i) in inc.iter().enumerate() {
        for &j in &inc[m + 1..] {
            let mut en;
            if i.component == j.component {
                let r = glue_closed(&s[i.component])?;
                en = OperationEntry::new(OpKind::Gluing, Sign::Unsigned);
                en.result = replace_one(s, i.component, r.strings);
                en.raw = r.raw;
            } else {
                let (a, b) = (&s[i.component], &s[j.component]);
                let (kind, r) = match (i.endpoint, j.endpoint) {
                    (Endpoint::End, Endpoint::Begin) => glue(g, a, b, Pairing::EndBegin)?,
                    (Endpoint::Begin, Endpoint::End) => glue(g, b, a, Pairing::EndBegin)?,
                    (Endpoint::Begin, Endpoint::Begin) => glue(g, a, b, Pairing::BeginBegin)?,
                    (Endpoint::End, Endpoint::End) => glue(g, a, b, Pairing::EndEnd)?,
                };
                en = OperationEntry::new(kind, Sign::Unsigned);
                en.result = replace_pair(s, i.component, r.strings[0].clone(), j.component);
                en.raw = r.raw;
            }
            en.incidences = vec![i, j];
            out.push(en);
        }
    }
    Ok(out)
}

/// Operations of the requested kinds at an anchor.
pub fn enumerate_set(
    g: &LatticeGeometry,
    s: &[LatticeString],
    anchor: Anchor,
    kinds: &[OpKind],
    target: SiteTarget,
) -> Result<Vec<OperationEntry>> {
    if kinds.is_empty() {
        return Err(Error::Usage("no operation kinds requested".into()));
    }
    let all = match anchor {
        Anchor::Edge(e) => {
            if let Some(k) = kinds.iter().find(|k| !k.is_edge_kind()) {
                return Err(Error::Usage(format!("{k} is not an edge operation")));
            }
            edge_operations(g, s, e)?
        }
        Anchor::Site(x) => {
            if let Some(k) = kinds.iter().find(|k| k.is_edge_kind()) {
                return Err(Error::Usage(format!("{k} is not a site operation")));
            }
            site_operations(g, s, x, target)?
        }
    };
    Ok(all
        .into_iter()
        .filter(|en| kinds.iter().any(|k| k.same_set(en.kind)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strings::parse_string;

    fn g2() -> LatticeGeometry {
        LatticeGeometry::new(2, 4).unwrap()
    }

    #[test]
    fn plaquette_pair_negative_u_merger_is_null() {
        let g = g2();
        let p = parse_string("loop (0,0)+x+y-x-y", &g).unwrap();
        let pinv = p.reverse();
        let e = g.edge(0, 0, true);
        let s = vec![p.clone(), pinv.clone()];
        let ops = edge_operations(&g, &s, e).unwrap();
        let m: Vec<_> = ops
            .iter()
            .filter(|o| o.kind == OpKind::MergerU && o.sign == Sign::Negative)
            .collect();
        assert_eq!(m.len(), 2);
        for o in m {
            assert_eq!(o.result, vec![LatticeString::Loop(Loop::null())]);
        }
    }

    #[test]
    fn deformation_counts() {
        let g = LatticeGeometry::new(3, 3).unwrap();
        let p = parse_string("loop (0,0,0)+x+y-x-y", &g).unwrap();
        let e = g.edge(0, 0, true);
        let ops = enumerate_set(
            &g,
            &[p],
            Anchor::Edge(e),
            &[OpKind::Deformation],
            SiteTarget {
                sphere: true,
                max_null: 0,
            },
        )
        .unwrap();
        assert_eq!(ops.iter().filter(|o| o.sign == Sign::Positive).count(), 4);
        assert_eq!(ops.iter().filter(|o| o.sign == Sign::Negative).count(), 4);
        // ℓ ⊖ p with ℓ = p is the null-loop
        assert!(ops
            .iter()
            .any(|o| o.sign == Sign::Negative && o.result[0].is_null_loop()));
    }

    #[test]
    fn single_edge_negative_break_gives_null_lines() {
        let g = g2();
        let l = parse_string("line (1,1)+x", &g).unwrap();
        let r = break_at(&g, &l, 0, Sign::Negative).unwrap();
        let u = g.vertex(&[1, 1]).unwrap();
        let v = g.vertex(&[2, 1]).unwrap();
        assert_eq!(
            r.strings,
            vec![
                LatticeString::Line(Line::null(u)),
                LatticeString::Line(Line::null(v))
            ]
        );
    }

    #[test]
    fn kind_names_round_trip() {
        for k in OpKind::EDGE_KINDS {
            assert_eq!(OpKind::parse(&k.name()), Some(k));
        }
        assert_eq!(OpKind::parse("r-gluing"), Some(OpKind::RGluing));
    }
}

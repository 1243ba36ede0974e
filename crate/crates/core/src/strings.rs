//! Paths, backtrack erasure, loops, lines and string collections.

use crate::error::{Error, Result};
use crate::geometry::{LatticeGeometry, OrientedEdge, Vertex};
use std::fmt::Write as _;

/// A sequence of edges `e1 ... en` with `v(ei) = u(ei+1)`; empty means null-path at `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticePath {
    pub start: Vertex,
    pub edges: Vec<OrientedEdge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EraseMode {
    InteriorOnly,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StringKind {
    Loop,
    Line,
}

impl LatticePath {
    pub fn new(g: &LatticeGeometry, start: Vertex, edges: Vec<OrientedEdge>) -> Result<Self> {
        g.check_vertex(start)?;
        let mut at = start;
        for (i, &e) in edges.iter().enumerate() {
            g.check_edge(e)?;
            if g.u(e) != at {
                return Err(Error::Domain(format!(
                    "edge {i} of path does not start where edge {} ends",
                    i.max(1) - 1
                )));
            }
            at = g.v(e);
        }
        Ok(LatticePath { start, edges })
    }

    pub fn null(start: Vertex) -> Self {
        LatticePath {
            start,
            edges: Vec::new(),
        }
    }

    pub fn end(&self, g: &LatticeGeometry) -> Vertex {
        self.edges.last().map_or(self.start, |&e| g.v(e))
    }

    pub fn is_closed(&self, g: &LatticeGeometry) -> bool {
        self.end(g) == self.start
    }

    pub fn inverse(&self, g: &LatticeGeometry) -> LatticePath {
        LatticePath {
            start: self.end(g),
            edges: self.edges.iter().rev().map(|e| e.inv()).collect(),
        }
    }

    pub fn concat(&self, other: &LatticePath) -> LatticePath {
        let mut edges = Vec::with_capacity(self.edges.len() + other.edges.len());
        edges.extend_from_slice(&self.edges);
        edges.extend_from_slice(&other.edges);
        LatticePath {
            start: self.start,
            edges,
        }
    }
}

/// Successive cancellation of adjacent `e e^{-1}` pairs (free reduction).
pub(crate) fn reduce_word(edges: &[OrientedEdge]) -> Vec<OrientedEdge> {
    let mut out: Vec<OrientedEdge> = Vec::with_capacity(edges.len());
    for &e in edges {
        if out.last() == Some(&e.inv()) {
            out.pop();
        } else {
            out.push(e);
        }
    }
    out
}

/// Free reduction followed by removal of terminal backtracks `e1 = en^{-1}`.
pub(crate) fn cyclic_reduce(edges: &[OrientedEdge]) -> Vec<OrientedEdge> {
    let w = reduce_word(edges);
    let mut i = 0;
    let mut j = w.len();
    while j - i >= 2 && w[i] == w[j - 1].inv() {
        i += 1;
        j -= 1;
    }
    w[i..j].to_vec()
}

fn min_rotation(w: &[OrientedEdge]) -> usize {
    let n = w.len();
    let mut best = 0;
    for k in 1..n {
        for t in 0..n {
            let a = w[(k + t) % n];
            let b = w[(best + t) % n];
            if a != b {
                if a < b {
                    best = k;
                }
                break;
            }
        }
    }
    best
}

pub fn erase_backtracks(
    g: &LatticeGeometry,
    p: &LatticePath,
    mode: EraseMode,
) -> Result<LatticePath> {
    match mode {
        EraseMode::InteriorOnly => Ok(LatticePath {
            start: p.start,
            edges: reduce_word(&p.edges),
        }),
        EraseMode::All => {
            if !p.is_closed(g) {
                return Err(Error::Usage(
                    "erasing terminal backtracks requires a closed path".into(),
                ));
            }
            let w = cyclic_reduce(&p.edges);
            let start = w.first().map_or(p.start, |&e| g.u(e));
            Ok(LatticePath { start, edges: w })
        }
    }
}

/// Closed nonbacktracking edge sequence, stored as its lexicographically minimal rotation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loop {
    edges: Vec<OrientedEdge>,
}

impl Loop {
    pub fn null() -> Self {
        Loop { edges: Vec::new() }
    }

    /// Core of a cyclic word that is known to be closed.
    pub(crate) fn from_cyclic_word(word: &[OrientedEdge]) -> Loop {
        let mut w = cyclic_reduce(word);
        let k = min_rotation(&w);
        w.rotate_left(k);
        Loop { edges: w }
    }

    pub fn from_closed_path(g: &LatticeGeometry, p: &LatticePath) -> Result<Loop> {
        if !p.is_closed(g) {
            return Err(Error::Usage("a loop needs a closed path".into()));
        }
        Ok(Loop::from_cyclic_word(&p.edges))
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_null(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn reverse(&self) -> Loop {
        let w: Vec<OrientedEdge> = self.edges.iter().rev().map(|e| e.inv()).collect();
        Loop::from_cyclic_word(&w)
    }
}

/// Open string: a nonbacktracking edge sequence from `start` to `end`, or the null-line at `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Line {
    start: Vertex,
    end: Vertex,
    edges: Vec<OrientedEdge>,
}

impl Line {
    pub fn null(x: Vertex) -> Self {
        Line {
            start: x,
            end: x,
            edges: Vec::new(),
        }
    }

    pub fn from_path(g: &LatticeGeometry, p: &LatticePath) -> Line {
        let edges = reduce_word(&p.edges);
        Line {
            start: p.start,
            end: p.end(g),
            edges,
        }
    }

    /// Single-edge line.
    pub fn edge(g: &LatticeGeometry, e: OrientedEdge) -> Line {
        Line {
            start: g.u(e),
            end: g.v(e),
            edges: vec![e],
        }
    }

    pub fn start(&self) -> Vertex {
        self.start
    }

    pub fn end(&self) -> Vertex {
        self.end
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.edges
    }

    pub fn is_null(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn as_path(&self) -> LatticePath {
        LatticePath {
            start: self.start,
            edges: self.edges.clone(),
        }
    }

    pub fn reverse(&self) -> Line {
        Line {
            start: self.end,
            end: self.start,
            edges: self.edges.iter().rev().map(|e| e.inv()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatticeString {
    Loop(Loop),
    Line(Line),
}

/// One occurrence of `e` or `e^{-1}` in a string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeOccurrence {
    pub index: usize,
    /// `true` when the edge at `index` is `e^{-1}`.
    pub inverted: bool,
}

impl LatticeString {
    pub fn edges(&self) -> &[OrientedEdge] {
        match self {
            LatticeString::Loop(l) => l.edges(),
            LatticeString::Line(l) => l.edges(),
        }
    }

    pub fn kind(&self) -> StringKind {
        match self {
            LatticeString::Loop(_) => StringKind::Loop,
            LatticeString::Line(_) => StringKind::Line,
        }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self, LatticeString::Loop(_))
    }

    pub fn is_line(&self) -> bool {
        matches!(self, LatticeString::Line(_))
    }

    pub fn is_null_loop(&self) -> bool {
        matches!(self, LatticeString::Loop(l) if l.is_null())
    }

    pub fn as_line(&self) -> Option<&Line> {
        match self {
            LatticeString::Line(l) => Some(l),
            LatticeString::Loop(_) => None,
        }
    }

    pub fn reverse(&self) -> LatticeString {
        match self {
            LatticeString::Loop(l) => LatticeString::Loop(l.reverse()),
            LatticeString::Line(l) => LatticeString::Line(l.reverse()),
        }
    }

    pub fn locations_of(&self, e: OrientedEdge) -> Vec<EdgeOccurrence> {
        self.edges()
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == e || f == e.inv())
            .map(|(index, &f)| EdgeOccurrence {
                index,
                inverted: f != e,
            })
            .collect()
    }

    /// `r(ℓ)`: number of occurrences of `e` or `e^{-1}`.
    pub fn r(&self, e: OrientedEdge) -> usize {
        self.edges()
            .iter()
            .filter(|&&f| f == e || f == e.inv())
            .count()
    }

    /// `t_ℓ(e)`: occurrences of `e` minus occurrences of `e^{-1}`.
    pub fn t(&self, e: OrientedEdge) -> i64 {
        self.edges()
            .iter()
            .map(|&f| {
                if f == e {
                    1
                } else if f == e.inv() {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }

    pub fn validate(&self, g: &LatticeGeometry) -> Result<()> {
        match self {
            LatticeString::Loop(l) => {
                let w = l.edges();
                if w.is_empty() {
                    return Ok(());
                }
                let p = LatticePath::new(g, g.u(w[0]), w.to_vec())?;
                if !p.is_closed(g) {
                    return Err(Error::Domain("loop is not closed".into()));
                }
                if cyclic_reduce(w).len() != w.len() {
                    return Err(Error::Domain("loop has a backtrack".into()));
                }
                Ok(())
            }
            LatticeString::Line(l) => {
                let p = LatticePath::new(g, l.start, l.edges.clone())?;
                if p.end(g) != l.end {
                    return Err(Error::Domain("line end point is inconsistent".into()));
                }
                if reduce_word(&l.edges).len() != l.edges.len() {
                    return Err(Error::Domain("line has an interior backtrack".into()));
                }
                Ok(())
            }
        }
    }
}

/// The string `[p]`, as a loop or a line.
pub fn nonbacktracking_core(
    g: &LatticeGeometry,
    p: &LatticePath,
    kind: StringKind,
) -> Result<LatticeString> {
    match kind {
        StringKind::Loop => Ok(LatticeString::Loop(Loop::from_closed_path(g, p)?)),
        StringKind::Line => Ok(LatticeString::Line(Line::from_path(g, p))),
    }
}

/// Ordered sequence of strings, kept free of null-loops.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StringCollection {
    strings: Vec<LatticeString>,
}

impl StringCollection {
    pub fn new(strings: Vec<LatticeString>) -> Self {
        normalize_collection(strings)
    }

    pub fn strings(&self) -> &[LatticeString] {
        &self.strings
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// `r(s)` at edge `e`.
    pub fn r(&self, e: OrientedEdge) -> usize {
        self.strings.iter().map(|s| s.r(e)).sum()
    }

    /// `t(e)`.
    pub fn t(&self, e: OrientedEdge) -> i64 {
        self.strings.iter().map(|s| s.t(e)).sum()
    }

    /// `r_x(s)`: number of line endpoint incidences at `x`.
    pub fn r_x(&self, x: Vertex) -> usize {
        self.strings
            .iter()
            .filter_map(|s| s.as_line())
            .map(|l| (l.start == x) as usize + (l.end == x) as usize)
            .sum()
    }
}

pub fn normalize_collection(strings: Vec<LatticeString>) -> StringCollection {
    StringCollection {
        strings: strings.into_iter().filter(|s| !s.is_null_loop()).collect(),
    }
}

const AXIS_NAMES: [&str; 4] = ["x", "y", "z", "w"];

fn axis_name(d: usize, a: usize) -> String {
    if d <= 4 {
        AXIS_NAMES[a].to_string()
    } else {
        format!("a{a}")
    }
}

fn render_vertex(g: &LatticeGeometry, x: Vertex) -> String {
    let c: Vec<String> = g.coords(x).iter().map(|c| c.to_string()).collect();
    format!("({})", c.join(","))
}

fn render_steps(g: &LatticeGeometry, edges: &[OrientedEdge]) -> String {
    let mut s = String::new();
    for &e in edges {
        let _ = write!(
            s,
            "{}{}",
            if e.is_positive() { '+' } else { '-' },
            axis_name(g.dim(), g.axis(e))
        );
    }
    s
}

pub fn render_string(g: &LatticeGeometry, s: &LatticeString) -> String {
    match s {
        LatticeString::Loop(l) => {
            if l.is_null() {
                "loop".to_string()
            } else {
                format!(
                    "loop {} {}",
                    render_vertex(g, g.u(l.edges()[0])),
                    render_steps(g, l.edges())
                )
            }
        }
        LatticeString::Line(l) if l.is_null() => format!("nullline {}", render_vertex(g, l.start)),
        LatticeString::Line(l) => format!(
            "line {} {}",
            render_vertex(g, l.start),
            render_steps(g, l.edges())
        ),
    }
}

pub fn render_edge(g: &LatticeGeometry, e: OrientedEdge) -> String {
    format!("{} {}", render_vertex(g, g.u(e)), render_steps(g, &[e]))
}

pub fn render_collection(g: &LatticeGeometry, s: &[LatticeString]) -> String {
    s.iter()
        .map(|x| render_string(g, x))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Character cursor for the small grammars in this crate.
pub(crate) struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, self.pos + 1, msg)
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn word(&mut self) -> String {
        self.skip_ws();
        let st = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_alphanumeric() || self.chars[self.pos] == '_')
        {
            self.pos += 1;
        }
        self.chars[st..self.pos].iter().collect()
    }

    pub(crate) fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let st = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if st == self.pos {
            return Err(self.err("expected a number"));
        }
        let s: String = self.chars[st..self.pos].iter().collect();
        s.parse()
            .map_err(|_| Error::parse(self.line, st + 1, "number out of range"))
    }

    pub(crate) fn vertex(&mut self, g: &LatticeGeometry) -> Result<Vertex> {
        self.expect('(')?;
        let st = self.pos;
        let mut coords = Vec::new();
        loop {
            coords.push(self.number()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.err("expected ',' or ')'")),
            }
        }
        g.vertex(&coords)
            .map_err(|e| Error::parse(self.line, st + 1, e.to_string()))
    }

    /// One step `+axis` / `-axis`, if present.
    pub(crate) fn step(&mut self, g: &LatticeGeometry) -> Result<Option<(usize, bool)>> {
        self.skip_ws();
        let forward = match self.peek() {
            Some('+') => true,
            Some('-') => false,
            _ => return Ok(None),
        };
        let st = self.pos;
        self.pos += 1;
        let name: String = {
            let s = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                // axis names are a single letter or a<digits>
                if self.pos > s && !self.chars[self.pos].is_ascii_digit() {
                    break;
                }
                self.pos += 1;
            }
            self.chars[s..self.pos].iter().collect()
        };
        let axis = match name.as_str() {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            "w" => Some(3),
            n if n.len() > 1 && n.starts_with('a') => n[1..].parse().ok(),
            _ => None,
        };
        match axis {
            Some(a) if a < g.dim() => Ok(Some((a, forward))),
            _ => Err(Error::parse(
                self.line,
                st + 1,
                format!("unknown axis '{name}'"),
            )),
        }
    }

    pub(crate) fn steps(&mut self, g: &LatticeGeometry, start: Vertex) -> Result<LatticePath> {
        let mut at = start;
        let mut edges = Vec::new();
        while let Some((a, fwd)) = self.step(g)? {
            let e = g.edge(at, a, fwd);
            at = g.v(e);
            edges.push(e);
        }
        Ok(LatticePath { start, edges })
    }
}

pub(crate) fn parse_string_at(
    text: &str,
    g: &LatticeGeometry,
    line: usize,
) -> Result<LatticeString> {
    let mut c = Cursor::new(text, line);
    let kw = c.word();
    let s = match kw.as_str() {
        "loop" => {
            if c.at_end() {
                return Ok(LatticeString::Loop(Loop::null()));
            }
            let x = c.vertex(g)?;
            let p = c.steps(g, x)?;
            if !p.is_closed(g) {
                return Err(c.err("loop path does not close"));
            }
            LatticeString::Loop(Loop::from_cyclic_word(&p.edges))
        }
        "line" => {
            let x = c.vertex(g)?;
            let p = c.steps(g, x)?;
            LatticeString::Line(Line::from_path(g, &p))
        }
        "nullline" => LatticeString::Line(Line::null(c.vertex(g)?)),
        other => {
            return Err(Error::parse(
                line,
                1,
                format!("expected loop, line or nullline, found '{other}'"),
            ))
        }
    };
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(s)
}

pub fn parse_string(text: &str, g: &LatticeGeometry) -> Result<LatticeString> {
    parse_string_at(text, g, 1)
}

/// Parse an oriented edge written as `(c1,...,cd) ±axis`.
pub fn parse_edge(text: &str, g: &LatticeGeometry) -> Result<OrientedEdge> {
    parse_edge_at(text, g, 1)
}

pub(crate) fn parse_edge_at(text: &str, g: &LatticeGeometry, line: usize) -> Result<OrientedEdge> {
    let mut c = Cursor::new(text, line);
    let x = c.vertex(g)?;
    let (a, fwd) = c.step(g)?.ok_or_else(|| c.err("expected an axis step"))?;
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(g.edge(x, a, fwd))
}

pub fn parse_vertex(text: &str, g: &LatticeGeometry) -> Result<Vertex> {
    let mut c = Cursor::new(text, 1);
    let x = c.vertex(g)?;
    if !c.at_end() {
        return Err(c.err("unexpected trailing input"));
    }
    Ok(x)
}

/// A named group of strings from a strings file.
#[derive(Clone, Debug)]
pub struct NamedCollection {
    pub name: String,
    pub strings: Vec<LatticeString>,
}

/// Parse a strings file: groups separated by blank lines, each optionally headed by `@name`.
/// Unnamed groups are called `#1`, `#2`, ... in file order. `#` starts a comment.
pub fn parse_collections(text: &str, g: &LatticeGeometry) -> Result<Vec<NamedCollection>> {
    let mut out: Vec<NamedCollection> = Vec::new();
    let mut current: Option<NamedCollection> = None;
    let mut unnamed = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            if let Some(c) = current.take() {
                out.push(c);
            }
            continue;
        }
        if let Some(name) = line.strip_prefix('@') {
            if let Some(c) = current.take() {
                out.push(c);
            }
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(i + 1, 2, "empty collection name"));
            }
            current = Some(NamedCollection {
                name: name.to_string(),
                strings: Vec::new(),
            });
            continue;
        }
        let s = parse_string_at(line, g, i + 1)?;
        match current.as_mut() {
            Some(c) => c.strings.push(s),
            None => {
                unnamed += 1;
                current = Some(NamedCollection {
                    name: format!("#{unnamed}"),
                    strings: vec![s],
                });
            }
        }
    }
    if let Some(c) = current.take() {
        out.push(c);
    }
    Ok(out)
}

pub(crate) fn strip_comment(s: &str) -> &str {
    match s.find('#') {
        // `#k` collection references are not comments
        Some(k) if s[k + 1..].starts_with(|c: char| c.is_ascii_digit()) => s,
        Some(k) => &s[..k],
        None => s,
    }
}

//! Periodic hypercubic lattice with oriented edges and plaquettes.
//!
//! An oriented edge is stored as the index of its underlying positive link
//! together with a reversal bit, so inversion is a single xor. The positive
//! link `(x, a)` runs from `x` to `x + e_a` (mod L); a wraparound link keeps
//! that orientation, so positivity means "along increasing coordinate".

use crate::error::{Error, Result};
use std::fmt;

pub type Vertex = usize;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrientedEdge(u32);

impl OrientedEdge {
    #[inline]
    pub fn from_link(link: usize, reversed: bool) -> Self {
        OrientedEdge(((link as u32) << 1) | reversed as u32)
    }

    /// Index of the underlying positive link.
    #[inline]
    pub fn link(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn inv(self) -> Self {
        OrientedEdge(self.0 ^ 1)
    }

    /// Integer code used for canonical ordering.
    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }
}

impl fmt::Debug for OrientedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E{}{}",
            self.link(),
            if self.is_positive() { "+" } else { "-" }
        )
    }
}

/// A unit square loop `e1 e2 e3 e4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Plaquette {
    pub edges: [OrientedEdge; 4],
    /// Counterclockwise in the (lower axis, higher axis) plane.
    pub positive: bool,
}

impl Plaquette {
    pub fn inverse(&self) -> Plaquette {
        let e = self.edges;
        Plaquette {
            edges: [e[3].inv(), e[2].inv(), e[1].inv(), e[0].inv()],
            positive: !self.positive,
        }
    }

    pub fn position_of(&self, e: OrientedEdge) -> Option<usize> {
        self.edges.iter().position(|&f| f == e)
    }

    /// The four edges rotated so that position `k` comes first.
    pub fn rotated(&self, k: usize) -> [OrientedEdge; 4] {
        let e = self.edges;
        [e[k % 4], e[(k + 1) % 4], e[(k + 2) % 4], e[(k + 3) % 4]]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeGeometry {
    d: usize,
    l: usize,
    nv: usize,
    /// `shift[x * 2d + 2a]` is `x + e_a`, `shift[x * 2d + 2a + 1]` is `x - e_a`.
    shift: Vec<Vertex>,
}

impl LatticeGeometry {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::Parameter(format!("dimension must be >= 1, got {d}")));
        }
        if l < 2 {
            return Err(Error::Parameter(format!(
                "side length must be >= 2, got {l}"
            )));
        }
        let nv = l
            .checked_pow(d as u32)
            .filter(|&n| n <= (u32::MAX >> 4) as usize)
            .ok_or_else(|| Error::Parameter(format!("lattice {l}^{d} is too large")))?;
        let mut shift = vec![0; nv * 2 * d];
        let mut stride = 1;
        for a in 0..d {
            for x in 0..nv {
                let c = (x / stride) % l;
                let up = if c + 1 == l {
                    x + stride - l * stride
                } else {
                    x + stride
                };
                let down = if c == 0 {
                    x + (l - 1) * stride
                } else {
                    x - stride
                };
                shift[x * 2 * d + 2 * a] = up;
                shift[x * 2 * d + 2 * a + 1] = down;
            }
            stride *= l;
        }
        Ok(LatticeGeometry { d, l, nv, shift })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.nv
    }

    /// `|E+|`.
    #[inline]
    pub fn num_links(&self) -> usize {
        self.nv * self.d
    }

    /// `|P+|`.
    pub fn num_plaquettes(&self) -> usize {
        self.nv * self.d * (self.d - 1) / 2
    }

    pub fn vertex(&self, coords: &[usize]) -> Result<Vertex> {
        if coords.len() != self.d {
            return Err(Error::Parameter(format!(
                "expected {} coordinates, got {}",
                self.d,
                coords.len()
            )));
        }
        let mut x = 0;
        let mut stride = 1;
        for &c in coords {
            if c >= self.l {
                return Err(Error::Parameter(format!(
                    "coordinate {c} out of range 0..{}",
                    self.l
                )));
            }
            x += c * stride;
            stride *= self.l;
        }
        Ok(x)
    }

    pub fn coords(&self, x: Vertex) -> Vec<usize> {
        let mut c = Vec::with_capacity(self.d);
        let mut r = x;
        for _ in 0..self.d {
            c.push(r % self.l);
            r /= self.l;
        }
        c
    }

    pub fn check_vertex(&self, x: Vertex) -> Result<()> {
        if x < self.nv {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "vertex {x} is not in the lattice"
            )))
        }
    }

    pub fn check_edge(&self, e: OrientedEdge) -> Result<()> {
        if e.link() < self.num_links() {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "edge {e:?} is not in the lattice"
            )))
        }
    }

    /// `x + e_a` for `forward`, `x - e_a` otherwise.
    #[inline]
    pub fn step(&self, x: Vertex, axis: usize, forward: bool) -> Vertex {
        self.shift[x * 2 * self.d + 2 * axis + (!forward) as usize]
    }

    /// The positive link based at `x` along `axis`.
    #[inline]
    pub fn link_index(&self, x: Vertex, axis: usize) -> usize {
        x * self.d + axis
    }

    /// The oriented edge leaving `x` along `axis` in direction `forward`.
    #[inline]
    pub fn edge(&self, x: Vertex, axis: usize, forward: bool) -> OrientedEdge {
        if forward {
            OrientedEdge::from_link(self.link_index(x, axis), false)
        } else {
            OrientedEdge::from_link(self.link_index(self.step(x, axis, false), axis), true)
        }
    }

    /// Base vertex of the underlying positive link.
    #[inline]
    pub fn base(&self, e: OrientedEdge) -> Vertex {
        e.link() / self.d
    }

    #[inline]
    pub fn axis(&self, e: OrientedEdge) -> usize {
        e.link() % self.d
    }

    /// Beginning point `u(e)`.
    #[inline]
    pub fn u(&self, e: OrientedEdge) -> Vertex {
        let b = self.base(e);
        if e.is_positive() {
            b
        } else {
            self.step(b, self.axis(e), true)
        }
    }

    /// Ending point `v(e)`.
    #[inline]
    pub fn v(&self, e: OrientedEdge) -> Vertex {
        self.u(e.inv())
    }

    /// The positive plaquette with lower-left corner `x` in the `(a, b)` plane, `a < b`.
    pub fn positive_plaquette(&self, x: Vertex, a: usize, b: usize) -> Plaquette {
        debug_assert!(a < b);
        let xa = self.step(x, a, true);
        let xb = self.step(x, b, true);
        let l = |y: Vertex, ax: usize| OrientedEdge::from_link(self.link_index(y, ax), false);
        Plaquette {
            edges: [l(x, a), l(xa, b), l(xb, a).inv(), l(x, b).inv()],
            positive: true,
        }
    }

    /// All of `P+`.
    pub fn positive_plaquettes(&self) -> Vec<Plaquette> {
        let mut out = Vec::with_capacity(self.num_plaquettes());
        for x in 0..self.nv {
            for a in 0..self.d {
                for b in a + 1..self.d {
                    out.push(self.positive_plaquette(x, a, b));
                }
            }
        }
        out
    }

    /// Plaquettes `p` (either orientation) with `p ≻ e`, with the position of `e` in `p`.
    pub fn plaquettes_through(&self, e: OrientedEdge) -> Result<Vec<(Plaquette, usize)>> {
        self.check_edge(e)?;
        Ok(self.plaquettes_through_unchecked(e))
    }

    pub(crate) fn plaquettes_through_unchecked(&self, e: OrientedEdge) -> Vec<(Plaquette, usize)> {
        let x = self.base(e);
        let a = self.axis(e);
        let mut out = Vec::with_capacity(2 * (self.d - 1));
        for b in 0..self.d {
            if b == a {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for corner in [x, self.step(x, b, false)] {
                let p = self.positive_plaquette(corner, lo, hi);
                let (p, k) = match p.position_of(e) {
                    Some(k) => (p, k),
                    None => {
                        let q = p.inverse();
                        let k = q.position_of(e).expect("plaquette must contain the link");
                        (q, k)
                    }
                };
                out.push((p, k));
            }
        }
        out
    }

    /// Oriented edges `e` with `u(e) = x`.
    pub fn edges_at_site(&self, x: Vertex) -> Result<Vec<OrientedEdge>> {
        self.check_vertex(x)?;
        Ok(self.edges_at_site_unchecked(x))
    }

    pub(crate) fn edges_at_site_unchecked(&self, x: Vertex) -> Vec<OrientedEdge> {
        let mut out = Vec::with_capacity(2 * self.d);
        for a in 0..self.d {
            out.push(self.edge(x, a, true));
            out.push(self.edge(x, a, false));
        }
        out
    }

    /// Translate a vertex by a lattice vector.
    pub fn translate(&self, x: Vertex, by: &[usize]) -> Vertex {
        let mut y = x;
        for (a, &k) in by.iter().enumerate() {
            for _ in 0..k % self.l {
                y = self.step(y, a, true);
            }
        }
        y
    }

    /// Translate an oriented edge by a lattice vector.
    pub fn translate_edge(&self, e: OrientedEdge, by: &[usize]) -> OrientedEdge {
        let b = self.translate(self.base(e), by);
        OrientedEdge::from_link(self.link_index(b, self.axis(e)), !e.is_positive())
    }

    pub fn all_edges(&self) -> impl Iterator<Item = OrientedEdge> + '_ {
        (0..self.num_links()).flat_map(|l| {
            [
                OrientedEdge::from_link(l, false),
                OrientedEdge::from_link(l, true),
            ]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let g = LatticeGeometry::new(2, 4).unwrap();
        assert_eq!(g.num_vertices(), 16);
        assert_eq!(g.num_links(), 32);
        assert_eq!(g.num_plaquettes(), 16);
        let g = LatticeGeometry::new(3, 2).unwrap();
        assert_eq!(g.num_links(), 24);
        assert_eq!(g.num_plaquettes(), 24);
        assert!(LatticeGeometry::new(2, 0).is_err());
        assert!(LatticeGeometry::new(0, 3).is_err());
    }

    #[test]
    fn plaquettes_are_closed_squares() {
        let g = LatticeGeometry::new(3, 3).unwrap();
        for p in g.positive_plaquettes() {
            for i in 0..4 {
                assert_eq!(g.v(p.edges[i]), g.u(p.edges[(i + 1) % 4]));
            }
            let mut axes: Vec<usize> = p.edges.iter().map(|&e| g.axis(e)).collect();
            axes.sort();
            axes.dedup();
            assert_eq!(axes.len(), 2);
        }
    }

    #[test]
    fn inverse_edge_swaps_endpoints() {
        let g = LatticeGeometry::new(2, 3).unwrap();
        for e in g.all_edges() {
            assert_eq!(e.inv().inv(), e);
            assert_eq!(g.u(e.inv()), g.v(e));
        }
    }

    #[test]
    fn through_counts() {
        for d in 1..=4 {
            let g = LatticeGeometry::new(d, 3).unwrap();
            for e in g.all_edges() {
                assert_eq!(g.plaquettes_through(e).unwrap().len(), 2 * (d - 1));
            }
        }
    }
}

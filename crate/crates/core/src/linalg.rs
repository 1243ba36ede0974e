//! Small dense complex matrices and vectors with inline storage.
//!
//! Every group element and Higgs value in the crate lives in one of these.
//! Storage is a fixed `MAX_N x MAX_N` array so that hot loops never touch the
//! allocator; only the leading `n x n` block is meaningful.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

pub type C64 = Complex64;

/// Largest supported matrix size.
pub const MAX_N: usize = 6;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy)]
pub struct Mat {
    n: usize,
    a: [C64; MAX_N * MAX_N],
}

#[derive(Clone, Copy)]
pub struct CVec {
    n: usize,
    a: [C64; MAX_N],
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_N, "matrix size {n} exceeds MAX_N = {MAX_N}");
        Mat {
            n,
            a: [ZERO; MAX_N * MAX_N],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Matrix with a single nonzero entry `z` at `(i, j)`.
    pub fn unit(n: usize, i: usize, j: usize, z: C64) -> Self {
        let mut m = Mat::zeros(n);
        m[(i, j)] = z;
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self[(i, j)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] *= z;
            }
        }
        m
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// `self * other^*` without forming the adjoint.
    #[inline]
    pub fn mul_adj(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.a[i * MAX_N + k] * other.a[j * MAX_N + k].conj();
                }
                m.a[i * MAX_N + j] = s;
            }
        }
        m
    }

    /// `Re Tr(self * other)`.
    pub fn re_trace_mul(&self, other: &Mat) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * MAX_N + k];
                let y = other.a[k * MAX_N + i];
                s += x.re * y.re - x.im * y.im;
            }
        }
        s
    }

    /// Hilbert-Schmidt inner product `Re Tr(self other^*)`.
    pub fn inner(&self, other: &Mat) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let x = self[(i, j)];
                let y = other[(i, j)];
                s += x.re * y.re + x.im * y.im;
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec::from_fn(self.n, |i| self[(i, j)])
    }

    pub fn set_column(&mut self, j: usize, v: &CVec) {
        for i in 0..self.n {
            self[(i, j)] = v[i];
        }
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut m = *self;
        let mut det = ONE;
        for c in 0..n {
            let mut p = c;
            for r in c + 1..n {
                if m[(r, c)].norm() > m[(p, c)].norm() {
                    p = r;
                }
            }
            if m[(p, c)].norm() == 0.0 {
                return ZERO;
            }
            if p != c {
                for k in 0..n {
                    let t = m[(c, k)];
                    m[(c, k)] = m[(p, k)];
                    m[(p, k)] = t;
                }
                det = -det;
            }
            let piv = m[(c, c)];
            det *= piv;
            for r in c + 1..n {
                let f = m[(r, c)] / piv;
                for k in c..n {
                    let t = m[(c, k)];
                    m[(r, k)] -= f * t;
                }
            }
        }
        det
    }

    /// Modified Gram-Schmidt on the columns, with one reorthogonalization pass.
    pub fn orthonormalize_columns(&self) -> Mat {
        let n = self.n;
        let mut q = *self;
        for j in 0..n {
            let mut v = q.column(j);
            for _ in 0..2 {
                for k in 0..j {
                    let u = q.column(k);
                    let c = u.dot(&v);
                    v = v - u.scale(c);
                }
            }
            let nv = v.norm();
            q.set_column(j, &v.scale_re(1.0 / nv));
        }
        q
    }

    /// Matrix exponential by scaling and squaring with a Taylor kernel.
    pub fn exp(&self) -> Mat {
        let n = self.n;
        let norm = self.norm();
        let mut s = 0;
        let mut scale = 1.0;
        while norm * scale > 0.25 {
            scale *= 0.5;
            s += 1;
        }
        let x = self.scale_re(scale);
        let mut term = Mat::identity(n);
        let mut sum = Mat::identity(n);
        for k in 1..=14 {
            term = (term * x).scale_re(1.0 / k as f64);
            sum += term;
            if term.max_abs() < 1e-18 {
                break;
            }
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    /// Distance from unitarity, `max |Q^*Q - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint() * *self;
        (p - Mat::identity(self.n)).max_abs()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self[(i, j)].im.abs() <= tol))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * MAX_N + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * MAX_N + j]
    }
}

impl Mul for Mat {
    type Output = Mat;
    #[inline]
    fn mul(self, rhs: Mat) -> Mat {
        <&Mat as Mul<&Mat>>::mul(&self, &rhs)
    }
}

impl Mul<&Mat> for &Mat {
    type Output = Mat;
    #[inline]
    fn mul(self, rhs: &Mat) -> Mat {
        let n = self.n;
        debug_assert_eq!(n, rhs.n);
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * MAX_N + k];
                for j in 0..n {
                    m.a[i * MAX_N + j] += x * rhs.a[k * MAX_N + j];
                }
            }
        }
        m
    }
}

impl Mul<CVec> for Mat {
    type Output = CVec;
    fn mul(self, v: CVec) -> CVec {
        let n = self.n;
        CVec::from_fn(n, |i| (0..n).map(|k| self.a[i * MAX_N + k] * v.a[k]).sum())
    }
}

impl Mul<C64> for Mat {
    type Output = Mat;
    fn mul(self, z: C64) -> Mat {
        self.scale(z)
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, x: f64) -> Mat {
        self.scale_re(x)
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(mut self, rhs: Mat) -> Mat {
        self += rhs;
        self
    }
}

impl AddAssign for Mat {
    fn add_assign(&mut self, rhs: Mat) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i * MAX_N + j] += rhs.a[i * MAX_N + j];
            }
        }
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(mut self, rhs: Mat) -> Mat {
        self -= rhs;
        self
    }
}

impl SubAssign for Mat {
    fn sub_assign(&mut self, rhs: Mat) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.a[i * MAX_N + j] -= rhs.a[i * MAX_N + j];
            }
        }
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale_re(-1.0)
    }
}

impl PartialEq for Mat {
    fn eq(&self, other: &Mat) -> bool {
        self.n == other.n && (0..self.n).all(|i| (0..self.n).all(|j| self[(i, j)] == other[(i, j)]))
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<C64>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)]).collect())
            .collect();
        f.debug_struct("Mat")
            .field("n", &self.n)
            .field("rows", &rows)
            .finish()
    }
}

impl CVec {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_N, "vector size {n} exceeds MAX_N = {MAX_N}");
        CVec {
            n,
            a: [ZERO; MAX_N],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> C64) -> Self {
        let mut v = CVec::zeros(n);
        for i in 0..n {
            v.a[i] = f(i);
        }
        v
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = CVec::zeros(n);
        v.a[k] = ONE;
        v
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `self^* other`.
    #[inline]
    pub fn dot(&self, other: &CVec) -> C64 {
        let mut s = ZERO;
        for i in 0..self.n {
            s += self.a[i].conj() * other.a[i];
        }
        s
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a[..self.n].iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, z: C64) -> Self {
        CVec::from_fn(self.n, |i| self.a[i] * z)
    }

    pub fn scale_re(&self, x: f64) -> Self {
        CVec::from_fn(self.n, |i| self.a[i] * x)
    }

    pub fn conj(&self) -> Self {
        CVec::from_fn(self.n, |i| self.a[i].conj())
    }

    pub fn normalized(&self) -> Self {
        self.scale_re(1.0 / self.norm())
    }

    /// Outer product `self other^*`.
    pub fn outer(&self, other: &CVec) -> Mat {
        Mat::from_fn(self.n, |i, j| self.a[i] * other.a[j].conj())
    }

    /// Row-vector product `row M`; `row` holds the entries of a row vector.
    #[inline]
    pub fn row_mul(row: &CVec, m: &Mat) -> CVec {
        let n = m.n;
        let mut out = CVec::zeros(n);
        for k in 0..n {
            let x = row.a[k];
            for j in 0..n {
                out.a[j] += x * m.a[k * MAX_N + j];
            }
        }
        out
    }

    /// Row-vector product with an adjoint, `row M^*`.
    #[inline]
    pub fn row_mul_adj(row: &CVec, m: &Mat) -> CVec {
        let n = m.n;
        let mut out = CVec::zeros(n);
        for j in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += row.a[k] * m.a[j * MAX_N + k].conj();
            }
            out.a[j] = s;
        }
        out
    }

    /// Plain bilinear product `sum_i self_i other_i` (no conjugation).
    #[inline]
    pub fn bilinear(&self, other: &CVec) -> C64 {
        let mut s = ZERO;
        for i in 0..self.n {
            s += self.a[i] * other.a[i];
        }
        s
    }

    pub fn max_im(&self) -> f64 {
        self.a[..self.n]
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for CVec {
    type Output = C64;
    #[inline]
    fn index(&self, i: usize) -> &C64 {
        &self.a[i]
    }
}

impl IndexMut<usize> for CVec {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.a[i]
    }
}

impl Add for CVec {
    type Output = CVec;
    fn add(self, rhs: CVec) -> CVec {
        CVec::from_fn(self.n, |i| self.a[i] + rhs.a[i])
    }
}

impl AddAssign for CVec {
    fn add_assign(&mut self, rhs: CVec) {
        for i in 0..self.n {
            self.a[i] += rhs.a[i];
        }
    }
}

impl Sub for CVec {
    type Output = CVec;
    fn sub(self, rhs: CVec) -> CVec {
        CVec::from_fn(self.n, |i| self.a[i] - rhs.a[i])
    }
}

impl Neg for CVec {
    type Output = CVec;
    fn neg(self) -> CVec {
        self.scale_re(-1.0)
    }
}

impl PartialEq for CVec {
    fn eq(&self, other: &CVec) -> bool {
        self.n == other.n && self.a[..self.n] == other.a[..other.n]
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.a[..self.n].iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Mat {
        let mut s = seed;
        Mat::from_fn(n, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let x = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let y = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            C64::new(x, y)
        })
    }

    #[test]
    fn det_of_product_multiplies() {
        let a = sample(4, 1);
        let b = sample(4, 2);
        let lhs = (a * b).det();
        let rhs = a.det() * b.det();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn exp_of_skew_hermitian_is_unitary() {
        let x = sample(3, 7);
        let skew = (x - x.adjoint()).scale_re(2.0);
        let u = skew.exp();
        assert!(u.unitarity_defect() < 1e-13);
        // det exp(X) = exp(tr X)
        assert!((u.det() - skew.trace().exp()).norm() < 1e-12);
    }

    #[test]
    fn gram_schmidt_gives_unitary() {
        let q = sample(5, 3).orthonormalize_columns();
        assert!(q.unitarity_defect() < 1e-13);
    }

    #[test]
    fn mul_adj_matches_explicit() {
        let a = sample(3, 4);
        let b = sample(3, 5);
        assert!((a.mul_adj(&b) - a * b.adjoint()).max_abs() < 1e-15);
        let v = CVec::from_fn(3, |i| C64::new(i as f64, 1.0));
        let r1 = CVec::row_mul_adj(&v, &b);
        let r2 = CVec::row_mul(&v, &b.adjoint());
        assert!((r1 - r2).norm() < 1e-15);
    }
}

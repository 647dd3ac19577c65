//! Dense square matrices and the small amount of numerical linear algebra the
//! rest of the crate is built on: cyclic Jacobi for symmetric eigenproblems and
//! LU with partial pivoting for general square systems.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// Square matrix stored in row-major order.
#[derive(Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                write!(f, "{:>24.16e}", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    /// Returns `None` when `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == n * n).then_some(Mat { n, data })
    }

    /// Panics on ragged input; intended for literals in code and tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "from_rows: matrix must be square");
            data.extend_from_slice(r);
        }
        Mat { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// (M + Mᵀ)/2.
    pub fn symmetrized(&self) -> Mat {
        let mut s = self.clone();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn scale(&self, a: f64) -> Mat {
        Mat { n: self.n, data: self.data.iter().map(|x| a * x).collect() }
    }

    /// self + a * other
    pub fn add_scaled(&self, a: f64, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n);
        Mat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.n, other.n, "matmul: dimension mismatch");
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Submatrix with the given row and column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat {
        assert_eq!(rows.len(), cols.len());
        let k = rows.len();
        let mut s = Mat::zeros(k);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                s[(a, b)] = self[(i, j)];
            }
        }
        s
    }

    pub fn lu(&self) -> Lu {
        Lu::new(self)
    }

    pub fn det(&self) -> f64 {
        self.lu().det()
    }

    /// `None` if the matrix is exactly singular at working precision.
    pub fn inverse(&self) -> Option<Mat> {
        self.lu().inverse()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        self.matmul(rhs)
    }
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    fn new(a: &Mat) -> Self {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Lu { lu, perm, sign, singular }
    }

    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        (0..self.lu.n).map(|i| self.lu[(i, i)]).product::<f64>() * self.sign
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        if self.singular {
            return None;
        }
        let n = self.lu.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat> {
        let n = self.lu.n;
        let mut inv = Mat::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }
}

/// Eigenvalues (descending) and eigenvectors (columns of `vectors`) of a
/// symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    /// Q · diag(d) · Qᵀ, symmetrized.
    pub fn compose(&self, d: &[f64]) -> Mat {
        let n = self.vectors.n;
        let q = &self.vectors;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[(i, k)] * d[k] * q[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for a symmetric matrix (only the upper triangle
/// is trusted; the input is symmetrized first).
///
/// A rotation is skipped when `|a_pq| <= eps * sqrt(|a_pp a_qq|)`, which keeps
/// small eigenvalues of graded positive definite matrices to high relative
/// accuracy. Iteration stops after a sweep with no rotation; at that point the
/// off-diagonal Frobenius norm is far below `1e-14 * ||A||_F`.
pub fn sym_eigen(a: &Mat) -> SymEigen {
    let n = a.n;
    let mut a = a.symmetrized();
    let mut v = Mat::identity(n);
    let floor = 1e-300_f64.max(1e-20 * a.frobenius());
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                if apq.abs() <= floor || apq.abs() <= f64::EPSILON * (app * aqq).abs().sqrt() {
                    if apq != 0.0 {
                        a[(p, q)] = 0.0;
                        a[(q, p)] = 0.0;
                    }
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let g = a[(r, p)];
                        let h = a[(r, q)];
                        let rp = g - s * (h + g * tau);
                        let rq = h + s * (g - h * tau);
                        a[(r, p)] = rp;
                        a[(p, r)] = rp;
                        a[(r, q)] = rq;
                        a[(q, r)] = rq;
                    }
                }
                for r in 0..n {
                    let g = v[(r, p)];
                    let h = v[(r, q)];
                    v[(r, p)] = g - s * (h + g * tau);
                    v[(r, q)] = h + s * (g - h * tau);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, dst)] = v[(r, src)];
        }
    }
    SymEigen { values, vectors }
}

/// Singular value decomposition K = U diag(σ) Vᵀ of a square matrix.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub sigma: Vec<f64>,
    pub v: Mat,
}

/// One-sided (Hestenes) Jacobi SVD. Singular values come out with small
/// relative error even when K is ill-conditioned, which is what makes
/// K ↦ (KᵀK)^t accurate without forming KᵀK.
///
/// Returns `None` if K is numerically singular.
pub fn svd_jacobi(k: &Mat) -> Option<Svd> {
    let n = k.n;
    let mut a = k.clone();
    let mut v = Mat::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..n {
                    alpha += a[(r, p)] * a[(r, p)];
                    beta += a[(r, q)] * a[(r, q)];
                    gamma += a[(r, p)] * a[(r, q)];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (zeta * zeta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for r in 0..n {
                        let x = m[(r, p)];
                        let y = m[(r, q)];
                        m[(r, p)] = c * x - s * y;
                        m[(r, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norm = k.frobenius();
    let mut sigma = Vec::with_capacity(n);
    for j in 0..n {
        let sj = (0..n).map(|r| a[(r, j)] * a[(r, j)]).sum::<f64>().sqrt();
        if !(sj > f64::EPSILON * norm * n as f64) {
            return None;
        }
        for r in 0..n {
            a[(r, j)] /= sj;
        }
        sigma.push(sj);
    }
    Some(Svd { u: a, sigma, v })
}

/// Orthogonal polar factor U Vᵀ of a nonsingular square matrix.
pub fn polar_factor(k: &Mat) -> Option<Mat> {
    svd_jacobi(k).map(|s| s.u.matmul(&s.v.transpose()))
}

/// All k-element subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// k-th compound matrix of an arbitrary square matrix: the entry at
/// (I, J) is det A[I, J], with subsets in lexicographic order.
///
/// Panics if `k` is not in `1..=n`.
pub fn compound_mat(a: &Mat, k: usize) -> Mat {
    assert!(k >= 1 && k <= a.n, "compound order out of range");
    let subsets = combinations(a.n, k);
    let dim = subsets.len();
    let mut out = Mat::zeros(dim);
    for (r, rows) in subsets.iter().enumerate() {
        for (c, cols) in subsets.iter().enumerate() {
            out[(r, c)] = a.submatrix(rows, cols).det();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_is_exact() {
        let e = sym_eigen(&Mat::from_diag(&[1.0, 3.0, 2.0]));
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = Mat::from_rows(&[&[4.0, 1.0, -2.0], &[1.0, 2.0, 0.5], &[-2.0, 0.5, 3.0]]);
        let e = sym_eigen(&a);
        let r = e.compose(&e.values);
        assert!((&r - &a).frobenius() <= 1e-14 * a.frobenius());
        let qtq = e.vectors.transpose().matmul(&e.vectors);
        assert!((&qtq - &Mat::identity(3)).frobenius() < 1e-14);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn jacobi_zero_diagonal() {
        let t = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = sym_eigen(&t);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn polar_factor_of_product() {
        let q = Mat::from_rows(&[&[0.6, -0.8, 0.0], &[0.8, 0.6, 0.0], &[0.0, 0.0, 1.0]]);
        let p = Mat::from_rows(&[&[4.0, 1.0, -2.0], &[1.0, 2.0, 0.5], &[-2.0, 0.5, 3.0]]);
        let w = polar_factor(&q.matmul(&p)).unwrap();
        assert!((&w - &q).frobenius() < 1e-14);
        assert!(polar_factor(&Mat::from_diag(&[1.0, 0.0])).is_none());
        let svd = svd_jacobi(&p).unwrap();
        let mut us = svd.u.clone();
        for j in 0..3 {
            for r in 0..3 {
                us[(r, j)] *= svd.sigma[j];
            }
        }
        assert!((&us.matmul(&svd.v.transpose()) - &p).frobenius() < 1e-14 * p.frobenius());
    }

    #[test]
    fn lu_det_and_inverse() {
        let a = Mat::from_rows(&[&[0.0, 2.0], &[3.0, 1.0]]);
        assert!((a.det() + 6.0).abs() < 1e-15);
        let inv = a.inverse().unwrap();
        assert!((&a.matmul(&inv) - &Mat::identity(2)).frobenius() < 1e-15);
        assert!(Mat::zeros(2).inverse().is_none());
    }

    #[test]
    fn combinations_lexicographic() {
        assert_eq!(combinations(4, 2), vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3]
        ]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
    }
}

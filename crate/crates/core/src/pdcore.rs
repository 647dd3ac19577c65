//! Symmetric and positive definite matrices, matrix functions, distances on
//! the positive cone, order relations and compound matrices.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{compound_mat, polar_factor, svd_jacobi, sym_eigen, Mat, SymEigen};

/// Default relative tolerance for order and equality comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Real symmetric matrix. Symmetry is exact: inputs are averaged with their
/// transpose on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: Mat,
}

impl SymMatrix {
    pub fn new(m: Mat) -> Self {
        assert!(m.n() >= 1, "SymMatrix: dimension must be positive");
        SymMatrix { m: m.symmetrized() }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        let len = data.len();
        let m = Mat::from_row_major(n, data)
            .ok_or(Error::DimensionMismatch { expected: n * n, got: len })?;
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !m.is_finite() {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        Ok(SymMatrix::new(m))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix { m: Mat::zeros(n) }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix { m: Mat::identity(n) }
    }

    pub fn diag(d: &[f64]) -> Self {
        SymMatrix { m: Mat::from_diag(d) }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.m
    }

    pub fn into_mat(self) -> Mat {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn eigen(&self) -> SymEigen {
        sym_eigen(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    /// Functional calculus for a general symmetric matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let e = self.eigen();
        let d = mapped_values(&e.values, f)?;
        Ok(SymMatrix { m: e.compose(&d) })
    }

    pub fn exp(&self) -> Result<SpdMatrix> {
        let e = self.eigen();
        SpdMatrix::from_eigen_map(&e, f64::exp)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: &self.m - &other.m }
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix { m: self.m.scale(a) }
    }

    pub fn add_scaled(&self, a: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: self.m.add_scaled(a, &other.m) }
    }

    pub fn frobenius(&self) -> f64 {
        self.m.frobenius()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let v = self.eigenvalues();
        v[0].abs().max(v[v.len() - 1].abs())
    }

    pub fn min_eig(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn max_eig(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.clone())
    }
}

fn mapped_values(values: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&l| {
            let v = f(l);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain { eigenvalue: l, value: v })
            }
        })
        .collect()
}

/// Symmetric positive definite matrix with a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    sym: SymMatrix,
    eig: OnceLock<SymEigen>,
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.sym == other.sym
    }
}

fn check_spd(values: &[f64]) -> Result<()> {
    let n = values.len() as f64;
    let max = values[0];
    let min = *values.last().unwrap();
    if !(max.is_finite() && min.is_finite()) || max <= 0.0 || min <= n * f64::EPSILON * max {
        return Err(Error::NotPositiveDefinite { min_eig: min, max_eig: max });
    }
    Ok(())
}

impl SpdMatrix {
    /// Validates strict positive definiteness: `min eig > n * eps * max eig`.
    pub fn new(sym: SymMatrix) -> Result<Self> {
        if !sym.m.is_finite() {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        let e = sym.eigen();
        check_spd(&e.values)?;
        let recon = e.compose(&e.values);
        let err = (&recon - &sym.m).frobenius();
        if err > 1e-12 * sym.frobenius() {
            return Err(Error::InternalConsistency(format!(
                "eigendecomposition reconstruction error {err:e}"
            )));
        }
        let eig = OnceLock::new();
        let _ = eig.set(e);
        Ok(SpdMatrix { sym, eig })
    }

    pub fn from_mat(m: Mat) -> Result<Self> {
        SpdMatrix::new(SymMatrix::new(m))
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        SpdMatrix::new(SymMatrix::from_row_major(n, data)?)
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix::new(SymMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        SpdMatrix::new(SymMatrix::diag(d))
    }

    /// Q diag(f(λ)) Qᵀ with the eigensystem carried over (re-sorted).
    fn from_eigen_map(e: &SymEigen, f: impl Fn(f64) -> f64) -> Result<Self> {
        let d = mapped_values(&e.values, f)?;
        let m = e.compose(&d);
        let n = d.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
        let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        check_spd(&values)?;
        let mut vectors = Mat::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                vectors[(r, dst)] = e.vectors[(r, src)];
            }
        }
        let eig = OnceLock::new();
        let _ = eig.set(SymEigen { values, vectors });
        Ok(SpdMatrix { sym: SymMatrix { m }, eig })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.sym.n()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn as_mat(&self) -> &Mat {
        &self.sym.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sym.get(i, j)
    }

    pub fn eigen(&self) -> &SymEigen {
        self.eig.get_or_init(|| self.sym.eigen())
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen().values
    }

    pub fn min_eig(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    pub fn max_eig(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn det(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    pub fn log_det(&self) -> f64 {
        self.eigenvalues().iter().map(|l| l.ln()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.sym.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.sym.frobenius()
    }

    /// Matrix function with a positive result.
    pub fn map_spd(&self, f: impl Fn(f64) -> f64) -> Result<SpdMatrix> {
        SpdMatrix::from_eigen_map(self.eigen(), f)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let e = self.eigen();
        let d = mapped_values(&e.values, f)?;
        Ok(SymMatrix { m: e.compose(&d) })
    }

    pub fn powf(&self, t: f64) -> SpdMatrix {
        self.map_spd(|x| x.powf(t)).expect("power of SPD is SPD")
    }

    pub fn sqrt(&self) -> SpdMatrix {
        self.map_spd(f64::sqrt).expect("square root of SPD is SPD")
    }

    pub fn inv_sqrt(&self) -> SpdMatrix {
        self.map_spd(|x| 1.0 / x.sqrt()).expect("inverse square root of SPD is SPD")
    }

    pub fn inverse(&self) -> SpdMatrix {
        self.map_spd(|x| 1.0 / x).expect("inverse of SPD is SPD")
    }

    pub fn log(&self) -> SymMatrix {
        self.map(f64::ln).expect("log finite on SPD spectrum")
    }

    pub fn scale(&self, c: f64) -> Result<SpdMatrix> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be positive")));
        }
        self.map_spd(|x| c * x)
    }

    /// S · self · Sᵀ for a square `s` of matching size, without checking `s`.
    pub(crate) fn congruence_by(&self, s: &Mat) -> Result<SpdMatrix> {
        SpdMatrix::from_mat(s.matmul(self.as_mat()).matmul(&s.transpose()))
    }

    /// Weighted metric geometric mean self ♯_t other.
    ///
    /// With K = B^{1/2} A^{-1/2} = U Σ Vᵀ (A = self, B = other),
    /// A^{-1/2} B A^{-1/2} = KᵀK, so A ♯_t B = A^{1/2} V Σ^{2t} Vᵀ A^{1/2}.
    /// Working from the SVD of K avoids forming KᵀK, whose condition number
    /// is the square of that of K.
    pub fn sharp_t(&self, other: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
        same_dim(self.n(), other.n())?;
        let k = other.sqrt().as_mat().matmul(self.inv_sqrt().as_mat());
        let svd = svd_jacobi(&k).ok_or(Error::Singular { cond: f64::INFINITY })?;
        let d: Vec<f64> = svd.sigma.iter().map(|s| s.powf(2.0 * t)).collect();
        let mid = SymEigen { values: d.clone(), vectors: svd.v }.compose(&d);
        let h = self.sqrt();
        SpdMatrix::from_mat(h.as_mat().matmul(&mid).matmul(h.as_mat()))
    }

    /// self ♯ other, as B^{1/2} W A^{1/2} with W = U Vᵀ the orthogonal polar
    /// factor of K = B^{1/2} A^{-1/2}.
    pub fn sharp(&self, other: &SpdMatrix) -> Result<SpdMatrix> {
        same_dim(self.n(), other.n())?;
        let b = other.sqrt();
        let k = b.as_mat().matmul(self.inv_sqrt().as_mat());
        let w = polar_factor(&k).ok_or(Error::Singular { cond: f64::INFINITY })?;
        SpdMatrix::from_mat(b.as_mat().matmul(&w).matmul(self.sqrt().as_mat()))
    }
}

impl From<SpdMatrix> for SymMatrix {
    fn from(a: SpdMatrix) -> SymMatrix {
        a.sym
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, got: b });
    }
    Ok(())
}

/// Positive probability vector; renormalized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {i} = {x} is not positive")));
        }
        let s: f64 = w.iter().sum();
        Ok(WeightVector { w: w.into_iter().map(|x| x / s).collect() })
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m >= 1);
        WeightVector { w: vec![1.0 / m as f64; m] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Eigenvalues sorted descending.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn of(a: &SymMatrix) -> Self {
        Spectrum { values: a.eigenvalues() }
    }
}

/// A · x for a scalar function `f` applied through the spectrum of `a`.
pub fn matrix_fn(a: &SpdMatrix, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
    a.map(f)
}

/// S A Sᵀ for an invertible `s`.
pub fn congruence(s: &Mat, a: &SpdMatrix) -> Result<SpdMatrix> {
    same_dim(a.n(), s.n())?;
    let cond = match s.inverse() {
        Some(inv) => s.frobenius() * inv.frobenius(),
        None => f64::INFINITY,
    };
    if !(cond < 1e12) {
        return Err(Error::Singular { cond });
    }
    a.congruence_by(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    /// Frobenius norm of log(A^{-1/2} B A^{-1/2}).
    Riemannian,
    /// Spectral norm of log(A^{-1/2} B A^{-1/2}).
    Thompson,
    /// Bures-Wasserstein distance.
    Wasserstein,
    /// Spectral norm of log(A^{-1} ♯ B).
    SpectralSemi,
}

fn log_eigs_of_pencil(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    let c = b.congruence_by(a.inv_sqrt().as_mat())?;
    Ok(c.eigenvalues().iter().map(|l| l.ln()).collect())
}

pub fn distance(kind: DistanceKind, a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    same_dim(a.n(), b.n())?;
    Ok(match kind {
        DistanceKind::Riemannian => {
            log_eigs_of_pencil(a, b)?.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
        DistanceKind::Thompson => {
            log_eigs_of_pencil(a, b)?.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
        }
        DistanceKind::Wasserstein => {
            let h = a.sqrt();
            let mid = b.congruence_by(h.as_mat())?.sqrt();
            (a.trace() + b.trace() - 2.0 * mid.trace()).max(0.0).sqrt()
        }
        DistanceKind::SpectralSemi => {
            let g = a.inverse().sharp(b)?;
            g.eigenvalues().iter().fold(0.0_f64, |m, l| m.max(l.ln().abs()))
        }
    })
}

/// Thompson metric, the most common distance in this crate.
pub fn thompson(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    distance(DistanceKind::Thompson, a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderRelation {
    /// B − A positive semidefinite.
    Loewner,
    /// B − A positive definite.
    StrictLoewner,
    /// A^{-1} ♯ B ≥ I.
    Near,
    /// λⱼ(A) ≤ λⱼ(B) for all j.
    EigPointwise,
    /// Weak log-majorization plus equal determinants.
    LogMajor,
    /// Top-k eigenvalue products of A bounded by those of B.
    WeakLogMajor,
}

/// Outcome of an order test. `margin` is the worst slack with the tolerance
/// already applied: nonnegative iff the relation holds (strictly positive for
/// strict relations).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderReport {
    pub holds: bool,
    pub margin: f64,
}

/// Tests `A R B`. Tolerances for the Loewner and eigenvalue relations are
/// relative to `max(‖A‖₂, ‖B‖₂)`; the near and log relations are already
/// scale free.
pub fn order_check(relation: OrderRelation, a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<OrderReport> {
    same_dim(a.n(), b.n())?;
    let scale = || a.spectral_norm().max(b.spectral_norm());
    let report = |margin: f64, strict: bool| OrderReport {
        holds: if strict { margin > 0.0 } else { margin >= 0.0 },
        margin,
    };
    Ok(match relation {
        OrderRelation::Loewner => report(b.sub(a).min_eig() + tol * scale(), false),
        OrderRelation::StrictLoewner => report(b.sub(a).min_eig() - tol * scale(), true),
        OrderRelation::EigPointwise => {
            let la = a.eigenvalues();
            let lb = b.eigenvalues();
            let worst = la.iter().zip(&lb).map(|(x, y)| y - x).fold(f64::INFINITY, f64::min);
            report(worst + tol * scale(), false)
        }
        OrderRelation::Near => {
            let (sa, sb) = (a.to_spd()?, b.to_spd()?);
            let g = sa.inverse().sharp(&sb)?;
            report(g.min_eig() - 1.0 + tol, false)
        }
        OrderRelation::WeakLogMajor | OrderRelation::LogMajor => {
            let (sa, sb) = (a.to_spd()?, b.to_spd()?);
            let slack = log_major_slacks(sa.eigenvalues(), sb.eigenvalues());
            let weak = slack.iter().copied().fold(f64::INFINITY, f64::min) + tol.ln_1p();
            if relation == OrderRelation::WeakLogMajor {
                report(weak, false)
            } else {
                let dlog = slack[slack.len() - 1];
                let det = tol - dlog.exp_m1().abs();
                report(weak.min(det), false)
            }
        }
    })
}

/// Σ_{j≤k} log λⱼ(B) − Σ_{j≤k} log λⱼ(A) for k = 1..n (both descending).
pub fn log_major_slacks(la: &[f64], lb: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    la.iter()
        .zip(lb)
        .map(|(x, y)| {
            acc += y.ln() - x.ln();
            acc
        })
        .collect()
}

/// k-th compound (antisymmetric tensor power) of a symmetric matrix.
pub fn compound(a: &SymMatrix, k: usize) -> Result<SymMatrix> {
    if k == 0 || k > a.n() {
        return Err(Error::InvalidArgument(format!("compound order {k} outside 1..={}", a.n())));
    }
    Ok(SymMatrix::new(compound_mat(a.as_mat(), k)))
}

/// Compound of an SPD matrix, which is again SPD.
pub fn compound_spd(a: &SpdMatrix, k: usize) -> Result<SpdMatrix> {
    compound(a.as_sym(), k)?.to_spd()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn spd(rows: &[&[f64]]) -> SpdMatrix {
        SpdMatrix::from_mat(Mat::from_rows(rows)).unwrap()
    }

    #[test]
    fn sqrt_of_diagonal() {
        let a = SpdMatrix::diag(&[4.0, 9.0]).unwrap();
        let r = matrix_fn(&a, f64::sqrt).unwrap();
        assert_eq!(r, SymMatrix::diag(&[2.0, 3.0]));
    }

    #[test]
    fn identity_map_returns_input() {
        let a = spd(&[&[2.0, 0.3, 0.1], &[0.3, 1.0, -0.2], &[0.1, -0.2, 3.0]]);
        let r = matrix_fn(&a, |x| x).unwrap();
        assert!((&r.into_mat() - a.as_mat()).frobenius() < 1e-14);
    }

    #[test]
    fn matrix_fn_domain_error() {
        let a = SpdMatrix::diag(&[1.0, 2.0]).unwrap();
        let err = matrix_fn(&a, |x| if x > 1.5 { f64::NAN } else { x }).unwrap_err();
        assert!(matches!(err, Error::Domain { eigenvalue, .. } if eigenvalue == 2.0));
    }

    #[test]
    fn spd_rejects_indefinite_and_semidefinite() {
        assert!(matches!(
            SpdMatrix::diag(&[1.0, -1.0]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(SpdMatrix::diag(&[1.0, 0.0]).is_err());
        assert!(SpdMatrix::diag(&[1.0, 1e-17]).is_err());
        assert!(SpdMatrix::diag(&[1.0, 1e-15]).is_ok());
    }

    #[test]
    fn symmetric_construction_averages() {
        let s = SymMatrix::new(Mat::from_rows(&[&[1.0, 2.0], &[4.0, 1.0]]));
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn weights_renormalize() {
        let w = WeightVector::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
    }

    #[test]
    fn congruence_examples() {
        let a = spd(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let r = congruence(&Mat::identity(2), &a).unwrap();
        assert!((&r.as_mat().clone() - a.as_mat()).frobenius() < 1e-15);
        let r = congruence(&Mat::from_diag(&[2.0, 1.0]), &SpdMatrix::identity(2)).unwrap();
        assert_eq!(r.as_mat(), &Mat::from_diag(&[4.0, 1.0]));
        let sing = Mat::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(congruence(&sing, &a), Err(Error::Singular { .. })));
    }

    #[test]
    fn distance_examples() {
        let a = spd(&[&[2.0, 0.5], &[0.5, 1.0]]);
        for k in [
            DistanceKind::Riemannian,
            DistanceKind::Thompson,
            DistanceKind::Wasserstein,
            DistanceKind::SpectralSemi,
        ] {
            assert!(distance(k, &a, &a).unwrap() < 1e-7, "{k:?}");
        }
        let i = SpdMatrix::identity(2);
        let b = SpdMatrix::diag(&[E * E, 1.0 / E]).unwrap();
        let d = distance(DistanceKind::Riemannian, &i, &b).unwrap();
        assert!((d - 5f64.sqrt()).abs() < 1e-14);
        assert!((distance(DistanceKind::Thompson, &i, &b).unwrap() - 2.0).abs() < 1e-14);
        let w = distance(
            DistanceKind::Wasserstein,
            &SpdMatrix::diag(&[1.0]).unwrap(),
            &SpdMatrix::diag(&[9.0]).unwrap(),
        )
        .unwrap();
        assert!((w - 2.0).abs() < 1e-14);
        let c = SpdMatrix::identity(3);
        assert!(matches!(distance(DistanceKind::Thompson, &a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn order_examples() {
        let a = SymMatrix::diag(&[3.0, 2.0]);
        let b = SymMatrix::diag(&[4.0, 1.5]);
        assert!(order_check(OrderRelation::LogMajor, &a, &a, 1e-12).unwrap().holds);
        assert!(order_check(OrderRelation::LogMajor, &a, &b, 1e-12).unwrap().holds);
        assert!(!order_check(OrderRelation::LogMajor, &b, &a, 1e-12).unwrap().holds);
        assert!(!order_check(OrderRelation::Loewner, &a, &b, 1e-12).unwrap().holds);
        for (x, y) in [(1.0, 2.0), (2.0, 1.0), (3.0, 3.0)] {
            let r = order_check(
                OrderRelation::Near,
                &SymMatrix::diag(&[x]),
                &SymMatrix::diag(&[y]),
                1e-12,
            )
            .unwrap();
            assert_eq!(r.holds, x <= y);
        }
        let indef = SymMatrix::diag(&[1.0, -1.0]);
        assert!(order_check(OrderRelation::Near, &indef, &a, 1e-12).is_err());
        assert!(order_check(OrderRelation::Loewner, &indef, &a, 1e-12).unwrap().holds);
        assert!(!order_check(OrderRelation::StrictLoewner, &a, &a, 0.0).unwrap().holds);
        assert!(order_check(OrderRelation::Loewner, &a, &SymMatrix::identity(3), 0.0).is_err());
    }

    #[test]
    fn compound_examples() {
        let a = SymMatrix::new(Mat::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]));
        let c = compound(&a, 2).unwrap();
        assert_eq!(c.n(), 1);
        assert!((c.get(0, 0) - 5.0).abs() < 1e-14);
        let d = compound(&SymMatrix::diag(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(d, SymMatrix::diag(&[2.0, 3.0, 6.0]));
        assert!(compound(&a, 0).is_err());
        assert!(compound(&a, 3).is_err());
    }

    #[test]
    fn lazy_cache_is_shared_across_threads() {
        let a = SpdMatrix::from_mat(Mat::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]])).unwrap();
        let b = a.sqrt();
        std::thread::scope(|s| {
            let h: Vec<_> = (0..4).map(|_| s.spawn(|| b.eigenvalues().to_vec())).collect();
            let first = b.eigenvalues().to_vec();
            for t in h {
                assert_eq!(t.join().unwrap(), first);
            }
        });
    }
}

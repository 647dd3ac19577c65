//! Two-variable means: metric geometric, spectral geometric, Wasserstein and
//! the alternative means f(A⁻¹♯B) A f(A⁻¹♯B).
//!
//! The spectral mean A♮ₜB solves
//! `(1 − t) log(A ♯ X⁻¹) + t log(B ♯ X⁻¹) = 0`, i.e. the weight `1 − t` sits
//! on `A`. This is the convention used by the multivariable residual in
//! [`crate::speqsolve`] with weights `(1 − t, t)`.

use crate::error::{Error, Result};
use crate::pdcore::{same_dim, SpdMatrix, SymMatrix};
use crate::repfn::{Family, RepFunction};

fn check_unit(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} must lie in [0, 1]")));
    }
    Ok(())
}

/// A ♯ₜ B = A^{1/2} (A^{-1/2} B A^{-1/2})ᵗ A^{1/2}, any real `t`.
pub fn geo_mean_t(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite")));
    }
    a.sharp_t(b, t)
}

/// The solution X = A♯B of X A⁻¹ X = B, residual-checked.
pub fn riccati_solve(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    let x = a.sharp(b)?;
    let lhs = x.as_mat().matmul(a.inverse().as_mat()).matmul(x.as_mat());
    let res = (&lhs - b.as_mat()).frobenius();
    if res > 1e-10 * b.frobenius() {
        return Err(Error::InternalConsistency(format!("Riccati residual {res:e}")));
    }
    Ok(x)
}

/// A⁻¹ ♯ B, the common factor of the spectral and alternative means.
fn inverse_sharp(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    same_dim(a.n(), b.n())?;
    a.inverse().sharp(b)
}

/// F A F for a symmetric `F`.
fn sandwich(f: &SymMatrix, a: &SpdMatrix) -> Result<SpdMatrix> {
    SpdMatrix::from_mat(f.as_mat().matmul(a.as_mat()).matmul(f.as_mat()))
}

/// Weighted spectral geometric mean A♮ₜB = (A⁻¹♯B)ᵗ A (A⁻¹♯B)ᵗ.
pub fn spectral_mean_t(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_unit(t)?;
    let g = inverse_sharp(a, b)?;
    sandwich(g.powf(t).as_sym(), a)
}

/// Two-variable Wasserstein mean A◇ₜB = (I∇ₜG) A (I∇ₜG), G = A⁻¹♯B.
pub fn wasserstein2_t(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_unit(t)?;
    let g = inverse_sharp(a, b)?;
    let m = SymMatrix::identity(a.n()).scale(1.0 - t).add_scaled(t, g.as_sym());
    sandwich(&m, a)
}

/// Alternative mean A σ̂_f B = f(A⁻¹♯B) A f(A⁻¹♯B).
pub fn alt_mean(a: &SpdMatrix, b: &SpdMatrix, f: &RepFunction) -> Result<SpdMatrix> {
    f.require(Family::Representing)?;
    let g = inverse_sharp(a, b)?;
    if let Some(&l) = g.eigenvalues().iter().find(|&&l| !(f.eval(l) > 0.0)) {
        return Err(Error::Domain { eigenvalue: l, value: f.eval(l) });
    }
    let fg = g.map(|x| f.eval(x))?;
    sandwich(&fg, a)
}

/// Kubo–Ando mean U σ_f V = U^{1/2} f(U^{-1/2} V U^{-1/2}) U^{1/2}.
pub fn kubo_ando(u: &SpdMatrix, v: &SpdMatrix, f: &RepFunction) -> Result<SpdMatrix> {
    f.require(Family::Representing)?;
    same_dim(u.n(), v.n())?;
    let inner = u.inv_sqrt();
    let c = SpdMatrix::from_mat(inner.as_mat().matmul(v.as_mat()).matmul(inner.as_mat()))?;
    let fc = c.map_spd(|x| f.eval(x))?;
    let h = u.sqrt();
    SpdMatrix::from_mat(h.as_mat().matmul(fc.as_mat()).matmul(h.as_mat()))
}

/// ‖(A♯X⁻¹) σ_f (B♯X⁻¹) − I‖_F.
pub fn verify_alt_equation(a: &SpdMatrix, b: &SpdMatrix, f: &RepFunction, x: &SpdMatrix) -> Result<f64> {
    same_dim(a.n(), x.n())?;
    let xi = x.inverse();
    let u = a.sharp(&xi)?;
    let v = b.sharp(&xi)?;
    let m = kubo_ando(&u, &v, f)?;
    Ok(m.as_sym().sub(&SymMatrix::identity(a.n())).frobenius())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::pdcore::{distance, DistanceKind};

    fn pair() -> (SpdMatrix, SpdMatrix) {
        let a = SpdMatrix::from_mat(Mat::from_rows(&[
            &[2.0, 0.4, -0.3],
            &[0.4, 1.5, 0.2],
            &[-0.3, 0.2, 0.8],
        ]))
        .unwrap();
        let b = SpdMatrix::from_mat(Mat::from_rows(&[
            &[1.0, -0.2, 0.5],
            &[-0.2, 3.0, 0.1],
            &[0.5, 0.1, 1.2],
        ]))
        .unwrap();
        (a, b)
    }

    fn close(x: &SpdMatrix, y: &SpdMatrix, tol: f64) -> bool {
        (x.as_mat() - y.as_mat()).frobenius() <= tol * y.frobenius().max(1.0)
    }

    fn diag(d: &[f64]) -> SpdMatrix {
        SpdMatrix::diag(d).unwrap()
    }

    #[test]
    fn geo_mean_examples() {
        let (a, b) = pair();
        assert!(close(&geo_mean_t(&a, &a, 0.3).unwrap(), &a, 1e-14));
        assert!(close(&geo_mean_t(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0]), 0.5).unwrap(), &diag(&[3.0, 8.0]), 1e-15));
        let i = geo_mean_t(&a, &a.inverse(), 0.5).unwrap();
        assert!(close(&i, &SpdMatrix::identity(3), 1e-14));
        let ab = geo_mean_t(&a, &b, 0.5).unwrap();
        let ba = geo_mean_t(&b, &a, 0.5).unwrap();
        assert!(close(&ab, &ba, 1e-12));
        // geodesic extension beyond [0, 1]
        let e = geo_mean_t(&a, &b, 2.0).unwrap();
        assert!(close(&geo_mean_t(&a, &e, 0.5).unwrap(), &b, 1e-12));
    }

    #[test]
    fn riccati_examples() {
        let (a, b) = pair();
        let x = riccati_solve(&SpdMatrix::identity(3), &b).unwrap();
        assert!(close(&x, &b.sqrt(), 1e-14));
        let x = riccati_solve(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0])).unwrap();
        assert!(close(&x, &diag(&[3.0, 8.0]), 1e-15));
        riccati_solve(&a, &b).unwrap();
    }

    #[test]
    fn spectral_mean_examples() {
        let (a, b) = pair();
        for t in [0.0, 0.25, 0.6, 1.0] {
            let s = spectral_mean_t(&SpdMatrix::identity(3), &b, t).unwrap();
            assert!(close(&s, &b.powf(t), 1e-13), "t = {t}");
            assert!(close(&spectral_mean_t(&a, &a, t).unwrap(), &a, 1e-13));
        }
        let s = spectral_mean_t(&diag(&[1.0, 4.0]), &diag(&[9.0, 16.0]), 0.5).unwrap();
        assert!(close(&s, &diag(&[3.0, 8.0]), 1e-14));
        assert!(close(&spectral_mean_t(&a, &b, 1.0).unwrap(), &b, 1e-12));
        assert!(spectral_mean_t(&a, &b, 1.5).is_err());
    }

    #[test]
    fn spectral_mean_shares_spectrum_with_sqrt_product() {
        let (a, b) = pair();
        let s = spectral_mean_t(&a, &b, 0.5).unwrap();
        // eigenvalues of AB are those of the SPD matrix A^{1/2} B A^{1/2}
        let ab = b.congruence_by(a.sqrt().as_mat()).unwrap().sqrt();
        for (x, y) in s.eigenvalues().iter().zip(ab.eigenvalues()) {
            assert!((x - y).abs() <= 1e-10 * y);
        }
    }

    #[test]
    fn spectral_mean_determinant() {
        let (a, b) = pair();
        let t = 0.3;
        let s = spectral_mean_t(&a, &b, t).unwrap();
        let want = a.det().powf(1.0 - t) * b.det().powf(t);
        assert!((s.det() - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn spectral_mean_weight_convention() {
        // X = A♮ₜB zeroes (1−t) log(A♯X⁻¹) + t log(B♯X⁻¹), not the swapped weights.
        let (a, b) = pair();
        let t = 0.3;
        let x = spectral_mean_t(&a, &b, t).unwrap();
        let xi = x.inverse();
        let la = a.sharp(&xi).unwrap().log();
        let lb = b.sharp(&xi).unwrap().log();
        assert!(la.scale(1.0 - t).add_scaled(t, &lb).frobenius() < 1e-12);
        assert!(la.scale(t).add_scaled(1.0 - t, &lb).frobenius() > 1e-2);
    }

    #[test]
    fn wasserstein_examples() {
        let (a, b) = pair();
        let w = wasserstein2_t(&diag(&[1.0]), &diag(&[9.0]), 0.5).unwrap();
        assert!((w.get(0, 0) - 4.0).abs() < 1e-14);
        assert!(close(&wasserstein2_t(&a, &b, 0.0).unwrap(), &a, 1e-14));
        assert!(close(&wasserstein2_t(&a, &a, 0.4).unwrap(), &a, 1e-13));
        // expanded quadratic form
        let t = 0.35;
        let g = a.inverse().sharp(&b).unwrap();
        let ag = a.as_mat().matmul(g.as_mat());
        let expanded = a
            .as_mat()
            .scale((1.0 - t) * (1.0 - t))
            .add_scaled(t * t, b.as_mat())
            .add_scaled(t * (1.0 - t), &(&ag + &ag.transpose()));
        let w = wasserstein2_t(&a, &b, t).unwrap();
        assert!((&expanded - w.as_mat()).frobenius() <= 1e-12 * w.frobenius());
    }

    #[test]
    fn alt_mean_specializations() {
        let (a, b) = pair();
        for t in [0.2, 0.5, 0.9] {
            let s = alt_mean(&a, &b, &RepFunction::Power(t)).unwrap();
            assert!(close(&s, &spectral_mean_t(&a, &b, t).unwrap(), 1e-12));
            let w = alt_mean(&a, &b, &RepFunction::Arithmetic(t)).unwrap();
            assert!(close(&w, &wasserstein2_t(&a, &b, t).unwrap(), 1e-12));
        }
        assert!(close(&alt_mean(&a, &b, &RepFunction::Power(0.0)).unwrap(), &a, 1e-14));
        assert!(alt_mean(&a, &b, &RepFunction::Log).is_err());
    }

    #[test]
    fn alt_equation_residuals() {
        let (a, b) = pair();
        for f in [RepFunction::Power(0.3), RepFunction::Arithmetic(0.6), RepFunction::Harmonic(0.5)] {
            let x = alt_mean(&a, &b, &f).unwrap();
            assert!(verify_alt_equation(&a, &b, &f, &x).unwrap() <= 1e-10, "{f}");
            let x2 = x.scale(2.0).unwrap();
            assert!(verify_alt_equation(&a, &b, &f, &x2).unwrap() > 1e-3);
            assert!(verify_alt_equation(&a, &a, &f, &a).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn spectral_geodesic_property() {
        let (a, b) = pair();
        let d = distance(DistanceKind::SpectralSemi, &a, &b).unwrap();
        for (s, t) in [(0.1, 0.7), (0.5, 0.2), (0.0, 1.0)] {
            let xs = spectral_mean_t(&a, &b, s).unwrap();
            let xt = spectral_mean_t(&a, &b, t).unwrap();
            let dst = distance(DistanceKind::SpectralSemi, &xs, &xt).unwrap();
            assert!((dst - (s - t as f64).abs() * d).abs() <= 1e-9);
        }
    }
}

//! Randomized invariants over seeded instances.

use proptest::prelude::*;

use spdmeans::harness::gen::{random_problem, random_spd, rng_for, random_spd_in};
use spdmeans::means2::{alt_mean, geo_mean_t, spectral_mean_t, wasserstein2_t};
use spdmeans::meansm::{arithmetic_mean, harmonic_mean, karcher_mean, power_mean};
use spdmeans::pdcore::{compound_spd, distance, matrix_fn, order_check, thompson, DistanceKind, OrderRelation};
use spdmeans::speqsolve::solve_equation;
use spdmeans::{MeanProblem, RepFunction, SolverOptions, SpdMatrix, SymMatrix};

fn spd() -> impl Strategy<Value = SpdMatrix> {
    (2usize..=5, 1.0f64..1000.0, any::<u64>()).prop_map(|(n, c, s)| random_spd(n, c, s))
}

/// Two matrices of the same size.
fn pair() -> impl Strategy<Value = (SpdMatrix, SpdMatrix)> {
    (2usize..=5, 1.0f64..1000.0, any::<u64>()).prop_map(|(n, c, s)| (random_spd(n, c, s), random_spd(n, c, s ^ 0x5555)))
}

fn problem() -> impl Strategy<Value = MeanProblem> {
    (2usize..=5, 2usize..=4, 1.0f64..1000.0, any::<u64>()).prop_map(|(n, m, c, s)| random_problem(n, m, c, s))
}

fn rel_diff(a: &SpdMatrix, b: &SpdMatrix) -> f64 {
    (a.as_mat() - b.as_mat()).frobenius() / b.frobenius()
}

fn holds(rel: OrderRelation, a: &SpdMatrix, b: &SpdMatrix, tol: f64) -> bool {
    order_check(rel, a.as_sym(), b.as_sym(), tol).unwrap().holds
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_function_eigen(a in spd(), t in 0.0f64..=1.0) {
        let f = matrix_fn(&a, |x| x.powf(t)).unwrap();
        let expected: Vec<f64> = a.eigenvalues().iter().map(|l| l.powf(t)).collect();
        let rebuilt = a.eigen().compose(&expected);
        prop_assert!((f.as_mat() - &rebuilt).frobenius() <= 1e-12 * rebuilt.frobenius());
        for (x, y) in f.eigenvalues().iter().zip(&expected) {
            prop_assert!((x - y).abs() <= 1e-12 * expected[0]);
        }
    }

    #[test]
    fn thompson_triangle(s in any::<u64>(), n in 2usize..=5) {
        let (a, b, c) = (random_spd(n, 100.0, s), random_spd(n, 100.0, s.wrapping_add(1)), random_spd(n, 100.0, s.wrapping_add(2)));
        let ab = thompson(&a, &b).unwrap();
        let bc = thompson(&b, &c).unwrap();
        let ac = thompson(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - thompson(&b, &a).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn order_implications(a in spd(), s in any::<u64>()) {
        let p = random_spd_in(a.n(), 1e-3, 1.0, &mut rng_for(s, 0));
        let b = a.as_sym().add(p.as_sym()).to_spd().unwrap();
        let tol = 1e-10;
        prop_assert!(holds(OrderRelation::Loewner, &a, &b, tol));
        prop_assert!(holds(OrderRelation::Near, &a, &b, tol));
        prop_assert!(holds(OrderRelation::EigPointwise, &a, &b, tol));
        prop_assert!(holds(OrderRelation::WeakLogMajor, &a, &b, tol));
    }

    #[test]
    fn compound_spectrum(a in spd(), k in 1usize..=3) {
        let k = k.min(a.n());
        let c = compound_spd(&a, k).unwrap();
        let top: f64 = a.eigenvalues()[..k].iter().product();
        prop_assert!((c.max_eig() - top).abs() <= 1e-10 * top);
        prop_assert!(c.min_eig() > 0.0);
    }

    #[test]
    fn spectral_geodesic((a, b) in pair(), s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let d = distance(DistanceKind::SpectralSemi, &a, &b).unwrap();
        let x = spectral_mean_t(&a, &b, s).unwrap();
        let y = spectral_mean_t(&a, &b, t).unwrap();
        let lhs = distance(DistanceKind::SpectralSemi, &x, &y).unwrap();
        prop_assert!((lhs - (s - t).abs() * d).abs() <= 1e-9 * d.max(1.0));
    }

    #[test]
    fn spectral_determinant((a, b) in pair(), t in 0.0f64..=1.0) {
        let x = spectral_mean_t(&a, &b, t).unwrap();
        let target = (1.0 - t) * a.log_det() + t * b.log_det();
        prop_assert!((x.log_det() - target).exp_m1().abs() <= 1e-10);
    }

    #[test]
    fn transformer_consistency((a, b) in pair(), t in 0.05f64..0.95) {
        let s = alt_mean(&a, &b, &RepFunction::Power(t)).unwrap();
        prop_assert!(rel_diff(&s, &spectral_mean_t(&a, &b, t).unwrap()) <= 1e-9);
        let w = alt_mean(&a, &b, &RepFunction::Arithmetic(t)).unwrap();
        prop_assert!(rel_diff(&w, &wasserstein2_t(&a, &b, t).unwrap()) <= 1e-9);
    }

    #[test]
    fn geodesic_endpoints((a, b) in pair()) {
        prop_assert!(thompson(&geo_mean_t(&a, &b, 0.0).unwrap(), &a).unwrap() <= 1e-10);
        prop_assert!(thompson(&geo_mean_t(&a, &b, 1.0).unwrap(), &b).unwrap() <= 1e-10);
        let g = a.sharp(&b).unwrap();
        prop_assert!(thompson(&g, &b.sharp(&a).unwrap()).unwrap() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_mean_sandwich(p in problem(), s in 0.1f64..=1.0, frac in 0.1f64..=1.0) {
        let opts = SolverOptions::default();
        let t = s * frac;
        let solve = |t: f64| power_mean(&p, t, &opts).unwrap().solution;
        let k = karcher_mean(&p, &opts).unwrap().solution;
        let chain = [solve(-s), solve(-t), k, solve(t), solve(s)];
        for w in chain.windows(2) {
            prop_assert!(holds(OrderRelation::Loewner, &w[0], &w[1], 1e-9));
        }
    }

    #[test]
    fn karcher_between_harmonic_and_arithmetic(p in problem()) {
        let k = karcher_mean(&p, &SolverOptions::default()).unwrap();
        prop_assert!(k.converged);
        prop_assert!(holds(OrderRelation::Loewner, &harmonic_mean(&p), &k.solution, 1e-9));
        prop_assert!(holds(OrderRelation::Loewner, &k.solution, &arithmetic_mean(&p), 1e-9));
    }

    #[test]
    fn solutions_keep_determinant(p in problem()) {
        let out = solve_equation(&p, &RepFunction::Log, &arithmetic_mean(&p), &SolverOptions::default()).unwrap();
        prop_assert!(out.converged);
        let target: f64 = p.iter().map(|(w, a)| w * a.log_det()).sum();
        prop_assert!((out.solution.log_det() - target).abs() <= 1e-9);
        let (alpha, beta) = p.spectral_bounds();
        let n = p.n();
        prop_assert!(order_check(OrderRelation::Loewner, &SymMatrix::identity(n).scale(alpha), out.solution.as_sym(), 1e-9).unwrap().holds);
        prop_assert!(order_check(OrderRelation::Loewner, out.solution.as_sym(), &SymMatrix::identity(n).scale(beta), 1e-9).unwrap().holds);
    }

    #[test]
    fn generator_is_deterministic(n in 1usize..=6, c in 1.0f64..1e6, s in any::<u64>()) {
        let a = random_spd(n, c, s);
        prop_assert_eq!(&a, &random_spd(n, c, s));
        prop_assert!(a.max_eig() / a.min_eig() <= c * (1.0 + 1e-9));
    }
}

//! Per-trial checks. Each check records a margin that is nonnegative iff it
//! holds; the trial margin is the minimum.

use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{random_orthogonal, random_spd_in, rng_for};
use super::{Conjecture, Suite, SuiteConfig};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::means2::{geo_mean_t, spectral_mean_t, wasserstein2_t};
use crate::meansm::{
    arithmetic_mean, harmonic_mean, karcher_mean, log_euclidean_mean, power_mean, wasserstein_mean, MeanProblem,
    SolveOutcome, SolverOptions,
};
use crate::pdcore::{
    compound_spd, congruence, distance, log_major_slacks, order_check, thompson, DistanceKind, OrderRelation, SpdMatrix, SymMatrix,
};
use crate::repfn::RepFunction;
use crate::speqsolve::{flow_derivative_check, residual, solve_equation};

/// Bound on ‖Φ‖ for the compound problem.
const COMPOUND_TOL: f64 = 1e-8;
/// Trace monotonicity slack along the K-iteration.
const TRACE_TOL: f64 = 1e-10;
/// Bound on ‖DF(X)[X] + I/2‖ at the reference step.
const FLOW_TOL: f64 = 1e-6;
const FLOW_STEP: f64 = 1e-5;
/// Accepted band for the error ratio under step halving (4 for O(h²)).
const FLOW_RATIO: (f64, f64) = (3.5, 4.5);

pub(crate) struct Checks {
    tol: f64,
    worst: f64,
    name: String,
    slack: Option<f64>,
}

impl Checks {
    pub(crate) fn new(tol: f64) -> Self {
        Checks { tol, worst: f64::INFINITY, name: String::from("none"), slack: None }
    }

    /// Records the raw k-product slacks of A ≺ B, k = 1..n−1, plus k = n when
    /// `all` is set, then the order check itself.
    fn majorization(&mut self, name: &str, rel: OrderRelation, a: &SpdMatrix, b: &SpdMatrix, all: bool) -> Result<()> {
        let sl = log_major_slacks(a.eigenvalues(), b.eigenvalues());
        let k = if all { sl.len() } else { sl.len() - 1 };
        if let Some(m) = sl[..k].iter().copied().reduce(f64::min) {
            self.slack = Some(self.slack.map_or(m, |s| s.min(m)));
        }
        self.order(name, rel, a.as_sym(), b.as_sym())
    }

    pub(crate) fn slack(&self) -> Option<f64> {
        self.slack
    }

    /// NaN counts as a failure.
    fn record(&mut self, name: &str, margin: f64) {
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if margin < self.worst {
            self.worst = margin;
            self.name = name.to_string();
        }
    }

    /// `err ≤ bound`.
    fn bound(&mut self, name: &str, err: f64, bound: f64) {
        self.record(name, bound - err);
    }

    /// `err ≤ tol`.
    fn small(&mut self, name: &str, err: f64) {
        self.bound(name, err, self.tol);
    }

    fn close(&mut self, name: &str, x: &SpdMatrix, y: &SpdMatrix) -> Result<()> {
        let d = thompson(x, y)?;
        self.small(name, d);
        Ok(())
    }

    fn order(&mut self, name: &str, rel: OrderRelation, a: &SymMatrix, b: &SymMatrix) -> Result<()> {
        let r = order_check(rel, a, b, self.tol)?;
        self.record(name, r.margin);
        Ok(())
    }

    /// A ≤ B + tol·I.
    fn loewner_abs(&mut self, name: &str, a: &SymMatrix, b: &SymMatrix) {
        self.record(name, b.sub(a).min_eig() + self.tol);
    }

    /// Strict decrease `prev > next`, as a relative margin.
    fn decrease(&mut self, name: &str, prev: f64, next: f64) {
        let rel = (prev - next) / prev;
        self.record(name, if rel > 0.0 { rel } else { rel.min(-f64::MIN_POSITIVE) });
    }

    pub(crate) fn worst(&self) -> (f64, String) {
        (self.worst, self.name.clone())
    }
}

fn converged(out: SolveOutcome, what: &str) -> Result<SpdMatrix> {
    if out.converged {
        Ok(out.solution)
    } else {
        Err(Error::NonConvergence(format!(
            "{what}: residual {:e} after {} iterations",
            out.residual, out.iterations
        )))
    }
}

fn solve_s(p: &MeanProblem, x0: &SpdMatrix, opts: &SolverOptions) -> Result<SpdMatrix> {
    converged(solve_equation(p, &RepFunction::Log, x0, opts)?, "spectral equation")
}

fn karcher(p: &MeanProblem, opts: &SolverOptions) -> Result<SpdMatrix> {
    converged(karcher_mean(p, opts)?, "Karcher mean")
}

fn wasserstein(p: &MeanProblem, opts: &SolverOptions) -> Result<SpdMatrix> {
    converged(wasserstein_mean(p, opts)?, "Wasserstein mean")
}

fn with_matrices(p: &MeanProblem, a: Vec<SpdMatrix>) -> Result<MeanProblem> {
    MeanProblem::new(p.weight_vector().clone(), a)
}

fn log_det_target(p: &MeanProblem) -> f64 {
    p.iter().map(|(w, a)| w * a.log_det()).sum()
}

/// Q₁ diag(d) Q₂ with d log-uniform in [1/2, 2].
fn random_invertible(n: usize, rng: &mut impl Rng) -> Mat {
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let mut d = Mat::zeros(n);
    for i in 0..n {
        d[(i, i)] = rng.gen_range(-std::f64::consts::LN_2..std::f64::consts::LN_2).exp();
    }
    q1.matmul(&d).matmul(&q2)
}

pub(crate) fn run(suite: Suite, p: &MeanProblem, seed: u64, cfg: &SuiteConfig, c: &mut Checks) -> Result<()> {
    let opts = &cfg.solver;
    match suite {
        Suite::TwoVarChain => two_var_chain(p, c),
        Suite::MultiChain => multi_chain(p, opts, c),
        Suite::KarcherProps => karcher_props(p, seed, opts, c),
        Suite::GammaProps => gamma_props(p, seed, opts, c),
        Suite::GammaBounds => gamma_bounds(p, opts, c),
        Suite::NearSandwich => {
            let x = solve_s(p, &arithmetic_mean(p), opts)?;
            c.order("H near-below S", OrderRelation::Near, harmonic_mean(p).as_sym(), x.as_sym())?;
            c.order("S near-below A", OrderRelation::Near, x.as_sym(), arithmetic_mean(p).as_sym())
        }
        Suite::LeMajor => {
            let x = solve_s(p, &arithmetic_mean(p), opts)?;
            c.order("LE <_log S", OrderRelation::LogMajor, log_euclidean_mean(p).as_sym(), x.as_sym())
        }
        Suite::TraceProp => trace_prop(p, opts, c),
        Suite::PowerCmp => power_cmp(p, opts, c),
        Suite::LieTrotter => lie_trotter(p, opts, c),
        Suite::GeodesicDs => geodesic_ds(p, seed, c),
        Suite::WassTrace => wass_trace(p, opts, c),
        Suite::FlowDeriv => flow_deriv(p, seed, c),
    }
}

fn two_var_chain(p: &MeanProblem, c: &mut Checks) -> Result<()> {
    let (a, b) = (&p.matrices()[0], &p.matrices()[1]);
    let (la, lb) = (a.log(), b.log());
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        let g = geo_mean_t(a, b, t)?;
        let le = la.scale(1.0 - t).add_scaled(t, &lb).exp()?;
        let sp = spectral_mean_t(a, b, t)?;
        let w = wasserstein2_t(a, b, t)?;
        c.order(&format!("geo <_log LE (t={t})"), OrderRelation::LogMajor, g.as_sym(), le.as_sym())?;
        c.order(&format!("LE <_log spectral (t={t})"), OrderRelation::LogMajor, le.as_sym(), sp.as_sym())?;
        c.order(&format!("spectral near-below Wasserstein (t={t})"), OrderRelation::Near, sp.as_sym(), w.as_sym())?;
    }
    Ok(())
}

fn multi_chain(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let k = karcher(p, opts)?;
    let le = log_euclidean_mean(p);
    let om = wasserstein(p, opts)?;
    c.order("H <= Karcher", OrderRelation::Loewner, harmonic_mean(p).as_sym(), k.as_sym())?;
    c.order("Karcher <_log LE", OrderRelation::LogMajor, k.as_sym(), le.as_sym())?;
    c.order("LE <_wlog Wasserstein", OrderRelation::WeakLogMajor, le.as_sym(), om.as_sym())?;
    c.order("Wasserstein <= A", OrderRelation::Loewner, om.as_sym(), arithmetic_mean(p).as_sym())
}

fn karcher_props(p: &MeanProblem, seed: u64, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let mut rng = rng_for(seed, 3);
    let n = p.n();
    let k = karcher(p, opts)?;

    let scal: Vec<f64> = (0..p.m()).map(|_| rng.gen_range(-0.7..0.7_f64).exp()).collect();
    let scaled = with_matrices(p, p.matrices().iter().zip(&scal).map(|(a, &s)| a.scale(s)).collect::<Result<_>>()?)?;
    let factor: f64 = p.weights().iter().zip(&scal).map(|(w, s)| s.powf(*w)).product();
    c.close("joint homogeneity", &karcher(&scaled, opts)?, &k.scale(factor)?)?;

    let mut perm: Vec<usize> = (0..p.m()).collect();
    perm.shuffle(&mut rng);
    c.close("permutation invariance", &karcher(&p.permuted(&perm)?, opts)?, &k)?;

    let bigger = with_matrices(
        p,
        p.matrices()
            .iter()
            .map(|a| random_spd_in(n, 1e-2, 0.5, &mut rng).as_sym().add(a.as_sym()).to_spd())
            .collect::<Result<_>>()?,
    )?;
    c.loewner_abs("monotonicity", k.as_sym(), karcher(&bigger, opts)?.as_sym());

    let perturbed = with_matrices(
        p,
        p.matrices()
            .iter()
            .map(|a| random_spd_in(n, 0.5, 2.0, &mut rng).congruence_by(a.sqrt().as_mat()))
            .collect::<Result<_>>()?,
    )?;
    let mut budget = 0.0;
    for ((w, a), b) in p.iter().zip(perturbed.matrices()) {
        budget += w * thompson(a, b)?;
    }
    let d = thompson(&k, &karcher(&perturbed, opts)?)?;
    c.small("Thompson contraction", d - budget);

    let s = random_invertible(n, &mut rng);
    c.close("congruence invariance", &karcher(&p.congruent(&s)?, opts)?, &congruence(&s, &k)?)?;

    c.close("self-duality", &karcher(&p.inverted(), opts)?, &k.inverse())?;
    c.small("determinant identity", (k.log_det() - log_det_target(p)).abs());
    c.order("H <= Karcher", OrderRelation::Loewner, harmonic_mean(p).as_sym(), k.as_sym())?;
    c.order("Karcher <= A", OrderRelation::Loewner, k.as_sym(), arithmetic_mean(p).as_sym())
}

fn gamma_props(p: &MeanProblem, seed: u64, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let mut rng = rng_for(seed, 5);
    let n = p.n();
    let x0 = arithmetic_mean(p);
    let x = solve_s(p, &x0, opts)?;

    let diag = with_matrices(
        p,
        p.matrices().iter().map(|a| SpdMatrix::diag(a.eigenvalues())).collect::<Result<_>>()?,
    )?;
    let d: Vec<f64> = (0..n)
        .map(|j| diag.iter().map(|(w, a)| w * a.get(j, j).ln()).sum::<f64>().exp())
        .collect();
    let (_, r) = residual(&diag, &SpdMatrix::diag(&d)?, &RepFunction::Log)?;
    c.small("commuting case", r);

    let alpha = rng.gen_range(-2.0..2.0_f64).exp();
    let xs = solve_s(&p.scaled(alpha)?, &x0.scale(alpha)?, opts)?;
    c.close("homogeneity", &xs, &x.scale(alpha)?)?;

    let mut perm: Vec<usize> = (0..p.m()).collect();
    perm.shuffle(&mut rng);
    c.close("permutation invariance", &solve_s(&p.permuted(&perm)?, &x0, opts)?, &x)?;

    let u = random_orthogonal(n, &mut rng);
    let xu = solve_s(&p.congruent(&u)?, &congruence(&u, &x0)?, opts)?;
    c.close("unitary congruence", &xu, &congruence(&u, &x)?)?;

    c.close("inversion", &solve_s(&p.inverted(), &x0.inverse(), opts)?, &x.inverse())?;
    c.small("determinant identity", (x.log_det() - log_det_target(p)).abs());

    if (2..=4).contains(&n) {
        let cp = p.map(|a| compound_spd(a, 2))?;
        let (_, r) = residual(&cp, &compound_spd(&x, 2)?, &RepFunction::Log)?;
        c.bound("compound power membership", r, COMPOUND_TOL);
    }
    Ok(())
}

fn weighted_sum(p: &MeanProblem, f: impl Fn(&SpdMatrix) -> SpdMatrix) -> SymMatrix {
    p.iter()
        .fold(SymMatrix::zeros(p.n()), |acc, (w, a)| acc.add_scaled(w, f(a).as_sym()))
}

fn gamma_bounds(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let x = solve_s(p, &arithmetic_mean(p), opts)?;
    let n = p.n();
    let two = SymMatrix::identity(n).scale(2.0);
    let lower = two.sub(&weighted_sum(p, SpdMatrix::inverse));
    c.order("2I - sum w A^-1 <= S", OrderRelation::Loewner, &lower, x.as_sym())?;
    let m = two.sub(&weighted_sum(p, SpdMatrix::clone));
    if m.min_eig() > 0.0 {
        let upper = m.to_spd()?.inverse();
        c.order("S <= (2I - sum w A)^-1", OrderRelation::Loewner, x.as_sym(), upper.as_sym())?;
    }
    let (alpha, beta) = p.spectral_bounds();
    c.order("alpha I <= S", OrderRelation::Loewner, &SymMatrix::identity(n).scale(alpha), x.as_sym())?;
    c.order("S <= beta I", OrderRelation::Loewner, x.as_sym(), &SymMatrix::identity(n).scale(beta))
}

fn trace_prop(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let x = solve_s(p, &arithmetic_mean(p), opts)?;
    let s = 1.0 / x.max_eig();
    let q = p.scaled(s)?;
    let xs = solve_s(&q, &x.scale(s)?, opts)?;
    c.loewner_abs("hypothesis S <= I", xs.as_sym(), &SymMatrix::identity(p.n()));
    let om = wasserstein(&q, opts)?;
    c.small("tr S^3 <= tr Wasserstein", xs.powf(3.0).trace() - om.trace());
    Ok(())
}

fn power_cmp(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let x = solve_s(p, &arithmetic_mean(p), opts)?;
    let s = 1.0 / x.min_eig();
    let q = p.scaled(s)?;
    let xs = solve_s(&q, &x.scale(s)?, opts)?;
    c.loewner_abs("hypothesis S >= I", &SymMatrix::identity(p.n()), xs.as_sym());
    let inv = xs.inverse();
    for t in [0.5, 0.75, 1.0] {
        let pt = converged(power_mean(&q, t, opts)?, "power mean")?;
        c.loewner_abs(&format!("S^-1 <= P_t (t={t})"), inv.as_sym(), pt.as_sym());
    }
    Ok(())
}

fn frob_dist(a: &SpdMatrix, b: &SpdMatrix) -> f64 {
    (a.as_mat() - b.as_mat()).frobenius()
}

fn lie_trotter(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let le = log_euclidean_mean(p);
    let mut prev: Option<[f64; 3]> = None;
    let mut warm: Option<SpdMatrix> = None;
    for k in 1..=8 {
        let s = (-(k as f64)).exp2();
        let q = p.powered(s);
        let start = warm.take().unwrap_or_else(|| arithmetic_mean(&q));
        let sp = solve_s(&q, &start, opts)?;
        let errs = [
            frob_dist(&karcher(&q, opts)?.powf(1.0 / s), &le),
            frob_dist(&wasserstein(&q, opts)?.powf(1.0 / s), &le),
            frob_dist(&sp.powf(1.0 / s), &le),
        ];
        if let Some(pe) = prev {
            for (j, name) in ["Karcher", "Wasserstein", "S"].iter().enumerate() {
                c.decrease(&format!("{name} error decreases at k={k}"), pe[j], errs[j]);
            }
        }
        prev = Some(errs);
        warm = Some(sp.sqrt());
    }
    Ok(())
}

fn geodesic_ds(p: &MeanProblem, seed: u64, c: &mut Checks) -> Result<()> {
    let mut rng = rng_for(seed, 11);
    let (a, b) = (&p.matrices()[0], &p.matrices()[1]);
    let d = distance(DistanceKind::SpectralSemi, a, b)?;
    let mut pairs = vec![(0.0, 1.0)];
    pairs.extend((0..3).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())));
    for (s, t) in pairs {
        let x = spectral_mean_t(a, b, s)?;
        let y = spectral_mean_t(a, b, t)?;
        let lhs = distance(DistanceKind::SpectralSemi, &x, &y)?;
        let err = (lhs - (s - t).abs() * d).abs() / d.max(1.0);
        c.small(&format!("d_S geodesic (s={s:.3}, t={t:.3})"), err);
    }
    Ok(())
}

fn wass_trace(p: &MeanProblem, opts: &SolverOptions, c: &mut Checks) -> Result<()> {
    let out = wasserstein_mean(p, opts)?;
    let traces = out.trace_history.clone().unwrap_or_default();
    let om = converged(out, "Wasserstein mean")?;
    let top = om.trace();
    for (k, w) in traces.windows(2).enumerate() {
        c.bound(&format!("tr X_{k} <= tr X_{}", k + 1), w[0] - w[1], TRACE_TOL);
    }
    for (k, t) in traces.iter().enumerate() {
        c.bound(&format!("tr X_{k} <= tr Wasserstein"), t - top, TRACE_TOL);
    }
    Ok(())
}

fn flow_deriv(p: &MeanProblem, seed: u64, c: &mut Checks) -> Result<()> {
    let (alpha, beta) = p.spectral_bounds();
    let x = random_spd_in(p.n(), alpha, beta, &mut rng_for(seed, 13));
    let half = SymMatrix::identity(p.n()).scale(0.5);
    let err = |h: f64| -> Result<f64> { Ok(flow_derivative_check(p, &x, h)?.add(&half).frobenius()) };
    c.bound("DF(X)[X] = -I/2", err(FLOW_STEP)?, FLOW_TOL);
    let ratio = err(1e-3)? / err(5e-4)?;
    c.record("O(h^2) decay", (ratio - FLOW_RATIO.0).min(FLOW_RATIO.1 - ratio));
    Ok(())
}

/// Exponents p tried by the p-power explorer.
const POWERS: [f64; 3] = [0.25, 0.5, 0.75];

pub(crate) fn conjecture(cj: Conjecture, p: &MeanProblem, _seed: u64, cfg: &SuiteConfig, c: &mut Checks) -> Result<()> {
    let opts = &cfg.solver;
    match cj {
        Conjecture::SWlogOmega => {
            let x = solve_s(p, &arithmetic_mean(p), opts)?;
            let om = wasserstein(p, opts)?;
            c.majorization("S <_wlog Wasserstein", OrderRelation::WeakLogMajor, &x, &om, true)
        }
        Conjecture::PPowerSp { m } => {
            if m == 2 {
                let (a, b) = (&p.matrices()[0], &p.matrices()[1]);
                let t = p.weights()[1];
                let rhs = spectral_mean_t(a, b, t)?;
                for e in POWERS {
                    let lhs = spectral_mean_t(&a.powf(e), &b.powf(e), t)?.powf(1.0 / e);
                    c.majorization(&format!("two-matrix p={e}"), OrderRelation::LogMajor, &lhs, &rhs, false)?;
                }
            } else {
                let rhs = solve_s(p, &arithmetic_mean(p), opts)?;
                for e in POWERS {
                    let q = p.powered(e);
                    let lhs = solve_s(&q, &arithmetic_mean(&q), opts)?.powf(1.0 / e);
                    c.majorization(&format!("p={e}"), OrderRelation::LogMajor, &lhs, &rhs, false)?;
                }
            }
            Ok(())
        }
    }
}

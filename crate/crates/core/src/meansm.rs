//! Multivariable means of a weighted tuple of SPD matrices.
//!
//! Fixed-point solvers start from the arithmetic mean, except the
//! Wasserstein iteration, which starts from the harmonic mean. Equations with an
//! explicit residual (Karcher, generalized Karcher) are stopped on the
//! Frobenius norm of that residual; pure fixed-point maps (power mean,
//! Wasserstein) are stopped on the Thompson distance between iterates.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::pdcore::{same_dim, thompson, SpdMatrix, SymMatrix, WeightVector};
use crate::repfn::{Family, RepFunction};

/// Weights ω together with the matrices (A₁, …, A_m).
#[derive(Clone, Debug, PartialEq)]
pub struct MeanProblem {
    weights: WeightVector,
    matrices: Vec<SpdMatrix>,
}

impl MeanProblem {
    pub fn new(weights: WeightVector, matrices: Vec<SpdMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidArgument("at least one matrix is required".into()));
        }
        if weights.len() != matrices.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} matrices",
                weights.len(),
                matrices.len()
            )));
        }
        let n = matrices[0].n();
        for a in &matrices {
            same_dim(n, a.n())?;
        }
        Ok(MeanProblem { weights, matrices })
    }

    /// Equal weights 1/m.
    pub fn uniform(matrices: Vec<SpdMatrix>) -> Result<Self> {
        let w = WeightVector::uniform(matrices.len().max(1));
        MeanProblem::new(w, matrices)
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn weight_vector(&self) -> &WeightVector {
        &self.weights
    }

    pub fn matrices(&self) -> &[SpdMatrix] {
        &self.matrices
    }

    pub fn n(&self) -> usize {
        self.matrices[0].n()
    }

    pub fn m(&self) -> usize {
        self.matrices.len()
    }

    /// (wᵢ, Aᵢ) pairs in index order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, &SpdMatrix)> {
        self.weights.as_slice().iter().copied().zip(self.matrices.iter())
    }

    /// Same weights, every matrix transformed by `f`.
    pub fn map(&self, f: impl Fn(&SpdMatrix) -> Result<SpdMatrix>) -> Result<MeanProblem> {
        let matrices = self.matrices.iter().map(f).collect::<Result<Vec<_>>>()?;
        MeanProblem::new(self.weights.clone(), matrices)
    }

    pub fn inverted(&self) -> MeanProblem {
        self.map(|a| Ok(a.inverse())).expect("inverse of SPD is SPD")
    }

    pub fn scaled(&self, c: f64) -> Result<MeanProblem> {
        self.map(|a| a.scale(c))
    }

    pub fn powered(&self, s: f64) -> MeanProblem {
        self.map(|a| Ok(a.powf(s))).expect("power of SPD is SPD")
    }

    /// (S A₁ Sᵀ, …, S A_m Sᵀ).
    pub fn congruent(&self, s: &Mat) -> Result<MeanProblem> {
        self.map(|a| crate::pdcore::congruence(s, a))
    }

    /// Reorders weights and matrices: entry i of the result is entry perm[i].
    pub fn permuted(&self, perm: &[usize]) -> Result<MeanProblem> {
        if perm.len() != self.m() {
            return Err(Error::InvalidArgument("permutation length".into()));
        }
        let w = perm.iter().map(|&i| self.weights()[i]).collect();
        let a = perm.iter().map(|&i| self.matrices[i].clone()).collect();
        MeanProblem::new(WeightVector::new(w)?, a)
    }

    /// Smallest and largest eigenvalue over all Aᵢ, i.e. the tightest
    /// α, β with αI ≤ Aᵢ ≤ βI.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        self.matrices.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), a| {
            (lo.min(a.min_eig()), hi.max(a.max_eig()))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallest step factor before the damped iteration gives up.
    pub min_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 500, min_damping: 2f64.powi(-20) }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter < 1 || !(self.min_damping > 0.0 && self.min_damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("invalid solver options {self:?}")));
        }
        Ok(())
    }
}

/// Record of one solve.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solution: SpdMatrix,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual (or step size) after each accepted iterate, starting with the
    /// initial point.
    pub history: Vec<f64>,
    /// tr Xₖ along the iteration, for solvers that track it.
    pub trace_history: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementaryKind {
    Arithmetic,
    Harmonic,
    LogEuclidean,
}

fn weighted_sum(p: &MeanProblem, f: impl Fn(&SpdMatrix) -> SymMatrix) -> SymMatrix {
    p.iter()
        .fold(SymMatrix::zeros(p.n()), |acc, (w, a)| acc.add_scaled(w, &f(a)))
}

pub fn arithmetic_mean(p: &MeanProblem) -> SpdMatrix {
    weighted_sum(p, |a| a.as_sym().clone()).to_spd().expect("convex combination of SPD is SPD")
}

pub fn harmonic_mean(p: &MeanProblem) -> SpdMatrix {
    weighted_sum(p, |a| a.inverse().as_sym().clone())
        .to_spd()
        .expect("convex combination of SPD is SPD")
        .inverse()
}

pub fn log_euclidean_mean(p: &MeanProblem) -> SpdMatrix {
    weighted_sum(p, |a| a.log()).exp().expect("exp of symmetric is SPD")
}

pub fn elementary_mean(kind: ElementaryKind, p: &MeanProblem) -> SpdMatrix {
    match kind {
        ElementaryKind::Arithmetic => arithmetic_mean(p),
        ElementaryKind::Harmonic => harmonic_mean(p),
        ElementaryKind::LogEuclidean => log_euclidean_mean(p),
    }
}

/// Σ wᵢ g(X^{-1/2} Aᵢ X^{-1/2}).
pub fn generalized_karcher_residual(p: &MeanProblem, g: &RepFunction, x: &SpdMatrix) -> Result<SymMatrix> {
    Ok(residual_and_step(p, g, x)?.0)
}

/// Residual plus the base step of the iteration. For g = log the step is
/// 2 / Σ wᵢ (cᵢ+1)/(cᵢ−1) log cᵢ with cᵢ = cond(X^{-1/2} Aᵢ X^{-1/2}), which
/// is at most 1 and keeps the iteration contractive on spread data.
fn residual_and_step(p: &MeanProblem, g: &RepFunction, x: &SpdMatrix) -> Result<(SymMatrix, f64)> {
    same_dim(p.n(), x.n())?;
    let xi = x.inv_sqrt();
    let mut acc = SymMatrix::zeros(p.n());
    let mut denom = 0.0;
    for (w, a) in p.iter() {
        let y = a.congruence_by(xi.as_mat())?;
        acc = acc.add_scaled(w, &y.map(|v| g.eval(v))?);
        let c = y.max_eig() / y.min_eig();
        let l = c.ln();
        denom += w * if l < 1e-8 { 2.0 } else { l / (l / 2.0).tanh() };
    }
    let step = if *g == RepFunction::Log { (2.0 / denom).min(1.0) } else { 1.0 };
    Ok((acc, step))
}

/// Damped iteration X ← X^{1/2} exp(βθ G(X)) X^{1/2} for the generalized
/// Karcher residual G, starting from `x0`; θ is the base step of
/// `residual_and_step`.
pub(crate) fn karcher_type_from(
    p: &MeanProblem,
    g: &RepFunction,
    x0: SpdMatrix,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    opts.validate()?;
    let mut x = x0;
    let (mut grad, mut theta) = residual_and_step(p, g, &x)?;
    let mut r = grad.frobenius();
    let mut history = vec![r];
    let mut beta = 1.0_f64;
    let mut iterations = 0;
    let mut converged = r <= opts.tol;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let h = x.sqrt();
        let step = grad.scale(beta * theta).exp()?;
        let trial = step.congruence_by(h.as_mat())?;
        let (tgrad, ttheta) = residual_and_step(p, g, &trial)?;
        let tr = tgrad.frobenius();
        if tr > r {
            beta *= 0.5;
            if beta < opts.min_damping {
                break;
            }
            continue;
        }
        x = trial;
        grad = tgrad;
        theta = ttheta;
        r = tr;
        history.push(r);
        beta = (2.0 * beta).min(1.0);
        converged = r <= opts.tol;
    }
    Ok(SolveOutcome { solution: x, residual: r, iterations, converged, history, trace_history: None })
}

/// Karcher mean Λ(ω; 𝔸), the solution of Σ wᵢ log(X^{-1/2} Aᵢ X^{-1/2}) = 0.
pub fn karcher_mean(p: &MeanProblem, opts: &SolverOptions) -> Result<SolveOutcome> {
    karcher_type_from(p, &RepFunction::Log, arithmetic_mean(p), opts)
}

pub(crate) fn karcher_mean_from(p: &MeanProblem, x0: SpdMatrix, opts: &SolverOptions) -> Result<SolveOutcome> {
    karcher_type_from(p, &RepFunction::Log, x0, opts)
}

/// Generalized Karcher mean Λ_g for a generator `g` from the catalog.
pub fn generalized_karcher(p: &MeanProblem, g: &RepFunction, opts: &SolverOptions) -> Result<SolveOutcome> {
    g.require(Family::Generator)?;
    karcher_type_from(p, g, arithmetic_mean(p), opts)
}

pub(crate) fn generalized_karcher_from(
    p: &MeanProblem,
    g: &RepFunction,
    x0: SpdMatrix,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    g.require(Family::Generator)?;
    karcher_type_from(p, g, x0, opts)
}

/// Smallest |t| accepted by [`power_mean`]; use [`karcher_mean`] for t → 0.
pub const POWER_MEAN_MIN_T: f64 = 1e-3;

/// Lim–Pálfia power mean P_t, t ∈ [−1, 1], |t| ≥ 10⁻³.
pub fn power_mean(p: &MeanProblem, t: f64, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    if !(t.abs() <= 1.0 && t.abs() >= POWER_MEAN_MIN_T) {
        return Err(Error::InvalidArgument(format!(
            "power mean order t = {t} must satisfy {POWER_MEAN_MIN_T} <= |t| <= 1"
        )));
    }
    if t < 0.0 {
        let mut out = power_mean(&p.inverted(), -t, opts)?;
        out.solution = out.solution.inverse();
        return Ok(out);
    }
    let mut x = arithmetic_mean(p);
    let mut history = Vec::new();
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut acc = SymMatrix::zeros(p.n());
        for (w, a) in p.iter() {
            acc = acc.add_scaled(w, x.sharp_t(a, t)?.as_sym());
        }
        let next = acc.to_spd()?;
        step = thompson(&x, &next)?;
        history.push(step);
        x = next;
        if step <= opts.tol {
            break;
        }
    }
    Ok(SolveOutcome {
        solution: x,
        residual: step,
        iterations,
        converged: step <= opts.tol,
        history,
        trace_history: None,
    })
}

/// ‖Σ wᵢ Aᵢ♯X⁻¹ − I‖_F.
pub fn wasserstein_residual(p: &MeanProblem, x: &SpdMatrix) -> Result<f64> {
    let xi = x.inverse();
    let mut acc = SymMatrix::identity(p.n()).scale(-1.0);
    for (w, a) in p.iter() {
        acc = acc.add_scaled(w, a.sharp(&xi)?.as_sym());
    }
    Ok(acc.frobenius())
}

/// K(X) = X^{-1/2} [Σ wᵢ (X^{1/2} Aᵢ X^{1/2})^{1/2}]² X^{-1/2}.
pub fn wasserstein_map(p: &MeanProblem, x: &SpdMatrix) -> Result<SpdMatrix> {
    let h = x.sqrt();
    let mut acc = SymMatrix::zeros(p.n());
    for (w, a) in p.iter() {
        acc = acc.add_scaled(w, a.congruence_by(h.as_mat())?.sqrt().as_sym());
    }
    let s = acc.to_spd()?;
    let sq = s.map_spd(|v| v * v)?;
    sq.congruence_by(x.inv_sqrt().as_mat())
}

/// Wasserstein (Bures–Wasserstein barycenter) mean Ω by the K-map iteration.
///
/// Iterations without a new smallest step after which the step is taken to
/// be at its rounding floor.
const WASSERSTEIN_STALL: usize = 20;

/// Starts from the harmonic mean. The trace of the iterates is nondecreasing
/// from there; from a start above Ω in trace (the arithmetic mean, for
/// instance) the first step lowers it. Stops once the Thompson step is at
/// most `tol` (or has stopped decreasing at its rounding floor) and the
/// residual of Σ wᵢ Aᵢ♯X⁻¹ = I is at most `10 tol`. A
/// decrease of tr Xₖ by more than 10⁻¹⁰ (relative) is reported as an
/// internal-consistency error.
pub fn wasserstein_mean(p: &MeanProblem, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    let mut x = harmonic_mean(p);
    let mut traces = vec![x.trace()];
    let mut history = Vec::new();
    let mut residual = wasserstein_residual(p, &x)?;
    let mut iterations = 0;
    let mut converged = residual <= opts.tol;
    let (mut best_step, mut since_best) = (f64::INFINITY, 0);
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let next = wasserstein_map(p, &x)?;
        let step = thompson(&x, &next)?;
        let tr = next.trace();
        let prev = *traces.last().unwrap();
        if tr < prev - 1e-10 * prev.abs().max(1.0) {
            return Err(Error::InternalConsistency(format!(
                "trace decreased along the Wasserstein iteration: {prev:e} -> {tr:e}"
            )));
        }
        traces.push(tr);
        history.push(step);
        x = next;
        residual = wasserstein_residual(p, &x)?;
        if step < best_step {
            (best_step, since_best) = (step, 0);
        } else {
            since_best += 1;
        }
        let stalled = since_best >= WASSERSTEIN_STALL;
        converged = (step <= opts.tol || stalled) && residual <= 10.0 * opts.tol;
    }
    Ok(SolveOutcome {
        solution: x,
        residual,
        iterations,
        converged,
        history,
        trace_history: Some(traces),
    })
}

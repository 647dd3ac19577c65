//! The equation Φ_g(X) = Σ wᵢ g(Aᵢ♯X⁻¹) = 0 and its solution set Γ_g.
//!
//! The fixed-point map X ↦ Λ_g(ω; (X^{1/2}AᵢX^{1/2})^{1/2}) is not a
//! contraction in general; at some solutions it is repelling. The solver runs
//! the damped fixed-point iteration while it makes progress and then hands
//! over to Newton's method on Φ_g in the coordinates X^{1/2} e^H X^{1/2}.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::gen::{random_spd_in, rng_for};
use crate::linalg::Mat;
use crate::meansm::{generalized_karcher_from, karcher_mean_from, MeanProblem, SolveOutcome, SolverOptions};
use crate::pdcore::{thompson, SpdMatrix, SymMatrix};
use crate::repfn::{Family, RepFunction};

/// Thompson distance below which two solutions are identified.
pub const CLUSTER_THRESHOLD: f64 = 1e-4;

/// Residual below which the solver switches to Newton's method.
const NEWTON_SWITCH: f64 = 1e-3;

/// Step for the finite-difference Jacobian.
const JACOBIAN_STEP: f64 = 1e-5;

/// Φ_g(X) = Σ wᵢ g(Aᵢ♯X⁻¹) and its Frobenius norm.
pub fn residual(p: &MeanProblem, x: &SpdMatrix, g: &RepFunction) -> Result<(SymMatrix, f64)> {
    crate::pdcore::same_dim(p.n(), x.n())?;
    let xi = x.inverse();
    let mut acc = SymMatrix::zeros(p.n());
    for (w, a) in p.iter() {
        let s = a.sharp(&xi)?;
        acc = acc.add_scaled(w, &s.map(|v| g.eval(v))?);
    }
    let r = acc.frobenius();
    Ok((acc, r))
}

fn inner_options(opts: &SolverOptions) -> SolverOptions {
    SolverOptions { tol: opts.tol / 100.0, ..*opts }
}

/// Ψ(X) = Λ(ω; A₁♯X⁻¹, …, A_m♯X⁻¹) − I.
///
/// The inner Karcher mean is solved to `tol / 100`. It is an error if the
/// inner solve stops above `tol`.
pub fn psi_residual(p: &MeanProblem, x: &SpdMatrix, opts: &SolverOptions) -> Result<SymMatrix> {
    let xi = x.inverse();
    let q = p.map(|a| a.sharp(&xi))?;
    let out = karcher_mean_from(&q, SpdMatrix::identity(p.n()), &inner_options(opts))?;
    if !out.converged && out.residual > opts.tol {
        return Err(Error::NonConvergence(format!(
            "inner Karcher mean stopped at residual {:e} after {} iterations",
            out.residual, out.iterations
        )));
    }
    Ok(out.solution.as_sym().sub(&SymMatrix::identity(p.n())))
}

/// Λ_g(ω; (X^{1/2}AᵢX^{1/2})^{1/2}), warm-started at X.
fn fixed_point_map(p: &MeanProblem, g: &RepFunction, x: &SpdMatrix, opts: &SolverOptions) -> Result<SolveOutcome> {
    let h = x.sqrt();
    let c = p.map(|a| Ok(a.congruence_by(h.as_mat())?.sqrt()))?;
    match g {
        RepFunction::Log => karcher_mean_from(&c, x.clone(), &inner_options(opts)),
        _ => generalized_karcher_from(&c, g, x.clone(), &inner_options(opts)),
    }
}

/// Orthonormal basis coordinates of a symmetric matrix: diagonal entries,
/// then √2 times the strict upper triangle, row by row.
fn sym_to_vec(s: &SymMatrix) -> Vec<f64> {
    let n = s.n();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        v.push(s.get(i, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            v.push(std::f64::consts::SQRT_2 * s.get(i, j));
        }
    }
    v
}

fn vec_to_sym(n: usize, v: &[f64]) -> SymMatrix {
    let mut m = Mat::zeros(n);
    for i in 0..n {
        m[(i, i)] = v[i];
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let x = v[k] / std::f64::consts::SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    SymMatrix::new(m)
}

/// X^{1/2} e^H X^{1/2}.
fn chart(h_x: &SpdMatrix, h: &SymMatrix) -> Result<SpdMatrix> {
    h.exp()?.congruence_by(h_x.as_mat())
}

fn within(x: &SpdMatrix, lo: f64, hi: f64) -> bool {
    x.min_eig() >= lo && x.max_eig() <= hi
}

struct Newton<'a> {
    p: &'a MeanProblem,
    g: &'a RepFunction,
    lo: f64,
    hi: f64,
}

impl Newton<'_> {
    /// One Newton step from `x` with residual `r`. Returns the accepted
    /// iterate and its residual, or `None` if no damped step decreases the
    /// residual.
    fn step(&self, x: &SpdMatrix, r: &SymMatrix, min_damping: f64) -> Result<Option<(SpdMatrix, SymMatrix, f64)>> {
        let n = x.n();
        let d = n * (n + 1) / 2;
        let hx = x.sqrt();
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = JACOBIAN_STEP;
                let plus = residual(self.p, &chart(&hx, &vec_to_sym(n, &e))?, self.g)?.0;
                e[j] = -JACOBIAN_STEP;
                let minus = residual(self.p, &chart(&hx, &vec_to_sym(n, &e))?, self.g)?.0;
                Ok(sym_to_vec(&plus.sub(&minus).scale(0.5 / JACOBIAN_STEP)))
            })
            .collect::<Result<_>>()?;
        let mut jac = Mat::zeros(d);
        for (j, c) in cols.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = sym_to_vec(r).iter().map(|v| -v).collect();
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Ok(None);
        };
        let r0 = r.frobenius();
        let mut lambda = 1.0;
        while lambda >= min_damping {
            let dv: Vec<f64> = delta.iter().map(|v| lambda * v).collect();
            let trial = chart(&hx, &vec_to_sym(n, &dv))?;
            if within(&trial, self.lo, self.hi) {
                let (tr, tn) = residual(self.p, &trial, self.g)?;
                if tn < r0 {
                    return Ok(Some((trial, tr, tn)));
                }
            }
            lambda *= 0.5;
        }
        Ok(None)
    }
}

/// Solves Φ_g(X) = 0 from `x0`.
///
/// Damped fixed-point steps X ← X♯_β F(X) with F the fixed-point map are
/// taken while they reduce the residual; once the residual is below 10⁻³,
/// the damping underflows `min_damping`, or progress stalls, Newton's method
/// takes over. Leaving [α/2·I, 2β·I] in the fixed-point phase is a
/// divergence error; a converged solution outside [αI, βI] is an
/// internal-consistency error.
pub fn solve_equation(p: &MeanProblem, g: &RepFunction, x0: &SpdMatrix, opts: &SolverOptions) -> Result<SolveOutcome> {
    opts.validate()?;
    g.require(Family::Generator)?;
    crate::pdcore::same_dim(p.n(), x0.n())?;
    let (alpha, beta) = p.spectral_bounds();
    let (lo, hi) = (alpha / 2.0, 2.0 * beta);
    let mut x = x0.clone();
    let (mut rmat, mut r) = residual(p, &x, g)?;
    let mut history = vec![r];
    let mut iterations = 0;
    let mut damping = 1.0_f64;
    let mut slow = 0;

    while r > opts.tol && r > NEWTON_SWITCH && iterations < opts.max_iter {
        iterations += 1;
        let f = match fixed_point_map(p, g, &x, opts) {
            Ok(out) if out.residual.is_finite() => out.solution,
            _ => break,
        };
        let trial = if damping == 1.0 { f } else { x.sharp_t(&f, damping)? };
        if !within(&trial, lo, hi) {
            return Err(Error::Divergence(format!(
                "iterate spectrum [{:e}, {:e}] outside [{lo:e}, {hi:e}]",
                trial.min_eig(),
                trial.max_eig()
            )));
        }
        let (tm, tn) = residual(p, &trial, g)?;
        if tn >= r {
            damping *= 0.5;
            if damping < opts.min_damping {
                break;
            }
            continue;
        }
        slow = if tn > 0.99 * r { slow + 1 } else { 0 };
        x = trial;
        rmat = tm;
        r = tn;
        history.push(r);
        damping = (2.0 * damping).min(1.0);
        if slow >= 10 {
            break;
        }
    }

    let newton = Newton { p, g, lo, hi };
    while r > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        match newton.step(&x, &rmat, opts.min_damping)? {
            Some((nx, nm, nr)) => {
                x = nx;
                rmat = nm;
                r = nr;
                history.push(r);
            }
            None => break,
        }
    }

    let converged = r <= opts.tol;
    if converged {
        let slack = 1e-8;
        if x.min_eig() < alpha * (1.0 - slack) || x.max_eig() > beta * (1.0 + slack) {
            return Err(Error::InternalConsistency(format!(
                "solution spectrum [{:e}, {:e}] outside [{alpha:e}, {beta:e}]",
                x.min_eig(),
                x.max_eig()
            )));
        }
    }
    Ok(SolveOutcome { solution: x, residual: r, iterations, converged, history, trace_history: None })
}

/// One cluster of numerically identical solutions.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub representative: SpdMatrix,
    pub members: usize,
    /// Largest Thompson distance from a member to the representative.
    pub spread: f64,
    pub residual: f64,
    /// Index of the first start that reached this cluster.
    pub first_start: usize,
}

/// Empirical picture of Γ_g(ω; 𝔸) from a multistart run.
#[derive(Clone, Debug)]
pub struct SolutionSet {
    pub clusters: Vec<Cluster>,
    pub starts: usize,
    pub failures: usize,
}

impl SolutionSet {
    /// Cluster containing a point within the cluster threshold of `x`.
    pub fn find(&self, x: &SpdMatrix) -> Option<&Cluster> {
        self.clusters
            .iter()
            .find(|c| thompson(&c.representative, x).is_ok_and(|d| d <= CLUSTER_THRESHOLD))
    }

    /// Largest intra-cluster spread.
    pub fn max_spread(&self) -> f64 {
        self.clusters.iter().map(|c| c.spread).fold(0.0, f64::max)
    }
}

/// Starting point for start `index`: Q D Qᵀ with D log-uniform in [α, β].
pub fn multistart_point(p: &MeanProblem, seed: u64, index: usize) -> SpdMatrix {
    let (alpha, beta) = p.spectral_bounds();
    random_spd_in(p.n(), alpha, beta, &mut rng_for(seed, index as u64))
}

/// Multistart exploration of the solution set.
///
/// Starts are solved in parallel and merged in start-index order, so the
/// result depends only on the inputs and the seed. Each cluster
/// representative is polished by a further solve from itself.
pub fn explore_solutions(
    p: &MeanProblem,
    g: &RepFunction,
    n_starts: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Result<SolutionSet> {
    if n_starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    opts.validate()?;
    g.require(Family::Generator)?;
    let results: Vec<Option<SolveOutcome>> = (0..n_starts)
        .into_par_iter()
        .map(|i| {
            let x0 = multistart_point(p, seed, i);
            solve_equation(p, g, &x0, opts).ok().filter(|o| o.converged)
        })
        .collect();

    let mut failures = 0;
    let mut groups: Vec<(usize, SolveOutcome, Vec<SpdMatrix>)> = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        let Some(out) = r else {
            failures += 1;
            continue;
        };
        let hit = groups
            .iter_mut()
            .find(|(_, rep, _)| thompson(&rep.solution, &out.solution).is_ok_and(|d| d <= CLUSTER_THRESHOLD));
        match hit {
            Some((_, _, members)) => members.push(out.solution),
            None => {
                let s = out.solution.clone();
                groups.push((i, out, vec![s]));
            }
        }
    }

    let clusters = groups
        .into_par_iter()
        .map(|(first_start, rep, members)| {
            let polished = solve_equation(p, g, &rep.solution, opts)
                .ok()
                .filter(|o| o.converged && o.residual <= rep.residual)
                .unwrap_or(rep);
            let spread = members
                .iter()
                .map(|m| thompson(&polished.solution, m))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(Cluster {
                representative: polished.solution,
                members: members.len(),
                spread,
                residual: polished.residual,
                first_start,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionSet { clusters, starts: n_starts, failures })
}

/// Central difference (Φ(X + hX) − Φ(X − hX)) / 2h of Φ = Φ_log along X.
///
/// Φ(cX) = Φ(X) − ½ log(c) I, so the exact value is −½I at every X; the
/// difference carries a truncation error of about h²/6.
pub fn flow_derivative_check(p: &MeanProblem, x: &SpdMatrix, h: f64) -> Result<SymMatrix> {
    if !(1e-6..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!("step h = {h:e} outside [1e-6, 1e-3]")));
    }
    let plus = x.scale(1.0 + h)?;
    let minus = x.scale(1.0 - h)?;
    let g = RepFunction::Log;
    let fp = residual(p, &plus, &g)?.0;
    let fm = residual(p, &minus, &g)?.0;
    Ok(fp.sub(&fm).scale(0.5 / h))
}

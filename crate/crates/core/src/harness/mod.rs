//! Seeded property suites over random instances and empirical explorers
//! for two open comparison questions.
//!
//! Every trial is a pure function of (suite, seed, trial index, config), so
//! trials run in parallel and any failure replays bit for bit through
//! [`run_trial`].

pub mod gen;
mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meansm::{MeanProblem, SolverOptions};

pub use gen::{random_problem, random_spd};

/// Theorem suites. Each checks one stated result on random instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    TwoVarChain,
    MultiChain,
    KarcherProps,
    GammaProps,
    GammaBounds,
    NearSandwich,
    LeMajor,
    TraceProp,
    PowerCmp,
    LieTrotter,
    GeodesicDs,
    WassTrace,
    FlowDeriv,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::TwoVarChain,
        Suite::MultiChain,
        Suite::KarcherProps,
        Suite::GammaProps,
        Suite::GammaBounds,
        Suite::NearSandwich,
        Suite::LeMajor,
        Suite::TraceProp,
        Suite::PowerCmp,
        Suite::LieTrotter,
        Suite::GeodesicDs,
        Suite::WassTrace,
        Suite::FlowDeriv,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Suite::TwoVarChain => "two-var-chain",
            Suite::MultiChain => "multi-chain",
            Suite::KarcherProps => "karcher-props",
            Suite::GammaProps => "gamma-props",
            Suite::GammaBounds => "gamma-bounds",
            Suite::NearSandwich => "near-sandwich",
            Suite::LeMajor => "le-major",
            Suite::TraceProp => "trace-prop",
            Suite::PowerCmp => "power-cmp",
            Suite::LieTrotter => "lie-trotter",
            Suite::GeodesicDs => "geodesic-ds",
            Suite::WassTrace => "wass-trace",
            Suite::FlowDeriv => "flow-deriv",
        }
    }

    /// The statement the suite checks.
    pub fn citation(&self) -> &'static str {
        match self {
            Suite::TwoVarChain => "A #_t B <_log exp((1-t) log A + t log B) <_log A natural_t B, and A natural_t B is near-below A diamond_t B",
            Suite::MultiChain => "H <= Karcher (Loewner), Karcher <_log LE, LE <_wlog Wasserstein, Wasserstein <= A (Loewner)",
            Suite::KarcherProps => "Karcher mean: joint homogeneity, permutation invariance, monotonicity, Thompson contraction, congruence invariance, self-duality, determinant identity, H <= Karcher <= A",
            Suite::GammaProps => "solution set of sum w_i log(A_i # X^-1) = 0: commuting case, homogeneity, permutation and unitary invariance, inversion, determinant identity, compound-power membership",
            Suite::GammaBounds => "solutions X satisfy 2I - sum w_i A_i^-1 <= X, X <= (2I - sum w_i A_i)^-1 when the latter is positive, and alpha I <= X <= beta I",
            Suite::NearSandwich => "H is near-below S and S is near-below A for every solution S",
            Suite::LeMajor => "LE <_log S for every solution S",
            Suite::TraceProp => "S <= I implies tr S^3 <= tr Wasserstein mean",
            Suite::PowerCmp => "S >= I implies S^-1 <= P_t for t in (0, 1]",
            Suite::LieTrotter => "Karcher, Wasserstein and S of A^s, raised to 1/s, converge to LE as s -> 0",
            Suite::GeodesicDs => "d_S(A natural_s B, A natural_t B) = |s - t| d_S(A, B)",
            Suite::WassTrace => "K-iteration traces are nondecreasing and bounded by tr of the Wasserstein mean",
            Suite::FlowDeriv => "derivative of Phi along X is -I/2",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.id() == s)
            .ok_or_else(|| Error::Unknown(format!("suite '{s}'")))
    }
}

/// Settings shared by all trials of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    /// Tolerance for the checked inequalities and identities.
    pub tol: f64,
    pub solver: SolverOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { tol: 1e-9, solver: SolverOptions::default() }
    }
}

/// Result of one trial: the worst margin over all checks (≥ 0 passes) and
/// the check that attained it.
#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial: usize,
    /// Seed of the random instance.
    pub instance_seed: u64,
    pub instance: MeanProblem,
    pub margin: f64,
    pub worst_check: String,
    /// Smallest raw log-majorization slack (conjecture explorers only).
    pub slack: Option<f64>,
    /// Solver or evaluation error, if any; such a trial fails.
    pub error: Option<String>,
}

impl TrialResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.margin >= 0.0
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub citation: String,
    pub seed: u64,
    pub trials: usize,
    pub passes: usize,
    pub failures: Vec<TrialResult>,
    /// Smallest margin over all trials.
    pub worst_margin: f64,
    /// Trial attaining the smallest margin.
    pub extremal: Option<TrialResult>,
    /// Smallest raw log-majorization slack over all trials and k-products
    /// (conjecture explorers only).
    pub min_slack: Option<f64>,
    pub wall_time: Duration,
}

/// Condition number used for trial `i`.
pub fn trial_cond(i: usize) -> f64 {
    [10.0, 100.0, 1000.0][(i / 9) % 3]
}

/// The random instance of trial `i` of a run started with `seed`.
pub fn trial_instance(seed: u64, i: usize) -> (u64, MeanProblem) {
    let (n, m) = gen::trial_shape(i);
    let s = gen::trial_seed(seed, i);
    (s, random_problem(n, m, trial_cond(i), s))
}

/// Runs trial `i` of `suite`. Pure: identical inputs give identical output.
pub fn run_trial(suite: Suite, seed: u64, i: usize, cfg: &SuiteConfig) -> TrialResult {
    let (instance_seed, p) = trial_instance(seed, i);
    let mut checks = suites::Checks::new(cfg.tol);
    let out = suites::run(suite, &p, instance_seed, cfg, &mut checks);
    let (margin, worst_check) = checks.worst();
    TrialResult {
        trial: i,
        instance_seed,
        instance: p,
        margin,
        worst_check,
        slack: checks.slack(),
        error: out.err().map(|e| e.to_string()),
    }
}

fn summarize(id: &str, citation: &str, seed: u64, results: Vec<TrialResult>, start: Instant) -> SuiteReport {
    let trials = results.len();
    let passes = results.iter().filter(|r| r.passed()).count();
    let extremal = results
        .iter()
        .filter(|r| r.error.is_none())
        .min_by(|a, b| a.margin.total_cmp(&b.margin))
        .cloned();
    let worst_margin = extremal.as_ref().map_or(f64::NAN, |r| r.margin);
    let min_slack = results.iter().filter_map(|r| r.slack).reduce(f64::min);
    let failures = results.into_iter().filter(|r| !r.passed()).collect();
    SuiteReport {
        suite: id.to_string(),
        citation: citation.to_string(),
        seed,
        trials,
        passes,
        failures,
        worst_margin,
        extremal,
        min_slack,
        wall_time: start.elapsed(),
    }
}

/// Runs `trials` seeded trials of `suite`. Failures are recorded, never
/// raised.
pub fn run_suite(suite: Suite, trials: usize, seed: u64, cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let results: Vec<TrialResult> = (0..trials).into_par_iter().map(|i| run_trial(suite, seed, i, cfg)).collect();
    summarize(suite.id(), suite.citation(), seed, results, start)
}

/// Open comparison questions explored empirically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conjecture {
    /// S ≺_wlog Ω.
    SWlogOmega,
    /// S(ω; 𝔸ᵖ)^{1/p} ≺_log S(ω; 𝔸) for p ∈ (0, 1], with a fixed number of
    /// matrices.
    PPowerSp { m: usize },
}

impl Conjecture {
    pub fn id(&self) -> &'static str {
        match self {
            Conjecture::SWlogOmega => "s-wlog-omega",
            Conjecture::PPowerSp { .. } => "p-power-sp",
        }
    }

    pub fn citation(&self) -> &'static str {
        match self {
            Conjecture::SWlogOmega => "open: S <_wlog Wasserstein mean (evidence only)",
            Conjecture::PPowerSp { .. } => {
                "S(A^p)^(1/p) <_log S(A), 0 < p <= 1 (proved for two matrices, open otherwise; evidence only)"
            }
        }
    }

    pub fn parse(id: &str, m: usize) -> Result<Conjecture> {
        match id {
            "s-wlog-omega" => Ok(Conjecture::SWlogOmega),
            "p-power-sp" if m >= 2 => Ok(Conjecture::PPowerSp { m }),
            "p-power-sp" => Err(Error::InvalidArgument("p-power-sp needs m >= 2".into())),
            _ => Err(Error::Unknown(format!("conjecture '{id}'"))),
        }
    }
}

/// Conjecture trial `i`: same shapes as the suites except that the
/// p-power explorer fixes m.
pub fn conjecture_trial(c: Conjecture, seed: u64, i: usize, cfg: &SuiteConfig) -> TrialResult {
    let (n, m0) = gen::trial_shape(i);
    let m = match c {
        Conjecture::PPowerSp { m } => m,
        Conjecture::SWlogOmega => m0,
    };
    let s = gen::trial_seed(seed, i);
    let p = random_problem(n, m, trial_cond(i), s);
    let mut checks = suites::Checks::new(cfg.tol);
    let out = suites::conjecture(c, &p, s, cfg, &mut checks);
    let (margin, worst_check) = checks.worst();
    TrialResult {
        trial: i,
        instance_seed: s,
        instance: p,
        margin,
        worst_check,
        slack: checks.slack(),
        error: out.err().map(|e| e.to_string()),
    }
}

/// Searches random instances for violations. `failures` holds violations
/// and solver errors; `worst_margin` is the minimum slack observed. A clean
/// run is evidence, not proof.
pub fn conjecture_explore(c: Conjecture, trials: usize, seed: u64, cfg: &SuiteConfig) -> SuiteReport {
    let start = Instant::now();
    let results: Vec<TrialResult> = (0..trials).into_par_iter().map(|i| conjecture_trial(c, seed, i, cfg)).collect();
    summarize(c.id(), c.citation(), seed, results, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ids_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.id().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn replay_is_bitwise() {
        let cfg = SuiteConfig::default();
        for suite in [Suite::MultiChain, Suite::GammaProps] {
            let a = run_trial(suite, 5, 4, &cfg);
            let b = run_trial(suite, 5, 4, &cfg);
            assert_eq!(a.margin.to_bits(), b.margin.to_bits());
        }
    }

    #[test]
    fn zero_tolerance_reports_failures() {
        let cfg = SuiteConfig { tol: 0.0, ..Default::default() };
        let r = run_suite(Suite::MultiChain, 12, 3, &cfg);
        assert!(!r.failures.is_empty());
        assert_eq!(r.passes + r.failures.len(), r.trials);
    }

    #[test]
    fn every_suite_runs() {
        let cfg = SuiteConfig::default();
        for s in Suite::ALL {
            let r = run_suite(s, 3, 1, &cfg);
            assert_eq!(r.passes, 3, "{s}: {:?}", r.failures.first().map(|f| (&f.worst_check, f.margin, &f.error)));
        }
    }

    #[test]
    fn conjectures_run() {
        let cfg = SuiteConfig::default();
        for c in [Conjecture::SWlogOmega, Conjecture::PPowerSp { m: 2 }, Conjecture::PPowerSp { m: 3 }] {
            let r = conjecture_explore(c, 3, 1, &cfg);
            assert_eq!(r.trials, 3);
            assert!(r.worst_margin.is_finite());
            assert!(r.min_slack.is_some());
        }
    }
}

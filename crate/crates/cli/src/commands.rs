//! Subcommand implementations. Each returns its results and citations; the
//! report is assembled and written in one place.

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

use spdmeans::counterex::{self, Rect2, REFERENCE_EDGE_BOUNDS, REFERENCE_RECT};
use spdmeans::harness::{self, Conjecture, Suite, SuiteConfig, SuiteReport, TrialResult};
use spdmeans::means2::{alt_mean, geo_mean_t, spectral_mean_t, verify_alt_equation, wasserstein2_t};
use spdmeans::meansm::{
    elementary_mean, generalized_karcher, karcher_mean, power_mean, wasserstein_mean, ElementaryKind, SolveOutcome,
};
use spdmeans::speqsolve::{explore_solutions, solve_equation, SolutionSet};
use spdmeans::{Error as CoreError, MeanProblem, RepFunction, SolverOptions, SpdMatrix};

use crate::files::{self, spd_json, Report};
use crate::{Cli, CliError, Command, CounterAction, Mean2Kind, MeanKind};

/// Outcome of a command that produced a report.
struct Outcome {
    results: Map<String, Value>,
    citations: Vec<String>,
    /// Nonzero exit code with its message, for reports that record a failure.
    failure: Option<(u8, String)>,
}

impl Outcome {
    fn ok(results: Map<String, Value>, citations: &[&str]) -> Self {
        Outcome { results, citations: citations.iter().map(|s| s.to_string()).collect(), failure: None }
    }

    fn fail_if(mut self, bad: bool, code: u8, msg: impl FnOnce() -> String) -> Self {
        if bad {
            self.failure = Some((code, msg()));
        }
        self
    }
}

struct Ctx<'a> {
    cli: &'a Cli,
    inputs: Map<String, Value>,
    opts: SolverOptions,
    warnings: Vec<String>,
}

impl Ctx<'_> {
    fn read(&mut self, key: &str, path: &Path) -> Result<String, CliError> {
        let (text, digest) = files::read_file(path)?;
        self.inputs.insert(key.to_string(), json!({ "path": path.display().to_string(), "sha256": digest }));
        Ok(text)
    }

    fn problem(&mut self) -> Result<MeanProblem, CliError> {
        let path = self.cli.common.input.clone().ok_or_else(|| CliError::Usage("--input is required".into()))?;
        let text = self.read("input", &path)?;
        let (p, warnings) = files::parse_problem_str(&text, &path.display().to_string())?;
        self.warnings.extend(warnings);
        Ok(p)
    }
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("object literal"),
    }
}

fn parse_g(s: &str) -> Result<RepFunction, CliError> {
    s.parse::<RepFunction>().map_err(|e| CliError::Usage(e.to_string()))
}

fn solve_json(out: &SolveOutcome) -> Value {
    json!({
        "solution": spd_json(&out.solution),
        "residual": out.residual,
        "iterations": out.iterations,
        "converged": out.converged,
    })
}

fn solved(out: SolveOutcome, extra: Value, citations: &[&str]) -> Outcome {
    let mut results = obj(solve_json(&out));
    results.extend(obj(extra));
    let (conv, r) = (out.converged, out.residual);
    Outcome::ok(results, citations).fail_if(!conv, 2, || format!("residual {r:e} after {} iterations", out.iterations))
}

pub fn run(cli: &Cli, argv: Vec<String>, start: Instant) -> Result<u8, CliError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = cli.common.tol {
        opts.tol = t;
    }
    if let Some(k) = cli.common.max_iter {
        opts.max_iter = k;
    }
    let mut ctx = Ctx { cli, inputs: Map::new(), opts, warnings: Vec::new() };

    if let Command::Gen { n, m, cond, seed } = cli.command {
        if n == 0 || m == 0 || !(cond >= 1.0) {
            return Err(CliError::Usage("gen needs n >= 1, m >= 1, cond >= 1".into()));
        }
        let p = harness::random_problem(n, m, cond, seed);
        let doc = serde_json::to_string_pretty(&files::problem_file(&p, None)).expect("serializable");
        emit(cli, &(doc + "\n"))?;
        return Ok(0);
    }

    let check_tol = cli.common.tol.unwrap_or(SuiteConfig::default().tol);
    let suite_cmd = matches!(cli.command, Command::Verify { .. } | Command::Conjecture { .. });
    if suite_cmd {
        // --tol is the check tolerance here; solvers keep their default target.
        ctx.opts.tol = SolverOptions::default().tol;
    }
    ctx.opts.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let outcome = dispatch(&mut ctx, check_tol)?;
    for w in &ctx.warnings {
        eprintln!("warning: {w}");
    }
    let mut tolerances = obj(json!({
        "solver_tol": ctx.opts.tol,
        "max_iter": ctx.opts.max_iter,
        "min_damping": ctx.opts.min_damping,
    }));
    if suite_cmd {
        tolerances.insert("check_tol".into(), json!(check_tol));
    }
    let report = Report {
        command: argv,
        inputs: ctx.inputs,
        tolerances,
        citations: outcome.citations,
        results: outcome.results,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&report.to_json()).expect("serializable") + "\n";
    emit(cli, &text)?;
    match outcome.failure {
        Some((code, msg)) => {
            eprintln!("{}", if code == 2 { CliError::NonConvergence(msg) } else { CliError::Certification(msg) });
            Ok(code)
        }
        None => Ok(0),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.common.out {
        Some(path) => files::write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(ctx: &mut Ctx, check_tol: f64) -> Result<Outcome, CliError> {
    let cli = ctx.cli;
    let opts = ctx.opts;
    match &cli.command {
        Command::Mean { kind, t, g } => {
            let p = ctx.problem()?;
            mean(&p, *kind, *t, g.as_deref(), &opts)
        }
        Command::Mean2 { kind, t, f } => {
            let p = ctx.problem()?;
            mean2(&p, *kind, *t, f.as_deref())
        }
        Command::Solve { g, x0, starts, seed } => {
            let g = parse_g(g)?;
            let p = ctx.problem()?;
            if let Some(k) = starts {
                return explore(&p, &g, *k, seed.unwrap_or(0), &opts);
            }
            let start = match x0 {
                Some(path) => {
                    let text = ctx.read("x0", path)?;
                    files::parse_matrix_doc(&text, &path.display().to_string())?
                }
                None => spdmeans::meansm::arithmetic_mean(&p),
            };
            let out = solve_equation(&p, &g, &start, &opts)?;
            Ok(solved(out, json!({ "g": g.to_string() }), &[CITE_EQUATION]))
        }
        Command::Explore { g, starts, seed } => {
            let g = parse_g(g)?;
            let p = ctx.problem()?;
            explore(&p, &g, *starts, *seed, &opts)
        }
        Command::Counterexample { action } => counterexample(action, &opts),
        Command::Verify { suite, trials, seed } => {
            let suite: Suite = suite.parse().map_err(|e: CoreError| CliError::Usage(e.to_string()))?;
            let cfg = SuiteConfig { tol: check_tol, solver: opts };
            let r = harness::run_suite(suite, *trials, *seed, &cfg);
            let failed = r.failures.len();
            Ok(Outcome::ok(suite_json(&r), &[]).with_citation(&r.citation).fail_if(failed > 0, 3, || {
                format!("{failed} of {} trials failed", r.trials)
            }))
        }
        Command::Conjecture { id, trials, seed, m } => {
            let c = Conjecture::parse(id, *m).map_err(|e| CliError::Usage(e.to_string()))?;
            let cfg = SuiteConfig { tol: check_tol, solver: opts };
            let r = harness::conjecture_explore(c, *trials, *seed, &cfg);
            let mut results = suite_json(&r);
            let violations = r.failures.iter().filter(|f| f.error.is_none()).count();
            results.insert("violations".into(), json!(violations));
            results.insert("solver_errors".into(), json!(r.failures.len() - violations));
            results.insert("min_slack".into(), json!(r.min_slack));
            results.insert("m".into(), json!(if id == "p-power-sp" { Some(*m) } else { None }));
            results.insert("claim".into(), json!("evidence only; a clean run proves nothing"));
            Ok(Outcome::ok(results, &[]).with_citation(&r.citation))
        }
        Command::Gen { .. } => unreachable!("handled before dispatch"),
    }
}

impl Outcome {
    fn with_citation(mut self, c: &str) -> Self {
        self.citations.push(c.to_string());
        self
    }
}

const CITE_EQUATION: &str = "solution set of sum w_i g(A_i # X^-1) = 0";

fn mean(p: &MeanProblem, kind: MeanKind, t: Option<f64>, g: Option<&str>, opts: &SolverOptions) -> Result<Outcome, CliError> {
    let elementary = |k: ElementaryKind, cite: &str| {
        let x = elementary_mean(k, p);
        Outcome::ok(obj(json!({ "kind": format!("{kind:?}"), "solution": spd_json(&x) })), &[cite])
    };
    Ok(match kind {
        MeanKind::Arithmetic => elementary(ElementaryKind::Arithmetic, "arithmetic mean sum w_i A_i"),
        MeanKind::Harmonic => elementary(ElementaryKind::Harmonic, "harmonic mean (sum w_i A_i^-1)^-1"),
        MeanKind::LogEuclidean => elementary(ElementaryKind::LogEuclidean, "log-Euclidean mean exp(sum w_i log A_i)"),
        MeanKind::Karcher => solved(
            karcher_mean(p, opts)?,
            json!({ "kind": "Karcher" }),
            &["Karcher mean: sum w_i log(X^-1/2 A_i X^-1/2) = 0"],
        ),
        MeanKind::Power => {
            let t = t.ok_or_else(|| CliError::Usage("--t is required for the power mean".into()))?;
            solved(power_mean(p, t, opts)?, json!({ "kind": "Power", "t": t }), &["power mean X = sum w_i X #_t A_i"])
        }
        MeanKind::Wasserstein => {
            let out = wasserstein_mean(p, opts)?;
            let traces = out.trace_history.clone();
            solved(out, json!({ "kind": "Wasserstein", "trace_history": traces }), &[
                "Wasserstein mean: sum w_i (X^1/2 A_i X^1/2)^1/2 = X",
            ])
        }
        MeanKind::Generalized => {
            let g = parse_g(g.ok_or_else(|| CliError::Usage("--g is required for the generalized mean".into()))?)?;
            solved(generalized_karcher(p, &g, opts)?, json!({ "kind": "Generalized", "g": g.to_string() }), &[
                "generalized Karcher mean: sum w_i g(X^-1/2 A_i X^-1/2) = 0",
            ])
        }
    })
}

fn mean2(p: &MeanProblem, kind: Mean2Kind, t: f64, f: Option<&str>) -> Result<Outcome, CliError> {
    if p.m() < 2 {
        return Err(CliError::Usage("mean2 needs at least two matrices".into()));
    }
    let (a, b) = (&p.matrices()[0], &p.matrices()[1]);
    let (x, cite, extra): (SpdMatrix, &str, Value) = match kind {
        Mean2Kind::Geo => (geo_mean_t(a, b, t)?, "weighted geometric mean A #_t B", Value::Null),
        Mean2Kind::Spectral => (spectral_mean_t(a, b, t)?, "spectral geometric mean A natural_t B", Value::Null),
        Mean2Kind::Wasserstein => (wasserstein2_t(a, b, t)?, "Wasserstein mean A diamond_t B", Value::Null),
        Mean2Kind::Alt => {
            let f = f.ok_or_else(|| CliError::Usage("--f is required for --kind alt".into()))?;
            let f: RepFunction = f.parse().map_err(|e: CoreError| CliError::Usage(e.to_string()))?;
            let x = alt_mean(a, b, &f)?;
            let r = verify_alt_equation(a, b, &f, &x)?;
            (x, "mean defined by A sigma_f X^-1 = X^-1 sigma_f B", json!({ "f": f.to_string(), "equation_residual": r }))
        }
    };
    let mut results = obj(json!({ "kind": format!("{kind:?}"), "t": t, "solution": spd_json(&x) }));
    if !extra.is_null() {
        results.extend(obj(extra));
    }
    Ok(Outcome::ok(results, &[cite]))
}

fn set_json(s: &SolutionSet) -> Value {
    let clusters: Vec<Value> = s
        .clusters
        .iter()
        .map(|c| {
            json!({
                "representative": spd_json(&c.representative),
                "members": c.members,
                "spread": c.spread,
                "residual": c.residual,
                "first_start": c.first_start,
            })
        })
        .collect();
    json!({ "starts": s.starts, "failures": s.failures, "cluster_count": s.clusters.len(), "clusters": clusters })
}

fn explore(p: &MeanProblem, g: &RepFunction, starts: usize, seed: u64, opts: &SolverOptions) -> Result<Outcome, CliError> {
    let s = explore_solutions(p, g, starts, seed, opts)?;
    let mut results = obj(set_json(&s));
    results.insert("g".into(), json!(g.to_string()));
    results.insert("seed".into(), json!(seed));
    Ok(Outcome::ok(results, &[CITE_EQUATION]))
}

fn rect_json(r: &Rect2) -> Value {
    json!({ "u": [r.u_lo, r.u_hi], "v": [r.v_lo, r.v_hi] })
}

fn certificate_json(c: &counterex::MirandaReport, r: &Rect2) -> Value {
    json!({
        "rect": rect_json(r),
        "certified": c.certified,
        "left_min_f1": c.left_min,
        "right_max_f1": c.right_max,
        "bottom_min_f2": c.bottom_min,
        "top_max_f2": c.top_max,
        "samples_per_edge": c.samples_per_edge,
        "margin": c.margin,
        "reference_edge_bounds": REFERENCE_EDGE_BOUNDS,
    })
}

const CITE_COUNTER: &str =
    "non-uniqueness: the spectral mean equation with three 2x2 matrices has X0 = diag(e^3, e^-3) and a second solution";

fn counterexample(action: &CounterAction, opts: &SolverOptions) -> Result<Outcome, CliError> {
    match action {
        CounterAction::Build => {
            let inst = counterex::build_instance();
            let problem = serde_json::to_value(files::problem_file(&inst.problem, None)).expect("serializable");
            Ok(Outcome::ok(
                obj(json!({
                    "problem": problem,
                    "x0": spd_json(&inst.x0),
                    "b": inst.b.iter().map(spd_json).collect::<Vec<_>>(),
                    "c": counterex::C,
                    "det_errors_exact": counterex::exact::det_errors(),
                    "x0_residual_exact": counterex::exact::residual_norm(3.0, 0.0),
                })),
                &[CITE_COUNTER],
            ))
        }
        CounterAction::Reproduce { samples, margin } => {
            let r = match counterex::reproduce(*samples, *margin, opts) {
                Ok(r) => r,
                Err(CoreError::Precondition(m)) => return Err(CliError::Certification(m)),
                Err(e) => return Err(e.into()),
            };
            let s = &r.second;
            Ok(Outcome::ok(
                obj(json!({
                    "x0": spd_json(&r.instance.x0),
                    "x0_residual_exact": r.x0_residual,
                    "x0_residual_f64": r.x0_residual_f64,
                    "certificate": certificate_json(&r.certificate, &REFERENCE_RECT),
                    "second": {
                        "u": s.u,
                        "v": s.v,
                        "x": spd_json(&s.x),
                        "f": [s.f.0, s.f.1],
                        "residual": s.residual,
                        "thompson_distance_to_x0": s.distance_to_x0,
                        "newton_iterations": s.newton_iterations,
                        "subdivisions": s.subdivisions,
                    },
                    "solutions": 2,
                })),
                &[CITE_COUNTER],
            ))
        }
        CounterAction::Certify { rect, samples, margin } => {
            let r = match rect {
                Some(v) if v.len() == 4 => Rect2::new(v[0], v[1], v[2], v[3]).map_err(|e| CliError::Usage(e.to_string()))?,
                Some(_) => return Err(CliError::Usage("--rect takes u_lo,u_hi,v_lo,v_hi".into())),
                None => REFERENCE_RECT,
            };
            let c = counterex::miranda_certify(&r, *samples, *margin).map_err(|e| CliError::Usage(e.to_string()))?;
            let certified = c.certified;
            Ok(Outcome::ok(obj(json!({ "certificate": certificate_json(&c, &r) })), &[
                "sign conditions of the Poincare-Miranda theorem on the rectangle edges",
            ])
            .fail_if(!certified, 3, || "sign conditions do not hold on the sampled edges".into()))
        }
    }
}

fn trial_json(f: &TrialResult) -> Value {
    json!({
        "trial": f.trial,
        "instance_seed": f.instance_seed,
        "margin": f.margin,
        "check": f.worst_check,
        "error": f.error,
        "instance": serde_json::to_value(files::problem_file(&f.instance, None)).expect("serializable"),
    })
}

fn suite_json(r: &SuiteReport) -> Map<String, Value> {
    obj(json!({
        "suite": r.suite,
        "seed": r.seed,
        "trials": r.trials,
        "passes": r.passes,
        "failures": r.failures.iter().map(trial_json).collect::<Vec<_>>(),
        "worst_margin": r.worst_margin,
        "extremal": r.extremal.as_ref().map(trial_json),
    }))
}

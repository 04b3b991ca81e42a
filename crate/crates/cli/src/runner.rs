//! Execution of one grid point (or one Krylov trial) per task, fanned out over a
//! rayon pool and collected in `run_id` order.

use std::time::Instant;

use fosp_core::geometry::Domain;
use fosp_core::instances::{build_instance, certificate, Family, HardInstanceSpec};
use fosp_core::krylov::{approx_max, solve_reduced, QuadraticForm};
use fosp_core::linalg::norm;
use fosp_core::moreau::{moreau_grad, MaxMethod, SurrogatePrimal, TruePrimal};
use fosp_core::problems::{
    make_ball_cubic, make_intro_example, make_quadratic, random_ball_cubic_data, ProblemInstance, Quadratic,
};
use fosp_core::solvers::{
    alg3_parameters, alg3_telescoping_check, residual_identity_error, seeded_stream, solve, Algorithm, MaxOracle, SolverConfig,
};
use fosp_core::surrogate::SurrogateModel;
use fosp_core::theory::{check_theorem1, eps_threshold, threshold_diameter};
use fosp_core::SmoothnessProfile;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    AlgorithmName, ExperimentConfig, FamilyName, GridPoint, InstanceConfig, KrylovSection, OracleName, SolverSection,
    VerifyConfig,
};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Run,
    Certify,
    CheckDiameter,
    KrylovBench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Certify => "certify",
            Command::CheckDiameter => "check-diameter",
            Command::KrylovBench => "krylov-bench",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Replaces the config seed.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the rayon default.
    pub jobs: Option<usize>,
    /// Records wall-clock times (breaks byte-identical output).
    pub timing: bool,
}

/// One CSV row. `None` renders as an empty field.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub run_id: String,
    pub family: String,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    #[serde(rename = "D")]
    pub d: Option<f64>,
    pub eps: Option<f64>,
    pub algorithm: String,
    #[serde(rename = "T")]
    pub t: Option<u64>,
    pub eps_star: Option<f64>,
    pub moreau_grad_surrogate: Option<f64>,
    pub moreau_grad_true: Option<f64>,
    pub certified: bool,
    pub regime: String,
    pub wall_ms: Option<f64>,
    pub seed: u64,
}

/// Boolean facts about a run that the `[assert]` block can refer to.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Checks {
    pub surrogate_stationary: Option<bool>,
    pub true_violation: Option<bool>,
    pub separates: Option<bool>,
    pub cross_checked: Option<bool>,
    pub bracketed: Option<bool>,
    pub admissible: Option<bool>,
    pub telescoping: Option<bool>,
    pub warnings: usize,
}

pub type PlotRow = (usize, f64, f64, u64);

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub row: Row,
    pub checks: Checks,
    pub detail: Value,
    /// `(t, ε_t, φ̂ estimate, cumulative oracle calls)` for solver runs.
    pub plot: Option<Vec<PlotRow>>,
}

#[derive(Debug)]
pub struct RunFailure {
    pub run_id: String,
    pub seed: u64,
    pub error: CliError,
    /// Best iterate reported by a budget failure.
    pub best: Option<Vec<f64>>,
}

#[derive(Debug)]
pub struct Outcome {
    pub command: Command,
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of task `index` under the global seed.
pub fn run_seed(global: u64, index: usize) -> u64 {
    splitmix64(global ^ splitmix64(index as u64))
}

fn run_id(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len().max(4);
    format!("{index:0width$}")
}

enum Task {
    Point(GridPoint),
    Trial,
}

/// Runs every task of `cmd` and gathers rows sorted by `run_id`.
pub fn execute(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let tasks: Vec<Task> = match cmd {
        Command::KrylovBench => {
            let k = cfg.krylov.as_ref().ok_or_else(|| CliError::Config("krylov-bench needs a [krylov] section".into()))?;
            let sw = &cfg.sweep;
            if sw.k.is_some() || sw.lambda.is_some() || sw.mu.is_some() || sw.rho.is_some() || sw.d.is_some() || sw.eps.is_some() || sw.repeats.is_some() {
                return Err(CliError::Config("krylov-bench takes its grid from [krylov]; remove [sweep]".into()));
            }
            if k.trials == 0 {
                return Err(CliError::Config("krylov.trials must be at least 1".into()));
            }
            (0..k.trials).map(|_| Task::Trial).collect()
        }
        _ => {
            let inst = cfg.instance.as_ref().ok_or_else(|| CliError::Config(format!("{} needs an [instance] section", cmd.name())))?;
            if cmd == Command::Run && cfg.solver.is_none() {
                return Err(CliError::Config("run needs a [solver] section".into()));
            }
            if cmd == Command::Certify && !matches!(inst, InstanceConfig::Hard { .. }) {
                return Err(CliError::Config("certify needs kind = \"hard\"".into()));
            }
            cfg.sweep.points(0)?.into_iter().map(Task::Point).collect()
        }
    };
    let config_hash = crate::report::config_hash(cmd, &cfg);
    let total = tasks.len();
    let work = |(i, task): (usize, &Task)| -> Result<RunRecord, RunFailure> {
        let id = run_id(i, total);
        let seed = run_seed(cfg.seed, i);
        let start = Instant::now();
        let res = match task {
            Task::Trial => krylov_trial(cfg.krylov.as_ref().expect("checked"), seed),
            Task::Point(pt) => {
                let inst = cfg.instance.as_ref().expect("checked");
                match cmd {
                    Command::Run => run_solver(&cfg, inst, cfg.solver.as_ref().expect("checked"), pt, seed),
                    Command::Certify => run_certificate(inst, &cfg.verify, pt),
                    Command::CheckDiameter => run_check_diameter(&cfg, inst, pt),
                    Command::KrylovBench => unreachable!("trials only"),
                }
            }
        };
        let wall = start.elapsed().as_secs_f64() * 1e3;
        match res {
            Ok(mut rec) => {
                rec.row.run_id = id.clone();
                rec.row.seed = seed;
                let obj = rec.detail.as_object_mut().expect("detail is an object");
                obj.insert("run_id".into(), json!(id));
                obj.insert("seed".into(), json!(seed));
                obj.insert("config_hash".into(), json!(config_hash));
                if opts.timing {
                    rec.row.wall_ms = Some(wall);
                    obj.insert("wall_ms".into(), json!(wall));
                }
                Ok(rec)
            }
            Err(e) => {
                let best = match &e {
                    Failure::Core(fosp_core::Error::Budget { best, .. }) => Some(best.clone()),
                    _ => None,
                };
                Err(RunFailure { run_id: id, seed, error: e.into(), best })
            }
        }
    };
    let indexed: Vec<(usize, &Task)> = tasks.iter().enumerate().collect();
    let results: Vec<Result<RunRecord, RunFailure>> = match opts.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))?
            .install(|| indexed.par_iter().map(|&t| work(t)).collect()),
        None => indexed.par_iter().map(|&t| work(t)).collect(),
    };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    records.sort_by(|a, b| a.row.run_id.cmp(&b.row.run_id));
    failures.sort_by(|a, b| a.run_id.cmp(&b.run_id));
    Ok(Outcome { command: cmd, name: cfg.name().to_string(), seed: cfg.seed, config_hash, records, failures })
}

/// Per-task error before it is mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Core(fosp_core::Error),
    Cli(CliError),
}

impl From<fosp_core::Error> for Failure {
    fn from(e: fosp_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Cli(e)
    }
}

impl From<Failure> for CliError {
    fn from(f: Failure) -> Self {
        match f {
            Failure::Core(e) => e.into(),
            Failure::Cli(e) => e,
        }
    }
}

type TaskResult = Result<RunRecord, Failure>;

// ---------------------------------------------------------------------------
// instances

struct Built {
    p: ProblemInstance<f64>,
    hard: Option<HardInstanceSpec<f64>>,
    family: String,
    lambda: f64,
    mu: f64,
    rho: f64,
    d: f64,
}

fn hard_spec(inst: &InstanceConfig, pt: &GridPoint) -> Result<HardInstanceSpec<f64>, Failure> {
    let InstanceConfig::Hard { family, s, shift, x_radius, probe_half_width } = inst else {
        return Err(CliError::Config("expected kind = \"hard\"".into()).into());
    };
    let mut spec = match family {
        FamilyName::F => HardInstanceSpec::f(pt.k, *s, pt.lambda, pt.mu, pt.rho, pt.d),
        FamilyName::Sigmoid => {
            let mut sp = HardInstanceSpec::sigmoid(pt.lambda, pt.mu, pt.rho, pt.d);
            // rejected by validation unless k = 0
            sp.k = pt.k;
            sp
        }
    };
    if let Some(a) = shift {
        spec = spec.with_shift(*a);
    }
    if let Some(r) = x_radius {
        spec = spec.with_x_radius(*r);
    }
    if let Some(w) = probe_half_width {
        spec = spec.with_probe(*w);
    }
    spec.validate()?;
    Ok(spec)
}

fn family_label(f: Family) -> &'static str {
    match f {
        Family::F => "F",
        Family::S => "S",
    }
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<(), Failure> {
    if v.len() == n {
        Ok(())
    } else {
        Err(CliError::Config(format!("instance.{what} must have {n} entries, got {}", v.len())).into())
    }
}

fn build(inst: &InstanceConfig, pt: &GridPoint, global_seed: u64) -> Result<Built, Failure> {
    match inst {
        InstanceConfig::Hard { .. } => {
            let spec = hard_spec(inst, pt)?;
            let p = build_instance(&spec)?;
            Ok(Built {
                p,
                family: family_label(spec.family).into(),
                lambda: spec.lambda,
                mu: spec.mu,
                rho: spec.rho,
                d: spec.d,
                hard: Some(spec),
            })
        }
        InstanceConfig::Intro {} => {
            let p = make_intro_example::<f64>();
            Ok(Built {
                family: "intro".into(),
                lambda: p.profile.lambda,
                mu: p.profile.mu,
                rho: p.profile.rho_k,
                d: p.diameter(),
                p,
                hard: None,
            })
        }
        InstanceConfig::BallCubic { dim, c_norm, s, x_radius, data_seed } => {
            if *dim == 0 {
                return Err(CliError::Config("instance.dim must be at least 1".into()).into());
            }
            let mut rng = seeded_stream(data_seed.unwrap_or(global_seed), 0);
            let (b, c) = random_ball_cubic_data(*dim, *c_norm, &mut rng);
            let p = make_ball_cubic(pt.lambda, pt.mu, pt.rho, *s, b, c, pt.d, *x_radius)?;
            Ok(Built { p, hard: None, family: "ball_cubic".into(), lambda: pt.lambda, mu: pt.mu, rho: pt.rho, d: pt.d })
        }
        InstanceConfig::Quadratic { dx, dy, x_radius, a, b, c, a_vec, b_vec, data_seed } => {
            let (dx, dy) = (*dx, *dy);
            if dx == 0 || dy == 0 {
                return Err(CliError::Config("instance.dx and instance.dy must be at least 1".into()).into());
            }
            let mut rng = seeded_stream(data_seed.unwrap_or(global_seed), 0);
            let mut q = Quadratic::<f64>::random(dx, dy, &mut rng);
            for (name, src, dst, n) in [
                ("a", a, &mut q.a_mat, dx * dx),
                ("b", b, &mut q.b_mat, dx * dy),
                ("c", c, &mut q.c_mat, dy * dy),
                ("a_vec", a_vec, &mut q.a_vec, dx),
                ("b_vec", b_vec, &mut q.b_vec, dy),
            ] {
                if let Some(v) = src {
                    check_len(name, v, n)?;
                    *dst = v.clone();
                }
            }
            for (name, m, n) in [("a", &q.a_mat, dx), ("c", &q.c_mat, dy)] {
                if (0..n).any(|i| (0..n).any(|j| m[i * n + j] != m[j * n + i])) {
                    return Err(CliError::Config(format!("instance.{name} must be symmetric")).into());
                }
            }
            let dom_x = if dx == 1 { Domain::interval(-x_radius, *x_radius)? } else { Domain::boxed(vec![-x_radius; dx], vec![*x_radius; dx])? };
            let r = pt.d / 2.0;
            let dom_y = if dy == 1 { Domain::interval(-r, r)? } else { Domain::ball(vec![0.0; dy], r)? };
            let p = make_quadratic(q, dom_x, dom_y)?;
            Ok(Built {
                family: "quadratic".into(),
                lambda: p.profile.lambda,
                mu: p.profile.mu,
                rho: p.profile.rho_k,
                d: p.diameter(),
                p,
                hard: None,
            })
        }
    }
}

fn instance_detail(b: &Built) -> Value {
    json!({
        "name": b.p.name,
        "family": b.family,
        "hard_spec": b.hard,
        "dim_x": b.p.dim_x(),
        "dim_y": b.p.dim_y(),
        "diameter": b.p.diameter(),
        "profile": b.p.profile,
        "bilinear": b.p.bilinear,
    })
}

fn true_primal(p: &ProblemInstance<f64>, v: &VerifyConfig, seed: u64) -> Result<TruePrimal<f64>, Failure> {
    let method = match p.dim_y() {
        1 => MaxMethod::Grid { resolution: v.grid_resolution },
        2 => MaxMethod::Grid { resolution: v.grid_resolution_2d },
        _ => MaxMethod::Ascent { n_random: v.ascent_starts, iters: v.ascent_iters, seed },
    };
    Ok(TruePrimal::new(p.clone(), method)?)
}

// ---------------------------------------------------------------------------
// run

fn affine_point(dom: &Domain<f64>, frac: f64, what: &str) -> Result<Vec<f64>, Failure> {
    let (_, hi) = dom.bounding_box().ok_or_else(|| CliError::Config(format!("{what} needs a bounded region")))?;
    let c = dom.chebyshev_center();
    Ok(c.iter().zip(&hi).map(|(c, h)| c + frac * (h - c)).collect())
}

fn start_point(s: &SolverSection, b: &Built) -> Result<Vec<f64>, Failure> {
    let p = &b.p;
    let x0 = match (&s.x0, s.x0_frac) {
        (Some(x), _) => x.clone(),
        // X = [−r, r] for the bounded hard families
        (None, Some(f)) => affine_point(&p.probe_x, f, "solver.x0_frac")?,
        (None, None) => p.probe_x.chebyshev_center(),
    };
    check_len_named("solver.x0", &x0, p.dim_x())?;
    Ok(x0)
}

fn center_point(s: &SolverSection, b: &Built) -> Result<Vec<f64>, Failure> {
    let p = &b.p;
    let y = match (&s.y_hat, s.y_hat_frac) {
        (Some(y), _) => y.clone(),
        (None, Some(f)) => {
            if p.dim_y() != 1 {
                return Err(CliError::Config("solver.y_hat_frac needs a one-dimensional Y".into()).into());
            }
            let (lo, _) = p.domain_y.bounding_box().expect("Y is compact");
            vec![lo[0] + f * p.diameter()]
        }
        (None, None) => p.domain_y.chebyshev_center(),
    };
    check_len_named("solver.y_hat", &y, p.dim_y())?;
    Ok(y)
}

fn check_len_named(what: &str, v: &[f64], n: usize) -> Result<(), Failure> {
    if v.len() == n {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} must have {n} entries, got {}", v.len())).into())
    }
}

fn run_solver(cfg: &ExperimentConfig, inst: &InstanceConfig, s: &SolverSection, pt: &GridPoint, seed: u64) -> TaskResult {
    let b = build(inst, pt, cfg.seed)?;
    let p = &b.p;
    let v = &cfg.verify;
    let (alg, k_alg) = match s.algorithm {
        AlgorithmName::Alg1 => (Algorithm::Alg1, 0),
        AlgorithmName::Alg2 => (Algorithm::Alg2, 1),
        AlgorithmName::Alg3 => (Algorithm::Alg3, 2),
    };
    let mut sc = SolverConfig::new(alg, start_point(s, &b)?, center_point(s, &b)?, pt.eps).with_seed(seed).with_naive(s.naive);
    if let Some(t) = s.t {
        sc = sc.with_t(t);
    }
    if let Some(c) = s.t_cap {
        sc.t_cap = c;
    }
    if let Some(g) = s.gap {
        sc = sc.with_gap(g);
    }
    if let Some(r) = s.gap_resolution {
        sc.gap_resolution = r;
    }
    if let Some(c) = s.coupled {
        sc = sc.with_coupled(c);
    }
    let (pf, qf) = (s.p_fail.unwrap_or(sc.p_fail), s.q_fail.unwrap_or(sc.q_fail));
    sc = sc.with_failure(pf, qf);
    let oracle = match s.oracle {
        OracleName::Krylov => MaxOracle::Krylov,
        OracleName::Dense => MaxOracle::Dense,
        OracleName::Grid => MaxOracle::Grid { resolution: s.grid_oracle_resolution.unwrap_or(401) },
    };
    let out = solve(p, &sc, oracle)?;
    let tr = &out.trace;
    let eps_star = match tr.sampled_index {
        Some(i) => tr.residuals[i],
        None => tr.best_residual,
    };
    let lb = tr.lambda_bar;
    let g_sur = if v.surrogate_moreau {
        let model = SurrogateModel::new(p.clone(), k_alg, sc.y_hat.clone())?;
        Some(norm(&moreau_grad(&SurrogatePrimal::new(model), &out.x, lb, v.inner_budget)?))
    } else {
        None
    };
    let g_true = if v.true_moreau {
        let tp = true_primal(p, v, seed)?;
        Some(norm(&moreau_grad(&tp, &out.x, lb, v.inner_budget)?))
    } else {
        None
    };
    let telescoping = if v.telescoping && alg == Algorithm::Alg3 && !s.naive {
        Some(alg3_telescoping_check(p, &sc, tr, v.inner_budget)?)
    } else {
        None
    };
    let identity = residual_identity_error(tr, &p.domain_x).ok();
    // iteration count the formula asks for, also when T is overridden
    let t_unscaled = match (alg, tr.gap) {
        (Algorithm::Alg3, Some(g)) => Some(alg3_parameters(p, pt.eps, sc.p_fail, g, 1)?.2),
        _ => tr.t_formula,
    };
    let regime = match (&b.hard, tr.coupled) {
        (Some(h), _) => regime_label(h),
        (None, Some(true)) => "coupled".into(),
        (None, Some(false)) => "uncoupled".into(),
        (None, None) => String::new(),
    };
    let certified = g_true.is_some_and(|g| g <= pt.eps);
    let row = Row {
        family: b.family.clone(),
        k: Some(k_alg),
        lambda: Some(b.lambda),
        mu: Some(b.mu),
        rho: Some(b.rho),
        d: Some(b.d),
        eps: Some(pt.eps),
        algorithm: alg.name().into(),
        t: Some(tr.t),
        eps_star: Some(eps_star),
        moreau_grad_surrogate: g_sur,
        moreau_grad_true: g_true,
        certified,
        regime,
        ..Row::default()
    };
    let checks = Checks {
        telescoping: telescoping.as_ref().map(|t| t.holds),
        warnings: tr.warnings.len(),
        ..Checks::default()
    };
    let detail = json!({
        "command": "run",
        "grid": pt,
        "instance": instance_detail(&b),
        "solver": {
            "algorithm": alg.name(),
            "x0": sc.x0,
            "y_hat": sc.y_hat,
            "epsilon": sc.epsilon,
            "p_fail": sc.p_fail,
            "q_fail": sc.q_fail,
            "naive": sc.naive,
            "oracle": oracle,
            "t_override": sc.t_override,
            "gap_override": sc.gap_override,
            "t_cap": sc.t_cap,
        },
        "trace": {
            "T": tr.t,
            "t_formula": tr.t_formula,
            "t_formula_unscaled": t_unscaled,
            "gap": tr.gap,
            "gamma_x": tr.gamma_x,
            "gamma_y": tr.gamma_y,
            "delta": tr.delta,
            "coupled": tr.coupled,
            "naive": tr.naive,
            "lambda_bar": tr.lambda_bar,
            "krylov_m": tr.krylov_m,
            "best_index": tr.best_index,
            "best_residual": tr.best_residual,
            "sampled_index": tr.sampled_index,
            "counters": tr.counters,
            "counters_total": tr.counters.total(),
            "warnings": tr.warnings,
        },
        "x": out.x,
        "y": out.y,
        "eps_star": eps_star,
        "moreau_grad_surrogate": g_sur,
        "moreau_grad_true": g_true,
        "certified": certified,
        "residual_identity_error": identity,
        "telescoping": telescoping,
    });
    let plot = tr.plot_rows().collect();
    Ok(RunRecord { row, checks, detail, plot: Some(plot) })
}

fn regime_label(h: &HardInstanceSpec<f64>) -> String {
    serde_json::to_value(h.regime()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// certify

fn run_certificate(inst: &InstanceConfig, v: &VerifyConfig, pt: &GridPoint) -> TaskResult {
    let spec = hard_spec(inst, pt)?;
    let cert = certificate(&spec)?;
    let used = &cert.instance;
    let cross = if v.cross_check {
        let p = build_instance(used)?;
        let tp = TruePrimal::new(p.clone(), MaxMethod::Grid { resolution: v.grid_resolution })?;
        let t = moreau_grad(&tp, &[cert.x_star], used.lambda, v.inner_budget)?[0];
        let model = SurrogateModel::new(p, used.k, vec![cert.y_hat])?;
        let s = moreau_grad(&SurrogatePrimal::new(model), &[cert.x_star], used.lambda, v.inner_budget)?[0];
        let err = (t - cert.true_moreau_grad).abs().max((s - cert.surrogate_moreau_grad).abs());
        Some((s, t, err))
    } else {
        None
    };
    let profile = used.profile()?;
    let at_bound = check_theorem1(&profile, used.d, cert.bound, used.k);
    let d_thr = threshold_diameter(&profile, cert.bound, used.k);
    let at_thr = check_theorem1(&profile, d_thr, cert.bound, used.k);
    let bracketed = !at_bound.admissible && at_thr.admissible;
    let row = Row {
        family: family_label(spec.family).into(),
        k: Some(pt.k),
        lambda: Some(pt.lambda),
        mu: Some(pt.mu),
        rho: Some(pt.rho),
        d: Some(pt.d),
        eps: Some(pt.eps),
        algorithm: "certificate".into(),
        eps_star: Some(cert.bound),
        moreau_grad_surrogate: Some(cert.surrogate_moreau_grad.abs()),
        moreau_grad_true: Some(cert.true_moreau_grad.abs()),
        certified: cert.holds(),
        regime: serde_json::to_value(cert.regime)?.as_str().unwrap_or_default().into(),
        ..Row::default()
    };
    let checks = Checks {
        surrogate_stationary: Some(cert.surrogate_stationary()),
        true_violation: Some(cert.true_violation()),
        separates: Some(cert.separates(pt.eps)),
        cross_checked: cross.map(|c| c.2 <= v.cross_check_tol),
        bracketed: Some(bracketed),
        ..Checks::default()
    };
    let detail = json!({
        "command": "certify",
        "grid": pt,
        "certificate": cert,
        "holds": cert.holds(),
        "separates_eps": cert.separates(pt.eps),
        "numeric": cross.map(|(s, t, e)| json!({"surrogate": s, "true": t, "max_abs_error": e})),
        "diameter_check": {
            "at_bound": at_bound,
            "threshold_diameter": d_thr,
            "at_threshold": at_thr,
            "bracketed": bracketed,
        },
    });
    Ok(RunRecord { row, checks, detail, plot: None })
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Cli(CliError::Numerical(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// check-diameter

fn run_check_diameter(cfg: &ExperimentConfig, inst: &InstanceConfig, pt: &GridPoint) -> TaskResult {
    let b = build(inst, pt, cfg.seed)?;
    let (profile, k): (SmoothnessProfile, usize) = match &b.hard {
        Some(h) => (h.profile()?, pt.k),
        None => (b.p.profile.clone(), b.p.profile.k),
    };
    let verdict = check_theorem1(&profile, b.d, pt.eps, k);
    let d_thr = threshold_diameter(&profile, pt.eps, k);
    let row = Row {
        family: b.family.clone(),
        k: Some(k),
        lambda: Some(b.lambda),
        mu: Some(b.mu),
        rho: Some(b.rho),
        d: Some(b.d),
        eps: Some(pt.eps),
        algorithm: "check_theorem1".into(),
        // smallest ε at which D is admissible
        eps_star: Some(24.0 * verdict.lhs),
        certified: verdict.admissible,
        regime: serde_json::to_value(verdict.binding_term)?.as_str().unwrap_or_default().into(),
        ..Row::default()
    };
    let checks = Checks { admissible: Some(verdict.admissible), ..Checks::default() };
    let detail = json!({
        "command": "check-diameter",
        "grid": pt,
        "instance": instance_detail(&b),
        "verdict": verdict,
        "threshold_diameter": d_thr,
        "eps_threshold": eps_threshold(&profile, k),
    });
    Ok(RunRecord { row, checks, detail, plot: None })
}

// ---------------------------------------------------------------------------
// krylov-bench

fn krylov_trial(k: &KrylovSection, seed: u64) -> TaskResult {
    if k.dim == 0 || k.radius.is_nan() || k.radius <= 0.0 || k.h_norm.is_nan() || k.h_norm <= 0.0 {
        return Err(CliError::Config("krylov.dim, radius and h_norm must be positive".into()).into());
    }
    let mut rng = seeded_stream(seed, 0);
    let (g, h) = random_ball_cubic_data(k.dim, k.h_norm, &mut rng);
    let q = QuadraticForm::from_dense(h.clone(), g.clone())?;
    let res = approx_max(&q, k.radius, k.delta, k.h_norm, k.q_fail, &mut seeded_stream(seed, 1))?;
    let exact = solve_reduced(&h, &g, k.radius)?;
    let best = q.value(&exact.z);
    let sub = best - res.value;
    let within = sub <= res.predicted_gap;
    let row = Row {
        family: "random_symmetric".into(),
        k: Some(2),
        rho: Some(k.h_norm),
        d: Some(2.0 * k.radius),
        eps: Some(k.delta),
        algorithm: "block_lanczos".into(),
        t: Some(res.m_requested as u64),
        eps_star: Some(sub),
        certified: within,
        regime: serde_json::to_value(res.branch)?.as_str().unwrap_or_default().to_lowercase(),
        ..Row::default()
    };
    let detail = json!({
        "command": "krylov-bench",
        "krylov": k,
        "dense_value": best,
        "krylov_value": res.value,
        "suboptimality": sub,
        "predicted_gap": res.predicted_gap,
        "within_predicted_gap": within,
        "within_delta": sub <= k.delta,
        "m_requested": res.m_requested,
        "m_used": res.m_used,
        "breakdown": res.breakdown,
        "hard_case": res.hard_case,
        "hvp_calls": res.hvp_calls,
    });
    Ok(RunRecord { row, checks: Checks::default(), detail, plot: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_ids_sort_numerically() {
        let ids: Vec<String> = (0..12).map(|i| run_id(i, 12)).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        assert_eq!(run_id(7, 100_000), "00007");
        assert_eq!(run_id(7, 3), "0007");
    }

    #[test]
    fn seeds_differ_across_tasks() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|i| run_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_eq!(run_seed(42, 3), run_seed(42, 3));
    }
}

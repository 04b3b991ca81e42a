//! Declarative experiment configuration (TOML). Unknown keys are errors.
//!
//! ```toml
//! name = "zero-order"          # optional, defaults to the file stem
//! seed = 7
//!
//! [instance]
//! kind = "hard"                # hard | intro | ball_cubic | quadratic
//! family = "f"                 # f | sigmoid
//! s = 0
//!
//! [sweep]                      # every list must be non-empty
//! k = [0]
//! lambda = [1.0]
//! mu = [0.5, 1.0]
//! rho = [1.0]
//! D = [0.001]
//! eps = [0.05]
//! repeats = 1
//!
//! [solver]                     # required by `run`
//! algorithm = "alg1"
//! x0_frac = 0.7
//!
//! [assert]
//! all_certified = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub seed: u64,
    /// Required by every command except `krylov-bench`.
    pub instance: Option<InstanceConfig>,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub krylov: Option<KrylovSection>,
    #[serde(default, rename = "assert")]
    pub assertions: AssertConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    F,
    Sigmoid,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Analytic 1-D hard families; `k`, `lambda`, `mu`, `rho`, `D` come from the sweep.
    Hard {
        family: FamilyName,
        #[serde(default)]
        s: i8,
        shift: Option<f64>,
        x_radius: Option<f64>,
        probe_half_width: Option<f64>,
    },
    /// `f(x, y) = xy − y³/3` on `X = [0, 4]`, `Y = [−2, 2]`.
    Intro {},
    /// Ball-constrained cubic with scalar `x`; `lambda`, `mu`, `rho`, `D` come from the sweep.
    BallCubic {
        dim: usize,
        #[serde(default = "one")]
        c_norm: f64,
        #[serde(default = "one")]
        s: f64,
        #[serde(default = "one")]
        x_radius: f64,
        /// Seed for `b` and `C`; defaults to the global seed.
        data_seed: Option<u64>,
    },
    /// `½xᵀAx + xᵀBy + ½yᵀCy + aᵀx + bᵀy` on the box `[−x_radius, x_radius]^dx`
    /// and the centered ball (interval when `dy = 1`) of diameter `D`.
    /// Matrices are row-major; any that are omitted are drawn at random.
    Quadratic {
        dx: usize,
        dy: usize,
        #[serde(default = "one")]
        x_radius: f64,
        a: Option<Vec<f64>>,
        b: Option<Vec<f64>>,
        c: Option<Vec<f64>>,
        a_vec: Option<Vec<f64>>,
        b_vec: Option<Vec<f64>>,
        data_seed: Option<u64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub k: Option<Vec<usize>>,
    pub lambda: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    /// Seeded replicates per grid point.
    pub repeats: Option<usize>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub k: usize,
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub eps: f64,
    pub repeat: usize,
}

impl SweepConfig {
    /// Cartesian product in the fixed order `k, lambda, mu, rho, D, eps, repeat`.
    pub fn points(&self, default_k: usize) -> Result<Vec<GridPoint>, CliError> {
        fn axis<T: Clone>(name: &str, v: &Option<Vec<T>>, dflt: T) -> Result<Vec<T>, CliError> {
            match v {
                None => Ok(vec![dflt]),
                Some(v) if v.is_empty() => Err(CliError::Config(format!("sweep.{name} must not be empty"))),
                Some(v) => Ok(v.clone()),
            }
        }
        let ks = axis("k", &self.k, default_k)?;
        let ls = axis("lambda", &self.lambda, 1.0)?;
        let ms = axis("mu", &self.mu, 1.0)?;
        let rs = axis("rho", &self.rho, 1.0)?;
        let ds = axis("D", &self.d, 1.0)?;
        let es = axis("eps", &self.eps, 0.1)?;
        let reps = self.repeats.unwrap_or(1);
        if reps == 0 {
            return Err(CliError::Config("sweep.repeats must be at least 1".into()));
        }
        for (name, v) in [("lambda", &ls), ("mu", &ms), ("rho", &rs), ("D", &ds), ("eps", &es)] {
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(CliError::Config(format!("sweep.{name} contains a non-finite value {bad}")));
            }
        }
        let mut out = Vec::new();
        for &k in &ks {
            for &lambda in &ls {
                for &mu in &ms {
                    for &rho in &rs {
                        for &d in &ds {
                            for &eps in &es {
                                for repeat in 0..reps {
                                    out.push(GridPoint { k, lambda, mu, rho, d, eps, repeat });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Alg1,
    Alg2,
    Alg3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleName {
    Krylov,
    Dense,
    Grid,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub algorithm: AlgorithmName,
    pub x0: Option<Vec<f64>>,
    /// `x0 = x0_frac · r` on the bounded hard families (`X = [−r, r]`).
    pub x0_frac: Option<f64>,
    pub y_hat: Option<Vec<f64>>,
    /// `ŷ = lo + y_hat_frac · D` on a one-dimensional `Y = [lo, lo + D]`.
    pub y_hat_frac: Option<f64>,
    /// Iteration count overriding the formula.
    #[serde(rename = "T")]
    pub t: Option<u64>,
    pub t_cap: Option<u64>,
    /// Gap overriding the brute-force estimate.
    pub gap: Option<f64>,
    pub gap_resolution: Option<usize>,
    pub coupled: Option<bool>,
    #[serde(default)]
    pub naive: bool,
    pub p_fail: Option<f64>,
    pub q_fail: Option<f64>,
    #[serde(default = "default_oracle")]
    pub oracle: OracleName,
    pub grid_oracle_resolution: Option<usize>,
}

fn default_oracle() -> OracleName {
    OracleName::Krylov
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Points per axis for grid maximization over a one-dimensional `Y`.
    pub grid_resolution: usize,
    pub grid_resolution_2d: usize,
    pub inner_budget: usize,
    /// Multi-start ascent for `dim(Y) > 2`.
    pub ascent_starts: usize,
    pub ascent_iters: usize,
    pub surrogate_moreau: bool,
    pub true_moreau: bool,
    /// Grid-mode cross-check of certificate closed forms.
    pub cross_check: bool,
    pub cross_check_tol: f64,
    /// Descent-inequality check for algorithm 3 runs.
    pub telescoping: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            grid_resolution: 2001,
            grid_resolution_2d: 201,
            inner_budget: 10_000,
            ascent_starts: 6,
            ascent_iters: 300,
            surrogate_moreau: true,
            true_moreau: true,
            cross_check: false,
            cross_check_tol: 1e-4,
            telescoping: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct KrylovSection {
    pub dim: usize,
    pub radius: f64,
    pub delta: f64,
    pub q_fail: f64,
    /// Spectral norm of the random symmetric matrices.
    pub h_norm: f64,
    pub trials: usize,
}

impl Default for KrylovSection {
    fn default() -> Self {
        KrylovSection { dim: 32, radius: 1.0, delta: 1e-4, q_fail: 0.1, h_norm: 1.0, trials: 100 }
    }
}

/// Conditions on the emitted rows; the command exits with code 1 when one fails.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AssertConfig {
    pub all_certified: Option<bool>,
    pub min_certified: Option<usize>,
    pub max_eps_star: Option<f64>,
    pub max_moreau_grad_true: Option<f64>,
    pub all_surrogate_stationary: Option<bool>,
    pub all_true_violation: Option<bool>,
    pub all_separate: Option<bool>,
    pub all_cross_checked: Option<bool>,
    pub all_bracketed: Option<bool>,
    pub all_admissible: Option<bool>,
    pub all_telescoping: Option<bool>,
    pub no_warnings: Option<bool>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(CliError::Config("name must be a non-empty file-name fragment".into()));
            }
        }
        self.sweep.points(0)?;
        if let Some(s) = &self.solver {
            if s.x0.is_some() && s.x0_frac.is_some() {
                return Err(CliError::Config("solver.x0 and solver.x0_frac are exclusive".into()));
            }
            if s.y_hat.is_some() && s.y_hat_frac.is_some() {
                return Err(CliError::Config("solver.y_hat and solver.y_hat_frac are exclusive".into()));
            }
            if let Some(f) = s.y_hat_frac {
                if !(0.0..=1.0).contains(&f) {
                    return Err(CliError::Config("solver.y_hat_frac must lie in [0, 1]".into()));
                }
            }
        }
        if let Some(InstanceConfig::Hard { s, .. }) = &self.instance {
            if !(-1..=1).contains(s) {
                return Err(CliError::Config("instance.s must be -1, 0 or 1".into()));
            }
        }
        let v = &self.verify;
        if v.grid_resolution < 3 || v.grid_resolution_2d < 3 || v.inner_budget == 0 {
            return Err(CliError::Config("verify grid resolutions must be >= 3 and inner_budget >= 1".into()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("experiment")
    }
}

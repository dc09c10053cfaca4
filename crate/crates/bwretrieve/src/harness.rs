//! Experiment orchestration: configuration, seeded trial execution, and CSV
//! emission for the trace, sweep, heatmap, and verification commands.
//!
//! Reproducibility contract: identical config and master seed produce
//! byte-identical CSVs (a unix-time header line is suppressed in
//! deterministic mode). Trial k at grid position j draws its randomness from
//! stream (j << 32) | k of the master-seeded generator, so results for one
//! trial are unchanged by adding or removing others. Trials run on a worker
//! pool; rows are buffered and written in trial order regardless of
//! completion order.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array1;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::generate_ensemble;
use crate::smoothing::{ScheduleKind, SmoothingSchedule};
use crate::solver::{self, StoppingRule, UnwhitenMode};
use crate::verify;

/// Errors are floored here before logs so geometric means stay finite.
pub const ERROR_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bwgd,
    BwgdDsLoss,
    BwgdDsQuantile,
    BwgdDsOracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Bwgd => "bwgd",
            Method::BwgdDsLoss => "bwgd_ds_loss",
            Method::BwgdDsQuantile => "bwgd_ds_quantile",
            Method::BwgdDsOracle => "bwgd_ds_oracle",
        }
    }

    /// The smoothing schedule this method runs with. Plain BWGD is the
    /// zero-smoothing fixed schedule; the others map to their heuristics.
    pub fn schedule(self, cfg: &HarnessConfig) -> Result<SmoothingSchedule> {
        let kind = match self {
            Method::Bwgd => ScheduleKind::Fixed(0.0),
            Method::BwgdDsLoss => ScheduleKind::LossHeuristic { c_loss: cfg.c_loss },
            Method::BwgdDsQuantile => ScheduleKind::QuantileHeuristic { gamma: cfg.gamma },
            Method::BwgdDsOracle => ScheduleKind::Oracle,
        };
        SmoothingSchedule::new(kind, cfg.epsilon0, cfg.epsilon_min)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bwgd" => Ok(Method::Bwgd),
            "bwgd_ds_loss" => Ok(Method::BwgdDsLoss),
            "bwgd_ds_quantile" => Ok(Method::BwgdDsQuantile),
            "bwgd_ds_oracle" => Ok(Method::BwgdDsOracle),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?}; expected bwgd, bwgd_ds_loss, bwgd_ds_quantile or bwgd_ds_oracle"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Spectral,
    Random,
}

impl InitKind {
    pub fn label(self) -> &'static str {
        match self {
            InitKind::Spectral => "spectral",
            InitKind::Random => "random",
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_trials() -> usize {
    100
}
fn default_init() -> InitKind {
    InitKind::Spectral
}
fn default_methods() -> Vec<Method> {
    vec![Method::Bwgd, Method::BwgdDsLoss, Method::BwgdDsQuantile]
}
fn default_epsilon0() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.25
}
fn default_c_loss() -> f64 {
    2.0
}
fn default_err_tol() -> f64 {
    1e-9
}
fn default_rel_tol() -> f64 {
    1e-12
}
fn default_patience() -> usize {
    3
}
fn default_cap() -> usize {
    5000
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Flat JSON configuration for all commands. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub d: usize,
    /// Single sample count, used by `trace` (and by sweeps when no grid).
    #[serde(default)]
    pub n: Option<usize>,
    /// Strictly increasing sample-count grid for sweeps and heatmaps.
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_init")]
    pub init: InitKind,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(rename = "schedule.epsilon0", default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(rename = "schedule.epsilon_min", default)]
    pub epsilon_min: f64,
    #[serde(rename = "schedule.gamma", default = "default_gamma")]
    pub gamma: f64,
    #[serde(rename = "schedule.c_loss", default = "default_c_loss")]
    pub c_loss: f64,
    #[serde(rename = "stopping.err_tol", default = "default_err_tol")]
    pub err_tol: f64,
    #[serde(rename = "stopping.rel_tol", default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(rename = "stopping.patience", default = "default_patience")]
    pub patience: usize,
    #[serde(rename = "stopping.cap", default = "default_cap")]
    pub cap: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Compatibility switch: map iterates back to raw coordinates by forward
    /// substitution (L u_hat = u) instead of the transpose-consistent back
    /// substitution. Affects only the reported error metric.
    #[serde(default)]
    pub paper_compat_unwhiten: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            d: 200,
            n: Some(650),
            n_grid: Some(vec![450, 500, 550, 600, 650]),
            trials: default_trials(),
            master_seed: 0,
            init: default_init(),
            methods: default_methods(),
            epsilon0: default_epsilon0(),
            epsilon_min: 0.0,
            gamma: default_gamma(),
            c_loss: default_c_loss(),
            err_tol: default_err_tol(),
            rel_tol: default_rel_tol(),
            patience: default_patience(),
            cap: default_cap(),
            out_dir: default_out_dir(),
            paper_compat_unwhiten: false,
        }
    }
}

impl HarnessConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: HarnessConfig = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Quarter-scale preset: d = 50 with the sample grid scaled down
    /// proportionally, sized so every command finishes in minutes.
    pub fn apply_desk_preset(&mut self) {
        self.d = 50;
        self.n = Some(163);
        self.n_grid = Some(vec![113, 125, 138, 150, 163]);
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n.is_none() && self.n_grid.is_none() {
            return Err(Error::InvalidConfig("config needs n or n_grid".into()));
        }
        if let Some(n) = self.n {
            if n <= self.d {
                return Err(Error::InvalidConfig(format!("n = {n} must exceed d = {}", self.d)));
            }
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() {
                return Err(Error::InvalidConfig("n_grid must be non-empty".into()));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidConfig("n_grid must be strictly increasing".into()));
            }
            if grid[0] <= self.d {
                return Err(Error::InvalidConfig(format!(
                    "every grid entry must exceed d = {}; got {}",
                    self.d, grid[0]
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be non-empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::InvalidConfig(format!("duplicate method {m}")));
            }
        }
        if !(self.err_tol.is_finite() && self.err_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("err_tol must be positive, got {}", self.err_tol)));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("rel_tol must be nonnegative, got {}", self.rel_tol)));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be at least 1".into()));
        }
        // Schedule parameters are validated for all methods, configured or
        // not, so a bad value never surfaces mid-experiment.
        for m in [Method::Bwgd, Method::BwgdDsLoss, Method::BwgdDsQuantile, Method::BwgdDsOracle] {
            m.schedule(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            err_tol: self.err_tol,
            rel_tol: self.rel_tol,
            patience: self.patience,
            cap: self.cap,
        }
    }

    pub fn unwhiten_mode(&self) -> UnwhitenMode {
        if self.paper_compat_unwhiten {
            UnwhitenMode::ForwardCompat
        } else {
            UnwhitenMode::Transpose
        }
    }

    /// The single sample count used by `trace`.
    pub fn single_n(&self) -> Result<usize> {
        if let Some(n) = self.n {
            return Ok(n);
        }
        if let Some(grid) = &self.n_grid {
            if grid.len() == 1 {
                return Ok(grid[0]);
            }
        }
        Err(Error::InvalidConfig("this command needs a single n (set n, or a one-entry n_grid)".into()))
    }

    /// The sample grid used by sweeps and heatmaps.
    pub fn grid(&self) -> Result<Vec<usize>> {
        if let Some(grid) = &self.n_grid {
            return Ok(grid.clone());
        }
        self.n.map(|n| vec![n]).ok_or_else(|| Error::InvalidConfig("config needs n or n_grid".into()))
    }
}

/// Outcome of one method on one seeded trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    /// Ensemble seed the trial ran with.
    pub seed: u64,
    pub n: usize,
    pub method: Method,
    pub init: InitKind,
    /// Final error below err_tol within the iteration cap.
    pub success: bool,
    pub iterations: usize,
    pub final_error: f64,
    pub final_epsilon: f64,
    pub degenerate_events: usize,
}

struct TrialRun {
    result: TrialResult,
    /// Per-iteration errors, one per trace record.
    errors: Vec<f64>,
}

/// Ensemble and init seeds for trial `trial` at grid position `n_index`:
/// two draws from stream (n_index << 32) | trial of the master generator.
fn derive_seeds(master_seed: u64, n_index: usize, trial: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((n_index as u64) << 32) | trial as u64);
    (rng.next_u64(), rng.next_u64())
}

/// The experiment signal: the constant unit-norm vector.
fn signal(d: usize) -> Array1<f64> {
    Array1::from_elem(d, 1.0 / (d as f64).sqrt())
}

fn run_trial(cfg: &HarnessConfig, n: usize, n_index: usize, trial: usize) -> Result<Vec<TrialRun>> {
    let (ensemble_seed, init_seed) = derive_seeds(cfg.master_seed, n_index, trial);
    let ensemble = generate_ensemble(cfg.d, n, ensemble_seed)?.whiten()?;
    let u_star = signal(cfg.d);
    let y = ensemble.synthesize_measurements(&u_star)?;
    let init = match cfg.init {
        InitKind::Spectral => solver::spectral_init(&ensemble, &y)?,
        InitKind::Random => solver::random_init(&ensemble, &y, init_seed)?,
    };
    let stop = cfg.stopping_rule();
    let mode = cfg.unwhiten_mode();
    cfg.methods
        .iter()
        .map(|&method| {
            let schedule = method.schedule(cfg)?;
            let trace = solver::run(&ensemble, &y, &init, &schedule, &stop, mode)?;
            let final_error = trace.final_error();
            let result = TrialResult {
                trial,
                seed: ensemble_seed,
                n,
                method,
                init: cfg.init,
                success: final_error < cfg.err_tol,
                iterations: trace.iterations(),
                final_error,
                final_epsilon: trace.final_epsilon(),
                degenerate_events: trace.degenerate_events,
            };
            let errors = trace.records.iter().map(|r| r.error).collect();
            Ok(TrialRun { result, errors })
        })
        .collect()
}

/// All trials at one grid position, parallel over trials, ordered by index.
fn run_trials(cfg: &HarnessConfig, n: usize, n_index: usize) -> Result<Vec<Vec<TrialRun>>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, n, n_index, trial))
        .collect()
}

fn preamble(cfg: &HarnessConfig, command: &str, deterministic: bool) -> Vec<String> {
    let methods: Vec<&str> = cfg.methods.iter().map(|m| m.label()).collect();
    let n_text = cfg.n.map_or_else(|| "-".to_string(), |v| v.to_string());
    let grid_text = cfg.n_grid.as_ref().map_or_else(
        || "-".to_string(),
        |g| g.iter().map(ToString::to_string).collect::<Vec<_>>().join("|"),
    );
    let mut lines = vec![
        format!("# bwretrieve {command}"),
        format!(
            "# d={} n={} n_grid={} trials={} master_seed={} init={}",
            cfg.d, n_text, grid_text, cfg.trials, cfg.master_seed, cfg.init
        ),
        format!("# methods={}", methods.join("|")),
        format!(
            "# schedule epsilon0={} epsilon_min={} gamma={} c_loss={}",
            cfg.epsilon0, cfg.epsilon_min, cfg.gamma, cfg.c_loss
        ),
        format!(
            "# stopping err_tol={:e} rel_tol={:e} patience={} cap={}",
            cfg.err_tol, cfg.rel_tol, cfg.patience, cfg.cap
        ),
        format!("# paper_compat_unwhiten={}", cfg.paper_compat_unwhiten),
    ];
    if !deterministic {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        lines.push(format!("# timestamp_unix={stamp}"));
    }
    lines
}

fn write_csv(path: &Path, preamble: &[String], header: &str, rows: &[String]) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut text = String::new();
    for line in preamble {
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// One trial per configured method on a shared ensemble, measurements, and
/// init; emits the full per-iteration trace of each method.
pub fn cmd_trace(cfg: &HarnessConfig, deterministic: bool) -> Result<PathBuf> {
    let n = cfg.single_n()?;
    let (ensemble_seed, init_seed) = derive_seeds(cfg.master_seed, 0, 0);
    let ensemble = generate_ensemble(cfg.d, n, ensemble_seed)?.whiten()?;
    let u_star = signal(cfg.d);
    let y = ensemble.synthesize_measurements(&u_star)?;
    let init = match cfg.init {
        InitKind::Spectral => solver::spectral_init(&ensemble, &y)?,
        InitKind::Random => solver::random_init(&ensemble, &y, init_seed)?,
    };
    let stop = cfg.stopping_rule();
    let mode = cfg.unwhiten_mode();
    let mut out_rows = Vec::new();
    for &method in &cfg.methods {
        let schedule = method.schedule(cfg)?;
        let trace = solver::run(&ensemble, &y, &init, &schedule, &stop, mode)?;
        for r in &trace.records {
            let log10_error = if r.error.is_finite() {
                r.error.max(ERROR_FLOOR).log10()
            } else {
                f64::INFINITY
            };
            out_rows.push(format!(
                "{},{},{:e},{},{:e},{:e},{}",
                method, r.iter, r.error, log10_error, r.loss, r.epsilon, r.step_size
            ));
        }
    }
    let path = cfg.out_dir.join("trace.csv");
    write_csv(
        &path,
        &preamble(cfg, "trace", deterministic),
        "method,iter,error,log10_error,loss,epsilon,step_size",
        &out_rows,
    )
}

/// Success rates per (n, method) over seeded trials.
pub fn cmd_sweep_success(cfg: &HarnessConfig, deterministic: bool) -> Result<PathBuf> {
    let grid = cfg.grid()?;
    let mut rows = Vec::new();
    for (n_index, &n) in grid.iter().enumerate() {
        let trials = run_trials(cfg, n, n_index)?;
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let results: Vec<&TrialResult> = trials.iter().map(|t| &t[mi].result).collect();
            let successes = results.iter().filter(|r| r.success).count();
            let rate = successes as f64 / results.len() as f64;
            let mean_iters = if successes > 0 {
                let total: usize = results.iter().filter(|r| r.success).map(|r| r.iterations).sum();
                format!("{}", total as f64 / successes as f64)
            } else {
                String::new()
            };
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                n,
                method,
                cfg.init,
                results.len(),
                successes,
                rate,
                mean_iters
            ));
        }
    }
    let path = cfg.out_dir.join("sweep_success.csv");
    write_csv(
        &path,
        &preamble(cfg, "sweep-success", deterministic),
        "n,method,init,trials,successes,success_rate,mean_iterations_successful",
        &rows,
    )
}

/// Iteration statistics among successful trials per (n, method). Rows with
/// zero successes keep their cells empty.
pub fn cmd_sweep_iterations(cfg: &HarnessConfig, deterministic: bool) -> Result<PathBuf> {
    let grid = cfg.grid()?;
    let mut rows = Vec::new();
    for (n_index, &n) in grid.iter().enumerate() {
        let trials = run_trials(cfg, n, n_index)?;
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let mut iters: Vec<usize> = trials
                .iter()
                .map(|t| &t[mi].result)
                .filter(|r| r.success)
                .map(|r| r.iterations)
                .collect();
            iters.sort_unstable();
            let successes = iters.len();
            let (mean, median) = if successes > 0 {
                let mean = iters.iter().sum::<usize>() as f64 / successes as f64;
                let median = if successes % 2 == 1 {
                    iters[successes / 2] as f64
                } else {
                    (iters[successes / 2 - 1] + iters[successes / 2]) as f64 / 2.0
                };
                (format!("{mean}"), format!("{median}"))
            } else {
                (String::new(), String::new())
            };
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                n, method, cfg.init, cfg.trials, successes, mean, median
            ));
        }
    }
    let path = cfg.out_dir.join("sweep_iterations.csv");
    write_csv(
        &path,
        &preamble(cfg, "sweep-iters", deterministic),
        "n,method,init,trials,successes,mean_iterations,median_iterations",
        &rows,
    )
}

/// Long-format error-decay surface: per (method, n, iter), the log10 of the
/// geometric mean error across trials. Trials that stopped early hold their
/// final error; all errors are floored at `ERROR_FLOOR`.
pub fn cmd_heatmap(cfg: &HarnessConfig, deterministic: bool) -> Result<PathBuf> {
    let grid = cfg.grid()?;
    // error curves indexed [n_index][method][trial]
    let mut curves: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(grid.len());
    for (n_index, &n) in grid.iter().enumerate() {
        let trials = run_trials(cfg, n, n_index)?;
        let mut per_method: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cfg.methods.len()];
        for trial in trials {
            for (mi, run) in trial.into_iter().enumerate() {
                per_method[mi].push(run.errors);
            }
        }
        curves.push(per_method);
    }
    let mut rows = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        for (n_index, &n) in grid.iter().enumerate() {
            let trials = &curves[n_index][mi];
            for iter in 0..=cfg.cap {
                let mut acc = 0.0f64;
                for errs in trials {
                    let e = *errs.get(iter).unwrap_or_else(|| errs.last().expect("non-empty trace"));
                    acc += if e.is_finite() { e.max(ERROR_FLOOR).log10() } else { f64::INFINITY };
                }
                let log10_geomean = acc / trials.len() as f64;
                rows.push(format!("{},{},{},{},{}", method, cfg.init, n, iter, log10_geomean));
            }
        }
    }
    let path = cfg.out_dir.join("heatmap.csv");
    write_csv(
        &path,
        &preamble(cfg, "heatmap", deterministic),
        "method,init,n,iter,log10_geomean_error",
        &rows,
    )
}

/// Runs the verification suites and writes their report; returns the report
/// path and the outcome rows (the caller decides the exit status).
pub fn cmd_verify(
    cfg: &HarnessConfig,
    deterministic: bool,
    suite: Option<&str>,
    gradient_fault: bool,
) -> Result<(PathBuf, Vec<verify::CheckOutcome>)> {
    let outcomes = verify::run_suites(suite, cfg.master_seed, gradient_fault)?;
    let rows: Vec<String> = outcomes
        .iter()
        .map(|c| {
            format!("{},{},{},{:e},{:e},{}", c.suite, c.check, c.params, c.measured, c.bound, c.passed)
        })
        .collect();
    let path = cfg.out_dir.join("verify.csv");
    let path = write_csv(
        &path,
        &preamble(cfg, "verify", deterministic),
        "suite,check,params,measured,bound,passed",
        &rows,
    )?;
    Ok((path, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(out: &Path) -> HarnessConfig {
        HarnessConfig {
            d: 5,
            n: Some(40),
            n_grid: None,
            trials: 4,
            master_seed: 7,
            init: InitKind::Spectral,
            methods: vec![Method::Bwgd, Method::BwgdDsQuantile],
            out_dir: out.to_path_buf(),
            ..HarnessConfig::default()
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = HarnessConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: HarnessConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert!(text.contains("\"schedule.gamma\""));
        assert!(text.contains("\"stopping.cap\""));
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg: HarnessConfig = serde_json::from_str(r#"{"d": 20, "n": 100}"#).unwrap();
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.cap, 5000);
        assert_eq!(cfg.gamma, 0.25);
        assert_eq!(cfg.init, InitKind::Spectral);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<HarnessConfig>(r#"{"d": 20, "n": 100, "bogus": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn dotted_schedule_keys_parse() {
        let cfg: HarnessConfig =
            serde_json::from_str(r#"{"d": 10, "n": 50, "schedule.gamma": 0.5, "stopping.cap": 7}"#)
                .unwrap();
        assert_eq!(cfg.gamma, 0.5);
        assert_eq!(cfg.cap, 7);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let base = HarnessConfig { d: 10, n: Some(50), n_grid: None, ..HarnessConfig::default() };
        assert!(base.validate().is_ok());
        assert!(HarnessConfig { trials: 0, ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { n: Some(10), ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { n: None, n_grid: None, ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { n_grid: Some(vec![50, 40]), ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { n_grid: Some(vec![]), ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { methods: vec![], ..base.clone() }.validate().is_err());
        assert!(HarnessConfig {
            methods: vec![Method::Bwgd, Method::Bwgd],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(HarnessConfig { gamma: 1.2, ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { c_loss: 0.0, ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { patience: 0, ..base.clone() }.validate().is_err());
        assert!(HarnessConfig { err_tol: 0.0, ..base }.validate().is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Bwgd, Method::BwgdDsLoss, Method::BwgdDsQuantile, Method::BwgdDsOracle] {
            assert_eq!(Method::from_str(m.label()).unwrap(), m);
        }
        assert!(Method::from_str("nope").is_err());
    }

    #[test]
    fn desk_preset_scales_down() {
        let mut cfg = HarnessConfig::default();
        cfg.apply_desk_preset();
        assert_eq!(cfg.d, 50);
        assert_eq!(cfg.n, Some(163));
        assert_eq!(cfg.n_grid, Some(vec![113, 125, 138, 150, 163]));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn seed_derivation_is_counter_based() {
        let (e0, i0) = derive_seeds(1, 0, 0);
        let (e0b, i0b) = derive_seeds(1, 0, 0);
        assert_eq!((e0, i0), (e0b, i0b));
        let (e1, _) = derive_seeds(1, 0, 1);
        let (e2, _) = derive_seeds(1, 1, 0);
        assert_ne!(e0, e1);
        assert_ne!(e0, e2);
        assert_ne!(e1, e2);
    }

    #[test]
    fn trace_csv_has_schema_and_converges_on_toy_instance() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig {
            d: 1,
            n: Some(2),
            trials: 1,
            methods: vec![Method::Bwgd],
            ..tiny_config(dir.path())
        };
        let path = cmd_trace(&cfg, true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        assert_eq!(
            lines.next().unwrap(),
            "method,iter,error,log10_error,loss,epsilon,step_size"
        );
        let data: Vec<&str> = lines.collect();
        assert!(!data.is_empty() && data.len() <= 4, "toy trace took {} rows", data.len());
        assert!(data.iter().all(|l| l.starts_with("bwgd,")));
    }

    #[test]
    fn sweep_success_separates_easy_and_hard_regimes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig {
            d: 5,
            n: None,
            n_grid: Some(vec![6, 100]),
            trials: 8,
            methods: vec![Method::BwgdDsQuantile],
            ..tiny_config(dir.path())
        };
        let path = cmd_sweep_success(&cfg, true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 2);
        let rate = |line: &str| line.split(',').nth(5).unwrap().parse::<f64>().unwrap();
        let hard = rate(data[0]);
        let easy = rate(data[1]);
        assert_eq!(easy, 1.0, "large-sample rate {easy}");
        assert!(hard <= 0.5, "near-critical rate {hard}");
    }

    #[test]
    fn sweep_iterations_leaves_empty_cells_without_successes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig {
            d: 5,
            n: Some(40),
            cap: 0,
            trials: 2,
            methods: vec![Method::BwgdDsQuantile],
            ..tiny_config(dir.path())
        };
        let path = cmd_sweep_iterations(&cfg, true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 1);
        assert!(data[0].ends_with(",0,,"), "row was {:?}", data[0]);
    }

    #[test]
    fn heatmap_row_count_matches_schema() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig {
            d: 4,
            n: None,
            n_grid: Some(vec![8, 12]),
            trials: 3,
            cap: 10,
            methods: vec![Method::Bwgd, Method::BwgdDsQuantile],
            ..tiny_config(dir.path())
        };
        let path = cmd_heatmap(&cfg, true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 2 * 2 * 11);
        assert!(data[0].starts_with("bwgd,spectral,8,0,"));
    }

    #[test]
    fn deterministic_runs_are_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cfg_a = HarnessConfig {
            n: None,
            n_grid: Some(vec![20, 30]),
            ..tiny_config(dir_a.path())
        };
        let cfg_b = HarnessConfig { out_dir: dir_b.path().to_path_buf(), ..cfg_a.clone() };
        let a = cmd_sweep_success(&cfg_a, true).unwrap();
        let b = cmd_sweep_success(&cfg_b, true).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn trial_results_respect_success_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let runs = run_trials(&cfg, 40, 0).unwrap();
        for trial in &runs {
            for run in trial {
                assert_eq!(run.result.success, run.result.final_error < cfg.err_tol);
                assert_eq!(run.errors.len(), run.result.iterations + 1);
            }
        }
    }

    #[test]
    fn verify_command_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = HarnessConfig { out_dir: dir.path().to_path_buf(), ..HarnessConfig::default() };
        let (path, outcomes) = cmd_verify(&cfg, true, Some("quantile"), false).unwrap();
        assert!(outcomes.iter().all(|c| c.passed));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        assert_eq!(lines.next().unwrap(), "suite,check,params,measured,bound,passed");
        assert!(lines.next().unwrap().starts_with("quantile-oracle,"));
    }
}

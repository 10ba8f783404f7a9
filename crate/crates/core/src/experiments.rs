//! Seeded Monte Carlo harness estimating recovery probability as a function
//! of sample size.
//!
//! A sweep runs `trials_per_n` independent trials at every `n` in a grid.
//! Each trial draws a fresh signal, design, and noise from a stream derived
//! from `(master_seed, n, trial_index)`, runs the configured estimator, and
//! scores success as `|S⋆ Δ Ŝ| < 2⌈δs⌉`. Aggregation uses integer counters
//! only, so the summary is independent of worker count and execution order.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{
    self, EstimatorError, Method, DEFAULT_ENUMERATION_BUDGET,
};
use crate::model::{
    observe, sample_design, sample_signal, sparsify_and_rescale, sym_diff_size, EnsembleKind,
    Instance, ModelError,
};
use crate::rng;
use crate::thresholds::{threshold, RegimeParams, ThresholdKind};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which measurement pipeline a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Sparse Gaussian ensemble with density `d/p`.
    Sparse,
    /// Dense Gaussian ensemble.
    Dense,
    /// Dense ensemble masked after the fact; estimation runs on `(X̃, ỹ)`.
    Sparsified,
}

impl Setting {
    pub fn name(&self) -> &'static str {
        match self {
            Setting::Sparse => "sparse",
            Setting::Dense => "dense",
            Setting::Sparsified => "sparsified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Exhaustive,
    LocalSearch,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Exhaustive => "exhaustive",
            EstimatorKind::LocalSearch => "local_search",
        }
    }
}

/// Fully resolved sweep configuration. `s` and `d` are always concrete
/// counts; `alpha`/`psi` echo the rates they were derived from, when the
/// sweep was specified that way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub p: usize,
    pub s: usize,
    pub d: usize,
    pub alpha: Option<f64>,
    pub psi: Option<f64>,
    pub sigma: f64,
    pub delta: f64,
    pub n_grid: Vec<usize>,
    pub trials_per_n: usize,
    pub estimator: EstimatorKind,
    pub master_seed: u64,
    pub enumeration_budget: u64,
    pub restarts: usize,
    pub max_sweeps: usize,
}

impl ExperimentConfig {
    pub fn sparse(
        p: usize,
        s: usize,
        d: usize,
        sigma: f64,
        delta: f64,
        n_grid: Vec<usize>,
        trials_per_n: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            setting: Setting::Sparse,
            p,
            s,
            d,
            alpha: None,
            psi: None,
            sigma,
            delta,
            n_grid,
            trials_per_n,
            estimator: EstimatorKind::Exhaustive,
            master_seed,
            enumeration_budget: DEFAULT_ENUMERATION_BUDGET,
            restarts: 10,
            max_sweeps: 50,
        }
    }

    pub fn dense(
        p: usize,
        s: usize,
        sigma: f64,
        delta: f64,
        n_grid: Vec<usize>,
        trials_per_n: usize,
        master_seed: u64,
    ) -> Self {
        let mut config = Self::sparse(p, s, p, sigma, delta, n_grid, trials_per_n, master_seed);
        config.setting = Setting::Dense;
        config
    }

    pub fn sparsified(
        p: usize,
        alpha: f64,
        psi: f64,
        sigma: f64,
        delta: f64,
        n_grid: Vec<usize>,
        trials_per_n: usize,
        master_seed: u64,
    ) -> Self {
        let s = (alpha * p as f64).round() as usize;
        let d = (psi * p as f64).round() as usize;
        let mut config = Self::sparse(p, s, d, sigma, delta, n_grid, trials_per_n, master_seed);
        config.setting = Setting::Sparsified;
        config.alpha = Some(alpha);
        config.psi = Some(psi);
        config
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.p == 0 || self.s > self.p || self.d > self.p {
            return Err(ExperimentError::Config(format!(
                "need s <= p and d <= p, got p={}, s={}, d={}",
                self.p, self.s, self.d
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ExperimentError::Config(format!(
                "delta must lie in (0,1), got {}",
                self.delta
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(ExperimentError::Config(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.trials_per_n == 0 {
            return Err(ExperimentError::Config("trials_per_n must be >= 1".to_string()));
        }
        if self.n_grid.is_empty() {
            return Err(ExperimentError::Config("n_grid must be non-empty".to_string()));
        }
        for window in self.n_grid.windows(2) {
            if window[0] >= window[1] {
                return Err(ExperimentError::Config(format!(
                    "n_grid must be strictly increasing, got {} then {}",
                    window[0], window[1]
                )));
            }
        }
        if self.n_grid[0] == 0 {
            return Err(ExperimentError::Config("sample sizes must be >= 1".to_string()));
        }
        Ok(())
    }

    /// Success means `symdiff < 2⌈δs⌉`.
    pub fn success_threshold(&self) -> usize {
        2 * (self.delta * self.s as f64).ceil() as usize
    }

    /// The parameter tuple seen by the thresholds module.
    pub fn regime_params(&self) -> RegimeParams {
        match self.setting {
            Setting::Sparse | Setting::Dense => RegimeParams::sublinear(
                self.p as u64,
                self.s as u64,
                self.d as u64,
                self.sigma,
                self.delta,
            ),
            Setting::Sparsified => RegimeParams::sparsified(
                self.p as u64,
                self.alpha.unwrap_or(self.s as f64 / self.p as f64),
                self.psi.unwrap_or(self.d as f64 / self.p as f64),
                self.sigma,
                self.delta,
            ),
        }
    }
}

/// One Monte Carlo trial. `wall_ms` is excluded from the determinism
/// contract and from persisted files.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub symdiff: usize,
    pub success: bool,
    pub loss_star: f64,
    pub loss_hat: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_symdiff_frac: f64,
    pub stderr: f64,
}

/// Aggregated sweep output: per-`n` success rates, the resolved config, and
/// the relevant threshold values computed at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config: ExperimentConfig,
    pub thresholds: BTreeMap<String, f64>,
    pub rows: Vec<SweepRow>,
}

/// Runs one trial: fresh signal, design, and noise from the trial's derived
/// stream, estimation on the setting's effective `(X, y)`, and the
/// symmetric-difference score against the planted support.
pub fn run_trial(
    config: &ExperimentConfig,
    n: usize,
    trial_index: usize,
) -> Result<TrialRecord, ExperimentError> {
    let start = Instant::now();
    let key = rng::derive_key(config.master_seed, &[n as u64, trial_index as u64], "trial");
    let seed = u64::from_le_bytes(key[..8].try_into().expect("8 bytes"));

    let support = sample_signal(config.p, config.s, seed)?;
    let (instance, estimation_design);
    let estimation_y;
    match config.setting {
        Setting::Sparse => {
            let design = sample_design(n, config.p, EnsembleKind::Sparse, config.d, seed)?;
            let y = observe(&design, &support, config.sigma, seed)?;
            instance = Instance::new(design, support, config.sigma, y)?;
            estimation_design = &instance.design;
            estimation_y = instance.y.as_slice();
        }
        Setting::Dense => {
            let design = sample_design(n, config.p, EnsembleKind::Dense, 0, seed)?;
            let y = observe(&design, &support, config.sigma, seed)?;
            instance = Instance::new(design, support, config.sigma, y)?;
            estimation_design = &instance.design;
            estimation_y = instance.y.as_slice();
        }
        Setting::Sparsified => {
            let design = sample_design(n, config.p, EnsembleKind::Dense, 0, seed)?;
            let y = observe(&design, &support, config.sigma, seed)?;
            let base = Instance::new(design, support, config.sigma, y)?;
            instance = sparsify_and_rescale(base, config.d, seed)?;
            let sp = instance.sparsified.as_ref().expect("just populated");
            estimation_design = &sp.x_tilde;
            estimation_y = sp.y_tilde.as_slice();
        }
    }

    let result = match config.estimator {
        EstimatorKind::Exhaustive => estimator::mle_exhaustive_with_budget(
            estimation_design,
            estimation_y,
            config.s,
            config.enumeration_budget,
        )?,
        EstimatorKind::LocalSearch => estimator::mle_local_search(
            estimation_design,
            estimation_y,
            config.s,
            config.restarts,
            config.max_sweeps,
            seed,
        )?,
    };

    let symdiff = sym_diff_size(&result.support, &instance.beta_support)?;
    let loss_star = estimator::loss(estimation_design, estimation_y, &instance.beta_support)?;
    if result.method == Method::Exhaustive {
        assert!(
            result.loss <= loss_star,
            "exhaustive minimizer beat by the planted support: {} > {}",
            result.loss,
            loss_star
        );
    }
    Ok(TrialRecord {
        n,
        trial_index,
        seed,
        symdiff,
        success: symdiff < config.success_threshold(),
        loss_star,
        loss_hat: result.loss,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs the full grid. Trials are independent tasks; aggregation is by
/// integer counters, so the summary depends only on the config.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepSummary, ExperimentError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let (successes, symdiff_total) = (0..config.trials_per_n)
            .into_par_iter()
            .map(|t| {
                let record = run_trial(config, n, t)?;
                Ok((record.success as u64, record.symdiff as u64))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
            .map_err(|e: ExperimentError| e)?;
        let trials = config.trials_per_n;
        let rate = successes as f64 / trials as f64;
        rows.push(SweepRow {
            n,
            trials,
            successes: successes as usize,
            success_rate: rate,
            mean_symdiff_frac: symdiff_total as f64 / (2.0 * config.s as f64 * trials as f64),
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
        });
    }
    Ok(SweepSummary { config: config.clone(), thresholds: annotate(config), rows })
}

/// Threshold values relevant to the sweep's setting; infeasible formulas
/// are simply omitted (the annotation is advisory).
fn annotate(config: &ExperimentConfig) -> BTreeMap<String, f64> {
    let params = config.regime_params();
    let kinds: &[ThresholdKind] = match config.setting {
        Setting::Sparse => &[ThresholdKind::NStarSublinear, ThresholdKind::NInfSpSublinear],
        Setting::Dense => &[ThresholdKind::NInfDense, ThresholdKind::NAlgDense],
        Setting::Sparsified => {
            &[ThresholdKind::NStarSparsified, ThresholdKind::NInfSparsifiedStrong]
        }
    };
    kinds
        .iter()
        .filter_map(|&kind| {
            threshold(kind, &params).ok().map(|report| (kind.name().to_string(), report.value))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersistFormat {
    Csv,
    Json,
}

/// CSV schema, one row per grid point:
/// `setting,p,s,d,sigma,delta,estimator,n,trials,successes,success_rate,mean_symdiff_frac,stderr,master_seed`
pub const CSV_HEADER: &str =
    "setting,p,s,d,sigma,delta,estimator,n,trials,successes,success_rate,mean_symdiff_frac,stderr,master_seed";

pub fn write_csv(summary: &SweepSummary, w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let c = &summary.config;
    for row in &summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.setting.name(),
            c.p,
            c.s,
            c.d,
            c.sigma,
            c.delta,
            c.estimator.name(),
            row.n,
            row.trials,
            row.successes,
            row.success_rate,
            row.mean_symdiff_frac,
            row.stderr,
            c.master_seed,
        )?;
    }
    Ok(())
}

pub fn write_json(summary: &SweepSummary, w: &mut impl Write) -> Result<(), ExperimentError> {
    serde_json::to_writer_pretty(&mut *w, summary)?;
    writeln!(w).map_err(|source| ExperimentError::Io { path: PathBuf::new(), source })?;
    Ok(())
}

pub fn read_json(r: impl io::Read) -> Result<SweepSummary, ExperimentError> {
    Ok(serde_json::from_reader(r)?)
}

/// Writes the summary to `path` in the requested format; errors carry the
/// path for context.
pub fn persist(
    summary: &SweepSummary,
    path: &Path,
    format: PersistFormat,
) -> Result<(), ExperimentError> {
    let wrap = |source: io::Error| ExperimentError::Io { path: path.to_path_buf(), source };
    let mut file = std::fs::File::create(path).map_err(wrap)?;
    match format {
        PersistFormat::Csv => write_csv(summary, &mut file).map_err(wrap)?,
        PersistFormat::Json => {
            serde_json::to_writer_pretty(&mut file, summary)?;
            use std::io::Write as _;
            writeln!(file).map_err(wrap)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(threads: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::sparse(12, 3, 8, 0.5, 0.4, vec![4, 10, 24], 40, 99)
    }

    #[test]
    fn trials_are_deterministic_up_to_wall_time() {
        let config = small_config();
        let a = run_trial(&config, 10, 7).unwrap();
        let b = run_trial(&config, 10, 7).unwrap();
        assert_eq!(a.symdiff, b.symdiff);
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.loss_star.to_bits(), b.loss_star.to_bits());
        assert_eq!(a.loss_hat.to_bits(), b.loss_hat.to_bits());
    }

    #[test]
    fn full_sparsity_always_recovers() {
        let config = ExperimentConfig::sparse(6, 6, 4, 1.0, 0.5, vec![3], 10, 1);
        for t in 0..10 {
            let record = run_trial(&config, 3, t).unwrap();
            assert_eq!(record.symdiff, 0);
            assert!(record.success);
        }
    }

    #[test]
    fn noiseless_full_density_trials_recover_exactly() {
        // sigma = 0, d = p, n >= p: the zero-loss support is unique.
        let config = ExperimentConfig::sparse(12, 3, 12, 0.0, 0.4, vec![12], 20, 5);
        for t in 0..20 {
            let record = run_trial(&config, 12, t).unwrap();
            assert_eq!(record.symdiff, 0, "trial {t}");
        }
    }

    #[test]
    fn exhaustive_never_loses_to_planted_support() {
        let config = small_config();
        for &n in &config.n_grid {
            for t in 0..10 {
                let record = run_trial(&config, n, t).unwrap();
                assert!(record.loss_hat <= record.loss_star);
            }
        }
    }

    #[test]
    fn sweep_is_worker_count_invariant() {
        let config = small_config();
        let one = pool(1).install(|| sweep(&config).unwrap());
        let eight = pool(8).install(|| sweep(&config).unwrap());
        assert_eq!(one, eight);
        assert_eq!(one.rows.len(), 3);
        for row in &one.rows {
            assert!(row.successes <= row.trials);
        }
    }

    #[test]
    fn singleton_sweep_wraps_one_trial() {
        let mut config = small_config();
        config.n_grid = vec![6];
        config.trials_per_n = 1;
        let summary = sweep(&config).unwrap();
        assert_eq!(summary.rows.len(), 1);
        assert_eq!(summary.rows[0].trials, 1);
        let record = run_trial(&config, 6, 0).unwrap();
        assert_eq!(summary.rows[0].successes, record.success as usize);
    }

    #[test]
    fn success_rate_grows_with_sample_size() {
        let config = ExperimentConfig::sparse(14, 3, 8, 0.5, 0.4, vec![4, 8, 16, 32], 100, 2024);
        let summary = sweep(&config).unwrap();
        for pair in summary.rows.windows(2) {
            let slack = 2.0 * (pair[0].stderr + pair[1].stderr);
            assert!(
                pair[1].success_rate >= pair[0].success_rate - slack,
                "rate dropped: {pair:?}"
            );
        }
        let first = summary.rows.first().unwrap().success_rate;
        let last = summary.rows.last().unwrap().success_rate;
        assert!(last > first, "no growth: {first} vs {last}");
    }

    #[test]
    fn sparsified_setting_estimates_from_rescaled_data() {
        let config =
            ExperimentConfig::sparsified(10, 0.2, 0.5, 0.3, 0.5, vec![40], 20, 7);
        assert_eq!(config.s, 2);
        assert_eq!(config.d, 5);
        let summary = sweep(&config).unwrap();
        assert!(summary.thresholds.contains_key("n_star_sparsified"));
        assert!(summary.rows[0].success_rate > 0.0);
    }

    #[test]
    fn sweep_annotates_thresholds() {
        let summary = sweep(&small_config()).unwrap();
        assert!(summary.thresholds.contains_key("n_inf_sp_sublinear"));
        assert!(summary.thresholds.contains_key("n_star_sublinear"));
    }

    #[test]
    fn config_validation_rejects_bad_grids() {
        let mut config = small_config();
        config.n_grid = vec![4, 4];
        assert!(matches!(sweep(&config), Err(ExperimentError::Config(_))));
        config.n_grid = vec![8, 4];
        assert!(matches!(sweep(&config), Err(ExperimentError::Config(_))));
        config.n_grid = vec![4, 8];
        config.trials_per_n = 0;
        assert!(matches!(sweep(&config), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let summary = sweep(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_json(&summary, &mut buf).unwrap();
        let back = read_json(buf.as_slice()).unwrap();
        assert_eq!(back, summary);
    }

    #[test]
    fn csv_schema_and_row_count() {
        let summary = sweep(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_csv(&summary, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + summary.rows.len());
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 14);
            for numeric in &fields[9..13] {
                let v: f64 = numeric.parse().unwrap();
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn persist_reports_path_on_failure() {
        let summary = sweep(&small_config()).unwrap();
        let err = persist(
            &summary,
            Path::new("/nonexistent-dir/out.csv"),
            PersistFormat::Csv,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}

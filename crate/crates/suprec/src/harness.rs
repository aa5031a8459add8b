//! Seeded end-to-end trials and parameter sweeps with success-rate
//! aggregation.
//!
//! A trial runs the full pipeline (support -> variances -> signals ->
//! matrices -> observations -> proxy variance -> top-k selection) and
//! declares success iff the estimated support equals the true one exactly.
//! A sweep runs `trials_per_point` independent trials at every grid point,
//! reports Wilson 95% intervals, and normalizes the sample-count axis.
//!
//! Seeding: the trial streams depend on (master_seed, grid-point hash,
//! trial_index), where the point hash covers the resolved parameter values,
//! not the grid position. Adding, removing, or reordering grid points never
//! perturbs the trials of the others, and trials are independent work items
//! that can be executed in any order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{derive_seed, splitmix64, stream, stream_tag, Ensemble, Prior, ProblemConfig};
use crate::datagen::{
    make_variance_vector, observe, sample_measurement_matrices, sample_signals, sample_support,
    SupportSet, VarianceMode, VarianceVector,
};
use crate::error::{Error, Result};
use crate::estimator::{expected_proxy, proxy_variance, topk_support, SupportEstimate};

/// x-axis normalization for success-rate curves; natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NormalizationMode {
    /// normalized_n = n.
    #[default]
    None,
    /// n / ((k^2/m^2) ln(k(d-k))).
    KsqOverMsq,
    /// n / ((k/m + 1 + sigma2)^2 ln(k(d-k))).
    NoiseAware,
    /// n / ((k^2 (1-m/k)^4 / m^2) ln(k(d-k))), the lower-bound normalization.
    FanoLB,
}

/// One sweep-axis override: a parameter name and the values it takes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridParam {
    pub param: String,
    pub values: Vec<serde_json::Value>,
}

fn default_trials() -> usize {
    200
}

/// A parameter sweep: base config, grid overrides (cartesian product, first
/// parameter outermost), trials per point, and the axis normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ProblemConfig,
    pub grid: Vec<GridParam>,
    #[serde(default = "default_trials")]
    pub trials_per_point: usize,
    #[serde(default)]
    pub normalization: NormalizationMode,
}

/// Execution limits for a sweep.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    /// Maximum estimated cost in scalar multiply-adds.
    pub budget: f64,
    /// Run even when the estimate exceeds the budget.
    pub force: bool,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

pub const DEFAULT_BUDGET: f64 = 1e12;

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            budget: DEFAULT_BUDGET,
            force: false,
            threads: None,
        }
    }
}

/// Outcome of a single end-to-end trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub success: bool,
    pub estimated: SupportEstimate,
    pub truth: SupportSet,
    pub trial_seed: u64,
    pub wall_time_s: f64,
}

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Resolved point parameters; `master_seed` is the sweep's master seed.
    pub config: ProblemConfig,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub normalized_n: f64,
}

/// Success-rate curve over the grid, rows in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub normalization: NormalizationMode,
    pub master_seed: u64,
}

/// z for a 95% central normal interval.
pub const WILSON_Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at critical value
/// `z`; behaves correctly at 0 and at all successes.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Hash of the resolved generative parameters (not the seed, not the grid
/// position), used to derive per-point trial streams.
pub fn config_point_hash(c: &ProblemConfig) -> u64 {
    let mut h = splitmix64(stream_tag::GRID_POINT);
    for w in [
        c.d as u64,
        c.k as u64,
        c.m as u64,
        c.n as u64,
        c.sigma2.to_bits(),
        match c.prior {
            Prior::Gaussian => 0,
            Prior::Rademacher => 1,
        },
        match c.ensemble {
            Ensemble::Gaussian => 0,
            Ensemble::Rademacher => 1,
        },
        c.lambda_min.to_bits(),
        c.lambda_max.to_bits(),
    ] {
        h = splitmix64(h ^ w);
    }
    h
}

/// Generates the ground truth of one trial: support and variance vector.
pub fn trial_truth(config: &ProblemConfig, trial_index: u64) -> Result<VarianceVector> {
    let seed = config.master_seed;
    let mut sup_rng = stream(seed, trial_index, stream_tag::SUPPORT);
    let support = sample_support(config.d, config.k, &mut sup_rng)?;
    let mode = if config.is_binary() {
        VarianceMode::Binary
    } else {
        VarianceMode::UniformRange
    };
    let mut lam_rng = stream(seed, trial_index, stream_tag::LAMBDA);
    make_variance_vector(
        &support,
        config.lambda_min,
        config.lambda_max,
        mode,
        &mut lam_rng,
    )
}

/// Generates the observations of one trial for a given ground truth.
pub fn trial_observations(
    config: &ProblemConfig,
    lambda: &VarianceVector,
    trial_index: u64,
) -> Result<crate::datagen::ObservationBatch> {
    let seed = config.master_seed;
    let mut sig_rng = stream(seed, trial_index, stream_tag::SIGNALS);
    let signals = sample_signals(lambda, config.prior, config.n, &mut sig_rng);
    let mut mat_rng = stream(seed, trial_index, stream_tag::MATRICES);
    let mats =
        sample_measurement_matrices(config.m, config.d, config.n, config.ensemble, &mut mat_rng)?;
    let mut noise_rng = stream(seed, trial_index, stream_tag::NOISE);
    observe(&signals, mats, config.sigma2, &mut noise_rng)
}

/// Full pipeline for one trial; success iff the top-k estimate equals the
/// true support exactly. Deterministic in (config, trial_index).
pub fn run_trial(config: &ProblemConfig, trial_index: u64) -> Result<TrialResult> {
    config.validate()?;
    let started = Instant::now();
    let lambda = trial_truth(config, trial_index)?;
    let obs = trial_observations(config, &lambda, trial_index)?;
    let est = proxy_variance(&obs)?;
    let estimated = topk_support(&est, config.k)?;
    let success = estimated.matches(lambda.support());
    Ok(TrialResult {
        success,
        estimated,
        truth: lambda.support().clone(),
        trial_seed: derive_seed(config.master_seed, trial_index, 0),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Applies one `key = value` override to a config.
pub fn apply_override(
    config: &mut ProblemConfig,
    key: &str,
    value: &serde_json::Value,
) -> Result<()> {
    let bad = |what: &str| Error::InvalidConfig(format!("override {key}: expected {what}, got {value}"));
    let as_usize = |v: &serde_json::Value, what: &str| -> Result<usize> {
        v.as_u64().map(|u| u as usize).ok_or_else(|| bad(what))
    };
    let as_f64 = |v: &serde_json::Value, what: &str| -> Result<f64> {
        v.as_f64().ok_or_else(|| bad(what))
    };
    match key {
        "d" => config.d = as_usize(value, "a positive integer")?,
        "k" => config.k = as_usize(value, "a positive integer")?,
        "m" => config.m = as_usize(value, "a positive integer")?,
        "n" => config.n = as_usize(value, "a positive integer")?,
        "sigma2" => config.sigma2 = as_f64(value, "a nonnegative real")?,
        "lambda_min" => config.lambda_min = as_f64(value, "a positive real")?,
        "lambda_max" => config.lambda_max = as_f64(value, "a positive real")?,
        "master_seed" => {
            config.master_seed = value.as_u64().ok_or_else(|| bad("a 64-bit unsigned integer"))?
        }
        "prior" => {
            config.prior = serde_json::from_value(value.clone())
                .map_err(|_| bad("\"gaussian\" or \"rademacher\""))?
        }
        "ensemble" => {
            config.ensemble = serde_json::from_value(value.clone())
                .map_err(|_| bad("\"gaussian\" or \"rademacher\""))?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown override parameter {other:?}"
            )))
        }
    }
    Ok(())
}

/// Resolves the grid into point configs, cartesian product in grid order
/// (first parameter outermost). Every point keeps the sweep's master seed.
pub fn grid_points(spec: &SweepSpec) -> Result<Vec<ProblemConfig>> {
    if spec.grid.is_empty() {
        return Err(Error::InvalidConfig("empty sweep grid".into()));
    }
    if spec.trials_per_point < 1 {
        return Err(Error::InvalidConfig("trials_per_point must be >= 1".into()));
    }
    for gp in &spec.grid {
        if gp.values.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "grid parameter {:?} has no values",
                gp.param
            )));
        }
    }
    let mut points = vec![spec.base.clone()];
    for gp in &spec.grid {
        let mut next = Vec::with_capacity(points.len() * gp.values.len());
        for p in &points {
            for v in &gp.values {
                let mut q = p.clone();
                apply_override(&mut q, &gp.param, v)?;
                next.push(q);
            }
        }
        points = next;
    }
    for p in &points {
        p.validate()?;
    }
    Ok(points)
}

/// Denominator for the normalized sample-count axis.
pub fn normalization_denominator(config: &ProblemConfig, mode: NormalizationMode) -> Result<f64> {
    let (kf, mf, df) = (config.k as f64, config.m as f64, config.d as f64);
    if matches!(mode, NormalizationMode::None) {
        return Ok(1.0);
    }
    if config.k >= config.d {
        return Err(Error::InvalidConfig(
            "normalization needs k < d (log k(d-k) must be defined)".into(),
        ));
    }
    let log_term = (kf * (df - kf)).ln();
    Ok(match mode {
        NormalizationMode::None => 1.0,
        NormalizationMode::KsqOverMsq => kf * kf / (mf * mf) * log_term,
        NormalizationMode::NoiseAware => (kf / mf + 1.0 + config.sigma2).powi(2) * log_term,
        NormalizationMode::FanoLB => {
            kf * kf * (1.0 - mf / kf).powi(4) / (mf * mf) * log_term
        }
    })
}

/// Estimated sweep cost in scalar multiply-adds: sum over points of
/// trials * d * n * m (the proxy-statistic evaluation dominates).
pub fn estimated_cost(spec: &SweepSpec) -> Result<f64> {
    let points = grid_points(spec)?;
    Ok(points
        .iter()
        .map(|p| spec.trials_per_point as f64 * p.d as f64 * p.n as f64 * p.m as f64)
        .sum())
}

/// Runs the sweep. Refuses grids whose estimated cost exceeds the budget
/// unless `force` is set. Trials run on a work-stealing pool; results are
/// keyed to (point, trial) so aggregation is order-independent and the
/// outcome is a pure function of the spec.
pub fn run_sweep(spec: &SweepSpec, opts: &SweepOptions) -> Result<SweepResult> {
    let points = grid_points(spec)?;
    let cost = estimated_cost(spec)?;
    if cost > opts.budget && !opts.force {
        return Err(Error::BudgetExceeded {
            estimated: cost,
            budget: opts.budget,
        });
    }

    let run = || -> Result<Vec<usize>> {
        let trials = spec.trials_per_point;
        let master = spec.base.master_seed;
        let work: Vec<(usize, u64)> = (0..points.len())
            .flat_map(|pi| (0..trials as u64).map(move |ti| (pi, ti)))
            .collect();
        let outcomes: Vec<(usize, bool)> = work
            .into_par_iter()
            .map(|(pi, ti)| {
                let mut point_config = points[pi].clone();
                point_config.master_seed =
                    derive_seed(master, config_point_hash(&points[pi]), stream_tag::GRID_POINT);
                let r = run_trial(&point_config, ti).expect("points validated by grid_points");
                (pi, r.success)
            })
            .collect();
        let mut successes = vec![0usize; points.len()];
        for (pi, ok) in outcomes {
            if ok {
                successes[pi] += 1;
            }
        }
        Ok(successes)
    };

    let successes = match opts.threads {
        Some(width) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(width)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(run)?
        }
        None => run()?,
    };

    let trials = spec.trials_per_point;
    let mut rows = Vec::with_capacity(points.len());
    for (point, &succ) in points.iter().zip(&successes) {
        let (ci_low, ci_high) = wilson_interval(succ, trials, WILSON_Z95);
        let denom = normalization_denominator(point, spec.normalization)?;
        rows.push(SweepRow {
            config: point.clone(),
            trials,
            successes: succ,
            success_rate: succ as f64 / trials as f64,
            ci_low,
            ci_high,
            normalized_n: point.n as f64 / denom,
        });
    }
    Ok(SweepResult {
        rows,
        normalization: spec.normalization,
        master_seed: spec.base.master_seed,
    })
}

/// Re-normalizes the sample-count axis of an existing result.
pub fn normalize_axis(result: &SweepResult, mode: NormalizationMode) -> Result<SweepResult> {
    let mut out = result.clone();
    for row in out.rows.iter_mut() {
        let denom = normalization_denominator(&row.config, mode)?;
        row.normalized_n = row.config.n as f64 / denom;
    }
    out.normalization = mode;
    Ok(out)
}

/// First upward crossing of `level` by success_rate along normalized_n, by
/// linear interpolation; `None` when the curve never crosses from below.
pub fn crossing_point(curve: &SweepResult, level: f64) -> Option<f64> {
    for pair in curve.rows.windows(2) {
        let (x0, y0) = (pair[0].normalized_n, pair[0].success_rate);
        let (x1, y1) = (pair[1].normalized_n, pair[1].success_rate);
        if y0 < level && level <= y1 {
            return Some(x0 + (level - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    None
}

/// CSV with the fixed column set, one row per grid point, in grid order.
pub fn write_csv<W: Write>(result: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "d,k,m,n,sigma2,prior,ensemble,trials,successes,success_rate,ci_low,ci_high,normalized_n,master_seed"
    )?;
    for row in &result.rows {
        let c = &row.config;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.d,
            c.k,
            c.m,
            c.n,
            c.sigma2,
            c.prior.as_str(),
            c.ensemble.as_str(),
            row.trials,
            row.successes,
            row.success_rate,
            row.ci_low,
            row.ci_high,
            row.normalized_n,
            result.master_seed,
        )?;
    }
    Ok(())
}

/// JSON mirror of the CSV rows.
pub fn sweep_result_json(result: &SweepResult) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = result
        .rows
        .iter()
        .map(|row| {
            let c = &row.config;
            json!({
                "d": c.d,
                "k": c.k,
                "m": c.m,
                "n": c.n,
                "sigma2": c.sigma2,
                "prior": c.prior.as_str(),
                "ensemble": c.ensemble.as_str(),
                "trials": row.trials,
                "successes": row.successes,
                "success_rate": row.success_rate,
                "ci_low": row.ci_low,
                "ci_high": row.ci_high,
                "normalized_n": row.normalized_n,
                "master_seed": result.master_seed,
            })
        })
        .collect();
    json!({
        "format_version": 1,
        "normalization": result.normalization,
        "master_seed": result.master_seed,
        "rows": rows,
    })
}

/// One plottable curve: (x, y, y_lo, y_hi) per grid point sharing all
/// parameters except the sample count.
#[derive(Debug, Clone, Serialize)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// Groups rows into one series per combination of non-n parameters, in
/// first-appearance order; x is normalized_n.
pub fn plot_series(result: &SweepResult) -> Vec<PlotSeries> {
    let mut series: Vec<(String, PlotSeries)> = Vec::new();
    for row in &result.rows {
        let c = &row.config;
        let key = format!(
            "d={},k={},m={},sigma2={},prior={},ensemble={},lambda=[{},{}]",
            c.d,
            c.k,
            c.m,
            c.sigma2,
            c.prior.as_str(),
            c.ensemble.as_str(),
            c.lambda_min,
            c.lambda_max
        );
        let entry = match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, s)) => s,
            None => {
                series.push((
                    key.clone(),
                    PlotSeries {
                        label: key,
                        points: Vec::new(),
                    },
                ));
                &mut series.last_mut().unwrap().1
            }
        };
        entry
            .points
            .push((row.normalized_n, row.success_rate, row.ci_low, row.ci_high));
    }
    series.into_iter().map(|(_, s)| s).collect()
}

/// Per-coordinate Monte Carlo mean of the proxy statistic against its exact
/// expectation, for a fixed variance vector.
#[derive(Debug, Clone, Serialize)]
pub struct ProxyMeanReport {
    pub trials: usize,
    pub n_per_trial: usize,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub expected: Vec<f64>,
    /// max_i |mean_i - expected_i| / std_error_i.
    pub max_abs_z: f64,
}

/// Runs `trials` independent batches of `config.n` samples against the fixed
/// `lambda` and aggregates the proxy statistic per coordinate. Parallel over
/// trials with derived streams; the reduction order is fixed.
pub fn proxy_mean_experiment(
    config: &ProblemConfig,
    lambda: &VarianceVector,
    trials: usize,
) -> Result<ProxyMeanReport> {
    config.validate()?;
    if lambda.d() != config.d {
        return Err(Error::InvalidInput("lambda dimension != d".into()));
    }
    if trials < 2 {
        return Err(Error::InvalidConfig("need at least 2 trials".into()));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|ti| {
            let obs = trial_observations(config, lambda, ti).expect("validated config");
            proxy_variance(&obs).expect("nonempty batch").values().to_vec()
        })
        .collect();

    let d = config.d;
    let tf = trials as f64;
    let mut mean = vec![0.0; d];
    for v in &per_trial {
        for (m, &x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= tf;
    }
    let mut std_error = vec![0.0; d];
    for v in &per_trial {
        for ((s, &x), &mu) in std_error.iter_mut().zip(v).zip(&mean) {
            *s += (x - mu) * (x - mu);
        }
    }
    for s in std_error.iter_mut() {
        *s = (*s / (tf - 1.0) / tf).sqrt();
    }
    let expected = expected_proxy(lambda, config.m, config.sigma2);
    let max_abs_z = mean
        .iter()
        .zip(&std_error)
        .zip(&expected)
        .map(|((&m, &s), &e)| if s > 0.0 { (m - e).abs() / s } else { f64::INFINITY })
        .fold(0.0_f64, f64::max);
    Ok(ProxyMeanReport {
        trials,
        n_per_trial: config.n,
        mean,
        std_error,
        expected,
        max_abs_z,
    })
}

//! Subcommand implementations: gen, recover, sweep, bounds.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde_json::{json, Value};

use suprec::estimator::{
    default_threshold, proxy_variance, threshold_support, topk_support, ThresholdSpec,
};
use suprec::harness::{
    apply_override, crossing_point, normalize_axis, plot_series, run_sweep, sweep_result_json,
    trial_observations, trial_truth, write_csv, NormalizationMode, SweepOptions, SweepSpec,
};
use suprec::lowerbound::{sample_bounds, SampleBoundParams};
use suprec::ProblemConfig;

use crate::dataset::Dataset;

/// Seed precedence: --seed flag, then a master_seed override, then the
/// config file, then SUPREC_SEED, then 0.
pub fn resolve_master_seed(json_obj: &mut Value, flag_seed: Option<u64>) {
    let has_file_seed = json_obj.get("master_seed").is_some();
    if !has_file_seed {
        if let Ok(env_seed) = std::env::var("SUPREC_SEED") {
            if let Ok(v) = env_seed.parse::<u64>() {
                json_obj["master_seed"] = json!(v);
            }
        }
    }
    if let Some(s) = flag_seed {
        json_obj["master_seed"] = json!(s);
    }
}

/// Parses `key=value` into (key, JSON value); bare words become strings.
pub fn parse_override(kv: &str) -> anyhow::Result<(String, Value)> {
    let (key, raw) = kv
        .split_once('=')
        .with_context(|| format!("override {kv:?} is not key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn load_problem_config(
    path: &Path,
    flag_seed: Option<u64>,
    overrides: &[String],
) -> anyhow::Result<ProblemConfig> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    resolve_master_seed(&mut value, None);
    let mut config: ProblemConfig = serde_json::from_value(value)
        .with_context(|| format!("interpreting {}", path.display()))?;
    for kv in overrides {
        let (key, val) = parse_override(kv)?;
        apply_override(&mut config, &key, &val)?;
    }
    if let Some(s) = flag_seed {
        config.master_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

pub fn cmd_gen(
    config_path: &Path,
    output: &Path,
    flag_seed: Option<u64>,
    overrides: &[String],
    trial: u64,
) -> anyhow::Result<i32> {
    let config = load_problem_config(config_path, flag_seed, overrides)?;
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    let lambda = trial_truth(&config, trial)?;
    let obs = trial_observations(&config, &lambda, trial)?;
    let dataset = Dataset::from_parts(&config, &lambda, &obs);
    let mut bytes = serde_json::to_vec(&dataset)?;
    bytes.push(b'\n');
    fs::write(output, bytes).with_context(|| format!("writing {}", output.display()))?;
    eprintln!(
        "wrote dataset: d={} k={} m={} n={} seed={} -> {}",
        config.d,
        config.k,
        config.m,
        config.n,
        config.master_seed,
        output.display()
    );
    Ok(0)
}

pub struct RecoverArgs {
    pub input: PathBuf,
    pub output: Option<PathBuf>,
    pub tau: Option<f64>,
    pub strict: bool,
}

pub fn cmd_recover(args: &RecoverArgs) -> anyhow::Result<i32> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading dataset {}", args.input.display()))?;
    let dataset: Dataset =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.input.display()))?;
    let obs = dataset.to_observation_batch()?;
    let est = proxy_variance(&obs)?;
    let topk = topk_support(&est, dataset.config.k)?;

    let tau = match args.tau {
        Some(t) => ThresholdSpec::new(t)?,
        None => default_threshold(
            dataset.config.k,
            dataset.config.m,
            dataset.config.sigma2,
            dataset.config.lambda_min,
        ),
    };
    let thresholded = threshold_support(&est, &tau);

    let truth = dataset.truth_support()?;
    let verdict = match &truth {
        None => "unknown",
        Some(s) if topk.matches(s) => "exact",
        Some(_) => "mismatch",
    };

    let values = est.values();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    eprintln!("lambda_tilde: min {min:.4}, mean {mean:.4}, max {max:.4} over d={}", est.d());
    eprintln!("top-k support: {:?}", topk.one_based());
    eprintln!("verdict: {verdict}");

    let report = json!({
        "format_version": 1,
        "config": dataset.config,
        "n_used": est.n_used(),
        "lambda_tilde": values,
        "lambda_tilde_summary": { "min": min, "mean": mean, "max": max },
        "topk_support": topk.one_based(),
        "tie_broken": topk.tie_broken(),
        "threshold": { "tau": tau.tau, "support": thresholded.one_based() },
        "truth": truth.as_ref().map(|s| s.one_based()),
        "verdict": verdict,
    });
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    write_output(args.output.as_ref(), &bytes)?;

    if args.strict && verdict == "mismatch" {
        return Ok(1);
    }
    Ok(0)
}

pub struct SweepArgs {
    pub spec: PathBuf,
    pub output: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub plot_data: Option<PathBuf>,
    pub normalize: Option<NormalizationMode>,
    pub seed: Option<u64>,
    pub overrides: Vec<String>,
    pub trials: Option<usize>,
    pub budget: f64,
    pub force: bool,
    pub threads: Option<usize>,
    pub crossing: Option<f64>,
}

pub fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<i32> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading sweep spec {}", args.spec.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    if let Some(base) = value.get_mut("base") {
        resolve_master_seed(base, None);
    }
    let mut spec: SweepSpec = serde_json::from_value(value)
        .with_context(|| format!("interpreting {}", args.spec.display()))?;
    for kv in &args.overrides {
        let (key, val) = parse_override(kv)?;
        apply_override(&mut spec.base, &key, &val)?;
    }
    if let Some(s) = args.seed {
        spec.base.master_seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials_per_point = t;
    }
    if let Some(mode) = args.normalize {
        spec.normalization = mode;
    }
    for w in spec.base.warnings() {
        eprintln!("warning: {w}");
    }

    let opts = SweepOptions {
        budget: args.budget,
        force: args.force,
        threads: args.threads,
    };
    let result = run_sweep(&spec, &opts)?;
    let normalized = normalize_axis(&result, spec.normalization)?;

    let mut csv = Vec::new();
    write_csv(&normalized, &mut csv)?;
    write_output(args.output.as_ref(), &csv)?;

    if let Some(path) = &args.json {
        let mut bytes = serde_json::to_vec_pretty(&sweep_result_json(&normalized))?;
        bytes.push(b'\n');
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.plot_data {
        let series = plot_series(&normalized);
        let mut bytes = serde_json::to_vec_pretty(&json!({
            "format_version": 1,
            "normalization": normalized.normalization,
            "series": series,
        }))?;
        bytes.push(b'\n');
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(level) = args.crossing {
        match crossing_point(&normalized, level) {
            Some(x) => eprintln!("crossing at level {level}: normalized_n = {x:.4}"),
            None => eprintln!("crossing at level {level}: not found"),
        }
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_bounds(
    m: usize,
    k: usize,
    d: usize,
    sigma2: f64,
    delta: f64,
    c_upper: f64,
    c_lower: f64,
    lambda_min: f64,
    lambda_max: f64,
) -> anyhow::Result<i32> {
    let params = SampleBoundParams {
        m,
        k,
        d,
        sigma2,
        delta,
        c_upper,
        c_lower,
        lambda_min,
        lambda_max,
    };
    let result = sample_bounds(&params)?;
    let mut bytes = serde_json::to_vec_pretty(&json!({
        "format_version": 1,
        "params": params,
        "n_upper": result.n_upper,
        "n_lower": result.n_lower,
        "n_norm": result.n_norm,
        "regime_notes": result.regime_notes,
    }))?;
    bytes.push(b'\n');
    std::io::stdout().write_all(&bytes)?;
    Ok(0)
}

pub fn parse_normalization(s: &str) -> anyhow::Result<NormalizationMode> {
    Ok(match s.to_ascii_lowercase().as_str() {
        "none" => NormalizationMode::None,
        "ksq" | "ksqoversmsq" | "ksq_over_msq" | "ksqovermsq" => NormalizationMode::KsqOverMsq,
        "noise" | "noiseaware" | "noise_aware" => NormalizationMode::NoiseAware,
        "fano" | "fanolb" | "fano_lb" => NormalizationMode::FanoLB,
        other => bail!("unknown normalization {other:?} (none|ksq|noise|fano)"),
    })
}

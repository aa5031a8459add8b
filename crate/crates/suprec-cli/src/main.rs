//! suprec: support recovery from per-sample compressed measurements.
//!
//! Exit codes: 0 success; 1 failed check (strict-mode recovery mismatch or a
//! failed verification suite); 2 invalid input or configuration; 3 sweep
//! budget refusal.

mod commands;
mod dataset;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_bounds, cmd_gen, cmd_recover, cmd_sweep, RecoverArgs, SweepArgs};
use suprec::harness::DEFAULT_BUDGET;

#[derive(Parser)]
#[command(
    name = "suprec",
    about = "Common-support recovery from per-sample compressed measurements",
    long_about = "Generate problem instances, recover supports with the closed-form \
                  proxy-variance estimator, sweep phase-transition curves, evaluate \
                  sample-count bounds, and run Monte Carlo verification suites.\n\n\
                  Seed precedence: --seed beats key=value overrides, which beat the \
                  config file's master_seed, which beats the SUPREC_SEED environment \
                  variable; the final default is 0.\n\n\
                  Exit codes: 0 success, 1 failed check (strict recovery mismatch or \
                  failed verify suite), 2 invalid input, 3 sweep budget refusal."
)]
struct Cli {
    /// Worker threads for Monte Carlo loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset (observations + ground truth) from a config file.
    Gen(GenArgs),
    /// Recover the support from a dataset and report the verdict.
    Recover(RecoverCli),
    /// Run a parameter sweep and write the success-rate table as CSV.
    Sweep(SweepCli),
    /// Print the closed-form sample-count bounds for one parameter point.
    Bounds(BoundsCli),
    /// Run Monte Carlo verification suites.
    Verify(VerifyCli),
}

#[derive(Args)]
struct GenArgs {
    /// Problem config JSON (fields d, k, m, n, sigma2, prior, ensemble,
    /// lambda_min, lambda_max, master_seed).
    #[arg(long)]
    config: PathBuf,
    /// Output dataset path.
    #[arg(long)]
    output: PathBuf,
    /// Master seed (overrides config and SUPREC_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// key=value config overrides (win over file values).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Trial index to generate (selects the derived streams).
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args)]
struct RecoverCli {
    /// Dataset file from `suprec gen`.
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Threshold for the indicator estimate (default: the bias-midpoint rule).
    #[arg(long)]
    tau: Option<f64>,
    /// Exit 1 when ground truth is present and recovery is not exact.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepCli {
    /// Sweep spec JSON (base config, grid, trials_per_point, normalization).
    #[arg(long)]
    spec: PathBuf,
    /// CSV output path (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a JSON mirror of the rows.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write per-curve (x, y, y_lo, y_hi) plot series.
    #[arg(long = "plot-data")]
    plot_data: Option<PathBuf>,
    /// Axis normalization: none | ksq | noise | fano.
    #[arg(long)]
    normalize: Option<String>,
    /// Master seed for the sweep (overrides spec and SUPREC_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// key=value overrides applied to the base config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Override trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Operation budget in scalar multiply-adds.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: f64,
    /// Run even when the estimated cost exceeds the budget.
    #[arg(long)]
    force: bool,
    /// Report the first upward crossing of this success-rate level.
    #[arg(long)]
    crossing: Option<f64>,
}

#[derive(Args)]
struct BoundsCli {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    delta: f64,
    /// Constant in the sufficient-count formula.
    #[arg(long = "c-upper", default_value_t = 1.0)]
    c_upper: f64,
    /// Constant in the necessary-count formula.
    #[arg(long = "c-lower", default_value_t = 0.125)]
    c_lower: f64,
    #[arg(long = "lambda-min", default_value_t = 1.0)]
    lambda_min: f64,
    #[arg(long = "lambda-max", default_value_t = 1.0)]
    lambda_max: f64,
}

#[derive(Args)]
struct VerifyCli {
    /// Suite: bias | separation | wishart | klchain | moments | all.
    suite: String,
    /// Monte Carlo trials (suite-specific default when omitted).
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed for the suite streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Separation constant c1 (default: calibrated 0.5).
    #[arg(long)]
    c1: Option<f64>,
    /// Separation constant c2 (default: calibrated 0.5).
    #[arg(long)]
    c2: Option<f64>,
    /// Sample count for the separation suite (default: the sufficient count).
    #[arg(long)]
    n: Option<usize>,
    /// Wishart rows (with --m: run a single custom point).
    #[arg(long)]
    k: Option<usize>,
    /// Wishart columns (with --k: run a single custom point).
    #[arg(long)]
    m: Option<usize>,
}

fn run_verify(args: &VerifyCli) -> anyhow::Result<i32> {
    use verify::*;

    let seed = args
        .seed
        .or_else(|| std::env::var("SUPREC_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    let c1 = args.c1.unwrap_or(0.5);
    let c2 = args.c2.unwrap_or(0.5);

    let run_one = |name: &str| -> anyhow::Result<SuiteOutcome> {
        Ok(match name {
            "bias" => run_bias(args.trials.unwrap_or(1000), seed),
            "separation" => run_separation(args.trials.unwrap_or(200), seed, c1, c2, args.n),
            "wishart" => run_wishart(args.trials.unwrap_or(100_000), seed, args.k, args.m),
            "klchain" => run_klchain(args.trials.unwrap_or(100_000), seed),
            "moments" => run_moments(args.trials.unwrap_or(100_000), seed),
            other => anyhow::bail!("unknown suite {other:?} (bias|separation|wishart|klchain|moments|all)"),
        })
    };

    let outcomes = if args.suite == "all" {
        ["bias", "separation", "wishart", "klchain", "moments"]
            .iter()
            .map(|s| run_one(s))
            .collect::<anyhow::Result<Vec<_>>>()?
    } else {
        vec![run_one(&args.suite)?]
    };

    let pass = outcomes.iter().all(|o| o.pass);
    let report = serde_json::json!({
        "format_version": 1,
        "seed": seed,
        "suites": outcomes
            .iter()
            .map(|o| serde_json::json!({ "suite": o.name, "pass": o.pass, "report": o.report }))
            .collect::<Vec<_>>(),
        "pass": pass,
    });
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    match &args.output {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(if pass { 0 } else { 1 })
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    if let Some(width) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(width)
            .build_global()
            .ok(); // already-initialized pool keeps its width
    }
    match cli.command {
        Command::Gen(a) => cmd_gen(&a.config, &a.output, a.seed, &a.overrides, a.trial),
        Command::Recover(a) => cmd_recover(&RecoverArgs {
            input: a.input,
            output: a.output,
            tau: a.tau,
            strict: a.strict,
        }),
        Command::Sweep(a) => {
            let normalize = match &a.normalize {
                Some(s) => Some(commands::parse_normalization(s)?),
                None => None,
            };
            cmd_sweep(&SweepArgs {
                spec: a.spec,
                output: a.output,
                json: a.json,
                plot_data: a.plot_data,
                normalize,
                seed: a.seed,
                overrides: a.overrides,
                trials: a.trials,
                budget: a.budget,
                force: a.force,
                threads: None, // global pool already capped by --threads
                crossing: a.crossing,
            })
        }
        Command::Bounds(a) => cmd_bounds(
            a.m,
            a.k,
            a.d,
            a.sigma2,
            a.delta,
            a.c_upper,
            a.c_lower,
            a.lambda_min,
            a.lambda_max,
        ),
        Command::Verify(a) => run_verify(&a),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<suprec::Error>() {
        Some(suprec::Error::BudgetExceeded { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

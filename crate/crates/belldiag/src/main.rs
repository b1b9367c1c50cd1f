use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use belldiag::estimators::{PriorSpec, DEFAULT_GRID_RESOLUTION};
use belldiag::harness::{
    analytic_curve, emit_report, run_experiment, Estimator, ExperimentConfig, Loss, ReportFormat,
};
use belldiag::measurements::Strategy;
use belldiag::states::BellDiagonalState;
use belldiag::{analytics, distinguish};

/// Simulation and analysis toolkit for Bell diagonal state estimation.
#[derive(Parser)]
#[command(name = "belldiag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded Monte Carlo risk experiment.
    Simulate(SimulateArgs),
    /// Print the closed-form average-risk curve for a strategy/estimator.
    Analytic(AnalyticArgs),
    /// Helstrom bound and optimal POVM for two Bell diagonal states.
    Distinguish(DistinguishArgs),
    /// Risk bounds: the QCRB or the BME parity-check upper bound.
    Bound(BoundArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    strategy: Strategy,
    #[arg(long, value_enum)]
    estimator: Estimator,
    #[arg(long, value_enum, default_value = "hs")]
    loss: Loss,
    /// Dirichlet prior parameters for the BME, four comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 4, default_value = "1,1,1,1")]
    prior_alpha: Vec<f64>,
    /// Shot count; repeat for multiple curve points.
    #[arg(long = "n", required = true)]
    n_values: Vec<u64>,
    /// Monte Carlo trials per shot count.
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    /// Simplex grid resolution for MLE/BME.
    #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
    grid: u32,
    /// Random seed; falls back to the BDS_SEED environment variable, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AnalyticArgs {
    #[arg(long, value_enum)]
    strategy: Strategy,
    #[arg(long, value_enum)]
    estimator: Estimator,
    #[arg(long = "n", required = true)]
    n_values: Vec<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DistinguishArgs {
    /// First state, four comma-separated Bell probabilities.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    rho: Vec<f64>,
    /// Second state, four comma-separated Bell probabilities.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    phi: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Which bound to evaluate.
    #[arg(long, value_enum)]
    kind: BoundKind,
    /// State for pointwise bounds, four comma-separated Bell probabilities;
    /// defaults to the completely mixed state.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    theta: Option<Vec<f64>>,
    #[arg(long = "n", required = true)]
    n_values: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BoundKind {
    /// Quantum Cramér-Rao bound (1 - sum theta^2)/N.
    Qcrb,
    /// Upper bound for the BME with ordered parity checks.
    BmeParity,
}

fn parse_theta(values: &[f64]) -> Result<BellDiagonalState, String> {
    let theta: [f64; 4] = values
        .try_into()
        .map_err(|_| "expected exactly four probabilities".to_string())?;
    BellDiagonalState::from_theta(theta).map_err(|e| e.to_string())
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("BDS_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("BDS_SEED is not a valid seed: {v:?}")),
        Err(_) => Ok(0),
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let prior_alpha: [f64; 4] = args
                .prior_alpha
                .as_slice()
                .try_into()
                .map_err(|_| "expected four prior parameters".to_string())?;
            let config = ExperimentConfig {
                strategy: args.strategy,
                estimator: args.estimator,
                loss: args.loss,
                prior: PriorSpec::new(prior_alpha).map_err(|e| e.to_string())?,
                n_values: args.n_values,
                samples: args.samples,
                grid_resolution: args.grid,
                seed: resolve_seed(args.seed)?,
            };
            config.validate().map_err(|e| e.to_string())?;
            let curve = run_experiment(&config).map_err(|e| e.to_string())?;
            let bytes = emit_report(&curve, args.output.format).map_err(|e| e.to_string())?;
            write_output(&args.output.out, &bytes).map_err(|e| e.to_string())
        }
        Command::Analytic(args) => {
            let points = analytic_curve(args.strategy, args.estimator, &args.n_values)
                .map_err(|e| e.to_string())?;
            let bytes = match args.output.format {
                ReportFormat::Json => {
                    let rows: Vec<serde_json::Value> = points
                        .iter()
                        .map(|(n, a)| {
                            serde_json::json!({
                                "n": n,
                                "value": a.value,
                                "upper_bound": a.upper_bound,
                            })
                        })
                        .collect();
                    let mut v = serde_json::to_vec_pretty(&rows).map_err(|e| e.to_string())?;
                    v.push(b'\n');
                    v
                }
                ReportFormat::Csv => {
                    let mut s = String::from("n,value,upper_bound\n");
                    for (n, a) in &points {
                        s.push_str(&format!("{},{},{}\n", n, a.value, a.upper_bound));
                    }
                    s.into_bytes()
                }
            };
            write_output(&args.output.out, &bytes).map_err(|e| e.to_string())
        }
        Command::Distinguish(args) => {
            let rho = parse_theta(&args.rho)?;
            let phi = parse_theta(&args.phi)?;
            let result = distinguish::optimal_povm(&rho, &phi);
            let mut bytes = serde_json::to_vec_pretty(&result).map_err(|e| e.to_string())?;
            bytes.push(b'\n');
            write_output(&args.out, &bytes).map_err(|e| e.to_string())
        }
        Command::Bound(args) => {
            let theta = match &args.theta {
                Some(v) => parse_theta(v)?.theta(),
                None => [0.25; 4],
            };
            let rows: Result<Vec<serde_json::Value>, String> = args
                .n_values
                .iter()
                .map(|&n| {
                    let value = match args.kind {
                        BoundKind::Qcrb => {
                            if n == 0 {
                                return Err("the QCRB requires N >= 1".to_string());
                            }
                            analytics::qcrb_bound(&theta, n)
                        }
                        BoundKind::BmeParity => {
                            analytics::bme_parity_upper_bound(n).map_err(|e| e.to_string())?
                        }
                    };
                    Ok(serde_json::json!({ "n": n, "value": value }))
                })
                .collect();
            let mut bytes = serde_json::to_vec_pretty(&rows?).map_err(|e| e.to_string())?;
            bytes.push(b'\n');
            write_output(&args.out, &bytes).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

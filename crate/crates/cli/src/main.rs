//! `aoi-evt` — closed-form and Monte Carlo analysis of the age of
//! information on a wireless-powered status-update link.
//!
//! Exit codes: 0 on success (and on a passing `validate`), 1 when
//! `validate` finds an out-of-tolerance metric, 2 for usage, configuration
//! or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aoi_evt_cli::commands::{self, SweepParam, SweepScale, SweepSpec, TailOptions};
use aoi_evt_cli::config::{parse_config_file, resolve, ConfigLayer, OutputFormat, RunMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModeArg {
    Physical,
    Analytic,
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (metric, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <metric>=<relative error>, got `{s}`"))?;
    let value: f64 = value
        .parse()
        .map_err(|_| format!("tolerance for `{metric}` must be a number, got `{value}`"))?;
    Ok((metric.to_string(), value))
}

#[derive(Parser)]
#[command(
    name = "aoi-evt",
    version,
    about = "Age-of-information statistics and extreme-value risk metrics for a \
             wireless-powered status-update link",
    after_help = "Exit codes: 0 success/pass, 1 validation failure, 2 usage or config error."
)]
struct Cli {
    /// Config file in the documented key-value format.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in experiment preset (fig2-g10, fig2-g100, fig3-S1e-4, fig3-S1e-3, fig4).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Report destination (stdout when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Renewal cycles per replication.
    #[arg(long, global = true)]
    cycles: Option<u64>,
    /// Independent replications to merge.
    #[arg(long, global = true)]
    replications: Option<u32>,
    /// Comma-separated confidence levels, strictly increasing, in (0, 1).
    #[arg(long, global = true, value_delimiter = ',', value_name = "A1,A2,...")]
    alphas: Option<Vec<f64>>,
    /// Block length for block maxima (1 keeps raw peaks).
    #[arg(long = "block-size", global = true)]
    block_size: Option<usize>,
    /// Simulation mode.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Validation gate override, e.g. --tolerance mean=0.005 (repeatable;
    /// metrics: mean, variance, success_rate, var).
    #[arg(long = "tolerance", global = true, value_parser = parse_tolerance, value_name = "METRIC=REL")]
    tolerance: Vec<(String, f64)>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form report: (g, p, theta), mean/variance, Gumbel fit, VaR/CVaR.
    Analyze,
    /// Monte Carlo run: empirical statistics and tail estimators.
    Simulate {
        /// Write the age sawtooth as CSV (slot,aoi).
        #[arg(long, value_name = "PATH")]
        trajectory_out: Option<PathBuf>,
        /// Slots of sawtooth to record (default 10000 when --trajectory-out is set).
        #[arg(long, value_name = "N")]
        trajectory_slots: Option<u64>,
        /// Write the peak-age samples as CSV (cycle,Y).
        #[arg(long, value_name = "PATH")]
        peaks_out: Option<PathBuf>,
    },
    /// Run both pipelines and gate their agreement; exits 1 on failure.
    Validate,
    /// Closed-form sweep over one parameter; emits CSV.
    Sweep {
        /// Parameter to sweep.
        #[arg(long = "sweep-param", value_enum)]
        param: SweepParam,
        /// First grid value.
        #[arg(long)]
        from: f64,
        /// Last grid value (ignored when steps = 1).
        #[arg(long)]
        to: f64,
        /// Number of grid points.
        #[arg(long)]
        steps: usize,
        /// Grid spacing.
        #[arg(long, value_enum, default_value = "linear")]
        scale: SweepScale,
    },
    /// Empirical vs. fitted-Gumbel tail curves on a shared grid; emits CSV.
    Tail {
        /// Histogram bin count.
        #[arg(long, default_value_t = 200)]
        bins: usize,
        /// Sample the fitted law itself instead of the age process.
        #[arg(long)]
        self_test: bool,
    },
}

fn cli_layer(cli: &Cli) -> Result<ConfigLayer, String> {
    let mut layer = ConfigLayer {
        seed: cli.seed,
        cycles: cli.cycles,
        replications: cli.replications,
        block_size: cli.block_size,
        alphas: cli.alphas.clone(),
        out: cli.out.clone(),
        ..Default::default()
    };
    layer.mode = cli.mode.map(|m| match m {
        ModeArg::Physical => RunMode::Physical,
        ModeArg::Analytic => RunMode::Analytic,
    });
    layer.format = cli.format.map(|f| match f {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    });
    for (metric, value) in &cli.tolerance {
        match metric.as_str() {
            "mean" => layer.tol_mean = Some(*value),
            "variance" => layer.tol_variance = Some(*value),
            "success_rate" => layer.tol_success_rate = Some(*value),
            "var" => layer.tol_var = Some(*value),
            other => {
                return Err(format!(
                    "config error in `tolerance`: unknown metric `{other}` \
                     (expected mean, variance, success_rate or var)"
                ))
            }
        }
    }
    Ok(layer)
}

fn write_output(out: &Option<PathBuf>, contents: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let file_layer = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            Some(parse_config_file(&text).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    let layer = cli_layer(&cli)?;
    let cfg = resolve(cli.preset.as_deref(), file_layer, layer).map_err(|e| e.to_string())?;

    for warning in match &cfg.source {
        aoi_evt_cli::config::SourceSpec::System(p) => p.warnings(),
        _ => Vec::new(),
    } {
        eprintln!("warning: {warning}");
    }

    match &cli.command {
        Command::Analyze => {
            let rendered = commands::analyze(&cfg).map_err(|e| e.to_string())?;
            write_output(&cfg.out, &rendered).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            trajectory_out,
            trajectory_slots,
            peaks_out,
        } => {
            let mut cfg = cfg;
            if trajectory_slots.is_some() {
                cfg.trajectory_slots = *trajectory_slots;
            }
            let output = commands::simulate(&cfg, trajectory_out.clone(), peaks_out.clone())
                .map_err(|e| e.to_string())?;
            for (path, contents) in &output.side_files {
                std::fs::write(path, contents)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            }
            write_output(&cfg.out, &output.main).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let (rendered, pass) = commands::validate(&cfg).map_err(|e| e.to_string())?;
            write_output(&cfg.out, &rendered).map_err(|e| e.to_string())?;
            if pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("validation failed; see the metric rows above the `pass` flag");
                Ok(ExitCode::from(1))
            }
        }
        Command::Sweep {
            param,
            from,
            to,
            steps,
            scale,
        } => {
            let spec = SweepSpec {
                param: *param,
                from: *from,
                to: *to,
                steps: *steps,
                scale: *scale,
            };
            let rendered = commands::sweep(&cfg, &spec).map_err(|e| e.to_string())?;
            write_output(&cfg.out, &rendered).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tail { bins, self_test } => {
            let opts = TailOptions {
                bins: *bins,
                self_test: *self_test,
            };
            let rendered = commands::tail(&cfg, &opts).map_err(|e| e.to_string())?;
            write_output(&cfg.out, &rendered).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

//! Implementations of the five subcommands. Each returns rendered output;
//! writing to disk or stdout is the caller's job, so failed runs never
//! leave partial files behind.

use std::path::PathBuf;

use thiserror::Error;

use aoi_evt::analytics::{
    self, aoi_moments, aoi_variance_massive_n, gumbel_cdf, gumbel_fit, gumbel_pdf, AnalyticsError,
    GumbelFit,
};
use aoi_evt::model::{self, dbm_to_watts, ModelError, SystemParams};
use aoi_evt::risk::{self, CvarBracketCache, RiskError};
use aoi_evt::sim::{self, rng::SimRng, RunConfig, SimError, SimJob, SimOutput};

use crate::config::{ExperimentConfig, OutputFormat, RunMode, SourceSpec, SCHEMA_VERSION};
use crate::report::{
    self, AnalyzeReport, GumbelSection, MetricRow, RiskRow, SimulateReport, ValidateReport,
};

/// Command-level errors; all map to exit code 2.
#[derive(Debug, Error)]
pub enum CommandError {
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("analytics: {0}")]
    Analytics(#[from] AnalyticsError),
    #[error("risk: {0}")]
    Risk(#[from] RiskError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error("tail: {0}")]
    Tail(String),
}

/// `(g, p)` plus the threshold and soft warnings, from either source.
struct ResolvedSource {
    g: f64,
    p: f64,
    theta: Option<f64>,
    warnings: Vec<String>,
}

fn resolve_source(cfg: &ExperimentConfig) -> Result<ResolvedSource, CommandError> {
    match &cfg.source {
        SourceSpec::System(params) => {
            let derived = model::derive(params)?;
            Ok(ResolvedSource {
                g: derived.g,
                p: derived.p,
                theta: Some(derived.snr_threshold_theta),
                warnings: params.warnings(),
            })
        }
        SourceSpec::Derived { g, p } => Ok(ResolvedSource {
            g: *g,
            p: *p,
            theta: None,
            warnings: Vec::new(),
        }),
    }
}

fn fit_with_warnings(
    g: f64,
    p: f64,
    warnings: &mut Vec<String>,
) -> Result<(aoi_evt::AoiMoments, GumbelFit<f64>), CommandError> {
    if analytics::is_ill_conditioned(p) {
        warnings.push(format!(
            "1 - p = {:.3e} is small; the (1-p)^-4 moment factors amplify rounding",
            1.0 - p
        ));
    }
    let moments = aoi_moments(g, p)?;
    let fit = gumbel_fit(&moments, g / (1.0 - p))?;
    if fit.low_validity {
        warnings.push(format!(
            "gumbel regime product g/(1-p) = {:.3} is at or below 10; the extreme-value \
             approximation is outside its advertised regime",
            fit.validity_lg
        ));
    }
    Ok((moments, fit))
}

fn sim_job(cfg: &ExperimentConfig, g: f64, p: f64) -> SimJob {
    match (&cfg.source, cfg.mode) {
        (SourceSpec::System(params), RunMode::Physical) => SimJob::Physical(params.clone()),
        _ => SimJob::Analytic { g, p },
    }
}

fn run_sim(cfg: &ExperimentConfig, g: f64, p: f64) -> Result<SimOutput, CommandError> {
    let run_cfg = RunConfig {
        cycles: cfg.cycles,
        seed: cfg.seed,
        block_size: cfg.block_size,
        keep_records: false,
        trajectory_limit: cfg.trajectory_slots,
    };
    Ok(sim::replicate_and_merge(
        &sim_job(cfg, g, p),
        &run_cfg,
        cfg.replications,
    )?)
}

/// Draws from a fitted Gumbel law by inverse CDF. The stream seed is the
/// bitwise complement of the run seed, keeping it disjoint from the
/// simulation streams while staying reproducible.
fn gumbel_draws(fit: &GumbelFit<f64>, n: u64, run_seed: u64) -> Vec<f64> {
    let mut rng = SimRng::from_seed(!run_seed);
    (0..n)
        .map(|_| fit.mu_hat - fit.sigma_hat * (-(rng.next_open01().ln())).ln())
        .collect()
}

/// Closed-form report: `(g, p, theta)`, mean/variance, Gumbel fit and
/// VaR/CVaR at each configured confidence level.
pub fn analyze(cfg: &ExperimentConfig) -> Result<String, CommandError> {
    let src = resolve_source(cfg)?;
    let mut warnings = src.warnings;
    let (moments, fit) = fit_with_warnings(src.g, src.p, &mut warnings)?;

    let cache = CvarBracketCache::new();
    let mut rows = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        if risk::cvar_is_ill_conditioned(alpha) {
            warnings.push(format!(
                "alpha = {alpha} is within 1e-6 of 1; the CVaR division by (1 - alpha) is \
                 ill-conditioned"
            ));
        }
        rows.push(RiskRow {
            alpha,
            var: risk::var_at(&fit, alpha)?,
            cvar: cache.cvar_at(&fit, alpha)?,
        });
    }

    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        preset: cfg.preset.clone(),
        preset_note: cfg.preset_note.clone(),
        g: src.g,
        p: src.p,
        theta: src.theta,
        mean_aoi: moments.mean_aoi,
        var_aoi: moments.var_aoi,
        gumbel: GumbelSection {
            mu: fit.mu_hat,
            sigma: fit.sigma_hat,
            validity_lg: fit.validity_lg,
            low_validity: fit.low_validity,
        },
        risk: rows,
        warnings,
    };
    Ok(match cfg.format {
        OutputFormat::Json => report::to_json(&report),
        OutputFormat::Csv => report.to_csv(),
    })
}

/// Rendered `simulate` output: the main report plus optional side files.
pub struct SimulateOutput {
    /// Rendered main report.
    pub main: String,
    /// `(path, contents)` pairs for requested side files.
    pub side_files: Vec<(PathBuf, String)>,
}

/// Runs the configured simulation and reports the empirical statistics.
pub fn simulate(
    cfg: &ExperimentConfig,
    trajectory_out: Option<PathBuf>,
    peaks_out: Option<PathBuf>,
) -> Result<SimulateOutput, CommandError> {
    let src = resolve_source(cfg)?;
    let mut warnings = src.warnings;

    let mut run_cfg_source = cfg.clone();
    if trajectory_out.is_some() && run_cfg_source.trajectory_slots.is_none() {
        run_cfg_source.trajectory_slots = Some(10_000);
    }
    let output = run_sim(&run_cfg_source, src.g, src.p)?;
    let stats = &output.stats;

    let peaks_f64: Vec<f64> = stats.peak_samples.iter().map(|&y| y as f64).collect();
    let mut rows = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        rows.push(RiskRow {
            alpha,
            var: risk::empirical_var(&peaks_f64, alpha)?,
            cvar: risk::empirical_cvar(&peaks_f64, alpha)?,
        });
    }
    if stats.cycles < 10_000 {
        warnings.push(format!(
            "only {} cycles; empirical tail statistics will be noisy",
            stats.cycles
        ));
    }

    let report = SimulateReport {
        schema_version: SCHEMA_VERSION,
        preset: cfg.preset.clone(),
        mode: cfg.mode,
        cycles_per_replication: cfg.cycles,
        replications: cfg.replications,
        total_cycles: stats.cycles,
        seed: cfg.seed,
        block_size: cfg.block_size,
        g: src.g,
        p: src.p,
        success_rate: stats.success_rate,
        mean_aoi: stats.empirical_mean_aoi,
        var_cycle_area: stats.empirical_var_cycle_area,
        var_sawtooth: stats.empirical_var_sawtooth,
        risk_empirical: rows,
        warnings,
    };

    let mut side_files = Vec::new();
    if let Some(path) = trajectory_out {
        let trajectory = output.trajectory.as_deref().unwrap_or(&[]);
        side_files.push((path, report::trajectory_csv(trajectory)));
    }
    if let Some(path) = peaks_out {
        side_files.push((path, report::peaks_csv(&stats.peak_samples)));
    }

    let main = match cfg.format {
        OutputFormat::Json => report::to_json(&report),
        OutputFormat::Csv => report.to_csv(),
    };
    Ok(SimulateOutput { main, side_files })
}

/// Runs the analytic and simulation pipelines and gates their agreement.
///
/// Gated metrics: mean age and cycle-area variance (simulation vs. closed
/// forms), decode success rate (vs. `1 - p`), and per-alpha order-statistic
/// VaR of samples drawn from the fitted Gumbel law (vs. the quantile
/// closed form) — the latter validates the tail estimator machinery
/// against the law it targets. When `p = 0`, the variance is additionally
/// compared against its massive-antenna limit form. The peak-sample tail
/// approximation itself is inspected with `tail`, not gated here.
pub fn validate(cfg: &ExperimentConfig) -> Result<(String, bool), CommandError> {
    let src = resolve_source(cfg)?;
    let mut warnings = src.warnings;
    let (moments, fit) = fit_with_warnings(src.g, src.p, &mut warnings)?;
    let output = run_sim(cfg, src.g, src.p)?;
    let stats = &output.stats;

    let rel = |emp: f64, ana: f64| (emp - ana).abs() / ana.abs().max(f64::MIN_POSITIVE);
    let mut metrics = Vec::new();
    let mut push = |metric: String, analytic: f64, empirical: f64, tolerance: f64| {
        let rel_err = rel(empirical, analytic);
        metrics.push(MetricRow {
            metric,
            analytic,
            empirical,
            rel_err,
            tolerance,
            pass: rel_err <= tolerance,
        });
    };

    push(
        "mean".into(),
        moments.mean_aoi,
        stats.empirical_mean_aoi,
        cfg.tolerances.mean,
    );
    push(
        "variance".into(),
        moments.var_aoi,
        stats.empirical_var_cycle_area,
        cfg.tolerances.variance,
    );
    if src.p == 0.0 {
        push(
            "variance_massive_n".into(),
            aoi_variance_massive_n(src.g),
            stats.empirical_var_cycle_area,
            cfg.tolerances.variance,
        );
    }
    push(
        "success_rate".into(),
        1.0 - src.p,
        stats.success_rate,
        cfg.tolerances.success_rate,
    );

    let draws = gumbel_draws(&fit, stats.cycles, cfg.seed);
    for &alpha in &cfg.alphas {
        push(
            format!("var_{alpha}"),
            risk::var_at(&fit, alpha)?,
            risk::empirical_var(&draws, alpha)?,
            cfg.tolerances.var,
        );
    }

    let pass = metrics.iter().all(|m| m.pass);
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        preset: cfg.preset.clone(),
        mode: cfg.mode,
        total_cycles: stats.cycles,
        seed: cfg.seed,
        g: src.g,
        p: src.p,
        metrics,
        pass,
    };
    let rendered = match cfg.format {
        OutputFormat::Json => report::to_json(&report),
        OutputFormat::Csv => report.to_csv(),
    };
    Ok((rendered, pass))
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Confidence level of the risk metrics.
    Alpha,
    /// Energy-transmitter power (watts, or dBm with `--scale dbm`).
    TxPowerPt,
    /// Receive antenna count.
    AntennasN,
    /// Capacitor size in joules.
    CapacitorSizeS,
    /// Communication-link distance in meters.
    DistCommDc,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::TxPowerPt => "tx_power_pt",
            SweepParam::AntennasN => "antennas_n",
            SweepParam::CapacitorSizeS => "capacitor_size_s",
            SweepParam::DistCommDc => "dist_comm_dc",
        }
    }
}

/// Grid spacing of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepScale {
    /// Equally spaced values.
    Linear,
    /// Geometrically spaced values (positive endpoints).
    Log,
    /// Equally spaced in dBm, converted to watts; `tx-power-pt` only.
    Dbm,
}

/// Sweep request.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub scale: SweepScale,
}

fn sweep_grid(spec: &SweepSpec) -> Result<Vec<f64>, CommandError> {
    let err = |reason: String| CommandError::Sweep(reason);
    if spec.steps == 0 {
        return Err(err("steps must be >= 1".into()));
    }
    if spec.steps == 1 {
        return Ok(vec![spec.from]);
    }
    if spec.from >= spec.to || spec.from.is_nan() || spec.to.is_nan() {
        return Err(err(format!(
            "grid must be strictly increasing: from = {} is not below to = {}",
            spec.from, spec.to
        )));
    }
    if spec.scale == SweepScale::Log && spec.from <= 0.0 {
        return Err(err("log scale needs positive endpoints".into()));
    }
    let n = spec.steps;
    let grid = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            match spec.scale {
                SweepScale::Linear | SweepScale::Dbm => spec.from + t * (spec.to - spec.from),
                SweepScale::Log => (spec.from.ln() + t * (spec.to.ln() - spec.from.ln())).exp(),
            }
        })
        .collect();
    Ok(grid)
}

fn apply_sweep_point(
    base: &SystemParams,
    param: SweepParam,
    value: f64,
    scale: SweepScale,
) -> Result<SystemParams, CommandError> {
    let mut params = base.clone();
    match param {
        SweepParam::TxPowerPt => {
            params.tx_power_pt = if scale == SweepScale::Dbm {
                dbm_to_watts(value)
            } else {
                value
            };
        }
        SweepParam::AntennasN => {
            let n = value.round();
            if n < 1.0 || n > u32::MAX as f64 {
                return Err(CommandError::Sweep(format!(
                    "antennas_n grid point {value} does not round to a positive antenna count"
                )));
            }
            params.antennas_n = n as u32;
        }
        SweepParam::CapacitorSizeS => params.capacitor_size_s = value,
        SweepParam::DistCommDc => params.dist_comm_dc = value,
        SweepParam::Alpha => unreachable!("alpha sweeps do not touch system parameters"),
    }
    Ok(params)
}

/// Closed-form sweep over one parameter; always CSV.
///
/// An `alpha` sweep emits `param,value,g,p,mean_aoi,var_aoi,var,cvar` with
/// the risk columns evaluated at the swept level; any other sweep emits
/// `var_<a>`/`cvar_<a>` pairs for every configured confidence level.
pub fn sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<String, CommandError> {
    if spec.scale == SweepScale::Dbm && spec.param != SweepParam::TxPowerPt {
        return Err(CommandError::Sweep(
            "dbm scale only applies to the tx-power-pt parameter".into(),
        ));
    }
    let grid = sweep_grid(spec)?;
    let cache = CvarBracketCache::new();

    let mut out = String::new();
    match spec.param {
        SweepParam::Alpha => {
            let src = resolve_source(cfg)?;
            let (moments, fit) = fit_with_warnings(src.g, src.p, &mut Vec::new())?;
            cache.precompute(&grid).map_err(CommandError::Risk)?;
            out.push_str("param,value,g,p,mean_aoi,var_aoi,var,cvar\n");
            for &alpha in &grid {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(CommandError::Sweep(format!(
                        "alpha grid point {alpha} lies outside (0, 1)"
                    )));
                }
                out.push_str(&format!(
                    "alpha,{alpha},{},{},{},{},{},{}\n",
                    src.g,
                    src.p,
                    moments.mean_aoi,
                    moments.var_aoi,
                    risk::var_at(&fit, alpha)?,
                    cache.cvar_at(&fit, alpha)?,
                ));
            }
        }
        param => {
            let base = match &cfg.source {
                SourceSpec::System(params) => params.clone(),
                SourceSpec::Derived { .. } => {
                    return Err(CommandError::Sweep(format!(
                        "sweeping {} needs full [system] parameters, not a (g, p) override",
                        param.name()
                    )))
                }
            };
            cache.precompute(&cfg.alphas).map_err(CommandError::Risk)?;
            out.push_str("param,value,g,p,mean_aoi,var_aoi");
            for &alpha in &cfg.alphas {
                out.push_str(&format!(",var_{alpha},cvar_{alpha}"));
            }
            out.push('\n');

            let mut last_antennas: Option<u32> = None;
            for &value in &grid {
                let params = apply_sweep_point(&base, param, value, spec.scale)?;
                if param == SweepParam::AntennasN {
                    if last_antennas == Some(params.antennas_n) {
                        return Err(CommandError::Sweep(format!(
                            "antennas_n grid collapses: two points round to N = {}",
                            params.antennas_n
                        )));
                    }
                    last_antennas = Some(params.antennas_n);
                }
                let derived = model::derive(&params)?;
                let moments = aoi_moments(derived.g, derived.p)?;
                let fit = gumbel_fit(&moments, derived.g / (1.0 - derived.p))?;
                out.push_str(&format!(
                    "{},{value},{},{},{},{}",
                    param.name(),
                    derived.g,
                    derived.p,
                    moments.mean_aoi,
                    moments.var_aoi
                ));
                for &alpha in &cfg.alphas {
                    out.push_str(&format!(
                        ",{},{}",
                        risk::var_at(&fit, alpha)?,
                        cache.cvar_at(&fit, alpha)?
                    ));
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Options for the `tail` command.
#[derive(Debug, Clone, PartialEq)]
pub struct TailOptions {
    /// Histogram bin count.
    pub bins: usize,
    /// Draw the samples from the fitted Gumbel law itself instead of the
    /// age process (machinery self-check).
    pub self_test: bool,
}

/// Tail comparison: empirical CDF/PDF of the peak-age samples against the
/// fitted Gumbel law on a shared grid. CSV with a leading comment row
/// documenting the histogram bin width.
///
/// With `--block-size B > 1` the samples are per-block maxima of the peak
/// ages instead of the raw per-cycle peaks.
pub fn tail(cfg: &ExperimentConfig, opts: &TailOptions) -> Result<String, CommandError> {
    if opts.bins < 2 {
        return Err(CommandError::Tail("need at least 2 bins".into()));
    }
    let src = resolve_source(cfg)?;
    let (_, fit) = fit_with_warnings(src.g, src.p, &mut Vec::new())?;

    let mut samples: Vec<f64> = if opts.self_test {
        gumbel_draws(&fit, cfg.cycles * cfg.replications as u64, cfg.seed)
    } else {
        // block_maxima equals the raw peaks at the default block size 1
        run_sim(cfg, src.g, src.p)?
            .stats
            .block_maxima
            .iter()
            .map(|&y| y as f64)
            .collect()
    };

    let max_alpha = cfg.alphas.last().copied().unwrap_or(0.99);
    let needed = (1.0 / (1.0 - max_alpha)).ceil() as usize;
    let needed = needed.max(opts.bins);
    if samples.len() < needed {
        return Err(CommandError::Tail(format!(
            "need at least {needed} samples for {} bins and quantile depth alpha = {max_alpha}, \
             have {}",
            opts.bins,
            samples.len()
        )));
    }
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));

    let lo = samples[0];
    let hi = samples[samples.len() - 1];
    if hi <= lo {
        return Err(CommandError::Tail(
            "all samples identical; nothing to bin".into(),
        ));
    }
    let width = (hi - lo) / opts.bins as f64;
    let n = samples.len() as f64;

    let mut counts = vec![0u64; opts.bins];
    for &s in &samples {
        let idx = (((s - lo) / width) as usize).min(opts.bins - 1);
        counts[idx] += 1;
    }

    let mut out = format!("# bin_width={width}\n");
    out.push_str("x,empirical_cdf,gumbel_cdf,empirical_pdf,gumbel_pdf\n");
    for (i, &count) in counts.iter().enumerate() {
        let x = lo + (i as f64 + 0.5) * width;
        let emp_cdf = samples.partition_point(|&s| s <= x) as f64 / n;
        let emp_pdf = count as f64 / (n * width);
        out.push_str(&format!(
            "{x},{emp_cdf},{},{emp_pdf},{}\n",
            gumbel_cdf(x, &fit),
            gumbel_pdf(x, &fit)
        ));
    }
    Ok(out)
}

//! Report structures and their JSON / CSV renderings.
//!
//! JSON reports carry a `schema_version` field and keep the struct field
//! order, so a fixed configuration and seed reproduce byte-identical
//! files. CSV output is comma-separated with LF line endings, `.` decimal
//! points (no locale dependence) and no trailing separators; floats print
//! in Rust's shortest round-trip form.

use serde::Serialize;

use crate::config::RunMode;

/// Gumbel fit section of a report.
#[derive(Debug, Clone, Serialize)]
pub struct GumbelSection {
    pub mu: f64,
    pub sigma: f64,
    pub validity_lg: f64,
    pub low_validity: bool,
}

/// Per-confidence-level risk row.
#[derive(Debug, Clone, Serialize)]
pub struct RiskRow {
    pub alpha: f64,
    pub var: f64,
    pub cvar: f64,
}

/// `analyze` output.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub preset: Option<String>,
    pub preset_note: Option<String>,
    pub g: f64,
    pub p: f64,
    /// SNR threshold; absent for a direct `(g, p)` override.
    pub theta: Option<f64>,
    pub mean_aoi: f64,
    pub var_aoi: f64,
    pub gumbel: GumbelSection,
    pub risk: Vec<RiskRow>,
    pub warnings: Vec<String>,
}

/// `simulate` output.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub preset: Option<String>,
    pub mode: RunMode,
    pub cycles_per_replication: u64,
    pub replications: u32,
    pub total_cycles: u64,
    pub seed: u64,
    pub block_size: usize,
    pub g: f64,
    pub p: f64,
    pub success_rate: f64,
    pub mean_aoi: f64,
    /// Cycle-area variance estimator (the closed form's target).
    pub var_cycle_area: f64,
    /// Per-slot sawtooth variance (diagnostic only).
    pub var_sawtooth: f64,
    /// Order-statistic VaR/CVaR of the peak-age samples.
    pub risk_empirical: Vec<RiskRow>,
    pub warnings: Vec<String>,
}

/// One `validate` gate.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub analytic: f64,
    pub empirical: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `validate` output.
#[derive(Debug, Clone, Serialize)]
pub struct ValidateReport {
    pub schema_version: u32,
    pub preset: Option<String>,
    pub mode: RunMode,
    pub total_cycles: u64,
    pub seed: u64,
    pub g: f64,
    pub p: f64,
    pub metrics: Vec<MetricRow>,
    pub pass: bool,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Serializes any report struct as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report types serialize");
    s.push('\n');
    s
}

impl AnalyzeReport {
    /// Single-row CSV with per-alpha `var_*`/`cvar_*` columns.
    pub fn to_csv(&self) -> String {
        let mut header = String::from(
            "g,p,theta,mean_aoi,var_aoi,gumbel_mu,gumbel_sigma,validity_lg,low_validity",
        );
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{}",
            fmt(self.g),
            fmt(self.p),
            fmt_opt(self.theta),
            fmt(self.mean_aoi),
            fmt(self.var_aoi),
            fmt(self.gumbel.mu),
            fmt(self.gumbel.sigma),
            fmt(self.gumbel.validity_lg),
            self.gumbel.low_validity,
        );
        for r in &self.risk {
            header.push_str(&format!(",var_{},cvar_{}", r.alpha, r.alpha));
            row.push_str(&format!(",{},{}", fmt(r.var), fmt(r.cvar)));
        }
        format!("{header}\n{row}\n")
    }
}

impl SimulateReport {
    /// Single-row CSV with per-alpha empirical risk columns.
    pub fn to_csv(&self) -> String {
        let mut header = String::from(
            "mode,cycles_per_replication,replications,total_cycles,seed,block_size,g,p,\
             success_rate,mean_aoi,var_cycle_area,var_sawtooth",
        );
        let mode = match self.mode {
            RunMode::Physical => "physical",
            RunMode::Analytic => "analytic",
        };
        let mut row = format!(
            "{mode},{},{},{},{},{},{},{},{},{},{},{}",
            self.cycles_per_replication,
            self.replications,
            self.total_cycles,
            self.seed,
            self.block_size,
            fmt(self.g),
            fmt(self.p),
            fmt(self.success_rate),
            fmt(self.mean_aoi),
            fmt(self.var_cycle_area),
            fmt(self.var_sawtooth),
        );
        for r in &self.risk_empirical {
            header.push_str(&format!(",var_{},cvar_{}", r.alpha, r.alpha));
            row.push_str(&format!(",{},{}", fmt(r.var), fmt(r.cvar)));
        }
        format!("{header}\n{row}\n")
    }
}

impl ValidateReport {
    /// One CSV row per gated metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,analytic,empirical,rel_err,tolerance,pass\n");
        for m in &self.metrics {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.metric,
                fmt(m.analytic),
                fmt(m.empirical),
                fmt(m.rel_err),
                fmt(m.tolerance),
                m.pass
            ));
        }
        out
    }
}

/// Renders a `(slot, age)` trajectory as the documented CSV: header
/// `slot,aoi`, LF endings, no trailing separator.
pub fn trajectory_csv(trajectory: &[(u64, u64)]) -> String {
    let mut out = String::from("slot,aoi\n");
    for &(slot, age) in trajectory {
        out.push_str(&format!("{slot},{age}\n"));
    }
    out
}

/// Renders peak-age samples as the documented CSV: header `cycle,Y`,
/// 1-based cycle index.
pub fn peaks_csv(peaks: &[u64]) -> String {
    let mut out = String::from("cycle,Y\n");
    for (i, &y) in peaks.iter().enumerate() {
        out.push_str(&format!("{},{y}\n", i + 1));
    }
    out
}

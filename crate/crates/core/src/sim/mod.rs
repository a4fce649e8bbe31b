//! Deterministic Monte Carlo simulator of the wireless-powered
//! status-update renewal process.
//!
//! Two modes produce statistically identical cycle streams:
//!
//! - **physical** — slot-by-slot energy accumulation with exponential
//!   per-slot harvest, capacitor clamp at `S`, and an MRC decode threshold
//!   test on every transmission attempt;
//! - **analytic sampling** — charge times drawn directly from the
//!   `1 + Poisson(g)` law with Bernoulli(1-p) decode successes.
//!
//! Every run is reproducible from `(configuration, seed)` on a given
//! build; replications use independent, deterministically derived streams
//! and merge through exact integer accumulators, so merged sums do not
//! depend on merge order.

pub mod rng;

use serde::Serialize;
use thiserror::Error;

use crate::model::{self, ModelError, SystemParams};
use rng::SimRng;

/// Hard per-cycle bound on the interarrival time. A cycle longer than this
/// means the outage probability is effectively 1 and every statistic of
/// interest diverges.
pub const MAX_CYCLE_SLOTS: u64 = 1 << 31;

/// Simulator errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// At least one cycle must be simulated.
    #[error("cycles must be >= 1")]
    NoCycles,
    /// Charging load out of domain.
    #[error("charging load g must be >= 0 and finite, got {0}")]
    InvalidG(f64),
    /// Outage probability out of domain.
    #[error("outage probability p must lie in [0, 1), got {0}")]
    InvalidP(f64),
    /// A single cycle exceeded [`MAX_CYCLE_SLOTS`].
    #[error(
        "a renewal cycle exceeded {MAX_CYCLE_SLOTS} slots; the configuration \
         is effectively in certain outage and its age statistics diverge"
    )]
    CycleOverflow,
    /// The exact integer statistics accumulators overflowed.
    #[error("statistics accumulators overflowed; reduce the cycle count")]
    AccumulatorOverflow,
    /// Block size must be positive.
    #[error("block size must be >= 1")]
    ZeroBlock,
    /// Not enough cycles to fill one block.
    #[error("need at least {needed} cycles for one block, have {have}")]
    InsufficientCycles {
        /// Cycles required for a full block.
        needed: usize,
        /// Cycles available.
        have: usize,
    },
    /// Replication count must be positive.
    #[error("replications must be >= 1")]
    NoReplications,
    /// Merging requires both sides to use the same block size.
    #[error("cannot merge statistics with different block sizes ({0} vs {1})")]
    BlockSizeMismatch(usize, usize),
    /// Invalid physical parameters.
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One slot's channel realization: the energy-link gain and the `N`
/// communication-link gains, all unit-mean exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    /// Energy-harvesting channel power gain `|u|²`.
    pub energy_gain_u2: f64,
    /// Per-antenna communication gains `|h_v|²`.
    pub comm_gains_h2: Vec<f64>,
}

impl ChannelDraw {
    /// Draws a full slot realization. The energy gain is drawn first, then
    /// the antenna gains in index order.
    pub fn sample(rng: &mut SimRng, antennas: u32) -> Self {
        let energy_gain_u2 = rng.unit_exponential();
        let comm_gains_h2 = (0..antennas).map(|_| rng.unit_exponential()).collect();
        Self {
            energy_gain_u2,
            comm_gains_h2,
        }
    }
}

/// Capacitor charge state, clamped to `[0, capacity]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyState {
    /// Stored energy in joules.
    pub stored: f64,
}

impl EnergyState {
    /// Empty capacitor.
    pub fn empty() -> Self {
        Self { stored: 0.0 }
    }

    /// Adds one slot's harvest, clamping at the capacitor size.
    #[inline]
    pub fn charge(&mut self, harvest: f64, capacity: f64) {
        self.stored = (self.stored + harvest).min(capacity);
    }

    /// Whether the capacitor is full.
    #[inline]
    pub fn is_full(&self, capacity: f64) -> bool {
        self.stored >= capacity
    }
}

/// One renewal cycle: the charge time of each attempt, the attempt count,
/// the interarrival time and the sawtooth area.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    /// Slots each of the `L` attempts took to recharge the capacitor.
    pub charge_slots: Vec<u64>,
    /// Attempt count `L` (one success preceded by failures).
    pub attempts: u64,
    /// Interarrival time `Y = Σ X_i` in slots.
    pub interarrival: u64,
    /// Sawtooth area `Q = Y(Y+1)/2`, exact integer arithmetic.
    pub area_q: u64,
}

/// Aggregated run statistics.
///
/// The integer accumulators behind the derived fields are kept private and
/// exact (128-bit), which makes [`SimStats::merged`] associative and
/// commutative for sums; sample vectors concatenate in replication order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimStats {
    /// Total slots across complete cycles, `M = Σ Y_j`.
    pub total_slots: u64,
    /// Complete cycles `K`.
    pub cycles: u64,
    /// Transmission attempts (`Σ L_j`).
    pub attempts: u64,
    /// Fraction of attempts that decoded, `K / Σ L_j`.
    pub success_rate: f64,
    /// Time-average age `Σ Q_j / Σ Y_j`.
    pub empirical_mean_aoi: f64,
    /// Cycle-area variance estimator `Σ Q_j² / Σ Y_j - mean²` (the form the
    /// closed-form variance targets).
    pub empirical_var_cycle_area: f64,
    /// Per-slot variance of the age sawtooth,
    /// `Σ Y(Y+1)(2Y+1)/6 / Σ Y - mean²` (diagnostic).
    pub empirical_var_sawtooth: f64,
    /// Peak-age samples: each cycle's `Y_j`, in simulation order.
    pub peak_samples: Vec<u64>,
    /// Per-block maxima of `Y` over consecutive blocks of `block_size`
    /// cycles (trailing partial block dropped, per replication).
    pub block_maxima: Vec<u64>,
    /// Block length used for `block_maxima`.
    pub block_size: usize,
    sum_q: u128,
    sum_q2: u128,
    sum_sawtooth_sq: u128,
}

impl SimStats {
    /// Merges two replications' statistics exactly.
    ///
    /// Integer sums are associative and commutative, so every scalar field
    /// of the result is independent of merge order; the sample vectors
    /// concatenate left-to-right (canonically, replication index order).
    pub fn merged(mut self, other: SimStats) -> Result<SimStats, SimError> {
        if self.block_size != other.block_size {
            return Err(SimError::BlockSizeMismatch(
                self.block_size,
                other.block_size,
            ));
        }
        let add_u64 = |a: u64, b: u64| a.checked_add(b).ok_or(SimError::AccumulatorOverflow);
        let add_u128 = |a: u128, b: u128| a.checked_add(b).ok_or(SimError::AccumulatorOverflow);
        self.total_slots = add_u64(self.total_slots, other.total_slots)?;
        self.cycles = add_u64(self.cycles, other.cycles)?;
        self.attempts = add_u64(self.attempts, other.attempts)?;
        self.sum_q = add_u128(self.sum_q, other.sum_q)?;
        self.sum_q2 = add_u128(self.sum_q2, other.sum_q2)?;
        self.sum_sawtooth_sq = add_u128(self.sum_sawtooth_sq, other.sum_sawtooth_sq)?;
        self.peak_samples.extend_from_slice(&other.peak_samples);
        self.block_maxima.extend_from_slice(&other.block_maxima);
        self.refresh_derived();
        Ok(self)
    }

    fn refresh_derived(&mut self) {
        let sum_y = self.total_slots as f64;
        let mean = self.sum_q as f64 / sum_y;
        self.empirical_mean_aoi = mean;
        self.empirical_var_cycle_area = self.sum_q2 as f64 / sum_y - mean * mean;
        self.empirical_var_sawtooth = self.sum_sawtooth_sq as f64 / sum_y - mean * mean;
        self.success_rate = self.cycles as f64 / self.attempts as f64;
    }
}

/// Run configuration shared by both simulation modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Complete renewal cycles to simulate.
    pub cycles: u64,
    /// Stream seed (master seed for replicated runs).
    pub seed: u64,
    /// Block length for the block-maxima output; 1 keeps the raw peaks.
    pub block_size: usize,
    /// Keep per-cycle records in the output.
    pub keep_records: bool,
    /// Record the age sawtooth for the first N slots.
    pub trajectory_limit: Option<u64>,
}

impl RunConfig {
    /// Configuration with the given cycle count and seed; block size 1, no
    /// records, no trajectory.
    pub fn new(cycles: u64, seed: u64) -> Self {
        Self {
            cycles,
            seed,
            block_size: 1,
            keep_records: false,
            trajectory_limit: None,
        }
    }
}

/// What to simulate: the full physical layer, or the derived `(g, p)` law.
#[derive(Debug, Clone, PartialEq)]
pub enum SimJob {
    /// Slot-by-slot physical simulation of the given link.
    Physical(SystemParams<f64>),
    /// Analytic-sampling mode at the given charging load and outage
    /// probability.
    Analytic {
        /// Normalized charging load.
        g: f64,
        /// Per-attempt outage probability.
        p: f64,
    },
}

/// A finished run: statistics plus optional per-cycle records and sawtooth.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Aggregate statistics.
    pub stats: SimStats,
    /// Per-cycle records when requested in the [`RunConfig`].
    pub records: Option<Vec<CycleRecord>>,
    /// `(slot, age)` pairs for the first `trajectory_limit` slots.
    pub trajectory: Option<Vec<(u64, u64)>>,
}

struct Accum {
    cfg: RunConfig,
    cycles: u64,
    attempts: u64,
    sum_y: u128,
    sum_q: u128,
    sum_q2: u128,
    sum_sawtooth_sq: u128,
    peaks: Vec<u64>,
    records: Option<Vec<CycleRecord>>,
    trajectory: Option<Vec<(u64, u64)>>,
    slot_cursor: u64,
}

impl Accum {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            cfg: cfg.clone(),
            cycles: 0,
            attempts: 0,
            sum_y: 0,
            sum_q: 0,
            sum_q2: 0,
            sum_sawtooth_sq: 0,
            peaks: Vec::with_capacity(cfg.cycles.min(1 << 24) as usize),
            records: cfg.keep_records.then(Vec::new),
            trajectory: cfg.trajectory_limit.map(|_| Vec::new()),
            slot_cursor: 0,
        }
    }

    fn push_cycle(&mut self, y: u64, charge_slots: Vec<u64>) -> Result<(), SimError> {
        let attempts = charge_slots.len() as u64;
        let yw = y as u128;
        let q = yw * (yw + 1) / 2;
        // Y(Y+1)(2Y+1) is divisible by 6 for every integer Y.
        let sawtooth_sq = yw * (yw + 1) * (2 * yw + 1) / 6;

        let add = |a: u128, b: u128| a.checked_add(b).ok_or(SimError::AccumulatorOverflow);
        self.sum_y = add(self.sum_y, yw)?;
        self.sum_q = add(self.sum_q, q)?;
        self.sum_q2 = add(
            self.sum_q2,
            q.checked_mul(q).ok_or(SimError::AccumulatorOverflow)?,
        )?;
        self.sum_sawtooth_sq = add(self.sum_sawtooth_sq, sawtooth_sq)?;
        self.cycles += 1;
        self.attempts += attempts;
        self.peaks.push(y);

        if let (Some(traj), Some(limit)) = (self.trajectory.as_mut(), self.cfg.trajectory_limit) {
            let mut age = 0;
            while age < y && self.slot_cursor < limit {
                age += 1;
                self.slot_cursor += 1;
                traj.push((self.slot_cursor, age));
            }
        }
        if let Some(records) = self.records.as_mut() {
            records.push(CycleRecord {
                attempts,
                interarrival: y,
                area_q: (q as u64),
                charge_slots,
            });
        }
        Ok(())
    }

    fn finish(self) -> Result<SimOutput, SimError> {
        let block_maxima = block_maxima(&self.peaks, self.cfg.block_size)?;
        let mut stats = SimStats {
            total_slots: self.sum_y as u64,
            cycles: self.cycles,
            attempts: self.attempts,
            success_rate: 0.0,
            empirical_mean_aoi: 0.0,
            empirical_var_cycle_area: 0.0,
            empirical_var_sawtooth: 0.0,
            peak_samples: self.peaks,
            block_maxima,
            block_size: self.cfg.block_size,
            sum_q: self.sum_q,
            sum_q2: self.sum_q2,
            sum_sawtooth_sq: self.sum_sawtooth_sq,
        };
        stats.refresh_derived();
        Ok(SimOutput {
            stats,
            records: self.records,
            trajectory: self.trajectory,
        })
    }
}

fn check_run_config(cfg: &RunConfig) -> Result<(), SimError> {
    if cfg.cycles == 0 {
        return Err(SimError::NoCycles);
    }
    if cfg.block_size == 0 {
        return Err(SimError::ZeroBlock);
    }
    if (cfg.cycles as usize) < cfg.block_size {
        return Err(SimError::InsufficientCycles {
            needed: cfg.block_size,
            have: cfg.cycles as usize,
        });
    }
    Ok(())
}

/// Simulates the derived renewal law directly: charge times
/// `X = 1 + Poisson(g)` per attempt, Bernoulli(1-p) decode successes.
///
/// Per attempt the stream is consumed as: one Poisson draw, then one
/// uniform for the decode.
pub fn run_analytic_sampling(g: f64, p: f64, cfg: &RunConfig) -> Result<SimOutput, SimError> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(SimError::InvalidG(g));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(SimError::InvalidP(p));
    }
    check_run_config(cfg)?;

    let mut rng = SimRng::from_seed(cfg.seed);
    let mut accum = Accum::new(cfg);
    let success_prob = 1.0 - p;
    for _ in 0..cfg.cycles {
        let mut y = 0u64;
        let mut xs = Vec::new();
        loop {
            let x = 1 + rng.poisson(g);
            y += x;
            if y > MAX_CYCLE_SLOTS {
                return Err(SimError::CycleOverflow);
            }
            xs.push(x);
            if rng.bernoulli(success_prob) {
                break;
            }
        }
        accum.push_cycle(y, xs)?;
    }
    accum.finish()
}

/// Simulates the physical layer slot by slot.
///
/// Each slot first draws the energy-link gain and accumulates
/// `η P_t |u|² / (w d_e^α)` joules with a clamp at `S`. The slot that fills
/// the capacitor carries the transmission attempt: the `N` antenna gains
/// are drawn and the attempt succeeds iff their sum reaches the SNR
/// threshold `θ` (equivalent to `log2(1+γ) >= R`). Energy is discarded
/// after every attempt, so each recharge starts from an empty capacitor.
pub fn run_physical(params: &SystemParams<f64>, cfg: &RunConfig) -> Result<SimOutput, SimError> {
    let derived = model::derive(params)?;
    check_run_config(cfg)?;

    let harvest_scale = params.conversion_eta * params.tx_power_pt
        / (params.atten_w * params.dist_energy_de.powf(params.pathloss_alpha));
    let capacity = params.capacitor_size_s;
    let theta = derived.snr_threshold_theta;

    let mut rng = SimRng::from_seed(cfg.seed);
    let mut accum = Accum::new(cfg);
    for _ in 0..cfg.cycles {
        let mut y = 0u64;
        let mut xs = Vec::new();
        loop {
            // Recharge from empty; the filling slot is the attempt slot.
            let mut slots = 0u64;
            let mut energy = EnergyState::empty();
            while !energy.is_full(capacity) {
                slots += 1;
                if y + slots > MAX_CYCLE_SLOTS {
                    return Err(SimError::CycleOverflow);
                }
                energy.charge(harvest_scale * rng.unit_exponential(), capacity);
            }
            y += slots;
            xs.push(slots);

            let mut gain_sum = 0.0;
            for _ in 0..params.antennas_n {
                gain_sum += rng.unit_exponential();
            }
            if gain_sum >= theta {
                break;
            }
        }
        accum.push_cycle(y, xs)?;
    }
    accum.finish()
}

/// Runs a job in either mode.
pub fn run(job: &SimJob, cfg: &RunConfig) -> Result<SimOutput, SimError> {
    match job {
        SimJob::Physical(params) => run_physical(params, cfg),
        SimJob::Analytic { g, p } => run_analytic_sampling(*g, *p, cfg),
    }
}

/// Runs `replications` independent streams of the same job and merges them.
///
/// Replication `r` uses seed `seed + r·GOLDEN_GAMMA` (see [`rng`]), so one
/// replication is bit-identical to a direct run. Statistics merge exactly;
/// sample vectors concatenate in replication order; the sawtooth trajectory
/// is taken from replication 0 only.
pub fn replicate_and_merge(
    job: &SimJob,
    cfg: &RunConfig,
    replications: u32,
) -> Result<SimOutput, SimError> {
    if replications == 0 {
        return Err(SimError::NoReplications);
    }
    let mut merged: Option<SimOutput> = None;
    for r in 0..replications {
        let mut rep_cfg = cfg.clone();
        rep_cfg.seed = SimRng::replica_seed(cfg.seed, r as u64);
        if r > 0 {
            rep_cfg.trajectory_limit = None;
        }
        let out = run(job, &rep_cfg)?;
        merged = Some(match merged {
            None => out,
            Some(mut acc) => {
                acc.stats = acc.stats.merged(out.stats)?;
                if let (Some(records), Some(more)) = (acc.records.as_mut(), out.records) {
                    records.extend(more);
                }
                acc
            }
        });
    }
    Ok(merged.expect("replications >= 1"))
}

/// Maxima of `Y` over consecutive blocks of `block` cycles; a trailing
/// partial block is dropped. `block = 1` returns the peaks unchanged.
pub fn block_maxima(peaks: &[u64], block: usize) -> Result<Vec<u64>, SimError> {
    if block == 0 {
        return Err(SimError::ZeroBlock);
    }
    if peaks.len() < block {
        return Err(SimError::InsufficientCycles {
            needed: block,
            have: peaks.len(),
        });
    }
    Ok(peaks
        .chunks_exact(block)
        .map(|chunk| *chunk.iter().max().expect("chunk is non-empty"))
        .collect())
}

/// Expands cycle records into the age sawtooth `(slot, Δ(slot))`,
/// truncated to `limit_slots`. Within a cycle of length `Y` the age climbs
/// `1, 2, .., Y` and the next cycle restarts at 1.
pub fn sawtooth_trajectory(records: &[CycleRecord], limit_slots: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut slot = 0u64;
    'outer: for rec in records {
        for age in 1..=rec.interarrival {
            if slot >= limit_slots {
                break 'outer;
            }
            slot += 1;
            out.push((slot, age));
        }
    }
    out
}

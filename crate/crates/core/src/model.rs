//! Physical link parameters and the two derived quantities that drive every
//! closed form: the normalized charging load `g` and the per-attempt outage
//! probability `p`.
//!
//! Conventions:
//!
//! - the received SNR of an attempt is `γ = S Σ_v |h_v|² / (w d_c^α N0)`,
//!   so an attempt fails iff the MRC gain sum falls below
//!   `θ = w d_c^α (2^R - 1) N0 / S`, giving `p = 1 - Q(N, θ)`;
//! - the per-slot harvested energy is `η P_t |u|² / (w d_e^α)`, giving a
//!   mean of `g = w d_e^α S / (η P_t)` extra slots per full charge.
//!
//! Path loss divides both links; this is the only reading under which the
//! outage expression, the charging load, and the shifted-Poisson charge
//! law are mutually consistent.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::FloatScalar;
use crate::specfun::{self, SpecFunError};

/// Everything the physical layer needs to know about the link.
///
/// Units are SI: joules, watts, meters. Rates are in bits/s/Hz and one
/// timeslot is one time unit, so energy and power coincide numerically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams<T: FloatScalar = f64> {
    /// Capacitor size `S` in joules; also the per-attempt transmit energy.
    pub capacitor_size_s: T,
    /// Noise power `N0` in watts.
    pub noise_power_n0: T,
    /// Receive antenna count `N`.
    pub antennas_n: u32,
    /// RF-to-DC conversion efficiency `η` in (0, 1].
    pub conversion_eta: T,
    /// Energy-transmitter broadcast power `P_t` in watts.
    pub tx_power_pt: T,
    /// Propagation attenuation `w` at the 1 m reference distance.
    pub atten_w: T,
    /// Communication-link distance `d_c` in meters.
    pub dist_comm_dc: T,
    /// Energy-link distance `d_e` in meters.
    pub dist_energy_de: T,
    /// Path-loss exponent `α`.
    pub pathloss_alpha: T,
    /// Target rate `R` in bits/s/Hz.
    pub rate_r: T,
}

/// The two sufficient statistics of the link plus the SNR threshold behind
/// the outage probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams<T: FloatScalar = f64> {
    /// Normalized charging load: mean number of extra slots per full charge.
    pub g: T,
    /// Outage probability of one transmission attempt, in [0, 1).
    pub p: T,
    /// Gamma-sum threshold `θ = w d_c^α (2^R - 1) N0 / S`.
    pub snr_threshold_theta: T,
}

/// Validation and derivation errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// A field failed validation.
    #[error("invalid parameter `{field}`: {reason}")]
    Invalid {
        /// Offending field name.
        field: &'static str,
        /// What was wrong with it.
        reason: String,
    },
    /// The outage probability is 1 to machine precision: no transmission
    /// can ever succeed and every AoI statistic diverges.
    #[error(
        "certain outage: snr_threshold_theta = {theta:.6e} overwhelms the \
         {antennas}-antenna link (p = 1 to machine precision); increase \
         capacitor_size_s or antennas_n, or reduce rate_r, dist_comm_dc or \
         noise_power_n0"
    )]
    CertainOutage {
        /// The threshold that could not be met.
        theta: f64,
        /// Antenna count of the rejected configuration.
        antennas: u32,
    },
    /// Propagated special-function domain error.
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

impl<T: FloatScalar> SystemParams<T> {
    /// Checks hard invariants: all magnitudes strictly positive and finite,
    /// `antennas_n >= 1`, `conversion_eta` in (0, 1].
    pub fn validate(&self) -> Result<(), ModelError> {
        fn pos<T: FloatScalar>(field: &'static str, v: T) -> Result<(), ModelError> {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(ModelError::Invalid {
                    field,
                    reason: format!("must be strictly positive and finite, got {v}"),
                })
            }
        }
        pos("capacitor_size_s", self.capacitor_size_s)?;
        pos("noise_power_n0", self.noise_power_n0)?;
        pos("conversion_eta", self.conversion_eta)?;
        pos("tx_power_pt", self.tx_power_pt)?;
        pos("atten_w", self.atten_w)?;
        pos("dist_comm_dc", self.dist_comm_dc)?;
        pos("dist_energy_de", self.dist_energy_de)?;
        pos("pathloss_alpha", self.pathloss_alpha)?;
        pos("rate_r", self.rate_r)?;
        if self.antennas_n == 0 {
            return Err(ModelError::Invalid {
                field: "antennas_n",
                reason: "must be >= 1".into(),
            });
        }
        if self.conversion_eta > T::one() {
            return Err(ModelError::Invalid {
                field: "conversion_eta",
                reason: format!("must lie in (0, 1], got {}", self.conversion_eta),
            });
        }
        Ok(())
    }

    /// Soft diagnostics that do not reject the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.pathloss_alpha < T::from_f64(2.0).unwrap() {
            out.push(format!(
                "pathloss_alpha = {} is below the free-space bound of 2",
                self.pathloss_alpha
            ));
        }
        out
    }
}

/// dBm to watts: `10^((x - 30) / 10)`.
pub fn dbm_to_watts<T: FloatScalar>(dbm: T) -> T {
    let ten = T::from_f64(10.0).unwrap();
    ten.powf((dbm - T::from_f64(30.0).unwrap()) / ten)
}

/// Watts to dBm; inverse of [`dbm_to_watts`].
pub fn watts_to_dbm<T: FloatScalar>(watts: T) -> T {
    let ten = T::from_f64(10.0).unwrap();
    ten * watts.log10() + T::from_f64(30.0).unwrap()
}

/// Computes `(g, p, θ)` from the physical parameters.
///
/// Rejects invalid parameters and configurations whose outage probability
/// is 1 in machine precision.
pub fn derive<T: FloatScalar>(params: &SystemParams<T>) -> Result<DerivedParams<T>, ModelError> {
    params.validate()?;

    let g = params.atten_w
        * params.dist_energy_de.powf(params.pathloss_alpha)
        * params.capacitor_size_s
        / (params.conversion_eta * params.tx_power_pt);

    // 2^R - 1 via expm1 to stay accurate for tiny rates.
    let snr_gap = (params.rate_r * T::LN_2()).exp_m1();
    let theta = params.atten_w
        * params.dist_comm_dc.powf(params.pathloss_alpha)
        * snr_gap
        * params.noise_power_n0
        / params.capacitor_size_s;

    let success = specfun::regularized_upper_gamma(params.antennas_n, theta)?;
    if success == T::zero() {
        return Err(ModelError::CertainOutage {
            theta: theta.as_f64(),
            antennas: params.antennas_n,
        });
    }
    Ok(DerivedParams {
        g,
        p: T::one() - success,
        snr_threshold_theta: theta,
    })
}

/// The `p` component of [`derive()`]: `Pr[log2(1 + γ) < R]`.
pub fn outage_probability<T: FloatScalar>(params: &SystemParams<T>) -> Result<T, ModelError> {
    derive(params).map(|d| d.p)
}

//! Age-of-Information statistics for a wireless-powered status-update link.
//!
//! A single-antenna source harvests RF energy from a dedicated transmitter
//! into a capacitor of size `S` and sends a status update each time the
//! capacitor fills. A multi-antenna receiver decodes with maximum ratio
//! combining; failed decodes force a full recharge and retransmission.
//! Two derived quantities parameterize everything:
//!
//! - `g` — normalized charging load, the mean number of extra slots needed
//!   to fill the capacitor (charge times are distributed `1 + Poisson(g)`),
//! - `p` — outage probability of a single transmission attempt.
//!
//! The crate provides:
//!
//! - [`specfun`] — the special-function kernel (integer-order upper
//!   incomplete gamma, logarithmic integral on (0,1)),
//! - [`model`] — physical system parameters and the derivation of `(g, p)`,
//! - [`analytics`] — closed-form mean/variance of the age process,
//!   interarrival moments, and the moment-matched Gumbel fit,
//! - [`risk`] — VaR / CVaR on the fitted Gumbel law plus empirical
//!   order-statistic counterparts,
//! - [`sim`] — a deterministic, seedable Monte Carlo simulator of the same
//!   renewal process used to validate every closed form.
//!
//! Closed-form layers are generic over the scalar type ([`FloatScalar`]);
//! the simulator and the type aliases at the crate root are `f64`.

pub mod analytics;
pub mod model;
pub mod risk;
pub mod scalar;
pub mod sim;
pub mod specfun;

pub use scalar::FloatScalar;

/// Default scalar for the concrete aliases below.
pub type Real = f64;

/// [`model::SystemParams`] at the default scalar.
pub type SystemParams = model::SystemParams<Real>;
/// [`model::DerivedParams`] at the default scalar.
pub type DerivedParams = model::DerivedParams<Real>;
/// [`analytics::AoiMoments`] at the default scalar.
pub type AoiMoments = analytics::AoiMoments<Real>;
/// [`analytics::GumbelFit`] at the default scalar.
pub type GumbelFit = analytics::GumbelFit<Real>;
/// [`risk::RiskReport`] at the default scalar.
pub type RiskReport = risk::RiskReport<Real>;

//! Closed-form statistics of the age process.
//!
//! One renewal cycle spans `L` charge-and-transmit attempts until a decode
//! succeeds; the interarrival time is `Y = Σ_{i=1}^{L} X_i` with charge
//! times `X ~ 1 + Poisson(g)` and `L` geometric with success rate `1 - p`.
//! From the first four moments of `Y` follow the long-run mean of the age
//! sawtooth and the variance-style second moment used by the Gumbel fit:
//!
//! - mean:     `Δ̄ = (E[Y²]/E[Y] + 1) / 2`
//! - variance: `V = E[Q²]/E[Y] - Δ̄²` with per-cycle area `Q = Y(Y+1)/2`
//!
//! Note `V` is the cycle-area second-moment form, not the per-slot variance
//! of the sawtooth; the simulator reports both under distinct labels.
//!
//! The extreme-age law is approximated by a Gumbel distribution whose
//! location/scale are moment-matched to `(Δ̄, V)`.

use serde::Serialize;
use thiserror::Error;

use crate::scalar::FloatScalar;

/// Analytics domain errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    /// Moment order outside the supported 1..=4 range.
    #[error("moment order must lie in 1..=4, got {0}")]
    MomentOrder(u32),
    /// Charging load must be nonnegative and finite.
    #[error("charging load g must be >= 0 and finite, got {0}")]
    InvalidG(f64),
    /// Outage probability must lie in [0, 1).
    #[error("outage probability p must lie in [0, 1), got {0}")]
    InvalidP(f64),
    /// A Gumbel fit needs strictly positive variance.
    #[error("aoi variance must be > 0 to fit a Gumbel law, got {0}")]
    NonPositiveVariance(f64),
}

/// Mean age, the cycle-area variance form, and the four raw interarrival
/// moments behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoiMoments<T: FloatScalar = f64> {
    /// Long-run average age in timeslots.
    pub mean_aoi: T,
    /// Cycle-area variance form in timeslots².
    pub var_aoi: T,
    /// Raw moments `E[Y], E[Y²], E[Y³], E[Y⁴]`.
    pub y_moments: [T; 4],
}

/// Moment-matched Gumbel location/scale with its regime diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GumbelFit<T: FloatScalar = f64> {
    /// Location parameter in timeslots.
    pub mu_hat: T,
    /// Scale parameter in timeslots, always > 0.
    pub sigma_hat: T,
    /// Regime product `E[L]·g = g / (1 - p)`; the Gumbel approximation is
    /// advertised for values above 10.
    pub validity_lg: T,
    /// Set when `validity_lg <= 10`.
    pub low_validity: bool,
}

fn check_g<T: FloatScalar>(g: T) -> Result<(), AnalyticsError> {
    if g.is_finite() && g >= T::zero() {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidG(g.as_f64()))
    }
}

fn check_p<T: FloatScalar>(p: T) -> Result<(), AnalyticsError> {
    if p >= T::zero() && p < T::one() {
        Ok(())
    } else {
        Err(AnalyticsError::InvalidP(p.as_f64()))
    }
}

/// True when `1 - p` is so small that the `(1-p)^{-4}` factors in the
/// moment assembly start to amplify rounding noticeably.
pub fn is_ill_conditioned<T: FloatScalar>(p: T) -> bool {
    T::one() - p < T::from_f64(1e-6).unwrap()
}

/// Raw charge-time moment `E[X^n]` for `n` in 1..=4.
///
/// `X ~ 1 + Poisson(g)`, giving the exact polynomials
/// `1+g`, `1+3g+g²`, `1+7g+6g²+g³`, `1+15g+25g²+10g³+g⁴`.
pub fn x_moment<T: FloatScalar>(n: u32, g: T) -> Result<T, AnalyticsError> {
    check_g(g)?;
    let one = T::one();
    let c = |v: f64| T::from_f64(v).unwrap();
    Ok(match n {
        1 => one + g,
        2 => one + g * (c(3.0) + g),
        3 => one + g * (c(7.0) + g * (c(6.0) + g)),
        4 => one + g * (c(15.0) + g * (c(25.0) + g * (c(10.0) + g))),
        other => return Err(AnalyticsError::MomentOrder(other)),
    })
}

/// Raw interarrival moment `E[Y^n]` for `n` in 1..=4.
///
/// Assembled from the conditional moments of a sum of `k` i.i.d. charge
/// times mixed over the geometric attempt count, whose factorial-moment
/// sums close to `k!·p^{k-1}(1-p)^{-k}`-type expressions. Every addend is
/// nonnegative, so no cancellation occurs for `p` in [0, 1).
pub fn y_moment<T: FloatScalar>(n: u32, g: T, p: T) -> Result<T, AnalyticsError> {
    check_g(g)?;
    check_p(p)?;
    let c = |v: f64| T::from_f64(v).unwrap();
    let q = T::one() - p;
    let m1 = x_moment(1, g)?;

    // Geometric factorial-moment sums over the attempt count:
    // E[k] = 1/q, E[k(k-1)] = 2p/q², E[k(k-1)(k-2)] = 6p²/q³,
    // E[k(k-1)(k-2)(k-3)] = 24p³/q⁴.
    let s1 = q.recip();
    let s2 = c(2.0) * p / (q * q);
    let s3 = c(6.0) * p * p / (q * q * q);
    let s4 = c(24.0) * p * p * p / (q * q * q * q);

    Ok(match n {
        1 => m1 * s1,
        2 => {
            let m2 = x_moment(2, g)?;
            m2 * s1 + m1 * m1 * s2
        }
        3 => {
            let m2 = x_moment(2, g)?;
            let m3 = x_moment(3, g)?;
            m3 * s1 + c(3.0) * m2 * m1 * s2 + m1 * m1 * m1 * s3
        }
        4 => {
            let m2 = x_moment(2, g)?;
            let m3 = x_moment(3, g)?;
            let m4 = x_moment(4, g)?;
            m4 * s1
                + (c(4.0) * m3 * m1 + c(3.0) * m2 * m2) * s2
                + c(6.0) * m2 * m1 * m1 * s3
                + m1 * m1 * m1 * m1 * s4
        }
        other => return Err(AnalyticsError::MomentOrder(other)),
    })
}

/// Long-run average age in timeslots:
/// `(1+3g+g²)/(2(g+1)) + (1+g)p/(1-p) + 1/2`.
pub fn average_aoi<T: FloatScalar>(g: T, p: T) -> Result<T, AnalyticsError> {
    check_g(g)?;
    check_p(p)?;
    let one = T::one();
    let half = T::from_f64(0.5).unwrap();
    let c3 = T::from_f64(3.0).unwrap();
    Ok((one + g * (c3 + g)) / ((one + one) * (g + one)) + (one + g) * p / (one - p) + half)
}

/// Cycle-area age variance in timeslots², the closed quintic-in-`g`
/// polynomial over `4(g+1)²(1-p)³`.
///
/// All polynomial coefficients are nonnegative on `p` in [0, 1), so the
/// numerator accumulates without cancellation.
pub fn aoi_variance<T: FloatScalar>(g: T, p: T) -> Result<T, AnalyticsError> {
    check_g(g)?;
    check_p(p)?;
    let c = |v: f64| T::from_f64(v).unwrap();
    let one = T::one();
    let q = one - p;

    // Coefficients of g^5 .. g^0, each a cubic in p (Horner).
    let k5 = one + p * (c(11.0) + p * (c(11.0) + p));
    let k4 = c(12.0) + p * (c(78.0) + p * (c(32.0) - p * c(2.0)));
    let k3 = c(42.0) + p * (c(174.0) + p * (c(26.0) - p * c(2.0)));
    let k2 = c(2.0) * (c(25.0) + p * (c(89.0) + p * (c(5.0) + p)));
    let k1 = c(4.0) * (c(5.0) + p * (c(22.0) + p * c(3.0)));
    let k0 = c(4.0) * p * (p + c(5.0));

    let num = k0 + g * (k1 + g * (k2 + g * (k3 + g * (k4 + g * k5))));
    Ok(num / (c(4.0) * (g + one) * (g + one) * q * q * q))
}

/// Average age in the massive-antenna limit (`p -> 0`):
/// `(2 + 4g + g²) / (2 + 2g)`.
pub fn average_aoi_massive_n<T: FloatScalar>(g: T) -> T {
    let c = |v: f64| T::from_f64(v).unwrap();
    (c(2.0) + g * (c(4.0) + g)) / (c(2.0) + c(2.0) * g)
}

/// Age variance in the massive-antenna limit (`p -> 0`):
/// `g(g⁴ + 12g³ + 42g² + 50g + 20) / (4(g+1)²)`.
pub fn aoi_variance_massive_n<T: FloatScalar>(g: T) -> T {
    let c = |v: f64| T::from_f64(v).unwrap();
    let one = T::one();
    let poly = c(20.0) + g * (c(50.0) + g * (c(42.0) + g * (c(12.0) + g)));
    g * poly / (c(4.0) * (g + one) * (g + one))
}

/// Mean, variance and raw interarrival moments for a `(g, p)` pair.
pub fn aoi_moments<T: FloatScalar>(g: T, p: T) -> Result<AoiMoments<T>, AnalyticsError> {
    Ok(AoiMoments {
        mean_aoi: average_aoi(g, p)?,
        var_aoi: aoi_variance(g, p)?,
        y_moments: [
            y_moment(1, g, p)?,
            y_moment(2, g, p)?,
            y_moment(3, g, p)?,
            y_moment(4, g, p)?,
        ],
    })
}

/// Moment-matches a Gumbel law to `(mean, variance)`:
/// `σ̂ = sqrt(6 V) / π`, `μ̂ = mean - ε σ̂`.
///
/// `validity_lg` is the caller-supplied regime product `g/(1-p)`; the
/// `low_validity` flag is set at or below 10.
pub fn gumbel_fit<T: FloatScalar>(
    moments: &AoiMoments<T>,
    validity_lg: T,
) -> Result<GumbelFit<T>, AnalyticsError> {
    if moments.var_aoi <= T::zero() || moments.var_aoi.is_nan() {
        return Err(AnalyticsError::NonPositiveVariance(
            moments.var_aoi.as_f64(),
        ));
    }
    let sigma_hat = (T::from_f64(6.0).unwrap() * moments.var_aoi).sqrt() / T::PI();
    Ok(GumbelFit {
        mu_hat: moments.mean_aoi - T::euler_mascheroni() * sigma_hat,
        sigma_hat,
        validity_lg,
        low_validity: validity_lg <= T::from_f64(10.0).unwrap(),
    })
}

/// Full chain `(g, p)` -> moments -> Gumbel fit.
pub fn gumbel_fit_from_params<T: FloatScalar>(g: T, p: T) -> Result<GumbelFit<T>, AnalyticsError> {
    let moments = aoi_moments(g, p)?;
    gumbel_fit(&moments, g / (T::one() - p))
}

/// Gumbel CDF `exp(-exp(-(x - μ̂)/σ̂))`; saturates to 0/1 in the tails.
pub fn gumbel_cdf<T: FloatScalar>(x: T, fit: &GumbelFit<T>) -> T {
    let z = (x - fit.mu_hat) / fit.sigma_hat;
    (-(-z).exp()).exp()
}

/// Gumbel PDF `exp(-z - exp(-z)) / σ̂` with `z = (x - μ̂)/σ̂`.
pub fn gumbel_pdf<T: FloatScalar>(x: T, fit: &GumbelFit<T>) -> T {
    let z = (x - fit.mu_hat) / fit.sigma_hat;
    (-z - (-z).exp()).exp() / fit.sigma_hat
}

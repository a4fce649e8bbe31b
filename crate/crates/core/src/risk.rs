//! Tail-risk metrics on the fitted Gumbel law and their empirical,
//! order-statistic counterparts.
//!
//! For a Gumbel law with location `μ̂` and scale `σ̂`:
//!
//! - VaR is the quantile, `VaR(a) = μ̂ - σ̂ ln(-ln a)`;
//! - CVaR is the mean of the worst `1 - a` fraction,
//!   `CVaR(a) = (1/(1-a)) ∫_a^1 VaR(y) dy
//!            = μ̂ + σ̂ [ε + a ln(-ln a) - li(a)] / (1 - a)`.
//!
//! The bracketed constant depends on `a` alone, so it can be precomputed
//! offline; [`CvarBracketCache`] memoizes it per confidence level.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use crate::analytics::GumbelFit;
use crate::scalar::FloatScalar;
use crate::specfun;

/// Risk-metric errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    /// Confidence level outside the open interval (0, 1).
    #[error("confidence level must lie in (0, 1), got {0}")]
    AlphaDomain(f64),
    /// Too few samples for the requested quantile depth.
    #[error("need at least {needed} samples for this confidence level, have {have}")]
    InsufficientSamples {
        /// Minimum sample count `ceil(1/(1-alpha))`.
        needed: usize,
        /// Observed sample count.
        have: usize,
    },
    /// Samples must be finite to order them.
    #[error("samples must be finite (found a NaN or infinity)")]
    NonFiniteSample,
}

/// One confidence level's VaR/CVaR pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskReport<T: FloatScalar = f64> {
    /// Confidence level in (0, 1).
    pub alpha: T,
    /// Value-at-risk in timeslots.
    pub var_value: T,
    /// Conditional value-at-risk in timeslots; always >= `var_value`.
    pub cvar_value: T,
    /// Which pipeline produced the numbers.
    pub source: RiskSource,
}

/// Provenance tag for a [`RiskReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskSource {
    /// Closed forms on the fitted Gumbel law.
    Analytic,
    /// Order statistics of simulation samples.
    Empirical,
}

fn check_alpha<T: FloatScalar>(alpha: T) -> Result<(), RiskError> {
    if alpha > T::zero() && alpha < T::one() {
        Ok(())
    } else {
        Err(RiskError::AlphaDomain(alpha.as_f64()))
    }
}

/// Gumbel quantile `μ̂ - σ̂ ln(-ln a)`; strictly increasing in `a`.
pub fn var_at<T: FloatScalar>(fit: &GumbelFit<T>, alpha: T) -> Result<T, RiskError> {
    check_alpha(alpha)?;
    Ok(fit.mu_hat - fit.sigma_hat * (-alpha.ln()).ln())
}

/// The `a`-dependent bracket of the CVaR closed form:
/// `ε + a ln(-ln a) - li(a)`.
pub fn cvar_bracket<T: FloatScalar>(alpha: T) -> Result<T, RiskError> {
    check_alpha(alpha)?;
    let li = specfun::log_integral(alpha).expect("alpha checked in (0,1)");
    Ok(T::euler_mascheroni() + alpha * (-alpha.ln()).ln() - li)
}

/// Gumbel tail mean over the worst `1 - a` fraction:
/// `μ̂ + σ̂ (ε + a ln(-ln a) - li(a)) / (1 - a)`.
pub fn cvar_at<T: FloatScalar>(fit: &GumbelFit<T>, alpha: T) -> Result<T, RiskError> {
    let bracket = cvar_bracket(alpha)?;
    Ok(fit.mu_hat + fit.sigma_hat * bracket / (T::one() - alpha))
}

/// True when `1 - alpha` is small enough (below 1e-6) that the closing
/// division starts to amplify rounding in [`cvar_at`].
pub fn cvar_is_ill_conditioned<T: FloatScalar>(alpha: T) -> bool {
    T::one() - alpha < T::from_f64(1e-6).unwrap()
}

/// Memoized [`cvar_bracket`] values, keyed by the confidence level's bit
/// pattern. Lookup/insert is mutex-guarded, so shared use from multiple
/// threads is safe; for fan-out sections it is cheapest to call
/// [`CvarBracketCache::precompute`] first.
#[derive(Debug, Default)]
pub struct CvarBracketCache {
    table: Mutex<HashMap<u64, f64>>,
}

impl CvarBracketCache {
    /// Empty cache.
    pub fn new() -> Self {
        Self::default()
    }

    /// Bracket for `alpha`, computed at most once per distinct value.
    pub fn bracket(&self, alpha: f64) -> Result<f64, RiskError> {
        let key = alpha.to_bits();
        if let Some(&v) = self.table.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let v = cvar_bracket(alpha)?;
        self.table.lock().unwrap().insert(key, v);
        Ok(v)
    }

    /// Eagerly fills the cache for a set of confidence levels.
    pub fn precompute(&self, alphas: &[f64]) -> Result<(), RiskError> {
        for &a in alphas {
            self.bracket(a)?;
        }
        Ok(())
    }

    /// CVaR through the cache.
    pub fn cvar_at(&self, fit: &GumbelFit<f64>, alpha: f64) -> Result<f64, RiskError> {
        Ok(fit.mu_hat + fit.sigma_hat * self.bracket(alpha)? / (1.0 - alpha))
    }
}

fn sorted_finite<T: FloatScalar>(samples: &[T]) -> Result<Vec<T>, RiskError> {
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(RiskError::NonFiniteSample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples compare"));
    Ok(sorted)
}

fn quantile_checks<T: FloatScalar>(n: usize, alpha: T) -> Result<usize, RiskError> {
    check_alpha(alpha)?;
    let needed = (T::one() / (T::one() - alpha)).ceil().as_f64() as usize;
    if n < needed.max(1) {
        return Err(RiskError::InsufficientSamples {
            needed: needed.max(1),
            have: n,
        });
    }
    // Lower order statistic: 0-based index ceil(alpha * n) - 1. Fixed so
    // results are bit-reproducible across runs and platforms.
    let rank = (alpha * T::from_usize(n).unwrap()).ceil().as_f64() as usize;
    Ok(rank.clamp(1, n) - 1)
}

/// Empirical VaR: the lower order-statistic quantile. Sorts ascending and
/// takes 0-based index `ceil(alpha * n) - 1`.
///
/// Needs at least `ceil(1/(1-alpha))` samples.
pub fn empirical_var<T: FloatScalar>(samples: &[T], alpha: T) -> Result<T, RiskError> {
    let idx = quantile_checks(samples.len(), alpha)?;
    let sorted = sorted_finite(samples)?;
    Ok(sorted[idx])
}

/// Empirical CVaR: mean of everything strictly above the quantile plus the
/// proportional fragment sitting at the quantile itself,
/// `[(k/n - a) q + (1/n) Σ_{i>k} x_(i)] / (1 - a)` with `k = ceil(a n)`.
///
/// Always at least [`empirical_var`] on the same input.
pub fn empirical_cvar<T: FloatScalar>(samples: &[T], alpha: T) -> Result<T, RiskError> {
    let idx = quantile_checks(samples.len(), alpha)?;
    let sorted = sorted_finite(samples)?;
    let n = T::from_usize(sorted.len()).unwrap();
    let q = sorted[idx];
    let k = T::from_usize(idx + 1).unwrap();

    let mut tail_sum = T::zero();
    for &x in &sorted[idx + 1..] {
        tail_sum = tail_sum + x;
    }
    let fragment = (k / n - alpha) * q;
    Ok((fragment + tail_sum / n) / (T::one() - alpha))
}

/// Closed-form VaR/CVaR at each confidence level.
pub fn analytic_risk_report<T: FloatScalar>(
    fit: &GumbelFit<T>,
    alphas: &[T],
) -> Result<Vec<RiskReport<T>>, RiskError> {
    alphas
        .iter()
        .map(|&alpha| {
            Ok(RiskReport {
                alpha,
                var_value: var_at(fit, alpha)?,
                cvar_value: cvar_at(fit, alpha)?,
                source: RiskSource::Analytic,
            })
        })
        .collect()
}

/// Order-statistic VaR/CVaR of a sample set at each confidence level.
pub fn empirical_risk_report<T: FloatScalar>(
    samples: &[T],
    alphas: &[T],
) -> Result<Vec<RiskReport<T>>, RiskError> {
    alphas
        .iter()
        .map(|&alpha| {
            Ok(RiskReport {
                alpha,
                var_value: empirical_var(samples, alpha)?,
                cvar_value: empirical_cvar(samples, alpha)?,
                source: RiskSource::Empirical,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_fit() -> GumbelFit<f64> {
        GumbelFit {
            mu_hat: 0.0,
            sigma_hat: 1.0,
            validity_lg: 20.0,
            low_validity: false,
        }
    }

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn var_at_reference_points() {
        let fit = GumbelFit {
            mu_hat: 5.0,
            sigma_hat: 2.5,
            validity_lg: 20.0,
            low_validity: false,
        };
        // ln(-ln e^{-1}) = 0
        let got = var_at(&fit, (-1.0_f64).exp()).unwrap();
        assert!((got - 5.0).abs() < 1e-12);
        // frozen high-precision -ln(-ln 0.99)
        let got = var_at(&unit_fit(), 0.99).unwrap();
        assert!(rel_err(got, 4.600_149_226_776_58) < 1e-12);
    }

    #[test]
    fn var_quantile_inverts_cdf() {
        let fit = GumbelFit {
            mu_hat: -57.0,
            sigma_hat: 129.7,
            validity_lg: 20.0,
            low_validity: false,
        };
        for i in 1..100 {
            let a = i as f64 / 100.0;
            let x = var_at(&fit, a).unwrap();
            let back = crate::analytics::gumbel_cdf(x, &fit);
            assert!(rel_err(back, a) < 1e-12, "alpha={a}");
        }
    }

    #[test]
    fn var_domain_errors() {
        assert!(var_at(&unit_fit(), 0.0).is_err());
        assert!(var_at(&unit_fit(), 1.0).is_err());
        assert!(var_at(&unit_fit(), -0.2).is_err());
        assert!(var_at(&unit_fit(), f64::NAN).is_err());
    }

    #[test]
    fn cvar_tends_to_gumbel_mean_at_low_alpha() {
        let fit = GumbelFit {
            mu_hat: 3.0,
            sigma_hat: 2.0,
            validity_lg: 20.0,
            low_validity: false,
        };
        let mean = 3.0 + 2.0 * crate::specfun::EULER_MASCHERONI;
        let got = cvar_at(&fit, 1e-12).unwrap();
        assert!((got - mean).abs() < 1e-9);
    }

    #[test]
    fn cvar_frozen_reference() {
        // (ε + 0.9 ln(-ln 0.9) - li(0.9)) / 0.1, frozen from an
        // arbitrary-precision evaluation of the defining integral.
        let got = cvar_at(&unit_fit(), 0.9).unwrap();
        assert!(rel_err(got, 3.276_857_537_438_57) < 1e-12);
    }

    #[test]
    fn cvar_dominates_var() {
        let fit = GumbelFit {
            mu_hat: 10.0,
            sigma_hat: 13.0,
            validity_lg: 20.0,
            low_validity: false,
        };
        for i in 1..100 {
            let a = i as f64 / 100.0;
            assert!(
                cvar_at(&fit, a).unwrap() >= var_at(&fit, a).unwrap(),
                "alpha={a}"
            );
        }
    }

    #[test]
    fn cvar_conditioning_helper() {
        assert!(!cvar_is_ill_conditioned(0.999_f64));
        assert!(cvar_is_ill_conditioned(1.0 - 1e-7_f64));
    }

    #[test]
    fn risk_metrics_strictly_increasing_in_alpha() {
        let fit = GumbelFit {
            mu_hat: -57.4,
            sigma_hat: 129.7,
            validity_lg: 20.0,
            low_validity: false,
        };
        let mut prev_var = f64::NEG_INFINITY;
        let mut prev_cvar = f64::NEG_INFINITY;
        for i in 1..100 {
            let a = i as f64 / 100.0;
            let v = var_at(&fit, a).unwrap();
            let c = cvar_at(&fit, a).unwrap();
            assert!(v > prev_var && c > prev_cvar, "alpha={a}");
            prev_var = v;
            prev_cvar = c;
        }
    }

    #[test]
    fn coherence_equivariance_exact() {
        let base = GumbelFit {
            mu_hat: 2.0,
            sigma_hat: 3.0,
            validity_lg: 20.0,
            low_validity: false,
        };
        let shifted = GumbelFit {
            mu_hat: 7.5,
            ..base
        };
        let scaled = GumbelFit {
            sigma_hat: 6.0,
            ..base
        };
        for &a in &[0.7, 0.9, 0.95, 0.99] {
            // translation: both metrics shift by c
            assert!(
                rel_err(
                    var_at(&shifted, a).unwrap(),
                    var_at(&base, a).unwrap() + 5.5
                ) < 1e-12
            );
            assert!(
                rel_err(
                    cvar_at(&shifted, a).unwrap(),
                    cvar_at(&base, a).unwrap() + 5.5
                ) < 1e-12
            );
            // scale: (metric - mu) doubles when sigma doubles
            let v0 = var_at(&base, a).unwrap() - base.mu_hat;
            let v1 = var_at(&scaled, a).unwrap() - scaled.mu_hat;
            assert!(rel_err(v1, 2.0 * v0) < 1e-12);
            let c0 = cvar_at(&base, a).unwrap() - base.mu_hat;
            let c1 = cvar_at(&scaled, a).unwrap() - scaled.mu_hat;
            assert!(rel_err(c1, 2.0 * c0) < 1e-12);
        }
    }

    #[test]
    fn empirical_var_rank_arithmetic() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(empirical_var(&samples, 0.95).unwrap(), 95.0);
        assert_eq!(empirical_var(&samples, 0.9).unwrap(), 90.0);
        // constant samples collapse to the constant for any alpha
        let constant = vec![4.25_f64; 50];
        for &a in &[0.1, 0.5, 0.9, 0.97] {
            assert_eq!(empirical_var(&constant, a).unwrap(), 4.25);
        }
    }

    #[test]
    fn empirical_cvar_rank_arithmetic() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        // mean of {96..100}
        assert!((empirical_cvar(&samples, 0.95).unwrap() - 98.0).abs() < 1e-12);
        let constant = vec![4.25_f64; 50];
        for &a in &[0.1, 0.5, 0.9, 0.97] {
            assert!((empirical_cvar(&constant, a).unwrap() - 4.25).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_errors() {
        let samples = vec![1.0_f64, 2.0];
        assert_eq!(
            empirical_var(&samples, 0.95),
            Err(RiskError::InsufficientSamples {
                needed: 20,
                have: 2
            })
        );
        let bad = vec![1.0_f64, f64::NAN, 3.0, 4.0];
        assert_eq!(empirical_var(&bad, 0.5), Err(RiskError::NonFiniteSample));
        assert!(empirical_cvar(&bad, 0.5).is_err());
    }

    #[test]
    fn bracket_cache_consistency_under_threads() {
        use std::sync::Arc;
        let cache = Arc::new(CvarBracketCache::new());
        let alphas = [0.7, 0.85, 0.9, 0.95, 0.99];
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || alphas.map(|a| cache.bracket(a).unwrap()))
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results[1..] {
            assert_eq!(*r, results[0]);
        }
        for (i, &a) in alphas.iter().enumerate() {
            assert_eq!(results[0][i], cvar_bracket(a).unwrap());
            assert_eq!(
                cache.cvar_at(&unit_fit(), a).unwrap(),
                cvar_at(&unit_fit(), a).unwrap()
            );
        }
    }

    #[test]
    fn reports_tag_their_source() {
        let fit = unit_fit();
        let reports = analytic_risk_report(&fit, &[0.9, 0.95]).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.source == RiskSource::Analytic));
        assert!(reports.iter().all(|r| r.cvar_value >= r.var_value));

        let samples: Vec<f64> = (1..=1000).map(f64::from).collect();
        let reports = empirical_risk_report(&samples, &[0.9, 0.95]).unwrap();
        assert!(reports.iter().all(|r| r.source == RiskSource::Empirical));
        assert!(reports.iter().all(|r| r.cvar_value >= r.var_value));
    }

    proptest! {
        #[test]
        fn empirical_cvar_dominates_var(
            mut samples in prop::collection::vec(-100.0..100.0f64, 30..200),
            alpha in 0.05..0.95f64,
        ) {
            samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let v = empirical_var(&samples, alpha).unwrap();
            let c = empirical_cvar(&samples, alpha).unwrap();
            prop_assert!(c >= v - 1e-9);
        }

        #[test]
        fn empirical_var_is_an_observed_sample(
            samples in prop::collection::vec(-1e6..1e6f64, 25..100),
            alpha in 0.05..0.95f64,
        ) {
            let v = empirical_var(&samples, alpha).unwrap();
            prop_assert!(samples.contains(&v));
        }
    }
}

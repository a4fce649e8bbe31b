//! Special-function kernel: integer-order upper incomplete gamma and the
//! logarithmic integral on (0, 1).
//!
//! Everything here is self-contained, pure and thread-safe. Only the two
//! families the rest of the crate needs are provided; this is not a general
//! special-function library.

use thiserror::Error;

use crate::scalar::FloatScalar;

/// Euler–Mascheroni constant, nearest `f64` (abs. error ~6e-17).
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// Domain errors of the kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    /// The incomplete gamma order must be a positive integer.
    #[error("incomplete gamma order must be >= 1, got 0")]
    OrderZero,
    /// The incomplete gamma argument must be nonnegative.
    #[error("incomplete gamma argument must be >= 0, got {0}")]
    NegativeArgument(f64),
    /// The logarithmic integral is only evaluated on the open interval (0, 1).
    #[error("logarithmic integral argument must lie in (0, 1), got {0}")]
    LogIntegralDomain(f64),
}

/// ln(m!), exact products for m <= 20, Stirling series above.
///
/// Relative error is a few ulp for small m and below 2e-15 for m >= 21.
pub fn ln_factorial(m: u64) -> f64 {
    if m <= 20 {
        // 20! = 2_432_902_008_176_640_000 is exactly representable in f64.
        let mut f = 1.0_f64;
        for k in 2..=m {
            f *= k as f64;
        }
        f.ln()
    } else {
        // Stirling: ln m! = (m + 1/2) ln m - m + ln(2 pi)/2 + series in 1/m.
        let x = m as f64;
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series =
            inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
        (x + 0.5) * x.ln() - x + 0.5 * (2.0 * core::f64::consts::PI).ln() + series
    }
}

/// Regularized upper incomplete gamma `Q(n, x) = Γ(n, x) / (n-1)!` for
/// integer order `n >= 1`.
///
/// Uses the finite-sum identity `Q(n, x) = e^{-x} Σ_{k=0}^{n-1} x^k / k!`,
/// accumulated as a running Poisson pmf so no factorial or power is ever
/// materialized on its own. When `e^{-x}` would underflow, the sum is
/// rescaled at its largest term in log space, so orders of 512 and beyond
/// stay accurate. The result is clamped to [0, 1].
pub fn regularized_upper_gamma<T: FloatScalar>(n: u32, x: T) -> Result<T, SpecFunError> {
    let zero = T::zero();
    let one = T::one();
    if n == 0 {
        return Err(SpecFunError::OrderZero);
    }
    if x < zero || x.is_nan() {
        return Err(SpecFunError::NegativeArgument(x.as_f64()));
    }
    if x == zero {
        return Ok(one);
    }

    // Largest x for which e^{-x} is still comfortably a normal number.
    let exp_floor = -T::min_positive_value().ln() * T::from_f64(0.98).unwrap();

    let q = if x < exp_floor {
        // pmf_k = e^{-x} x^k / k!; every pmf_k <= 1, no overflow possible.
        let mut pmf = (-x).exp();
        let mut sum = pmf;
        for k in 1..n {
            pmf = pmf * x / T::from_u32(k).unwrap();
            sum = sum + pmf;
        }
        sum
    } else {
        peak_scaled_poisson_cdf(n, x)
    };
    Ok(q.min(one).max(zero))
}

/// Σ_{k=0}^{n-1} e^{-x} x^k / k! evaluated for very large x by scaling at
/// the largest retained term. Underflows gracefully to zero.
fn peak_scaled_poisson_cdf<T: FloatScalar>(n: u32, x: T) -> T {
    let one = T::one();
    let kstar = (n - 1).min(x.as_f64().floor() as u32);
    let ln_peak = -x + T::from_u32(kstar).unwrap() * x.ln()
        - T::from_f64(ln_factorial(kstar as u64)).unwrap();

    // Sum of term ratios relative to the peak, downward then upward.
    let eps = T::epsilon();
    let mut total = one;
    let mut ratio = one;
    for k in (1..=kstar).rev() {
        ratio = ratio * T::from_u32(k).unwrap() / x;
        total = total + ratio;
        if ratio < total * eps {
            break;
        }
    }
    ratio = one;
    for k in kstar + 1..n {
        ratio = ratio * x / T::from_u32(k).unwrap();
        total = total + ratio;
        if ratio < total * eps {
            break;
        }
    }
    (ln_peak + total.ln()).exp()
}

/// Upper incomplete gamma `Γ(n, x)` for integer order `n >= 1`,
/// i.e. `(n-1)! * Q(n, x)`.
///
/// `(n-1)!` exceeds the `f64` range for `n > 171`, in which case the result
/// saturates to `+inf`; use [`regularized_upper_gamma`] at large orders.
pub fn upper_incomplete_gamma_int<T: FloatScalar>(n: u32, x: T) -> Result<T, SpecFunError> {
    let q = regularized_upper_gamma(n, x)?;
    let mut fact = T::one();
    for k in 2..n {
        fact = fact * T::from_u32(k).unwrap();
        if fact.is_infinite() {
            break;
        }
    }
    Ok(q * fact)
}

/// Logarithmic integral `li(a) = ∫_0^a dt / ln t` for `a` in the open
/// interval (0, 1).
///
/// Evaluated as `-E1(-ln a)`; the exponential integral uses the power
/// series for small arguments and a modified Lentz continued fraction for
/// large ones. Negative and strictly decreasing on (0, 1); absolute error
/// well below 1e-8 in `f64`.
pub fn log_integral<T: FloatScalar>(a: T) -> Result<T, SpecFunError> {
    if !(a > T::zero() && a < T::one()) {
        return Err(SpecFunError::LogIntegralDomain(a.as_f64()));
    }
    Ok(-exp_integral_e1(-a.ln()))
}

/// E1(x) for x > 0.
///
/// Series for x below the cancellation threshold (~20 in f64), Lentz
/// continued fraction above it.
fn exp_integral_e1<T: FloatScalar>(x: T) -> T {
    // The alternating series loses |ln eps| * 0.55 digits around x ~ 20 (f64);
    // switch to the continued fraction before cancellation bites.
    let switch = -T::epsilon().ln() * T::from_f64(0.55).unwrap();
    if x <= switch {
        e1_series(x)
    } else {
        e1_continued_fraction(x)
    }
}

/// E1(x) = -γ - ln x + Σ_{k>=1} (-1)^{k+1} x^k / (k · k!).
fn e1_series<T: FloatScalar>(x: T) -> T {
    let mut sum = T::zero();
    let mut power_term = T::one(); // x^k / k!
    let mut sign = T::one();
    for k in 1..=200u32 {
        let kt = T::from_u32(k).unwrap();
        power_term = power_term * x / kt;
        let term = sign * power_term / kt;
        sum = sum + term;
        if term.abs() < (sum.abs() + T::one()) * T::epsilon() {
            break;
        }
        sign = -sign;
    }
    -T::euler_mascheroni() - x.ln() + sum
}

/// E1(x) = e^{-x} / (x + 1 - 1²/(x + 3 - 2²/(x + 5 - ...))), modified Lentz.
fn e1_continued_fraction<T: FloatScalar>(x: T) -> T {
    let one = T::one();
    let tiny = T::from_f64(1e-30).unwrap();
    let eps = T::epsilon();

    let b0 = x + one;
    let mut f = if b0.abs() < tiny { tiny } else { b0 };
    let mut c = f;
    let mut d = T::zero();
    for j in 1..=200u32 {
        let jt = T::from_u32(j).unwrap();
        let aj = -(jt * jt);
        let bj = x + T::from_u32(2 * j + 1).unwrap();

        d = bj + aj * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = one / d;
        c = bj + aj / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f = f * delta;
        if (delta - one).abs() < eps {
            break;
        }
    }
    (-x).exp() / f
}

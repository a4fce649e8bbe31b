//! Deterministic, seedable random-number generation for the simulator.
//!
//! The generator is xoshiro256++ seeded through SplitMix64, written out in
//! full so simulation streams are reproducible from a single `u64` seed
//! and independent of any external crate's implementation details.
//! Replication `r` of a run with master seed `s` uses the raw seed
//! `s + r * 0x9E3779B97F4A7C15 (mod 2^64)`; SplitMix64's output mixing
//! decorrelates such arithmetic seed progressions.
//!
//! Not cryptographically secure; simulation use only.

/// SplitMix64 additive constant (the 64-bit golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ generator with documented, stable output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng {
    state: [u64; 4],
}

impl SimRng {
    /// Seeds the four state words from consecutive SplitMix64 outputs.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = splitmix64(&mut sm);
        }
        // The all-zero state is the one forbidden xoshiro state.
        if state == [0; 4] {
            state[0] = GOLDEN_GAMMA;
        }
        Self { state }
    }

    /// Seed for replication `index` of a run with the given master seed.
    pub fn replica_seed(master_seed: u64, index: u64) -> u64 {
        master_seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA))
    }

    /// Next raw 64-bit value.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let [s0, s1, s2, s3] = self.state;
        let result = s0.wrapping_add(s3).rotate_left(23).wrapping_add(s0);
        let t = s1 << 17;
        let mut s2 = s2 ^ s0;
        let mut s3 = s3 ^ s1;
        let s1 = s1 ^ s2;
        let s0 = s0 ^ s3;
        s2 ^= t;
        s3 = s3.rotate_left(45);
        self.state = [s0, s1, s2, s3];
        result
    }

    /// Uniform in `[0, 1)`: the top 53 bits scaled by 2^-53.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`: bin midpoints
    /// `(k + 0.5) * 2^-53`, never exactly 0 or 1.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-mean exponential by inverse CDF, `-ln(U)` with `U` in (0, 1).
    #[inline]
    pub fn unit_exponential(&mut self) -> f64 {
        -self.next_open01().ln()
    }

    /// Bernoulli with success probability `prob`; success iff `U < prob`
    /// for `U` uniform in `[0, 1)`, so `prob = 1` always succeeds and
    /// `prob = 0` never does.
    #[inline]
    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.next_f64() < prob
    }

    /// Poisson draw: sequential CDF inversion for `mean <= 30`, Hörmann's
    /// PTRS transformed rejection above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0 && mean.is_finite());
        if mean <= 0.0 {
            0
        } else if mean <= 30.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.next_f64();
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        let mut k = 0u64;
        // mean <= 30 keeps e^{-mean} a comfortable normal number; the loop
        // cap is unreachable (tail mass beyond 700 is < 1e-300) but bounds
        // the worst case against float-accumulation corner cases.
        while u >= cdf && k < 700 {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
        }
        k
    }

    /// Transformed rejection with squeeze (Hörmann 1993), exact for
    /// mean >= 10. Consumes two uniforms per proposal round.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let b = 0.931 + 2.53 * mean.sqrt();
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let ln_mean = mean.ln();

        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_f64();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();

            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let accept_lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
            let accept_rhs = -mean + k * ln_mean - crate::specfun::ln_factorial(k as u64);
            if accept_lhs <= accept_rhs {
                return k as u64;
            }
        }
    }
}

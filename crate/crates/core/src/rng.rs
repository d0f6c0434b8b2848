//! Stateless counter-based random source.
//!
//! Every deviate is a pure function of `(seed, step, stream)`, so parallel
//! workers and different traversal strategies draw the same value for the
//! same node at the same step regardless of evaluation order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STEP_MUL: u64 = 0xD1B5_4A32_D192_ED03;
const STREAM_MUL: u64 = 0xAEF1_7502_108E_F2D9;
const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// 64-bit avalanche finaliser (bijective).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one uniform deviate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub step: u64,
    pub stream: u64,
}

impl RngKey {
    #[inline]
    pub fn new(seed: u64, step: u64, stream: u64) -> Self {
        Self { seed, step, stream }
    }

    #[inline]
    fn hash(&self, lane: u64) -> u64 {
        // Each absorb is a bijection in the absorbed word, so distinct streams
        // never collide for a fixed (seed, step, lane).
        let h = mix64(self.seed.wrapping_add(GOLDEN) ^ self.step.wrapping_mul(STEP_MUL).rotate_left(23));
        let h = mix64(h ^ self.stream.wrapping_mul(STREAM_MUL).rotate_left(41) ^ lane.wrapping_mul(GOLDEN));
        mix64(h.wrapping_add(GOLDEN))
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn uniform(&self) -> f64 {
        self.uniform_lane(0)
    }

    /// Independent uniform for sub-draw `lane` of the same key.
    #[inline]
    pub fn uniform_lane(&self, lane: u64) -> f64 {
        (self.hash(lane) >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Standard normal deviate via Box-Muller on lanes 1 and 2.
    pub fn standard_normal(&self) -> f64 {
        let u1 = 1.0 - self.uniform_lane(1); // (0, 1]
        let u2 = self.uniform_lane(2);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Exponential deviate with the given rate.
    pub fn exponential(&self, rate: f64) -> f64 {
        -(1.0 - self.uniform_lane(3)).ln() / rate
    }
}

/// Uniform deviate for `key`.
#[inline]
pub fn uniform(key: RngKey) -> f64 {
    key.uniform()
}

/// Log-normal deviate `exp(mu + sigma * Z)`.
pub fn sample_lognormal(key: RngKey, mu: f64, sigma: f64) -> f64 {
    (mu + sigma * key.standard_normal()).exp()
}

/// Seed for ensemble trial `trial` derived from a base seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix64(seed ^ mix64(trial.wrapping_add(GOLDEN)).rotate_left(17))
}

/// Sequential view over the counter space: `(seed, counter++, stream)`.
///
/// Used by the event-driven oracles, which consume an unbounded number of
/// draws in a data-dependent order.
#[derive(Debug, Clone)]
pub struct CounterStream {
    seed: u64,
    stream: u64,
    counter: u64,
}

impl CounterStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream, counter: 0 }
    }

    pub fn next_key(&mut self) -> RngKey {
        let key = RngKey::new(self.seed, self.counter, self.stream);
        self.counter += 1;
        key
    }

    pub fn next_uniform(&mut self) -> f64 {
        self.next_key().uniform()
    }

    /// Uniform in (0, 1].
    pub fn next_open_uniform(&mut self) -> f64 {
        1.0 - self.next_uniform()
    }

    pub fn next_exponential(&mut self, rate: f64) -> f64 {
        -self.next_open_uniform().ln() / rate
    }

    pub fn next_lognormal(&mut self, mu: f64, sigma: f64) -> f64 {
        sample_lognormal(self.next_key(), mu, sigma)
    }

    pub fn draws(&self) -> u64 {
        self.counter
    }
}

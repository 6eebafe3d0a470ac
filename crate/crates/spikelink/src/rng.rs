//! Counter-based random number streams.
//!
//! Every draw is a pure function of `(seed, stream, counter)`, so a consumer
//! only has to remember how many values it has taken from its stream. That
//! keeps per-neuron RNG state down to a single counter and makes runs
//! reproducible regardless of how work is split across threads.

/// Seeded source of independent `u64`-indexed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamRng {
    seed: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const MIX_A: u64 = 0xbf58_476d_1ce4_e5b9;
const MIX_B: u64 = 0x94d0_49bb_1331_11eb;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
    z ^ (z >> 31)
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive a child source whose streams are independent of the parent's.
    pub fn child(&self, tag: &str) -> StreamRng {
        let mut h = self.seed ^ 0x517c_c1b7_2722_0a95;
        for b in tag.as_bytes() {
            h = splitmix64(h ^ u64::from(*b)).wrapping_add(GOLDEN);
        }
        StreamRng { seed: splitmix64(h) }
    }

    /// Raw 64 random bits for position `counter` of stream `stream`.
    #[inline]
    pub fn bits(&self, stream: u64, counter: u64) -> u64 {
        let x = self
            .seed
            .wrapping_add(stream.wrapping_mul(GOLDEN))
            .wrapping_add(counter.wrapping_mul(MIX_B) ^ 0x6a09_e667_f3bc_c909);
        splitmix64(splitmix64(x).wrapping_add(GOLDEN ^ counter.rotate_left(17)))
    }

    /// Uniform value in `[0, 1)`.
    #[inline]
    pub fn u01(&self, stream: u64, counter: u64) -> f64 {
        // 53 mantissa bits; result is strictly below 1.
        (self.bits(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Stateful cursor over one stream, for call sites that draw sequentially.
#[derive(Debug, Clone, Copy)]
pub struct StreamCursor {
    rng: StreamRng,
    stream: u64,
    counter: u64,
}

impl StreamCursor {
    pub fn new(rng: StreamRng, stream: u64) -> Self {
        StreamCursor { rng, stream, counter: 0 }
    }

    #[inline]
    pub fn next_u01(&mut self) -> f64 {
        let v = self.rng.u01(self.stream, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform value in `[lo, hi)`.
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_u01()
    }

    /// Standard normal deviate (Box-Muller, consumes two uniforms).
    pub fn next_gaussian(&mut self) -> f64 {
        let u = (1.0 - self.next_u01()).max(f64::MIN_POSITIVE); // (0, 1]
        let v = self.next_u01();
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

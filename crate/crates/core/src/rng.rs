//! Counter-based random source.
//!
//! Every draw is a pure function of `(seed, stream, trial, counter)`: the
//! first three are hashed into a 64-bit key, and the `counter`-th output is
//! the SplitMix64 finalizer applied to `key + (counter + 1) * GOLDEN`. Any
//! trial can therefore be regenerated in isolation, on any thread, without
//! shared state.

use crate::normal::q_inverse;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn to_open01(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Independent sub-streams of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// H0 paths used to set the detector threshold.
    Calibration,
    /// H1 paths used to count misses.
    Alternative,
    /// Fresh H0 paths used to validate the false-alarm rate.
    HeldOut,
    /// Anything else (path generation requested directly, tests).
    Other(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Calibration => 1,
            Stream::Alternative => 2,
            Stream::HeldOut => 3,
            Stream::Other(t) => 0x100 + t,
        }
    }
}

/// Generator for one trial. Cheap to construct; holds only a key and a counter.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: Stream, trial: u64) -> Self {
        let k = mix64(seed.wrapping_add(GOLDEN));
        let k = mix64(k ^ stream.tag().wrapping_mul(0xD6E8_FEB8_6659_FD93));
        let key = mix64(k.wrapping_add(trial.wrapping_mul(GOLDEN)));
        Self { key, counter: 0 }
    }

    /// Output at an absolute counter position, without moving the cursor.
    #[inline]
    pub fn at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        to_open01(self.next_u64())
    }

    /// Standard normal draw by inverse-CDF transform.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        q_inverse(self.next_open01())
    }

    /// Standard normal draw at an absolute counter position.
    #[inline]
    pub fn gaussian_at(&self, counter: u64) -> f64 {
        q_inverse(to_open01(self.at(counter)))
    }
}

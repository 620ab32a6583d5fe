//! Small deterministic RNG used for seed derivation and noise sampling.
//!
//! Simulation and rendering draw every random quantity from a stream keyed by
//! (seed, purpose, index), so results never depend on thread scheduling.

/// SplitMix64 generator. Cheap, stateless to seed, and good enough for
/// photon noise and sample scrambling.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Derives an independent stream seed from a base seed and a path of indices.
///
/// Used to give every (view, pixel) pair its own substream: the result only
/// depends on the arguments, never on draw order elsewhere.
pub fn stream_seed(base: u64, path: &[u64]) -> u64 {
    let mut acc = SplitMix64::new(base).next_u64();
    for &word in path {
        let mixed = acc ^ word.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        acc = SplitMix64::new(mixed).next_u64();
    }
    acc
}

//! Deterministic SplitMix64 generator.
//!
//! Every sampled quantity in the crate is drawn from this generator so that
//! runs are bit-reproducible: the state update, the output mix and the
//! conversion to `f64` are fixed here and never delegated to a third-party
//! RNG whose stream may change between releases.

/// Default sampling seed (`"LIE1"` in ASCII).
pub const DEFAULT_SEED: u64 = 0x4C49_4531;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform point in the closed ball of the given radius (rejection from the cube).
    pub fn in_ball(&mut self, dim: usize, radius: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.uniform(-1.0, 1.0)).collect();
            let n2: f64 = v.iter().map(|a| a * a).sum();
            if n2 <= 1.0 {
                return v.into_iter().map(|a| a * radius).collect();
            }
        }
    }

    /// Uniform direction on the unit sphere (normalized rejection sample).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v = self.in_ball(dim, 1.0);
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-3 {
                return v.into_iter().map(|a| a / n).collect();
            }
        }
    }

    /// Independent stream for sample `index`, so parallel work stays reproducible.
    pub fn fork(seed: u64, index: u64) -> Self {
        let mut base = Self::new(seed ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03));
        let s = base.next_u64();
        Self::new(s)
    }
}

//! Deterministic pseudo-random primitives for the synthetic generator.
//!
//! Two flavours are used: a counter-based hash keyed by (seed, x, y, stream)
//! for per-pixel noise, so pixel values are independent of evaluation order,
//! and a small sequential generator for object placement.

/// SplitMix64-style finalizer. Full 64-bit avalanche.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hash of a (seed, x, y, stream) key. Used as a stateless per-pixel RNG.
#[inline]
pub fn pixel_hash(seed: u64, x: u32, y: u32, stream: u32) -> u64 {
    let key = (x as u64) << 40 | (y as u64) << 16 | stream as u64;
    mix(seed ^ mix(key))
}

/// Uniform f64 in [0, 1) from a 64-bit word.
#[inline]
pub fn to_unit(word: u64) -> f64 {
    (word >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal deviate for one (seed, x, y, stream) key, via Box-Muller.
pub fn pixel_normal(seed: u64, x: u32, y: u32, stream: u32) -> f64 {
    let w1 = pixel_hash(seed, x, y, stream);
    let w2 = mix(w1);
    // u1 kept away from zero so ln is finite.
    let u1 = (to_unit(w1)).max(1e-12);
    let u2 = to_unit(w2);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Sequential SplitMix64 generator for placement decisions.
#[derive(Debug, Clone)]
pub struct SeqRng {
    state: u64,
}

impl SeqRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        mix(self.state)
    }

    pub fn next_unit(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform in [lo, hi].
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    /// Uniform integer in [lo, hi] inclusive.
    pub fn next_int(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_hash_is_stateless() {
        assert_eq!(pixel_hash(42, 3, 7, 0), pixel_hash(42, 3, 7, 0));
        assert_ne!(pixel_hash(42, 3, 7, 0), pixel_hash(42, 3, 7, 1));
        assert_ne!(pixel_hash(42, 3, 7, 0), pixel_hash(43, 3, 7, 0));
    }

    #[test]
    fn unit_range() {
        let mut r = SeqRng::new(1);
        for _ in 0..1000 {
            let u = r.next_unit();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments_roughly_standard() {
        let n = 20_000u32;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for i in 0..n {
            let z = pixel_normal(7, i % 500, i / 500, 2);
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}

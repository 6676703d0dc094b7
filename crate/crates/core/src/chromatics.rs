//! Per-region color statistics and the three color predicates: the
//! dark-brown median gate, kurtosis-based background rejection, and the
//! blue-mean bounds.

use crate::raster::RasterImage;
use crate::regions::Region;
use alloc::vec::Vec;
use core::fmt;

/// Mean, lower median, and excess kurtosis for each of R, G, B over a
/// region's pixels. Kurtosis is `None` for zero-variance samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub median: [u8; 3],
    pub excess_kurtosis: [Option<f64>; 3],
}

/// A region pixel fell outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsError {
    pub x: u32,
    pub y: u32,
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "region pixel ({}, {}) outside image bounds", self.x, self.y)
    }
}

impl core::error::Error for BoundsError {}

/// Excess kurtosis (Fisher) with population central moments: m4/m2^2 - 3.
/// `None` when the variance is zero.
pub fn excess_kurtosis(values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 == 0.0 {
        None
    } else {
        Some(m4 / (m2 * m2) - 3.0)
    }
}

/// Channel statistics over a region's pixels.
pub fn channel_stats(img: &RasterImage, region: &Region) -> Result<ChannelStats, BoundsError> {
    let mut channels: [Vec<u8>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (x, y) in region.pixels() {
        if x >= img.width() || y >= img.height() {
            return Err(BoundsError { x, y });
        }
        let px = img.get(x, y);
        for c in 0..3 {
            channels[c].push(px[c]);
        }
    }
    let mut mean = [0.0; 3];
    let mut median = [0u8; 3];
    let mut kurt = [None; 3];
    for c in 0..3 {
        let vals = &mut channels[c];
        let n = vals.len();
        mean[c] = vals.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        vals.sort_unstable();
        // Lower median: an attainable 8-bit level even for even counts.
        median[c] = vals[(n - 1) / 2];
        let f: Vec<f64> = vals.iter().map(|&v| v as f64).collect();
        kurt[c] = excess_kurtosis(&f);
    }
    Ok(ChannelStats {
        mean,
        median,
        excess_kurtosis: kurt,
    })
}

/// Strict dark-brown gate: every channel median strictly below its limit.
pub fn is_dark_brown(s: &ChannelStats, limits: (u8, u8, u8)) -> bool {
    s.median[0] < limits.0 && s.median[1] < limits.1 && s.median[2] < limits.2
}

/// Background test: a region is background unless both green and red excess
/// kurtosis are positive. Undefined kurtosis counts as not-positive.
pub fn is_background(s: &ChannelStats) -> bool {
    let positive = |k: Option<f64>| matches!(k, Some(v) if v > 0.0);
    !(positive(s.excess_kurtosis[1]) && positive(s.excess_kurtosis[0]))
}

/// "Does not contain too much blue": mean blue at or below the limit.
pub fn blue_fraction_ok(s: &ChannelStats, max_blue_mean: f64) -> bool {
    s.mean[2] <= max_blue_mean
}

/// "Blue average is not low": mean blue at or above the limit.
pub fn blue_average_not_low(s: &ChannelStats, min_blue_mean: f64) -> bool {
    s.mean[2] >= min_blue_mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{BitMask, RasterImage};
    use crate::regions::{label_components, Connectivity};
    use alloc::vec;
    use alloc::vec::Vec;

    fn full_region(w: u32, h: u32) -> Region {
        let mask = BitMask::new(w, h, vec![true; (w * h) as usize]).unwrap();
        label_components(&mask, Connectivity::Eight).remove(0)
    }

    #[test]
    fn constant_region_stats() {
        let img = RasterImage::filled(4, 4, [10, 20, 30]).unwrap();
        let s = channel_stats(&img, &full_region(4, 4)).unwrap();
        assert_eq!(s.mean, [10.0, 20.0, 30.0]);
        assert_eq!(s.median, [10, 20, 30]);
        assert_eq!(s.excess_kurtosis, [None, None, None]);
    }

    #[test]
    fn lower_median_rule() {
        let img = RasterImage::new(
            4,
            1,
            vec![[0, 0, 0], [0, 0, 0], [0, 0, 0], [255, 0, 0]],
        )
        .unwrap();
        let s = channel_stats(&img, &full_region(4, 1)).unwrap();
        assert_eq!(s.mean[0], 63.75);
        assert_eq!(s.median[0], 0);
    }

    #[test]
    fn stats_match_direct_oracle() {
        let mut rng = crate::rng::SeqRng::new(17);
        let w = 20u32;
        let h = 10u32;
        let pixels: Vec<[u8; 3]> = (0..w * h)
            .map(|_| {
                [
                    (rng.next_u64() & 0xff) as u8,
                    (rng.next_u64() & 0xff) as u8,
                    (rng.next_u64() & 0xff) as u8,
                ]
            })
            .collect();
        let img = RasterImage::new(w, h, pixels.clone()).unwrap();
        let s = channel_stats(&img, &full_region(w, h)).unwrap();
        for c in 0..3 {
            let mut vals: Vec<f64> = pixels.iter().map(|p| p[c] as f64).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            assert!((s.mean[c] - mean).abs() < 1e-12);
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(s.median[c] as f64, vals[(vals.len() - 1) / 2]);
            // Explicit moment sums.
            let m2 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let m4 = vals.iter().map(|v| libm::pow(v - mean, 4.0)).sum::<f64>() / n;
            let k = m4 / (m2 * m2) - 3.0;
            let got = s.excess_kurtosis[c].unwrap();
            assert!((got - k).abs() / k.abs().max(1.0) < 1e-9);
        }
    }

    #[test]
    fn bounds_error() {
        let img = RasterImage::filled(2, 2, [0, 0, 0]).unwrap();
        let region = full_region(4, 4);
        assert!(channel_stats(&img, &region).is_err());
    }

    #[test]
    fn dark_brown_boundaries() {
        let mk = |m: [u8; 3]| ChannelStats {
            mean: [0.0; 3],
            median: m,
            excess_kurtosis: [None; 3],
        };
        assert!(is_dark_brown(&mk([69, 59, 54]), (70, 60, 55)));
        assert!(!is_dark_brown(&mk([70, 60, 55]), (70, 60, 55)));
        assert!(is_dark_brown(&mk([0, 0, 0]), (70, 60, 55)));
    }

    #[test]
    fn dark_brown_monotone() {
        let limits = (70u8, 60u8, 55u8);
        let base = ChannelStats {
            mean: [0.0; 3],
            median: [50, 40, 30],
            excess_kurtosis: [None; 3],
        };
        assert!(is_dark_brown(&base, limits));
        for c in 0..3 {
            let mut lowered = base;
            lowered.median[c] = lowered.median[c].saturating_sub(10);
            assert!(is_dark_brown(&lowered, limits));
        }
    }

    #[test]
    fn background_predicate() {
        let mk = |r: Option<f64>, g: Option<f64>| ChannelStats {
            mean: [0.0; 3],
            median: [0; 3],
            excess_kurtosis: [r, g, None],
        };
        // Constant region: kurtosis undefined everywhere -> background.
        assert!(is_background(&mk(None, None)));
        // G positive, R negative -> conjunction fails -> background.
        assert!(is_background(&mk(Some(-0.5), Some(2.0))));
        assert!(!is_background(&mk(Some(1.0), Some(2.0))));
    }

    #[test]
    fn heavy_tailed_region_is_not_background() {
        // One extreme outlier among many equal values gives large positive
        // kurtosis; verified through the moment oracle in excess_kurtosis.
        let mut pixels = vec![[100u8, 100, 100]; 99];
        pixels.push([255, 255, 255]);
        let img = RasterImage::new(100, 1, pixels).unwrap();
        let s = channel_stats(&img, &full_region(100, 1)).unwrap();
        assert!(s.excess_kurtosis[0].unwrap() > 0.0);
        assert!(s.excess_kurtosis[1].unwrap() > 0.0);
        assert!(!is_background(&s));
    }

    #[test]
    fn blue_bounds() {
        let mk = |b: f64| ChannelStats {
            mean: [0.0, 0.0, b],
            median: [0; 3],
            excess_kurtosis: [None; 3],
        };
        assert!(blue_fraction_ok(&mk(0.0), 120.0));
        assert!(!blue_fraction_ok(&mk(255.0), 120.0));
        assert!(blue_fraction_ok(&mk(120.0), 120.0)); // inclusive
        assert!(blue_average_not_low(&mk(255.0), 10.0));
        assert!(!blue_average_not_low(&mk(0.0), 1.0));
        assert!(blue_average_not_low(&mk(10.0), 10.0)); // inclusive
    }

    #[test]
    fn kurtosis_affine_invariance() {
        let mut rng = crate::rng::SeqRng::new(2024);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..200).map(|_| rng.next_range(0.0, 255.0)).collect();
            let k0 = excess_kurtosis(&vals).unwrap();
            let a = rng.next_range(0.1, 5.0);
            let b = rng.next_range(-50.0, 50.0);
            let mapped: Vec<f64> = vals.iter().map(|&v| a * v + b).collect();
            let k1 = excess_kurtosis(&mapped).unwrap();
            assert!((k0 - k1).abs() < 1e-9, "{k0} vs {k1}");
        }
    }
}

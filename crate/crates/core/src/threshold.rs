//! Histogram-based global thresholding: maximum-entropy (used for 200x
//! images) and the triangle method (used for 100x images), plus binarization.

use crate::raster::{BitMask, GrayImage, Histogram};
use core::fmt;

/// A computed global threshold. Foreground/background assignment is decided
/// separately by [`binarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdLevel {
    pub level: u8,
    pub method: ThresholdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMethod {
    MaxEntropy,
    Triangle,
}

/// Which side of the threshold is foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Foreground iff intensity <= level (stained material is dark).
    DarkForeground,
    /// Foreground iff intensity > level.
    LightForeground,
}

/// The histogram has fewer than two non-empty bins, so no split exists.
/// Constant images are legitimate inputs (blank section margins); callers
/// treat this as "no regions", not as a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateHistogram;

impl fmt::Display for DegenerateHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "histogram has fewer than 2 non-empty bins")
    }
}

impl core::error::Error for DegenerateHistogram {}

/// Maximum-entropy (Kapur) threshold: the split `t` maximizing the summed
/// Shannon entropies of the normalized histograms on either side.
///
/// This is the exhaustive scan over all 255 candidate splits; candidates with
/// an empty side are skipped and ties go to the smallest `t`. Natural log is
/// used throughout and zero-probability bins contribute nothing.
pub fn max_entropy_threshold(h: &Histogram) -> Result<ThresholdLevel, DegenerateHistogram> {
    if h.nonempty_bins() < 2 {
        return Err(DegenerateHistogram);
    }
    let total = h.total() as f64;
    let p: [f64; 256] = core::array::from_fn(|i| h.bins()[i] as f64 / total);

    let mut best_t = 0usize;
    let mut best_h = f64::NEG_INFINITY;
    let mut cum = 0.0f64;
    let mut cum_count = 0u64;
    let total_count = h.total();
    for t in 0..=254usize {
        cum += p[t];
        cum_count += h.bins()[t];
        if cum_count == 0 || cum_count == total_count {
            continue;
        }
        let pt = cum;
        let mut hb = 0.0;
        for i in 0..=t {
            if p[i] > 0.0 {
                let q = p[i] / pt;
                hb -= q * libm::log(q);
            }
        }
        let mut hf = 0.0;
        for i in t + 1..256 {
            if p[i] > 0.0 {
                let q = p[i] / (1.0 - pt);
                hf -= q * libm::log(q);
            }
        }
        let total_entropy = hb + hf;
        if total_entropy > best_h {
            best_h = total_entropy;
            best_t = t;
        }
    }
    Ok(ThresholdLevel {
        level: best_t as u8,
        method: ThresholdMethod::MaxEntropy,
    })
}

/// Triangle (Zack) threshold: draw a line from the histogram peak to the far
/// end of its longer tail and return the bin at maximal perpendicular
/// distance below that line.
///
/// The count axis is normalized by the peak count before the distance
/// computation, so the result is independent of image size. Ties on the
/// distance go toward the peak; a tie between tail spans picks the brighter
/// side.
pub fn triangle_threshold(h: &Histogram) -> Result<ThresholdLevel, DegenerateHistogram> {
    if h.nonempty_bins() < 2 {
        return Err(DegenerateHistogram);
    }
    let bins = h.bins();
    let peak = bins
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap();
    let lo = bins.iter().position(|&c| c > 0).unwrap();
    let hi = bins.iter().rposition(|&c| c > 0).unwrap();

    let left_span = peak - lo;
    let right_span = hi - peak;
    let tail = if left_span > right_span { lo } else { hi };

    let peak_count = bins[peak] as f64;
    // Line from (peak, 1.0) to (tail, 0.0) in normalized coordinates.
    let dx = tail as f64 - peak as f64;
    let dy = -1.0f64;
    let norm = libm::sqrt(dx * dx + dy * dy);

    let (a, b) = if peak <= tail { (peak, tail) } else { (tail, peak) };
    let mut best_t = peak;
    let mut best_d = f64::NEG_INFINITY;
    // Scan from the peak outward so distance ties resolve toward the peak.
    let candidates: &mut dyn Iterator<Item = usize> = if peak <= tail {
        &mut (a..=b)
    } else {
        &mut (a..=b).rev()
    };
    for t in candidates {
        let y = bins[t] as f64 / peak_count;
        // Signed perpendicular distance of (t, y) from the line; the
        // histogram lies below the line, so larger distance = deeper valley.
        let d = (dx * (1.0 - y) - dy * (peak as f64 - t as f64)) / norm;
        let d = if peak <= tail { d } else { -d };
        if d > best_d {
            best_d = d;
            best_t = t;
        }
    }
    Ok(ThresholdLevel {
        level: best_t as u8,
        method: ThresholdMethod::Triangle,
    })
}

/// Split a gray plane into a foreground mask at the given level.
pub fn binarize(img: &GrayImage, t: ThresholdLevel, polarity: Polarity) -> BitMask {
    let bits = img
        .pixels()
        .iter()
        .map(|&v| match polarity {
            Polarity::DarkForeground => v <= t.level,
            Polarity::LightForeground => v > t.level,
        })
        .collect();
    BitMask::new(img.width(), img.height(), bits).expect("dimensions carried from source image")
}

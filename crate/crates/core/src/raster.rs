//! Pixel-plane representations: RGB raster, grayscale plane, bit mask, and
//! intensity histogram.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// An 8-bit RGB image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

/// Error constructing a pixel plane with inconsistent dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RasterError {
    ZeroDimension,
    /// Pixel buffer length does not equal `width * height`.
    LengthMismatch {
        expected: usize,
        actual: usize,
    },
}

impl fmt::Display for RasterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterError::ZeroDimension => write!(f, "image dimensions must be at least 1x1"),
            RasterError::LengthMismatch { expected, actual } => write!(
                f,
                "pixel buffer length {actual} does not match width*height = {expected}"
            ),
        }
    }
}

impl core::error::Error for RasterError {}

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self, RasterError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Constant-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, RasterError> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![rgb; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.pixels[y as usize * self.width as usize + x as usize] = rgb;
    }

    /// Rec.601 luma reduction: `round(0.299 R + 0.587 G + 0.114 B)`.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self
            .pixels
            .iter()
            .map(|&[r, g, b]| {
                let y = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                let v = libm::round(y);
                if v >= 255.0 {
                    255
                } else if v <= 0.0 {
                    0
                } else {
                    v as u8
                }
            })
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// An 8-bit single-channel image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RasterError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self, RasterError> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![value; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Per-level pixel tally over the whole plane.
    pub fn histogram(&self) -> Histogram {
        let mut bins = [0u64; 256];
        for &v in &self.pixels {
            bins[v as usize] += 1;
        }
        Histogram { bins }
    }
}

/// Foreground/background flags for every pixel of a source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, RasterError> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self, RasterError> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![false; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }
}

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: [u64; 256],
}

impl Histogram {
    pub fn from_bins(bins: [u64; 256]) -> Self {
        Self { bins }
    }

    pub fn bins(&self) -> &[u64; 256] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn nonempty_bins(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<(), RasterError> {
    if width == 0 || height == 0 {
        return Err(RasterError::ZeroDimension);
    }
    let expected = width as usize * height as usize;
    if len != expected {
        return Err(RasterError::LengthMismatch {
            expected,
            actual: len,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gray_extremes() {
        let img = RasterImage::new(2, 1, vec![[255, 255, 255], [0, 0, 0]]).unwrap();
        let g = img.to_gray();
        assert_eq!(g.pixels(), &[255, 0]);
    }

    #[test]
    fn gray_hand_evaluated() {
        // round(0.299*70 + 0.587*60 + 0.114*55) = round(62.42) = 62
        let img = RasterImage::new(1, 1, vec![[70, 60, 55]]).unwrap();
        assert_eq!(img.to_gray().pixels(), &[62]);
    }

    #[test]
    fn histogram_constant() {
        let g = GrayImage::filled(5, 2, 7).unwrap();
        let h = g.histogram();
        assert_eq!(h.bins()[7], 10);
        assert_eq!(h.total(), 10);
        assert_eq!(h.nonempty_bins(), 1);
    }

    #[test]
    fn histogram_two_values() {
        let g = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        let h = g.histogram();
        assert_eq!(h.bins()[0], 1);
        assert_eq!(h.bins()[255], 1);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn histogram_matches_tally_oracle() {
        // 64x64 pseudo-random plane, tallied independently per pixel.
        let mut pixels = vec![0u8; 64 * 64];
        let mut state = 0x9e3779b97f4a7c15u64;
        for p in pixels.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *p = (state >> 56) as u8;
        }
        let g = GrayImage::new(64, 64, pixels.clone()).unwrap();
        let h = g.histogram();
        let mut oracle = [0u64; 256];
        for &v in &pixels {
            oracle[v as usize] += 1;
        }
        assert_eq!(h.bins(), &oracle);
    }

    #[test]
    fn dimension_checks() {
        assert!(RasterImage::new(0, 4, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(BitMask::new(2, 2, vec![false; 4]).is_ok());
    }

    #[test]
    fn gray_monotone_under_brightening() {
        let base = [[10u8, 20, 30], [100, 110, 120], [7, 7, 7]];
        for k in [1u8, 5, 40] {
            for px in base {
                let a = RasterImage::new(1, 1, vec![px]).unwrap().to_gray().pixels()[0];
                let brighter = [px[0] + k, px[1] + k, px[2] + k];
                let b = RasterImage::new(1, 1, vec![brighter]).unwrap().to_gray().pixels()[0];
                assert!(b >= a);
            }
        }
    }
}

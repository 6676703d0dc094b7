//! Core image-analysis pipeline for counting nongrowing follicles (NGFs) in
//! micrographs of PCNA-stained ovarian tissue.
//!
//! The pipeline is pure and allocation-only (`no_std` + `alloc`): decoding,
//! encoding, file formats and the CLI live in the companion `follicle-cli`
//! crate. Everything here is deterministic — identical inputs give identical
//! outputs regardless of platform or thread count.
//!
//! Pipeline stages:
//!
//! 1. [`raster`] — pixel planes (RGB, gray, bit mask) and histograms.
//! 2. [`threshold`] — maximum-entropy and triangle global thresholds.
//! 3. [`regions`] — connected components and particle shape descriptors.
//! 4. [`chromatics`] — per-region color statistics and color predicates.
//! 5. [`detector`] — the 100x and 200x detection pipelines with
//!    conservative/liberal settings profiles.
//! 6. [`census`] — per-image and aggregate count arithmetic, human-count
//!    comparison, and overlay rendering.
//! 7. [`synthlab`] — seeded synthetic micrograph generator with exact
//!    ground truth, used for calibration and regression.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod census;
pub mod chromatics;
pub mod detector;
pub mod raster;
pub mod regions;
pub mod rng;
pub mod synthlab;
pub mod threshold;

pub use raster::{BitMask, GrayImage, Histogram, RasterImage};

//! The magnification-specific detection pipelines and NGF classification
//! rules, parameterized by conservative/liberal settings profiles.
//!
//! At 200x: a maximum-entropy threshold splits the gray plane; nucleus
//! candidates come from the dark side (size, roundness, and low-blue
//! filters), zona pellucida candidates from the light side (size,
//! circularity, blue and background filters). A nucleus inside a ZP makes a
//! follicle; a ZP alone still counts (the section missed the nucleus); a
//! nucleus alone is a false positive and is dropped.
//!
//! At 100x: a triangle threshold, the same size filter, liberal shape
//! filters, then the strict dark-brown median gate.

use crate::chromatics::{
    blue_average_not_low, blue_fraction_ok, channel_stats, is_background, is_dark_brown,
    ChannelStats,
};
use crate::raster::RasterImage;
use crate::regions::{
    convex_hull, filter_by_size, label_components, shape_descriptors, Connectivity, Region,
    ShapeDescriptors,
};
use crate::threshold::{
    binarize, max_entropy_threshold, triangle_threshold, Polarity, ThresholdLevel,
};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Magnification {
    X100,
    X200,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Conservative,
    Liberal,
}

/// One named parameter set driving every filter of a pipeline.
///
/// The published method gives only qualitative bounds plus the dark-brown
/// median limits; the numeric defaults here are calibrated against the
/// synthetic corpus and shipped as config, not ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSettings {
    pub magnification: Magnification,
    pub strictness: Strictness,
    /// Accepted nucleus region area, pixels (min, max).
    pub nucleus_area: (usize, usize),
    /// Accepted ZP region area, pixels (min, max). 200x only.
    pub zp_area: (usize, usize),
    pub max_aspect_ratio: f64,
    pub min_mod_ratio: f64,
    pub min_sphericity: f64,
    /// Upper bound on nucleus mean blue ("not too much blue").
    pub max_blue_mean: f64,
    /// Lower bound on ZP mean blue ("blue average is not low").
    pub min_blue_mean_zp: f64,
    pub min_circularity_zp: f64,
    pub min_compactness_100: f64,
    pub min_circularity_100: f64,
    pub max_aspect_ratio_100: f64,
    /// Strict upper limits on nucleus channel medians (R, G, B).
    pub brown_median_limits: (u8, u8, u8),
    /// Slack around the ZP hull for nucleus association, pixels.
    pub association_radius: f64,
}

impl DetectionSettings {
    /// Shipped profile for a (magnification, strictness) pair.
    pub fn builtin(magnification: Magnification, strictness: Strictness) -> Self {
        let s = match (magnification, strictness) {
            (Magnification::X200, Strictness::Liberal) => DetectionSettings {
                magnification,
                strictness,
                nucleus_area: (100, 1000),
                zp_area: (500, 6000),
                max_aspect_ratio: 2.2,
                min_mod_ratio: 0.35,
                min_sphericity: 0.45,
                max_blue_mean: 60.0,
                min_blue_mean_zp: 150.0,
                min_circularity_zp: 0.45,
                min_compactness_100: 0.0,
                min_circularity_100: 0.0,
                max_aspect_ratio_100: f64::INFINITY,
                brown_median_limits: (70, 60, 55),
                association_radius: 5.0,
            },
            (Magnification::X200, Strictness::Conservative) => DetectionSettings {
                magnification,
                strictness,
                nucleus_area: (150, 800),
                zp_area: (700, 4500),
                max_aspect_ratio: 1.6,
                min_mod_ratio: 0.50,
                min_sphericity: 0.60,
                max_blue_mean: 55.0,
                min_blue_mean_zp: 170.0,
                min_circularity_zp: 0.50,
                min_compactness_100: 0.0,
                min_circularity_100: 0.0,
                max_aspect_ratio_100: f64::INFINITY,
                brown_median_limits: (70, 60, 55),
                association_radius: 5.0,
            },
            (Magnification::X100, Strictness::Liberal) => DetectionSettings {
                magnification,
                strictness,
                nucleus_area: (25, 250),
                zp_area: (125, 1500),
                max_aspect_ratio: 2.2,
                min_mod_ratio: 0.35,
                min_sphericity: 0.45,
                max_blue_mean: 60.0,
                min_blue_mean_zp: 150.0,
                min_circularity_zp: 0.30,
                min_compactness_100: 0.40,
                min_circularity_100: 0.30,
                max_aspect_ratio_100: 2.5,
                brown_median_limits: (70, 60, 55),
                association_radius: 3.0,
            },
            (Magnification::X100, Strictness::Conservative) => DetectionSettings {
                magnification,
                strictness,
                nucleus_area: (38, 200),
                zp_area: (175, 1125),
                max_aspect_ratio: 1.6,
                min_mod_ratio: 0.50,
                min_sphericity: 0.60,
                max_blue_mean: 55.0,
                min_blue_mean_zp: 170.0,
                min_circularity_zp: 0.45,
                min_compactness_100: 0.55,
                min_circularity_100: 0.45,
                max_aspect_ratio_100: 1.8,
                brown_median_limits: (70, 60, 55),
                association_radius: 3.0,
            },
        };
        debug_assert!(s.validate().is_ok());
        s
    }

    pub fn validate(&self) -> Result<(), SettingsError> {
        if self.nucleus_area.0 == 0
            || self.nucleus_area.0 > self.nucleus_area.1
            || self.zp_area.0 == 0
            || self.zp_area.0 > self.zp_area.1
        {
            return Err(SettingsError::InvalidBounds);
        }
        if self.max_aspect_ratio < 1.0 || self.max_aspect_ratio_100 < 1.0 {
            return Err(SettingsError::InvalidBounds);
        }
        Ok(())
    }

    /// True when `self` accepts no region that `liberal` would reject, field
    /// by field (the conservative-inside-liberal nesting invariant).
    pub fn is_nested_in(&self, liberal: &DetectionSettings) -> bool {
        self.magnification == liberal.magnification
            && self.nucleus_area.0 >= liberal.nucleus_area.0
            && self.nucleus_area.1 <= liberal.nucleus_area.1
            && self.zp_area.0 >= liberal.zp_area.0
            && self.zp_area.1 <= liberal.zp_area.1
            && self.max_aspect_ratio <= liberal.max_aspect_ratio
            && self.min_mod_ratio >= liberal.min_mod_ratio
            && self.min_sphericity >= liberal.min_sphericity
            && self.max_blue_mean <= liberal.max_blue_mean
            && self.min_blue_mean_zp >= liberal.min_blue_mean_zp
            && self.min_circularity_zp >= liberal.min_circularity_zp
            && self.min_compactness_100 >= liberal.min_compactness_100
            && self.min_circularity_100 >= liberal.min_circularity_100
            && self.max_aspect_ratio_100 <= liberal.max_aspect_ratio_100
            && self.brown_median_limits.0 <= liberal.brown_median_limits.0
            && self.brown_median_limits.1 <= liberal.brown_median_limits.1
            && self.brown_median_limits.2 <= liberal.brown_median_limits.2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettingsError {
    /// A profile's magnification does not match the requested pipeline.
    MagnificationMismatch,
    /// The conservative profile is not nested inside the liberal one.
    NotNested,
    InvalidBounds,
}

impl fmt::Display for SettingsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingsError::MagnificationMismatch => {
                write!(f, "profile magnification does not match the pipeline")
            }
            SettingsError::NotNested => write!(
                f,
                "conservative profile is not nested inside the liberal profile"
            ),
            SettingsError::InvalidBounds => write!(f, "profile bounds are invalid"),
        }
    }
}

impl core::error::Error for SettingsError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    Nucleus,
    ZonaPellucida,
}

/// A region that passed all filters for its kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub region: Region,
    pub stats: ChannelStats,
    pub shape: ShapeDescriptors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionKind {
    NucleusWithZp,
    ZpOnly,
}

/// One classified NGF. At 100x the pipeline has no ZP branch, so detections
/// carry a nucleus only (kind `NucleusWithZp`, `zp` absent).
#[derive(Debug, Clone, PartialEq)]
pub struct FollicleDetection {
    pub kind: DetectionKind,
    pub center: (f64, f64),
    pub nucleus: Option<Candidate>,
    pub zp: Option<Candidate>,
}

/// Result of running one pipeline on one image, with the intermediates
/// needed for overlay rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput {
    pub detections: Vec<FollicleDetection>,
    pub nuclei_candidates: Vec<Candidate>,
    pub zp_candidates: Vec<Candidate>,
    pub threshold: Option<ThresholdLevel>,
    /// Set when the image was constant (no threshold exists); the empty
    /// detection list is then a warning, not a failure.
    pub degenerate: bool,
}

impl DetectionOutput {
    fn degenerate() -> Self {
        DetectionOutput {
            detections: Vec::new(),
            nuclei_candidates: Vec::new(),
            zp_candidates: Vec::new(),
            threshold: None,
            degenerate: true,
        }
    }
}

/// 200x pipeline: maximum-entropy threshold, nucleus and ZP candidate
/// extraction, then nucleus/ZP association.
pub fn detect_200(img: &RasterImage, s: &DetectionSettings) -> Result<DetectionOutput, SettingsError> {
    if s.magnification != Magnification::X200 {
        return Err(SettingsError::MagnificationMismatch);
    }
    s.validate()?;
    let gray = img.to_gray();
    let hist = gray.histogram();
    let Ok(level) = max_entropy_threshold(&hist) else {
        return Ok(DetectionOutput::degenerate());
    };

    let dark = binarize(&gray, level, Polarity::DarkForeground);
    let mut nuclei = Vec::new();
    let dark_regions = label_components(&dark, Connectivity::Eight);
    for region in filter_by_size(dark_regions, s.nucleus_area.0, s.nucleus_area.1)
        .expect("validated bounds")
    {
        let shape = shape_descriptors(&region);
        if shape.aspect_ratio > s.max_aspect_ratio
            || shape.mod_ratio < s.min_mod_ratio
            || shape.sphericity < s.min_sphericity
        {
            continue;
        }
        let stats = channel_stats(img, &region).expect("regions lie within the image");
        if !blue_fraction_ok(&stats, s.max_blue_mean) {
            continue;
        }
        nuclei.push(Candidate {
            kind: CandidateKind::Nucleus,
            region,
            stats,
            shape,
        });
    }

    let light = binarize(&gray, level, Polarity::LightForeground);
    let mut zps = Vec::new();
    let light_regions = label_components(&light, Connectivity::Eight);
    for region in
        filter_by_size(light_regions, s.zp_area.0, s.zp_area.1).expect("validated bounds")
    {
        let shape = shape_descriptors(&region);
        if shape.circularity < s.min_circularity_zp {
            continue;
        }
        let stats = channel_stats(img, &region).expect("regions lie within the image");
        if !blue_average_not_low(&stats, s.min_blue_mean_zp) || is_background(&stats) {
            continue;
        }
        zps.push(Candidate {
            kind: CandidateKind::ZonaPellucida,
            region,
            stats,
            shape,
        });
    }

    let detections = associate_nuclei_zp(&nuclei, &zps, s.association_radius);
    Ok(DetectionOutput {
        detections,
        nuclei_candidates: nuclei,
        zp_candidates: zps,
        threshold: Some(level),
        degenerate: false,
    })
}

/// 100x pipeline: triangle threshold, size filter, liberal shape filters,
/// then the strict dark-brown median gate.
pub fn detect_100(img: &RasterImage, s: &DetectionSettings) -> Result<DetectionOutput, SettingsError> {
    if s.magnification != Magnification::X100 {
        return Err(SettingsError::MagnificationMismatch);
    }
    s.validate()?;
    let gray = img.to_gray();
    let hist = gray.histogram();
    let Ok(level) = triangle_threshold(&hist) else {
        return Ok(DetectionOutput::degenerate());
    };

    let dark = binarize(&gray, level, Polarity::DarkForeground);
    let mut nuclei = Vec::new();
    let mut detections = Vec::new();
    let regions = label_components(&dark, Connectivity::Eight);
    for region in
        filter_by_size(regions, s.nucleus_area.0, s.nucleus_area.1).expect("validated bounds")
    {
        let shape = shape_descriptors(&region);
        if shape.compactness < s.min_compactness_100
            || shape.circularity < s.min_circularity_100
            || shape.aspect_ratio > s.max_aspect_ratio_100
        {
            continue;
        }
        let stats = channel_stats(img, &region).expect("regions lie within the image");
        if !is_dark_brown(&stats, s.brown_median_limits) {
            continue;
        }
        let candidate = Candidate {
            kind: CandidateKind::Nucleus,
            region,
            stats,
            shape,
        };
        detections.push(FollicleDetection {
            kind: DetectionKind::NucleusWithZp,
            center: candidate.region.centroid,
            nucleus: Some(candidate.clone()),
            zp: None,
        });
        nuclei.push(candidate);
    }

    Ok(DetectionOutput {
        detections,
        nuclei_candidates: nuclei,
        zp_candidates: Vec::new(),
        threshold: Some(level),
        degenerate: false,
    })
}

/// Pair nuclei with ZP regions and classify.
///
/// A nucleus pairs with a ZP iff its centroid lies inside the ZP's filled
/// convex hull or within `radius` of it. Every ZP yields exactly one
/// detection (extra nuclei inside one ZP are absorbed); unpaired nuclei are
/// dropped.
pub fn associate_nuclei_zp(
    nuclei: &[Candidate],
    zps: &[Candidate],
    radius: f64,
) -> Vec<FollicleDetection> {
    let mut used = alloc::vec![false; nuclei.len()];
    let mut out = Vec::with_capacity(zps.len());
    for zp in zps {
        let hull_pts: Vec<(f64, f64)> = zp
            .region
            .boundary
            .iter()
            .map(|&(x, y)| (x as f64, y as f64))
            .collect();
        let hull = convex_hull(&hull_pts);
        let mut paired: Option<usize> = None;
        for (i, n) in nuclei.iter().enumerate() {
            if used[i] {
                continue;
            }
            if hull_distance(&hull, n.region.centroid) <= radius {
                used[i] = true;
                if paired.is_none() {
                    paired = Some(i);
                }
            }
        }
        match paired {
            Some(i) => out.push(FollicleDetection {
                kind: DetectionKind::NucleusWithZp,
                center: nuclei[i].region.centroid,
                nucleus: Some(nuclei[i].clone()),
                zp: Some(zp.clone()),
            }),
            None => out.push(FollicleDetection {
                kind: DetectionKind::ZpOnly,
                center: zp.region.centroid,
                nucleus: None,
                zp: Some(zp.clone()),
            }),
        }
    }
    out
}

/// Distance from a point to a filled convex polygon: 0 inside, nearest edge
/// distance outside. Degenerate hulls fall back to nearest vertex.
fn hull_distance(hull: &[(f64, f64)], p: (f64, f64)) -> f64 {
    if hull.is_empty() {
        return f64::INFINITY;
    }
    if hull.len() < 3 {
        return hull
            .iter()
            .map(|&(x, y)| libm::hypot(p.0 - x, p.1 - y))
            .fold(f64::INFINITY, f64::min);
    }
    let mut inside = true;
    let mut min_edge = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross < 0.0 {
            inside = false;
        }
        min_edge = min_edge.min(segment_distance(a, b, p));
    }
    if inside {
        0.0
    } else {
        min_edge
    }
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    };
    libm::hypot(p.0 - (a.0 + t * abx), p.1 - (a.1 + t * aby))
}

/// Conservative and liberal profiles for one magnification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingsPair {
    pub conservative: DetectionSettings,
    pub liberal: DetectionSettings,
}

impl SettingsPair {
    pub fn builtin(magnification: Magnification) -> Self {
        SettingsPair {
            conservative: DetectionSettings::builtin(magnification, Strictness::Conservative),
            liberal: DetectionSettings::builtin(magnification, Strictness::Liberal),
        }
    }

    pub fn validate(&self, magnification: Magnification) -> Result<(), SettingsError> {
        if self.conservative.magnification != magnification
            || self.liberal.magnification != magnification
        {
            return Err(SettingsError::MagnificationMismatch);
        }
        self.conservative.validate()?;
        self.liberal.validate()?;
        if !self.conservative.is_nested_in(&self.liberal) {
            return Err(SettingsError::NotNested);
        }
        Ok(())
    }
}

/// Both pipeline runs for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct CountedImage {
    pub conservative: DetectionOutput,
    pub liberal: DetectionOutput,
}

impl CountedImage {
    pub fn con(&self) -> u64 {
        self.conservative.detections.len() as u64
    }

    pub fn lib(&self) -> u64 {
        self.liberal.detections.len() as u64
    }

    /// The estimator: average of the two counts.
    pub fn mean(&self) -> f64 {
        (self.con() + self.lib()) as f64 / 2.0
    }
}

/// Run the pipeline twice (conservative, then liberal) and keep both results.
pub fn count_image(
    img: &RasterImage,
    magnification: Magnification,
    profiles: &SettingsPair,
) -> Result<CountedImage, SettingsError> {
    profiles.validate(magnification)?;
    let run = |s: &DetectionSettings| match magnification {
        Magnification::X100 => detect_100(img, s),
        Magnification::X200 => detect_200(img, s),
    };
    Ok(CountedImage {
        conservative: run(&profiles.conservative)?,
        liberal: run(&profiles.liberal)?,
    })
}

//! Aggregation across images, human-count comparison arithmetic, and
//! overlay rendering.
//!
//! Display rounding is half-up to one decimal; all totals are formed from
//! exact integer counts before any rounding.

use crate::detector::{DetectionKind, DetectionOutput, FollicleDetection};
use crate::raster::{BitMask, RasterImage};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Automated counts for one image: conservative, liberal, and their mean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageCount {
    pub image_id: String,
    pub con: u64,
    pub lib: u64,
}

impl ImageCount {
    pub fn new(image_id: impl Into<String>, con: u64, lib: u64) -> Self {
        ImageCount {
            image_id: image_id.into(),
            con,
            lib,
        }
    }

    /// (con + lib) / 2, exact to 0.5 granularity.
    pub fn mean(&self) -> f64 {
        (self.con + self.lib) as f64 / 2.0
    }
}

/// Per-expert conservative/liberal counts for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanCounts {
    pub image_id: String,
    /// One (con, lib) pair per expert, expert order fixed across images.
    pub experts: Vec<(u64, u64)>,
}

impl HumanCounts {
    /// Mean over experts of per-expert means, as an exact rational
    /// (numerator, denominator): sum of (con+lib) over 2E.
    pub fn mean_ratio(&self) -> (u64, u64) {
        let num = self.experts.iter().map(|&(c, l)| c + l).sum();
        (num, 2 * self.experts.len() as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CensusError {
    DuplicateImage(String),
    /// Image id sets of the two inputs differ; offenders listed.
    JoinError {
        missing_auto: Vec<String>,
        missing_human: Vec<String>,
    },
    NoExperts,
}

impl fmt::Display for CensusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CensusError::DuplicateImage(id) => write!(f, "duplicate image id {id:?}"),
            CensusError::JoinError {
                missing_auto,
                missing_human,
            } => write!(
                f,
                "image sets do not match; missing from automated: {missing_auto:?}, \
                 missing from human counts: {missing_human:?}"
            ),
            CensusError::NoExperts => write!(f, "human counts contain no experts"),
        }
    }
}

impl core::error::Error for CensusError {}

/// Round `num/den` half-up to one decimal, returning tenths.
/// Integer arithmetic throughout: floor(10 n / d + 1/2) = floor((20n + d) / 2d).
pub fn round_half_up_tenths(num: u64, den: u64) -> u64 {
    (20 * num + den) / (2 * den)
}

/// Format a tenths value as "12.3".
pub fn format_tenths(tenths: u64) -> String {
    alloc::format!("{}.{}", tenths / 10, tenths % 10)
}

/// Round a float half-away-from-zero to one decimal.
pub fn round_half_up_1dp(x: f64) -> f64 {
    libm::copysign(libm::floor(libm::fabs(x) * 10.0 + 0.5) / 10.0, x)
}

/// Component-wise totals. Mean-of-totals equals the sum of per-image means.
pub fn aggregate(counts: &[ImageCount]) -> Result<ImageCount, CensusError> {
    let mut seen: Vec<&str> = Vec::with_capacity(counts.len());
    let mut con = 0u64;
    let mut lib = 0u64;
    for c in counts {
        if seen.contains(&c.image_id.as_str()) {
            return Err(CensusError::DuplicateImage(c.image_id.clone()));
        }
        seen.push(&c.image_id);
        con += c.con;
        lib += c.lib;
    }
    Ok(ImageCount::new("TOTAL", con, lib))
}

/// Per-image and total human means as exact rationals (tenths after
/// half-up rounding are derived by the caller via [`round_half_up_tenths`]).
pub fn human_mean(rows: &[HumanCounts]) -> Result<(Vec<(u64, u64)>, (u64, u64)), CensusError> {
    if rows.iter().any(|r| r.experts.is_empty()) {
        return Err(CensusError::NoExperts);
    }
    let per_image: Vec<(u64, u64)> = rows.iter().map(|r| r.mean_ratio()).collect();
    // Totals from unrounded values: sum over images of (con+lib) per expert,
    // then the same mean-of-means.
    let e = rows.first().map(|r| r.experts.len()).unwrap_or(1) as u64;
    let total_num: u64 = per_image.iter().map(|&(n, _)| n).sum();
    Ok((per_image, (total_num, 2 * e)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub image_id: String,
    pub auto: ImageCount,
    /// Exact human mean as (numerator, denominator).
    pub human_mean: (u64, u64),
    /// Display value, tenths (half-up).
    pub human_mean_tenths: u64,
}

/// Everything needed to print the per-image table, the totals row, and the
/// agreement verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub auto_total: ImageCount,
    /// Per-expert (con, lib) totals in expert order.
    pub expert_totals: Vec<(u64, u64)>,
    /// Exact human mean of the totals row.
    pub human_mean_total: (u64, u64),
    pub human_mean_total_tenths: u64,
    /// Automated conservative total vs mean human conservative total, percent.
    pub dev_conservative_pct: f64,
    /// Automated liberal total vs mean human liberal total, percent.
    pub dev_liberal_pct: f64,
    /// Automated mean total vs human mean total, percent.
    pub dev_mean_pct: f64,
    /// |conservative deviation| within the 5% band.
    pub within_5_conservative: bool,
    /// |liberal deviation| within the 10% band.
    pub within_10_liberal: bool,
}

/// Join automated and human counts by image id and compute the comparison
/// table plus agreement verdicts.
pub fn compare(auto: &[ImageCount], humans: &[HumanCounts]) -> Result<ComparisonReport, CensusError> {
    let missing_auto: Vec<String> = humans
        .iter()
        .filter(|h| !auto.iter().any(|a| a.image_id == h.image_id))
        .map(|h| h.image_id.clone())
        .collect();
    let missing_human: Vec<String> = auto
        .iter()
        .filter(|a| !humans.iter().any(|h| h.image_id == a.image_id))
        .map(|a| a.image_id.clone())
        .collect();
    if !missing_auto.is_empty() || !missing_human.is_empty() {
        return Err(CensusError::JoinError {
            missing_auto,
            missing_human,
        });
    }
    if humans.iter().any(|h| h.experts.is_empty()) {
        return Err(CensusError::NoExperts);
    }

    let mut rows = Vec::with_capacity(auto.len());
    for a in auto {
        let h = humans
            .iter()
            .find(|h| h.image_id == a.image_id)
            .expect("join checked above");
        let mean = h.mean_ratio();
        rows.push(ComparisonRow {
            image_id: a.image_id.clone(),
            auto: a.clone(),
            human_mean: mean,
            human_mean_tenths: round_half_up_tenths(mean.0, mean.1),
        });
    }

    let auto_total = aggregate(auto)?;
    let n_experts = humans[0].experts.len();
    let mut expert_totals = alloc::vec![(0u64, 0u64); n_experts];
    for h in humans {
        for (i, &(c, l)) in h.experts.iter().enumerate() {
            expert_totals[i].0 += c;
            expert_totals[i].1 += l;
        }
    }
    let total_num: u64 = expert_totals.iter().map(|&(c, l)| c + l).sum();
    let human_mean_total = (total_num, 2 * n_experts as u64);

    let human_con_mean =
        expert_totals.iter().map(|&(c, _)| c as f64).sum::<f64>() / n_experts as f64;
    let human_lib_mean =
        expert_totals.iter().map(|&(_, l)| l as f64).sum::<f64>() / n_experts as f64;
    let human_mean_val = human_mean_total.0 as f64 / human_mean_total.1 as f64;

    let pct = |auto_v: f64, human_v: f64| {
        if human_v == 0.0 {
            if auto_v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (auto_v - human_v) / human_v * 100.0
        }
    };
    let dev_conservative_pct = pct(auto_total.con as f64, human_con_mean);
    let dev_liberal_pct = pct(auto_total.lib as f64, human_lib_mean);
    let dev_mean_pct = pct(auto_total.mean(), human_mean_val);

    Ok(ComparisonReport {
        rows,
        auto_total,
        expert_totals,
        human_mean_total,
        human_mean_total_tenths: round_half_up_tenths(human_mean_total.0, human_mean_total.1),
        dev_conservative_pct,
        dev_liberal_pct,
        dev_mean_pct,
        within_5_conservative: dev_conservative_pct.abs() <= 5.0,
        within_10_liberal: dev_liberal_pct.abs() <= 10.0,
    })
}

/// Which intermediate an overlay visualizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlayStage {
    ThresholdMask,
    NucleiCandidates,
    ZpCandidates,
    Final,
}

/// Overlay palette (documented, fixed): nuclei boundaries red, ZP boundaries
/// green, detection markers magenta, threshold mask white-on-black, legend
/// patch in the stage color at the top-left corner.
const COLOR_NUCLEUS: [u8; 3] = [220, 40, 40];
const COLOR_ZP: [u8; 3] = [40, 180, 70];
const COLOR_MARKER: [u8; 3] = [230, 40, 220];

fn stage_color(stage: OverlayStage) -> [u8; 3] {
    match stage {
        OverlayStage::ThresholdMask => [255, 255, 255],
        OverlayStage::NucleiCandidates => COLOR_NUCLEUS,
        OverlayStage::ZpCandidates => COLOR_ZP,
        OverlayStage::Final => COLOR_MARKER,
    }
}

fn paint_boundary(img: &mut RasterImage, boundary: &[(u32, u32)], color: [u8; 3]) {
    for &(x, y) in boundary {
        if x < img.width() && y < img.height() {
            img.set(x, y, color);
        }
    }
}

fn paint_marker(img: &mut RasterImage, center: (f64, f64), color: [u8; 3]) {
    let cx = libm::round(center.0) as i64;
    let cy = libm::round(center.1) as i64;
    for d in -4i64..=4 {
        for (x, y) in [(cx + d, cy), (cx, cy + d)] {
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.set(x as u32, y as u32, color);
            }
        }
    }
}

fn paint_legend(img: &mut RasterImage, stage: OverlayStage) {
    let color = stage_color(stage);
    for y in 0..4u32.min(img.height()) {
        for x in 0..4u32.min(img.width()) {
            img.set(x, y, color);
        }
    }
}

/// Paint detection evidence over a copy of the source image.
///
/// `Final` draws all candidate boundaries plus a cross marker per detection;
/// the candidate stages draw only their boundaries. A corner legend patch is
/// always present, so a zero-detection overlay differs from the input only
/// there.
pub fn render_overlay(
    img: &RasterImage,
    dets: &[FollicleDetection],
    stage: OverlayStage,
) -> RasterImage {
    let mut out = img.clone();
    for det in dets {
        let nucleus_boundary = det.nucleus.as_ref().map(|c| &c.region.boundary);
        let zp_boundary = det.zp.as_ref().map(|c| &c.region.boundary);
        match stage {
            OverlayStage::NucleiCandidates => {
                if let Some(b) = nucleus_boundary {
                    paint_boundary(&mut out, b, COLOR_NUCLEUS);
                }
            }
            OverlayStage::ZpCandidates => {
                if let Some(b) = zp_boundary {
                    paint_boundary(&mut out, b, COLOR_ZP);
                }
            }
            OverlayStage::Final => {
                if let Some(b) = nucleus_boundary {
                    paint_boundary(&mut out, b, COLOR_NUCLEUS);
                }
                if let Some(b) = zp_boundary {
                    paint_boundary(&mut out, b, COLOR_ZP);
                }
                let color = match det.kind {
                    DetectionKind::NucleusWithZp => COLOR_MARKER,
                    DetectionKind::ZpOnly => COLOR_ZP,
                };
                paint_marker(&mut out, det.center, color);
            }
            OverlayStage::ThresholdMask => {}
        }
    }
    paint_legend(&mut out, stage);
    out
}

/// Render a binarization mask as a black/white image (panel-b style).
pub fn render_mask(mask: &BitMask) -> RasterImage {
    let pixels = mask
        .bits()
        .iter()
        .map(|&b| if b { [255, 255, 255] } else { [0, 0, 0] })
        .collect();
    RasterImage::new(mask.width(), mask.height(), pixels).expect("mask dimensions are valid")
}

/// The full set of overlays for one pipeline run, keyed by stage.
pub fn overlay_stages(
    img: &RasterImage,
    output: &DetectionOutput,
) -> Vec<(OverlayStage, RasterImage)> {
    let mut out = Vec::new();
    let mut nuclei_dets: Vec<FollicleDetection> = Vec::new();
    for c in &output.nuclei_candidates {
        nuclei_dets.push(FollicleDetection {
            kind: DetectionKind::NucleusWithZp,
            center: c.region.centroid,
            nucleus: Some(c.clone()),
            zp: None,
        });
    }
    let mut zp_dets: Vec<FollicleDetection> = Vec::new();
    for c in &output.zp_candidates {
        zp_dets.push(FollicleDetection {
            kind: DetectionKind::ZpOnly,
            center: c.region.centroid,
            nucleus: None,
            zp: Some(c.clone()),
        });
    }
    out.push((
        OverlayStage::NucleiCandidates,
        render_overlay(img, &nuclei_dets, OverlayStage::NucleiCandidates),
    ));
    out.push((
        OverlayStage::ZpCandidates,
        render_overlay(img, &zp_dets, OverlayStage::ZpCandidates),
    ));
    out.push((
        OverlayStage::Final,
        render_overlay(img, &output.detections, OverlayStage::Final),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn image_count_mean_granularity() {
        assert_eq!(ImageCount::new("6", 0, 1).mean(), 0.5);
        assert_eq!(ImageCount::new("10", 5, 9).mean(), 7.0);
        assert_eq!(ImageCount::new("x", 0, 0).mean(), 0.0);
    }

    #[test]
    fn aggregate_cases() {
        assert_eq!(aggregate(&[]).unwrap(), ImageCount::new("TOTAL", 0, 0));
        let single = vec![ImageCount::new("a", 2, 4)];
        let t = aggregate(&single).unwrap();
        assert_eq!((t.con, t.lib, t.mean()), (2, 4, 3.0));
        let dup = vec![ImageCount::new("a", 1, 1), ImageCount::new("a", 2, 2)];
        assert!(matches!(
            aggregate(&dup),
            Err(CensusError::DuplicateImage(_))
        ));
    }

    #[test]
    fn human_mean_image_10() {
        // Experts (6,8), (5,6), (6,7): (7 + 5.5 + 6.5)/3 = 6.333 -> 6.3.
        let row = HumanCounts {
            image_id: "10".to_string(),
            experts: vec![(6, 8), (5, 6), (6, 7)],
        };
        let (n, d) = row.mean_ratio();
        assert_eq!(round_half_up_tenths(n, d), 63);
        assert_eq!(format_tenths(63), "6.3");
    }

    #[test]
    fn human_mean_totals_rounding() {
        // Totals means 81.5, 54.5, 70 -> 68.666 -> 68.7.
        let (n, d) = (49 + 114 + 29 + 80 + 42 + 98, 6);
        assert_eq!(round_half_up_tenths(n, d), 687);
        assert_eq!(format_tenths(687), "68.7");
    }

    #[test]
    fn human_mean_single_expert_zero() {
        let rows = vec![HumanCounts {
            image_id: "a".to_string(),
            experts: vec![(0, 0)],
        }];
        let (per_image, total) = human_mean(&rows).unwrap();
        assert_eq!(round_half_up_tenths(per_image[0].0, per_image[0].1), 0);
        assert_eq!(round_half_up_tenths(total.0, total.1), 0);
    }

    #[test]
    fn compare_identity_zero_deviation() {
        let auto = vec![ImageCount::new("1", 3, 5), ImageCount::new("2", 0, 2)];
        let humans = vec![
            HumanCounts {
                image_id: "1".to_string(),
                experts: vec![(3, 5)],
            },
            HumanCounts {
                image_id: "2".to_string(),
                experts: vec![(0, 2)],
            },
        ];
        let r = compare(&auto, &humans).unwrap();
        assert_eq!(r.dev_conservative_pct, 0.0);
        assert_eq!(r.dev_liberal_pct, 0.0);
        assert_eq!(r.dev_mean_pct, 0.0);
        assert!(r.within_5_conservative && r.within_10_liberal);
    }

    #[test]
    fn compare_join_error_lists_offenders() {
        let auto = vec![ImageCount::new("1", 0, 0)];
        let humans = vec![HumanCounts {
            image_id: "2".to_string(),
            experts: vec![(0, 0)],
        }];
        match compare(&auto, &humans) {
            Err(CensusError::JoinError {
                missing_auto,
                missing_human,
            }) => {
                assert_eq!(missing_auto, vec!["2".to_string()]);
                assert_eq!(missing_human, vec!["1".to_string()]);
            }
            other => panic!("expected join error, got {other:?}"),
        }
    }

    #[test]
    fn compare_symmetric_in_expert_order() {
        let auto = vec![ImageCount::new("1", 2, 6)];
        let mk = |experts: Vec<(u64, u64)>| {
            vec![HumanCounts {
                image_id: "1".to_string(),
                experts,
            }]
        };
        let a = compare(&auto, &mk(vec![(1, 4), (2, 6), (3, 8)])).unwrap();
        let b = compare(&auto, &mk(vec![(3, 8), (1, 4), (2, 6)])).unwrap();
        assert_eq!(a.human_mean_total, b.human_mean_total);
        assert_eq!(a.dev_conservative_pct, b.dev_conservative_pct);
        assert_eq!(a.dev_mean_pct, b.dev_mean_pct);
        let mut at = a.expert_totals.clone();
        let mut bt = b.expert_totals.clone();
        at.sort_unstable();
        bt.sort_unstable();
        assert_eq!(at, bt);
    }

    #[test]
    fn totals_row_identity() {
        let counts = vec![
            ImageCount::new("1", 0, 1),
            ImageCount::new("2", 2, 4),
            ImageCount::new("3", 1, 1),
        ];
        let total = aggregate(&counts).unwrap();
        let sum_means: f64 = counts.iter().map(|c| c.mean()).sum();
        assert_eq!(total.mean(), sum_means);
    }

    #[test]
    fn rounding_pins() {
        assert_eq!(round_half_up_tenths(19, 3), 63); // 6.333 -> 6.3
        assert_eq!(round_half_up_tenths(412, 6), 687); // 68.666 -> 68.7
        assert_eq!(round_half_up_tenths(1699, 6), 2832); // 283.166 -> 283.2
        assert_eq!(round_half_up_tenths(1, 4), 3); // 0.25 -> 0.3 (half-up)
        assert_eq!(round_half_up_1dp(-1.351), -1.4);
        assert_eq!(round_half_up_1dp(2.532), 2.5);
    }

    #[test]
    fn overlay_zero_detections_changes_only_legend() {
        let img = RasterImage::filled(16, 16, [7, 7, 7]).unwrap();
        let out = render_overlay(&img, &[], OverlayStage::Final);
        let mut diff = 0;
        for y in 0..16 {
            for x in 0..16 {
                if out.get(x, y) != img.get(x, y) {
                    assert!(x < 4 && y < 4, "unexpected change at ({x},{y})");
                    diff += 1;
                }
            }
        }
        assert_eq!(diff, 16);
    }

    #[test]
    fn overlay_marker_near_center() {
        let img = RasterImage::filled(64, 64, [7, 7, 7]).unwrap();
        let det = FollicleDetection {
            kind: DetectionKind::ZpOnly,
            center: (30.0, 31.0),
            nucleus: None,
            zp: None,
        };
        let out = render_overlay(&img, &[det], OverlayStage::Final);
        // Marker pixels exist and cluster within 2 px of the center.
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut n = 0.0;
        for y in 8..64u32 {
            for x in 8..64u32 {
                if out.get(x, y) != [7, 7, 7] {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1.0;
                }
            }
        }
        assert!(n > 0.0);
        assert!((sx / n - 30.0).abs() <= 2.0);
        assert!((sy / n - 31.0).abs() <= 2.0);
    }

    #[test]
    fn mask_rendering() {
        let mut mask = BitMask::empty(2, 1).unwrap();
        mask.set(1, 0, true);
        let img = render_mask(&mask);
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.get(1, 0), [255, 255, 255]);
    }
}

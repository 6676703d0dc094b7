//! Seeded generator of synthetic PCNA-look micrographs with exact ground
//! truth, used for calibration, regression, and precision/recall checks.
//!
//! The appearance model follows the stain's qualitative color ordering:
//! dark-brown NGF nuclei, lighter brown stroma nuclei and cell rims, blue
//! extracellular background, nearly unstained pale ZP and vessels. Values
//! are generator config, not claims about real tissue.
//!
//! Determinism: placement uses a sequential generator seeded from `seed`;
//! pixel noise uses a counter-based hash keyed by (seed, x, y, channel), so
//! output bytes are independent of paint order, platform, and thread count.

use crate::detector::{FollicleDetection, Magnification};
use crate::raster::RasterImage;
use crate::rng::{pixel_hash, pixel_normal, SeqRng};
use alloc::vec::Vec;
use core::fmt;

/// Mean color and per-object jitter amplitude for one material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaletteEntry {
    pub mean: [u8; 3],
    pub jitter: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Palette {
    pub background: PaletteEntry,
    pub stroma: PaletteEntry,
    pub ngf_nucleus: PaletteEntry,
    pub zp: PaletteEntry,
    pub vessel: PaletteEntry,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: PaletteEntry {
                mean: [178, 178, 214],
                jitter: 8,
            },
            stroma: PaletteEntry {
                mean: [124, 94, 74],
                jitter: 10,
            },
            ngf_nucleus: PaletteEntry {
                mean: [58, 44, 40],
                jitter: 6,
            },
            zp: PaletteEntry {
                mean: [232, 228, 222],
                jitter: 6,
            },
            vessel: PaletteEntry {
                mean: [226, 224, 230],
                jitter: 6,
            },
        }
    }
}

/// Inclusive count range.
pub type CountRange = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub width: u32,
    pub height: u32,
    pub magnification: Magnification,
    pub ngf_count: CountRange,
    pub zp_only_count: CountRange,
    pub isolated_nucleus_count: CountRange,
    pub vessel_count: CountRange,
    pub stroma_count: CountRange,
    pub palette: Palette,
    /// Per-pixel Gaussian noise amplitude, intensity levels.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthParams {
    /// Default 200x scene parameters.
    pub fn default_200(seed: u64) -> Self {
        SynthParams {
            width: 640,
            height: 512,
            magnification: Magnification::X200,
            ngf_count: (2, 6),
            zp_only_count: (0, 2),
            isolated_nucleus_count: (0, 3),
            vessel_count: (0, 2),
            stroma_count: (40, 80),
            palette: Palette::default(),
            noise_sigma: 4.0,
            seed,
        }
    }

    /// Default 100x scene parameters: linear sizes halve, so more objects
    /// fit per field; the 100x pipeline has no ZP branch, so no ZP-only
    /// profiles are generated.
    pub fn default_100(seed: u64) -> Self {
        SynthParams {
            width: 640,
            height: 512,
            magnification: Magnification::X100,
            ngf_count: (5, 17),
            zp_only_count: (0, 0),
            isolated_nucleus_count: (0, 0),
            vessel_count: (0, 2),
            stroma_count: (120, 220),
            palette: Palette::default(),
            noise_sigma: 4.0,
            seed,
        }
    }

    /// Geometry scales: (nucleus radius, zp outer radius, stroma radius,
    /// vessel semi-minor) ranges for this magnification.
    fn geometry(&self) -> Geometry {
        match self.magnification {
            Magnification::X200 => Geometry {
                nucleus_r: (8.0, 14.0),
                zp_outer_r: (22.0, 34.0),
                stroma_r: (3.0, 5.0),
                vessel_b: (5.0, 8.0),
                rim: 3.0,
            },
            Magnification::X100 => Geometry {
                nucleus_r: (4.0, 7.0),
                zp_outer_r: (11.0, 17.0),
                stroma_r: (1.5, 2.5),
                vessel_b: (2.5, 4.0),
                rim: 2.0,
            },
        }
    }
}

struct Geometry {
    nucleus_r: (f64, f64),
    zp_outer_r: (f64, f64),
    stroma_r: (f64, f64),
    vessel_b: (f64, f64),
    rim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    Ngf,
    ZpOnly,
    IsolatedNucleus,
    Vessel,
    StromaNucleus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub kind: ObjectKind,
    pub center: (f64, f64),
    pub nucleus_radius: f64,
    pub zp_outer_radius: f64,
    pub orientation: f64,
}

/// Ground-truth annotation of one generated image.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TruthCounts {
    pub ngf: u32,
    pub zp_only: u32,
    pub isolated_nuclei: u32,
    pub vessels: u32,
    pub stroma_nuclei: u32,
}

impl SynthScene {
    pub fn truth_counts(&self) -> TruthCounts {
        let mut t = TruthCounts::default();
        for o in &self.objects {
            match o.kind {
                ObjectKind::Ngf => t.ngf += 1,
                ObjectKind::ZpOnly => t.zp_only += 1,
                ObjectKind::IsolatedNucleus => t.isolated_nuclei += 1,
                ObjectKind::Vessel => t.vessels += 1,
                ObjectKind::StromaNucleus => t.stroma_nuclei += 1,
            }
        }
        t
    }

    /// Centers of the objects a correct detector should report.
    pub fn ngf_like_centers(&self) -> Vec<(f64, f64)> {
        self.objects
            .iter()
            .filter(|o| matches!(o.kind, ObjectKind::Ngf | ObjectKind::ZpOnly))
            .map(|o| o.center)
            .collect()
    }
}

/// The canvas is too small to place the requested objects without overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlacementError {
    pub kind: ObjectKind,
}

impl fmt::Display for PlacementError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "could not place a {:?} object without overlap after bounded retries",
            self.kind
        )
    }
}

impl core::error::Error for PlacementError {}

/// Generate one scene: a painted image plus its exact ground truth.
pub fn generate_scene(p: &SynthParams) -> Result<(RasterImage, SynthScene), PlacementError> {
    let geom = p.geometry();
    let mut rng = SeqRng::new(p.seed);
    let mut objects: Vec<SceneObject> = Vec::new();

    let n_ngf = rng.next_int(p.ngf_count.0, p.ngf_count.1);
    let n_zp_only = rng.next_int(p.zp_only_count.0, p.zp_only_count.1);
    let n_isolated = rng.next_int(p.isolated_nucleus_count.0, p.isolated_nucleus_count.1);
    let n_vessel = rng.next_int(p.vessel_count.0, p.vessel_count.1);
    let n_stroma = rng.next_int(p.stroma_count.0, p.stroma_count.1);

    let kinds = [
        (ObjectKind::Ngf, n_ngf),
        (ObjectKind::ZpOnly, n_zp_only),
        (ObjectKind::IsolatedNucleus, n_isolated),
        (ObjectKind::Vessel, n_vessel),
    ];
    for (kind, count) in kinds {
        for _ in 0..count {
            let obj = place_object(kind, p, &geom, &objects, &mut rng)
                .ok_or(PlacementError { kind })?;
            objects.push(obj);
        }
    }
    // Stroma nuclei may crowd each other, but stay off the larger objects.
    for _ in 0..n_stroma {
        let r = rng.next_range(geom.stroma_r.0, geom.stroma_r.1);
        let mut placed = false;
        for _ in 0..200 {
            let cx = rng.next_range(r + 1.0, p.width as f64 - r - 2.0);
            let cy = rng.next_range(r + 1.0, p.height as f64 - r - 2.0);
            let clear = objects
                .iter()
                .filter(|o| o.kind != ObjectKind::StromaNucleus)
                .all(|o| {
                    let d = libm::hypot(o.center.0 - cx, o.center.1 - cy);
                    d > extent_of(o, &geom) + r + 4.0
                });
            if clear {
                objects.push(SceneObject {
                    kind: ObjectKind::StromaNucleus,
                    center: (cx, cy),
                    nucleus_radius: r,
                    zp_outer_radius: 0.0,
                    orientation: 0.0,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(PlacementError {
                kind: ObjectKind::StromaNucleus,
            });
        }
    }

    let scene = SynthScene {
        width: p.width,
        height: p.height,
        objects,
    };
    let img = paint_scene(p, &geom, &scene);
    Ok((img, scene))
}

fn extent_of(o: &SceneObject, geom: &Geometry) -> f64 {
    match o.kind {
        ObjectKind::Ngf | ObjectKind::ZpOnly => o.zp_outer_radius + geom.rim,
        ObjectKind::IsolatedNucleus | ObjectKind::StromaNucleus => o.nucleus_radius,
        ObjectKind::Vessel => 6.0 * o.nucleus_radius + geom.rim,
    }
}

fn place_object(
    kind: ObjectKind,
    p: &SynthParams,
    geom: &Geometry,
    placed: &[SceneObject],
    rng: &mut SeqRng,
) -> Option<SceneObject> {
    for _ in 0..1000 {
        let (nucleus_radius, zp_outer_radius, orientation) = match kind {
            ObjectKind::Ngf => (
                rng.next_range(geom.nucleus_r.0, geom.nucleus_r.1),
                rng.next_range(geom.zp_outer_r.0, geom.zp_outer_r.1),
                0.0,
            ),
            ObjectKind::ZpOnly => (
                0.0,
                rng.next_range(geom.zp_outer_r.0, geom.zp_outer_r.1),
                0.0,
            ),
            ObjectKind::IsolatedNucleus => (
                rng.next_range(geom.nucleus_r.0, geom.nucleus_r.1),
                0.0,
                0.0,
            ),
            // nucleus_radius doubles as the vessel's semi-minor axis.
            ObjectKind::Vessel => (
                rng.next_range(geom.vessel_b.0, geom.vessel_b.1),
                0.0,
                rng.next_range(0.0, core::f64::consts::PI),
            ),
            ObjectKind::StromaNucleus => unreachable!("stroma placed separately"),
        };
        let candidate = SceneObject {
            kind,
            center: (0.0, 0.0),
            nucleus_radius,
            zp_outer_radius,
            orientation,
        };
        let extent = extent_of(&candidate, geom);
        let margin = extent + 2.0;
        if p.width as f64 <= 2.0 * margin + 1.0 || p.height as f64 <= 2.0 * margin + 1.0 {
            return None;
        }
        let cx = rng.next_range(margin, p.width as f64 - margin - 1.0);
        let cy = rng.next_range(margin, p.height as f64 - margin - 1.0);
        let clear = placed.iter().all(|o| {
            let d = libm::hypot(o.center.0 - cx, o.center.1 - cy);
            d > extent + extent_of(o, geom) + 6.0
        });
        if clear {
            return Some(SceneObject {
                center: (cx, cy),
                ..candidate
            });
        }
    }
    None
}

fn jittered(entry: PaletteEntry, rng: &mut SeqRng) -> [u8; 3] {
    let mut c = [0u8; 3];
    for (i, slot) in c.iter_mut().enumerate() {
        let j = rng.next_range(-(entry.jitter as f64), entry.jitter as f64);
        let v = entry.mean[i] as f64 + j;
        *slot = v.clamp(0.0, 255.0) as u8;
    }
    c
}

fn paint_scene(p: &SynthParams, geom: &Geometry, scene: &SynthScene) -> RasterImage {
    let w = p.width as usize;
    let h = p.height as usize;
    let mut base = alloc::vec![p.palette.background.mean; w * h];

    // Per-object colors drawn from a dedicated stream so painting and
    // placement stay decoupled.
    let mut color_rng = SeqRng::new(p.seed ^ 0xC010_12AB);
    for o in &scene.objects {
        paint_object(p, geom, o, &mut color_rng, &mut base);
    }

    // Single ordered noise pass keyed by pixel coordinates.
    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..p.height {
        for x in 0..p.width {
            let b = base[y as usize * w + x as usize];
            let mut px = [0u8; 3];
            for c in 0..3 {
                let n = pixel_normal(p.seed, x, y, c as u32) * p.noise_sigma;
                px[c] = (b[c] as f64 + n).clamp(0.0, 255.0) as u8;
            }
            // Sparse dark speckle over pale material gives ZP and vessel
            // regions the heavy-tailed channel distributions the background
            // filter keys on; the flat blue background stays near-Gaussian.
            let pale = b == base_color_check(p, b);
            if pale && pixel_hash(p.seed, x, y, 7) % 50 == 0 {
                for v in px.iter_mut() {
                    *v = v.saturating_sub(30);
                }
            }
            pixels.push(px);
        }
    }
    RasterImage::new(p.width, p.height, pixels).expect("canvas dimensions are valid")
}

// Pale materials are the only ones bright enough for all channels to clear
// 190 in this palette family.
fn base_color_check(p: &SynthParams, b: [u8; 3]) -> [u8; 3] {
    let _ = p;
    if b.iter().all(|&v| v >= 190) {
        b
    } else {
        [0, 0, 0]
    }
}

fn paint_object(
    p: &SynthParams,
    geom: &Geometry,
    o: &SceneObject,
    color_rng: &mut SeqRng,
    base: &mut [[u8; 3]],
) {
    let w = p.width as usize;
    let rim_color = jittered(p.palette.stroma, color_rng);
    match o.kind {
        ObjectKind::Ngf | ObjectKind::ZpOnly => {
            let zp_color = jittered(p.palette.zp, color_rng);
            let nucleus_color = jittered(p.palette.ngf_nucleus, color_rng);
            let ro = o.zp_outer_radius;
            let extent = ro + geom.rim;
            for_each_pixel_in_disc(p, o.center, extent, |x, y, d| {
                let c = if o.kind == ObjectKind::Ngf && d <= o.nucleus_radius {
                    nucleus_color
                } else if d <= ro {
                    zp_color
                } else {
                    rim_color
                };
                base[y * w + x] = c;
            });
        }
        ObjectKind::IsolatedNucleus => {
            let nucleus_color = jittered(p.palette.ngf_nucleus, color_rng);
            for_each_pixel_in_disc(p, o.center, o.nucleus_radius, |x, y, _| {
                base[y * w + x] = nucleus_color;
            });
        }
        ObjectKind::StromaNucleus => {
            let c = jittered(p.palette.stroma, color_rng);
            for_each_pixel_in_disc(p, o.center, o.nucleus_radius, |x, y, _| {
                base[y * w + x] = c;
            });
        }
        ObjectKind::Vessel => {
            let vessel_color = jittered(p.palette.vessel, color_rng);
            let b = o.nucleus_radius;
            let a = 6.0 * b;
            let (sin, cos) = (libm::sin(o.orientation), libm::cos(o.orientation));
            let extent = a + geom.rim;
            for_each_pixel_in_disc(p, o.center, extent, |x, y, _| {
                let dx = x as f64 - o.center.0;
                let dy = y as f64 - o.center.1;
                let u = dx * cos + dy * sin;
                let v = -dx * sin + dy * cos;
                let inner = (u / a) * (u / a) + (v / b) * (v / b);
                let ar = a + geom.rim;
                let br = b + geom.rim;
                let outer = (u / ar) * (u / ar) + (v / br) * (v / br);
                if inner <= 1.0 {
                    base[y * w + x] = vessel_color;
                } else if outer <= 1.0 {
                    base[y * w + x] = rim_color;
                }
            });
        }
    }
}

fn for_each_pixel_in_disc(
    p: &SynthParams,
    center: (f64, f64),
    radius: f64,
    mut f: impl FnMut(usize, usize, f64),
) {
    let x0 = ((center.0 - radius).max(0.0)) as usize;
    let x1 = ((center.0 + radius + 1.0).min(p.width as f64 - 1.0)) as usize;
    let y0 = ((center.1 - radius).max(0.0)) as usize;
    let y1 = ((center.1 + radius + 1.0).min(p.height as f64 - 1.0)) as usize;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = libm::hypot(x as f64 - center.0, y as f64 - center.1);
            if d <= radius {
                f(x, y, d);
            }
        }
    }
}

/// Greedy nearest-first one-to-one matching of detection centers against
/// NGF-like truth centers within `match_radius`.
///
/// Precision = matched / detections; recall = matched / truth. Empty
/// denominators give 1.0 (no detections to be wrong about, nothing to miss).
pub fn score_detections(
    dets: &[FollicleDetection],
    truth: &SynthScene,
    match_radius: f64,
) -> Score {
    let truth_centers = truth.ngf_like_centers();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, &(tx, ty)) in truth_centers.iter().enumerate() {
        for (di, d) in dets.iter().enumerate() {
            let dist = libm::hypot(d.center.0 - tx, d.center.1 - ty);
            if dist <= match_radius {
                pairs.push((dist, ti, di));
            }
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut truth_used = alloc::vec![false; truth_centers.len()];
    let mut det_used = alloc::vec![false; dets.len()];
    let mut matched: Vec<(usize, usize)> = Vec::new();
    for (_, ti, di) in pairs {
        if !truth_used[ti] && !det_used[di] {
            truth_used[ti] = true;
            det_used[di] = true;
            matched.push((ti, di));
        }
    }
    let precision = if dets.is_empty() {
        1.0
    } else {
        matched.len() as f64 / dets.len() as f64
    };
    let recall = if truth_centers.is_empty() {
        1.0
    } else {
        matched.len() as f64 / truth_centers.len() as f64
    };
    Score {
        precision,
        recall,
        matched_pairs: matched,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    /// (truth index among NGF-like objects, detection index).
    pub matched_pairs: Vec<(usize, usize)>,
}

impl Score {
    pub fn f1(&self) -> f64 {
        if self.precision + self.recall == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        }
    }
}

//! Synthetic corpus generation: images on disk plus a JSON manifest with
//! exact ground-truth counts, regenerable bit-for-bit from (params, seed).

use anyhow::{bail, Context, Result};
use follicle_core::synthlab::{generate_scene, Palette, PaletteEntry, SynthParams, SynthScene};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::io::save_png;
use crate::profiles::{mag_from_u32, mag_to_u32};

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub images: Vec<ManifestImage>,
    pub params: ManifestParams,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct ManifestImage {
    pub file: String,
    pub seed: u64,
    pub truth: ManifestTruth,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Default, Clone, Copy)]
#[serde(rename_all = "camelCase")]
pub struct ManifestTruth {
    pub ngf: u32,
    pub zp_only: u32,
    pub isolated_nuclei: u32,
    pub vessels: u32,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Clone)]
#[serde(rename_all = "camelCase")]
pub struct ManifestParams {
    pub width: u32,
    pub height: u32,
    /// 100 or 200.
    pub magnification: u32,
    pub ngf_count: (u32, u32),
    pub zp_only_count: (u32, u32),
    pub isolated_nucleus_count: (u32, u32),
    pub vessel_count: (u32, u32),
    pub stroma_count: (u32, u32),
    pub palette: ManifestPalette,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Clone)]
#[serde(rename_all = "camelCase")]
pub struct ManifestPalette {
    pub background: ([u8; 3], u8),
    pub stroma: ([u8; 3], u8),
    pub ngf_nucleus: ([u8; 3], u8),
    pub zp: ([u8; 3], u8),
    pub vessel: ([u8; 3], u8),
}

fn palette_out(p: &Palette) -> ManifestPalette {
    let f = |e: PaletteEntry| (e.mean, e.jitter);
    ManifestPalette {
        background: f(p.background),
        stroma: f(p.stroma),
        ngf_nucleus: f(p.ngf_nucleus),
        zp: f(p.zp),
        vessel: f(p.vessel),
    }
}

fn palette_in(p: &ManifestPalette) -> Palette {
    let f = |(mean, jitter): ([u8; 3], u8)| PaletteEntry { mean, jitter };
    Palette {
        background: f(p.background),
        stroma: f(p.stroma),
        ngf_nucleus: f(p.ngf_nucleus),
        zp: f(p.zp),
        vessel: f(p.vessel),
    }
}

pub fn params_to_manifest(p: &SynthParams) -> ManifestParams {
    ManifestParams {
        width: p.width,
        height: p.height,
        magnification: mag_to_u32(p.magnification),
        ngf_count: p.ngf_count,
        zp_only_count: p.zp_only_count,
        isolated_nucleus_count: p.isolated_nucleus_count,
        vessel_count: p.vessel_count,
        stroma_count: p.stroma_count,
        palette: palette_out(&p.palette),
        noise_sigma: p.noise_sigma,
        seed: p.seed,
    }
}

pub fn params_from_manifest(m: &ManifestParams) -> Result<SynthParams> {
    Ok(SynthParams {
        width: m.width,
        height: m.height,
        magnification: mag_from_u32(m.magnification)?,
        ngf_count: m.ngf_count,
        zp_only_count: m.zp_only_count,
        isolated_nucleus_count: m.isolated_nucleus_count,
        vessel_count: m.vessel_count,
        stroma_count: m.stroma_count,
        palette: palette_in(&m.palette),
        noise_sigma: m.noise_sigma,
        seed: m.seed,
    })
}

fn truth_of(scene: &SynthScene) -> ManifestTruth {
    let t = scene.truth_counts();
    ManifestTruth {
        ngf: t.ngf,
        zp_only: t.zp_only,
        isolated_nuclei: t.isolated_nuclei,
        vessels: t.vessels,
    }
}

pub fn image_file_name(index: u32) -> String {
    format!("img_{index:04}.png")
}

/// Generate `n` scenes with seeds `params.seed + 0..n`, write PNGs into
/// `dir`, and write `manifest.json` beside them.
pub fn generate_corpus(params: &SynthParams, n: u32, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("{}: cannot create corpus directory", dir.display()))?;
    let images: Vec<ManifestImage> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = SynthParams {
                seed: params.seed + i as u64,
                ..params.clone()
            };
            let (img, scene) =
                generate_scene(&p).with_context(|| format!("generating image {i}"))?;
            let file = image_file_name(i);
            save_png(&img, &dir.join(&file))?;
            Ok(ManifestImage {
                file,
                seed: p.seed,
                truth: truth_of(&scene),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        images,
        params: params_to_manifest(params),
    };
    write_manifest(&manifest, &dir.join("manifest.json"))?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).context("serializing manifest")?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("{}: cannot read manifest", path.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid manifest", path.display()))?;
    if manifest.images.is_empty() {
        bail!("{}: manifest lists no images", path.display());
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let d1 = dir.path().join("c1");
        let d2 = dir.path().join("c2");
        let params = SynthParams::default_200(42);
        let m1 = generate_corpus(&params, 3, &d1).unwrap();
        let m2 = generate_corpus(&params, 3, &d2).unwrap();
        assert_eq!(m1, m2);
        for img in &m1.images {
            let b1 = std::fs::read(d1.join(&img.file)).unwrap();
            let b2 = std::fs::read(d2.join(&img.file)).unwrap();
            assert_eq!(b1, b2, "{} differs between runs", img.file);
        }
        let back = read_manifest(&d1).unwrap();
        assert_eq!(back, m1);
        let rebuilt = params_from_manifest(&back.params).unwrap();
        assert_eq!(rebuilt, params);
    }

    #[test]
    fn empty_corpus_has_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_corpus(&SynthParams::default_100(1), 0, dir.path()).unwrap();
        assert!(m.images.is_empty());
        // read_manifest refuses empty corpora by design
        assert!(read_manifest(dir.path()).is_err());
    }

    #[test]
    fn truth_totals_within_configured_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let params = SynthParams::default_200(7);
        let m = generate_corpus(&params, 5, dir.path()).unwrap();
        for img in &m.images {
            assert!(img.truth.ngf >= params.ngf_count.0 && img.truth.ngf <= params.ngf_count.1);
            assert!(img.truth.vessels <= params.vessel_count.1);
        }
    }
}

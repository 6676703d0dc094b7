//! Command implementations behind the CLI surface.

use anyhow::{bail, Context, Result};
use follicle_core::census::{
    compare, format_tenths, overlay_stages, render_mask, ImageCount, OverlayStage,
};
use follicle_core::detector::{count_image, CountedImage, Magnification, SettingsPair};
use follicle_core::raster::RasterImage;
use follicle_core::synthlab::{generate_scene, score_detections, SynthParams};
use follicle_core::threshold::{binarize, Polarity};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::corpus::{generate_corpus, params_from_manifest, read_manifest};
use crate::io::{image_id, is_supported_image, load_image, save_png};
use crate::profiles::{mag_to_u32, save_profiles};
use crate::report::{
    build_json_report, write_json_report, write_report_csv, JsonTiming, ReportRow,
};

/// Exit status contract: 0 success, 1 configuration/usage error, 2 partial
/// per-image failures.
pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;

pub struct AnalyzeConfig {
    pub magnification: Magnification,
    pub profiles: SettingsPair,
    pub images: Vec<PathBuf>,
    pub out: PathBuf,
    pub json: Option<PathBuf>,
    pub overlays: Option<PathBuf>,
}

pub struct BatchConfig {
    pub magnification: Magnification,
    pub profiles: SettingsPair,
    pub dir: PathBuf,
    pub out: PathBuf,
    pub json: Option<PathBuf>,
    pub overlays: Option<PathBuf>,
    pub workers: usize,
}

pub struct CompareConfig {
    pub report: PathBuf,
    pub human: PathBuf,
    pub out: PathBuf,
    pub json: Option<PathBuf>,
}

pub struct SynthConfig {
    pub magnification: Magnification,
    pub seed: u64,
    pub n: u32,
    pub out: PathBuf,
}

pub struct CalibrateConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
}

fn process_one(
    path: &Path,
    magnification: Magnification,
    profiles: &SettingsPair,
    overlays: Option<&Path>,
) -> Result<CountedImage> {
    let img = load_image(path)?;
    let counted = count_image(&img, magnification, profiles)
        .map_err(|e| anyhow::anyhow!("{}: {e:?}", path.display()))?;
    if let Some(dir) = overlays {
        write_overlays(&img, &counted, &image_id(path), dir)?;
    }
    Ok(counted)
}

/// One overlay per pipeline stage for the liberal run, mirroring the figure
/// panels: threshold mask, nuclei candidates, ZP candidates, final.
fn write_overlays(img: &RasterImage, counted: &CountedImage, id: &str, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("{}: cannot create overlay directory", dir.display()))?;
    let out = &counted.liberal;
    if let Some(level) = out.threshold {
        let mask = binarize(&img.to_gray(), level, Polarity::DarkForeground);
        save_png(&render_mask(&mask), &dir.join(format!("{id}_mask.png")))?;
    }
    for (stage, overlay) in overlay_stages(img, out) {
        let suffix = match stage {
            OverlayStage::ThresholdMask => "mask",
            OverlayStage::NucleiCandidates => "nuclei",
            OverlayStage::ZpCandidates => "zp",
            OverlayStage::Final => "final",
        };
        save_png(&overlay, &dir.join(format!("{id}_{suffix}.png")))?;
    }
    Ok(())
}

fn finish_report(
    rows: &[ReportRow],
    out: &Path,
    json: Option<&Path>,
    timing: Option<JsonTiming>,
) -> Result<u8> {
    write_report_csv(out, rows, None)?;
    if let Some(json_path) = json {
        write_json_report(json_path, &build_json_report(rows, None, timing))?;
    }
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("{failures} image(s) failed; see the error column in {}", out.display());
        Ok(EXIT_PARTIAL)
    } else {
        Ok(EXIT_OK)
    }
}

pub fn cmd_analyze(cfg: &AnalyzeConfig) -> Result<u8> {
    if cfg.images.is_empty() {
        bail!("no input images given");
    }
    // Missing inputs are a configuration error: fail before any output.
    for path in &cfg.images {
        if !path.exists() {
            bail!("{}: no such file", path.display());
        }
    }
    let rows: Vec<ReportRow> = cfg
        .images
        .iter()
        .map(|path| {
            let id = image_id(path);
            match process_one(path, cfg.magnification, &cfg.profiles, cfg.overlays.as_deref()) {
                Ok(c) => ReportRow::ok(ImageCount::new(id, c.con(), c.lib())),
                Err(e) => ReportRow::failed(id, e.to_string()),
            }
        })
        .collect();
    finish_report(&rows, &cfg.out, cfg.json.as_deref(), None)
}

pub fn cmd_batch(cfg: &BatchConfig) -> Result<u8> {
    if !cfg.dir.is_dir() {
        bail!("{}: not a directory", cfg.dir.display());
    }
    if cfg.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&cfg.dir)
        .with_context(|| format!("{}: cannot list", cfg.dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_supported_image(p))
        .collect();
    paths.sort_by_key(|p| image_id(p));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    let start = Instant::now();
    let mut results: Vec<(String, Result<CountedImage>, f64)> = pool.install(|| {
        paths
            .par_iter()
            .map(|path| {
                let t0 = Instant::now();
                let res =
                    process_one(path, cfg.magnification, &cfg.profiles, cfg.overlays.as_deref());
                (image_id(path), res, t0.elapsed().as_secs_f64())
            })
            .collect()
    });
    let wall_clock_s = start.elapsed().as_secs_f64();
    // Merge in id order regardless of completion order.
    results.sort_by(|a, b| a.0.cmp(&b.0));

    let rows: Vec<ReportRow> = results
        .iter()
        .map(|(id, res, _)| match res {
            Ok(c) => ReportRow::ok(ImageCount::new(id.clone(), c.con(), c.lib())),
            Err(e) => ReportRow::failed(id.clone(), e.to_string()),
        })
        .collect();
    let timing = JsonTiming {
        wall_clock_s,
        per_image_s: results.iter().map(|(id, _, t)| (id.clone(), *t)).collect(),
    };
    println!(
        "processed {} image(s) in {:.2}s with {} worker(s)",
        results.len(),
        wall_clock_s,
        cfg.workers
    );
    finish_report(&rows, &cfg.out, cfg.json.as_deref(), Some(timing))
}

pub fn cmd_compare(cfg: &CompareConfig) -> Result<u8> {
    let auto = crate::report::read_report_csv(&cfg.report)?;
    let humans = crate::report::read_human_csv(&cfg.human)?;
    let cmp = compare(&auto, &humans).map_err(|e| anyhow::anyhow!("{e}"))?;

    let rows: Vec<ReportRow> = cmp
        .rows
        .iter()
        .map(|r| ReportRow {
            image_id: r.image_id.clone(),
            counts: Some(r.auto.clone()),
            human_mean_tenths: Some(r.human_mean_tenths),
            error: None,
        })
        .collect();
    write_report_csv(&cfg.out, &rows, Some(cmp.human_mean_total_tenths))?;
    if let Some(json_path) = &cfg.json {
        write_json_report(json_path, &build_json_report(&rows, Some(&cmp), None))?;
    }

    println!(
        "automated totals: con {} lib {} mean {}",
        cmp.auto_total.con,
        cmp.auto_total.lib,
        format_tenths(5 * (cmp.auto_total.con + cmp.auto_total.lib))
    );
    println!("human mean total: {}", format_tenths(cmp.human_mean_total_tenths));
    println!(
        "conservative deviation {:+.1}% — {} the 5% band",
        cmp.dev_conservative_pct,
        if cmp.within_5_conservative { "within" } else { "OUTSIDE" }
    );
    println!(
        "liberal deviation {:+.1}% — {} the 10% band",
        cmp.dev_liberal_pct,
        if cmp.within_10_liberal { "within" } else { "OUTSIDE" }
    );
    Ok(EXIT_OK)
}

pub fn cmd_synth(cfg: &SynthConfig) -> Result<u8> {
    let params = match cfg.magnification {
        Magnification::X100 => SynthParams::default_100(cfg.seed),
        Magnification::X200 => SynthParams::default_200(cfg.seed),
    };
    let manifest = generate_corpus(&params, cfg.n, &cfg.out)?;
    println!(
        "wrote {} image(s) and manifest.json to {}",
        manifest.images.len(),
        cfg.out.display()
    );
    Ok(EXIT_OK)
}

/// Default matching radius for detection-vs-truth center association.
pub fn match_radius(magnification: Magnification) -> f64 {
    match magnification {
        Magnification::X200 => 12.0,
        Magnification::X100 => 8.0,
    }
}

pub fn cmd_calibrate(cfg: &CalibrateConfig) -> Result<u8> {
    let manifest = read_manifest(&cfg.corpus)?;
    let params = params_from_manifest(&manifest.params)?;
    let magnification = params.magnification;
    if manifest
        .images
        .iter()
        .all(|i| i.truth.ngf == 0 && i.truth.zp_only == 0)
    {
        bail!(
            "{}: corpus contains no NGF-like objects; calibration needs positive examples",
            cfg.corpus.display()
        );
    }

    // Scenes regenerate exactly from (params, per-image seed), giving truth
    // centers the manifest's count summary does not carry.
    let scenes: Vec<_> = manifest
        .images
        .par_iter()
        .map(|entry| {
            let p = SynthParams {
                seed: entry.seed,
                ..params.clone()
            };
            generate_scene(&p).map_err(|e| anyhow::anyhow!("seed {}: {e}", entry.seed))
        })
        .collect::<Result<Vec<_>>>()?;
    let (train, holdout): (Vec<_>, Vec<_>) =
        scenes.iter().enumerate().partition(|(i, _)| i % 2 == 0);
    let train: Vec<_> = train.into_iter().map(|(_, s)| s).collect();
    let holdout: Vec<_> = holdout.into_iter().map(|(_, s)| s).collect();

    let radius = match_radius(magnification);
    let f1_of = |pair: &SettingsPair, set: &[&(RasterImage, follicle_core::synthlab::SynthScene)]| {
        let mut num = 0.0;
        for (img, scene) in set {
            let counted = count_image(img, magnification, pair).expect("validated profiles");
            let s = score_detections(&counted.liberal.detections, scene, radius);
            num += s.f1();
        }
        num / set.len().max(1) as f64
    };

    // Grid over the least-certain bounds, anchored at the builtin profiles;
    // the conservative profile moves in lockstep to preserve nesting.
    let base = SettingsPair::builtin(magnification);
    let mut best: Option<(f64, SettingsPair)> = None;
    for &area_scale in &[0.8, 1.0, 1.2] {
        for &circ_lib in &[0.35, 0.45, 0.55] {
            for &sph_lib in &[0.35, 0.45, 0.55] {
                let mut pair = base;
                let scale = |(lo, hi): (usize, usize)| {
                    (
                        ((lo as f64) * area_scale) as usize,
                        ((hi as f64) * area_scale) as usize,
                    )
                };
                pair.liberal.nucleus_area = scale(base.liberal.nucleus_area);
                pair.conservative.nucleus_area = scale(base.conservative.nucleus_area);
                pair.liberal.zp_area = scale(base.liberal.zp_area);
                pair.conservative.zp_area = scale(base.conservative.zp_area);
                pair.liberal.min_circularity_zp = circ_lib;
                pair.conservative.min_circularity_zp =
                    circ_lib.max(base.conservative.min_circularity_zp);
                pair.liberal.min_sphericity = sph_lib;
                pair.conservative.min_sphericity = sph_lib.max(base.conservative.min_sphericity);
                if pair.validate(magnification).is_err() {
                    continue;
                }
                let f1 = f1_of(&pair, &train);
                let better = match &best {
                    None => true,
                    Some((best_f1, _)) => f1 > *best_f1 + 1e-12,
                };
                if better {
                    best = Some((f1, pair));
                }
            }
        }
    }
    let (train_f1, pair) = best.expect("grid is non-empty");
    let holdout_f1 = f1_of(&pair, &holdout);

    save_profiles(
        &cfg.out,
        magnification,
        &pair,
        &[
            "Calibrated detection profiles".to_string(),
            format!(
                "corpus: {} ({} images, magnification {}, base seed {})",
                cfg.corpus.display(),
                manifest.images.len(),
                mag_to_u32(magnification),
                params.seed
            ),
            format!("liberal mean F1: train {train_f1:.3}, holdout {holdout_f1:.3}"),
        ],
    )?;
    println!(
        "calibrated profiles written to {} (train F1 {train_f1:.3}, holdout F1 {holdout_f1:.3})",
        cfg.out.display()
    );
    Ok(EXIT_OK)
}

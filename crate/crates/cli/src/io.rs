//! Image file IO: PNG/TIFF loading with alpha stripping, PNG saving.

use anyhow::{bail, Context, Result};
use follicle_core::RasterImage;
use std::path::Path;

const SUPPORTED: &[&str] = &["png", "tif", "tiff"];

pub fn is_supported_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| SUPPORTED.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Load a PNG or TIFF image as 8-bit RGB; alpha is dropped, 16-bit depth is
/// narrowed. Errors name the offending file and property.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    if !is_supported_image(path) {
        bail!(
            "{}: unsupported extension (expected one of {:?})",
            path.display(),
            SUPPORTED
        );
    }
    let decoded = image::open(path).with_context(|| format!("{}: cannot decode", path.display()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels: Vec<[u8; 3]> = rgb.pixels().map(|p| p.0).collect();
    RasterImage::new(w, h, pixels)
        .with_context(|| format!("{}: invalid dimensions {w}x{h}", path.display()))
}

pub fn save_png(img: &RasterImage, path: &Path) -> Result<()> {
    let mut buf = image::RgbImage::new(img.width(), img.height());
    for (i, p) in img.pixels().iter().enumerate() {
        let x = (i as u32) % img.width();
        let y = (i as u32) / img.width();
        buf.put_pixel(x, y, image::Rgb(*p));
    }
    buf.save(path)
        .with_context(|| format!("{}: cannot write PNG", path.display()))
}

/// The report key for an image file: its stem, so `dir/img_0001.png` joins
/// against manifest and human-count ids as `img_0001`.
pub fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

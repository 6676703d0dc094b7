//! Detection profile files: a versioned TOML schema holding the
//! conservative and liberal parameter sets for one magnification.

use anyhow::{bail, Context, Result};
use follicle_core::detector::{DetectionSettings, Magnification, SettingsPair, Strictness};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const PROFILE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProfileFile {
    pub profile_version: u32,
    /// 100 or 200.
    pub magnification: u32,
    pub conservative: ProfileEntry,
    pub liberal: ProfileEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProfileEntry {
    pub nucleus_area: (usize, usize),
    pub zp_area: (usize, usize),
    pub max_aspect_ratio: f64,
    pub min_mod_ratio: f64,
    pub min_sphericity: f64,
    pub max_blue_mean: f64,
    pub min_blue_mean_zp: f64,
    pub min_circularity_zp: f64,
    pub min_compactness_100: f64,
    pub min_circularity_100: f64,
    pub max_aspect_ratio_100: f64,
    pub brown_median_limits: (u8, u8, u8),
    pub association_radius: f64,
}

impl ProfileEntry {
    fn from_settings(s: &DetectionSettings) -> Self {
        ProfileEntry {
            nucleus_area: s.nucleus_area,
            zp_area: s.zp_area,
            max_aspect_ratio: s.max_aspect_ratio,
            min_mod_ratio: s.min_mod_ratio,
            min_sphericity: s.min_sphericity,
            max_blue_mean: s.max_blue_mean,
            min_blue_mean_zp: s.min_blue_mean_zp,
            min_circularity_zp: s.min_circularity_zp,
            min_compactness_100: s.min_compactness_100,
            min_circularity_100: s.min_circularity_100,
            max_aspect_ratio_100: s.max_aspect_ratio_100,
            brown_median_limits: s.brown_median_limits,
            association_radius: s.association_radius,
        }
    }

    fn to_settings(&self, magnification: Magnification, strictness: Strictness) -> DetectionSettings {
        DetectionSettings {
            magnification,
            strictness,
            nucleus_area: self.nucleus_area,
            zp_area: self.zp_area,
            max_aspect_ratio: self.max_aspect_ratio,
            min_mod_ratio: self.min_mod_ratio,
            min_sphericity: self.min_sphericity,
            max_blue_mean: self.max_blue_mean,
            min_blue_mean_zp: self.min_blue_mean_zp,
            min_circularity_zp: self.min_circularity_zp,
            min_compactness_100: self.min_compactness_100,
            min_circularity_100: self.min_circularity_100,
            max_aspect_ratio_100: self.max_aspect_ratio_100,
            brown_median_limits: self.brown_median_limits,
            association_radius: self.association_radius,
        }
    }
}

pub fn mag_to_u32(m: Magnification) -> u32 {
    match m {
        Magnification::X100 => 100,
        Magnification::X200 => 200,
    }
}

pub fn mag_from_u32(v: u32) -> Result<Magnification> {
    match v {
        100 => Ok(Magnification::X100),
        200 => Ok(Magnification::X200),
        other => bail!("magnification must be 100 or 200, got {other}"),
    }
}

/// Resolve the `--profiles` argument: the literal `builtin` or a TOML path.
pub fn load_profiles(arg: &str, magnification: Magnification) -> Result<SettingsPair> {
    if arg == "builtin" {
        return Ok(SettingsPair::builtin(magnification));
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("{}: cannot read profile file", path.display()))?;
    let file: ProfileFile =
        toml::from_str(&text).with_context(|| format!("{}: invalid profile TOML", path.display()))?;
    if file.profile_version != PROFILE_VERSION {
        bail!(
            "{}: unsupported profileVersion {} (expected {PROFILE_VERSION})",
            path.display(),
            file.profile_version
        );
    }
    let file_mag = mag_from_u32(file.magnification)
        .with_context(|| format!("{}: bad magnification", path.display()))?;
    if file_mag != magnification {
        bail!(
            "{}: profile magnification {} does not match requested {}",
            path.display(),
            file.magnification,
            mag_to_u32(magnification)
        );
    }
    let pair = SettingsPair {
        conservative: file
            .conservative
            .to_settings(magnification, Strictness::Conservative),
        liberal: file.liberal.to_settings(magnification, Strictness::Liberal),
    };
    pair.validate(magnification)
        .map_err(|e| anyhow::anyhow!("{}: invalid profiles: {e:?}", path.display()))?;
    Ok(pair)
}

/// Write a profile pair as TOML, with leading `#` provenance comments.
pub fn save_profiles(
    path: &Path,
    magnification: Magnification,
    pair: &SettingsPair,
    header_lines: &[String],
) -> Result<()> {
    let file = ProfileFile {
        profile_version: PROFILE_VERSION,
        magnification: mag_to_u32(magnification),
        conservative: ProfileEntry::from_settings(&pair.conservative),
        liberal: ProfileEntry::from_settings(&pair.liberal),
    };
    let body = toml::to_string_pretty(&file).context("serializing profiles")?;
    let mut text = String::new();
    for line in header_lines {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&body);
    std::fs::write(path, text).with_context(|| format!("{}: cannot write", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_keyword() {
        let pair = load_profiles("builtin", Magnification::X200).unwrap();
        assert_eq!(pair, SettingsPair::builtin(Magnification::X200));
    }

    #[test]
    fn round_trip_via_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        let pair = SettingsPair::builtin(Magnification::X100);
        save_profiles(&path, Magnification::X100, &pair, &["test".into()]).unwrap();
        let back = load_profiles(path.to_str().unwrap(), Magnification::X100).unwrap();
        assert_eq!(pair, back);
    }

    #[test]
    fn magnification_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        let pair = SettingsPair::builtin(Magnification::X100);
        save_profiles(&path, Magnification::X100, &pair, &[]).unwrap();
        assert!(load_profiles(path.to_str().unwrap(), Magnification::X200).is_err());
    }

    #[test]
    fn version_and_nesting_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        let pair = SettingsPair::builtin(Magnification::X200);
        save_profiles(&path, Magnification::X200, &pair, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("profileVersion = 1", "profileVersion = 9")).unwrap();
        let err = load_profiles(path.to_str().unwrap(), Magnification::X200).unwrap_err();
        assert!(err.to_string().contains("profileVersion"));

        // Break the nesting invariant: conservative wider than liberal.
        let mut swapped = SettingsPair::builtin(Magnification::X200);
        std::mem::swap(&mut swapped.conservative, &mut swapped.liberal);
        swapped.conservative.strictness = Strictness::Conservative;
        swapped.liberal.strictness = Strictness::Liberal;
        save_profiles(&path, Magnification::X200, &swapped, &[]).unwrap();
        assert!(load_profiles(path.to_str().unwrap(), Magnification::X200).is_err());
    }
}

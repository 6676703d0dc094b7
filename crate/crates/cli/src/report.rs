//! Report and human-count file formats.
//!
//! Report CSV: header `image,auto_con,auto_lib,auto_mean,human_mean`, one
//! row per image, final `TOTAL` row; UTF-8, LF, `.` decimal separator, one
//! decimal place for means. When any per-image failure occurred an extra
//! `error` column is appended so failures stay visible in the artifact.
//!
//! Human counts CSV: header `image,expert,con,lib`, one row per
//! (image, expert).

use anyhow::{bail, Context, Result};
use follicle_core::census::{format_tenths, ComparisonReport, HumanCounts, ImageCount};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// One per-image line of a detection report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub image_id: String,
    /// Counts, absent when the image failed.
    pub counts: Option<ImageCount>,
    /// Human mean in display tenths, when a comparison was joined in.
    pub human_mean_tenths: Option<u64>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn ok(counts: ImageCount) -> Self {
        ReportRow {
            image_id: counts.image_id.clone(),
            counts: Some(counts),
            human_mean_tenths: None,
            error: None,
        }
    }

    pub fn failed(image_id: impl Into<String>, error: impl Into<String>) -> Self {
        ReportRow {
            image_id: image_id.into(),
            counts: None,
            human_mean_tenths: None,
            error: Some(error.into()),
        }
    }
}

/// Mean of a (con, lib) pair in display tenths: (con+lib)/2 = 5·(con+lib)
/// tenths, always exact.
fn mean_tenths(c: &ImageCount) -> u64 {
    5 * (c.con + c.lib)
}

/// Write the report CSV. Rows must already be in output order; the TOTAL
/// row is computed over the successful rows.
pub fn write_report_csv(
    path: &Path,
    rows: &[ReportRow],
    human_mean_total_tenths: Option<u64>,
) -> Result<()> {
    let with_errors = rows.iter().any(|r| r.error.is_some());
    let mut out = String::new();
    out.push_str("image,auto_con,auto_lib,auto_mean,human_mean");
    if with_errors {
        out.push_str(",error");
    }
    out.push('\n');

    let mut total = ImageCount::new("TOTAL", 0, 0);
    for r in rows {
        match &r.counts {
            Some(c) => {
                total.con += c.con;
                total.lib += c.lib;
                out.push_str(&format!(
                    "{},{},{},{},{}",
                    r.image_id,
                    c.con,
                    c.lib,
                    format_tenths(mean_tenths(c)),
                    r.human_mean_tenths.map(format_tenths).unwrap_or_default()
                ));
            }
            None => out.push_str(&format!("{},,,,", r.image_id)),
        }
        if with_errors {
            out.push(',');
            if let Some(e) = &r.error {
                out.push_str(&csv_quote(e));
            }
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "TOTAL,{},{},{},{}",
        total.con,
        total.lib,
        format_tenths(mean_tenths(&total)),
        human_mean_total_tenths.map(format_tenths).unwrap_or_default()
    ));
    if with_errors {
        out.push(',');
    }
    out.push('\n');
    std::fs::write(path, out).with_context(|| format!("{}: cannot write report", path.display()))
}

fn csv_quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// JSON mirror of the report, plus comparison/timing blocks when present.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonReport {
    pub rows: Vec<JsonRow>,
    pub total: JsonTotal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<JsonComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<JsonTiming>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonRow {
    pub image: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auto_con: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auto_lib: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auto_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonTotal {
    pub auto_con: u64,
    pub auto_lib: u64,
    pub auto_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub human_mean: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonComparison {
    pub dev_conservative_pct: f64,
    pub dev_liberal_pct: f64,
    pub dev_mean_pct: f64,
    pub within_5_conservative: bool,
    pub within_10_liberal: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JsonTiming {
    pub wall_clock_s: f64,
    pub per_image_s: Vec<(String, f64)>,
}

pub fn build_json_report(
    rows: &[ReportRow],
    comparison: Option<&ComparisonReport>,
    timing: Option<JsonTiming>,
) -> JsonReport {
    let mut total = ImageCount::new("TOTAL", 0, 0);
    let json_rows = rows
        .iter()
        .map(|r| {
            if let Some(c) = &r.counts {
                total.con += c.con;
                total.lib += c.lib;
            }
            JsonRow {
                image: r.image_id.clone(),
                auto_con: r.counts.as_ref().map(|c| c.con),
                auto_lib: r.counts.as_ref().map(|c| c.lib),
                auto_mean: r.counts.as_ref().map(|c| c.mean()),
                human_mean: r.human_mean_tenths.map(|t| t as f64 / 10.0),
                error: r.error.clone(),
            }
        })
        .collect();
    JsonReport {
        rows: json_rows,
        total: JsonTotal {
            auto_con: total.con,
            auto_lib: total.lib,
            auto_mean: total.mean(),
            human_mean: comparison.map(|c| c.human_mean_total_tenths as f64 / 10.0),
        },
        comparison: comparison.map(|c| JsonComparison {
            dev_conservative_pct: c.dev_conservative_pct,
            dev_liberal_pct: c.dev_liberal_pct,
            dev_mean_pct: c.dev_mean_pct,
            within_5_conservative: c.within_5_conservative,
            within_10_liberal: c.within_10_liberal,
        }),
        timing,
    }
}

pub fn write_json_report(path: &Path, report: &JsonReport) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("{}: cannot write JSON report", path.display()))?;
    serde_json::to_writer_pretty(&mut f, report).context("serializing JSON report")?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Read the automated columns of a report CSV back as per-image counts
/// (skipping the TOTAL row and any error rows).
pub fn read_report_csv(path: &Path) -> Result<Vec<ImageCount>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("{}: cannot read report", path.display()))?;
    {
        let headers = rdr.headers()?;
        let expected = ["image", "auto_con", "auto_lib", "auto_mean", "human_mean"];
        if headers.len() < 5 || headers.iter().take(5).ne(expected) {
            bail!("{}: unexpected report header {headers:?}", path.display());
        }
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let id = record.get(0).unwrap_or_default();
        if id == "TOTAL" {
            continue;
        }
        let con = record.get(1).unwrap_or_default();
        let lib = record.get(2).unwrap_or_default();
        if con.is_empty() && lib.is_empty() {
            continue; // error row
        }
        let parse = |s: &str, col: &str| {
            s.parse::<u64>()
                .with_context(|| format!("{}: row {}: bad {col} {s:?}", path.display(), i + 2))
        };
        out.push(ImageCount::new(id, parse(con, "auto_con")?, parse(lib, "auto_lib")?));
    }
    Ok(out)
}

/// Read a human counts CSV (`image,expert,con,lib`) into per-image rows with
/// experts ordered by their expert id.
pub fn read_human_csv(path: &Path) -> Result<Vec<HumanCounts>> {
    let mut rdr = csv::Reader::from_path(path)
        .with_context(|| format!("{}: cannot read human counts", path.display()))?;
    {
        let headers = rdr.headers()?;
        if headers.iter().ne(["image", "expert", "con", "lib"]) {
            bail!("{}: unexpected header {headers:?}", path.display());
        }
    }
    // (image, expert id, con, lib) in file order.
    let mut raw: Vec<(String, u32, u64, u64)> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        let field = |j: usize, name: &str| -> Result<String> {
            record
                .get(j)
                .map(str::to_string)
                .with_context(|| format!("{}: row {}: missing {name}", path.display(), i + 2))
        };
        let image = field(0, "image")?;
        let expert: u32 = field(1, "expert")?
            .parse()
            .with_context(|| format!("{}: row {}: bad expert", path.display(), i + 2))?;
        let con: u64 = field(2, "con")?
            .parse()
            .with_context(|| format!("{}: row {}: bad con", path.display(), i + 2))?;
        let lib: u64 = field(3, "lib")?
            .parse()
            .with_context(|| format!("{}: row {}: bad lib", path.display(), i + 2))?;
        if con > lib {
            bail!(
                "{}: row {}: con {con} exceeds lib {lib}",
                path.display(),
                i + 2
            );
        }
        raw.push((image, expert, con, lib));
    }
    // Group by image, experts ordered by their id within each image.
    let mut grouped: Vec<(String, Vec<(u32, u64, u64)>)> = Vec::new();
    for (image, expert, con, lib) in raw {
        match grouped.iter_mut().find(|(id, _)| *id == image) {
            Some((_, v)) => v.push((expert, con, lib)),
            None => grouped.push((image, vec![(expert, con, lib)])),
        }
    }
    Ok(grouped
        .into_iter()
        .map(|(image_id, mut v)| {
            v.sort_by_key(|&(e, _, _)| e);
            HumanCounts {
                image_id,
                experts: v.into_iter().map(|(_, c, l)| (c, l)).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_csv_shape_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            ReportRow::ok(ImageCount::new("a", 0, 1)),
            ReportRow::ok(ImageCount::new("b", 2, 4)),
        ];
        write_report_csv(&path, &rows, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "image,auto_con,auto_lib,auto_mean,human_mean\na,0,1,0.5,\nb,2,4,3.0,\nTOTAL,2,5,3.5,\n"
        );
        let back = read_report_csv(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!((back[1].con, back[1].lib), (2, 4));
    }

    #[test]
    fn error_rows_gain_error_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            ReportRow::ok(ImageCount::new("a", 1, 1)),
            ReportRow::failed("bad", "cannot decode"),
        ];
        write_report_csv(&path, &rows, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("image,auto_con,auto_lib,auto_mean,human_mean,error\n"));
        assert!(text.contains("bad,,,,,cannot decode\n"));
        assert!(text.contains("TOTAL,1,1,1.0,,\n"));
        // error rows are skipped on read-back
        assert_eq!(read_report_csv(&path).unwrap().len(), 1);
    }

    #[test]
    fn human_csv_parsing_groups_and_orders() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(
            &path,
            "image,expert,con,lib\nimg1,2,5,6\nimg1,1,0,2\nimg2,1,1,1\nimg2,2,0,0\n",
        )
        .unwrap();
        let h = read_human_csv(&path).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].image_id, "img1");
        assert_eq!(h[0].experts, vec![(0, 2), (5, 6)]);
    }

    #[test]
    fn human_csv_rejects_con_above_lib() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "image,expert,con,lib\nimg1,1,5,2\n").unwrap();
        assert!(read_human_csv(&path).is_err());
    }
}

//! Cross-language aggregation and report rendering.
//!
//! Tables print three decimals without a leading zero; JSON keeps full
//! precision. All output is a pure function of the inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crosslang::{Component, CrossLanguageReport};
use crate::probe::{LabelCorrelation, LanguageRow, SetSummary};

/// Correlations weaker than this are shown as `---` in tables.
pub const DEFAULT_NOTABLE_R: f64 = 0.30;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no language rows to aggregate")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Averages for one template set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetAggregate {
    pub mean_top_negative_r: Option<f64>,
    pub mean_top_positive_r: Option<f64>,
    pub east_west_proportion: f64,
    pub mean_gdp_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub model_id: String,
    pub languages: Vec<String>,
    pub country_origin: SetAggregate,
    pub country_prestige: SetAggregate,
    pub job_on_countries: SetAggregate,
    pub mean_job_accuracy: f64,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn aggregate_set<'a>(sets: impl Iterator<Item = &'a SetSummary> + Clone) -> SetAggregate {
    let n = sets.clone().count() as f64;
    SetAggregate {
        mean_top_negative_r: mean_defined(
            sets.clone().map(|s| s.top_negative.as_ref().map(|l| l.r)),
        ),
        mean_top_positive_r: mean_defined(
            sets.clone().map(|s| s.top_positive.as_ref().map(|l| l.r)),
        ),
        east_west_proportion: sets.clone().filter(|s| s.east_west).count() as f64 / n,
        mean_gdp_r: sets.map(|s| s.gdp_r).sum::<f64>() / n,
    }
}

pub fn aggregate(model_id: &str, rows: &[LanguageRow]) -> Result<AggregateReport, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(AggregateReport {
        model_id: model_id.to_string(),
        languages: rows.iter().map(|r| r.language.clone()).collect(),
        country_origin: aggregate_set(rows.iter().map(|r| &r.country_origin)),
        country_prestige: aggregate_set(rows.iter().map(|r| &r.country_prestige)),
        job_on_countries: aggregate_set(rows.iter().map(|r| &r.job_on_countries)),
        mean_job_accuracy: rows.iter().map(|r| r.job_accuracy).sum::<f64>() / rows.len() as f64,
    })
}

/// Three decimals with the leading zero dropped: `0.933` becomes `.933`,
/// `-0.69` becomes `-.690`.
pub fn fmt3(x: f64) -> String {
    let s = format!("{:.3}", x);
    let s = if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    };
    if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else {
        s
    }
}

fn notable(r: f64, threshold: f64) -> String {
    if r.abs() < threshold {
        "---".to_string()
    } else {
        fmt3(r)
    }
}

fn opt3(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), fmt3)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn aggregate_markdown(report: &AggregateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Aggregate results: {}", report.model_id);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Averaged over {} language(s): {}.",
        report.languages.len(),
        report.languages.join(", ")
    );
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "| Template set | Negative corr | Positive corr | East-west | GDP corr |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (name, a) in [
        ("Country origin", &report.country_origin),
        ("Country prestige", &report.country_prestige),
        ("Job axis on countries", &report.job_on_countries),
    ] {
        let _ = writeln!(
            s,
            "| {name} | {} | {} | {} | {} |",
            opt3(a.mean_top_negative_r),
            opt3(a.mean_top_positive_r),
            fmt3(a.east_west_proportion),
            fmt3(a.mean_gdp_r)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Job class. accuracy: {}", fmt3(report.mean_job_accuracy));
    s
}

fn label_cells(l: Option<&LabelCorrelation>, threshold: f64) -> (String, String) {
    match l {
        Some(l) if l.r.abs() >= threshold => (l.label.clone(), fmt3(l.r)),
        _ => ("---".to_string(), "---".to_string()),
    }
}

pub fn per_language_markdown(rows: &[LanguageRow], notable_r: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Per-language results");
    let _ = writeln!(s);
    for (title, pick) in [
        (
            "Country origin",
            (|r: &LanguageRow| &r.country_origin) as fn(&LanguageRow) -> &SetSummary,
        ),
        ("Country prestige", |r: &LanguageRow| &r.country_prestige),
        ("Job axis on countries", |r: &LanguageRow| {
            &r.job_on_countries
        }),
    ] {
        let _ = writeln!(s, "## {title}");
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "| Lang | Negative label | corr | Positive label | corr | East-west | GDP corr |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|");
        for row in rows {
            let set = pick(row);
            let (nl, nr) = label_cells(set.top_negative.as_ref(), notable_r);
            let (pl, pr) = label_cells(set.top_positive.as_ref(), notable_r);
            let _ = writeln!(
                s,
                "| {} | {nl} | {nr} | {pl} | {pr} | {} | {} |",
                row.language,
                yes_no(set.east_west),
                notable(set.gdp_r, notable_r)
            );
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "## Job classification");
    let _ = writeln!(s);
    let _ = writeln!(s, "| Lang | Accuracy |");
    let _ = writeln!(s, "|---|---|");
    for row in rows {
        let _ = writeln!(s, "| {} | {} |", row.language, fmt3(row.job_accuracy));
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn per_language_csv(rows: &[LanguageRow]) -> String {
    let mut s = String::new();
    let mut header = vec!["language".to_string()];
    for set in ["origin", "prestige", "job_country"] {
        for col in [
            "neg_label",
            "neg_r",
            "pos_label",
            "pos_r",
            "east_west",
            "gdp_r",
        ] {
            header.push(format!("{set}_{col}"));
        }
    }
    header.push("job_accuracy".into());
    let _ = writeln!(s, "{}", header.join(","));
    for row in rows {
        let mut cells = vec![csv_field(&row.language)];
        for set in [
            &row.country_origin,
            &row.country_prestige,
            &row.job_on_countries,
        ] {
            for l in [&set.top_negative, &set.top_positive] {
                match l {
                    Some(l) => {
                        cells.push(csv_field(&l.label));
                        cells.push(l.r.to_string());
                    }
                    None => {
                        cells.push(String::new());
                        cells.push(String::new());
                    }
                }
            }
            cells.push(set.east_west.to_string());
            cells.push(set.gdp_r.to_string());
        }
        cells.push(row.job_accuracy.to_string());
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Blue for -1, white for 0, red for +1.
fn diverging(r: f64) -> String {
    let t = r.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 - (255.0 - c) * t.abs()).round() as u8;
    let (r0, g0, b0) = if t >= 0.0 {
        (178.0, 24.0, 43.0)
    } else {
        (33.0, 102.0, 172.0)
    };
    format!("#{:02x}{:02x}{:02x}", fade(r0), fade(g0), fade(b0))
}

/// Value-annotated heatmap of the cross-language matrix.
pub fn heatmap_svg(report: &CrossLanguageReport) -> String {
    const CELL: usize = 48;
    const MARGIN: usize = 56;
    let langs = &report.matrix.languages;
    let l = langs.len();
    let size = MARGIN + CELL * l + 8;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<title>Cross-language correlation of the job-prestige axis</title>"#
    );
    for (i, lang) in langs.iter().enumerate() {
        let centre = MARGIN + CELL * i + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text class="col-label" x="{centre}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN - 10,
            xml_escape(lang)
        );
        let _ = writeln!(
            s,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 10,
            centre + 4,
            xml_escape(lang)
        );
    }
    for i in 0..l {
        for j in 0..l {
            let v = report.matrix.values[i][j];
            let (x, y) = (MARGIN + CELL * j, MARGIN + CELL * i);
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#ffffff"/>"##,
                diverging(v)
            );
            let ink = if v.abs() > 0.6 { "#ffffff" } else { "#000000" };
            let _ = writeln!(
                s,
                r#"<text class="value" x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4,
                fmt3(v)
            );
        }
    }
    let _ = writeln!(s, "</svg>");
    s
}

fn component_cell(c: &Component) -> String {
    match c {
        Component::Defined { r } => fmt3(*r),
        Component::Undefined { .. } => "n/a".to_string(),
    }
}

pub fn crosslang_markdown(report: &CrossLanguageReport) -> String {
    let so = &report.second_order;
    let mut s = String::new();
    let _ = writeln!(s, "# Second-order correlations");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "| Language pairs | Geographic distance | GDP difference | Lexical similarity |"
    );
    let _ = writeln!(s, "|---|---|---|---|");
    let _ = writeln!(
        s,
        "| {} | {} | {} | {} |",
        so.n_pairs,
        component_cell(&so.geo_r),
        component_cell(&so.gdp_diff_r),
        component_cell(&so.lexsim_r)
    );
    s
}

/// Inputs to [`emit_reports`].
pub struct ReportInputs<'a> {
    pub model_id: &'a str,
    pub rows: &'a [LanguageRow],
    pub crosslang: Option<&'a CrossLanguageReport>,
    pub notable_r: f64,
}

fn write(path: PathBuf, content: &str, written: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    fs::write(&path, content).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    written.push(path);
    Ok(())
}

/// Writes every report artifact into `dir` and returns their paths.
pub fn emit_reports(dir: &Path, inputs: &ReportInputs<'_>) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let report = aggregate(inputs.model_id, inputs.rows)?;
    let mut written = Vec::new();
    write(
        dir.join("aggregate.json"),
        &(serde_json::to_string_pretty(&report).expect("aggregate serializes") + "\n"),
        &mut written,
    )?;
    write(
        dir.join("aggregate.md"),
        &aggregate_markdown(&report),
        &mut written,
    )?;
    write(
        dir.join("per_language.csv"),
        &per_language_csv(inputs.rows),
        &mut written,
    )?;
    write(
        dir.join("per_language.md"),
        &per_language_markdown(inputs.rows, inputs.notable_r),
        &mut written,
    )?;
    if let Some(cl) = inputs.crosslang {
        write(
            dir.join("job_axis_heatmap.svg"),
            &heatmap_svg(cl),
            &mut written,
        )?;
        write(
            dir.join("second_order.md"),
            &crosslang_markdown(cl),
            &mut written,
        )?;
    }
    Ok(written)
}

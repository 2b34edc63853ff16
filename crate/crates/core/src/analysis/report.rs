//! CSV tables and SVG plots for an analysis run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AnalysisError, DifficultyProfile, FrequencyVector, ItemType};
use crate::eval::stats::{Metric, MetricSummary, RunComparison, Scalar};
use crate::puzzle::Size;

pub const SUMMARIES_CSV: &str = "summaries.csv";
pub const DELTAS_CSV: &str = "deltas.csv";
pub const FREQUENCIES_CSV: &str = "frequencies.csv";
pub const DIFFICULTIES_CSV: &str = "difficulties.csv";

/// A labelled run's summaries, one per size.
pub type RunSummaries<T> = (String, Vec<(Size, MetricSummary<T>)>);

pub struct ReportInputs<'a, T> {
    pub summaries: &'a [RunSummaries<T>],
    /// Labelled comparisons between runs.
    pub comparisons: &'a [(String, RunComparison<T>)],
    pub frequencies: &'a [(Size, FrequencyVector<T>)],
    pub profiles: &'a [(Size, DifficultyProfile<T>)],
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub size: Size,
    pub n_puzzles: usize,
    pub mean_a_puzzle: f64,
    pub std_a_puzzle: f64,
    pub se_a_puzzle: f64,
    pub mean_a_cell: f64,
    pub std_a_cell: f64,
    pub se_a_cell: f64,
    pub mean_a_best_cell: f64,
    pub std_a_best_cell: f64,
    pub se_a_best_cell: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DeltaRow {
    pub comparison: String,
    pub metric: String,
    /// A size token, or `mean` for the average over sizes.
    pub size: String,
    pub delta: f64,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FrequencyRow {
    pub size: Size,
    pub item_type: ItemType,
    pub herring: bool,
    pub mean_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DifficultyRow {
    pub size: Size,
    pub item_type: ItemType,
    pub coefficient: f64,
    pub difficulty: f64,
}

fn f<T: Scalar>(x: T) -> f64 {
    x.to_f64().expect("floats convert to f64")
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), AnalysisError> {
    fs::write(path, text).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the report into `dir` and returns the files written. Sections
/// without input are skipped.
pub fn emit_report<T: Scalar>(
    dir: &Path,
    inputs: &ReportInputs<'_, T>,
) -> Result<Vec<PathBuf>, AnalysisError> {
    if inputs.summaries.is_empty() && inputs.frequencies.is_empty() {
        return Err(AnalysisError::EmptyGroup);
    }
    fs::create_dir_all(dir).map_err(|source| AnalysisError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();

    if !inputs.summaries.is_empty() {
        let rows: Vec<SummaryRow> = inputs
            .summaries
            .iter()
            .flat_map(|(run, sizes)| {
                sizes.iter().map(move |(size, s)| SummaryRow {
                    run: run.clone(),
                    size: *size,
                    n_puzzles: s.n_puzzles,
                    mean_a_puzzle: f(s.mean_a_puzzle),
                    std_a_puzzle: f(s.std_a_puzzle),
                    se_a_puzzle: f(s.se_a_puzzle),
                    mean_a_cell: f(s.mean_a_cell),
                    std_a_cell: f(s.std_a_cell),
                    se_a_cell: f(s.se_a_cell),
                    mean_a_best_cell: f(s.mean_a_best_cell),
                    std_a_best_cell: f(s.std_a_best_cell),
                    se_a_best_cell: f(s.se_a_best_cell),
                })
            })
            .collect();
        let path = dir.join(SUMMARIES_CSV);
        write_csv(&path, &rows)?;
        written.push(path);

        for metric in Metric::ALL {
            let series: Vec<Series> = inputs
                .summaries
                .iter()
                .map(|(run, sizes)| Series {
                    label: run.clone(),
                    points: sizes
                        .iter()
                        .map(|(size, s)| {
                            let (m, e) = metric.of(s);
                            (size.to_string(), f(m), f(e))
                        })
                        .collect(),
                })
                .collect();
            let path = dir.join(format!("{}.svg", metric.name()));
            write_text(&path, &error_bar_svg(&format!("mean {}", metric.name()), &series, (0.0, 1.0)))?;
            written.push(path);
        }
    }

    if !inputs.comparisons.is_empty() {
        let mut rows = Vec::new();
        let mut series = Vec::new();
        for (label, cmp) in inputs.comparisons {
            for d in &cmp.per_size {
                rows.push(DeltaRow {
                    comparison: label.clone(),
                    metric: cmp.metric.name().into(),
                    size: d.size.to_string(),
                    delta: f(d.delta),
                    error: Some(f(d.error)),
                });
            }
            rows.push(DeltaRow {
                comparison: label.clone(),
                metric: cmp.metric.name().into(),
                size: "mean".into(),
                delta: f(cmp.mean_delta),
                error: cmp.mean_delta_error.map(f),
            });
            series.push(Series {
                label: format!("{label} ({})", cmp.metric.name()),
                points: cmp
                    .per_size
                    .iter()
                    .map(|d| (d.size.to_string(), f(d.delta), f(d.error)))
                    .collect(),
            });
        }
        let path = dir.join(DELTAS_CSV);
        write_csv(&path, &rows)?;
        written.push(path);
        let path = dir.join("deltas.svg");
        write_text(&path, &error_bar_svg("difference of means", &series, (-1.0, 1.0)))?;
        written.push(path);
    }

    if !inputs.frequencies.is_empty() {
        let rows: Vec<FrequencyRow> = inputs
            .frequencies
            .iter()
            .flat_map(|(size, fv)| {
                ItemType::all().into_iter().map(move |t| FrequencyRow {
                    size: *size,
                    item_type: t,
                    herring: t.is_herring(),
                    mean_frequency: f(fv.get(t)),
                })
            })
            .collect();
        let path = dir.join(FREQUENCIES_CSV);
        write_csv(&path, &rows)?;
        written.push(path);
    }

    if !inputs.profiles.is_empty() {
        let rows: Vec<DifficultyRow> = inputs
            .profiles
            .iter()
            .flat_map(|(size, p)| {
                p.types.iter().enumerate().map(move |(i, t)| DifficultyRow {
                    size: *size,
                    item_type: *t,
                    coefficient: f(p.coefficients[i]),
                    difficulty: f(p.difficulties[i]),
                })
            })
            .collect();
        let path = dir.join(DIFFICULTIES_CSV);
        write_csv(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}

struct Series {
    label: String,
    /// `(x label, value, error)`
    points: Vec<(String, f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Points with vertical error bars, one colour per series, categorical x.
fn error_bar_svg(title: &str, series: &[Series], default_range: (f64, f64)) -> String {
    let (width, height) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 160.0, 40.0, 50.0);
    let mut xs: Vec<String> = Vec::new();
    for s in series {
        for (x, _, _) in &s.points {
            if !xs.contains(x) {
                xs.push(x.clone());
            }
        }
    }
    let (mut lo, mut hi) = default_range;
    for s in series {
        for &(_, v, e) in &s.points {
            lo = lo.min(v - e);
            hi = hi.max(v + e);
        }
    }
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let sx = |i: usize| left + plot_w * (i as f64 + 0.5) / xs.len().max(1) as f64;
    let sy = |v: f64| top + plot_h * (hi - v) / (hi - lo);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, left + plot_w / 2.0, esc(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            left + plot_w,
            left - 6.0,
            y + 4.0
        );
    }
    for (i, x) in xs.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            sx(i),
            top + plot_h + 20.0,
            esc(x)
        );
    }
    let n = series.len().max(1) as f64;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let offset = (k as f64 - (n - 1.0) / 2.0) * 8.0;
        for (x, v, e) in &s.points {
            let i = xs.iter().position(|p| p == x).expect("collected above");
            let cx = sx(i) + offset;
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/><circle cx="{cx:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                sy(v + e),
                sy(v - e),
                sy(*v)
            );
        }
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<circle cx="{lx}" cy="{:.1}" r="4" fill="{color}"/><text x="{}" y="{ly:.1}">{}</text>"#,
            ly - 4.0,
            lx + 10.0,
            esc(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stats::{compare_runs, summarize};

    fn read<R: serde::de::DeserializeOwned>(path: &Path) -> Vec<R> {
        csv::Reader::from_path(path)
            .unwrap()
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap()
    }

    #[test]
    fn csv_round_trip_and_delta_table() {
        let s23 = Size::new(2, 3).unwrap();
        let s45 = Size::new(4, 5).unwrap();
        let with = vec![
            (s23, summarize(&[(1.0, 1.0, 1.0), (0.0, 0.5, 0.75), (1.0, 1.0, 1.0)]).unwrap()),
            (s45, summarize(&[(0.0, 0.2, 0.4), (0.0, 0.35, 0.4)]).unwrap()),
        ];
        let without = vec![
            (s23, summarize(&[(1.0, 1.0, 1.0), (1.0, 1.0, 1.0)]).unwrap()),
            (s45, summarize(&[(1.0, 1.0, 1.0), (0.0, 0.6, 0.8)]).unwrap()),
        ];
        let cmp = compare_runs(&with, &without, Metric::ACell).unwrap();
        let summaries = vec![("rh5".to_string(), with), ("rh0".to_string(), without)];
        let comparisons = vec![("rh0 - rh5".to_string(), cmp.clone())];
        let mut fv = vec![0.0; ItemType::all().len()];
        fv[0] = 0.25;
        fv[20] = 0.75;
        let frequencies = vec![(s23, FrequencyVector(fv))];
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(
            dir.path(),
            &ReportInputs {
                summaries: &summaries,
                comparisons: &comparisons,
                frequencies: &frequencies,
                profiles: &[],
            },
        )
        .unwrap();
        assert!(files.iter().all(|f| f.exists()));
        assert!(!dir.path().join(DIFFICULTIES_CSV).exists());

        let rows: Vec<SummaryRow> = read(&dir.path().join(SUMMARIES_CSV));
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].mean_a_cell, summaries[0].1[0].1.mean_a_cell);
        assert_eq!(rows[1].se_a_cell, summaries[0].1[1].1.se_a_cell);

        let deltas: Vec<DeltaRow> = read(&dir.path().join(DELTAS_CSV));
        assert_eq!(deltas.len(), 3);
        assert_eq!(deltas[0].delta, cmp.per_size[0].delta);
        assert_eq!(deltas[2].size, "mean");
        assert_eq!(deltas[2].error, cmp.mean_delta_error);

        let freqs: Vec<FrequencyRow> = read(&dir.path().join(FREQUENCIES_CSV));
        assert_eq!(freqs.len(), 22);
        assert_eq!(freqs[20].mean_frequency, 0.75);
        assert!(freqs[20].herring);

        let svg = fs::read_to_string(dir.path().join("a_cell.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("rh5") && svg.contains("4x5"));
    }

    #[test]
    fn frequencies_only() {
        let frequencies = vec![(Size::new(2, 1).unwrap(), FrequencyVector(vec![1.0 / 22.0; 22]))];
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report::<f64>(
            dir.path(),
            &ReportInputs {
                summaries: &[],
                comparisons: &[],
                frequencies: &frequencies,
                profiles: &[],
            },
        )
        .unwrap();
        assert_eq!(files, vec![dir.path().join(FREQUENCIES_CSV)]);
    }
}

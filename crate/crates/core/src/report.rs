//! Table-style summaries of training runs: timing rows with relative
//! wall-time change, and significance rows from paired t-tests.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{shapiro_wilk, table3_row, SWTestResult, Table3Row, ALPHA};
use crate::trainer::{ModelSummary, RunRecord};
use crate::SCHEMA_VERSION;

/// `h:mm:ss`, rounded to the nearest second.
pub fn format_hms(ms: u64) -> String {
    let s = (ms + 500) / 1000;
    format!("{}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60)
}

/// Parses `h:m:s`, `m:s` or `s` into milliseconds.
pub fn parse_hms(text: &str) -> Result<u64> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    if parts.len() > 3 || parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Usage(format!(
            "bad duration {text:?}, expected h:m:s"
        )));
    }
    let mut secs = 0u64;
    for p in parts {
        let v: u64 = p
            .parse()
            .map_err(|_| Error::Usage(format!("bad duration {text:?}, expected h:m:s")))?;
        secs = secs * 60 + v;
    }
    Ok(secs * 1000)
}

/// `(variant − baseline) / baseline × 100`; `None` for a zero baseline.
pub fn rel_delta(variant_ms: u64, baseline_ms: u64) -> Option<f64> {
    (baseline_ms > 0).then(|| (variant_ms as f64 - baseline_ms as f64) / baseline_ms as f64 * 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub depth: u32,
    pub breadth: u32,
    pub params: usize,
    pub runs: usize,
    /// Mean test accuracy, percent.
    pub accuracy: f64,
    /// Mean wall time.
    pub wall_time_ms: u64,
    /// Set on the baseline row, as the change the variant brings.
    pub rel_delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Significance {
    Tested {
        row: Table3Row,
        /// `None` when a group's accuracies are constant.
        ebcle_normality: Option<SWTestResult>,
        baseline_normality: Option<SWTestResult>,
    },
    InsufficientRuns {
        ebcle_runs: usize,
        baseline_runs: usize,
    },
    Degenerate {
        detail: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub baseline: ReportRow,
    pub variant: ReportRow,
    pub significance: Significance,
}

/// Reads a JSON array of run records, or a single record.
pub fn load_runs(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_runs(&text, &path.display().to_string())
}

pub fn parse_runs(text: &str, origin: &str) -> Result<Vec<RunRecord>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let runs: Vec<RunRecord> = if value.is_array() {
        deserialize_at(value, origin)?
    } else {
        vec![deserialize_at(value, origin)?]
    };
    for (i, r) in runs.iter().enumerate() {
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse {
                path: origin.to_string(),
                message: format!(
                    "[{i}].schema_version: expected {SCHEMA_VERSION}, found {}",
                    r.schema_version
                ),
            });
        }
    }
    Ok(runs)
}

fn deserialize_at<T: serde::de::DeserializeOwned>(
    value: serde_json::Value,
    origin: &str,
) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: format!("{}: {}", e.path(), e.inner()),
    })
}

fn model_label(m: &ModelSummary) -> String {
    format!("{}-{}", m.family, m.depth)
}

fn summarize(runs: &[RunRecord], group: &str) -> Result<ReportRow> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Consistency(format!("{group}: no runs")))?;
    if let Some(other) = runs.iter().find(|r| r.model != first.model) {
        return Err(Error::Consistency(format!(
            "{group}: mixes {} and {}",
            model_label(&first.model),
            model_label(&other.model)
        )));
    }
    let n = runs.len();
    let accuracy = runs.iter().map(|r| r.final_test_accuracy).sum::<f64>() / n as f64;
    let total_ms: u128 = runs.iter().map(|r| r.wall_time_ms as u128).sum();
    let wall_time_ms = ((total_ms + n as u128 / 2) / n as u128) as u64;
    Ok(ReportRow {
        label: model_label(&first.model),
        depth: first.model.depth,
        breadth: first.model.width,
        params: first.param_count,
        runs: n,
        accuracy,
        wall_time_ms,
        rel_delta: None,
    })
}

fn normality(values: &[f64]) -> Option<SWTestResult> {
    shapiro_wilk(values).ok()
}

/// Significance of "the baseline is more accurate" from paired accuracies.
pub fn significance(ebcle: &[f64], baseline: &[f64]) -> Significance {
    if ebcle.len() < 3 || baseline.len() < 3 {
        return Significance::InsufficientRuns {
            ebcle_runs: ebcle.len(),
            baseline_runs: baseline.len(),
        };
    }
    match table3_row(ebcle, baseline) {
        Ok(row) => Significance::Tested {
            row,
            ebcle_normality: normality(ebcle),
            baseline_normality: normality(baseline),
        },
        Err(e) => Significance::Degenerate {
            detail: e.to_string(),
        },
    }
}

fn accuracies(runs: &[RunRecord]) -> Vec<f64> {
    runs.iter().map(|r| r.final_test_accuracy).collect()
}

/// Timing row pair plus significance; runs are paired in file order.
pub fn compare(baseline: &[RunRecord], variant: &[RunRecord]) -> Result<CompareReport> {
    let mut base = summarize(baseline, "baseline")?;
    let var = summarize(variant, "variant")?;
    base.rel_delta = rel_delta(var.wall_time_ms, base.wall_time_ms);
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        baseline: base,
        variant: var,
        significance: significance(&accuracies(variant), &accuracies(baseline)),
    })
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn opt2(v: Option<f64>) -> String {
    v.map(|d| format!("{d:.2}")).unwrap_or_default()
}

const TIMING_HEADER: [&str; 7] = [
    "Model",
    "H′",
    "χ′",
    "Params",
    "Acc. (%)",
    "Time (h:m:s)",
    "REL. Δ (%)",
];
const SIGNIFICANCE_HEADER: [&str; 6] = [
    "p-value",
    "EBCLE mean",
    "EBCLE variance",
    "Baseline mean",
    "Baseline variance",
    "p < 0.05",
];

fn timing_cells(r: &ReportRow) -> Vec<String> {
    vec![
        r.label.clone(),
        r.depth.to_string(),
        r.breadth.to_string(),
        thousands(r.params),
        format!("{:.2}", r.accuracy),
        format_hms(r.wall_time_ms),
        opt2(r.rel_delta),
    ]
}

impl Significance {
    fn cells(&self) -> Vec<String> {
        match self {
            Significance::Tested { row, .. } => vec![
                format!("{:.4}", row.test.p_one_tailed),
                format!("{:.2}", row.ebcle_mean),
                format!("{:.4}", row.ebcle_variance),
                format!("{:.2}", row.baseline_mean),
                format!("{:.4}", row.baseline_variance),
                if row.test.reject_null { "yes" } else { "no" }.to_string(),
            ],
            Significance::InsufficientRuns { .. } => {
                let mut c = vec!["insufficient runs".to_string()];
                c.resize(SIGNIFICANCE_HEADER.len(), String::new());
                c
            }
            Significance::Degenerate { .. } => {
                let mut c = vec!["degenerate".to_string()];
                c.resize(SIGNIFICANCE_HEADER.len(), String::new());
                c
            }
        }
    }

    fn note(&self) -> Option<String> {
        match self {
            Significance::Tested {
                ebcle_normality,
                baseline_normality,
                ..
            } => {
                let describe = |r: &Option<SWTestResult>| match r {
                    Some(sw) if sw.normal_at(ALPHA) => format!(
                        "W = {:.4}, p = {:.4}, normality not rejected",
                        sw.w_stat, sw.p_value
                    ),
                    Some(sw) => format!(
                        "W = {:.4}, p = {:.4}, normality rejected",
                        sw.w_stat, sw.p_value
                    ),
                    None => "not testable".to_string(),
                };
                Some(format!(
                    "Shapiro-Wilk: EBCLE {}; baseline {}.",
                    describe(ebcle_normality),
                    describe(baseline_normality)
                ))
            }
            Significance::InsufficientRuns {
                ebcle_runs,
                baseline_runs,
            } => Some(format!(
                "t-test needs at least 3 runs per model, got {ebcle_runs} and {baseline_runs}."
            )),
            Significance::Degenerate { detail } => Some(detail.clone()),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = md_table(&SIGNIFICANCE_HEADER, &[self.cells()]);
        if let Some(note) = self.note() {
            let _ = writeln!(out, "\n{note}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        csv_table(&SIGNIFICANCE_HEADER, &[self.cells()])
    }
}

fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(out, "| {} |", r.join(" | "));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .map(|c| csv_field(c))
            .collect::<Vec<_>>()
            .join(",")
    };
    let _ = writeln!(
        out,
        "{}",
        line(header.iter().map(|h| h.to_string()).collect())
    );
    for r in rows {
        let _ = writeln!(out, "{}", line(r.clone()));
    }
    out
}

impl CompareReport {
    fn rows(&self) -> Vec<Vec<String>> {
        vec![timing_cells(&self.baseline), timing_cells(&self.variant)]
    }

    pub fn to_markdown(&self) -> String {
        format!(
            "{}\n{}",
            md_table(&TIMING_HEADER, &self.rows()),
            self.significance.to_markdown()
        )
    }

    /// Timing table, blank line, significance table.
    pub fn to_csv(&self) -> String {
        format!(
            "{}\n{}",
            csv_table(&TIMING_HEADER, &self.rows()),
            self.significance.to_csv()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Family;
    use crate::stats::Direction;
    use crate::trainer::InputScaling;

    fn run(depth: u32, width: u32, acc: f64, ms: u64, seed: u64) -> RunRecord {
        RunRecord {
            schema_version: 1,
            model: ModelSummary {
                family: Family::ResNet,
                depth,
                n_blocks: (depth - 2) / 6,
                width,
            },
            seed,
            train_images: 1600,
            validation_images: 400,
            test_images: 1000,
            final_test_accuracy: acc,
            epoch_accuracies: vec![acc],
            epoch_losses: vec![0.5],
            wall_time_ms: ms,
            param_count: 43_762,
            input_scaling: InputScaling::IDENTITY,
        }
    }

    #[test]
    fn hms_round_trip() {
        assert_eq!(format_hms(2_313_000), "0:38:33");
        assert_eq!(format_hms(3_938_000), "1:05:38");
        assert_eq!(format_hms(1_499), "0:00:01");
        assert_eq!(parse_hms("0:38:33").unwrap(), 2_313_000);
        assert_eq!(parse_hms("24:34").unwrap(), 1_474_000);
        assert_eq!(parse_hms("7").unwrap(), 7_000);
        assert!(parse_hms("1::2").is_err());
        assert!(parse_hms("a:b").is_err());
        for ms in [0u64, 1000, 59_000, 3_600_000, 86_399_000] {
            assert_eq!(parse_hms(&format_hms(ms)).unwrap(), ms);
        }
    }

    #[test]
    fn published_relative_deltas() {
        let d = rel_delta(parse_hms("0:24:34").unwrap(), parse_hms("0:38:33").unwrap()).unwrap();
        assert_eq!(format!("{d:.2}"), "-36.27");
        let d = rel_delta(parse_hms("2:32:59").unwrap(), parse_hms("3:38:47").unwrap()).unwrap();
        assert_eq!(format!("{d:.2}"), "-30.08");
        assert_eq!(rel_delta(5, 0), None);
    }

    #[test]
    fn compare_timing_row() {
        let base = vec![run(14, 8, 92.0, 2_313_000, 0)];
        let var = vec![run(8, 12, 91.0, 1_474_000, 0)];
        let rep = compare(&base, &var).unwrap();
        let d = rep.baseline.rel_delta.unwrap();
        assert!((d - (-36.27)).abs() < 0.005);
        assert_eq!(rep.variant.rel_delta, None);
        assert!(matches!(
            rep.significance,
            Significance::InsufficientRuns {
                ebcle_runs: 1,
                baseline_runs: 1
            }
        ));
        let md = rep.to_markdown();
        assert!(
            md.contains("| ResNet-14 | 14 | 8 | 43,762 | 92.00 | 0:38:33 | -36.27 |"),
            "{md}"
        );
        assert!(md.contains("insufficient runs"));
    }

    #[test]
    fn identical_inputs_give_zero_delta_and_degenerate_test() {
        let runs: Vec<_> = (0..3)
            .map(|s| run(8, 12, 90.0 + s as f64, 1000, s))
            .collect();
        let rep = compare(&runs, &runs).unwrap();
        assert_eq!(rep.baseline.rel_delta, Some(0.0));
        assert!(matches!(rep.significance, Significance::Degenerate { .. }));
        assert!(rep.to_csv().contains(",0.00\n"));
    }

    #[test]
    fn two_runs_are_insufficient() {
        let base: Vec<_> = (0..2).map(|s| run(14, 8, 93.0, 2000, s)).collect();
        let var: Vec<_> = (0..2).map(|s| run(8, 12, 92.0, 1000, s)).collect();
        let rep = compare(&base, &var).unwrap();
        assert!(rep.to_markdown().contains("insufficient runs"));
        assert!(rep
            .to_csv()
            .lines()
            .any(|l| l.starts_with("insufficient runs")));
    }

    #[test]
    fn tested_row_matches_stats() {
        let base: Vec<_> = [95.0, 96.0, 97.5]
            .iter()
            .enumerate()
            .map(|(s, &a)| run(14, 8, a, 2000, s as u64))
            .collect();
        let var: Vec<_> = [94.0, 94.0, 94.5]
            .iter()
            .enumerate()
            .map(|(s, &a)| run(8, 12, a, 1000, s as u64))
            .collect();
        let rep = compare(&base, &var).unwrap();
        let Significance::Tested { row, .. } = &rep.significance else {
            panic!("{:?}", rep.significance)
        };
        let direct = crate::stats::paired_t_one_tailed(
            &[94.0, 94.0, 94.5],
            &[95.0, 96.0, 97.5],
            Direction::BGreater,
        )
        .unwrap();
        assert_eq!(row.test, direct);
        assert!(rep.to_markdown().contains("Shapiro-Wilk"));
    }

    #[test]
    fn mixed_models_are_rejected() {
        let runs = vec![run(8, 12, 90.0, 1, 0), run(14, 8, 90.0, 1, 1)];
        assert!(matches!(compare(&runs, &runs), Err(Error::Consistency(_))));
        assert!(matches!(compare(&[], &runs), Err(Error::Consistency(_))));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let good = serde_json::to_string(&vec![run(8, 12, 90.0, 1, 0)]).unwrap();
        assert_eq!(parse_runs(&good, "x").unwrap().len(), 1);
        let single = serde_json::to_string(&run(8, 12, 90.0, 1, 0)).unwrap();
        assert_eq!(parse_runs(&single, "x").unwrap().len(), 1);
        let bad = good.replace(
            "\"final_test_accuracy\":90.0",
            "\"final_test_accuracy\":\"high\"",
        );
        match parse_runs(&bad, "runs.json") {
            Err(Error::Parse { path, message }) => {
                assert_eq!(path, "runs.json");
                assert!(message.starts_with("[0].final_test_accuracy"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let v2 = good.replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(matches!(parse_runs(&v2, "x"), Err(Error::Parse { .. })));
    }

    #[test]
    fn json_round_trip() {
        let base: Vec<_> = [95.0, 96.0, 97.5]
            .iter()
            .enumerate()
            .map(|(s, &a)| run(14, 8, a, 2000, s as u64))
            .collect();
        let var: Vec<_> = [94.0, 94.0, 94.5]
            .iter()
            .enumerate()
            .map(|(s, &a)| run(8, 12, a, 1000, s as u64))
            .collect();
        let rep = compare(&base, &var).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<CompareReport>(&json).unwrap(), rep);
    }

    #[test]
    fn thousands_separator() {
        assert_eq!(thousands(0), "0");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(765_098), "765,098");
        assert_eq!(thousands(11_004_864), "11,004,864");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rel_delta_formula(v in 1u64..10_000_000, b in 1u64..10_000_000) {
                let d = rel_delta(v, b).unwrap();
                prop_assert!((d - (v as f64 - b as f64) / b as f64 * 100.0).abs() < 1e-9);
                prop_assert_eq!(rel_delta(v, 0), None);
            }

            #[test]
            fn hms_round_trip(secs in 0u64..400_000) {
                prop_assert_eq!(parse_hms(&format_hms(secs * 1000)).unwrap(), secs * 1000);
            }
        }
    }
}

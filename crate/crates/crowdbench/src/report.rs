//! Report emission: JSON, CSV, and a Markdown table.
//!
//! All three formats are pure functions of the aggregate report and
//! format floating-point values deterministically, so emitted bytes
//! depend only on the report contents.

use std::fmt::Write;

use crowdbench_core::scoring::{BatchMetrics, ScoreBreakdown};

use crate::bench::AggregateReport;

/// Column order shared by the CSV report and the Markdown table: the
/// weighted total, the five sub-scores, then the seven raw metrics.
pub const COLUMNS: [&str; 13] = [
    "comprehensive",
    "F_saf",
    "F_suc",
    "F_comf",
    "F_traj",
    "F_effic",
    "M_sr",
    "M_cr",
    "M_tr",
    "M_dr",
    "M_md",
    "M_cdr",
    "M_at",
];

fn column_values(metrics: &BatchMetrics, scores: &ScoreBreakdown) -> [f64; 13] {
    [
        scores.comprehensive,
        scores.f_saf,
        scores.f_suc,
        scores.f_comf,
        scores.f_traj,
        scores.f_effic,
        metrics.sr,
        metrics.cr,
        metrics.tr,
        metrics.dr,
        metrics.md,
        metrics.cdr,
        metrics.at,
    ]
}

/// The report as pretty-printed JSON, newline-terminated.
pub fn report_json(report: &AggregateReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

/// The report as CSV: one pooled row, then one row per seed. Values
/// carry full precision (shortest round-trip formatting).
pub fn report_csv(report: &AggregateReport) -> String {
    let mut out = String::from("row");
    for column in COLUMNS {
        out.push(',');
        out.push_str(column);
    }
    out.push('\n');
    let mut row = |label: &str, metrics: &BatchMetrics, scores: &ScoreBreakdown| {
        out.push_str(label);
        for value in column_values(metrics, scores) {
            let _ = write!(out, ",{value}");
        }
        out.push('\n');
    };
    row("pooled", &report.pooled, &report.scores);
    for seed in &report.per_seed {
        row(&format!("seed:{}", seed.seed), &seed.metrics, &seed.scores);
    }
    out
}

/// The report as a Markdown table (three decimals), suitable for
/// printing to a terminal or pasting into a document.
pub fn markdown_table(report: &AggregateReport) -> String {
    let mut out = String::from("| row |");
    for column in COLUMNS {
        let _ = write!(out, " {column} |");
    }
    out.push_str("\n|---|");
    for _ in COLUMNS {
        out.push_str("---|");
    }
    out.push('\n');
    let mut row = |label: &str, metrics: &BatchMetrics, scores: &ScoreBreakdown| {
        let _ = write!(out, "| {label} |");
        for value in column_values(metrics, scores) {
            let _ = write!(out, " {value:.3} |");
        }
        out.push('\n');
    };
    row("pooled", &report.pooled, &report.scores);
    for seed in &report.per_seed {
        row(&format!("seed:{}", seed.seed), &seed.metrics, &seed.scores);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{aggregate, EpisodeRecord, Outcome, RunSpec};
    use crate::driver::PolicySpec;
    use crowdbench_core::sim::DensityPreset;

    fn sample_report() -> AggregateReport {
        let mut spec = RunSpec::for_preset(DensityPreset::Low, PolicySpec::Greedy);
        spec.seeds = vec![0, 1];
        spec.episodes_per_seed = 1;
        let records = vec![
            EpisodeRecord {
                seed: 0,
                index: 0,
                outcome: Outcome::Success,
                nav_time: 8.0,
                min_sep: 1.0,
                discomfort_steps: 0,
                total_steps: 32,
                cdr: Some(0.0),
                trajectory: Vec::new(),
            },
            EpisodeRecord {
                seed: 1,
                index: 0,
                outcome: Outcome::Timeout,
                nav_time: 30.0,
                min_sep: 0.4,
                discomfort_steps: 6,
                total_steps: 120,
                cdr: Some(0.25),
                trajectory: Vec::new(),
            },
        ];
        aggregate(&records, &spec, 0).unwrap()
    }

    #[test]
    fn csv_has_the_published_column_order() {
        let csv = report_csv(&sample_report());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "row,comprehensive,F_saf,F_suc,F_comf,F_traj,F_effic,\
             M_sr,M_cr,M_tr,M_dr,M_md,M_cdr,M_at"
        );
        let pooled = lines.next().unwrap();
        assert!(pooled.starts_with("pooled,"), "{pooled}");
        assert_eq!(pooled.split(',').count(), 14);
        assert!(lines.next().unwrap().starts_with("seed:0,"));
        assert!(lines.next().unwrap().starts_with("seed:1,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn csv_values_round_trip_at_full_precision() {
        let report = sample_report();
        let csv = report_csv(&report);
        let pooled_line = csv.lines().nth(1).unwrap();
        let comprehensive: f64 = pooled_line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(comprehensive, report.scores.comprehensive);
    }

    #[test]
    fn json_is_pretty_and_newline_terminated() {
        let json = report_json(&sample_report());
        assert!(json.starts_with("{\n"));
        assert!(json.ends_with("}\n"));
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["per_seed", "pooled", "scores", "stddev", "excluded_episodes", "config"] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
    }

    #[test]
    fn markdown_table_has_a_row_per_scope() {
        let table = markdown_table(&sample_report());
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("| row | comprehensive |"));
        assert!(lines[2].starts_with("| pooled |"));
        assert!(lines[3].starts_with("| seed:0 |"));
    }
}

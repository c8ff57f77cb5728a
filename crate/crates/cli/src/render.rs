//! Text, JSON and CSV renderings of command results. All renderings are
//! deterministic functions of the result.

use maud_core::evaluation::{ComparisonReport, EvaluationResult};
use maud_service::documents::FitBetaReport;
use serde::Serialize;

use crate::error::CliError;

/// Fixed-precision number with trailing zeros removed.
pub fn number(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Left-aligned columns separated by two spaces, no trailing blanks.
pub fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for line in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

/// Flat table of the ranking as CSV, header first.
pub fn evaluation_csv(result: &EvaluationResult) -> Result<String, CliError> {
    let table = result.flat_table();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&table.header).map_err(csv_error)?;
    for row in &table.rows {
        writer.write_record(row).map_err(csv_error)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Output(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 cells is utf-8"))
}

fn csv_error(err: csv::Error) -> CliError {
    CliError::Output(err.into())
}

/// Ranking table (slots, expected utility per attribute, E[U], rank) followed
/// by any alternatives that could not be scored.
pub fn evaluation_table(result: &EvaluationResult) -> String {
    let table = result.flat_table();
    let slots = result.feasible.len();
    let attributes = table.header.len() - slots - 2;
    let header: Vec<String> = table.header[..slots]
        .iter()
        .cloned()
        .chain(
            table.header[slots..slots + attributes]
                .iter()
                .map(|h| format!("E[U] {}", h.trim_start_matches("eu_"))),
        )
        .chain(["E[U]".to_string(), "rank".to_string()])
        .collect();
    let rows: Vec<Vec<String>> = result
        .ranked
        .iter()
        .zip(&table.rows)
        .map(|(scored, row)| {
            row[..slots]
                .iter()
                .cloned()
                .chain(scored.expected_utilities.values().map(|&v| number(v)))
                .chain([number(scored.expected_utility), scored.rank.to_string()])
                .collect()
        })
        .collect();
    let mut out = text_table(&header, &rows);
    for e in &result.errors {
        out.push_str(&format!(
            "unscored: {} ({}: {})\n",
            e.alternative.label(),
            e.code,
            e.message
        ));
    }
    out
}

/// The two picks side by side, differing slots marked with `*`.
pub fn comparison_table(report: &ComparisonReport) -> String {
    let header: Vec<String> = ["slot", "conventional", "integrated", ""]
        .map(String::from)
        .to_vec();
    let mut rows: Vec<Vec<String>> = report
        .conventional
        .alternative
        .assignment
        .iter()
        .zip(&report.integrated.alternative.assignment)
        .map(|(c, i)| {
            let marker = if report.differing_slots.contains(&c.slot) {
                "*"
            } else {
                ""
            };
            vec![
                c.slot.clone(),
                c.material.clone(),
                i.material.clone(),
                marker.into(),
            ]
        })
        .collect();
    let score = |x: Option<f64>| x.map(number).unwrap_or_else(|| "unscored".into());
    rows.push(vec![
        "E[U]".into(),
        score(report.conventional.expected_utility),
        score(report.integrated.expected_utility),
        String::new(),
    ]);
    let mut out = text_table(&header, &rows);
    if report.agree() {
        out.push_str("picks agree\n");
    } else {
        out.push_str(&format!(
            "picks differ on: {}\n",
            report.differing_slots.join(", ")
        ));
    }
    out
}

pub fn fit_table(report: &FitBetaReport) -> String {
    let s = &report.spec;
    let mode = report
        .mode
        .map(number)
        .unwrap_or_else(|| "none (uniform)".into());
    let rows: Vec<Vec<String>> = [
        ("lower", number(s.lower)),
        ("upper", number(s.upper)),
        ("p", number(s.p)),
        ("q", number(s.q)),
        ("mean", number(report.mean)),
        ("mode", mode),
        ("variance", number(report.variance)),
    ]
    .into_iter()
    .map(|(k, v)| vec![k.to_string(), v])
    .collect();
    text_table(&["parameter".into(), "value".into()], &rows)
}

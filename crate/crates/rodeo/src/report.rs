//! Text and JSON rendering of a [`MetricReport`].

use rodeo_core::evaluate::{threshold_label, MetricReport, MetricRow, RowLabel};
use serde_json::{json, Map, Value};

struct Column {
    header: String,
    value: fn(&MetricRow, usize) -> Option<f64>,
    index: usize,
}

fn columns(report: &MetricReport) -> Vec<Column> {
    fn rodeo(row: &MetricRow, field: usize) -> Option<f64> {
        let r = &row.rodeo;
        row.has_support.then_some([r.total, r.loc, r.shape, r.cls][field])
    }
    let mut cols: Vec<Column> = ["RoDeO", "loc", "shape", "cls"]
        .iter()
        .enumerate()
        .map(|(i, h)| Column { header: h.to_string(), value: rodeo, index: i })
        .collect();
    for (i, t) in report.thresholds.iter().enumerate() {
        cols.push(Column { header: format!("acc@{}", threshold_label(*t)), value: |row, i| row.acc.get(i).copied(), index: i });
    }
    if report.total.map.is_some() {
        for (i, t) in report.thresholds.iter().enumerate() {
            cols.push(Column { header: format!("AP@{}", threshold_label(*t)), value: |row, i| row.ap.get(i).copied().flatten(), index: i });
        }
        cols.push(Column { header: "mAP".into(), value: |row, _| row.map, index: 0 });
    }
    cols
}

fn row_name<'a>(row: &MetricRow, classes: &'a [String]) -> &'a str {
    match row.label {
        RowLabel::Class(c) => &classes[c.index()],
        RowLabel::Total => "Total",
    }
}

fn rows(report: &MetricReport, per_class: bool) -> Vec<&MetricRow> {
    let mut rows: Vec<&MetricRow> = if per_class { report.classes.iter().collect() } else { Vec::new() };
    rows.push(&report.total);
    rows
}

/// Aligned table, four decimals, `-` for absent values.
pub fn render_table(report: &MetricReport, classes: &[String], per_class: bool) -> String {
    let cols = columns(report);
    let rows = rows(report, per_class);
    let name_width = rows.iter().map(|r| row_name(r, classes).len()).chain([5]).max().unwrap_or(5);
    let widths: Vec<usize> = cols.iter().map(|c| c.header.len().max(6)).collect();

    let mut out = format!("{:<name_width$}", "class");
    for (c, w) in cols.iter().zip(&widths) {
        out.push_str(&format!("  {:>w$}", c.header));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:<name_width$}", row_name(row, classes)));
        for (c, w) in cols.iter().zip(&widths) {
            let cell = (c.value)(row, c.index).map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}

fn row_json(report: &MetricReport, row: &MetricRow, classes: &[String]) -> Value {
    let metrics: Map<String, Value> = row.metrics(&report.thresholds).into_iter().map(|(k, v)| (k, json!(v))).collect();
    json!({
        "class": row_name(row, classes),
        "metrics": metrics,
        "matched": row.rodeo.n_matched,
        "unmatched_targets": row.rodeo.n_unmatched_targets,
        "unmatched_predictions": row.rodeo.n_unmatched_predictions,
    })
}

/// Machine-readable report with full-precision numbers.
pub fn render_json(report: &MetricReport, classes: &[String], per_class: bool) -> String {
    let mut doc = json!({
        "thresholds": report.thresholds,
        "map_thresholds": if report.total.map.is_some() { json!(report.map_thresholds) } else { Value::Null },
        "total": row_json(report, &report.total, classes),
    });
    if per_class {
        doc["classes"] = report.classes.iter().map(|r| row_json(report, r, classes)).collect();
    }
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

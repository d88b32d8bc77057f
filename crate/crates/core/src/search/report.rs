use serde::Serialize;

use super::{RewardRecord, SearchResult, StepRecord};
use crate::error::Result;
use crate::tabular::{Column, Dataset};
use crate::transforms::expression_order;

/// Counts of low-order (≤ 1) and high-order (≥ 2) features.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub low: usize,
    pub high: usize,
    pub proportion: f64,
}

pub fn order_counts(features: &[Column]) -> OrderReport {
    let high = features
        .iter()
        .filter(|c| expression_order(&c.expr) >= 2)
        .count();
    let low = features.len() - high;
    OrderReport {
        low,
        high,
        proportion: if features.is_empty() {
            0.0
        } else {
            high as f64 / features.len() as f64
        },
    }
}

pub fn order_report(result: &SearchResult) -> OrderReport {
    order_counts(result.best.features())
}

fn render<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn cell(col: &Column, v: f64, labels: bool) -> String {
    match (&col.categories, labels) {
        (Some(cats), true) => cats
            .get(v as usize)
            .cloned()
            .unwrap_or_else(|| v.to_string()),
        _ => v.to_string(),
    }
}

/// The table as CSV: features in order, then the target. Values use the
/// shortest exact decimal form so reading the file back gives identical
/// numbers. Discrete features are written as codes, a labelled target by
/// its labels.
pub fn dataset_csv(d: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = d.features().iter().map(|c| c.name.as_str()).collect();
    header.push(&d.target().name);
    w.write_record(&header)?;
    for r in 0..d.n_rows() {
        let mut row: Vec<String> = d
            .features()
            .iter()
            .map(|c| cell(c, c.values[r], false))
            .collect();
        row.push(cell(d.target(), d.target().values[r], true));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct ExpressionRow<'a> {
    column: &'a str,
    kind: String,
    order: usize,
    expression: String,
}

/// One row per feature: column name, kind, order and canonical expression.
pub fn expressions_csv(d: &Dataset) -> Result<String> {
    render(d.features().iter().map(|c| ExpressionRow {
        column: &c.name,
        kind: c.kind.to_string(),
        order: expression_order(&c.expr),
        expression: c.expr.to_string(),
    }))
}

pub fn trace_csv(trace: &[StepRecord]) -> Result<String> {
    render(trace)
}

pub fn rewards_csv(rows: &[RewardRecord]) -> Result<String> {
    render(rows)
}

pub fn order_report_csv(r: &OrderReport) -> Result<String> {
    render([r])
}

#[derive(Serialize)]
struct ConvergenceRow {
    epoch: usize,
    best_score: f64,
}

/// Best score so far after each epoch.
pub fn convergence_csv(series: &[f64]) -> Result<String> {
    render(
        series
            .iter()
            .enumerate()
            .map(|(epoch, &best_score)| ConvergenceRow { epoch, best_score }),
    )
}

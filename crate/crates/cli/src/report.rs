//! The model comparison report: JSON for machines, an aligned table for people.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use roadgnn::training::Metrics;

use crate::config::SortOrder;
use crate::pipeline::DatasetFingerprint;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Config key: `gcn`, `sage` or `ggnn`.
    pub model: String,
    /// Display name used in the table.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs_run: Option<usize>,
    /// Set when the model failed to train or evaluate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReportRow {
    fn scored(&self) -> Option<(f64, f64)> {
        Some((self.rmse?, self.mae?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    /// Model key of the winning row, absent if every model failed.
    pub winner: Option<String>,
    /// Historical-mean predictor on the same test split, for reference.
    pub baseline: Metrics,
    pub dataset: DatasetFingerprint,
    pub config: serde_json::Value,
    pub timestamp: String,
}

/// Lowest RMSE, then lowest MAE, then model key. Failed rows never win.
fn rank(a: &ReportRow, b: &ReportRow) -> Ordering {
    match (a.scored(), b.scored()) {
        (Some((ra, ma)), Some((rb, mb))) => ra
            .total_cmp(&rb)
            .then(ma.total_cmp(&mb))
            .then_with(|| a.model.cmp(&b.model)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Index of the winning row.
pub fn select_winner(rows: &[ReportRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.scored().is_some())
        .min_by(|(_, a), (_, b)| rank(a, b))
        .map(|(i, _)| i)
}

impl ComparisonReport {
    /// Orders `rows` (given in requested order) and marks the winner.
    pub fn assemble(
        mut rows: Vec<ReportRow>,
        sort: SortOrder,
        baseline: Metrics,
        dataset: DatasetFingerprint,
        config: serde_json::Value,
        timestamp: String,
    ) -> Self {
        if sort == SortOrder::Rmse {
            // stable: failed rows keep their requested order at the end
            rows.sort_by(rank);
        }
        let winner = select_winner(&rows).map(|i| rows[i].model.clone());
        Self {
            rows,
            winner,
            baseline,
            dataset,
            config,
            timestamp,
        }
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    /// Three-column table; the winner is starred.
    pub fn render_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(["Model".len(), "Historical mean".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}", "Model", "RMSE", "MAE");
        let _ = writeln!(out, "{}", "-".repeat(width + 24));
        for row in &self.rows {
            let star = if self.winner.as_deref() == Some(row.model.as_str()) { "  *" } else { "" };
            match (row.scored(), &row.error) {
                (Some((rmse, mae)), _) => {
                    let _ = writeln!(out, "{:<width$}  {rmse:>10.4}  {mae:>10.4}{star}", row.name);
                }
                (None, err) => {
                    let reason = err.as_deref().unwrap_or("no result");
                    let _ = writeln!(out, "{:<width$}  {:>10}  {:>10}  ({reason})", row.name, "failed", "-");
                }
            }
        }
        let _ = writeln!(out, "{}", "-".repeat(width + 24));
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}",
            "Historical mean", self.baseline.rmse, self.baseline.mae
        );
        if self.winner.is_some() {
            let _ = writeln!(out, "* lowest RMSE (ties: MAE, then name)");
        }
        out
    }
}

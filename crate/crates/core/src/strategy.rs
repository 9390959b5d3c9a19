//! Trading rule, confusion-matrix metrics, and report emission.
//!
//! "Profitable" is a correct buy prediction, so the profitable-option rate
//! is the precision and the loss rate is its complement.

use crate::cnn::TrainingTrace;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Published reference results, printed alongside computed tables as
/// annotations and never as computed output.
pub const REFERENCE_RESULTS: [(&str, f64, f64, f64); 2] = [
    ("QRM (published reference)", 0.4977, 0.5577, 0.5243),
    ("CNN Approach (published reference)", 0.5149, 0.5714, 0.0278),
];

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("decision and label sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("row has no est_p1 estimate")]
    MissingEstimate,
    #[error("row has no day-0 option quotes")]
    MissingQuotes,
    #[error("io failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method_name: String,
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    /// `None` when no positives were predicted (reported as N/A).
    pub precision: Option<f64>,
    pub recall: f64,
    /// Equals precision; fraction of predicted buys that rose.
    pub profitable_rate: Option<f64>,
    pub loss_rate: Option<f64>,
    pub threshold: f64,
}

/// Buy rule: the one-day-ahead estimate reaches today's option mid.
pub fn qrm_decision(est_p1: Option<f64>, option_mean_0: Option<f64>) -> Result<u8, StrategyError> {
    let est = est_p1.ok_or(StrategyError::MissingEstimate)?;
    let real_0 = option_mean_0.ok_or(StrategyError::MissingQuotes)?;
    Ok(u8::from(est >= real_0))
}

/// Counts the confusion matrix and derives the metric suite.
pub fn evaluate(
    method_name: &str,
    decisions: &[u8],
    labels: &[u8],
    threshold: f64,
) -> Result<EvaluationReport, StrategyError> {
    if decisions.len() != labels.len() {
        return Err(StrategyError::LengthMismatch(decisions.len(), labels.len()));
    }
    if decisions.is_empty() {
        return Err(StrategyError::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (&d, &y) in decisions.iter().zip(labels) {
        match (d, y) {
            (1, 1) => m.tp += 1,
            (1, 0) => m.fp += 1,
            (0, 0) => m.tn += 1,
            _ => m.fn_ += 1,
        }
    }
    let accuracy = (m.tp + m.tn) as f64 / m.total() as f64;
    let precision =
        (m.tp + m.fp > 0).then(|| m.tp as f64 / (m.tp + m.fp) as f64);
    let recall = if m.tp + m.fn_ > 0 { m.tp as f64 / (m.tp + m.fn_) as f64 } else { 0.0 };
    Ok(EvaluationReport {
        method_name: method_name.to_string(),
        matrix: m,
        accuracy,
        precision,
        recall,
        profitable_rate: precision,
        loss_rate: precision.map(|p| 1.0 - p),
        threshold,
    })
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn pct_opt(v: Option<f64>) -> String {
    v.map(pct).unwrap_or_else(|| "N/A".to_string())
}

/// Writes metrics.csv, profits.csv, loss_trace.csv, and confusion.csv into
/// `out_dir`, and a human-readable summary (with the published reference
/// numbers as annotations) to `summary`.
pub fn report_tables<W: Write>(
    reports: &[EvaluationReport],
    trace: &TrainingTrace,
    out_dir: &Path,
    mut summary: W,
) -> Result<(), StrategyError> {
    if reports.is_empty() {
        return Err(StrategyError::EmptyInput);
    }
    std::fs::create_dir_all(out_dir)?;

    let mut w = csv::Writer::from_path(out_dir.join("metrics.csv"))?;
    w.write_record(["method", "accuracy", "precision", "recall", "threshold"])?;
    for r in reports {
        w.write_record([
            r.method_name.clone(),
            format!("{}", r.accuracy),
            r.precision.map(|p| format!("{p}")).unwrap_or_else(|| "N/A".to_string()),
            format!("{}", r.recall),
            format!("{}", r.threshold),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("profits.csv"))?;
    w.write_record(["method", "profitable", "loss"])?;
    for r in reports {
        w.write_record([
            r.method_name.clone(),
            pct_opt(r.profitable_rate),
            pct_opt(r.loss_rate),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("loss_trace.csv"))?;
    w.write_record(["epoch", "train_loss"])?;
    for (i, l) in trace.train_loss.iter().enumerate() {
        w.write_record([format!("{i}"), format!("{l}")])?;
    }
    w.flush()?;

    // 2x2 confusion counts of the first report (rows: true 0/1, cols: predicted 0/1)
    let m = reports[0].matrix;
    let mut w = csv::Writer::from_path(out_dir.join("confusion.csv"))?;
    w.write_record(["", "pred_0", "pred_1"])?;
    w.write_record(["true_0", &m.tn.to_string(), &m.fp.to_string()])?;
    w.write_record(["true_1", &m.fn_.to_string(), &m.tp.to_string()])?;
    w.flush()?;

    writeln!(summary, "method, accuracy, precision, recall")?;
    for r in reports {
        writeln!(
            summary,
            "{}, {}, {}, {}",
            r.method_name,
            pct(r.accuracy),
            pct_opt(r.precision),
            pct(r.recall)
        )?;
    }
    for (name, acc, prec, rec) in REFERENCE_RESULTS {
        writeln!(summary, "{}, {}, {}, {}", name, pct(acc), pct(prec), pct(rec))?;
    }
    writeln!(summary)?;
    writeln!(summary, "method, profitable options, options with loss")?;
    for r in reports {
        writeln!(
            summary,
            "{}, {}, {}",
            r.method_name,
            pct_opt(r.profitable_rate),
            pct_opt(r.loss_rate)
        )?;
    }
    Ok(())
}

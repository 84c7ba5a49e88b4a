use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DriftReport;
use crate::error::{FedError, Result};

/// Column order of the metrics CSV.
pub const METRICS_COLUMNS: [&str; 12] = [
    "trial",
    "round",
    "loss",
    "grad_norm_sq",
    "accuracy",
    "comm_down_cum",
    "comm_up_cum",
    "gamma",
    "xi",
    "cal_e",
    "rate_et",
    "rate_gt",
];

/// State of the global model after one completed round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub trial: usize,
    pub round: usize,
    pub loss: f64,
    pub grad_norm_sq: f64,
    pub accuracy: Option<f64>,
    /// Cumulative download units per client (population mean).
    pub comm_down_cum: f64,
    /// Cumulative upload units per client (population mean).
    pub comm_up_cum: f64,
    pub drift: Option<DriftReport>,
    pub rate_et: Option<f64>,
    pub rate_gt: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsRow {
    pub fn record(&self) -> [String; 12] {
        let drift = self.drift.as_ref();
        [
            self.trial.to_string(),
            self.round.to_string(),
            self.loss.to_string(),
            self.grad_norm_sq.to_string(),
            opt(self.accuracy),
            self.comm_down_cum.to_string(),
            self.comm_up_cum.to_string(),
            opt(drift.and_then(|d| d.gamma)),
            opt(drift.map(|d| d.xi)),
            opt(drift.map(|d| d.cal_e)),
            opt(self.rate_et),
            opt(self.rate_gt),
        ]
    }
}

/// Writes rows as CSV with the fixed column order and a header line.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let io = |e: csv::Error| FedError::protocol(format!("writing metrics: {e}"));
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(METRICS_COLUMNS).map_err(io)?;
    for row in rows {
        writer.write_record(row.record()).map_err(io)?;
    }
    writer
        .flush()
        .map_err(|e| FedError::protocol(format!("writing metrics: {e}")))?;
    Ok(())
}

//! Per-(scheme, value, metric) means over drops and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ResultRecord, Scheme, SweepVar};
use crate::error::{Error, Result};
use crate::units::{dbm_to_watts, watts_to_dbm};

pub const AGGREGATE_HEADER: [&str; 8] =
    ["scheme", "sweep_var", "sweep_value", "metric", "mean", "stderr", "n_drops", "n_infeasible"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scheme: Scheme,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    /// Feasible drops that entered the mean.
    pub n_drops: usize,
    pub n_infeasible: usize,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Means over feasible drops. Metrics in dBm are averaged as powers and
/// converted back; their standard error goes through the same map to first
/// order. Groups come out in first-appearance order.
pub fn aggregate(records: &[ResultRecord]) -> Vec<AggregateRow> {
    let mut groups: Vec<(Scheme, SweepVar, f64, &str, Vec<f64>, usize)> = Vec::new();
    for r in records {
        let idx = groups
            .iter()
            .position(|g| g.0 == r.scheme && g.1 == r.sweep_var && g.2 == r.sweep_value && g.3 == r.metric);
        let idx = idx.unwrap_or_else(|| {
            groups.push((r.scheme, r.sweep_var, r.sweep_value, &r.metric, Vec::new(), 0));
            groups.len() - 1
        });
        if r.feasible {
            groups[idx].4.push(r.value);
        } else {
            groups[idx].5 += 1;
        }
    }
    groups
        .into_iter()
        .map(|(scheme, sweep_var, sweep_value, metric, values, n_infeasible)| {
            let (mean, stderr) = if values.is_empty() {
                (f64::NAN, f64::NAN)
            } else if metric.ends_with("_dbm") {
                let watts: Vec<f64> = values.iter().map(|&x| dbm_to_watts(x)).collect();
                let (m, s) = mean_stderr(&watts);
                (watts_to_dbm(m), 10.0 / std::f64::consts::LN_10 * s / m)
            } else {
                mean_stderr(&values)
            };
            AggregateRow {
                scheme,
                sweep_var,
                sweep_value,
                metric: metric.to_string(),
                mean,
                stderr,
                n_drops: values.len(),
                n_infeasible,
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(AGGREGATE_HEADER) {
        return Err(Error::Config("unexpected aggregate CSV header".into()));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Raw per-drop records: `scheme,sweep_var,sweep_value,drop,metric,value,feasible`.
pub fn write_records_csv<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["scheme", "sweep_var", "sweep_value", "drop", "metric", "value", "feasible"])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

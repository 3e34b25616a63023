//! Canned experiments behind `bibc reproduce`, one per figure.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::{
    aggregate, metric_names as mn, nmse_sweep, run_experiment, write_aggregate_csv, write_nmse_csv,
    write_records_csv, AggregateRow, ExperimentOutput, ExperimentSpec, Metric, Scheme, SweepVar,
};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

pub const FIGURES: std::ops::RangeInclusive<u8> = 3..=9;

const PT_SWEEP: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
const M_SWEEP: [f64; 5] = [4.0, 16.0, 36.0, 64.0, 100.0];
const ALL_SCHEMES: [Scheme; 3] = [Scheme::Random, Scheme::Perfect, Scheme::Estimated];

pub const NMSE_TAUS: [usize; 3] = [5, 7, 11];
pub const NMSE_TRIALS: usize = 10_000;

pub fn nmse_pilot_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 * i as f64).collect()
}

/// The experiment behind figure `figure`; `None` for the NMSE figure, which
/// is not a drop sweep.
pub fn figure_spec(figure: u8, drops: Option<usize>, seed: u64) -> Result<Option<ExperimentSpec>> {
    let config = SystemConfig { master_seed: seed, ..SystemConfig::default() };
    let spec = |sweep_var, values: &[f64], schemes: &[Scheme], outputs: &[Metric], default_drops| ExperimentSpec {
        sweep_var,
        values: values.to_vec(),
        drops: drops.unwrap_or(default_drops),
        schemes: schemes.to_vec(),
        outputs: outputs.to_vec(),
        seed: Some(seed),
        config: config.clone(),
    };
    let power = [Metric::PerTagRxPowerDbm];
    let rate = [Metric::SumRate];
    Ok(Some(match figure {
        3 => spec(SweepVar::Pt, &[0.0, 10.0, 20.0, 30.0], &[Scheme::Perfect], &[Metric::ConvergenceTrace, Metric::SumRate], 100),
        4 => return Ok(None),
        5 => spec(SweepVar::Pt, &PT_SWEEP, &ALL_SCHEMES, &power, 200),
        6 => spec(SweepVar::M, &M_SWEEP, &ALL_SCHEMES, &power, 200),
        7 => spec(SweepVar::Pt, &PT_SWEEP, &ALL_SCHEMES, &rate, 200),
        8 => spec(SweepVar::M, &M_SWEEP, &ALL_SCHEMES, &rate, 200),
        9 => spec(SweepVar::Pt, &PT_SWEEP, &[Scheme::Perfect], &[Metric::SumRate, Metric::FixedAlphaCompare], 200),
        _ => return Err(Error::Config(format!("no figure {figure}; choose 3 to 9"))),
    }))
}

fn x_column(var: SweepVar) -> &'static str {
    match var {
        SweepVar::Pt => "p_t_dbm",
        SweepVar::Pp => "p_p_dbm",
        SweepVar::M => "M",
        SweepVar::K => "K",
    }
}

fn find<'a>(rows: &'a [AggregateRow], scheme: Scheme, value: f64, metric: &str) -> Option<&'a AggregateRow> {
    rows.iter().find(|r| r.scheme == scheme && r.sweep_value == value && r.metric == metric)
}

/// Wide series: one line per (scheme, x) with a mean and stderr column per metric.
fn write_scheme_series(path: &Path, spec: &ExperimentSpec, rows: &[AggregateRow], metrics: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["scheme".to_string(), x_column(spec.sweep_var).to_string()];
    for m in metrics {
        header.push(m.to_string());
        header.push(format!("{m}_stderr"));
    }
    header.push("n_infeasible".into());
    w.write_record(&header)?;
    for &scheme in &spec.schemes {
        for &x in &spec.values {
            let mut line = vec![scheme.name().to_string(), x.to_string()];
            let mut infeasible = 0;
            for m in metrics {
                let row = find(rows, scheme, x, m);
                line.push(row.map_or(f64::NAN, |r| r.mean).to_string());
                line.push(row.map_or(f64::NAN, |r| r.stderr).to_string());
                infeasible = infeasible.max(row.map_or(0, |r| r.n_infeasible));
            }
            line.push(infeasible.to_string());
            w.write_record(&line)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean objective per outer iteration. Runs that stopped early hold their
/// final value, as a converged curve does.
fn write_convergence_series(path: &Path, spec: &ExperimentSpec, out: &ExperimentOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["p_t_dbm", "iter", "mean_objective", "n_drops"])?;
    for &x in &spec.values {
        let mut curves: Vec<Vec<f64>> = Vec::new();
        let mut last_drop = None;
        for t in out.traces.iter().filter(|t| t.sweep_value == x && t.row.feasible) {
            if last_drop != Some(t.drop) {
                curves.push(Vec::new());
                last_drop = Some(t.drop);
            }
            curves.last_mut().expect("pushed above").push(t.row.objective);
        }
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        for i in 0..len {
            let sum: f64 = curves.iter().map(|c| c.get(i).or(c.last()).copied().unwrap_or(0.0)).sum();
            w.write_record([x.to_string(), i.to_string(), (sum / curves.len() as f64).to_string(), curves.len().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_alpha_series(path: &Path, spec: &ExperimentSpec, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["p_t_dbm", "optimal_alpha", "optimal_alpha_stderr", "fixed_alpha", "fixed_alpha_stderr", "gap", "gap_stderr"])?;
    for &x in &spec.values {
        let mut line = vec![x.to_string()];
        for m in [mn::SUM_RATE, mn::SUM_RATE_FIXED, mn::SUM_RATE_GAP] {
            let row = find(rows, Scheme::Perfect, x, m);
            line.push(row.map_or(f64::NAN, |r| r.mean).to_string());
            line.push(row.map_or(f64::NAN, |r| r.stderr).to_string());
        }
        w.write_record(&line)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs figure `figure` and writes `figN_series.csv` into `dir`, plus the
/// aggregate and raw records for the drop-based figures. `drops` overrides
/// the drop count, or the noise-trial count for the NMSE figure.
pub fn reproduce(figure: u8, dir: &Path, drops: Option<usize>, seed: u64, threads: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let series = dir.join(format!("fig{figure}_series.csv"));
    let Some(spec) = figure_spec(figure, drops, seed)? else {
        let config = SystemConfig { master_seed: seed, ..SystemConfig::default() };
        let rows = nmse_sweep(&config, &NMSE_TAUS, &nmse_pilot_grid(), drops.unwrap_or(NMSE_TRIALS), seed, threads)?;
        write_nmse_csv(&rows, BufWriter::new(File::create(&series)?))?;
        return Ok(vec![series]);
    };
    let out = run_experiment(&spec, threads)?;
    let rows = aggregate(&out.records);
    let agg_path = dir.join(format!("fig{figure}_aggregate.csv"));
    let rec_path = dir.join(format!("fig{figure}_records.csv"));
    write_aggregate_csv(&rows, BufWriter::new(File::create(&agg_path)?))?;
    write_records_csv(&out.records, BufWriter::new(File::create(&rec_path)?))?;
    match figure {
        3 => write_convergence_series(&series, &spec, &out)?,
        5 | 6 => write_scheme_series(&series, &spec, &rows, &[mn::RX_POWER, mn::RX_POWER_MIN])?,
        7 | 8 => write_scheme_series(&series, &spec, &rows, &[mn::SUM_RATE])?,
        _ => write_alpha_series(&series, &spec, &rows)?,
    }
    Ok(vec![series, agg_path, rec_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_a_spec() {
        for f in FIGURES {
            let spec = figure_spec(f, Some(1), 3).unwrap();
            assert_eq!(spec.is_none(), f == 4);
            if let Some(s) = spec {
                s.validate().unwrap();
                assert_eq!(s.drops, 1);
            }
        }
        assert!(figure_spec(2, None, 0).is_err());
        assert_eq!(figure_spec(3, None, 0).unwrap().unwrap().drops, 100);
        assert_eq!(nmse_pilot_grid().len(), 11);
    }

    #[test]
    fn nmse_figure_schema() {
        let dir = tempfile::tempdir().unwrap();
        let paths = reproduce(4, dir.path(), Some(3), 0, 1).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(paths[0].ends_with("fig4_series.csv"));
        assert!(text.starts_with("channel_kind,p_p_dbm,tau,nmse\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 3 * 11);
    }
}

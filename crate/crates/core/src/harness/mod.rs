//! Monte Carlo driver: sweeps, per-drop evaluation and CSV emission.
//!
//! Every drop is a pure function of `(seed, drop index, sweep value)`, so the
//! emitted numbers do not depend on the thread count.

mod aggregate;
pub mod figures;
mod nmse;
mod pool;

use serde::{Deserialize, Serialize};

use crate::channel::draw_channels;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::place_network;
use crate::optimizer::{alternating_optimization, alternating_optimization_fixed_alpha, random_baseline, AoOutcome, TraceRow};
use crate::pilots::{build_pilot_book, nmse, run_pilot_phase, ChannelEstimates};
use crate::rng::drop_seed;
use crate::system::{all_tags_active, received_power, sum_rate_exact, LinkCsi, Solution};
use crate::units::watts_to_dbm;

pub use aggregate::{aggregate, read_aggregate_csv, write_aggregate_csv, write_records_csv, AggregateRow};
pub use nmse::{nmse_sweep, write_nmse_csv, ChannelKind, NmseRow};
pub use pool::ordered_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Random,
    Perfect,
    Estimated,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Random => "random",
            Scheme::Perfect => "perfect",
            Scheme::Estimated => "estimated",
        }
    }

    pub fn optimizes(self) -> bool {
        !matches!(self, Scheme::Random)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "p_t")]
    Pt,
    #[serde(rename = "M")]
    M,
    #[serde(rename = "p_p")]
    Pp,
    #[serde(rename = "K")]
    K,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Pt => "p_t",
            SweepVar::M => "M",
            SweepVar::Pp => "p_p",
            SweepVar::K => "K",
        }
    }

    /// `config` with the swept quantity set to `value`. A tag sweep also
    /// lengthens the pilots when they would be too short for the new count.
    pub fn apply(self, config: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        let mut cfg = config.clone();
        match self {
            SweepVar::Pt => cfg.tx_power_dbm = value,
            SweepVar::Pp => cfg.pilot_power_dbm = value,
            SweepVar::M => cfg.num_aps = count()?,
            SweepVar::K => {
                cfg.num_tags = count()?;
                cfg.tau = cfg.tau.max(cfg.num_tags + 1);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NmseDirect,
    NmseCascaded,
    NmseForward,
    PerTagRxPowerDbm,
    SumRate,
    ConvergenceTrace,
    FixedAlphaCompare,
}

impl Metric {
    fn needs_estimates(self) -> bool {
        matches!(self, Metric::NmseDirect | Metric::NmseCascaded | Metric::NmseForward)
    }

    fn needs_optimizer(self) -> bool {
        matches!(self, Metric::ConvergenceTrace | Metric::FixedAlphaCompare)
    }
}

/// Names of the per-drop values written to the record stream.
pub mod metric_names {
    pub const NMSE_DIRECT: &str = "nmse_direct";
    pub const NMSE_CASCADED: &str = "nmse_cascaded";
    pub const NMSE_FORWARD: &str = "nmse_forward";
    pub const RX_POWER: &str = "per_tag_rx_power_dbm";
    pub const RX_POWER_MIN: &str = "per_tag_rx_power_min_dbm";
    pub const SUM_RATE: &str = "sum_rate";
    pub const TAGS_ACTIVE: &str = "tags_active";
    pub const OUTER_ITERS: &str = "outer_iterations";
    pub const CONVERGED: &str = "converged";
    pub const SUM_RATE_FIXED: &str = "sum_rate_fixed_alpha";
    pub const SUM_RATE_GAP: &str = "sum_rate_gap";
}
use metric_names as mn;

fn default_drops() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    #[serde(default = "default_drops")]
    pub drops: usize,
    pub schemes: Vec<Scheme>,
    pub outputs: Vec<Metric>,
    /// Falls back to the config's `master_seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: SystemConfig,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(self.config.master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(Error::Config("drops must be at least 1".into()));
        }
        if self.values.is_empty() || self.schemes.is_empty() || self.outputs.is_empty() {
            return Err(Error::Config("values, schemes and outputs must be non-empty".into()));
        }
        self.config.validate()?;
        for &v in &self.values {
            self.sweep_var.apply(&self.config, v)?;
        }
        if self.outputs.iter().any(|m| m.needs_estimates()) && !self.schemes.contains(&Scheme::Estimated) {
            return Err(Error::Config("NMSE outputs need the estimated scheme".into()));
        }
        if self.outputs.iter().any(|m| m.needs_optimizer()) && !self.schemes.iter().any(|s| s.optimizes()) {
            return Err(Error::Config("trace and fixed-alpha outputs need an optimizing scheme".into()));
        }
        Ok(())
    }

    fn wants(&self, metric: Metric) -> bool {
        self.outputs.contains(&metric)
    }
}

/// One number for one (scheme, sweep value, drop, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub scheme: Scheme,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub drop: usize,
    pub metric: String,
    pub value: f64,
    /// False when the optimizer found no point meeting every harvesting need.
    pub feasible: bool,
}

/// One outer iteration of one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub drop: usize,
    pub row: TraceRow,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub traces: Vec<TraceRecord>,
}

struct DropContext<'a> {
    spec: &'a ExperimentSpec,
    config: SystemConfig,
    value: f64,
    drop: usize,
    out: ExperimentOutput,
}

impl DropContext<'_> {
    fn push(&mut self, scheme: Scheme, metric: &str, value: f64, feasible: bool) {
        self.out.records.push(ResultRecord {
            scheme,
            sweep_var: self.spec.sweep_var,
            sweep_value: self.value,
            drop: self.drop,
            metric: metric.to_string(),
            value,
            feasible,
        });
    }

    fn evaluate(&mut self, scheme: Scheme, truth: &LinkCsi, sol: &Solution, feasible: bool) {
        let (p, noise, psi) = (self.config.tx_power_watts(), self.config.noise_power(), self.config.prelog());
        let required = self.config.required_incident_power();
        if self.spec.wants(Metric::SumRate) {
            let rate = sum_rate_exact(truth, sol, p, noise, psi);
            self.push(scheme, mn::SUM_RATE, rate, feasible);
        }
        if self.spec.wants(Metric::PerTagRxPowerDbm) {
            let v = sol.effective_beam();
            let powers: Vec<f64> = (0..truth.num_tags()).map(|k| received_power(truth, k, &v, p)).collect();
            let mean = powers.iter().sum::<f64>() / powers.len() as f64;
            let min = powers.iter().cloned().fold(f64::INFINITY, f64::min);
            self.push(scheme, mn::RX_POWER, watts_to_dbm(mean), feasible);
            self.push(scheme, mn::RX_POWER_MIN, watts_to_dbm(min), feasible);
        }
        if let Ok(required) = required {
            let active = all_tags_active(truth, sol, p, required, 1e-6);
            self.push(scheme, mn::TAGS_ACTIVE, f64::from(u8::from(active)), feasible);
        }
    }

    fn optimized(&mut self, scheme: Scheme, csi: &LinkCsi, truth: &LinkCsi) -> Result<()> {
        let out: AoOutcome = alternating_optimization(csi, &self.config)?;
        self.evaluate(scheme, truth, &out.solution, out.feasible);
        if self.spec.wants(Metric::ConvergenceTrace) {
            self.push(scheme, mn::OUTER_ITERS, out.trace.outer_iterations() as f64, out.feasible);
            self.push(scheme, mn::CONVERGED, f64::from(u8::from(out.trace.converged)), out.feasible);
            for row in &out.trace.rows {
                self.out.traces.push(TraceRecord { scheme, sweep_value: self.value, drop: self.drop, row: *row });
            }
        }
        if self.spec.wants(Metric::FixedAlphaCompare) {
            let fixed = alternating_optimization_fixed_alpha(csi, &self.config, self.config.alpha_fixed)?;
            let cfg = &self.config;
            let (p, noise, psi) = (cfg.tx_power_watts(), cfg.noise_power(), cfg.prelog());
            let full = sum_rate_exact(truth, &out.solution, p, noise, psi);
            let restricted = sum_rate_exact(truth, &fixed.solution, p, noise, psi);
            let both = out.feasible && fixed.feasible;
            self.push(scheme, mn::SUM_RATE_FIXED, restricted, both);
            self.push(scheme, mn::SUM_RATE_GAP, full - restricted, both);
        }
        Ok(())
    }

    fn estimates(&mut self, est: &ChannelEstimates, truth_ch: &crate::channel::ChannelRealization) -> Result<()> {
        let flat = |m: &crate::channel::CMatrix| m.iter().copied().collect::<Vec<_>>();
        if self.spec.wants(Metric::NmseDirect) {
            let v = nmse(&flat(&truth_ch.h0), &flat(&est.direct))?;
            self.push(Scheme::Estimated, mn::NMSE_DIRECT, v, true);
        }
        if self.spec.wants(Metric::NmseCascaded) {
            let truth: Vec<_> = (0..truth_ch.num_tags()).flat_map(|k| flat(&truth_ch.cascaded(k))).collect();
            let got: Vec<_> = est.cascaded.iter().flat_map(|c| flat(c)).collect();
            let v = nmse(&truth, &got)?;
            self.push(Scheme::Estimated, mn::NMSE_CASCADED, v, true);
        }
        if self.spec.wants(Metric::NmseForward) {
            let v = nmse(&flat(&truth_ch.f.map(|z| z * z)), &flat(&est.forward_sq))?;
            self.push(Scheme::Estimated, mn::NMSE_FORWARD, v, true);
        }
        Ok(())
    }
}

fn run_drop(spec: &ExperimentSpec, value: f64, drop: usize) -> Result<ExperimentOutput> {
    let config = spec.sweep_var.apply(&spec.config, value)?;
    let seed = drop_seed(spec.seed(), drop as u64);
    let geo = place_network(&config, seed)?;
    let ch = draw_channels(&geo, &config, seed);
    let truth = LinkCsi::from_realization(&ch);
    let mut ctx = DropContext { spec, config, value, drop, out: ExperimentOutput::default() };
    for &scheme in &spec.schemes {
        match scheme {
            Scheme::Random => {
                let cfg = &ctx.config;
                let sol = random_baseline(cfg.num_aps, cfg.num_tags, cfg.reader_antennas, cfg.alpha_fixed, seed);
                ctx.evaluate(scheme, &truth, &sol, true);
            }
            Scheme::Perfect => ctx.optimized(scheme, &truth, &truth)?,
            Scheme::Estimated => {
                let book = build_pilot_book(ctx.config.num_tags, ctx.config.tau)?;
                let est = run_pilot_phase(&ch, &geo, &ctx.config, &book, seed)?;
                ctx.estimates(&est, &ch)?;
                ctx.optimized(scheme, &est.link_csi(), &truth)?;
            }
        }
    }
    Ok(ctx.out)
}

/// Runs every (sweep value, drop) pair on up to `threads` workers. Records
/// come back ordered by sweep value, then drop, then scheme.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput> {
    spec.validate()?;
    let per_value = spec.drops;
    let results = ordered_map(spec.values.len() * per_value, threads, |i| {
        run_drop(spec, spec.values[i / per_value], i % per_value)
    });
    let mut out = ExperimentOutput::default();
    for r in results {
        let r = r?;
        out.records.extend(r.records);
        out.traces.extend(r.traces);
    }
    Ok(out)
}

/// Full versus fixed-coefficient optimization on the same drops. Emits the
/// optimized sum rate, the fixed-coefficient one and their difference.
pub fn run_fixed_alpha_compare(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentOutput> {
    if spec.schemes.iter().any(|s| !s.optimizes()) {
        return Err(Error::Config("fixed-alpha comparison needs the perfect or estimated scheme".into()));
    }
    let mut spec = spec.clone();
    for m in [Metric::SumRate, Metric::FixedAlphaCompare] {
        if !spec.outputs.contains(&m) {
            spec.outputs.push(m);
        }
    }
    run_experiment(&spec, threads)
}

/// Writes one `drop,iter,objective,block_iters_w,block_iters_alpha,feasible`
/// file per (scheme, sweep value) into `dir`; returns the paths.
pub fn write_trace_csvs(out: &ExperimentOutput, sweep_var: SweepVar, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    let mut keys: Vec<(Scheme, f64)> = Vec::new();
    for t in &out.traces {
        if !keys.iter().any(|&(s, v)| s == t.scheme && v == t.sweep_value) {
            keys.push((t.scheme, t.sweep_value));
        }
    }
    let mut paths = Vec::new();
    for (scheme, value) in keys {
        let path = dir.join(format!("trace_{}_{}{}.csv", scheme.name(), sweep_var.name(), value));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["drop", "iter", "objective", "block_iters_w", "block_iters_alpha", "feasible"])?;
        for t in out.traces.iter().filter(|t| t.scheme == scheme && t.sweep_value == value) {
            let r = &t.row;
            w.write_record([
                t.drop.to_string(),
                r.iter.to_string(),
                r.objective.to_string(),
                r.block_iters_w.to_string(),
                r.block_iters_alpha.to_string(),
                r.feasible.to_string(),
            ])?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

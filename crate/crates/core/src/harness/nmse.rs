//! Estimation-error sweeps over pilot power and pilot length.

use std::io::Write;

use serde::Serialize;

use super::pool::ordered_map;
use crate::channel::draw_channels;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::place_network;
use crate::pilots::{build_pilot_book, run_pilot_phase, NmseAccumulator};
use crate::rng::drop_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Direct,
    Cascaded,
    Forward,
}

const KINDS: [ChannelKind; 3] = [ChannelKind::Direct, ChannelKind::Cascaded, ChannelKind::Forward];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmseRow {
    pub channel_kind: ChannelKind,
    pub p_p_dbm: f64,
    pub tau: usize,
    pub nmse: f64,
}

/// Ensemble NMSE for every (tau, pilot power). Trial `t` draws one network and
/// one noise realization from `(seed, t)` and reuses them at every grid point,
/// so the curves differ only through tau and the pilot power.
pub fn nmse_sweep(
    config: &SystemConfig,
    taus: &[usize],
    pilot_dbm: &[f64],
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<NmseRow>> {
    if taus.is_empty() || pilot_dbm.is_empty() || trials == 0 {
        return Err(Error::Config("NMSE sweep needs pilot lengths, pilot powers and trials".into()));
    }
    let books = taus.iter().map(|&t| build_pilot_book(config.num_tags, t)).collect::<Result<Vec<_>>>()?;
    let cells = taus.len() * pilot_dbm.len();
    let per_trial = ordered_map(trials, threads, |t| -> Result<Vec<[NmseAccumulator; 3]>> {
        let s = drop_seed(seed, t as u64);
        let geo = place_network(config, s)?;
        let ch = draw_channels(&geo, config, s);
        let f_sq: Vec<_> = ch.f.iter().map(|z| z * z).collect();
        let cascaded: Vec<_> = (0..ch.num_tags()).map(|k| ch.cascaded(k)).collect();
        let mut out = Vec::with_capacity(cells);
        for (ti, &tau) in taus.iter().enumerate() {
            for &pp in pilot_dbm {
                let cfg = SystemConfig { tau, pilot_power_dbm: pp, ..config.clone() };
                let est = run_pilot_phase(&ch, &geo, &cfg, &books[ti], s)?;
                let mut acc = [NmseAccumulator::default(); 3];
                acc[0].add(ch.h0.iter(), est.direct.iter());
                for (truth, e) in cascaded.iter().zip(&est.cascaded) {
                    acc[1].add(truth.iter(), e.iter());
                }
                let got: Vec<_> = est.forward_sq.iter().copied().collect();
                acc[2].add(f_sq.iter(), got.iter());
                out.push(acc);
            }
        }
        Ok(out)
    });
    let mut totals = vec![[NmseAccumulator::default(); 3]; cells];
    for trial in per_trial {
        for (tot, acc) in totals.iter_mut().zip(trial?) {
            for (a, b) in tot.iter_mut().zip(&acc) {
                a.merge(b);
            }
        }
    }
    let mut rows = Vec::with_capacity(3 * cells);
    for kind_idx in 0..3 {
        for (ti, &tau) in taus.iter().enumerate() {
            for (pi, &pp) in pilot_dbm.iter().enumerate() {
                let nmse = totals[ti * pilot_dbm.len() + pi][kind_idx].value()?;
                rows.push(NmseRow { channel_kind: KINDS[kind_idx], p_p_dbm: pp, tau, nmse });
            }
        }
    }
    Ok(rows)
}

pub fn write_nmse_csv<W: Write>(rows: &[NmseRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["channel_kind", "p_p_dbm", "tau", "nmse"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

//! Scenario parameters.
//!
//! The JSON form uses the conventional symbol names (`f_c`, `B`, `N_f`, `M`,
//! `L`, `K`, `p_t`, ...). Every field has a default, so a config file only
//! needs the values it overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::energy::EhModel;
use crate::units::{dbm_to_watts, noise_power_watts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceUnit {
    #[default]
    M,
    Km,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ApPlacement {
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[default]
    Ls,
    Mmse,
}

/// Default AP-tag gain offset. Puts the mean incident power under random
/// beams at -11.6 dBm for 36 APs at 20 dBm.
pub const AP_TAG_OFFSET_DB: f64 = 151.3;
/// Default offset on links ending at the reader. Puts the optimized sum rate
/// near 6 bps/Hz at 10 dBm and the direct-link LS NMSE near 1e-5 at 16 dBm.
pub const READER_OFFSET_DB: f64 = 133.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Carrier frequency, MHz.
    #[serde(rename = "f_c")]
    pub carrier_mhz: f64,
    /// Bandwidth, Hz.
    #[serde(rename = "B")]
    pub bandwidth_hz: f64,
    /// Noise figure, dB (reader and APs).
    #[serde(rename = "N_f")]
    pub noise_figure_db: f64,
    #[serde(rename = "M")]
    pub num_aps: usize,
    #[serde(rename = "L")]
    pub reader_antennas: usize,
    #[serde(rename = "K")]
    pub num_tags: usize,
    /// Per-AP transmit power, dBm.
    #[serde(rename = "p_t")]
    pub tx_power_dbm: f64,
    /// Pilot power, dBm.
    #[serde(rename = "p_p")]
    pub pilot_power_dbm: f64,
    /// Tag activation threshold on harvested power, dBm.
    #[serde(rename = "p_b")]
    pub activation_dbm: f64,
    pub eh_model: EhModel,
    #[serde(rename = "d_0")]
    pub d0: f64,
    #[serde(rename = "d_1")]
    pub d1: f64,
    #[serde(rename = "h_AP")]
    pub h_ap: f64,
    #[serde(rename = "h_T")]
    pub h_tag: f64,
    #[serde(rename = "h_R")]
    pub h_reader: f64,
    /// Side of the square deployment area, m.
    pub area_side: f64,
    /// Coherence block length in samples.
    pub tau_c: usize,
    /// Pilot length per AP slot in samples.
    pub tau: usize,
    /// Pre-log factor override; computed from `tau_c`, `M` and `tau` when absent.
    pub psi: Option<f64>,
    pub eps_inner: f64,
    pub eps_outer: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    /// Reflection coefficient used by every tag during training.
    pub alpha_train: f64,
    /// Reflection coefficient of the random baseline and the fixed-alpha scheme.
    pub alpha_fixed: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub distance_unit: DistanceUnit,
    pub ap_placement: ApPlacement,
    /// Gain added to every AP-tag large-scale coefficient, dB.
    pub ap_tag_offset_db: f64,
    /// Gain added to links ending at the reader (AP-reader, tag-reader), dB.
    pub reader_offset_db: f64,
    pub estimator: Estimator,
    pub master_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            carrier_mhz: 2000.0,
            bandwidth_hz: 10e6,
            noise_figure_db: 10.0,
            num_aps: 36,
            reader_antennas: 4,
            num_tags: 3,
            tx_power_dbm: 20.0,
            pilot_power_dbm: 20.0,
            activation_dbm: -20.0,
            eh_model: EhModel::default(),
            d0: 10.0,
            d1: 50.0,
            h_ap: 15.0,
            h_tag: 1.0,
            h_reader: 1.6,
            area_side: 100.0,
            tau_c: 1000,
            tau: 5,
            psi: None,
            eps_inner: 1e-4,
            eps_outer: 1e-3,
            max_outer_iters: 30,
            max_inner_iters: 100,
            alpha_train: 0.6,
            alpha_fixed: 0.6,
            alpha_min: 1e-4,
            alpha_max: 1.0 - 1e-4,
            distance_unit: DistanceUnit::M,
            ap_placement: ApPlacement::Grid,
            ap_tag_offset_db: AP_TAG_OFFSET_DB,
            reader_offset_db: READER_OFFSET_DB,
            estimator: Estimator::Ls,
            master_seed: 0,
        }
    }
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.num_aps == 0 || self.num_tags == 0 || self.reader_antennas == 0 {
            return fail("M, K and L must be at least 1".into());
        }
        if self.tau < self.num_tags + 1 {
            return Err(Error::PilotLength { tau: self.tau, needed: self.num_tags + 1 });
        }
        if !(self.d0 > 0.0 && self.d0 < self.d1) {
            return fail(format!("need 0 < d_0 < d_1, got d_0={} d_1={}", self.d0, self.d1));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min < self.alpha_max && self.alpha_max < 1.0) {
            return fail("need 0 < alpha_min < alpha_max < 1".into());
        }
        for (name, a) in [("alpha_train", self.alpha_train), ("alpha_fixed", self.alpha_fixed)] {
            if !(a > 0.0 && a < 1.0) {
                return fail(format!("{name} must lie in (0,1)"));
            }
        }
        let side = (self.num_aps as f64).sqrt().round() as usize;
        if self.ap_placement == ApPlacement::Grid && side * side != self.num_aps {
            return fail(format!("grid placement needs a square AP count, got M = {}", self.num_aps));
        }
        if self.area_side <= 0.0 || self.bandwidth_hz <= 0.0 || self.carrier_mhz <= 0.0 {
            return fail("area, bandwidth and carrier must be positive".into());
        }
        if let Some(psi) = self.psi {
            if !(psi > 0.0 && psi <= 1.0) {
                return fail(format!("psi must lie in (0,1], got {psi}"));
            }
        } else if self.num_aps * self.tau >= self.tau_c {
            return fail(format!(
                "pilot phase M*tau = {} leaves no data samples in tau_c = {}",
                self.num_aps * self.tau,
                self.tau_c
            ));
        }
        if !(self.eps_inner > 0.0 && self.eps_outer > 0.0) {
            return fail("tolerances must be positive".into());
        }
        self.eh_model.validate()?;
        self.eh_model.required_incident_power(self.activation_watts())?;
        Ok(())
    }

    /// Fraction of the coherence block left for data: (tau_c - M tau) / tau_c.
    pub fn prelog(&self) -> f64 {
        self.psi.unwrap_or_else(|| {
            (self.tau_c as f64 - (self.num_aps * self.tau) as f64) / self.tau_c as f64
        })
    }

    pub fn noise_power(&self) -> f64 {
        noise_power_watts(self.bandwidth_hz, self.noise_figure_db)
    }

    pub fn tx_power_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn pilot_power_watts(&self) -> f64 {
        dbm_to_watts(self.pilot_power_dbm)
    }

    pub fn activation_watts(&self) -> f64 {
        dbm_to_watts(self.activation_dbm)
    }

    /// Minimum incident power at the harvester input that activates a tag.
    pub fn required_incident_power(&self) -> Result<f64> {
        self.eh_model.required_incident_power(self.activation_watts())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.prelog() - 0.82).abs() < 1e-12);
        assert!((cfg.required_incident_power().unwrap() - 1e-5 / 0.6).abs() < 1e-18);
    }

    #[test]
    fn json_uses_symbol_names() {
        let cfg = SystemConfig::from_json(r#"{"M": 16, "K": 2, "p_t": 10, "h_AP": 12}"#).unwrap();
        assert_eq!(cfg.num_aps, 16);
        assert_eq!(cfg.num_tags, 2);
        assert_eq!(cfg.tx_power_dbm, 10.0);
        assert_eq!(cfg.h_ap, 12.0);
        let back: SystemConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_short_pilots_and_bad_breakpoints() {
        assert!(matches!(
            SystemConfig::from_json(r#"{"K": 5, "tau": 5}"#),
            Err(Error::PilotLength { tau: 5, needed: 6 })
        ));
        assert!(SystemConfig::from_json(r#"{"d_0": 60}"#).is_err());
        assert!(SystemConfig::from_json(r#"{"M": 0}"#).is_err());
        assert!(SystemConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }
}

//! Energy-harvesting models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps the power absorbed by a tag's harvester to DC power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EhModel {
    /// `P_h = eta_b P_in`.
    Linear { eta_b: f64 },
    /// Normalized logistic with saturation `p_max` (W), steepness `a` (1/W)
    /// and inflection `center` (W); zero input gives zero output.
    Nonlinear { p_max: f64, steepness: f64, center: f64 },
}

impl Default for EhModel {
    fn default() -> Self {
        EhModel::Linear { eta_b: 0.6 }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl EhModel {
    pub fn default_nonlinear() -> Self {
        EhModel::Nonlinear { p_max: 0.024, steepness: 150.0, center: 0.014 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EhModel::Linear { eta_b } if eta_b > 0.0 && eta_b <= 1.0 => Ok(()),
            EhModel::Nonlinear { p_max, steepness, center } if p_max > 0.0 && steepness > 0.0 && center > 0.0 => Ok(()),
            _ => Err(Error::Config(format!("invalid energy-harvesting model {self:?}"))),
        }
    }

    /// Harvested DC power for absorbed RF power `p_in` (W).
    pub fn harvested(&self, p_in: f64) -> f64 {
        let p_in = p_in.max(0.0);
        match *self {
            EhModel::Linear { eta_b } => eta_b * p_in,
            EhModel::Nonlinear { p_max, steepness, center } => {
                let omega = logistic(-steepness * center);
                p_max * (logistic(steepness * (p_in - center)) - omega) / (1.0 - omega)
            }
        }
    }

    /// Absorbed power needed to harvest `p_out` (W).
    pub fn required_incident_power(&self, p_out: f64) -> Result<f64> {
        match *self {
            EhModel::Linear { eta_b } => Ok(p_out / eta_b),
            EhModel::Nonlinear { p_max, steepness, center } => {
                if !(p_out >= 0.0 && p_out < p_max) {
                    return Err(Error::Infeasible(format!(
                        "harvester saturates at {p_max} W, threshold {p_out} W is unreachable"
                    )));
                }
                let omega = logistic(-steepness * center);
                let sig = omega + p_out * (1.0 - omega) / p_max;
                Ok(center - (1.0 / sig - 1.0).ln() / steepness)
            }
        }
    }

    /// True when absorbed power `p_in` keeps a tag with threshold `p_b` active.
    pub fn is_active(&self, p_in: f64, p_b: f64) -> bool {
        self.required_incident_power(p_b).is_ok_and(|need| p_in >= need)
    }
}

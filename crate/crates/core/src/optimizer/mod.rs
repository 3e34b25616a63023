//! Alternating optimization of the transmit beam, the reader's combiners and
//! the tags' reflection coefficients, plus the random benchmark.
//!
//! Only the sum of the per-tag beamformers, `v = sum_i w_i`, reaches the tags,
//! and the per-AP budget `sum_i |w_{i,m}|^2 <= 1` admits a given `v` exactly
//! when `|v_m|^2 <= K` (split evenly, `w_i = v / K`). The beamforming block
//! therefore works on `v`, a problem of size M instead of MK.

pub mod ao;
pub mod baseline;
pub mod beamforming;
pub mod combiner;
pub mod reflection;

use nalgebra::DVector;
use num_complex::Complex64;

pub use ao::{alternating_optimization, alternating_optimization_fixed_alpha, AoOutcome, AoTrace, TraceRow};
pub use baseline::random_baseline;
pub use beamforming::{build_surrogate, linearize_eh, solve_beamforming, update_lambda, SurrogateQuadratic};
pub use combiner::optimal_combiner;
pub use reflection::{optimize_reflection, solve_alpha_feasibility, update_mu, update_theta};

use crate::channel::CMatrix;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::numerics::BarrierOptions;
use crate::system::{sinr_parts_from_responses, LinkCsi};

/// Everything a block needs besides the variables themselves.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub csi: &'a LinkCsi,
    /// Per-AP transmit power (W).
    pub tx_power: f64,
    pub noise_power: f64,
    pub prelog: f64,
    /// Absorbed power each tag needs (W); zero switches the constraint off.
    pub required_power: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eps_inner: f64,
    pub max_inner_iters: usize,
    pub barrier: BarrierOptions,
}

impl<'a> Problem<'a> {
    pub fn new(csi: &'a LinkCsi, config: &SystemConfig) -> Result<Self> {
        Ok(Self {
            csi,
            tx_power: config.tx_power_watts(),
            noise_power: config.noise_power(),
            prelog: config.prelog(),
            required_power: config.required_incident_power()?,
            alpha_min: config.alpha_min,
            alpha_max: config.alpha_max,
            eps_inner: config.eps_inner,
            max_inner_iters: config.max_inner_iters,
            barrier: BarrierOptions::default(),
        })
    }

    pub fn num_tags(&self) -> usize {
        self.csi.num_tags()
    }

    pub fn num_aps(&self) -> usize {
        self.csi.num_aps()
    }

    /// `sum_k psi log2(1 + sinr_k)` for effective beam `v`.
    pub fn objective(&self, v: &DVector<Complex64>, u: &CMatrix, alpha: &[f64]) -> f64 {
        let responses = self.csi.tag_responses(v);
        sinr_parts_from_responses(&responses, u, alpha, self.tx_power, self.noise_power)
            .iter()
            .map(|s| crate::system::rate_bound(s.sinr(), self.prelog))
            .sum()
    }

    /// Power reaching tag k's harvester from `v`, before the split.
    pub fn tag_power(&self, k: usize, v: &DVector<Complex64>) -> f64 {
        self.tx_power * self.csi.forward_gain(k, v).norm_sqr()
    }

    /// Largest reflection coefficient tag k can use under beam `v` and still
    /// harvest enough, capped at `alpha_max`. Below `alpha_min` means no
    /// feasible coefficient exists.
    pub fn alpha_ceiling(&self, k: usize, v: &DVector<Complex64>) -> f64 {
        if self.required_power <= 0.0 {
            return self.alpha_max;
        }
        (1.0 - self.required_power / self.tag_power(k, v)).min(self.alpha_max)
    }

    /// True when every tag meets its harvesting need at `alpha`, up to `rel_tol`.
    pub fn eh_satisfied(&self, v: &DVector<Complex64>, alpha: &[f64], rel_tol: f64) -> bool {
        (0..self.num_tags()).all(|k| (1.0 - alpha[k]) * self.tag_power(k, v) >= self.required_power * (1.0 - rel_tol))
    }

    /// True when `|v_m|^2 <= K` for every AP, up to `rel_tol`.
    pub fn power_satisfied(&self, v: &DVector<Complex64>, rel_tol: f64) -> bool {
        let cap = self.num_tags() as f64 * (1.0 + rel_tol);
        v.iter().all(|z| z.norm_sqr() <= cap)
    }
}

/// Relative objective increment used by every stopping rule.
pub(crate) fn relative_increment(new: f64, old: f64) -> f64 {
    (new - old) / old.abs().max(1e-12)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::{complex_normal, stream_rng, Stream};
    use rand::Rng;

    /// Unit-scale random links, unit-norm combiners and random coefficients.
    pub fn small_problem(m: usize, k: usize, l: usize, seed: u64) -> (LinkCsi, CMatrix, Vec<f64>) {
        let mut rng = stream_rng(seed, Stream::Misc);
        let g = CMatrix::from_fn(l, k, |_, _| complex_normal(&mut rng));
        let f = CMatrix::from_fn(k, m, |_, _| complex_normal(&mut rng));
        let cascaded = (0..k).map(|j| g.column(j) * f.row(j)).collect();
        let mut u = CMatrix::from_fn(l, k, |_, _| complex_normal(&mut rng));
        for mut c in u.column_iter_mut() {
            let n = c.norm();
            c /= Complex64::from(n);
        }
        let alpha = (0..k).map(|_| rng.random_range(0.3..0.8)).collect();
        (LinkCsi { cascaded, forward: f }, u, alpha)
    }

    pub fn problem(csi: &LinkCsi, required_power: f64) -> Problem<'_> {
        Problem {
            csi,
            tx_power: 1.0,
            noise_power: 0.1,
            prelog: 0.82,
            required_power,
            alpha_min: 1e-4,
            alpha_max: 1.0 - 1e-4,
            eps_inner: 1e-4,
            max_inner_iters: 100,
            barrier: BarrierOptions::default(),
        }
    }
}

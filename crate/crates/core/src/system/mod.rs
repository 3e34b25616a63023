//! Link-level evaluation of a candidate operating point: harvested power,
//! per-tag SINR and achievable rates.

pub mod energy;
pub mod rate;

use nalgebra::DVector;
use num_complex::Complex64;

pub use energy::EhModel;
pub use rate::{exact_rate, rate_bound};

use crate::channel::{CMatrix, ChannelRealization};
use crate::error::{Error, Result};

/// The channel knowledge an optimizer acts on. The direct AP-reader link is
/// cancelled at the reader and never enters the data phase.
#[derive(Debug, Clone)]
pub struct LinkCsi {
    /// Per tag, the L x M matrix whose column m is the cascaded channel via AP m.
    pub cascaded: Vec<CMatrix>,
    /// K x M forward gains.
    pub forward: CMatrix,
}

impl LinkCsi {
    pub fn from_realization(ch: &ChannelRealization) -> Self {
        Self {
            cascaded: (0..ch.num_tags()).map(|k| ch.cascaded(k)).collect(),
            forward: ch.f.clone(),
        }
    }

    pub fn num_tags(&self) -> usize {
        self.forward.nrows()
    }

    pub fn num_aps(&self) -> usize {
        self.forward.ncols()
    }

    pub fn num_antennas(&self) -> usize {
        self.cascaded.first().map_or(0, |h| h.nrows())
    }

    /// `f_k^T v` (no conjugation).
    pub fn forward_gain(&self, k: usize, v: &DVector<Complex64>) -> Complex64 {
        self.forward.row(k).transpose().dot(v)
    }

    /// `H_k v`: what tag k's reflection of beam `v` looks like at the reader.
    pub fn tag_response(&self, k: usize, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.cascaded[k] * v
    }

    pub fn tag_responses(&self, v: &DVector<Complex64>) -> Vec<DVector<Complex64>> {
        (0..self.num_tags()).map(|k| self.tag_response(k, v)).collect()
    }

    /// `d_k = [f_k; ...; f_k]`, the stacked forward vector of length MK.
    pub fn stacked_forward(&self, k: usize) -> DVector<Complex64> {
        let (m, kk) = (self.num_aps(), self.num_tags());
        DVector::from_fn(m * kk, |idx, _| self.forward[(k, idx % m)])
    }
}

/// Stacked beamformer, combiners and reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// `[w_1; ...; w_K]`, each block of length M.
    pub w: DVector<Complex64>,
    /// L x K, column k combines tag k.
    pub u: CMatrix,
    pub alpha: Vec<f64>,
}

impl Solution {
    pub fn num_tags(&self) -> usize {
        self.alpha.len()
    }

    pub fn num_aps(&self) -> usize {
        self.w.len() / self.num_tags().max(1)
    }

    /// `sum_i w_i`: only this sum reaches the tags.
    pub fn effective_beam(&self) -> DVector<Complex64> {
        let (m, k) = (self.num_aps(), self.num_tags());
        DVector::from_fn(m, |i, _| (0..k).map(|j| self.w[j * m + i]).sum())
    }

    /// Splits `v` evenly over the K blocks. Per-AP power of the result is
    /// `|v_m|^2 / K`, the least possible for that sum.
    pub fn from_effective_beam(v: &DVector<Complex64>, u: CMatrix, alpha: Vec<f64>) -> Self {
        let k = alpha.len();
        let m = v.len();
        let scale = 1.0 / k as f64;
        let w = DVector::from_fn(m * k, |idx, _| v[idx % m] * scale);
        Self { w, u, alpha }
    }

    pub fn per_ap_power(&self) -> Vec<f64> {
        let (m, k) = (self.num_aps(), self.num_tags());
        (0..m).map(|i| (0..k).map(|j| self.w[j * m + i].norm_sqr()).sum()).collect()
    }

    /// Checks the power, combiner-norm and reflection-coefficient constraints.
    pub fn check_feasible(&self, tol: f64) -> Result<()> {
        let k = self.num_tags();
        if k == 0 || self.w.len() % k != 0 || self.u.ncols() != k {
            return Err(Error::Dimension(format!(
                "beamformer of length {} and {} combiners for {k} tags",
                self.w.len(),
                self.u.ncols()
            )));
        }
        if let Some((m, p)) = self.per_ap_power().into_iter().enumerate().find(|&(_, p)| p > 1.0 + tol) {
            return Err(Error::Infeasible(format!("AP {m} power {p} exceeds 1")));
        }
        for (j, col) in self.u.column_iter().enumerate() {
            if col.norm() > 1.0 + tol {
                return Err(Error::Infeasible(format!("combiner {j} has norm {}", col.norm())));
            }
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::Infeasible(format!("reflection coefficient {a} outside (0, 1)")));
        }
        Ok(())
    }
}

/// `(1 - alpha) p_t |f^T sum_i w_i|^2` for one tag's forward row `f` (length M)
/// and the stacked beamformer `w` (length MK).
pub fn incident_power(f: &DVector<Complex64>, w: &DVector<Complex64>, alpha: f64, p_t: f64) -> f64 {
    let m = f.len();
    let sum: Complex64 = w.iter().enumerate().map(|(idx, wi)| f[idx % m] * wi).sum();
    (1.0 - alpha) * p_t * sum.norm_sqr()
}

/// Total RF power impinging on tag k before the reflect/absorb split.
pub fn received_power(csi: &LinkCsi, k: usize, v: &DVector<Complex64>, p_t: f64) -> f64 {
    p_t * csi.forward_gain(k, v).norm_sqr()
}

/// Numerator, interference and noise of tag k's SINR, all in watts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrParts {
    pub signal: f64,
    pub interference: f64,
    pub noise: f64,
}

impl SinrParts {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.interference + self.noise)
    }

    /// Signal-to-noise and interference-to-noise ratios for the exact rate.
    pub fn rate_coefficients(&self) -> (f64, f64) {
        (self.signal / self.noise, self.interference / self.noise)
    }
}

/// SINR parts of every tag given precomputed `H_j v` responses.
pub fn sinr_parts_from_responses(
    responses: &[DVector<Complex64>],
    u: &CMatrix,
    alpha: &[f64],
    p_t: f64,
    noise_power: f64,
) -> Vec<SinrParts> {
    let k = alpha.len();
    (0..k)
        .map(|kk| {
            let uk = u.column(kk);
            let mut parts = SinrParts { signal: 0.0, interference: 0.0, noise: uk.norm_squared() * noise_power };
            for (j, resp) in responses.iter().enumerate() {
                let p = alpha[j] * p_t * uk.dotc(resp).norm_sqr();
                if j == kk {
                    parts.signal = p;
                } else {
                    parts.interference += p;
                }
            }
            parts
        })
        .collect()
}

pub fn sinr_parts(csi: &LinkCsi, sol: &Solution, p_t: f64, noise_power: f64) -> Vec<SinrParts> {
    let responses = csi.tag_responses(&sol.effective_beam());
    sinr_parts_from_responses(&responses, &sol.u, &sol.alpha, p_t, noise_power)
}

pub fn sinr(csi: &LinkCsi, sol: &Solution, k: usize, p_t: f64, noise_power: f64) -> f64 {
    sinr_parts(csi, sol, p_t, noise_power)[k].sinr()
}

/// Sum of `psi log2(1 + sinr_k)`; the quantity the optimizer maximizes.
pub fn sum_rate_bound(csi: &LinkCsi, sol: &Solution, p_t: f64, noise_power: f64, psi: f64) -> f64 {
    sinr_parts(csi, sol, p_t, noise_power).iter().map(|s| rate_bound(s.sinr(), psi)).sum()
}

/// Sum rate averaged over the carrier's fading.
pub fn sum_rate_exact(csi: &LinkCsi, sol: &Solution, p_t: f64, noise_power: f64, psi: f64) -> f64 {
    sinr_parts(csi, sol, p_t, noise_power)
        .iter()
        .map(|s| {
            let (a, b) = s.rate_coefficients();
            exact_rate(a, b, psi)
        })
        .sum()
}

/// Absorbed power at every tag.
pub fn incident_powers(csi: &LinkCsi, sol: &Solution, p_t: f64) -> Vec<f64> {
    let v = sol.effective_beam();
    (0..csi.num_tags())
        .map(|k| (1.0 - sol.alpha[k]) * received_power(csi, k, &v, p_t))
        .collect()
}

/// True when every tag absorbs at least `required` watts (up to `rel_tol`).
pub fn all_tags_active(csi: &LinkCsi, sol: &Solution, p_t: f64, required: f64, rel_tol: f64) -> bool {
    incident_powers(csi, sol, p_t).iter().all(|&p| p >= required * (1.0 - rel_tol))
}

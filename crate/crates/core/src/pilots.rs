//! Pilot books, pilot-phase signal synthesis and channel estimation.
//!
//! Training is time-multiplexed over the APs: in slot m only AP m transmits
//! the carrier pilot `s` while every tag k backscatters its sequence `c_k`.
//! The reader then sees `Y_m = sqrt(p) H_m X diag(s) + N_m` with
//! `H_m = [h_{0,m}, sqrt(a_1) h_{1,m}, ..., sqrt(a_K) h_{K,m}]`, and AP m
//! hears the round trip `sqrt(p a_k) f_{k,m}^2` from each tag.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::{CMatrix, ChannelRealization};
use crate::config::{Estimator, SystemConfig};
use crate::error::{Error, Result};
use crate::geometry::NetworkGeometry;
use crate::rng::{complex_normal, indexed_rng, Stream};
use crate::system::LinkCsi;

/// Orthogonal unit-modulus training sequences.
#[derive(Debug, Clone)]
pub struct PilotBook {
    /// AP carrier pilot, length tau.
    pub carrier: DVector<Complex64>,
    /// (K+1) x tau; row 0 is all ones, row k is tag k's sequence.
    pub x: CMatrix,
}

impl PilotBook {
    pub fn tau(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_tags(&self) -> usize {
        self.x.nrows() - 1
    }

    /// Tag k's sequence (k is 0-based over tags).
    pub fn tag_sequence(&self, k: usize) -> DVector<Complex64> {
        self.x.row(k + 1).transpose()
    }
}

/// First K+1 rows of the tau-point DFT matrix, all-ones carrier.
pub fn build_pilot_book(num_tags: usize, tau: usize) -> Result<PilotBook> {
    if tau < num_tags + 1 {
        return Err(Error::PilotLength { tau, needed: num_tags + 1 });
    }
    let x = CMatrix::from_fn(num_tags + 1, tau, |r, c| {
        let phase = -2.0 * std::f64::consts::PI * ((r * c) % tau) as f64 / tau as f64;
        Complex64::from_polar(1.0, phase)
    });
    Ok(PilotBook { carrier: DVector::from_element(tau, Complex64::new(1.0, 0.0)), x })
}

fn complex_noise<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMatrix {
    let sd = var.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng) * sd)
}

/// Reader observation of one training slot, L x tau.
pub fn synthesize_reader_rx<R: Rng + ?Sized>(
    h_slot: &CMatrix,
    book: &PilotBook,
    pilot_power: f64,
    noise_power: f64,
    rng: &mut R,
) -> CMatrix {
    let mut clean = h_slot * &book.x * Complex64::from(pilot_power.sqrt());
    for (mut col, s) in clean.column_iter_mut().zip(book.carrier.iter()) {
        col *= *s;
    }
    clean + complex_noise(h_slot.nrows(), book.tau(), noise_power, rng)
}

fn strip_carrier(y: &CMatrix, book: &PilotBook) -> CMatrix {
    let mut out = y.clone();
    for (mut col, s) in out.column_iter_mut().zip(book.carrier.iter()) {
        col *= s.conj();
    }
    out
}

/// `Y diag(s)^H X^H / tau`, i.e. `sqrt(p) H_m` plus noise of variance `sigma^2/tau`.
pub fn despread(y: &CMatrix, book: &PilotBook) -> CMatrix {
    strip_carrier(y, book) * book.x.adjoint() / Complex64::from(book.tau() as f64)
}

/// Variance of each MMSE-estimated column entry, `p z^2 / (p z + s)` with
/// `p` already including the training reflection for tag columns.
pub fn mmse_gains(zeta_direct: f64, zeta_cascaded: &[f64], pilot_power: f64, alpha_train: f64, sigma_p: f64) -> Vec<f64> {
    std::iter::once(pilot_power * zeta_direct.powi(2) / (pilot_power * zeta_direct + sigma_p))
        .chain(zeta_cascaded.iter().map(|&z| {
            let p = alpha_train * pilot_power;
            p * z.powi(2) / (p * z + sigma_p)
        }))
        .collect()
}

/// Per-entry linear MMSE estimate of `H_m` from its despread observation.
/// `zeta` lists the prior variance of each column of `H_m`'s underlying
/// channels (direct first, then cascaded without the reflection factor).
pub fn estimate_mmse(
    despread: &CMatrix,
    zeta: &[f64],
    pilot_power: f64,
    alpha_train: f64,
    sigma_p: f64,
) -> Result<CMatrix> {
    if zeta.len() != despread.ncols() {
        return Err(Error::MissingStatistics(format!(
            "{} large-scale gains for {} channel columns",
            zeta.len(),
            despread.ncols()
        )));
    }
    let mut est = despread.clone();
    for (c, mut col) in est.column_iter_mut().enumerate() {
        // prior variance of the column as it appears in H_m
        let var = if c == 0 { zeta[0] } else { alpha_train * zeta[c] };
        col *= Complex64::from(pilot_power.sqrt() * var / (pilot_power * var + sigma_p));
    }
    Ok(est)
}

/// Least-squares estimate `Y X_bar^+` with `X_bar = sqrt(p) X`, after the
/// carrier is stripped.
pub fn estimate_ls(y: &CMatrix, book: &PilotBook, pilot_power: f64) -> Result<CMatrix> {
    let xbar = &book.x * Complex64::from(pilot_power.sqrt());
    let gram = &xbar * xbar.adjoint();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Dimension("pilot matrix is rank deficient".into()))?;
    Ok(strip_carrier(y, book) * xbar.adjoint() * inv)
}

/// AP-side training for one slot. Returns the LS estimates of `f_{k,m}^2`
/// and their principal square roots.
pub fn estimate_forward_ls<R: Rng + ?Sized>(
    forward_col: &DVector<Complex64>,
    book: &PilotBook,
    alpha_train: f64,
    pilot_power: f64,
    ap_noise_power: f64,
    rng: &mut R,
) -> (DVector<Complex64>, DVector<Complex64>) {
    let tau = book.tau();
    let mut y = DVector::<Complex64>::zeros(tau);
    for (k, f) in forward_col.iter().enumerate() {
        let amp = (pilot_power * alpha_train).sqrt() * f * f;
        y += book.tag_sequence(k).component_mul(&book.carrier) * amp;
    }
    let sd = ap_noise_power.sqrt();
    for yi in y.iter_mut() {
        *yi += complex_normal(rng) * sd;
    }
    let despread_y = y.component_mul(&book.carrier.map(|s| s.conj()));
    let scale = 1.0 / (tau as f64 * (pilot_power * alpha_train).sqrt());
    let squared = DVector::from_fn(forward_col.len(), |k, _| {
        book.tag_sequence(k).dotc(&despread_y) * scale
    });
    let roots = squared.map(|z| z.sqrt());
    (squared, roots)
}

/// Energy-normalized squared error; accumulates across an ensemble.
#[derive(Debug, Clone, Copy, Default)]
pub struct NmseAccumulator {
    err: f64,
    energy: f64,
    count: usize,
}

impl NmseAccumulator {
    pub fn add<'a, I>(&mut self, truth: I, estimate: I)
    where
        I: IntoIterator<Item = &'a Complex64>,
    {
        for (t, e) in truth.into_iter().zip(estimate) {
            self.err += (t - e).norm_sqr();
            self.energy += t.norm_sqr();
            self.count += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.err += other.err;
        self.energy += other.energy;
        self.count += other.count;
    }

    pub fn value(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Ok(self.err / self.energy)
    }
}

pub fn nmse(truth: &[Complex64], estimate: &[Complex64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::Dimension(format!("{} truths vs {} estimates", truth.len(), estimate.len())));
    }
    let mut acc = NmseAccumulator::default();
    acc.add(truth, estimate);
    acc.value()
}

/// Everything the pilot phase learns in one coherence block.
#[derive(Debug, Clone)]
pub struct ChannelEstimates {
    /// L x M direct-link estimates.
    pub direct: CMatrix,
    /// Per tag, L x M cascaded estimates with the training reflection removed.
    pub cascaded: Vec<CMatrix>,
    /// K x M estimates of `f_{k,m}^2`.
    pub forward_sq: CMatrix,
    /// K x M principal square roots of `forward_sq`.
    pub forward: CMatrix,
    pub method: Estimator,
    pub alpha_train: f64,
}

impl ChannelEstimates {
    pub fn link_csi(&self) -> LinkCsi {
        LinkCsi { cascaded: self.cascaded.clone(), forward: self.forward.clone() }
    }
}

/// Column m of `H_m` as the reader sees it during training.
pub fn training_matrix(ch: &ChannelRealization, m: usize, alpha_train: f64) -> CMatrix {
    let (l, k) = (ch.num_antennas(), ch.num_tags());
    let sa = alpha_train.sqrt();
    CMatrix::from_fn(l, k + 1, |r, c| {
        if c == 0 {
            ch.h0[(r, m)]
        } else {
            ch.g[(r, c - 1)] * ch.f[(c - 1, m)] * sa
        }
    })
}

/// Runs all M training slots and returns the estimates. Noise draws are keyed
/// by `(seed, slot)` so every slot is independent and reproducible.
pub fn run_pilot_phase(
    ch: &ChannelRealization,
    geometry: &NetworkGeometry,
    config: &SystemConfig,
    book: &PilotBook,
    seed: u64,
) -> Result<ChannelEstimates> {
    let (l, m_aps, k) = (ch.num_antennas(), ch.num_aps(), ch.num_tags());
    let p = config.pilot_power_watts();
    let a = config.alpha_train;
    let noise = ch.noise_power;
    let sigma_p = noise / book.tau() as f64;
    let mut direct = CMatrix::zeros(l, m_aps);
    let mut cascaded = vec![CMatrix::zeros(l, m_aps); k];
    let mut forward_sq = CMatrix::zeros(k, m_aps);
    let mut forward = CMatrix::zeros(k, m_aps);
    for m in 0..m_aps {
        let h = training_matrix(ch, m, a);
        let mut rng = indexed_rng(seed, Stream::ReaderPilotNoise, m as u64);
        let y = synthesize_reader_rx(&h, book, p, noise, &mut rng);
        let est = match config.estimator {
            Estimator::Ls => estimate_ls(&y, book, p)?,
            Estimator::Mmse => {
                let zeta: Vec<f64> = std::iter::once(geometry.zeta_h0[m])
                    .chain((0..k).map(|kk| geometry.zeta_cascaded(kk, m)))
                    .collect();
                estimate_mmse(&despread(&y, book), &zeta, p, a, sigma_p)?
            }
        };
        direct.set_column(m, &est.column(0));
        for (kk, casc) in cascaded.iter_mut().enumerate() {
            casc.set_column(m, &(est.column(kk + 1) / Complex64::from(a.sqrt())));
        }
        let mut rng = indexed_rng(seed, Stream::ApPilotNoise, m as u64);
        let (sq, root) = estimate_forward_ls(&ch.f.column(m).into_owned(), book, a, p, noise, &mut rng);
        forward_sq.set_column(m, &sq);
        forward.set_column(m, &root);
    }
    Ok(ChannelEstimates { direct, cascaded, forward_sq, forward, method: config.estimator, alpha_train: a })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_point_book() {
        let b = build_pilot_book(1, 2).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!((&b.x - want).norm() < 1e-15);
    }

    #[test]
    fn book_is_orthogonal_and_unit_modulus() {
        for (k, tau) in [(3, 5), (3, 4), (2, 7), (5, 11)] {
            let b = build_pilot_book(k, tau).unwrap();
            let g = &b.x * b.x.adjoint();
            let err = (g - CMatrix::identity(k + 1, k + 1) * c(tau as f64, 0.0)).norm();
            assert!(err <= 1e-12 * tau as f64, "{err}");
            assert!(b.x.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
            assert!(b.x.row(0).iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        }
        assert!(matches!(build_pilot_book(3, 3), Err(Error::PilotLength { tau: 3, needed: 4 })));
    }

    #[test]
    fn noiseless_single_path() {
        let b = build_pilot_book(0, 3).unwrap();
        let h = CMatrix::from_element(1, 1, c(0.3, -0.2));
        let mut rng = stream_rng(0, Stream::Misc);
        let y = synthesize_reader_rx(&h, &b, 4.0, 0.0, &mut rng);
        for z in y.iter() {
            assert!((z - c(0.6, -0.4)).norm() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_fixture() {
        // X = [[1,1],[1,-1]], s = 1, p = 1: Y = [h0+h1, h0-h1] per antenna
        let b = build_pilot_book(1, 2).unwrap();
        let h = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(0.5, 0.5)]);
        let mut rng = stream_rng(0, Stream::Misc);
        let y = synthesize_reader_rx(&h, &b, 1.0, 0.0, &mut rng);
        let want = CMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(1.0, -1.0), c(2.5, -0.5), c(1.5, -1.5)]);
        assert!((y - want).norm() < 1e-14);
    }

    #[test]
    fn noiseless_estimators_recover_h() {
        let b = build_pilot_book(3, 5).unwrap();
        let mut rng = stream_rng(3, Stream::Misc);
        let h = CMatrix::from_fn(4, 4, |_, _| complex_normal(&mut rng));
        let y = synthesize_reader_rx(&h, &b, 2.5, 0.0, &mut rng);
        let ls = estimate_ls(&y, &b, 2.5).unwrap();
        assert!((&ls - &h).norm() <= 1e-10 * h.norm());
        let ds = despread(&y, &b) / c(2.5f64.sqrt(), 0.0);
        assert!((&ds - &h).norm() <= 1e-10 * h.norm());
    }

    #[test]
    fn despread_and_pseudo_inverse_agree() {
        let b = build_pilot_book(2, 6).unwrap();
        let mut rng = stream_rng(4, Stream::Misc);
        let h = CMatrix::from_fn(3, 3, |_, _| complex_normal(&mut rng));
        let y = synthesize_reader_rx(&h, &b, 0.7, 0.3, &mut rng);
        let ls = estimate_ls(&y, &b, 0.7).unwrap();
        let ds = despread(&y, &b) / c(0.7f64.sqrt(), 0.0);
        assert!((&ls - &ds).norm() <= 1e-10 * ls.norm());
    }

    #[test]
    fn mmse_gain_fixture() {
        let g = mmse_gains(1.0, &[1.0], 1.0, 0.6, 1.0);
        assert!((g[0] - 0.5).abs() < 1e-15);
        assert!((g[1] - 0.6 / 1.6).abs() < 1e-15);
    }

    #[test]
    fn mmse_limits() {
        let ds = CMatrix::from_element(2, 2, c(1.0, 2.0));
        let zero_p = estimate_mmse(&ds, &[1.0, 1.0], 0.0, 0.6, 1.0).unwrap();
        assert!(zero_p.norm() == 0.0);
        // vanishing noise: estimate tends to ds / sqrt(p)
        let hi = estimate_mmse(&ds, &[1.0, 2.0], 4.0, 0.6, 1e-14).unwrap();
        assert!((hi - &ds / c(2.0, 0.0)).norm() < 1e-12);
        assert!(estimate_mmse(&ds, &[1.0], 1.0, 0.6, 1.0).is_err());
    }

    #[test]
    fn forward_noiseless() {
        let b = build_pilot_book(2, 3).unwrap();
        let mut rng = stream_rng(0, Stream::Misc);
        let col = DVector::from_vec(vec![c(0.8, 0.0), c(0.3, -0.9)]);
        let (sq, root) = estimate_forward_ls(&col, &b, 0.6, 2.0, 0.0, &mut rng);
        assert!((root[0] - col[0]).norm() < 1e-14);
        assert!((sq[1] - col[1] * col[1]).norm() < 1e-14);
        assert!((root[1].norm() - col[1].norm()).abs() < 1e-14);
        assert!((root[1] - col[1]).norm() < 1e-14 || (root[1] + col[1]).norm() < 1e-14);
    }

    #[test]
    fn nmse_cases() {
        let t = vec![c(1.0, 0.0), c(0.0, 2.0)];
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        assert_eq!(nmse(&t, &[c(0.0, 0.0); 2]).unwrap(), 1.0);
        assert!(matches!(nmse(&[], &[]), Err(Error::EmptyEnsemble)));
        assert!(nmse(&t, &t[..1]).is_err());
    }

    #[test]
    fn pilot_phase_is_reproducible() {
        let cfg = SystemConfig { num_aps: 4, ..SystemConfig::default() };
        let geo = crate::geometry::place_network(&cfg, 1).unwrap();
        let ch = crate::channel::draw_channels(&geo, &cfg, 1);
        let book = build_pilot_book(cfg.num_tags, cfg.tau).unwrap();
        let a = run_pilot_phase(&ch, &geo, &cfg, &book, 7).unwrap();
        let b = run_pilot_phase(&ch, &geo, &cfg, &book, 7).unwrap();
        assert_eq!(a.cascaded, b.cascaded);
        assert_eq!(a.forward, b.forward);
        assert_eq!(a.cascaded.len(), 3);
        assert_eq!(a.direct.shape(), (4, 4));
    }
}

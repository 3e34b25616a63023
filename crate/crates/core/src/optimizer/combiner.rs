//! Reader combining.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::error::Result;
use crate::numerics::hermitian_rank1_solve;
use crate::system::LinkCsi;

/// Rotates `u` so its first nonzero entry is real and positive.
pub fn fix_phase(u: &mut DVector<Complex64>) {
    if let Some(z) = u.iter().find(|z| z.norm() > 0.0).copied() {
        *u *= z.conj() / z.norm();
    }
}

/// Unit-norm combiner matched to each tag's response, `H_k v / ||H_k v||`.
pub fn matched_combiner(csi: &LinkCsi, v: &DVector<Complex64>) -> CMatrix {
    let l = csi.num_antennas();
    let mut u = CMatrix::zeros(l, csi.num_tags());
    for (k, b) in csi.tag_responses(v).into_iter().enumerate() {
        let mut col = if b.norm() > 0.0 { &b / Complex64::from(b.norm()) } else { unit(l) };
        fix_phase(&mut col);
        u.set_column(k, &col);
    }
    u
}

fn unit(l: usize) -> DVector<Complex64> {
    DVector::from_fn(l, |i, _| Complex64::from(if i == 0 { 1.0 } else { 0.0 }))
}

/// SINR-maximizing combiners: for tag k the dominant generalized eigenvector
/// of `(B_k, sum_{j != k} B_j + sigma^2 I)` with `B_j = alpha_j p b_j b_j^H`.
/// `B_k` has rank one, so the eigenvector is `R_k^{-1} b_k`.
pub fn optimal_combiner(csi: &LinkCsi, v: &DVector<Complex64>, alpha: &[f64], p_t: f64, noise_power: f64) -> Result<CMatrix> {
    let l = csi.num_antennas();
    let responses = csi.tag_responses(v);
    let mut u = CMatrix::zeros(l, alpha.len());
    for k in 0..alpha.len() {
        let mut r = CMatrix::identity(l, l) * Complex64::from(noise_power);
        for (j, b) in responses.iter().enumerate() {
            if j != k {
                r.gerc(Complex64::from(alpha[j] * p_t), b, b, Complex64::from(1.0));
            }
        }
        let x = hermitian_rank1_solve(&r, &responses[k])?;
        let mut col = if x.norm() > 0.0 { &x / Complex64::from(x.norm()) } else { unit(l) };
        fix_phase(&mut col);
        u.set_column(k, &col);
    }
    Ok(u)
}

//! Random benchmark: Gaussian beam scaled to the per-AP budget, Gaussian
//! unit-norm combiners, fixed reflection coefficients.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::rng::{complex_normal, stream_rng, Stream};
use crate::system::Solution;

pub fn random_baseline(num_aps: usize, num_tags: usize, num_antennas: usize, alpha: f64, seed: u64) -> Solution {
    let mut rng = stream_rng(seed, Stream::RandomBeamformer);
    let mut w = DVector::from_fn(num_aps * num_tags, |_, _| complex_normal(&mut rng));
    for m in 0..num_aps {
        let p: f64 = (0..num_tags).map(|i| w[i * num_aps + m].norm_sqr()).sum();
        let s = Complex64::from(1.0 / p.sqrt());
        for i in 0..num_tags {
            w[i * num_aps + m] *= s;
        }
    }
    let mut u = CMatrix::from_fn(num_antennas, num_tags, |_, _| complex_normal(&mut rng));
    for mut col in u.column_iter_mut() {
        let n = col.norm();
        col /= Complex64::from(n);
    }
    Solution { w, u, alpha: vec![alpha; num_tags] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_and_norms() {
        let s = random_baseline(6, 3, 4, 0.6, 11);
        assert!(s.per_ap_power().iter().all(|p| (p - 1.0).abs() < 1e-12));
        assert!(s.u.column_iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        assert_eq!(s.alpha, vec![0.6; 3]);
        assert!(s.check_feasible(1e-9).is_ok());
        assert_eq!(s, random_baseline(6, 3, 4, 0.6, 11));
    }

    #[test]
    fn direction_is_isotropic() {
        // for a fixed unit direction e, |e^H w|^2 / ||w||^2 of an isotropic
        // complex vector in C^n is Beta(1, n - 1) with mean 1/n, var (n-1)/(n^2 (n+1))
        let n = 4usize;
        let draws = 10_000;
        let e = DVector::from_fn(n, |i, _| Complex64::from(if i == 1 { 1.0 } else { 0.0 }));
        let vals: Vec<f64> = (0..draws)
            .map(|d| {
                // one AP, n tags: per-AP scaling is a global scale here
                let s = random_baseline(1, n, 1, 0.6, d as u64);
                e.dotc(&s.w).norm_sqr() / s.w.norm_squared()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / draws as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / draws as f64;
        let nf = n as f64;
        assert!((mean - 1.0 / nf).abs() < 0.01);
        assert!((var - (nf - 1.0) / (nf * nf * (nf + 1.0))).abs() < 0.005);
    }
}

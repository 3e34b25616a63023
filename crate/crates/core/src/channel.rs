//! Small-scale Rayleigh channel realizations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::geometry::NetworkGeometry;
use crate::rng::{complex_normal, stream_rng, Stream};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// AP -> reader channels as columns, L x M.
    pub h0: CMatrix,
    /// AP -> tag scalars, `f[(k, m)]`, K x M.
    pub f: CMatrix,
    /// Tag -> reader channels as columns, L x K.
    pub g: CMatrix,
    /// Reader noise power in watts.
    pub noise_power: f64,
}

impl ChannelRealization {
    pub fn num_aps(&self) -> usize {
        self.h0.ncols()
    }

    pub fn num_tags(&self) -> usize {
        self.f.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.h0.nrows()
    }

    /// Cascaded channel of tag k: column m is f_{k,m} g_k (L x M).
    pub fn cascaded(&self, k: usize) -> CMatrix {
        let g = self.g.column(k);
        CMatrix::from_fn(self.num_antennas(), self.num_aps(), |l, m| self.f[(k, m)] * g[l])
    }
}

/// Draws `v = sqrt(zeta) * z` with `z ~ CN(0, 1)` per entry.
///
/// Each link family uses its own stream so that, for example, changing `L`
/// leaves the forward channels untouched.
pub fn draw_channels(geometry: &NetworkGeometry, config: &SystemConfig, seed: u64) -> ChannelRealization {
    let (l, m, k) = (config.reader_antennas, geometry.num_aps(), geometry.num_tags());
    let mut rng = stream_rng(seed, Stream::DirectChannel);
    let mut h0 = CMatrix::zeros(l, m);
    for mi in 0..m {
        let s = geometry.zeta_h0[mi].sqrt();
        for li in 0..l {
            h0[(li, mi)] = complex_normal(&mut rng) * s;
        }
    }
    let mut rng = stream_rng(seed, Stream::ForwardChannel);
    let mut f = CMatrix::zeros(k, m);
    for ki in 0..k {
        for mi in 0..m {
            f[(ki, mi)] = complex_normal(&mut rng) * geometry.zeta_f[ki][mi].sqrt();
        }
    }
    let mut rng = stream_rng(seed, Stream::TagReaderChannel);
    let mut g = CMatrix::zeros(l, k);
    for ki in 0..k {
        let s = geometry.zeta_g[ki].sqrt();
        for li in 0..l {
            g[(li, ki)] = complex_normal(&mut rng) * s;
        }
    }
    ChannelRealization { h0, f, g, noise_power: config.noise_power() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::place_network;

    #[test]
    fn noise_power_is_minus_94_dbm() {
        let cfg = SystemConfig::default();
        let g = place_network(&cfg, 0).unwrap();
        let ch = draw_channels(&g, &cfg, 0);
        assert!((crate::units::watts_to_dbm(ch.noise_power) + 94.0).abs() < 1e-9);
    }

    #[test]
    fn draws_are_reproducible_and_cascade_is_consistent() {
        let cfg = SystemConfig { num_aps: 4, ..Default::default() };
        let g = place_network(&cfg, 5).unwrap();
        let a = draw_channels(&g, &cfg, 9);
        assert_eq!(a, draw_channels(&g, &cfg, 9));
        let h = a.cascaded(1);
        for m in 0..4 {
            for l in 0..cfg.reader_antennas {
                assert_eq!(h[(l, m)], a.f[(1, m)] * a.g[(l, 1)]);
            }
        }
    }
}

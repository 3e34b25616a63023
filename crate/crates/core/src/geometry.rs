//! Network layout and large-scale fading.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ApPlacement, DistanceUnit, SystemConfig};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::units::db_to_linear;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGeometry {
    pub ap_positions: Vec<Point>,
    pub tag_positions: Vec<Point>,
    pub reader_position: Point,
    /// AP-reader gains, length M.
    pub zeta_h0: Vec<f64>,
    /// AP-tag gains, `zeta_f[k][m]`.
    pub zeta_f: Vec<Vec<f64>>,
    /// Tag-reader gains, length K.
    pub zeta_g: Vec<f64>,
}

impl NetworkGeometry {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_tags(&self) -> usize {
        self.tag_positions.len()
    }

    /// Large-scale gain of the cascaded AP m -> tag k -> reader link.
    pub fn zeta_cascaded(&self, k: usize, m: usize) -> f64 {
        self.zeta_f[k][m] * self.zeta_g[k]
    }

    /// `node_type,index,x_m,y_m` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_type", "index", "x_m", "y_m"])?;
        let rows = self
            .ap_positions
            .iter()
            .enumerate()
            .map(|(i, p)| ("ap", i, p))
            .chain(self.tag_positions.iter().enumerate().map(|(i, p)| ("tag", i, p)))
            .chain(std::iter::once(("reader", 0, &self.reader_position)));
        for (kind, i, p) in rows {
            w.write_record([kind.to_string(), i.to_string(), format!("{}", p.x), format!("{}", p.y)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hata-COST231 constant for carrier `f_c` (MHz) and antenna heights (m).
pub fn hata_constant(carrier_mhz: f64, h_t: f64, h_r: f64) -> f64 {
    let lf = carrier_mhz.log10();
    46.3 + 33.9 * lf - 13.82 * h_t.log10() - (1.1 * lf - 0.7) * h_r + (1.56 * lf - 0.8)
}

/// Three-slope large-scale gain in dB (a negative number) at horizontal
/// distance `d_m` metres.
///
/// Exponent 3.5 beyond `d_1`, 2 between `d_0` and `d_1`, flat inside `d_0`.
/// With `DistanceUnit::Km` both the distance and the breakpoints are expressed
/// in km before the logarithms are taken.
pub fn path_loss_db(d_m: f64, heights: (f64, f64), config: &SystemConfig) -> f64 {
    let scale = match config.distance_unit {
        DistanceUnit::M => 1.0,
        DistanceUnit::Km => 1e-3,
    };
    let (d, d0, d1) = (d_m * scale, config.d0 * scale, config.d1 * scale);
    let l = hata_constant(config.carrier_mhz, heights.0, heights.1);
    if d > d1 {
        -l - 35.0 * d.log10()
    } else if d > d0 {
        -l - 15.0 * d1.log10() - 20.0 * d.log10()
    } else {
        -l - 15.0 * d1.log10() - 20.0 * d0.log10()
    }
}

/// Linear large-scale gain with `offset_db` added, capped at 1.
pub fn large_scale_gain(d_m: f64, heights: (f64, f64), offset_db: f64, config: &SystemConfig) -> f64 {
    db_to_linear(path_loss_db(d_m, heights, config) + offset_db).min(1.0)
}

fn grid_positions(m: usize, side: f64) -> Option<Vec<Point>> {
    let n = (m as f64).sqrt().round() as usize;
    if n * n != m {
        return None;
    }
    let cell = side / n as f64;
    let mut out = Vec::with_capacity(m);
    for i in 0..n {
        for j in 0..n {
            out.push(Point::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell));
        }
    }
    Some(out)
}

/// Lays out APs (grid or uniform), reader at the centre and K tags uniformly
/// at random, then fills in every large-scale gain.
pub fn place_network(config: &SystemConfig, seed: u64) -> Result<NetworkGeometry> {
    let side = config.area_side;
    let mut rng = stream_rng(seed, Stream::Geometry);
    let uniform_point = |rng: &mut rand_chacha::ChaCha8Rng| {
        Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
    };
    let ap_positions = match config.ap_placement {
        ApPlacement::Grid => grid_positions(config.num_aps, side).ok_or_else(|| {
            Error::Config(format!(
                "grid placement needs a square AP count, got M = {}",
                config.num_aps
            ))
        })?,
        ApPlacement::Random => (0..config.num_aps).map(|_| uniform_point(&mut rng)).collect(),
    };
    let tag_positions: Vec<Point> = (0..config.num_tags).map(|_| uniform_point(&mut rng)).collect();
    Ok(with_positions(ap_positions, tag_positions, config))
}

/// Builds the geometry for explicit positions (reader at the area centre).
pub fn with_positions(
    ap_positions: Vec<Point>,
    tag_positions: Vec<Point>,
    config: &SystemConfig,
) -> NetworkGeometry {
    let reader = Point::new(config.area_side / 2.0, config.area_side / 2.0);
    let ap_tag = (config.h_ap, config.h_tag);
    let ap_reader = (config.h_ap, config.h_reader);
    let tag_reader = (config.h_tag, config.h_reader);
    let zeta_h0 = ap_positions
        .iter()
        .map(|a| large_scale_gain(a.distance(&reader), ap_reader, config.reader_offset_db, config))
        .collect();
    let zeta_f = tag_positions
        .iter()
        .map(|t| {
            ap_positions
                .iter()
                .map(|a| large_scale_gain(a.distance(t), ap_tag, config.ap_tag_offset_db, config))
                .collect()
        })
        .collect();
    let zeta_g = tag_positions
        .iter()
        .map(|t| large_scale_gain(t.distance(&reader), tag_reader, config.reader_offset_db, config))
        .collect();
    NetworkGeometry {
        ap_positions,
        tag_positions,
        reader_position: reader,
        zeta_h0,
        zeta_f,
        zeta_g,
    }
}

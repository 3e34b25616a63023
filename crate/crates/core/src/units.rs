//! dB / linear conversions.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Thermal noise power in watts for bandwidth `bandwidth_hz` and noise figure `nf_db`,
/// with a -174 dBm/Hz floor.
pub fn noise_power_watts(bandwidth_hz: f64, nf_db: f64) -> f64 {
    dbm_to_watts(-174.0 + 10.0 * bandwidth_hz.log10() + nf_db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_floor_for_10mhz_10db() {
        // -174 + 70 + 10
        let w = noise_power_watts(10e6, 10.0);
        assert!((watts_to_dbm(w) + 94.0).abs() < 1e-12);
        assert!((w - 10f64.powf(-12.4)).abs() / w < 1e-12);
    }

    #[test]
    fn dbm_roundtrip() {
        for x in [-94.0, -20.0, 0.0, 30.0] {
            assert!((watts_to_dbm(dbm_to_watts(x)) - x).abs() < 1e-12);
        }
        assert_eq!(dbm_to_watts(30.0), 1.0);
    }
}

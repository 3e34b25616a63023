//! Exponential integral.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn e1_series(z: f64) -> f64 {
    // E1(z) = -gamma - ln z - sum_{n>=1} (-z)^n / (n n!)
    let mut sum = 0.0;
    let mut term = 1.0;
    for n in 1..200 {
        term *= -z / n as f64;
        let add = term / n as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Modified Lentz evaluation of e^z E1(z) for z > 1.
fn scaled_e1_cf(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// e^z E1(z) for z > 0, finite for every z and tending to 0 as z grows.
pub fn scaled_e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z.is_infinite() {
        0.0
    } else if z <= 1.0 {
        z.exp() * e1_series(z)
    } else {
        scaled_e1_cf(z)
    }
}

/// Ei(x) = -E1(-x), defined here for x < 0 only.
pub fn exp_integral_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(Error::Domain(format!("Ei is only evaluated at negative arguments, got {x}")));
    }
    let z = -x;
    Ok(if z <= 1.0 { -e1_series(z) } else { -scaled_e1_cf(z) * (-z).exp() })
}

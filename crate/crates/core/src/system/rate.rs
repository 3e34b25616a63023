//! Achievable-rate expressions.

use crate::numerics::special::scaled_e1;

/// Ergodic rate over an exponentially distributed carrier power |s|^2:
/// `psi E{log2(1 + a X / (b X + 1))}`, evaluated in closed form through
/// `e^{1/x} E1(1/x)`. The `a = 0` and `b = 0` limits are exact.
pub fn exact_rate(a: f64, b: f64, psi: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    if a <= 0.0 {
        return 0.0;
    }
    let interf = if b > 0.0 { scaled_e1(1.0 / b) } else { 0.0 };
    psi * std::f64::consts::LOG2_E * (scaled_e1(1.0 / (a + b)) - interf)
}

/// `psi log2(1 + sinr)`: the surrogate the optimizer maximizes.
pub fn rate_bound(sinr: f64, psi: f64) -> f64 {
    psi * sinr.ln_1p() * std::f64::consts::LOG2_E
}

use nalgebra::DVector;

/// Central-difference gradient with per-coordinate step `1e-6 (1 + |x_i|)`.
pub fn finite_diff_grad<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = 1e-6 * (1.0 + x[i].abs());
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn squared_norm() {
        let x = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let g = finite_diff_grad(|v| v.norm_squared(), &x);
        assert!((g - 2.0 * &x).norm() / (2.0 * x.norm()) < 1e-6);
    }

    #[test]
    fn quadratic_form_matches_analytic() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.1, 1.0, -0.3, 0.0, 0.7, 3.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = DVector::from_vec(vec![0.4, 0.1, -0.9]);
        let f = |v: &DVector<f64>| (v.transpose() * &a * v)[(0, 0)] + b.dot(v);
        let want = (&a + a.transpose()) * &x + &b;
        let g = finite_diff_grad(f, &x);
        assert!((g - &want).norm() / want.norm() < 1e-8);
    }
}

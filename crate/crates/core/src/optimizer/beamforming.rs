//! Transmit beamforming: quadratic-transform fractional programming with a
//! linearized harvesting constraint, solved over the effective beam `v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{relative_increment, Problem};
use crate::channel::CMatrix;
use crate::error::{Error, Result};
use crate::numerics::{hermitian_to_real, lift, solve_concave, unlift, ComplexLinearForm, ConcaveProgram, Constraint, LogQuadTerm};

/// `c[k][j]` with `u_k^H H_j v = c[k][j]^T v`.
pub fn combined_channels(problem: &Problem, u: &CMatrix) -> Vec<Vec<DVector<Complex64>>> {
    let csi = problem.csi;
    (0..csi.num_tags())
        .map(|k| {
            let uk = u.column(k).map(|z| z.conj());
            csi.cascaded.iter().map(|h| h.transpose() * &uk).collect()
        })
        .collect()
}

/// Effective noise `||u_k||^2 sigma^2` per tag.
pub fn combiner_noise(problem: &Problem, u: &CMatrix) -> Vec<f64> {
    u.column_iter().map(|c| c.norm_squared() * problem.noise_power).collect()
}

fn interference_plus_noise(coeffs: &[DVector<Complex64>], v: &DVector<Complex64>, k: usize, alpha: &[f64], p_t: f64, noise: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(j, c)| alpha[j] * p_t * c.dot(v).norm_sqr())
        .sum::<f64>()
        + noise
}

/// Auxiliary variables making the quadratic transform tight at `v`:
/// `lambda_k = sqrt(alpha_k p) (c_kk^T v) / (interference + noise)`.
pub fn update_lambda(
    v: &DVector<Complex64>,
    coeffs: &[Vec<DVector<Complex64>>],
    alpha: &[f64],
    p_t: f64,
    noise: &[f64],
) -> Vec<Complex64> {
    (0..alpha.len())
        .map(|k| {
            let den = interference_plus_noise(&coeffs[k], v, k, alpha, p_t, noise[k]);
            coeffs[k][k].dot(v) * ((alpha[k] * p_t).sqrt() / den)
        })
        .collect()
}

/// One tag's concave quadratic `constant + 2 Re{linear^H v} - v^H curvature v`.
#[derive(Debug, Clone)]
pub struct SurrogateTerm {
    pub constant: f64,
    pub linear: DVector<Complex64>,
    pub curvature: DMatrix<Complex64>,
}

/// Quadratic-transform lower bound of the sum rate for fixed `lambda`.
#[derive(Debug, Clone)]
pub struct SurrogateQuadratic {
    pub lambda: Vec<Complex64>,
    pub terms: Vec<SurrogateTerm>,
    pub prelog: f64,
}

impl SurrogateQuadratic {
    pub fn argument(&self, k: usize, v: &DVector<Complex64>) -> f64 {
        let t = &self.terms[k];
        t.constant + 2.0 * t.linear.dotc(v).re - v.dotc(&(&t.curvature * v)).re
    }

    /// `sum_k psi log2(argument_k)`, `-inf` outside the domain.
    pub fn value(&self, v: &DVector<Complex64>) -> f64 {
        let mut total = 0.0;
        for k in 0..self.terms.len() {
            let q = self.argument(k, v);
            if q <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += self.prelog * q.log2();
        }
        total
    }

    pub fn log_terms(&self) -> Vec<LogQuadTerm> {
        self.terms
            .iter()
            .map(|t| LogQuadTerm {
                weight: self.prelog / std::f64::consts::LN_2,
                constant: t.constant,
                linear: ComplexLinearForm::new(&t.linear.map(|z| z.conj())).re * 2.0,
                curvature: Some(hermitian_to_real(&t.curvature)),
            })
            .collect()
    }

    /// Gradient of [`value`](Self::value) in lifted coordinates.
    pub fn gradient(&self, v: &DVector<Complex64>) -> DVector<f64> {
        let x = lift(v);
        let mut g = DVector::zeros(x.len());
        for term in self.log_terms() {
            let q = term.argument(&x);
            let dq = &term.linear - 2.0 * (term.curvature.as_ref().unwrap() * &x);
            g.axpy(term.weight / q, &dq, 1.0);
        }
        g
    }
}

pub fn build_surrogate(
    lambda: &[Complex64],
    coeffs: &[Vec<DVector<Complex64>>],
    alpha: &[f64],
    p_t: f64,
    noise: &[f64],
    prelog: f64,
) -> SurrogateQuadratic {
    let m = coeffs.first().and_then(|c| c.first()).map_or(0, |c| c.len());
    let terms = (0..alpha.len())
        .map(|k| {
            let l2 = lambda[k].norm_sqr();
            let mut curvature = DMatrix::zeros(m, m);
            for (j, c) in coeffs[k].iter().enumerate() {
                if j != k {
                    let cc = c.map(|z| z.conj());
                    curvature.ger(Complex64::from(l2 * p_t * alpha[j]), &cc, c, Complex64::from(1.0));
                }
            }
            SurrogateTerm {
                constant: 1.0 - l2 * noise[k],
                linear: coeffs[k][k].map(|z| z.conj()) * (lambda[k] * (alpha[k] * p_t).sqrt()),
                curvature,
            }
        })
        .collect();
    SurrogateQuadratic { lambda: lambda.to_vec(), terms, prelog }
}

/// First-order model of `|f^T v|^2` around an anchor beam; a global
/// under-estimator since the power is convex in `v`.
#[derive(Debug, Clone)]
pub struct LinearizedPower {
    anchor: Complex64,
    form: ComplexLinearForm,
}

pub fn linearize_eh(v_prev: &DVector<Complex64>, forward: &DVector<Complex64>) -> LinearizedPower {
    LinearizedPower { anchor: forward.dot(v_prev), form: ComplexLinearForm::new(forward) }
}

impl LinearizedPower {
    /// `2 Re{conj(f^T v0) f^T v} - |f^T v0|^2`.
    pub fn value(&self, v: &DVector<Complex64>) -> f64 {
        2.0 * (self.anchor.conj() * self.form.apply(&lift(v))).re - self.anchor.norm_sqr()
    }

    /// Gradient in lifted coordinates.
    pub fn gradient(&self) -> DVector<f64> {
        self.form.real_part_against(self.anchor) * 2.0
    }

    /// `(1 - alpha) p P_lin(v) >= required`, scaled by `required`.
    pub fn constraint(&self, alpha: f64, p_t: f64, required: f64) -> Constraint {
        let c = (1.0 - alpha) * p_t / required;
        Constraint::Affine { normal: self.gradient() * -c, bound: -1.0 - c * self.anchor.norm_sqr() }
    }
}

#[derive(Debug, Clone)]
pub struct BeamformingOutcome {
    pub v: DVector<Complex64>,
    pub objective: f64,
    /// Objective before the first update and after each one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub newton_iters: usize,
}

/// Builds the concave program for one fractional-programming step.
pub fn beamforming_program(problem: &Problem, surrogate: &SurrogateQuadratic, anchor: &DVector<Complex64>, alpha: &[f64]) -> ConcaveProgram {
    let m = problem.num_aps();
    let k = problem.num_tags() as f64;
    let mut constraints: Vec<Constraint> =
        (0..m).map(|i| Constraint::Ball { indices: vec![2 * i, 2 * i + 1], radius_sq: k }).collect();
    if problem.required_power > 0.0 {
        for (kk, &a) in alpha.iter().enumerate() {
            let f = problem.csi.forward.row(kk).transpose();
            constraints.push(linearize_eh(anchor, &f).constraint(a, problem.tx_power, problem.required_power));
        }
    }
    ConcaveProgram { dim: 2 * m, terms: surrogate.log_terms(), linear: None, constraints }
}

/// Alternates the lambda update with the concave beam update until the
/// relative objective gain drops below `eps_inner`. `v0` must satisfy the
/// power and harvesting constraints.
pub fn solve_beamforming(problem: &Problem, v0: &DVector<Complex64>, u: &CMatrix, alpha: &[f64]) -> Result<BeamformingOutcome> {
    if !problem.power_satisfied(v0, 1e-9) || !problem.eh_satisfied(v0, alpha, 1e-9) {
        return Err(Error::Infeasible("beamforming start violates a constraint".into()));
    }
    let coeffs = combined_channels(problem, u);
    let noise = combiner_noise(problem, u);
    let mut v = v0.clone();
    let mut obj = problem.objective(&v, u, alpha);
    let mut trace = vec![obj];
    let mut newton_iters = 0;
    let mut iterations = 0;
    while iterations < problem.max_inner_iters {
        iterations += 1;
        let lambda = update_lambda(&v, &coeffs, alpha, problem.tx_power, &noise);
        let surrogate = build_surrogate(&lambda, &coeffs, alpha, problem.tx_power, &noise, problem.prelog);
        let program = beamforming_program(problem, &surrogate, &v, alpha);
        let sol = solve_concave(&program, &lift(&v), &problem.barrier)?;
        newton_iters += sol.newton_iters;
        let mut cand = unlift(&sol.x);
        // the linearized cut under-estimates the true power, so this only
        // triggers on solver tolerance
        let mut step = 1.0;
        while !problem.eh_satisfied(&cand, alpha, 1e-9) && step > 1e-6 {
            step *= 0.5;
            cand = &v + (unlift(&sol.x) - &v) * Complex64::from(step);
        }
        let new_obj = problem.objective(&cand, u, alpha);
        if !(new_obj >= obj) || !problem.eh_satisfied(&cand, alpha, 1e-9) {
            break;
        }
        let inc = relative_increment(new_obj, obj);
        v = cand;
        obj = new_obj;
        trace.push(obj);
        if inc < problem.eps_inner {
            break;
        }
    }
    Ok(BeamformingOutcome { v, objective: obj, trace, iterations, newton_iters })
}

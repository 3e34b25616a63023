//! Reflection-coefficient block.
//!
//! For fixed beam and combiners every SINR is a ratio of functions affine in
//! `alpha`. The dual-transform chain (mu, theta, then a feasibility LP that
//! pushes every SINR above its current value) can only move to points that
//! improve all tags at once, so once it stalls a minorize-maximize pass over
//! `log(A + B) - log(B)` with the second logarithm linearized finishes the
//! job. Both stages are monotone.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{relative_increment, Problem};
use crate::channel::CMatrix;
use crate::error::{Error, Result};
use crate::numerics::{solve_concave, solve_lp_slack, ConcaveProgram, Constraint, LogQuadTerm, LpSlackProblem, LpStatus};

/// SINR numerators and denominators as affine functions of `alpha`.
#[derive(Debug, Clone)]
pub struct ReflectionTerms {
    /// `p |u_k^H H_k v|^2`
    pub own: Vec<f64>,
    /// `(k, j)` entry `p |u_k^H H_j v|^2`; the diagonal is unused.
    pub cross: DMatrix<f64>,
    /// `||u_k||^2 sigma^2`
    pub noise: Vec<f64>,
}

impl ReflectionTerms {
    pub fn new(problem: &Problem, v: &DVector<Complex64>, u: &CMatrix) -> Self {
        let k = problem.num_tags();
        let responses = problem.csi.tag_responses(v);
        let cross = DMatrix::from_fn(k, k, |a, b| problem.tx_power * u.column(a).dotc(&responses[b]).norm_sqr());
        Self {
            own: (0..k).map(|a| cross[(a, a)]).collect(),
            cross,
            noise: u.column_iter().map(|c| c.norm_squared() * problem.noise_power).collect(),
        }
    }

    pub fn num_tags(&self) -> usize {
        self.own.len()
    }

    pub fn numerator(&self, k: usize, alpha: &[f64]) -> f64 {
        alpha[k] * self.own[k]
    }

    pub fn denominator(&self, k: usize, alpha: &[f64]) -> f64 {
        self.noise[k] + (0..alpha.len()).filter(|&j| j != k).map(|j| alpha[j] * self.cross[(k, j)]).sum::<f64>()
    }

    pub fn sinr(&self, k: usize, alpha: &[f64]) -> f64 {
        self.numerator(k, alpha) / self.denominator(k, alpha)
    }

    pub fn objective(&self, alpha: &[f64], prelog: f64) -> f64 {
        (0..self.num_tags()).map(|k| prelog * self.sinr(k, alpha).ln_1p() / std::f64::consts::LN_2).sum()
    }
}

/// Stationary dual variables `psi B / (A + B)`; reported for diagnostics.
pub fn update_mu(terms: &ReflectionTerms, alpha: &[f64], prelog: f64) -> Vec<f64> {
    (0..terms.num_tags())
        .map(|k| {
            let (a, b) = (terms.numerator(k, alpha), terms.denominator(k, alpha));
            prelog * b / (a + b)
        })
        .collect()
}

/// SINR targets: the current SINRs.
pub fn update_theta(terms: &ReflectionTerms, alpha: &[f64]) -> Vec<f64> {
    (0..terms.num_tags()).map(|k| terms.sinr(k, alpha)).collect()
}

#[derive(Debug, Clone)]
pub struct AlphaStep {
    pub alpha: Vec<f64>,
    /// Smallest SINR-row margin, normalized by each tag's current signal.
    pub slack: f64,
    pub feasible: bool,
}

/// Finds `alpha` in `[lower, upper_k]` with `theta_k B_k(alpha) <= A_k(alpha)`
/// for every tag, maximizing the smallest margin normalized by
/// `A_k(alpha_cur)`. Harvesting limits enter through `upper`.
pub fn solve_alpha_feasibility(
    terms: &ReflectionTerms,
    theta: &[f64],
    alpha_cur: &[f64],
    upper: &[f64],
    lower: f64,
) -> Result<AlphaStep> {
    let k = terms.num_tags();
    let mut lp = LpSlackProblem::new(vec![lower; k], upper.to_vec());
    for kk in 0..k {
        let scale = terms.numerator(kk, alpha_cur);
        if terms.own[kk] <= 0.0 || scale <= 0.0 {
            continue;
        }
        let coeffs = (0..k)
            .map(|j| if j == kk { -terms.own[kk] } else { theta[kk] * terms.cross[(kk, j)] } / scale)
            .collect();
        lp.push(coeffs, -theta[kk] * terms.noise[kk] / scale, 1.0);
    }
    if lp.rows.is_empty() {
        // nobody can be heard; any admissible point will do
        return Ok(AlphaStep { alpha: alpha_cur.to_vec(), slack: 0.0, feasible: true });
    }
    let sol = solve_lp_slack(&lp)?;
    Ok(match sol.status {
        LpStatus::Feasible => AlphaStep { alpha: sol.x, slack: sol.slack, feasible: true },
        LpStatus::Infeasible => AlphaStep { alpha: alpha_cur.to_vec(), slack: f64::NEG_INFINITY, feasible: false },
    })
}

/// One minorize-maximize step from `alpha0`.
fn refine_step(terms: &ReflectionTerms, alpha0: &[f64], upper: &[f64], lower: f64, problem: &Problem) -> Result<Vec<f64>> {
    let k = terms.num_tags();
    let weight = problem.prelog / std::f64::consts::LN_2;
    let mut linear = DVector::zeros(k);
    let mut log_terms = Vec::with_capacity(k);
    for kk in 0..k {
        // log(A_k + B_k) in units of the noise floor
        let n = terms.noise[kk];
        let lin = DVector::from_fn(k, |j, _| if j == kk { terms.own[kk] } else { terms.cross[(kk, j)] } / n);
        log_terms.push(LogQuadTerm { weight, constant: 1.0, linear: lin, curvature: None });
        // -log(B_k) bounded below by its tangent at alpha0
        let b0 = terms.denominator(kk, alpha0);
        for j in (0..k).filter(|&j| j != kk) {
            linear[j] -= weight * terms.cross[(kk, j)] / b0;
        }
    }
    let mut constraints = Vec::with_capacity(2 * k);
    for j in 0..k {
        let e = DVector::from_fn(k, |i, _| if i == j { 1.0 } else { 0.0 });
        constraints.push(Constraint::Affine { normal: e.clone(), bound: upper[j] });
        constraints.push(Constraint::Affine { normal: -e, bound: -lower });
    }
    let program = ConcaveProgram { dim: k, terms: log_terms, linear: Some(linear), constraints };
    let sol = solve_concave(&program, &DVector::from_column_slice(alpha0), &problem.barrier)?;
    Ok(sol.x.iter().enumerate().map(|(j, a)| a.clamp(lower, upper[j])).collect())
}

#[derive(Debug, Clone)]
pub struct ReflectionOutcome {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub mu: Vec<f64>,
    /// Dual-transform iterations.
    pub iterations: usize,
    /// Minorize-maximize iterations after the chain stalled.
    pub refine_iterations: usize,
    pub trace: Vec<f64>,
}

/// Optimizes the reflection coefficients for fixed `v` and `u`, starting from
/// a feasible `alpha0`.
pub fn optimize_reflection(problem: &Problem, v: &DVector<Complex64>, u: &CMatrix, alpha0: &[f64]) -> Result<ReflectionOutcome> {
    let k = problem.num_tags();
    let lower = problem.alpha_min;
    let upper: Vec<f64> = (0..k).map(|kk| problem.alpha_ceiling(kk, v)).collect();
    // the beam block accepts the harvesting cut up to rounding
    if let Some(kk) = upper.iter().position(|&ub| ub < lower - 1e-6) {
        return Err(Error::Infeasible(format!("tag {kk} cannot harvest enough under this beam")));
    }
    let upper: Vec<f64> = upper.into_iter().map(|ub| ub.max(lower)).collect();
    let terms = ReflectionTerms::new(problem, v, u);
    let mut alpha: Vec<f64> = alpha0.iter().enumerate().map(|(j, a)| a.clamp(lower, upper[j])).collect();
    let mut obj = terms.objective(&alpha, problem.prelog);
    let mut trace = vec![obj];
    let mut mu = update_mu(&terms, &alpha, problem.prelog);

    let mut iterations = 0;
    while iterations < problem.max_inner_iters {
        iterations += 1;
        mu = update_mu(&terms, &alpha, problem.prelog);
        let theta = update_theta(&terms, &alpha);
        let step = solve_alpha_feasibility(&terms, &theta, &alpha, &upper, lower)?;
        if !step.feasible {
            break;
        }
        let new_obj = terms.objective(&step.alpha, problem.prelog);
        if !(new_obj >= obj) {
            break;
        }
        let inc = relative_increment(new_obj, obj);
        // the LP may overshoot its bounds by its own tolerance
        alpha = step.alpha.iter().enumerate().map(|(j, a)| a.clamp(lower, upper[j])).collect();
        obj = terms.objective(&alpha, problem.prelog);
        trace.push(obj);
        if step.slack <= 1e-12 || inc < problem.eps_inner {
            break;
        }
    }

    let mut refine_iterations = 0;
    while refine_iterations < problem.max_inner_iters {
        refine_iterations += 1;
        let cand = refine_step(&terms, &alpha, &upper, lower, problem)?;
        let new_obj = terms.objective(&cand, problem.prelog);
        if !(new_obj >= obj) {
            break;
        }
        let inc = relative_increment(new_obj, obj);
        alpha = cand;
        obj = new_obj;
        trace.push(obj);
        if inc < problem.eps_inner {
            break;
        }
    }
    Ok(ReflectionOutcome { alpha, objective: obj, mu, iterations, refine_iterations, trace })
}

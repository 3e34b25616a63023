//! The outer loop: beam, then combiners, then reflection coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::beamforming::{linearize_eh, solve_beamforming};
use super::combiner::{matched_combiner, optimal_combiner};
use super::reflection::optimize_reflection;
use super::{relative_increment, Problem};
use crate::channel::CMatrix;
use crate::config::SystemConfig;
use crate::error::Result;
use crate::numerics::{lift, solve_concave, unlift, ConcaveProgram, Constraint, LogQuadTerm};
use crate::system::{LinkCsi, Solution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub block_iters_w: usize,
    pub block_iters_alpha: usize,
    pub feasible: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AoTrace {
    /// Row 0 is the initial point.
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl AoTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.objective).collect()
    }

    /// Outer iterations performed, not counting the initial point.
    pub fn outer_iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone)]
pub struct AoOutcome {
    pub solution: Solution,
    pub objective: f64,
    pub trace: AoTrace,
    /// False when no beam lets every tag harvest enough; the solution is
    /// then only a placeholder.
    pub feasible: bool,
}

/// Equal-power beam whose phases follow the dominant eigenvector of
/// `sum_k conj(f_k) f_k^T`, maximizing the total power delivered to the tags
/// among co-phased beams. Every AP runs at its full budget.
pub fn co_phased_beam(problem: &Problem) -> DVector<Complex64> {
    let m = problem.num_aps();
    let f = &problem.csi.forward;
    let gram: DMatrix<Complex64> = f.adjoint() * f;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let x = eig.eigenvectors.column(top);
    let amp = (problem.num_tags() as f64).sqrt();
    DVector::from_fn(m, |i, _| {
        let z = x[i];
        if z.norm() > 0.0 { z / z.norm() * amp } else { Complex64::from(amp) }
    })
}

/// Successive linearization that maximizes the smallest ratio
/// `(1 - alpha_k) p |f_k^T v|^2 / required` over the per-AP power set.
/// Returns a beam meeting every harvesting need, or `None`.
pub fn harvesting_feasible_beam(problem: &Problem, v0: &DVector<Complex64>, alpha: &[f64]) -> Result<Option<DVector<Complex64>>> {
    let (m, k) = (problem.num_aps(), problem.num_tags());
    let thresholds: Vec<f64> = alpha.iter().map(|a| problem.required_power / ((1.0 - a) * problem.tx_power)).collect();
    let min_ratio = |v: &DVector<Complex64>| {
        (0..k)
            .map(|kk| problem.csi.forward_gain(kk, v).norm_sqr() / thresholds[kk])
            .fold(f64::INFINITY, f64::min)
    };
    let mut v = v0.clone();
    let mut ratio = min_ratio(&v);
    for _ in 0..60 {
        if ratio >= 1.0 + 1e-6 {
            return Ok(Some(v));
        }
        // variables: lifted v, then the common ratio s
        let dim = 2 * m + 1;
        let mut constraints: Vec<Constraint> =
            (0..m).map(|i| Constraint::Ball { indices: vec![2 * i, 2 * i + 1], radius_sq: k as f64 }).collect();
        for kk in 0..k {
            let f = problem.csi.forward.row(kk).transpose();
            let lin = linearize_eh(&v, &f);
            let anchor = f.dot(&v).norm_sqr();
            let mut normal = DVector::zeros(dim);
            normal.rows_mut(0, 2 * m).copy_from(&(lin.gradient() / -thresholds[kk]));
            normal[2 * m] = 1.0;
            constraints.push(Constraint::Affine { normal, bound: -anchor / thresholds[kk] });
        }
        let mut pick = DVector::zeros(dim);
        pick[2 * m] = 1.0;
        let term = LogQuadTerm { weight: 1.0, constant: 0.0, linear: pick, curvature: None };
        let program = ConcaveProgram { dim, terms: vec![term], linear: None, constraints };
        let mut start = DVector::zeros(dim);
        start.rows_mut(0, 2 * m).copy_from(&lift(&v));
        start[2 * m] = 0.5 * ratio.max(1e-300);
        let sol = solve_concave(&program, &start, &problem.barrier)?;
        let cand = unlift(&sol.x.rows(0, 2 * m).into_owned());
        let new_ratio = min_ratio(&cand);
        if !(new_ratio > ratio * (1.0 + 1e-9)) {
            break;
        }
        v = cand;
        ratio = new_ratio;
    }
    Ok((ratio >= 1.0 + 1e-6).then_some(v))
}

fn placeholder(problem: &Problem, alpha: f64) -> AoOutcome {
    let v = co_phased_beam(problem);
    let u = matched_combiner(problem.csi, &v);
    let alpha = vec![alpha; problem.num_tags()];
    let objective = problem.objective(&v, &u, &alpha);
    AoOutcome {
        solution: Solution::from_effective_beam(&v, u, alpha),
        objective,
        trace: AoTrace { rows: vec![TraceRow { iter: 0, objective, block_iters_w: 0, block_iters_alpha: 0, feasible: false }], converged: false },
        feasible: false,
    }
}

/// Outer-loop settings.
#[derive(Debug, Clone, Copy)]
pub struct AoSettings {
    pub eps_outer: f64,
    pub max_outer_iters: usize,
    /// Starting reflection coefficient, or the fixed one.
    pub alpha_start: f64,
    pub optimize_alpha: bool,
}

impl AoSettings {
    pub fn from_config(config: &SystemConfig, optimize_alpha: bool) -> Self {
        Self {
            eps_outer: config.eps_outer,
            max_outer_iters: config.max_outer_iters,
            alpha_start: config.alpha_fixed,
            optimize_alpha,
        }
    }
}

pub fn run_ao(problem: &Problem, settings: &AoSettings) -> Result<AoOutcome> {
    let k = problem.num_tags();
    let mut v = co_phased_beam(problem);
    // harvesting must be possible at the coefficients we will start from
    let alpha_need = if settings.optimize_alpha { problem.alpha_min } else { settings.alpha_start };
    if problem.required_power > 0.0 && !problem.eh_satisfied(&v, &vec![alpha_need; k], 0.0) {
        match harvesting_feasible_beam(problem, &v, &vec![alpha_need; k])? {
            Some(found) => v = found,
            None => return Ok(placeholder(problem, settings.alpha_start)),
        }
    }
    let alpha: Vec<f64> = if settings.optimize_alpha {
        (0..k).map(|kk| settings.alpha_start.min(problem.alpha_ceiling(kk, &v)).max(problem.alpha_min)).collect()
    } else {
        vec![settings.alpha_start; k]
    };
    let u = matched_combiner(problem.csi, &v);
    outer_loop(problem, v, u, alpha, settings, !settings.optimize_alpha)
}

/// Continues the outer loop from an existing feasible point. With
/// `optimize_alpha` false the coefficients of `start` stay fixed.
pub fn run_ao_from(problem: &Problem, start: &Solution, settings: &AoSettings) -> Result<AoOutcome> {
    let v = start.effective_beam();
    if !problem.power_satisfied(&v, 1e-9) || !problem.eh_satisfied(&v, &start.alpha, 1e-9) {
        return Err(crate::error::Error::Infeasible("starting point violates a constraint".into()));
    }
    outer_loop(problem, v, start.u.clone(), start.alpha.clone(), settings, true)
}

fn outer_loop(
    problem: &Problem,
    mut v: DVector<Complex64>,
    mut u: CMatrix,
    mut alpha: Vec<f64>,
    settings: &AoSettings,
    mut alpha_on: bool,
) -> Result<AoOutcome> {
    let mut obj = problem.objective(&v, &u, &alpha);
    let mut rows = vec![TraceRow { iter: 0, objective: obj, block_iters_w: 0, block_iters_alpha: 0, feasible: true }];
    let mut converged = false;
    // Beam and combiners settle at the starting coefficients before the
    // reflection block joins. Letting it in at once pushes every coefficient
    // to its harvesting ceiling, which pins the beam to the cut it started on.
    let mut iter = 0;
    while iter < settings.max_outer_iters {
        iter += 1;
        let bf = solve_beamforming(problem, &v, &u, &alpha)?;
        v = bf.v;
        u = optimal_combiner(problem.csi, &v, &alpha, problem.tx_power, problem.noise_power)?;
        let mut alpha_iters = 0;
        if settings.optimize_alpha && alpha_on {
            let refl = optimize_reflection(problem, &v, &u, &alpha)?;
            alpha = refl.alpha;
            alpha_iters = refl.iterations + refl.refine_iterations;
        }
        let new_obj = problem.objective(&v, &u, &alpha);
        rows.push(TraceRow { iter, objective: new_obj, block_iters_w: bf.iterations, block_iters_alpha: alpha_iters, feasible: true });
        let inc = relative_increment(new_obj, obj);
        obj = new_obj;
        if inc < settings.eps_outer {
            if alpha_on || !settings.optimize_alpha {
                converged = true;
                break;
            }
            alpha_on = true;
        }
    }
    Ok(AoOutcome {
        solution: Solution::from_effective_beam(&v, u, alpha),
        objective: obj,
        trace: AoTrace { rows, converged },
        feasible: true,
    })
}

/// Jointly optimizes beam, combiners and reflection coefficients on `csi`.
pub fn alternating_optimization(csi: &LinkCsi, config: &SystemConfig) -> Result<AoOutcome> {
    let problem = Problem::new(csi, config)?;
    run_ao(&problem, &AoSettings::from_config(config, true))
}

/// Same loop with every reflection coefficient pinned to `alpha`.
pub fn alternating_optimization_fixed_alpha(csi: &LinkCsi, config: &SystemConfig, alpha: f64) -> Result<AoOutcome> {
    let problem = Problem::new(csi, config)?;
    let settings = AoSettings { alpha_start: alpha, ..AoSettings::from_config(config, false) };
    run_ao(&problem, &settings)
}

//! Log-barrier interior point method for small dense programs of the form
//!
//! ```text
//! maximize   sum_k w_k ln(c_k + l_k . x - x^T Q_k x)
//! subject to convex quadratic, ball and affine inequalities
//! ```
//!
//! with `w_k > 0` and every `Q_k` positive semidefinite, so the objective is
//! concave on its domain. Each constraint is relaxed by a tiny tolerance
//! (a fraction of `feas_tol`) so that starts lying exactly on the boundary are
//! still usable; the returned point satisfies every constraint to `feas_tol`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LogQuadTerm {
    pub weight: f64,
    pub constant: f64,
    pub linear: DVector<f64>,
    /// `None` means a purely affine argument.
    pub curvature: Option<DMatrix<f64>>,
}

impl LogQuadTerm {
    pub fn argument(&self, x: &DVector<f64>) -> f64 {
        let quad = self.curvature.as_ref().map_or(0.0, |q| (x.transpose() * q * x)[(0, 0)]);
        self.constant + self.linear.dot(x) - quad
    }

    fn gradient_of_argument(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.curvature {
            Some(q) => &self.linear - 2.0 * (q * x),
            None => self.linear.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Constraint {
    /// `sum_{i in indices} x_i^2 <= radius_sq`
    Ball { indices: Vec<usize>, radius_sq: f64 },
    /// `normal . x <= bound`
    Affine { normal: DVector<f64>, bound: f64 },
    /// `x^T curvature x + linear . x + constant <= 0`, curvature PSD.
    Quadratic { curvature: DMatrix<f64>, linear: DVector<f64>, constant: f64 },
}

impl Constraint {
    /// Signed violation g(x); feasible when <= 0.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            Constraint::Ball { indices, radius_sq } => {
                indices.iter().map(|&i| x[i] * x[i]).sum::<f64>() - radius_sq
            }
            Constraint::Affine { normal, bound } => normal.dot(x) - bound,
            Constraint::Quadratic { curvature, linear, constant } => {
                (x.transpose() * curvature * x)[(0, 0)] + linear.dot(x) + constant
            }
        }
    }

    /// Scale against which feasibility is judged.
    fn scale(&self) -> f64 {
        match self {
            Constraint::Ball { radius_sq, .. } => radius_sq.abs().max(1e-300),
            Constraint::Affine { bound, .. } => bound.abs().max(1.0),
            Constraint::Quadratic { constant, .. } => constant.abs().max(1.0),
        }
    }

    /// Adds the gradient and Hessian of `-ln(slack)` where `slack = tol - g(x)`.
    fn add_barrier(&self, x: &DVector<f64>, slack: f64, grad: &mut DVector<f64>, hess: &mut DMatrix<f64>) {
        let inv = 1.0 / slack;
        match self {
            Constraint::Ball { indices, .. } => {
                for &i in indices {
                    grad[i] += 2.0 * x[i] * inv;
                    hess[(i, i)] += 2.0 * inv;
                    for &j in indices {
                        hess[(i, j)] += 4.0 * x[i] * x[j] * inv * inv;
                    }
                }
            }
            Constraint::Affine { normal, .. } => {
                grad.axpy(inv, normal, 1.0);
                hess.ger(inv * inv, normal, normal, 1.0);
            }
            Constraint::Quadratic { curvature, linear, .. } => {
                let g = 2.0 * (curvature * x) + linear;
                grad.axpy(inv, &g, 1.0);
                *hess += curvature * (2.0 * inv);
                hess.ger(inv * inv, &g, &g, 1.0);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConcaveProgram {
    pub dim: usize,
    pub terms: Vec<LogQuadTerm>,
    /// Optional affine part `linear . x` of the objective.
    pub linear: Option<DVector<f64>>,
    pub constraints: Vec<Constraint>,
}

impl ConcaveProgram {
    /// Objective value, or -inf outside the domain of some logarithm.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let mut total = self.linear.as_ref().map_or(0.0, |l| l.dot(x));
        for t in &self.terms {
            let a = t.argument(x);
            if a <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += t.weight * a.ln();
        }
        total
    }

    /// Largest relative constraint violation (<= 0 when strictly feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x) / c.scale())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.dim;
        if self.linear.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::Dimension("linear objective does not match program dimension".into()));
        }
        for t in &self.terms {
            if t.linear.len() != n || t.curvature.as_ref().is_some_and(|q| q.shape() != (n, n)) {
                return Err(Error::Dimension("objective term does not match program dimension".into()));
            }
            if !(t.weight > 0.0) {
                return Err(Error::Domain("objective weights must be positive".into()));
            }
        }
        for c in &self.constraints {
            let ok = match c {
                Constraint::Ball { indices, .. } => indices.iter().all(|&i| i < n),
                Constraint::Affine { normal, .. } => normal.len() == n,
                Constraint::Quadratic { curvature, linear, .. } => {
                    curvature.shape() == (n, n) && linear.len() == n
                }
            };
            if !ok {
                return Err(Error::Dimension("constraint does not match program dimension".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Stop once the duality-gap bound m/t falls below this.
    pub gap_tol: f64,
    /// Centering stops when half the squared Newton decrement is below this
    /// times `1 + |barrier value|`.
    pub newton_tol: f64,
    pub mu: f64,
    pub t0: f64,
    pub max_newton: usize,
    pub feas_tol: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, newton_tol: 1e-10, mu: 20.0, t0: 1.0, max_newton: 600, feas_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCap,
}

#[derive(Debug, Clone)]
pub struct ConcaveSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub newton_iters: usize,
    /// Final duality-gap bound m/t.
    pub gap: f64,
}

struct Barrier<'a> {
    program: &'a ConcaveProgram,
    tols: Vec<f64>,
}

impl Barrier<'_> {
    /// `-t f(x) - sum ln(tol_i - g_i(x))`, or +inf outside the domain.
    fn value(&self, x: &DVector<f64>, t: f64) -> f64 {
        let f = self.program.objective(x);
        if f == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        let mut phi = -t * f;
        for (c, tol) in self.program.constraints.iter().zip(&self.tols) {
            let s = tol - c.value(x);
            if s <= 0.0 {
                return f64::INFINITY;
            }
            phi -= s.ln();
        }
        phi
    }

    fn derivatives(&self, x: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.program.dim;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for term in &self.program.terms {
            let p = term.argument(x);
            let dp = term.gradient_of_argument(x);
            let scale = t * term.weight / p;
            grad.axpy(-scale, &dp, 1.0);
            hess.ger(scale / p, &dp, &dp, 1.0);
            if let Some(q) = &term.curvature {
                hess += q * (2.0 * scale);
            }
        }
        if let Some(l) = &self.program.linear {
            grad.axpy(-t, l, 1.0);
        }
        for (c, tol) in self.program.constraints.iter().zip(&self.tols) {
            c.add_barrier(x, tol - c.value(x), &mut grad, &mut hess);
        }
        (grad, hess)
    }
}

fn newton_direction(hess: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let diag_max = hess.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut h = hess.clone();
        if reg > 0.0 {
            for i in 0..h.nrows() {
                h[(i, i)] += reg;
            }
        }
        if let Some(ch) = Cholesky::new(h) {
            let d = -ch.solve(grad);
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        reg = if reg == 0.0 { 1e-12 * diag_max } else { reg * 100.0 };
    }
    None
}

/// Maximizes `program` from a start satisfying every constraint.
pub fn solve_concave(program: &ConcaveProgram, start: &DVector<f64>, opts: &BarrierOptions) -> Result<ConcaveSolution> {
    program.check_shapes()?;
    if start.len() != program.dim {
        return Err(Error::Dimension(format!("start has length {}, program dimension {}", start.len(), program.dim)));
    }
    // a start violating a constraint by less than feas_tol is accepted; that
    // constraint is then only held to the start's own level
    let mut tols = Vec::with_capacity(program.constraints.len());
    for c in &program.constraints {
        let (g, scale) = (c.value(start), c.scale());
        if !(g < opts.feas_tol * scale) {
            return Err(Error::Infeasible("start point is outside the feasible set".into()));
        }
        tols.push((0.1 * opts.feas_tol * scale).max(0.5 * (g + opts.feas_tol * scale)));
    }
    let barrier = Barrier { program, tols };
    if barrier.value(start, 1.0).is_infinite() {
        return Err(Error::Infeasible("start point is outside the objective's domain".into()));
    }

    let m = program.constraints.len() as f64;
    let mut x = start.clone();
    let mut t = opts.t0;
    let mut iters = 0;
    loop {
        // centering
        let mut capped = false;
        loop {
            if iters >= opts.max_newton {
                capped = true;
                break;
            }
            let (grad, hess) = barrier.derivatives(&x, t);
            let Some(dir) = newton_direction(hess, &grad) else { break };
            let slope = grad.dot(&dir);
            // the decrement is judged against the barrier's own magnitude;
            // at large t rounding in phi alone exceeds any absolute tolerance
            let phi = barrier.value(&x, t);
            if -slope / 2.0 <= opts.newton_tol * (1.0 + phi.abs()) {
                // one undamped polishing step; Newton is quadratic here
                let cand = &x + &dir;
                if barrier.value(&cand, t) <= barrier.value(&x, t) {
                    x = cand;
                }
                break;
            }
            iters += 1;
            let f0 = phi;
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let cand = &x + &dir * step;
                let fc = barrier.value(&cand, t);
                if fc.is_finite() && fc <= f0 + 0.25 * step * slope {
                    x = cand;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        let gap = if m == 0.0 { 0.0 } else { m / t };
        if capped || gap < opts.gap_tol {
            return Ok(ConcaveSolution {
                objective: program.objective(&x),
                x,
                status: if capped && gap >= opts.gap_tol { SolveStatus::IterationCap } else { SolveStatus::Converged },
                newton_iters: iters,
                gap,
            });
        }
        t *= opts.mu;
    }
}

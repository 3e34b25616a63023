//! Slack-maximizing feasibility LP.
//!
//! Finds `x` in a box satisfying `coeffs_i . x + weight_i * s <= rhs_i` for the
//! largest common slack `s`. Rows with zero weight are hard constraints. When
//! `box_weight` is set the box bounds take part in the slack as well.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SlackRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct LpSlackProblem {
    pub rows: Vec<SlackRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub box_weight: Option<f64>,
    /// Upper cap on the slack variable.
    pub max_slack: f64,
}

impl LpSlackProblem {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { rows: Vec::new(), lower, upper, box_weight: None, max_slack: 1e6 }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, rhs: f64, weight: f64) {
        self.rows.push(SlackRow { coeffs, rhs, weight });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct LpSlackSolution {
    pub x: Vec<f64>,
    pub slack: f64,
    pub status: LpStatus,
}

/// Slack below this counts as zero.
const SLACK_TOL: f64 = 1e-12;

pub fn solve_lp_slack(problem: &LpSlackProblem) -> Result<LpSlackSolution> {
    let n = problem.lower.len();
    if problem.upper.len() != n || problem.rows.iter().any(|r| r.coeffs.len() != n) {
        return Err(Error::Dimension("LP rows and bounds disagree on the variable count".into()));
    }
    let infeasible = || LpSlackSolution { x: problem.lower.clone(), slack: f64::NEG_INFINITY, status: LpStatus::Infeasible };
    if problem.lower.iter().zip(&problem.upper).any(|(l, u)| l > u) {
        return Ok(infeasible());
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = problem
        .lower
        .iter()
        .zip(&problem.upper)
        .map(|(&l, &u)| lp.add_var(0.0, (l, u)))
        .collect();
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, problem.max_slack));
    for row in &problem.rows {
        let mut expr: Vec<_> = vars.iter().copied().zip(row.coeffs.iter().copied()).filter(|(_, c)| *c != 0.0).collect();
        if row.weight != 0.0 {
            expr.push((s, row.weight));
        }
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, row.rhs);
    }
    if let Some(w) = problem.box_weight {
        for (i, &v) in vars.iter().enumerate() {
            lp.add_constraint(&[(v, 1.0), (s, w)][..], ComparisonOp::Le, problem.upper[i]);
            lp.add_constraint(&[(v, 1.0), (s, -w)][..], ComparisonOp::Ge, problem.lower[i]);
        }
    }
    match lp.solve() {
        Ok(sol) => {
            let slack = sol[s];
            let x = vars
                .iter()
                .enumerate()
                .map(|(i, v)| sol[*v].clamp(problem.lower[i], problem.upper[i]))
                .collect();
            let status = if slack >= -SLACK_TOL { LpStatus::Feasible } else { LpStatus::Infeasible };
            Ok(LpSlackSolution { x, slack, status })
        }
        Err(minilp::Error::Infeasible) => Ok(infeasible()),
        Err(minilp::Error::Unbounded) => Err(Error::Domain("slack LP is unbounded".into())),
    }
}

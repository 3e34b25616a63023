//! Numeric kernels shared by the estimators and the optimizer.
//!
//! Complex quantities enter the real-valued solvers through [`lift`]: a complex
//! vector `z` of length n becomes the real vector
//! `[re z_0, im z_0, re z_1, im z_1, ...]` of length 2n.

pub mod concave;
pub mod fd;
pub mod linalg;
pub mod lp;
pub mod special;

pub use concave::{solve_concave, BarrierOptions, ConcaveProgram, ConcaveSolution, Constraint, LogQuadTerm, SolveStatus};
pub use fd::finite_diff_grad;
pub use linalg::{hermitian_rank1_solve, hermitian_to_real, lift, unlift, ComplexLinearForm};
pub use lp::{solve_lp_slack, LpSlackProblem, LpSlackSolution, LpStatus, SlackRow};
pub use special::{exp_integral_ei, scaled_e1};

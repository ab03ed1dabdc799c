//! Solution pairs `(λ, u)` for fourth-order retarded equations
//!
//! ```text
//! u''''(t) + λ F(t, u_t) = 0,  t ∈ [0, 1],
//! u(t) = ψ(t),                 t ∈ [-r, 0],
//! u^(j)(1) = λ B[u],           j ∈ {0, 1, 2, 3},
//! ```
//!
//! rewritten as `u = ψ̂ + λ𝓕u`, where `ψ̂` extends the history datum past `0`
//! and `𝓕` is a Hammerstein integral operator with a perturbation from `B`.
//! For each radius `ρ` the solver returns a pair with `‖u - ψ̂‖_{[0,1],2} = ρ`;
//! the [`oracle`] module re-checks pairs without touching the Green's kernels.

pub mod cli;
pub mod error;
pub mod funcspace;
pub mod kernels;
pub mod operator;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use funcspace::{c2_norm, cone_check, state_view, ConeReport, Grid, GridFunction, HistoryView, Interval};
pub use kernels::{kernel_row_integral, make_kernel_set, BcKind, KernelSet};
pub use operator::{apply, operator_norm_lower_bound, HammersteinOperator, OperatorOutput, QuadratureSpec};
pub use oracle::{reintegrate, verify, VerificationReport};
pub use problem::{
    build_psihat, eval_boundary_functional, eval_rhs, make_preset, BoundaryFunctional, HistoryDatum,
    LowerBounds, PresetParams, ProblemSpec, RightHandSide,
};
pub use solver::{check_feasibility, solve_at_rho, sweep_rho, SolutionPair, Solver, SolverOptions};

/// CSV number format: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

//! Solution pairs `(λ, u)` with `u = ψ̂ + λ𝓕u` on the sphere `‖u - ψ̂‖_{[0,1],2} = ρ`.
//!
//! The unknown is the shift `w = u - ψ̂`, kept on the sphere at every step by
//! a damped, normalized Picard iteration:
//!
//! ```text
//! v   = 𝓕(ψ̂ + w)
//! λ   = ρ / ‖v‖
//! mix = (1 - ω) w + ω λ v
//! w  ← ρ mix / ‖mix‖
//! ```
//!
//! A fixed point satisfies `w = λ v`, i.e. `u = ψ̂ + λ𝓕u` with `‖w‖ = ρ`.

use crate::error::{Error, Result};
use crate::funcspace::{cone_check, ConeReport, GridFunction, Interval};
use crate::kernels::{make_kernel_set, KernelSet};
use crate::operator::{operator_norm_lower_bound, HammersteinOperator, QuadratureSpec};
use crate::problem::{build_psihat, ProblemSpec};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

/// Change ratio above which a step counts as non-contracting.
const STALL_RATIO: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub n: usize,
    pub quad: QuadratureSpec,
    pub tol_fix: f64,
    pub tol_res: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub min_damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n: 256,
            quad: QuadratureSpec::default(),
            tol_fix: 1e-10,
            tol_res: 1e-8,
            max_iter: 500,
            damping: 1.0,
            min_damping: 1.0 / 16.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        self.quad.validate()?;
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if self.n < 16 {
            return bad(format!("n must be >= 16 (got {})", self.n));
        }
        if !(self.tol_fix > 0.0 && self.tol_res > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1] (got {})", self.damping));
        }
        if !(self.min_damping > 0.0 && self.min_damping <= self.damping) {
            return bad("min_damping must lie in (0, damping]".into());
        }
        Ok(())
    }

    /// Doubles the grid and the quadrature panel count.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n * 2,
            quad: self.quad.refined(),
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolutionPair {
    pub lambda: f64,
    pub rho: f64,
    pub u: GridFunction,
    /// `‖w - λ𝓕(ψ̂ + w)‖_{[0,1],2}`
    pub residual: f64,
    pub iterations: usize,
    /// Cone diagnostics of the shift `w = u - ψ̂`.
    pub cone: ConeReport,
    /// `‖u - ψ̂‖_{[0,1],2}`
    pub norm_check: f64,
    /// `min u` over `[-r, 1]`.
    pub min_u: f64,
    pub b_value: f64,
}

/// `sup_t { γ₃(t) η + ∫ k(t, s) δ(s) ds }`; positive means the radius is admissible.
pub fn check_feasibility(
    delta: impl Fn(f64) -> f64 + Sync,
    eta: f64,
    ks: &KernelSet,
    opts: &SolverOptions,
) -> Result<f64> {
    let grid = crate::funcspace::Grid::new(opts.n, 1.0)?;
    Ok(operator_norm_lower_bound(ks, delta, eta, &grid, &opts.quad))
}

/// Feasibility value from the problem's own lower bounds, if it has any.
pub fn problem_feasibility(spec: &ProblemSpec, rho: f64, opts: &SolverOptions) -> Result<Option<f64>> {
    let ks = make_kernel_set(spec.bc);
    spec.lower_bounds(rho)
        .map(|b| check_feasibility(|t| (b.delta)(t), b.eta, &ks, opts))
        .transpose()
}

/// Bound to one problem and discretization; reused across radii.
pub struct Solver<'a> {
    spec: &'a ProblemSpec,
    opts: SolverOptions,
    op: HammersteinOperator<'a>,
    psihat: GridFunction,
}

impl<'a> Solver<'a> {
    pub fn new(spec: &'a ProblemSpec, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let grid = spec.grid(opts.n)?;
        let ks = make_kernel_set(spec.bc);
        Ok(Self {
            spec,
            opts,
            op: HammersteinOperator::new(spec, ks, grid, opts.quad),
            psihat: build_psihat(&spec.psi, &ks, grid),
        })
    }

    pub fn psihat(&self) -> &GridFunction {
        &self.psihat
    }

    pub fn operator(&self) -> &HammersteinOperator<'a> {
        &self.op
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    fn image(&self, w: &GridFunction, iteration: usize) -> Result<(GridFunction, f64, f64)> {
        let out = self.op.apply(&self.psihat.add(w))?;
        let norm = out.g.c2_norm(Interval::Main);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::DegenerateOperator { iteration });
        }
        Ok((out.g, norm, out.b_value))
    }

    /// Solves at radius `rho`, optionally starting from a previous shift.
    pub fn solve(&self, rho: f64, start: Option<&GridFunction>) -> Result<SolutionPair> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidOptions(format!("rho must be positive (got {rho})")));
        }
        if let Some(value) = problem_feasibility(self.spec, rho, &self.opts)? {
            if value <= 0.0 {
                warn!("feasibility value {value} <= 0 at rho = {rho}");
            }
        }
        let opts = &self.opts;
        let mut w = match start {
            Some(w0) if w0.c2_norm(Interval::Main) > 0.0 => {
                w0.scaled(rho / w0.c2_norm(Interval::Main))
            }
            _ => {
                let (v, norm, _) = self.image(&GridFunction::zeros(*self.op.grid()), 0)?;
                v.scaled(rho / norm)
            }
        };
        let mut omega = opts.damping;
        let mut last_change = f64::INFINITY;
        let mut rising = 0;
        let mut residual = f64::INFINITY;
        for it in 1..=opts.max_iter {
            let (v, norm, b_value) = self.image(&w, it)?;
            let lambda = rho / norm;
            let target = v.scaled(lambda);
            residual = w.sub(&target).c2_norm(Interval::Main);
            let mix = w.lin_comb(1.0 - omega, &target, omega);
            let mix_norm = mix.c2_norm(Interval::Main);
            if !(mix_norm.is_finite() && mix_norm > 0.0) {
                return Err(Error::DegenerateOperator { iteration: it });
            }
            let next = mix.scaled(rho / mix_norm);
            let change = next.sub(&w).c2_norm(Interval::Main);
            debug!("rho={rho} it={it} lambda={lambda:e} residual={residual:e} change={change:e} omega={omega}");
            if change <= opts.tol_fix * rho && residual <= opts.tol_res * rho {
                return Ok(self.finish(rho, lambda, w, residual, it, b_value));
            }
            // a step that fails to contract counts toward a damping cut;
            // flat 2-cycles never show a rising change
            if change > STALL_RATIO * last_change {
                rising += 1;
                if rising >= 3 && omega > opts.min_damping {
                    omega = (omega * 0.5).max(opts.min_damping);
                    rising = 0;
                    debug!("oscillation detected; damping reduced to {omega}");
                }
            } else {
                rising = 0;
            }
            last_change = change;
            w = next;
        }
        Err(Error::NonConvergence {
            iterations: opts.max_iter,
            residual,
            change: last_change,
        })
    }

    fn finish(
        &self,
        rho: f64,
        lambda: f64,
        w: GridFunction,
        residual: f64,
        iterations: usize,
        b_value: f64,
    ) -> SolutionPair {
        let cone = cone_check(&w, 1e-10);
        let norm_check = w.c2_norm(Interval::Main);
        let u = self.psihat.add(&w);
        let min_u = u.track(0).iter().copied().fold(f64::INFINITY, f64::min);
        SolutionPair {
            lambda,
            rho,
            u,
            residual,
            iterations,
            cone,
            norm_check,
            min_u,
            b_value,
        }
    }

    /// Radii are solved in order; each converged shift, rescaled, seeds the next.
    pub fn sweep(&self, rhos: &[f64]) -> Vec<Result<SolutionPair>> {
        let mut out = Vec::with_capacity(rhos.len());
        let mut seed: Option<GridFunction> = None;
        for &rho in rhos {
            let res = self.solve(rho, seed.as_ref());
            if let Ok(pair) = &res {
                seed = Some(pair.u.sub(&self.psihat));
            }
            out.push(res);
        }
        out
    }
}

pub fn solve_at_rho(spec: &ProblemSpec, rho: f64, opts: &SolverOptions) -> Result<SolutionPair> {
    Solver::new(spec, *opts)?.solve(rho, None)
}

/// Per-radius results; failures do not stop the sweep.
pub fn sweep_rho(spec: &ProblemSpec, rhos: &[f64], opts: &SolverOptions) -> Result<Vec<Result<SolutionPair>>> {
    Ok(Solver::new(spec, *opts)?.sweep(rhos))
}

/// `count` radii spaced logarithmically over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                if k == count - 1 {
                    hi
                } else {
                    lo * (hi / lo).powf(k as f64 / (count - 1) as f64)
                }
            })
            .collect(),
    }
}

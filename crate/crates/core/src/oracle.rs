//! Independent check of a candidate pair `(λ, u)`.
//!
//! The right-hand side is frozen at the candidate, `g(t) = -λ F(t, u_t)`, and
//! `u'''' = g` is integrated four times by cumulative Simpson:
//!
//! ```text
//! u_or(t) = ψ(0) + ψ'(0) t + ψ''(0) t²/2 + c t³/6 + I⁴g(t)
//! ```
//!
//! The single unknown `c = u'''(0)` is fixed by the functional condition
//! `u_or⁽ʲ⁾(1) = λ B[u]`. Nothing here touches the Green's kernels.

use crate::error::Result;
use crate::funcspace::GridFunction;
use crate::problem::{eval_boundary_functional, eval_rhs, ProblemSpec};
use crate::solver::SolutionPair;

/// Samples of `g` per grid cell. The candidate is evaluated between nodes
/// through its own interpolant.
pub const SUBSTEPS: usize = 4;

#[derive(Clone, Debug)]
pub struct Reintegration {
    /// Value and two derivative tracks of the re-integrated function.
    pub u: GridFunction,
    /// `u_or'''(0)`
    pub c: f64,
    /// `u_or'''(1) = c + ∫₀¹ g`
    pub third_at_one: f64,
    /// `∫₀¹ s g(s) ds`
    pub moment: f64,
    pub b_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerificationReport {
    /// `sup |u_or - u|` over the main nodes.
    pub max_deviation: f64,
    /// `|u⁽ʲ⁾(1) - λ B[u]|` for the candidate.
    pub bc_residual: f64,
    /// `|u⁽ᵈ⁾(0) - ψ⁽ᵈ⁾(0)|` for `d = 0, 1, 2`.
    pub ic_residuals: [f64; 3],
    pub rhs_sign_ok: bool,
    /// `min u_or` over `[0, 1]`.
    pub oracle_min: f64,
}

impl VerificationReport {
    fn failed() -> Self {
        Self {
            max_deviation: f64::INFINITY,
            bc_residual: f64::INFINITY,
            ic_residuals: [f64::INFINITY; 3],
            rhs_sign_ok: false,
            oracle_min: f64::NAN,
        }
    }
}

/// Cumulative Simpson: `out[k] ≈ ∫ from node 0 to node k`. Even nodes use
/// composite Simpson, odd nodes add one cell by a four-point cubic fit.
pub fn cumulative_simpson(f: &[f64], h: f64) -> Vec<f64> {
    let len = f.len();
    let mut out = vec![0.0; len];
    if len < 2 {
        return out;
    }
    if len == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for k in 1..len {
        out[k] = if k % 2 == 0 {
            out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k])
        } else if k + 2 < len {
            out[k - 1] + h / 24.0 * (9.0 * f[k - 1] + 19.0 * f[k] - 5.0 * f[k + 1] + f[k + 2])
        } else if k >= 3 {
            out[k - 1] + h / 24.0 * (f[k - 3] - 5.0 * f[k - 2] + 19.0 * f[k - 1] + 9.0 * f[k])
        } else if k + 1 < len {
            out[k - 1] + h / 12.0 * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1])
        } else {
            out[k - 1] + h / 12.0 * (-f[k - 2] + 8.0 * f[k - 1] + 5.0 * f[k])
        };
    }
    out
}

/// Re-integrates the equation with `F` frozen at the candidate `u`.
pub fn reintegrate(spec: &ProblemSpec, lambda: f64, u: &GridFunction) -> Result<Reintegration> {
    reintegrate_with(spec, lambda, u, SUBSTEPS)
}

/// As [`reintegrate`], with `g` sampled `sub` times per grid cell.
pub fn reintegrate_with(spec: &ProblemSpec, lambda: f64, u: &GridFunction, sub: usize) -> Result<Reintegration> {
    let sub = sub.max(1);
    let grid = *u.grid();
    let z = grid.zero_index();
    let h = grid.h() / sub as f64;
    let ts: Vec<f64> = (0..=grid.n() * sub).map(|k| k as f64 * h).collect();
    let g = ts
        .iter()
        .map(|&t| eval_rhs(spec, u, t).map(|f| -lambda * f))
        .collect::<Result<Vec<f64>>>()?;
    let i1 = cumulative_simpson(&g, h);
    let i2 = cumulative_simpson(&i1, h);
    let i3 = cumulative_simpson(&i2, h);
    let i4 = cumulative_simpson(&i3, h);
    let last = ts.len() - 1;

    let [p0, p1, p2] = spec.psi.data_at_zero();
    let b_value = eval_boundary_functional(spec, u)?;
    let target = lambda * b_value;
    // j-th derivative at 1 of: Taylor part, t³/6, and the fixed integral part
    let (taylor, cube, fixed) = match spec.bc.order() {
        0 => (p0 + p1 + 0.5 * p2, 1.0 / 6.0, i4[last]),
        1 => (p1 + p2, 0.5, i3[last]),
        2 => (p2, 1.0, i2[last]),
        _ => (0.0, 1.0, i1[last]),
    };
    let c = (target - taylor - fixed) / cube;

    let mut out = GridFunction::zeros(grid);
    for i in 0..z {
        let t = grid.t(i);
        for d in 0..3 {
            out.track_mut(d)[i] = spec.psi.eval(t, d);
        }
    }
    for (k, &t) in ts.iter().enumerate().step_by(sub) {
        let i = z + k / sub;
        out.track_mut(0)[i] = p0 + p1 * t + 0.5 * p2 * t * t + c * t * t * t / 6.0 + i4[k];
        out.track_mut(1)[i] = p1 + p2 * t + 0.5 * c * t * t + i3[k];
        out.track_mut(2)[i] = p2 + c * t + i2[k];
    }
    Ok(Reintegration {
        u: out,
        c,
        third_at_one: c + i1[last],
        moment: i1[last] - i2[last],
        b_value,
    })
}

/// Checks a pair against the differential equation, the initial data and the
/// functional boundary condition. Failures are reported, never raised.
pub fn verify(spec: &ProblemSpec, pair: &SolutionPair) -> VerificationReport {
    verify_candidate(spec, pair.lambda, &pair.u)
}

pub fn verify_candidate(spec: &ProblemSpec, lambda: f64, u: &GridFunction) -> VerificationReport {
    let re = match reintegrate(spec, lambda, u) {
        Ok(re) => re,
        Err(_) => return VerificationReport::failed(),
    };
    let grid = *u.grid();
    let z = grid.zero_index();
    let mut max_deviation: f64 = 0.0;
    let mut oracle_min = f64::INFINITY;
    for i in z..grid.len() {
        max_deviation = max_deviation.max((re.u.track(0)[i] - u.track(0)[i]).abs());
        oracle_min = oracle_min.min(re.u.track(0)[i]);
    }
    let j = spec.bc.order();
    let last = grid.len() - 1;
    // u'''(1) = u''(1) - u''(0) + ∫ s g: candidate track plus frozen forcing,
    // independent of the fitted constant c
    let candidate = if j < 3 {
        u.track(j)[last]
    } else {
        u.track(2)[last] - u.track(2)[z] + re.moment
    };
    let bc_residual = (candidate - lambda * re.b_value).abs();
    let mut ic_residuals = [0.0; 3];
    for (d, r) in ic_residuals.iter_mut().enumerate() {
        *r = (u.track(d)[z] - spec.psi.eval(0.0, d)).abs();
    }
    VerificationReport {
        max_deviation,
        bc_residual,
        ic_residuals,
        rhs_sign_ok: true,
        oracle_min,
    }
}

//! The perturbed Hammerstein operator
//!
//! ```text
//! 𝓕u(t) = ∫₀¹ k(t, s) F(s, u_s) ds + γ₃(t) B[u],   t ∈ [0, 1],
//! ```
//!
//! extended by zero on the history segment. All three derivative tracks are
//! assembled from the analytic `t`-derivatives of the kernel and of `γ₃`.

use crate::error::Result;
use crate::funcspace::{Grid, GridFunction};
use crate::kernels::{kernel_row_integral, Cubic, KernelSet};
use crate::problem::{eval_boundary_functional, eval_rhs, ProblemSpec};
use crate::quadrature::{merge_breakpoints, CompositeRule};
use rayon::prelude::*;

pub use crate::quadrature::QuadratureSpec;

#[derive(Clone, Debug)]
pub struct OperatorOutput {
    pub g: GridFunction,
    pub b_value: f64,
    /// `F(s_q, u_{s_q})` at the quadrature nodes of the operator's rule.
    pub forcing_cache: Vec<f64>,
}

/// Operator bound to a problem, kernel set and grid; the quadrature rule is
/// built once and reused across applications.
#[derive(Clone, Debug)]
pub struct HammersteinOperator<'a> {
    spec: &'a ProblemSpec,
    ks: KernelSet,
    grid: Grid,
    rule: CompositeRule,
}

impl<'a> HammersteinOperator<'a> {
    pub fn new(spec: &'a ProblemSpec, ks: KernelSet, grid: Grid, quad: QuadratureSpec) -> Self {
        Self {
            spec,
            ks,
            grid,
            rule: aligned_rule(&grid, &quad, &delay_breakpoints(&grid, &spec.rhs.breakpoints())),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.ks
    }

    pub fn rule(&self) -> &CompositeRule {
        &self.rule
    }

    pub fn apply(&self, u: &GridFunction) -> Result<OperatorOutput> {
        let forcing_cache = self
            .rule
            .nodes
            .par_iter()
            .map(|&s| eval_rhs(self.spec, u, s))
            .collect::<Result<Vec<f64>>>()?;
        let b_value = eval_boundary_functional(self.spec, u)?;
        let g = self.assemble(&forcing_cache, b_value);
        Ok(OperatorOutput {
            g,
            b_value,
            forcing_cache,
        })
    }

    /// Rows `Σ_q w_q ∂ᵈk(t_i, s_q) F_q + γ₃⁽ᵈ⁾(t_i) B` at every main-grid node.
    ///
    /// For fixed `s` both kernel branches are cubics in `t`, so each row is
    /// `Σ_k ∂ᵈ(tᵏ)(t_i) M_k(t_i)` with `M_k` the weighted `k`-th coefficient
    /// summed over nodes below `t_i` (lower branch) and above it (upper
    /// branch). Rule panels never straddle a grid node, so one running prefix
    /// sum per coefficient gives every row.
    pub fn assemble(&self, forcing: &[f64], b_value: f64) -> GridFunction {
        let grid = self.grid;
        let z = grid.zero_index();
        let nodes = &self.rule.nodes;
        // total upper-branch weight: only c3 is nonzero
        let mut upper_c3: f64 = nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(forcing)
            .map(|((&s, &w), &f)| w * f * self.ks.upper_branch(s).0[3])
            .sum();
        let mut lower = [0.0f64; 4];
        let mut q = 0;
        let mut g = GridFunction::zeros(grid);
        for i in z + 1..grid.len() {
            let t = grid.t(i);
            while q < nodes.len() && nodes[q] <= t {
                let wf = self.rule.weights[q] * forcing[q];
                let lo = self.ks.lower_branch(nodes[q]).0;
                for k in 0..4 {
                    lower[k] += wf * lo[k];
                }
                upper_c3 -= wf * self.ks.upper_branch(nodes[q]).0[3];
                q += 1;
            }
            if i == grid.len() - 1 {
                // everything is below t = 1; drop rounding residue
                upper_c3 = 0.0;
            }
            let row = Cubic([lower[0], lower[1], lower[2], lower[3] + upper_c3]);
            for d in 0..3 {
                g.track_mut(d)[i] = row.eval(t, d) + self.ks.gamma(3, t, d) * b_value;
            }
        }
        g
    }

    /// Same rows by direct summation of kernel values; quadratic cost.
    pub fn assemble_direct(&self, forcing: &[f64], b_value: f64) -> GridFunction {
        let grid = self.grid;
        let z = grid.zero_index();
        let mut g = GridFunction::zeros(grid);
        for i in z + 1..grid.len() {
            let t = grid.t(i);
            let mut acc = [0.0; 3];
            for ((&s, &w), &f) in self.rule.nodes.iter().zip(&self.rule.weights).zip(forcing) {
                for (d, a) in acc.iter_mut().enumerate() {
                    *a += w * f * self.ks.k(t, s, d);
                }
            }
            for (d, a) in acc.iter().enumerate() {
                g.track_mut(d)[i] = a + self.ks.gamma(3, t, d) * b_value;
            }
        }
        g
    }
}

/// Points `s = t_i + r` for every lag `r` and main-grid node `t_i`. The
/// candidate's interpolant is only piecewise smooth between nodes, so the
/// delayed arguments make `F(s, u_s)` kink there.
pub fn delay_breakpoints(grid: &Grid, lags: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for &lag in lags {
        for i in grid.zero_index()..grid.len() {
            let s = grid.t(i) + lag;
            if s < 1.0 {
                out.push(s);
            }
        }
    }
    out
}

/// Composite rule on `[0, 1]` whose panel boundaries contain every grid node
/// (so no panel straddles the kernel seam `s = t_i`) plus the extra breakpoints.
pub fn aligned_rule(grid: &Grid, quad: &QuadratureSpec, extra: &[f64]) -> CompositeRule {
    let n = grid.n();
    let per_cell = quad.panels.div_ceil(n).max(1);
    let total = n * per_cell;
    let mut breaks: Vec<f64> = (0..=total).map(|i| i as f64 / total as f64).collect();
    breaks.extend(extra.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    let breaks = merge_breakpoints(breaks, 1e-12);
    CompositeRule::on_breakpoints(&breaks, quad.nodes_per_panel)
}

/// One-shot application of the operator.
pub fn apply(
    spec: &ProblemSpec,
    ks: &KernelSet,
    u: &GridFunction,
    quad: &QuadratureSpec,
) -> Result<OperatorOutput> {
    HammersteinOperator::new(spec, *ks, *u.grid(), *quad).apply(u)
}

/// `sup_t { γ₃(t) η + ∫₀¹ k(t, s) δ(s) ds }` over the main grid nodes: a
/// lower bound for `‖𝓕u‖` on the sphere whenever `F ≥ δ` and `B ≥ η` there.
pub fn operator_norm_lower_bound(
    ks: &KernelSet,
    delta: impl Fn(f64) -> f64 + Sync,
    eta: f64,
    grid: &Grid,
    quad: &QuadratureSpec,
) -> f64 {
    let z = grid.zero_index();
    (z..grid.len())
        .into_par_iter()
        .map(|i| {
            let t = grid.t(i);
            ks.gamma(3, t, 0) * eta + kernel_row_integral(ks, t, 0, &delta, quad)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::Interval;
    use crate::kernels::{make_kernel_set, BcKind};
    use crate::problem::{build_psihat, make_preset, PresetParams};

    fn preset(name: &str, kv: &[(&str, f64)]) -> ProblemSpec {
        let p: PresetParams = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        make_preset(name, &p).unwrap()
    }

    #[test]
    fn constant_preset_closed_form() {
        let spec = preset("constant", &[]);
        let grid = spec.grid(64).unwrap();
        let ks = make_kernel_set(spec.bc);
        let u = build_psihat(&spec.psi, &ks, grid);
        let out = apply(&spec, &ks, &u, &QuadratureSpec::default()).unwrap();
        let last = grid.len() - 1;
        assert!((out.g.track(0)[last] - 7.0 / 24.0).abs() < 1e-14);
        assert!((out.g.track(2)[last] - 1.5).abs() < 1e-14);
        for i in grid.zero_index()..grid.len() {
            let t = grid.t(i);
            let exact = [
                -t.powi(4) / 24.0 + t.powi(3) / 3.0,
                -t.powi(3) / 6.0 + t * t,
                -t * t / 2.0 + 2.0 * t,
            ];
            for (d, e) in exact.iter().enumerate() {
                assert!((out.g.track(d)[i] - e).abs() < 1e-13, "{}", out.g.track(d)[i] - e);
            }
        }
        assert_eq!(out.b_value, 1.0);
    }

    #[test]
    fn zero_data_gives_zero() {
        let spec = preset("constant", &[("c_f", 0.0), ("c_b", 0.0)]);
        let grid = spec.grid(32).unwrap();
        let ks = make_kernel_set(spec.bc);
        let u = build_psihat(&spec.psi, &ks, grid);
        let out = apply(&spec, &ks, &u, &QuadratureSpec::default()).unwrap();
        assert_eq!(out.g.c2_norm(Interval::Full), 0.0);
    }

    #[test]
    fn forcing_only_j3() {
        let spec = preset("constant", &[("c_b", 0.0)]);
        let grid = spec.grid(32).unwrap();
        let ks = make_kernel_set(spec.bc);
        let u = build_psihat(&spec.psi, &ks, grid);
        let out = apply(&spec, &ks, &u, &QuadratureSpec::default()).unwrap();
        assert!((out.g.track(0)[grid.len() - 1] - 0.125).abs() < 1e-14);
    }

    #[test]
    fn history_segment_is_zero() {
        let spec = preset("example41", &[]);
        let grid = spec.grid(64).unwrap();
        let ks = make_kernel_set(spec.bc);
        let u = build_psihat(&spec.psi, &ks, grid);
        let out = apply(&spec, &ks, &u, &QuadratureSpec::default()).unwrap();
        for i in 0..=grid.zero_index() {
            assert_eq!(out.g.node(i), [0.0; 3]);
        }
        assert!(out.g.track(0).iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn rule_contains_grid_nodes_and_lags() {
        let spec = preset("example41", &[]);
        let grid = spec.grid(32).unwrap();
        let q = QuadratureSpec::new(8, 4).unwrap();
        let rule = aligned_rule(&grid, &q, &spec.rhs.breakpoints());
        // 32 cells plus the split at 1/3
        assert_eq!(rule.len(), 33 * 4);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn feasibility_examples() {
        let ks = make_kernel_set(BcKind::J3);
        let grid = Grid::new(256, 0.5).unwrap();
        let q = QuadratureSpec::default();
        let v = operator_norm_lower_bound(&ks, |s| s, 0.5, &grid, &q);
        assert!((v - 19.0 / 120.0).abs() < 1e-12);
        assert_eq!(operator_norm_lower_bound(&ks, |_| 0.0, 0.0, &grid, &q), 0.0);
        let v = operator_norm_lower_bound(&ks, |_| 1.0, 0.0, &grid, &q);
        assert!((v - 0.125).abs() < 1e-12);
    }

    #[test]
    fn prefix_assembly_matches_direct_sums() {
        for j in 0..4 {
            let spec = preset("example41", &[("j", j as f64)]);
            let grid = spec.grid(32).unwrap();
            let ks = make_kernel_set(spec.bc);
            let op = HammersteinOperator::new(&spec, ks, grid, QuadratureSpec::new(64, 6).unwrap());
            let u = build_psihat(&spec.psi, &ks, grid);
            let out = op.apply(&u).unwrap();
            let direct = op.assemble_direct(&out.forcing_cache, out.b_value);
            let scale = direct.c2_norm(Interval::Main);
            assert!(out.g.sub(&direct).c2_norm(Interval::Full) <= 1e-13 * scale);
        }
    }

    #[test]
    fn rows_match_kernel_row_integral() {
        // state-independent forcing: operator rows equal the split-rule row integrals
        let spec = preset("polyforce", &[("p2", 2.0), ("c_b", 0.0)]);
        let grid = spec.grid(16).unwrap();
        let ks = make_kernel_set(spec.bc);
        let q = QuadratureSpec::default();
        let out = apply(&spec, &ks, &GridFunction::zeros(grid), &q).unwrap();
        for i in grid.zero_index()..grid.len() {
            let t = grid.t(i);
            for d in 0..3 {
                let row = kernel_row_integral(&ks, t, d, |s| 1.0 + s + 2.0 * s * s, &q);
                assert!((out.g.track(d)[i] - row).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn b_enters_linearly_through_gamma3() {
        let spec = preset("example41", &[]);
        let grid = spec.grid(64).unwrap();
        let ks = make_kernel_set(spec.bc);
        let op = HammersteinOperator::new(&spec, ks, grid, QuadratureSpec::default());
        let u = build_psihat(&spec.psi, &ks, grid);
        let out = op.apply(&u).unwrap();
        let delta = 0.75;
        let bumped = op.assemble(&out.forcing_cache, out.b_value + delta);
        for i in grid.zero_index() + 1..grid.len() {
            let t = grid.t(i);
            for d in 0..3 {
                let diff = bumped.track(d)[i] - out.g.track(d)[i];
                assert!((diff - ks.gamma(3, t, d) * delta).abs() < 1e-12);
            }
        }
    }
}

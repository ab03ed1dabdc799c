//! Green's kernels and boundary basis cubics for the clamped-left fourth-order problem
//!
//! ```text
//! -u''''(t) = y(t),   u(0) = u'(0) = u''(0) = 0,   u^(j)(1) = 0
//! ```
//!
//! with `j ∈ {0, 1, 2, 3}`. Every kernel has the shape
//!
//! ```text
//! k(t, s) = (1 - s)^(3-j) t³/6 - H(t - s) (t - s)³/6
//! ```
//!
//! so for fixed `s` each branch is a cubic in `t`. Branches are stored as
//! monomial coefficients in `t` and differentiated exactly.

use crate::error::{Error, Result};
use crate::quadrature::{CompositeRule, QuadratureSpec};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Derivative order `j` fixed by the functional condition at `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct BcKind(u8);

impl BcKind {
    pub const J0: BcKind = BcKind(0);
    pub const J1: BcKind = BcKind(1);
    pub const J2: BcKind = BcKind(2);
    pub const J3: BcKind = BcKind(3);
    pub const ALL: [BcKind; 4] = [Self::J0, Self::J1, Self::J2, Self::J3];

    pub fn new(j: i64) -> Result<Self> {
        if (0..=3).contains(&j) {
            Ok(BcKind(j as u8))
        } else {
            Err(Error::InvalidBc(j))
        }
    }

    pub fn order(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<i64> for BcKind {
    type Error = Error;
    fn try_from(j: i64) -> Result<Self> {
        BcKind::new(j)
    }
}

impl From<BcKind> for i64 {
    fn from(b: BcKind) -> i64 {
        b.0 as i64
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "j{}", self.0)
    }
}

/// Cubic `c0 + c1 t + c2 t² + c3 t³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    /// `d`-th derivative at `t`; zero for `d >= 4`.
    pub fn eval(&self, t: f64, d: usize) -> f64 {
        let [c0, c1, c2, c3] = self.0;
        match d {
            0 => c0 + t * (c1 + t * (c2 + t * c3)),
            1 => c1 + t * (2.0 * c2 + 3.0 * t * c3),
            2 => 2.0 * c2 + 6.0 * t * c3,
            3 => 6.0 * c3,
            _ => 0.0,
        }
    }
}

/// Kernel and `γ₀..γ₃` for one boundary-condition kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSet {
    bc: BcKind,
    gammas: [Cubic; 4],
}

/// `d^j/dt^j t^p / p!` at `t = 1`, for `p <= 3`.
fn monomial_derivative_at_one(p: usize, j: usize) -> f64 {
    if j > p {
        return 0.0;
    }
    let mut fact = 1.0;
    for k in 1..=(p - j) {
        fact *= k as f64;
    }
    1.0 / fact
}

pub fn make_kernel_set(bc: BcKind) -> KernelSet {
    let j = bc.order();
    // t³ has j-th derivative 3!/(3-j)! at 1.
    let cube_at_one = 6.0 * monomial_derivative_at_one(3, j);
    let mut gammas = [Cubic([0.0; 4]); 4];
    for (i, gamma) in gammas.iter_mut().enumerate().take(3) {
        let mut c = [0.0; 4];
        c[i] = [1.0, 1.0, 0.5][i];
        c[3] = -monomial_derivative_at_one(i, j) / cube_at_one;
        *gamma = Cubic(c);
    }
    gammas[3] = Cubic([0.0, 0.0, 0.0, 1.0 / cube_at_one]);
    KernelSet { bc, gammas }
}

impl KernelSet {
    pub fn bc(&self) -> BcKind {
        self.bc
    }

    /// `(1 - s)^(3-j)`, the weight of the `t³/6` term.
    fn right_weight(&self, s: f64) -> f64 {
        (1.0 - s).powi(3 - self.bc.order() as i32)
    }

    /// Branch valid for `t < s`.
    pub fn upper_branch(&self, s: f64) -> Cubic {
        Cubic([0.0, 0.0, 0.0, self.right_weight(s) / 6.0])
    }

    /// Branch valid for `s <= t`.
    pub fn lower_branch(&self, s: f64) -> Cubic {
        let a = self.right_weight(s);
        Cubic([s * s * s / 6.0, -0.5 * s * s, 0.5 * s, (a - 1.0) / 6.0])
    }

    /// The cubic (in `t`) that `k(·, s)` follows at `t`; the diagonal takes the lower branch.
    pub fn branch_at(&self, t: f64, s: f64) -> Cubic {
        if s <= t {
            self.lower_branch(s)
        } else {
            self.upper_branch(s)
        }
    }

    /// `∂ᵈk/∂tᵈ (t, s)` for `d <= 3`.
    pub fn k(&self, t: f64, s: f64, d: usize) -> f64 {
        self.branch_at(t, s).eval(t, d)
    }

    /// `d`-th derivative of `γᵢ` at `t`.
    pub fn gamma(&self, i: usize, t: f64, d: usize) -> f64 {
        self.gammas[i].eval(t, d)
    }

    pub fn gamma_cubic(&self, i: usize) -> Cubic {
        self.gammas[i]
    }
}

/// `∫₀¹ ∂ᵈk/∂tᵈ (t, s) forcing(s) ds`, split at the kernel seam `s = t`.
pub fn kernel_row_integral(
    ks: &KernelSet,
    t: f64,
    d: usize,
    forcing: impl Fn(f64) -> f64,
    quad: &QuadratureSpec,
) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let mut total = 0.0;
    if t > 0.0 {
        let left = CompositeRule::uniform(0.0, t, quad.panels_for(t), quad.nodes_per_panel);
        let mut acc = 0.0;
        for (&s, &w) in left.nodes.iter().zip(&left.weights) {
            acc += w * ks.lower_branch(s).eval(t, d) * forcing(s);
        }
        total += acc;
    }
    if t < 1.0 {
        let right =
            CompositeRule::uniform(t, 1.0, quad.panels_for(1.0 - t), quad.nodes_per_panel);
        let mut acc = 0.0;
        for (&s, &w) in right.nodes.iter().zip(&right.weights) {
            acc += w * ks.upper_branch(s).eval(t, d) * forcing(s);
        }
        total += acc;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Expanded closed forms, used as independent oracles.
    fn reference_kernel(j: usize, t: f64, s: f64) -> f64 {
        let lower = s <= t;
        let v = match (j, lower) {
            (3, false) => t.powi(3),
            (3, true) => s * (3.0 * t * t - 3.0 * t * s + s * s),
            (0, false) => t.powi(3) * (1.0 - s).powi(3),
            (0, true) => {
                s * (1.0 - t)
                    * (s * s * t * t - 3.0 * s * t * t + 3.0 * t * t + s * s * t - 3.0 * s * t
                        + s * s)
            }
            (1, false) => t.powi(3) * (1.0 - s).powi(2),
            (1, true) => s * (s * t.powi(3) - 2.0 * t.powi(3) + 3.0 * t * t - 3.0 * s * t + s * s),
            // j = 2 upper branch: t³(1 - s), not t³(1 - s)²
            (2, false) => t.powi(3) * (1.0 - s),
            (2, true) => s * (-t.powi(3) + 3.0 * t * t - 3.0 * s * t + s * s),
            _ => unreachable!(),
        };
        v / 6.0
    }

    fn reference_gamma(j: usize, i: usize, t: f64) -> f64 {
        match (j, i) {
            (3, 0) => 1.0,
            (3, 1) => t,
            (3, 2) => 0.5 * t * t,
            (3, 3) => t.powi(3) / 6.0,
            (0, 0) => 1.0 - t.powi(3),
            (0, 1) => t - t.powi(3),
            (0, 2) => 0.5 * t * t * (1.0 - t),
            (0, 3) => t.powi(3),
            (1, 0) => 1.0,
            (1, 1) => t - t.powi(3) / 3.0,
            (1, 2) => t * t * (0.5 - t / 3.0),
            // u'(1) = 1 forces t³/3, not t³/2
            (1, 3) => t.powi(3) / 3.0,
            (2, 0) => 1.0,
            (2, 1) => t,
            (2, 2) => 0.5 * t * t * (1.0 - t / 3.0),
            (2, 3) => t.powi(3) / 6.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_out_of_range_bc() {
        assert_eq!(BcKind::new(4), Err(Error::InvalidBc(4)));
        assert_eq!(BcKind::new(-1), Err(Error::InvalidBc(-1)));
        assert!(serde_json::from_str::<BcKind>("5").is_err());
        assert_eq!(serde_json::from_str::<BcKind>("2").unwrap(), BcKind::J2);
    }

    #[test]
    fn spot_values() {
        let k3 = make_kernel_set(BcKind::J3);
        assert!((k3.k(1.0, 1.0, 0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((k3.gamma(3, 1.0, 0) - 1.0 / 6.0).abs() < 1e-15);
        for bc in BcKind::ALL {
            assert_eq!(make_kernel_set(bc).k(0.0, 0.5, 0), 0.0);
        }
        let k0 = make_kernel_set(BcKind::J0);
        assert!((k0.k(0.5, 0.25, 0) - 19.0 / 3072.0).abs() < 1e-16);
        assert!(k0.gamma(0, 1.0, 0).abs() < 1e-16);
        let k1 = make_kernel_set(BcKind::J1);
        assert!((k1.gamma(3, 1.0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_closed_forms_on_grid() {
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            let j = bc.order();
            for a in 0..=40 {
                let t = a as f64 / 40.0;
                for b in 0..=40 {
                    let s = b as f64 / 40.0;
                    let diff = (ks.k(t, s, 0) - reference_kernel(j, t, s)).abs();
                    assert!(diff < 1e-15, "{bc} t={t} s={s}: {diff}");
                }
                for i in 0..4 {
                    let diff = (ks.gamma(i, t, 0) - reference_gamma(j, i, t)).abs();
                    assert!(diff < 1e-15, "{bc} gamma{i} t={t}: {diff}");
                }
            }
        }
    }

    #[test]
    fn naive_j1_gamma3_fails_its_boundary_condition() {
        // ½t³ has derivative 3/2 at 1; the shipped cubic has derivative 1.
        let naive = Cubic([0.0, 0.0, 0.0, 0.5]);
        assert!((naive.eval(1.0, 1) - 1.5).abs() < 1e-15);
        let ks = make_kernel_set(BcKind::J1);
        assert!((ks.gamma(3, 1.0, 1) - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn squared_j2_upper_branch_is_discontinuous() {
        let ks = make_kernel_set(BcKind::J2);
        let (t, s): (f64, f64) = (0.6, 0.6);
        let squared_upper = t.powi(3) * (1.0 - s).powi(2) / 6.0;
        assert!((squared_upper - ks.lower_branch(s).eval(t, 0)).abs() > 1e-3);
        assert!((ks.upper_branch(s).eval(t, 0) - ks.lower_branch(s).eval(t, 0)).abs() < 1e-15);
    }

    #[test]
    fn gamma_boundary_data() {
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            let j = bc.order();
            for i in 0..4 {
                for d in 0..3 {
                    let expect = if i == d { 1.0 } else { 0.0 };
                    assert!((ks.gamma(i, 0.0, d) - expect).abs() < 1e-15, "{bc} γ{i} d={d}");
                }
                let expect = if i == 3 { 1.0 } else { 0.0 };
                assert!((ks.gamma(i, 1.0, j) - expect).abs() < 1e-15, "{bc} γ{i} at 1");
                assert_eq!(ks.gamma(i, 0.3, 4), 0.0);
            }
        }
    }

    #[test]
    fn clamped_left_end() {
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            for b in 0..=20 {
                let s = b as f64 / 20.0;
                for d in 0..3 {
                    assert_eq!(ks.k(0.0, s, d).abs(), 0.0);
                }
                // right-end condition on ∂ᵗʲ k
                assert!(ks.k(1.0, s, bc.order()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nonnegative_on_dense_grid() {
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            for a in 0..200 {
                let t = a as f64 / 199.0;
                for b in 0..200 {
                    let s = b as f64 / 199.0;
                    assert!(ks.k(t, s, 0) >= -1e-14);
                }
                for i in 0..4 {
                    assert!(ks.gamma(i, t, 0) >= -1e-14);
                }
            }
        }
    }

    #[test]
    fn row_integral_closed_forms() {
        let ks = make_kernel_set(BcKind::J3);
        let q = QuadratureSpec::default();
        assert!((kernel_row_integral(&ks, 1.0, 0, |_| 1.0, &q) - 0.125).abs() < 1e-14);
        assert!((kernel_row_integral(&ks, 1.0, 0, |s| s, &q) - 3.0 / 40.0).abs() < 1e-14);
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            assert_eq!(kernel_row_integral(&ks, 0.4, 1, |_| 0.0, &q), 0.0);
        }
    }

    proptest! {
        #[test]
        fn diagonal_regularity(t in 1e-6f64..1.0 - 1e-6, jj in 0i64..4) {
            let ks = make_kernel_set(BcKind::new(jj).unwrap());
            let gap = 1e-9;
            // s just below and just above t
            let s = t;
            for d in 0..3 {
                let below = ks.k(t + gap, s, d);
                let above = ks.k(t - gap, s, d);
                prop_assert!((below - above).abs() <= 1e-8);
            }
            let jump = ks.lower_branch(s).eval(t, 3) - ks.upper_branch(s).eval(t, 3);
            prop_assert!((jump + 1.0).abs() <= 1e-12);
        }
    }
}

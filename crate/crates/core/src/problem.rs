//! Problem assembly: history datum, right-hand side, boundary functional and
//! the named presets.

use crate::error::{Error, Result};
use crate::funcspace::{state_view, Grid, GridFunction, HistoryView};
use crate::kernels::{BcKind, KernelSet};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub type HistoryFn = dyn Fn(f64, usize) -> f64 + Send + Sync;
pub type FunctionalFn = dyn Fn(f64, &HistoryView<'_>) -> Result<f64> + Send + Sync;
pub type PointwiseFn = dyn Fn(f64, [f64; 6]) -> f64 + Send + Sync;
pub type BoundaryFn = dyn Fn(&GridFunction, &HistoryDatum) -> Result<f64> + Send + Sync;
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Initial function `ψ` on `[-r, 0]`, given analytically as `(t, d) ↦ ψ⁽ᵈ⁾(t)`.
#[derive(Clone)]
pub struct HistoryDatum {
    r: f64,
    psi: Arc<HistoryFn>,
}

impl fmt::Debug for HistoryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistoryDatum").field("r", &self.r).finish_non_exhaustive()
    }
}

impl HistoryDatum {
    /// Checks `ψ ≥ 0` on `[-r, 0]` (sampled) and `ψ'(0), ψ''(0) ≥ 0`.
    pub fn new(r: f64, psi: Arc<HistoryFn>) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidHistory(format!("horizon must be > 0 (got {r})")));
        }
        let datum = Self { r, psi };
        for k in 0..=400 {
            let t = -r * k as f64 / 400.0;
            let v = datum.eval(t, 0);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidHistory(format!("ψ({t}) = {v} is negative")));
            }
        }
        for d in 1..=2 {
            let v = datum.eval(0.0, d);
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidHistory(format!(
                    "derivative {d} of ψ at 0 is {v}; must be nonnegative"
                )));
            }
        }
        Ok(datum)
    }

    pub fn zero(r: f64) -> Result<Self> {
        Self::new(r, Arc::new(|_, _| 0.0))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn eval(&self, t: f64, d: usize) -> f64 {
        (self.psi)(t, d)
    }

    /// `(ψ(0), ψ'(0), ψ''(0))`
    pub fn data_at_zero(&self) -> [f64; 3] {
        [self.eval(0.0, 0), self.eval(0.0, 1), self.eval(0.0, 2)]
    }
}

/// `F(t, u_t)`, either as a general functional of the history window or as
/// the pointwise delay form
/// `f(t, φ(0), φ'(0), φ''(0), φ(-r₀), φ'(-r₁), φ''(-r₂))`.
#[derive(Clone)]
pub enum RightHandSide {
    Functional {
        f: Arc<FunctionalFn>,
        /// Times `s ∈ (0, 1)` where `s ↦ F(s, u_s)` may lose smoothness,
        /// typically the delays (a delayed argument crossing `0`).
        breakpoints: Vec<f64>,
    },
    Delay {
        f: Arc<PointwiseFn>,
        delays: [f64; 3],
    },
}

impl fmt::Debug for RightHandSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RightHandSide::Functional { breakpoints, .. } => f
                .debug_struct("Functional")
                .field("breakpoints", breakpoints)
                .finish_non_exhaustive(),
            RightHandSide::Delay { delays, .. } => f
                .debug_struct("Delay")
                .field("delays", delays)
                .finish_non_exhaustive(),
        }
    }
}

impl RightHandSide {
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RightHandSide::Functional { breakpoints, .. } => breakpoints.clone(),
            RightHandSide::Delay { delays, .. } => delays.to_vec(),
        }
    }

    pub fn max_delay(&self) -> f64 {
        match self {
            RightHandSide::Functional { .. } => 0.0,
            RightHandSide::Delay { delays, .. } => delays.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn evaluate(&self, view: &HistoryView<'_>) -> Result<f64> {
        let t = view.base_time();
        match self {
            RightHandSide::Functional { f, .. } => f(t, view),
            RightHandSide::Delay { f, delays } => {
                let args = [
                    view.at(0.0, 0)?,
                    view.at(0.0, 1)?,
                    view.at(0.0, 2)?,
                    view.at(-delays[0], 0)?,
                    view.at(-delays[1], 1)?,
                    view.at(-delays[2], 2)?,
                ];
                Ok(f(t, args))
            }
        }
    }
}

/// `B[u]`.
#[derive(Clone)]
pub struct BoundaryFunctional {
    f: Arc<BoundaryFn>,
    /// `Some(c)` when `B ≡ c`.
    constant: Option<f64>,
}

impl fmt::Debug for BoundaryFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunctional")
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

impl BoundaryFunctional {
    pub fn new(f: Arc<BoundaryFn>) -> Self {
        Self { f, constant: None }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            f: Arc::new(move |_, _| Ok(c)),
            constant: Some(c),
        }
    }

    pub fn evaluate(&self, u: &GridFunction, psi: &HistoryDatum) -> Result<f64> {
        (self.f)(u, psi)
    }
}

/// Lower bounds `δ_ρ(t) ≤ F(t, φ)` and `η_ρ ≤ B[u]` on the ball of radius `ρ`.
#[derive(Clone)]
pub struct LowerBounds {
    pub delta: Arc<ScalarFn>,
    pub eta: f64,
}

pub type BoundsFn = dyn Fn(f64) -> LowerBounds + Send + Sync;

/// A complete boundary value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub bc: BcKind,
    pub psi: HistoryDatum,
    pub rhs: RightHandSide,
    pub b: BoundaryFunctional,
    pub label: String,
    /// Radius-dependent lower bounds, when the problem supplies them.
    pub bounds: Option<Arc<BoundsFn>>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("bc", &self.bc)
            .field("psi", &self.psi)
            .field("rhs", &self.rhs)
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        bc: BcKind,
        psi: HistoryDatum,
        rhs: RightHandSide,
        b: BoundaryFunctional,
        label: impl Into<String>,
    ) -> Result<Self> {
        if let RightHandSide::Delay { delays, .. } = &rhs {
            for &d in delays {
                if !(d > 0.0 && d <= psi.r() + 1e-12) {
                    return Err(Error::InvalidHistory(format!(
                        "delay {d} must lie in (0, r = {}]",
                        psi.r()
                    )));
                }
            }
        }
        Ok(Self {
            bc,
            psi,
            rhs,
            b,
            label: label.into(),
            bounds: None,
        })
    }

    pub fn with_bounds(mut self, bounds: Arc<BoundsFn>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn r(&self) -> f64 {
        self.psi.r()
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new(n, self.r())
    }

    pub fn lower_bounds(&self, rho: f64) -> Option<LowerBounds> {
        self.bounds.as_ref().map(|b| b(rho))
    }
}

/// The cone vertex: `ψ` on `[-r, 0]` and `γ₀ψ(0) + γ₁ψ'(0) + γ₂ψ''(0)` on `(0, 1]`.
pub fn build_psihat(psi: &HistoryDatum, ks: &KernelSet, grid: Grid) -> GridFunction {
    let data = psi.data_at_zero();
    GridFunction::from_fn(grid, |t| {
        if t <= 0.0 {
            [psi.eval(t, 0), psi.eval(t, 1), psi.eval(t, 2)]
        } else {
            let mut out = [0.0; 3];
            for (d, slot) in out.iter_mut().enumerate() {
                *slot = (0..3).map(|i| ks.gamma(i, t, d) * data[i]).sum();
            }
            out
        }
    })
}

/// `F(t, u_t)`, checked finite and nonnegative.
pub fn eval_rhs(spec: &ProblemSpec, u: &GridFunction, t: f64) -> Result<f64> {
    let view = state_view(u, &spec.psi, t);
    let value = spec.rhs.evaluate(&view)?;
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::RhsViolation { t, value });
    }
    Ok(value)
}

/// `B[u]`, checked finite and nonnegative.
pub fn eval_boundary_functional(spec: &ProblemSpec, u: &GridFunction) -> Result<f64> {
    let value = spec.b.evaluate(u, &spec.psi)?;
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::FunctionalViolation(value));
    }
    Ok(value)
}

pub type PresetParams = BTreeMap<String, f64>;

pub const PRESETS: [&str; 3] = ["example41", "constant", "polyforce"];

struct ParamReader<'a> {
    preset: &'a str,
    params: &'a PresetParams,
    allowed: &'a [&'a str],
}

impl ParamReader<'_> {
    fn check_keys(&self) -> Result<()> {
        for key in self.params.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::InvalidParam {
                    preset: self.preset.into(),
                    message: format!(
                        "unknown parameter `{key}` (accepted: {})",
                        self.allowed.join(", ")
                    ),
                });
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.params.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(self.invalid(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn bc(&self, default: i64) -> Result<BcKind> {
        let j = self.get("j", default as f64)?;
        if j.fract() != 0.0 {
            return Err(self.invalid(format!("`j` must be an integer (got {j})")));
        }
        BcKind::new(j as i64)
    }

    fn invalid(&self, message: String) -> Error {
        Error::InvalidParam {
            preset: self.preset.into(),
            message,
        }
    }
}

/// Builds a named problem. Recognized parameters:
///
/// * `example41`: `j` (default 3), `r0`, `r1`, `r2` (lags ½, ⅓, ¼), `r`.
/// * `constant`: `j`, `c_f`, `c_b` (both default 1), `r` (default ½).
/// * `polyforce`: `j`, `p0..p3` (`F = p0 + p1 t + p2 t² + p3 t³`, default `1 + t`), `c_b`, `r`.
pub fn make_preset(name: &str, params: &PresetParams) -> Result<ProblemSpec> {
    match name {
        "example41" => example41(params),
        "constant" => constant(params),
        "polyforce" => polyforce(params),
        _ => Err(Error::UnknownPreset {
            name: name.into(),
            available: PRESETS.join(", "),
        }),
    }
}

fn horizon(reader: &ParamReader<'_>, default: f64, min: f64) -> Result<f64> {
    let r = reader.get("r", default)?;
    if r < min - 1e-12 || r <= 0.0 {
        return Err(reader.invalid(format!("r = {r} must be positive and at least {min}")));
    }
    Ok(r)
}

fn example41(params: &PresetParams) -> Result<ProblemSpec> {
    let reader = ParamReader {
        preset: "example41",
        params,
        allowed: &["j", "r0", "r1", "r2", "r"],
    };
    reader.check_keys()?;
    let bc = reader.bc(3)?;
    // r0: lag in u, r1: lag in the exponent's u'', r2: lag in the bracket's u''
    let lags = [
        reader.get("r0", 0.5)?,
        reader.get("r1", 1.0 / 3.0)?,
        reader.get("r2", 0.25)?,
    ];
    if lags.iter().any(|&l| l <= 0.0) {
        return Err(reader.invalid("lags must be positive".into()));
    }
    let max_lag = lags.iter().copied().fold(0.0, f64::max);
    let r = horizon(&reader, max_lag, max_lag)?;
    let psi = HistoryDatum::new(
        r,
        Arc::new(|t: f64, d: usize| match d {
            0 => 1.0 - t.cos(),
            1 => t.sin(),
            2 => t.cos(),
            _ => f64::NAN,
        }),
    )?;
    let [r0, r1, r2] = lags;
    let rhs = RightHandSide::Functional {
        f: Arc::new(move |t, view| {
            let u = view.at(0.0, 0)?;
            let du = view.at(0.0, 1)?;
            let lag_u = view.at(-r0, 0)?;
            let lag_exp = view.at(-r1, 2)?;
            let lag_br = view.at(-r2, 2)?;
            Ok(t * (u + lag_exp * lag_exp).exp()
                * (1.0 + du * du + lag_u * lag_u + lag_br * lag_br))
        }),
        breakpoints: lags.to_vec(),
    };
    let b = BoundaryFunctional::new(Arc::new(|u: &GridFunction, _: &HistoryDatum| {
        let mid = u.eval(0.5, 0)?;
        let integral = u.integrate(-0.5, 1.0, |t, [_, _, u2]| t.powi(3) * u2 * u2)?;
        Ok(1.0 / (1.0 + mid * mid) + integral)
    }));
    Ok(ProblemSpec::new(bc, psi, rhs, b, "example41")?.with_bounds(Arc::new(|rho| LowerBounds {
        delta: Arc::new(|t| t),
        eta: 1.0 / (1.0 + rho * rho),
    })))
}

fn constant(params: &PresetParams) -> Result<ProblemSpec> {
    let reader = ParamReader {
        preset: "constant",
        params,
        allowed: &["j", "c_f", "c_b", "r"],
    };
    reader.check_keys()?;
    let bc = reader.bc(3)?;
    let c_f = reader.get("c_f", 1.0)?;
    let c_b = reader.get("c_b", 1.0)?;
    if c_f < 0.0 || c_b < 0.0 {
        return Err(reader.invalid("c_f and c_b must be nonnegative".into()));
    }
    let r = horizon(&reader, 0.5, 0.0)?;
    let rhs = RightHandSide::Delay {
        f: Arc::new(move |_, _| c_f),
        delays: [r; 3],
    };
    Ok(ProblemSpec::new(
        bc,
        HistoryDatum::zero(r)?,
        rhs,
        BoundaryFunctional::constant(c_b),
        "constant",
    )?
    .with_bounds(Arc::new(move |_| LowerBounds {
        delta: Arc::new(move |_| c_f),
        eta: c_b,
    })))
}

fn polyforce(params: &PresetParams) -> Result<ProblemSpec> {
    let reader = ParamReader {
        preset: "polyforce",
        params,
        allowed: &["j", "p0", "p1", "p2", "p3", "c_b", "r"],
    };
    reader.check_keys()?;
    let bc = reader.bc(3)?;
    let p = [
        reader.get("p0", 1.0)?,
        reader.get("p1", 1.0)?,
        reader.get("p2", 0.0)?,
        reader.get("p3", 0.0)?,
    ];
    let c_b = reader.get("c_b", 1.0)?;
    if c_b < 0.0 {
        return Err(reader.invalid("c_b must be nonnegative".into()));
    }
    let poly = move |t: f64| p[0] + t * (p[1] + t * (p[2] + t * p[3]));
    if (0..=200).any(|k| poly(k as f64 / 200.0) < 0.0) {
        return Err(reader.invalid("polynomial forcing must be nonnegative on [0, 1]".into()));
    }
    let r = horizon(&reader, 0.5, 0.0)?;
    let rhs = RightHandSide::Delay {
        f: Arc::new(move |t, _| poly(t)),
        delays: [r; 3],
    };
    Ok(ProblemSpec::new(
        bc,
        HistoryDatum::zero(r)?,
        rhs,
        BoundaryFunctional::constant(c_b),
        "polyforce",
    )?
    .with_bounds(Arc::new(move |_| LowerBounds {
        delta: Arc::new(poly),
        eta: c_b,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::make_kernel_set;

    fn params(kv: &[(&str, f64)]) -> PresetParams {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn ex41(j: i64) -> ProblemSpec {
        make_preset("example41", &params(&[("j", j as f64)])).unwrap()
    }

    #[test]
    fn rejects_bad_history() {
        let neg = HistoryDatum::new(0.5, Arc::new(|t, d| if d == 0 { t } else { 1.0 }));
        assert!(matches!(neg, Err(Error::InvalidHistory(_))));
        let bad_slope = HistoryDatum::new(0.5, Arc::new(|_, d| if d == 1 { -1.0 } else { 1.0 }));
        assert!(matches!(bad_slope, Err(Error::InvalidHistory(_))));
        assert!(HistoryDatum::zero(0.0).is_err());
    }

    #[test]
    fn psihat_example41_is_half_square() {
        let spec = ex41(3);
        let grid = spec.grid(256).unwrap();
        let ph = build_psihat(&spec.psi, &make_kernel_set(spec.bc), grid);
        for i in grid.zero_index() + 1..grid.len() {
            let t = grid.t(i);
            let [v, d1, d2] = ph.node(i);
            assert!((v - 0.5 * t * t).abs() <= 1e-12);
            assert!((d1 - t).abs() <= 1e-12);
            assert!((d2 - 1.0).abs() <= 1e-12);
        }
        let t = -0.25;
        assert_eq!(ph.eval(t, 0).unwrap(), 1.0 - t.cos());
    }

    #[test]
    fn psihat_of_zero_history_is_zero() {
        let psi = HistoryDatum::zero(0.5).unwrap();
        let grid = Grid::new(32, 0.5).unwrap();
        for bc in BcKind::ALL {
            let ph = build_psihat(&psi, &make_kernel_set(bc), grid);
            assert_eq!(ph.c2_norm(crate::funcspace::Interval::Full), 0.0);
        }
    }

    #[test]
    fn psihat_j0_linear_history() {
        let psi = HistoryDatum::new(0.5, Arc::new(|t, d| match d {
            0 => t + 1.0,
            1 => 1.0,
            _ => 0.0,
        }))
        .unwrap();
        let grid = Grid::new(32, 0.5).unwrap();
        let ph = build_psihat(&psi, &make_kernel_set(BcKind::J0), grid);
        for i in grid.zero_index() + 1..grid.len() {
            let t = grid.t(i);
            assert!((ph.track(0)[i] - (1.0 + t - 2.0 * t.powi(3))).abs() < 1e-14);
        }
    }

    #[test]
    fn psihat_seam_matches_history_for_every_bc() {
        let psi = HistoryDatum::new(0.5, Arc::new(|t: f64, d| match d {
            0 => 2.0 + t.exp(),
            _ => t.exp(),
        }))
        .unwrap();
        let grid = Grid::new(64, 0.5).unwrap();
        for bc in BcKind::ALL {
            let ks = make_kernel_set(bc);
            let data = psi.data_at_zero();
            for d in 0..3 {
                let right: f64 = (0..3).map(|i| ks.gamma(i, 0.0, d) * data[i]).sum();
                assert!((right - psi.eval(0.0, d)).abs() <= 1e-12);
            }
            let ph = build_psihat(&psi, &ks, grid);
            // one step to the right follows the γ combination
            let t = grid.h();
            let i = grid.zero_index() + 1;
            let expect: f64 = (0..3).map(|k| ks.gamma(k, t, 0) * data[k]).sum();
            assert!((ph.track(0)[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn rhs_example41_values() {
        let spec = ex41(3);
        let grid = spec.grid(256).unwrap();
        let ph = build_psihat(&spec.psi, &make_kernel_set(spec.bc), grid);
        assert_eq!(eval_rhs(&spec, &ph, 0.0).unwrap(), 0.0);
        let expect = 9.0 / 8.0 * (9.0f64 / 8.0).exp();
        let got = eval_rhs(&spec, &ph, 0.5).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }

    #[test]
    fn rhs_delay_form_and_sign_check() {
        let psi = HistoryDatum::zero(0.5).unwrap();
        let one = RightHandSide::Delay {
            f: Arc::new(|_, _| 1.0),
            delays: [0.1, 0.2, 0.3],
        };
        let spec = ProblemSpec::new(BcKind::J3, psi.clone(), one, BoundaryFunctional::constant(1.0), "one").unwrap();
        let u = GridFunction::zeros(spec.grid(32).unwrap());
        assert_eq!(eval_rhs(&spec, &u, 0.7).unwrap(), 1.0);

        let neg = RightHandSide::Delay {
            f: Arc::new(|t, _| -t),
            delays: [0.1, 0.2, 0.3],
        };
        let spec = ProblemSpec::new(BcKind::J3, psi.clone(), neg, BoundaryFunctional::constant(1.0), "neg").unwrap();
        assert_eq!(
            eval_rhs(&spec, &u, 0.5),
            Err(Error::RhsViolation { t: 0.5, value: -0.5 })
        );

        let too_long = RightHandSide::Delay {
            f: Arc::new(|_, _| 1.0),
            delays: [0.1, 0.2, 0.9],
        };
        assert!(ProblemSpec::new(BcKind::J3, psi, too_long, BoundaryFunctional::constant(1.0), "x").is_err());
    }

    #[test]
    fn delay_form_argument_order() {
        let psi = HistoryDatum::zero(0.5).unwrap();
        let rhs = RightHandSide::Delay {
            f: Arc::new(|_, a| a.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum::<f64>().abs()),
            delays: [0.5, 0.25, 0.125],
        };
        let spec = ProblemSpec::new(BcKind::J3, psi, rhs, BoundaryFunctional::constant(1.0), "args").unwrap();
        let grid = spec.grid(64).unwrap();
        let u = GridFunction::from_fn(grid, |t| [t.max(0.0).powi(3), 3.0 * t.max(0.0).powi(2), 6.0 * t.max(0.0)]);
        let t: f64 = 0.75;
        let expect = t.powi(3) + 2.0 * 3.0 * t * t + 3.0 * 6.0 * t
            + 4.0 * (t - 0.5).powi(3)
            + 5.0 * 3.0 * (t - 0.25).powi(2)
            + 6.0 * 6.0 * (t - 0.125);
        assert!((eval_rhs(&spec, &u, t).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn rhs_is_causal() {
        let spec = ex41(3);
        let grid = spec.grid(128).unwrap();
        let ph = build_psihat(&spec.psi, &make_kernel_set(spec.bc), grid);
        for t in [0.1, 0.37, 0.5, 0.8] {
            let before = eval_rhs(&spec, &ph, t).unwrap();
            let mut bumped = ph.clone();
            // first node strictly after t, plus one more so interpolation near t stays put
            let first = grid.zero_index() + ((t * 128.0).floor() as usize) + 2;
            for i in first..grid.len() {
                for d in 0..3 {
                    bumped.track_mut(d)[i] += 5.0;
                }
            }
            assert_eq!(eval_rhs(&spec, &bumped, t).unwrap(), before);
        }
    }

    #[test]
    fn boundary_functional_example41() {
        let spec = ex41(3);
        let grid = spec.grid(256).unwrap();
        let zero = GridFunction::zeros(grid);
        assert_eq!(eval_boundary_functional(&spec, &zero).unwrap(), 1.0);

        let ph = build_psihat(&spec.psi, &make_kernel_set(spec.bc), grid);
        // oracle for ∫_{-1/2}^0 t³ cos²t dt: 20-point Gauss–Legendre on 50 panels
        let hist = crate::quadrature::CompositeRule::uniform(-0.5, 0.0, 50, 20)
            .integrate(|t| t.powi(3) * t.cos().powi(2));
        let expect = 64.0 / 65.0 + hist + 0.25;
        let got = eval_boundary_functional(&spec, &ph).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn boundary_functional_monotone_in_midpoint() {
        let spec = ex41(3);
        let grid = spec.grid(64).unwrap();
        let ph = build_psihat(&spec.psi, &make_kernel_set(spec.bc), grid);
        let mid = grid.zero_index() + 32;
        let base = eval_boundary_functional(&spec, &ph).unwrap();
        let mut prev = base;
        for k in 1..5 {
            let mut bumped = ph.clone();
            bumped.track_mut(0)[mid] += 0.1 * k as f64;
            let v = eval_boundary_functional(&spec, &bumped).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn constant_functional() {
        let spec = make_preset("constant", &params(&[("c_b", 2.5)])).unwrap();
        let u = GridFunction::zeros(spec.grid(32).unwrap());
        assert_eq!(eval_boundary_functional(&spec, &u).unwrap(), 2.5);
    }

    #[test]
    fn presets() {
        let spec = make_preset("example41", &PresetParams::new()).unwrap();
        assert_eq!(spec.bc, BcKind::J3);
        assert_eq!(spec.r(), 0.5);
        let mut lags = spec.rhs.breakpoints();
        lags.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(lags, vec![0.25, 1.0 / 3.0, 0.5]);
        assert_eq!(ex41(0).bc, BcKind::J0);

        let c = make_preset("constant", &params(&[("c_f", 1.0), ("c_b", 1.0)])).unwrap();
        let u = GridFunction::zeros(c.grid(32).unwrap());
        assert_eq!(eval_rhs(&c, &u, 0.3).unwrap(), 1.0);
        assert_eq!(c.psi.data_at_zero(), [0.0; 3]);

        match make_preset("nope", &PresetParams::new()) {
            Err(Error::UnknownPreset { available, .. }) => {
                assert!(available.contains("example41") && available.contains("polyforce"))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(make_preset("constant", &params(&[("bogus", 1.0)])).is_err());
        assert!(make_preset("constant", &params(&[("j", 4.0)])).is_err());
        assert!(make_preset("polyforce", &params(&[("p0", -1.0), ("p1", 0.0)])).is_err());
        assert!(make_preset("example41", &params(&[("r", 0.4)])).is_err());
    }
}

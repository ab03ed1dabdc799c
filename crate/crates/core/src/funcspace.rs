//! Sampled C² functions on `[-r, 1]`.
//!
//! A [`GridFunction`] stores value, first and second derivative on a uniform
//! grid with step `h = 1/n` and a node pinned at `t = 0`. The history part
//! uses the same step, so `r` is rounded up to a whole number of steps.

use crate::error::{Error, Result};
use crate::problem::HistoryDatum;
use crate::quadrature::gauss_legendre;
use log::warn;

/// Uniform grid over `[-m h, 1]` with `h = 1/n` and `m h >= r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    hist: usize,
    r: f64,
}

impl Grid {
    pub const DEFAULT_N: usize = 256;

    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!("n must be >= 16 (got {n})")));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidGrid(format!("history horizon must be > 0 (got {r})")));
        }
        let steps = r * n as f64;
        let hist = (steps - 1e-9).ceil().max(1.0) as usize;
        if (steps - hist as f64).abs() > 1e-9 {
            warn!(
                "history horizon {r} is not a multiple of h = 1/{n}; grid extended to {}",
                -(hist as f64) / n as f64
            );
        }
        Ok(Self { n, hist, r })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of steps in the history segment.
    pub fn history_steps(&self) -> usize {
        self.hist
    }

    pub fn len(&self) -> usize {
        self.hist + self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the node at `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.hist
    }

    pub fn start(&self) -> f64 {
        -(self.hist as f64) / self.n as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        (i as f64 - self.hist as f64) / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.t(i))
    }

    /// Same horizon, twice as many subintervals.
    pub fn refined(&self) -> Self {
        Grid::new(self.n * 2, self.r).expect("refining a valid grid")
    }

    fn check(&self, t: f64) -> Result<()> {
        let lo = self.start();
        let slack = 1e-12;
        if !(t >= lo - slack && t <= 1.0 + slack) {
            return Err(Error::Domain { t, lo, hi: 1.0 });
        }
        Ok(())
    }
}

/// Which part of the grid a norm is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interval {
    /// `[-r, 1]`
    Full,
    /// `[0, 1]`
    Main,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    vals: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.len();
        Self {
            grid,
            vals: vec![0.0; len],
            d1: vec![0.0; len],
            d2: vec![0.0; len],
        }
    }

    /// Samples `f(t) = [u(t), u'(t), u''(t)]` at every node.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> [f64; 3]) -> Self {
        let mut g = Self::zeros(grid);
        for i in 0..grid.len() {
            let [a, b, c] = f(grid.t(i));
            g.vals[i] = a;
            g.d1[i] = b;
            g.d2[i] = c;
        }
        g
    }

    pub fn from_tracks(grid: Grid, vals: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Result<Self> {
        let len = grid.len();
        if vals.len() != len || d1.len() != len || d2.len() != len {
            return Err(Error::InvalidGrid(format!(
                "track lengths ({}, {}, {}) do not match grid length {len}",
                vals.len(),
                d1.len(),
                d2.len()
            )));
        }
        Ok(Self { grid, vals, d1, d2 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn track(&self, d: usize) -> &[f64] {
        match d {
            0 => &self.vals,
            1 => &self.d1,
            2 => &self.d2,
            _ => panic!("derivative track {d} does not exist"),
        }
    }

    pub fn track_mut(&mut self, d: usize) -> &mut [f64] {
        match d {
            0 => &mut self.vals,
            1 => &mut self.d1,
            2 => &mut self.d2,
            _ => panic!("derivative track {d} does not exist"),
        }
    }

    pub fn node(&self, i: usize) -> [f64; 3] {
        [self.vals[i], self.d1[i], self.d2[i]]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid functions live on different grids");
        let map = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
        Self {
            grid: self.grid,
            vals: map(&self.vals, &other.vals),
            d1: map(&self.d1, &other.d1),
            d2: map(&self.d2, &other.d2),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// `a·self + b·other`
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| c * x).collect();
        Self {
            grid: self.grid,
            vals: s(&self.vals),
            d1: s(&self.d1),
            d2: s(&self.d2),
        }
    }

    fn range(&self, interval: Interval) -> std::ops::Range<usize> {
        match interval {
            Interval::Full => 0..self.grid.len(),
            Interval::Main => self.grid.zero_index()..self.grid.len(),
        }
    }

    /// Sup norm of one track over an interval.
    pub fn sup(&self, d: usize, interval: Interval) -> f64 {
        self.track(d)[self.range(interval)]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max(‖u‖∞, ‖u'‖∞, ‖u''‖∞)` over the selected node range.
    pub fn c2_norm(&self, interval: Interval) -> f64 {
        (0..3).map(|d| self.sup(d, interval)).fold(0.0, f64::max)
    }

    /// Value of the `d`-th derivative at an arbitrary `t ∈ [-r, 1]`.
    ///
    /// Nodes return stored data. Between nodes the value and first-derivative
    /// tracks use cubic Hermite interpolation with the next track as slope; the
    /// second-derivative track uses four-point Lagrange interpolation on nodes
    /// of the same side of `t = 0`.
    pub fn eval(&self, t: f64, d: usize) -> Result<f64> {
        if d > 2 {
            return Err(Error::DerivativeOrder(d));
        }
        self.grid.check(t)?;
        let n = self.grid.n as f64;
        let x = (t - self.grid.start()) * n;
        let last = self.grid.len() - 1;
        let x = x.clamp(0.0, last as f64);
        let k = (x.floor() as usize).min(last - 1);
        let frac = x - k as f64;
        if frac == 0.0 {
            return Ok(self.track(d)[k]);
        }
        if frac == 1.0 {
            return Ok(self.track(d)[k + 1]);
        }
        match d {
            0 | 1 => {
                let y = self.track(d);
                let m = self.track(d + 1);
                Ok(hermite(y[k], y[k + 1], m[k], m[k + 1], self.grid.h(), frac))
            }
            _ => Ok(self.lagrange_d2(k, frac)),
        }
    }

    fn lagrange_d2(&self, k: usize, frac: f64) -> f64 {
        let z = self.grid.zero_index();
        // nodes [seg_lo, seg_hi] on the same side of the seam as cell k
        let (seg_lo, seg_hi) = if k < z {
            (0, z)
        } else {
            (z, self.grid.len() - 1)
        };
        let size = (seg_hi - seg_lo + 1).min(4);
        let mut lo = k.saturating_sub(1).max(seg_lo);
        if lo + size - 1 > seg_hi {
            lo = seg_hi + 1 - size;
        }
        // local coordinate in units of h, relative to node lo
        let x = (k - lo) as f64 + frac;
        let y = &self.d2;
        let mut acc = 0.0;
        for a in 0..size {
            let mut basis = 1.0;
            for b in 0..size {
                if a != b {
                    basis *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += basis * y[lo + a];
        }
        acc
    }

    /// `∫ₐᵇ f(t, [u, u', u'']) dt`. Whole cells use composite Simpson on node
    /// data, split at `t = 0`; partial end cells use Gauss–Legendre on
    /// interpolated data.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64, [f64; 3]) -> f64) -> Result<f64> {
        if b < a {
            return Ok(-self.integrate(b, a, f)?);
        }
        self.grid.check(a)?;
        self.grid.check(b)?;
        let n = self.grid.n as f64;
        let start = self.grid.start();
        let h = self.grid.h();
        let snap = |x: f64| {
            let y = (x - start) * n;
            if (y - y.round()).abs() < 1e-9 {
                y.round()
            } else {
                y
            }
        };
        let ia = snap(a).ceil() as usize;
        let ib = snap(b).floor() as usize;
        let node_f = |i: usize| f(self.grid.t(i), self.node(i));
        let partial = |lo: f64, hi: f64| -> Result<f64> {
            if hi - lo <= 0.0 {
                return Ok(0.0);
            }
            let (gx, gw) = gauss_legendre(4);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut acc = 0.0;
            for (x, w) in gx.iter().zip(&gw) {
                let t = mid + half * x;
                let v = [self.eval(t, 0)?, self.eval(t, 1)?, self.eval(t, 2)?];
                acc += w * half * f(t, v);
            }
            Ok(acc)
        };
        if ia > ib {
            return partial(a, b);
        }
        let mut total = partial(a, self.grid.t(ia))? + partial(self.grid.t(ib), b)?;
        let z = self.grid.zero_index();
        if ia < z && z < ib {
            total += simpson(ia, z, h, &node_f) + simpson(z, ib, h, &node_f);
        } else {
            total += simpson(ia, ib, h, &node_f);
        }
        Ok(total)
    }

    /// Writes `(t, u, u', u'')` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "du", "ddu"])?;
        for i in 0..self.grid.len() {
            let [a, b, c] = self.node(i);
            w.write_record([
                crate::fmt_num(self.grid.t(i)),
                crate::fmt_num(a),
                crate::fmt_num(b),
                crate::fmt_num(c),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv); the `t` column must
    /// match the grid nodes.
    pub fn read_csv<R: std::io::Read>(grid: Grid, input: R) -> Result<Self> {
        let bad = |m: String| Error::InvalidGrid(m);
        let mut rd = csv::Reader::from_reader(input);
        let mut g = Self::zeros(grid);
        let mut count = 0;
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| bad(format!("profile row {i}: {e}")))?;
            if i >= grid.len() {
                return Err(bad(format!("profile has more than {} rows", grid.len())));
            }
            let mut vals = [0.0; 4];
            for (k, v) in vals.iter_mut().enumerate() {
                let field = rec.get(k).ok_or_else(|| bad(format!("profile row {i}: missing column {k}")))?;
                *v = field
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("profile row {i}: bad number {field:?}")))?;
            }
            if (vals[0] - grid.t(i)).abs() > 1e-12 {
                return Err(bad(format!("profile row {i}: t = {} but grid node is {}", vals[0], grid.t(i))));
            }
            for d in 0..3 {
                g.track_mut(d)[i] = vals[d + 1];
            }
            count += 1;
        }
        if count != grid.len() {
            return Err(bad(format!("profile has {count} rows, grid has {}", grid.len())));
        }
        Ok(g)
    }
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

/// Composite Simpson over nodes `lo..=hi`; an odd cell count closes with the 3/8 rule.
fn simpson(lo: usize, hi: usize, h: f64, f: &impl Fn(usize) -> f64) -> f64 {
    let cells = hi - lo;
    match cells {
        0 => 0.0,
        1 => 0.5 * h * (f(lo) + f(hi)),
        _ => {
            let (even_end, tail) = if cells.is_multiple_of(2) {
                (hi, false)
            } else {
                (hi - 3, true)
            };
            let mut acc = 0.0;
            let mut i = lo;
            while i < even_end {
                acc += h / 3.0 * (f(i) + 4.0 * f(i + 1) + f(i + 2));
                i += 2;
            }
            if tail {
                let j = even_end;
                acc += 3.0 * h / 8.0 * (f(j) + 3.0 * f(j + 1) + 3.0 * f(j + 2) + f(j + 3));
            }
            acc
        }
    }
}

pub fn c2_norm(g: &GridFunction, interval: Interval) -> f64 {
    g.c2_norm(interval)
}

/// Read-only window `θ ↦ u(t + θ)` for `θ ∈ [-r, 0]`.
#[derive(Clone, Copy)]
pub struct HistoryView<'a> {
    u: &'a GridFunction,
    psi: &'a HistoryDatum,
    t: f64,
}

impl<'a> HistoryView<'a> {
    pub fn base_time(&self) -> f64 {
        self.t
    }

    /// `d`-th derivative of `u` at `t + θ`; history values come from `ψ` directly.
    pub fn at(&self, theta: f64, d: usize) -> Result<f64> {
        let x = self.t + theta;
        if x <= 0.0 {
            if d > 2 {
                return Err(Error::DerivativeOrder(d));
            }
            Ok(self.psi.eval(x, d))
        } else {
            self.u.eval(x, d)
        }
    }
}

pub fn state_view<'a>(g: &'a GridFunction, psi: &'a HistoryDatum, t: f64) -> HistoryView<'a> {
    HistoryView { u: g, psi, t }
}

/// Distance of a shifted function from the cone of nonnegative functions that
/// vanish with two derivatives on the history segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeReport {
    pub min_value: f64,
    pub history_flatness: f64,
    pub member: bool,
}

pub fn cone_check(w: &GridFunction, tol: f64) -> ConeReport {
    let min_value = w.vals.iter().copied().fold(f64::INFINITY, f64::min);
    let z = w.grid.zero_index();
    let history_flatness = (0..=z)
        .flat_map(|i| w.node(i))
        .fold(0.0, |m: f64, v| m.max(v.abs()));
    ConeReport {
        min_value,
        history_flatness,
        member: min_value >= -tol && history_flatness <= tol,
    }
}

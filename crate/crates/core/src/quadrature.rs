//! Gauss–Legendre rules and composite rules laid on fixed breakpoints.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Composite Gauss–Legendre settings.
///
/// `panels` is the number of panels spread over the unit interval; a piece of
/// length `L` receives `max(1, round(panels * L))` of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: 256,
            nodes_per_panel: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn new(panels: usize, nodes_per_panel: usize) -> Result<Self> {
        let q = Self {
            panels,
            nodes_per_panel,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 8 {
            return Err(Error::InvalidQuadrature(format!(
                "panels must be >= 8 (got {})",
                self.panels
            )));
        }
        if !(4..=16).contains(&self.nodes_per_panel) {
            return Err(Error::InvalidQuadrature(format!(
                "nodes_per_panel must lie in 4..=16 (got {})",
                self.nodes_per_panel
            )));
        }
        Ok(())
    }

    /// Same rule with twice as many panels.
    pub fn refined(&self) -> Self {
        Self {
            panels: self.panels * 2,
            ..*self
        }
    }

    /// Panel count for a piece of the given length.
    pub fn panels_for(&self, len: f64) -> usize {
        ((self.panels as f64 * len).round() as usize).max(1)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A composite rule: GL nodes on every panel between consecutive breakpoints.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    /// Lays `order`-point GL panels on each interval of the sorted breakpoint list.
    pub fn on_breakpoints(breaks: &[f64], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(breaks.len() * order);
        let mut weights = Vec::with_capacity(breaks.len() * order);
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            if half <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    /// Uniform panels on `[a, b]`.
    pub fn uniform(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| {
                if i == panels {
                    b
                } else {
                    a + (b - a) * i as f64 / panels as f64
                }
            })
            .collect();
        Self::on_breakpoints(&breaks, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Sorts and merges breakpoints closer than `tol`.
pub fn merge_breakpoints(mut pts: Vec<f64>, tol: f64) -> Vec<f64> {
    pts.sort_by(|a, b| a.total_cmp(b));
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if (p - last).abs() <= tol => {}
            _ => out.push(p),
        }
    }
    out
}

//! Grid functions and their finite-difference gradients.

use serde::Serialize;

use crate::causal::CausalGraph;
use crate::spacetime::SampledSpacetime;

/// Scalar values per grid node; excluded nodes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

/// Pointwise verdict on a gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientClass {
    /// Past-directed timelike.
    Temporal,
    /// Zero, or past-directed and within the discretisation tolerance of the cone.
    AlmostTemporal,
    Bad,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub checked: usize,
    pub temporal: usize,
    pub almost: usize,
    /// Grid nodes that fail, in increasing order.
    pub bad: Vec<usize>,
    /// Minimum of `-g(grad f, grad f)` over checked nodes.
    pub min_lorentz_sq: f64,
}

impl GradientReport {
    pub fn all_temporal(&self) -> bool {
        self.bad.is_empty() && self.almost == 0
    }

    pub fn all_almost_temporal(&self) -> bool {
        self.bad.is_empty()
    }
}

impl ScalarField {
    pub fn from_fn(st: &SampledSpacetime, f: impl Fn(usize) -> f64) -> Self {
        ScalarField {
            values: (0..st.len()).map(|n| if st.included[n] { f(n) } else { f64::NAN }).collect(),
        }
    }

    pub fn zeros(st: &SampledSpacetime) -> Self {
        Self::from_fn(st, |_| 0.0)
    }

    pub fn get(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { values: self.values.iter().map(|v| if v.is_nan() { *v } else { f(*v) }).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| !v.is_nan()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    /// Coordinate differential `(df/dt, df/dx)`: central differences where
    /// both neighbours exist, one-sided otherwise, periodic on circles.
    pub fn differential(&self, st: &SampledSpacetime, node: usize) -> Option<[f64; 2]> {
        let g = &st.grid;
        let f0 = self.values[node];
        if f0.is_nan() {
            return None;
        }
        let at = |dt: isize, dx: isize| g.shift(node, dt, dx).filter(|q| st.included[*q]).map(|q| self.values[q]);
        let diff = |plus: Option<f64>, minus: Option<f64>, h: f64| match (plus, minus) {
            (Some(p), Some(m)) => Some((p - m) / (2.0 * h)),
            (Some(p), None) => Some((p - f0) / h),
            (None, Some(m)) => Some((f0 - m) / h),
            (None, None) => None,
        };
        Some([diff(at(1, 0), at(-1, 0), g.h_t)?, diff(at(0, 1), at(0, -1), g.h_x)?])
    }

    /// `g(grad f, grad f)` via the inverse metric.
    pub fn gradient_sq(&self, st: &SampledSpacetime, node: usize) -> Option<f64> {
        let d = self.differential(st, node)?;
        Some(inverse_form(st, node, &d))
    }

    /// Nodes where the gradient is assessed: all four axis neighbours are
    /// included, so both differences are central. This skips the chart
    /// boundary and the rim of excised regions.
    pub fn interior_nodes(st: &SampledSpacetime) -> impl Iterator<Item = usize> + '_ {
        let g = &st.grid;
        (0..st.len()).filter(move |n| {
            st.included[*n]
                && !g.on_boundary(*n)
                && [(1, 0), (-1, 0), (0, 1), (0, -1)]
                    .iter()
                    .all(|(dt, dx)| g.shift(*n, *dt, *dx).is_some_and(|q| st.included[q]))
        })
    }

    pub fn classify_gradient(&self, st: &SampledSpacetime, node: usize, tol: f64) -> Option<(GradientClass, f64)> {
        let d = self.differential(st, node)?;
        let sq = inverse_form(st, node, &d);
        let euclid = d[0] * d[0] + d[1] * d[1];
        // grad f is past-directed iff df(X) > 0 for the future vector X
        let x = st.orientation[node];
        let dfx = d[0] * x[0] + d[1] * x[1];
        let zero = euclid.sqrt() <= 1e-14 * (1.0 + self.values[node].abs());
        let class = if zero {
            GradientClass::AlmostTemporal
        } else if dfx > 0.0 && sq < -tol * euclid {
            GradientClass::Temporal
        } else if dfx > 0.0 && sq <= tol * euclid {
            GradientClass::AlmostTemporal
        } else {
            GradientClass::Bad
        };
        Some((class, -sq))
    }

    /// Gradient verdicts over the interior with cone tolerance
    /// `tol = scale * (h_t + h_x)` relative to the Euclidean size of `df`.
    pub fn gradient_report(&self, st: &SampledSpacetime, tolerance_scale: f64) -> GradientReport {
        let tol = tolerance_scale * (st.grid.h_t + st.grid.h_x);
        let mut r = GradientReport { checked: 0, temporal: 0, almost: 0, bad: Vec::new(), min_lorentz_sq: f64::INFINITY };
        for n in Self::interior_nodes(st) {
            let Some((class, neg_sq)) = self.classify_gradient(st, n, tol) else { continue };
            r.checked += 1;
            r.min_lorentz_sq = r.min_lorentz_sq.min(neg_sq);
            match class {
                GradientClass::Temporal => r.temporal += 1,
                GradientClass::AlmostTemporal => r.almost += 1,
                GradientClass::Bad => r.bad.push(n),
            }
        }
        r
    }

    /// Minimum of `-g(grad f, grad f)` over the interior; steep means >= 1.
    pub fn steepness_margin(&self, st: &SampledSpacetime) -> f64 {
        Self::interior_nodes(st)
            .filter_map(|n| self.gradient_sq(st, n))
            .fold(f64::INFINITY, |m, s| m.min(-s))
    }

    /// Causal edges `p -> q` along which the field fails to increase strictly.
    pub fn increase_violations(&self, cg: &CausalGraph) -> Vec<(usize, usize)> {
        cg.edges().filter(|(p, q, _)| !(self.values[*q] > self.values[*p])).map(|(p, q, _)| (p, q)).collect()
    }

    /// Causal edges along which the field decreases.
    pub fn decrease_violations(&self, cg: &CausalGraph) -> Vec<(usize, usize)> {
        cg.edges().filter(|(p, q, _)| self.values[*q] < self.values[*p]).map(|(p, q, _)| (p, q)).collect()
    }

    /// `(i_t, i_x, t, x, value)` rows, header first.
    pub fn to_csv(&self, st: &SampledSpacetime) -> String {
        let mut s = String::from("i_t,i_x,t_coord,x_coord,value\n");
        for (n, v) in self.values.iter().enumerate() {
            let (i, j) = st.grid.index(n);
            let (t, x) = st.grid.coords(n);
            s.push_str(&format!("{i},{j},{t:.12e},{x:.12e},{v:.12e}\n"));
        }
        s
    }
}

fn inverse_form(st: &SampledSpacetime, node: usize, d: &[f64; 2]) -> f64 {
    inverse_pairing(st, node, d, d)
}

/// `g(grad u, grad v)` at a node from the coordinate differentials of `u`, `v`.
pub fn inverse_pairing(st: &SampledSpacetime, node: usize, du: &[f64; 2], dv: &[f64; 2]) -> f64 {
    let m = &st.metrics[node];
    let (a, b, c) = (m.entry(0, 0), m.entry(0, 1), m.entry(1, 1));
    let det = a * c - b * b;
    (c * du[0] * dv[0] - b * (du[0] * dv[1] + du[1] * dv[0]) + a * du[1] * dv[1]) / det
}

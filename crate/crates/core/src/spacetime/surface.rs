use super::{GroupAction, SampledSpacetime};
use crate::error::{Error, Result};

/// Slope margin below the light cone required of admissible surfaces.
pub const SPACELIKE_SLOPE_MARGIN: f64 = 0.05;

/// Graph `t = u(x)` over the spatial slice, piecewise linear between columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGraph {
    pub u: Vec<f64>,
}

impl SurfaceGraph {
    /// Constant-time surface `u = level`, which must lie strictly inside the chart.
    pub fn between(st: &SampledSpacetime, level: f64) -> Result<Self> {
        let (lo, hi) = (st.grid.t_lo, st.grid.t_hi());
        if !(level > lo && level < hi) {
            return Err(Error::Range { value: level, lo, hi });
        }
        Ok(SurfaceGraph { u: vec![level; st.grid.n_x] })
    }

    pub fn from_fn(st: &SampledSpacetime, f: impl Fn(f64) -> f64) -> Self {
        SurfaceGraph { u: (0..st.grid.n_x).map(|j| f(st.grid.x_coord(j))).collect() }
    }

    pub fn height(&self, column: usize) -> f64 {
        self.u[column]
    }

    /// Piecewise-linear value at a coordinate `x` (wrapped on circles).
    pub fn interpolate(&self, st: &SampledSpacetime, x: f64) -> f64 {
        let g = &st.grid;
        let mut s = (x - g.x_lo) / g.h_x;
        let n = g.n_x;
        if g.is_periodic() {
            s = s.rem_euclid(n as f64);
            let j = s.floor() as usize % n;
            let f = s - s.floor();
            (1.0 - f) * self.u[j] + f * self.u[(j + 1) % n]
        } else {
            let s = s.clamp(0.0, (n - 1) as f64);
            let j = (s.floor() as usize).min(n - 2);
            let f = s - j as f64;
            (1.0 - f) * self.u[j] + f * self.u[j + 1]
        }
    }

    /// Columns whose outgoing segment fails the spacelike-with-margin test.
    /// A segment with slope `s` is admitted when `B((s,1),(s,1)) / g_xx`
    /// exceeds `1 - (1 - margin)^2`, i.e. `|s| < 1 - margin` for conformally flat metrics.
    pub fn spacelike_violations(&self, st: &SampledSpacetime) -> Vec<usize> {
        let g = &st.grid;
        let segments = if g.is_periodic() { g.n_x } else { g.n_x - 1 };
        let need = 1.0 - (1.0 - SPACELIKE_SLOPE_MARGIN).powi(2);
        let mut bad = Vec::new();
        for j in 0..segments {
            let k = (j + 1) % g.n_x;
            let slope = (self.u[k] - self.u[j]) / g.h_x;
            let i = row_near(st, 0.5 * (self.u[j] + self.u[k]));
            let m = &st.metrics[g.node(i, j)];
            let v = [slope, 1.0];
            if m.apply(&v, &v) / m.entry(1, 1) <= need {
                bad.push(j);
            }
        }
        bad
    }

    pub fn check_spacelike(&self, st: &SampledSpacetime) -> Result<()> {
        match self.spacelike_violations(st).first() {
            None => Ok(()),
            Some(&j) => Err(Error::Invariant(format!("surface is not spacelike at column {j}"))),
        }
    }

    pub fn max_slope(&self, st: &SampledSpacetime) -> f64 {
        let g = &st.grid;
        let segments = if g.is_periodic() { g.n_x } else { g.n_x - 1 };
        (0..segments)
            .map(|j| ((self.u[(j + 1) % g.n_x] - self.u[j]) / g.h_x).abs())
            .fold(0.0, f64::max)
    }

    /// Signed coordinate-time offset of a node from the surface.
    pub fn offset(&self, st: &SampledSpacetime, node: usize) -> f64 {
        let (i, j) = st.grid.index(node);
        st.grid.t_coord(i) - self.u[j]
    }

    /// Invariance under every group element, column by column.
    pub fn is_invariant(&self, st: &SampledSpacetime, group: &GroupAction, tol: f64) -> bool {
        let g = &st.grid;
        group.elements.iter().all(|e| {
            (0..g.n_x).all(|j| {
                let img = g.index(e.apply(g.node(0, j))).1;
                (self.u[img] - self.u[j]).abs() <= tol
            })
        })
    }

    /// Surface shifted rigidly in time.
    pub fn shifted(&self, dt: f64) -> Self {
        SurfaceGraph { u: self.u.iter().map(|v| v + dt).collect() }
    }

    /// Symmetric Hausdorff distance between two graphs, computed over the
    /// columns (both are graphs over the same slice).
    pub fn vertical_distance(&self, other: &SurfaceGraph) -> f64 {
        self.u.iter().zip(&other.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn row_near(st: &SampledSpacetime, t: f64) -> usize {
    let g = &st.grid;
    (((t - g.t_lo) / g.h_t).round().max(0.0) as usize).min(g.n_t - 1)
}

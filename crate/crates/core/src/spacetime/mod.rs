//! Sampled model spacetimes on a product grid `[t_lo, t_hi] x slice`.
//!
//! Nodes are indexed row-major: `node = i_t * n_x + i_x`. Rows are time slices.

mod config;
mod group;
mod surface;

pub use config::{Family, ModelParams, ModelSpec, Slice};
pub use group::{Generator, GroupAction, GroupElement, GroupSpec};
pub use surface::{SurfaceGraph, SPACELIKE_SLOPE_MARGIN};

use evalexpr::{ContextWithMutableVariables, HashMapContext, Node, Value};

use crate::error::{Error, Result};
use crate::lorlin::{CausalClass, MetricTensor};

/// Topology of the spatial slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialTopology {
    Interval,
    /// Circle of the given node count; `x` is periodic with period `n_x * h_x`.
    Circle,
}

/// Product chart geometry. Pure index arithmetic, no metric data.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n_t: usize,
    pub n_x: usize,
    pub t_lo: f64,
    pub x_lo: f64,
    pub h_t: f64,
    pub h_x: f64,
    pub topology: SpatialTopology,
}

impl Grid {
    pub fn interval(n_t: usize, n_x: usize, t: [f64; 2], x: [f64; 2]) -> Result<Self> {
        Self::check_counts(n_t, n_x)?;
        let g = Grid {
            n_t,
            n_x,
            t_lo: t[0],
            x_lo: x[0],
            h_t: (t[1] - t[0]) / (n_t - 1) as f64,
            h_x: (x[1] - x[0]) / (n_x - 1) as f64,
            topology: SpatialTopology::Interval,
        };
        g.check_steps()?;
        Ok(g)
    }

    /// Circle of circumference `length`, starting at `x = 0`.
    pub fn circle(n_t: usize, n_x: usize, t: [f64; 2], length: f64) -> Result<Self> {
        Self::check_counts(n_t, n_x)?;
        let g = Grid {
            n_t,
            n_x,
            t_lo: t[0],
            x_lo: 0.0,
            h_t: (t[1] - t[0]) / (n_t - 1) as f64,
            h_x: length / n_x as f64,
            topology: SpatialTopology::Circle,
        };
        g.check_steps()?;
        Ok(g)
    }

    fn check_counts(n_t: usize, n_x: usize) -> Result<()> {
        if n_t < 3 || n_x < 3 {
            return Err(Error::config("resolution", format!("need >= 3 nodes per axis, got {n_t}x{n_x}")));
        }
        Ok(())
    }

    fn check_steps(&self) -> Result<()> {
        if !(self.h_t > 0.0 && self.h_x > 0.0) {
            return Err(Error::config("params", "chart ranges must be increasing"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_x
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, i_t: usize, i_x: usize) -> usize {
        i_t * self.n_x + i_x
    }

    pub fn index(&self, node: usize) -> (usize, usize) {
        (node / self.n_x, node % self.n_x)
    }

    pub fn t_hi(&self) -> f64 {
        self.t_lo + self.h_t * (self.n_t - 1) as f64
    }

    pub fn t_coord(&self, i_t: usize) -> f64 {
        self.t_lo + self.h_t * i_t as f64
    }

    pub fn x_coord(&self, i_x: usize) -> f64 {
        self.x_lo + self.h_x * i_x as f64
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.index(node);
        (self.t_coord(i), self.x_coord(j))
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == SpatialTopology::Circle
    }

    pub fn circumference(&self) -> Option<f64> {
        self.is_periodic().then(|| self.h_x * self.n_x as f64)
    }

    /// Column reached from `i_x` by an integer step, wrapping on circles.
    pub fn shift_x(&self, i_x: usize, dx: isize) -> Option<usize> {
        let j = i_x as isize + dx;
        match self.topology {
            SpatialTopology::Circle => Some(j.rem_euclid(self.n_x as isize) as usize),
            SpatialTopology::Interval => (0..self.n_x as isize).contains(&j).then_some(j as usize),
        }
    }

    pub fn shift(&self, node: usize, dt: isize, dx: isize) -> Option<usize> {
        let (i, j) = self.index(node);
        let ti = i as isize + dt;
        if !(0..self.n_t as isize).contains(&ti) {
            return None;
        }
        Some(self.node(ti as usize, self.shift_x(j, dx)?))
    }

    /// Signed spatial offset from column `a` to column `b` (shortest way round on circles).
    pub fn dx_between(&self, a: usize, b: usize) -> f64 {
        let d = b as isize - a as isize;
        let d = match self.topology {
            SpatialTopology::Interval => d,
            SpatialTopology::Circle => {
                let n = self.n_x as isize;
                let m = d.rem_euclid(n);
                if m > n / 2 { m - n } else { m }
            }
        };
        d as f64 * self.h_x
    }

    /// Whether the node lies on the outer ring of the chart (time rows always,
    /// spatial edges only for intervals).
    pub fn on_boundary(&self, node: usize) -> bool {
        let (i, j) = self.index(node);
        i == 0 || i + 1 == self.n_t || (!self.is_periodic() && (j == 0 || j + 1 == self.n_x))
    }
}

/// A grid of events with metric, time orientation and volume data per node.
#[derive(Debug, Clone)]
pub struct SampledSpacetime {
    pub grid: Grid,
    pub metrics: Vec<MetricTensor>,
    /// Future-pointing timelike vector per node.
    pub orientation: Vec<[f64; 2]>,
    /// `sqrt|det g|` times cell volume.
    pub volume_density: Vec<f64>,
    pub included: Vec<bool>,
    pub family: Family,
    /// Squared conformal factor per node when the metric is `omega^2 * eta`.
    pub warp_sq: Vec<f64>,
}

impl SampledSpacetime {
    /// Assemble and validate a spacetime from per-node data.
    pub fn from_parts(
        grid: Grid,
        metrics: Vec<MetricTensor>,
        orientation: Vec<[f64; 2]>,
        included: Vec<bool>,
        family: Family,
    ) -> Result<Self> {
        let n = grid.len();
        if metrics.len() != n || orientation.len() != n || included.len() != n {
            return Err(Error::Dimension { expected: n, got: metrics.len().min(orientation.len()).min(included.len()) });
        }
        let cell = grid.h_t * grid.h_x;
        let mut volume_density = Vec::with_capacity(n);
        let mut warp_sq = Vec::with_capacity(n);
        for (node, g) in metrics.iter().enumerate() {
            if g.dim() != 2 {
                return Err(Error::Construction { node: grid.index(node), message: "metric must be 2x2".into() });
            }
            if included[node] && g.classify_unchecked(&orientation[node]) != CausalClass::Timelike {
                return Err(Error::Construction {
                    node: grid.index(node),
                    message: "orientation vector is not timelike".into(),
                });
            }
            let det = g.entry(0, 0) * g.entry(1, 1) - g.entry(0, 1) * g.entry(1, 0);
            volume_density.push(det.abs().sqrt() * cell);
            warp_sq.push(-g.entry(0, 0));
        }
        Ok(SampledSpacetime { grid, metrics, orientation, volume_density, included, family, warp_sq })
    }

    pub fn build(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let [n_t, n_x] = spec.resolution;
        let p = &spec.params;
        let grid = match spec.family {
            Family::Minkowski2d | Family::CarvedMinkowski => {
                Grid::interval(n_t, n_x, p.t_range.unwrap_or([-1.0, 1.0]), p.x_range.unwrap_or([-1.0, 1.0]))?
            }
            Family::DiamondMinkowski => {
                let a = p.half_width.unwrap_or(1.0);
                Grid::interval(n_t, n_x, [-a, a], [-a, a])?
            }
            Family::CylinderProduct => {
                let l = p.circumference.unwrap_or(std::f64::consts::TAU);
                Grid::circle(n_t, n_x, p.t_range.unwrap_or(square_rows(n_t, n_x, l)), l)?
            }
            Family::ConformalWarp => match p.slice.unwrap_or(Slice::Circle) {
                Slice::Circle => {
                    let l = p.circumference.unwrap_or(std::f64::consts::TAU);
                    Grid::circle(n_t, n_x, p.t_range.unwrap_or(square_rows(n_t, n_x, l)), l)?
                }
                Slice::Interval => {
                    Grid::interval(n_t, n_x, p.t_range.unwrap_or([-1.0, 1.0]), p.x_range.unwrap_or([-1.0, 1.0]))?
                }
            },
        };

        let warp = match (&spec.family, &p.warp) {
            (Family::ConformalWarp, Some(expr)) => Some(WarpExpr::parse(expr, grid.circumference())?),
            (Family::ConformalWarp, None) => return Err(Error::config("params.warp", "conformal_warp needs a warp expression")),
            _ => None,
        };

        let n = grid.len();
        let mut metrics = Vec::with_capacity(n);
        let mut included = Vec::with_capacity(n);
        let tol = 1e-12;
        for node in 0..n {
            let (t, x) = grid.coords(node);
            let omega = match &warp {
                Some(w) => {
                    let o = w.eval(t, x)?;
                    if !(o > 0.0 && o.is_finite()) {
                        return Err(Error::Construction {
                            node: grid.index(node),
                            message: format!("warp factor {o} is not strictly positive"),
                        });
                    }
                    o
                }
                None => 1.0,
            };
            let o2 = omega * omega;
            let g = MetricTensor::diagonal(&[-o2, o2])
                .map_err(|e| Error::Construction { node: grid.index(node), message: e.to_string() })?;
            metrics.push(g);
            let inc = match spec.family {
                Family::DiamondMinkowski => t.abs() + x.abs() <= p.half_width.unwrap_or(1.0) + tol,
                // closed exclusion: the null boundary of J+(0) is removed too
                Family::CarvedMinkowski => t < x.abs() - tol,
                _ => true,
            };
            included.push(inc);
        }
        let orientation = vec![[1.0, 0.0]; n];
        Self::from_parts(grid, metrics, orientation, included, spec.family)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn included_count(&self) -> usize {
        self.included.iter().filter(|b| **b).count()
    }

    pub fn is_included(&self, node: usize) -> bool {
        self.included[node]
    }

    /// Time reversal `t -> t_lo + t_hi - t` of the chart; used to build the
    /// time-dual of past-directed constructions.
    pub fn mirror_node(&self, node: usize) -> usize {
        let (i, j) = self.grid.index(node);
        self.grid.node(self.grid.n_t - 1 - i, j)
    }

    /// The same chart read backwards in time: node `n` of the result carries the
    /// pulled-back data of `mirror_node(n)`, with the past cone declared future.
    pub fn time_reversed(&self) -> Result<Self> {
        let n = self.len();
        let mut metrics = Vec::with_capacity(n);
        let mut orientation = Vec::with_capacity(n);
        let mut included = Vec::with_capacity(n);
        for node in 0..n {
            let src = self.mirror_node(node);
            let g = &self.metrics[src];
            let c = g.components();
            metrics.push(MetricTensor::new(2, vec![c[0], -c[1], -c[2], c[3]])?);
            let x = self.orientation[src];
            orientation.push([x[0], -x[1]]);
            included.push(self.included[src]);
        }
        Self::from_parts(self.grid.clone(), metrics, orientation, included, self.family)
    }
}

/// Default time range of a circle chart: symmetric about 0 with `h_t = h_x`.
fn square_rows(n_t: usize, n_x: usize, circumference: f64) -> [f64; 2] {
    let half = 0.5 * (n_t - 1) as f64 * circumference / n_x as f64;
    [-half, half]
}

/// Conformal factor `omega(t, x)` given as an arithmetic expression.
struct WarpExpr {
    tree: Node,
    circumference: Option<f64>,
}

impl WarpExpr {
    fn parse(src: &str, circumference: Option<f64>) -> Result<Self> {
        let tree = evalexpr::build_operator_tree(src)
            .map_err(|e| Error::config("params.warp", format!("cannot parse `{src}`: {e}")))?;
        let w = WarpExpr { tree, circumference };
        w.eval(0.0, 0.0).map_err(|e| match e {
            Error::Construction { message, .. } => Error::config("params.warp", message),
            e => e,
        })?;
        Ok(w)
    }

    fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let mut ctx = HashMapContext::new();
        let set = |ctx: &mut HashMapContext, k: &str, v: f64| {
            ctx.set_value(k.into(), Value::Float(v)).expect("context accepts floats")
        };
        set(&mut ctx, "t", t);
        set(&mut ctx, "x", x);
        set(&mut ctx, "pi", std::f64::consts::PI);
        set(&mut ctx, "L", self.circumference.unwrap_or(0.0));
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Construction { node: (0, 0), message: format!("warp evaluation failed: {e}") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, n: usize) -> ModelSpec {
        ModelSpec { family, params: ModelParams::default(), resolution: [n, n] }
    }

    #[test]
    fn minkowski_11x11() {
        let st = SampledSpacetime::build(&spec(Family::Minkowski2d, 11)).unwrap();
        assert_eq!(st.len(), 121);
        assert_eq!(st.included_count(), 121);
        for g in &st.metrics {
            assert_eq!(g.components(), &[-1.0, 0.0, 0.0, 1.0]);
        }
        assert!((st.grid.h_t - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_warp_scales_metric() {
        let mut s = spec(Family::ConformalWarp, 5);
        s.params.warp = Some("2.0".into());
        let st = SampledSpacetime::build(&s).unwrap();
        for g in &st.metrics {
            assert_eq!(g.components(), &[-4.0, 0.0, 0.0, 4.0]);
        }
    }

    /// Exhaustive count of lattice points in the closed cone t >= |x| on a
    /// 21x21 grid over [-1, 1]^2 (h = 0.1).
    #[test]
    fn carved_minkowski_excludes_closed_cone() {
        let st = SampledSpacetime::build(&spec(Family::CarvedMinkowski, 21)).unwrap();
        let mut cone = 0;
        for i in 0..21i32 {
            for j in 0..21i32 {
                let (ti, xi) = (i - 10, j - 10);
                if ti >= xi.abs() {
                    cone += 1;
                }
            }
        }
        assert_eq!(cone, 121);
        assert_eq!(st.included_count(), 441 - cone);
    }

    #[test]
    fn diamond_includes_closed_diamond() {
        let st = SampledSpacetime::build(&spec(Family::DiamondMinkowski, 21)).unwrap();
        // |i| + |j| <= 10 on a 21x21 lattice: 2*10^2 + 2*10 + 1
        assert_eq!(st.included_count(), 221);
    }

    #[test]
    fn rejects_nonpositive_warp() {
        let mut s = spec(Family::ConformalWarp, 5);
        s.params.warp = Some("math::sin(x)".into());
        let err = SampledSpacetime::build(&s).unwrap_err();
        assert!(matches!(err, Error::Construction { .. }), "{err:?}");
    }

    #[test]
    fn circle_wraps() {
        let g = Grid::circle(5, 8, [0.0, 1.0], 8.0).unwrap();
        assert_eq!(g.shift_x(0, -1), Some(7));
        assert_eq!(g.shift_x(7, 2), Some(1));
        assert_eq!(g.dx_between(1, 7), -2.0);
        let gi = Grid::interval(5, 8, [0.0, 1.0], [0.0, 1.0]).unwrap();
        assert_eq!(gi.shift_x(0, -1), None);
    }
}

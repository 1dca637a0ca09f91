//! Volume-measure time functions `t-(x) = mu(J-(x))`, `t+(x) = -mu(J+(x))`
//! and their Cauchy combination `t = ln(-t- / t+)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::causal::{CausalGraph, Chain, ChainEnd};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spacetime::{SampledSpacetime, SurfaceGraph};

/// Normalised node weights (sum 1, positive on included nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMeasure {
    pub weights: Vec<f64>,
}

impl VolumeMeasure {
    /// Grid volume, optionally damped by `sech^2(t / t_scale)` for tall charts.
    pub fn new(st: &SampledSpacetime, damping: Option<f64>) -> Result<Self> {
        if let Some(s) = damping {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("geroch.damping", "t_scale must be positive"));
            }
        }
        let raw: Vec<f64> = (0..st.len())
            .map(|n| {
                if !st.included[n] {
                    return 0.0;
                }
                let w = st.volume_density[n];
                match damping {
                    Some(s) => {
                        let c = (st.grid.coords(n).0 / s).cosh();
                        w / (c * c)
                    }
                    None => w,
                }
            })
            .collect();
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0 && total.is_finite()) || raw.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Invariant("measure weights must be finite, non-negative, not all zero".into()));
        }
        Ok(VolumeMeasure { weights: raw.into_iter().map(|w| w / total).collect() })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Measure of a bit row over the graph's compact indices.
    pub fn of_bits(&self, cg: &CausalGraph, words: &[u64]) -> f64 {
        crate::causal::set_bits(words).map(|c| self.weights[cg.grid_node(c)]).sum()
    }
}

/// `(t-, t+)` with `t+ < 0 < t-` on included nodes.
pub fn geroch_pm(cg: &CausalGraph, mu: &VolumeMeasure) -> (ScalarField, ScalarField) {
    let n = cg.grid.len();
    let sums: Vec<(usize, f64, f64)> = cg
        .included_nodes()
        .par_iter()
        .map(|&p| (p, mu.of_bits(cg, cg.past_bits(p)), mu.of_bits(cg, cg.future_bits(p))))
        .collect();
    let mut tm = vec![f64::NAN; n];
    let mut tp = vec![f64::NAN; n];
    for (p, past, fut) in sums {
        tm[p] = past;
        tp[p] = -fut;
    }
    (ScalarField { values: tm }, ScalarField { values: tp })
}

/// `t = ln(-t- / t+)`.
pub fn geroch_cauchy(t_minus: &ScalarField, t_plus: &ScalarField) -> Result<ScalarField> {
    let mut out = Vec::with_capacity(t_minus.values.len());
    for (k, (a, b)) in t_minus.values.iter().zip(&t_plus.values).enumerate() {
        if a.is_nan() && b.is_nan() {
            out.push(f64::NAN);
            continue;
        }
        if !(*a > 0.0 && *b < 0.0) {
            return Err(Error::Invariant(format!("sign condition t+ < 0 < t- fails at node {k}: ({a}, {b})")));
        }
        out.push((-a / b).ln());
    }
    Ok(ScalarField { values: out })
}

/// Number of causal edges `p -> q` with `f(q) <= f(p)`.
pub fn verify_time_function(field: &ScalarField, cg: &CausalGraph) -> usize {
    field.increase_violations(cg).len()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSpan {
    pub start: usize,
    pub min: f64,
    pub max: f64,
    pub length: usize,
    /// Level the chain has to reach on both sides.
    pub threshold: f64,
    /// The chain leaves through a spatial edge of the chart and is not judged.
    pub exits_sideways: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyReport {
    pub threshold: f64,
    pub chains: Vec<ChainSpan>,
    /// Indices into `chains` of chains trapped inside `(-threshold, threshold)`.
    pub failures: Vec<usize>,
}

impl CauchyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Threshold used for a chart with `n_t` time rows: `ln(n_t) / 2`.
pub fn chart_threshold(st: &SampledSpacetime) -> f64 {
    0.5 * (st.grid.n_t as f64).ln()
}

/// Vertical maximal chains, one per column from its lowest included node.
pub fn column_chains(cg: &CausalGraph) -> Vec<Chain> {
    let g = &cg.grid;
    (0..g.n_x)
        .filter_map(|j| (0..g.n_t).map(|i| g.node(i, j)).find(|n| cg.contains(*n)))
        .map(|seed| cg.inextendible_chain(seed, 0))
        .collect()
}

/// Along every maximal column chain the field must reach both `-th` and
/// `th`, unless the chain leaves through a spatial edge. Short columns (at
/// diamond corners, beside holes) only get `th = min(threshold, ln(len) / 2)`,
/// the divergence a chain of their own length can show; chains of fewer
/// than 3 nodes are not judged.
pub fn verify_cauchy(field: &ScalarField, cg: &CausalGraph, threshold: f64) -> Result<CauchyReport> {
    if !(threshold > 0.0) {
        return Err(Error::Range { value: threshold, lo: 0.0, hi: f64::INFINITY });
    }
    let mut chains = Vec::new();
    let mut failures = Vec::new();
    for c in column_chains(cg) {
        let vals = c.nodes.iter().map(|n| field.values[*n]);
        let (min, max) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let sideways = c.past_end == ChainEnd::SpatialBoundary || c.future_end == ChainEnd::SpatialBoundary;
        let len = c.nodes.len();
        let th = threshold.min(0.5 * (len as f64).ln());
        if !sideways && len >= 3 && !(min <= -th && max >= th) {
            failures.push(chains.len());
        }
        chains.push(ChainSpan { start: c.nodes[0], min, max, length: len, threshold: th, exits_sideways: sideways });
    }
    Ok(CauchyReport { threshold, chains, failures })
}

/// Two vertical chains running into an excised region: the supremum of the
/// past measure along each, and their difference relative to the total.
#[derive(Debug, Clone, Serialize)]
pub struct NonCauchyWitness {
    pub columns: [usize; 2],
    pub sups: [f64; 2],
    pub relative_gap: f64,
    pub both_trapped: bool,
}

impl NonCauchyWitness {
    pub fn confirms(&self, min_gap: f64) -> bool {
        self.both_trapped && self.relative_gap > min_gap
    }
}

/// Compare the two column chains nearest `x_a` and `x_b`.
pub fn noncauchy_witness(cg: &CausalGraph, t_minus: &ScalarField, mu: &VolumeMeasure, x_a: f64, x_b: f64) -> NonCauchyWitness {
    let g = &cg.grid;
    let col = |x: f64| (((x - g.x_lo) / g.h_x).round().max(0.0) as usize).min(g.n_x - 1);
    let columns = [col(x_a), col(x_b)];
    let mut sups = [0.0; 2];
    let mut trapped = true;
    for (k, &j) in columns.iter().enumerate() {
        let seed = (0..g.n_t).map(|i| g.node(i, j)).find(|n| cg.contains(*n));
        let Some(seed) = seed else {
            trapped = false;
            continue;
        };
        let c = cg.inextendible_chain(seed, 0);
        trapped &= c.future_end == ChainEnd::Excision;
        sups[k] = c.nodes.iter().map(|n| t_minus.values[*n]).fold(f64::NEG_INFINITY, f64::max);
    }
    NonCauchyWitness { columns, sups, relative_gap: (sups[0] - sups[1]).abs() / mu.total(), both_trapped: trapped }
}

/// Level sets plus the orientation-field integral curves through them.
#[derive(Debug, Clone)]
pub struct Foliation {
    pub levels: Vec<f64>,
    pub surfaces: Vec<SurfaceGraph>,
    /// Each line: `(t, x)` per time row, labelled by its crossing column on the first level.
    pub flow_lines: Vec<(usize, Vec<(f64, f64)>)>,
}

/// Level sets by linear interpolation along time columns.
pub fn foliation_export(field: &ScalarField, st: &SampledSpacetime, levels: &[f64]) -> Result<Foliation> {
    let g = &st.grid;
    let (lo, hi) = field.range();
    let mut surfaces = Vec::new();
    for &level in levels {
        if !(level >= lo && level <= hi) {
            return Err(Error::Range { value: level, lo, hi });
        }
        let mut u = vec![f64::NAN; g.n_x];
        for (j, slot) in u.iter_mut().enumerate() {
            let col: Vec<(f64, f64)> = (0..g.n_t)
                .map(|i| (g.t_coord(i), field.values[g.node(i, j)]))
                .filter(|(_, v)| !v.is_nan())
                .collect();
            *slot = crossing(&col, level);
        }
        surfaces.push(SurfaceGraph { u });
    }
    let mut flow_lines = Vec::new();
    if let Some(first) = surfaces.first() {
        for (j, &t0) in first.u.iter().enumerate() {
            if t0.is_nan() {
                continue;
            }
            flow_lines.push((j, flow_line(st, t0, g.x_coord(j))));
        }
    }
    Ok(Foliation { levels: levels.to_vec(), surfaces, flow_lines })
}

fn crossing(col: &[(f64, f64)], level: f64) -> f64 {
    for w in col.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if v0 == level {
            return t0;
        }
        if (v0 - level) * (v1 - level) < 0.0 {
            return t0 + (level - v0) / (v1 - v0) * (t1 - t0);
        }
    }
    match col.last() {
        Some((t, v)) if *v == level => *t,
        _ => f64::NAN,
    }
}

/// Integrate `dx/dt = X^x / X^t` of the orientation field through `(t0, x0)`
/// with one Euler step per row, sampling the field at the nearest node.
fn flow_line(st: &SampledSpacetime, t0: f64, x0: f64) -> Vec<(f64, f64)> {
    let g = &st.grid;
    let nearest = |t: f64, x: f64| {
        let i = (((t - g.t_lo) / g.h_t).round().max(0.0) as usize).min(g.n_t - 1);
        let mut j = ((x - g.x_lo) / g.h_x).round();
        if g.is_periodic() {
            j = j.rem_euclid(g.n_x as f64);
        }
        g.node(i, (j.max(0.0) as usize).min(g.n_x - 1))
    };
    let slope = |t: f64, x: f64| {
        let v = st.orientation[nearest(t, x)];
        v[1] / v[0]
    };
    let mut pts = vec![(t0, x0)];
    let (mut t, mut x) = (t0, x0);
    while t + g.h_t <= g.t_hi() + 1e-12 {
        x += slope(t, x) * g.h_t;
        t += g.h_t;
        pts.push((t, x));
    }
    let (mut t, mut x) = (t0, x0);
    let mut back = Vec::new();
    while t - g.h_t >= g.t_lo - 1e-12 {
        x -= slope(t, x) * g.h_t;
        t -= g.h_t;
        back.push((t, x));
    }
    back.reverse();
    back.extend(pts);
    back
}

/// For each level: causal edges joining two nodes that both sit on the level
/// band, i.e. the nearest node to the crossing in their column.
pub fn level_band_edges(cg: &CausalGraph, st: &SampledSpacetime, surface: &SurfaceGraph) -> usize {
    let g = &st.grid;
    let mut band = vec![false; g.len()];
    for (j, &t) in surface.u.iter().enumerate() {
        if t.is_nan() {
            continue;
        }
        let i = (((t - g.t_lo) / g.h_t).round().max(0.0) as usize).min(g.n_t - 1);
        band[g.node(i, j)] = true;
    }
    cg.edges().filter(|(p, q, _)| band[*p] && band[*q]).count()
}

/// Largest jump of a field along an edge; shrinks under refinement for
/// continuous functions.
pub fn max_edge_jump(field: &ScalarField, cg: &CausalGraph) -> f64 {
    cg.edges().map(|(p, q, _)| (field.values[q] - field.values[p]).abs()).fold(0.0, f64::max)
}

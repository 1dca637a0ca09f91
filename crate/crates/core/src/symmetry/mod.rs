//! Group averaging, orbit acausality, and invariant Cauchy temporal
//! functions with prescribed level sets.

use serde::Serialize;

use crate::causal::CausalGraph;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geroch::{foliation_export, geroch_cauchy, geroch_pm, VolumeMeasure};
use crate::spacetime::{GroupAction, SampledSpacetime, SurfaceGraph};
use crate::steep::ramp::{plateau, psi};
use crate::steep::{adapted_temporal, nodes_below, restrict, steep_temporal, surface_nodes, AdaptInputs, SteepOptions};

pub const INVARIANCE_TOL: f64 = 1e-9;
/// Tolerance for a prescribed surface to count as group invariant.
const SURFACE_TOL: f64 = 1e-12;

/// Mean over the orbit of `node`. Orbit values are summed in sorted order,
/// so all points of one orbit get bit-identical means.
fn orbit_mean(values: &[f64], group: &GroupAction, node: usize) -> f64 {
    let mut v: Vec<f64> = group.elements.iter().map(|e| values[e.apply(node)]).collect();
    v.sort_by(f64::total_cmp);
    // constant orbits come back bit-for-bit, so averaging is idempotent
    if v[0] == v[v.len() - 1] {
        return v[0];
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// `w^G = (1/|G|) sum_g w o g`, renormalised.
pub fn average_measure(mu: &VolumeMeasure, group: &GroupAction) -> VolumeMeasure {
    let raw: Vec<f64> = (0..mu.weights.len()).map(|n| orbit_mean(&mu.weights, group, n)).collect();
    let total: f64 = raw.iter().sum();
    VolumeMeasure { weights: raw.into_iter().map(|w| w / total).collect() }
}

/// `f^G = (1/|G|) sum_g f o g`.
pub fn average_field(f: &ScalarField, group: &GroupAction) -> ScalarField {
    ScalarField { values: (0..f.values.len()).map(|n| orbit_mean(&f.values, group, n)).collect() }
}

/// `max |f(g x) - f(x)|` over included nodes and all elements.
pub fn invariance_deviation(st: &SampledSpacetime, f: &ScalarField, group: &GroupAction) -> f64 {
    let mut worst = 0.0_f64;
    for n in (0..st.len()).filter(|n| st.included[*n]) {
        for e in &group.elements {
            worst = worst.max((f.get(e.apply(n)) - f.get(n)).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrbitViolation {
    pub node: usize,
    /// Index into the group's element list.
    pub element: usize,
    pub image: usize,
}

/// Pairs `(p, g p)` with `g p != p` that are causally related.
pub fn check_orbit_acausal(cg: &CausalGraph, group: &GroupAction) -> Vec<OrbitViolation> {
    let mut out = Vec::new();
    for &n in cg.included_nodes() {
        for (k, e) in group.elements.iter().enumerate() {
            let image = e.apply(n);
            if image != n && cg.contains(image) && cg.causally_related(n, image) {
                out.push(OrbitViolation { node: n, element: k, image });
            }
        }
    }
    out
}

/// `(node, element)` pairs where `g(J+(p)) != J+(g p)` or `g(I+(p)) != I+(g p)`.
pub fn cone_equivariance_violations(cg: &CausalGraph, group: &GroupAction) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &n in cg.included_nodes() {
        for (k, e) in group.elements.iter().enumerate() {
            let image = e.apply(n);
            let same = |cone: &dyn Fn(usize) -> Vec<usize>| {
                let mut pushed: Vec<usize> = cone(n).into_iter().map(|q| e.apply(q)).collect();
                pushed.sort_unstable();
                let mut direct = cone(image);
                direct.sort_unstable();
                pushed == direct
            };
            if !same(&|p| cg.causal_future(p)) || !same(&|p| cg.chronological_future(p)) {
                out.push((n, k));
            }
        }
    }
    out
}

/// Surfaces `S+-` with per-column bounds: `T > f+` on `S+`, `T < f-` on `S-`.
#[derive(Debug, Clone)]
pub struct SurfaceBounds {
    pub s_plus: SurfaceGraph,
    pub s_minus: SurfaceGraph,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
}

/// Prescribed level sets `(S_i, a_i)`, in increasing order. Bounds are
/// required as soon as one surface is given.
#[derive(Debug, Clone, Default)]
pub struct InvariantRequest {
    pub surfaces: Vec<(SurfaceGraph, f64)>,
    pub bounds: Option<SurfaceBounds>,
    pub steep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub order: usize,
    pub isometric: bool,
    pub steep: bool,
    pub invariance_deviation: f64,
    pub margin: f64,
    /// Margin before averaging; only defined for a single synthesis.
    pub pre_average_margin: Option<f64>,
    pub tol_h: f64,
    /// Interior nodes whose gradient is not past-directed timelike.
    pub temporal_failures: usize,
    pub increase_violations: usize,
    /// Per prescribed surface: vertical distance of the level set `T = a_i` to `S_i`.
    pub level_distances: Vec<f64>,
    pub growth_failures: usize,
    pub surface_failures: usize,
}

impl InvariantReport {
    pub fn passed(&self, h_t: f64) -> bool {
        let steep_ok = !self.steep || self.margin >= 1.0 - self.tol_h;
        let averaging_ok = match (self.isometric, self.pre_average_margin) {
            (true, Some(pre)) => self.margin >= pre - self.tol_h,
            _ => true,
        };
        self.invariance_deviation <= INVARIANCE_TOL
            && steep_ok
            && averaging_ok
            && self.temporal_failures == 0
            && self.increase_violations == 0
            && self.level_distances.iter().all(|d| *d <= 2.0 * h_t)
            && self.growth_failures == 0
            && self.surface_failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct InvariantOutcome {
    pub field: ScalarField,
    pub report: InvariantReport,
}

/// Geroch time of the sub-chart kept by `keep`, measured with `mu`; NaN elsewhere.
fn side_reference(st: &SampledSpacetime, stencil: usize, mu: &VolumeMeasure, keep: impl Fn(usize) -> bool) -> Result<ScalarField> {
    let sub = restrict(st, keep)?;
    let cg = CausalGraph::build(&sub, stencil)?;
    let w = VolumeMeasure::from_raw((0..st.len()).map(|n| if sub.included[n] { mu.weights[n] } else { 0.0 }).collect())?;
    let (tm, tp) = geroch_pm(&cg, &w);
    let t = geroch_cauchy(&tm, &tp)?;
    Ok(ScalarField::from_fn(st, |n| if sub.included[n] { t.get(n) } else { f64::NAN }))
}

fn check_request(st: &SampledSpacetime, cg: &CausalGraph, group: &GroupAction, req: &InvariantRequest) -> Result<()> {
    if req.steep && !group.is_isometric {
        return Err(Error::Input(
            "steepness requires an isometric group; this action is only conformal and does not preserve g(v, v)".into(),
        ));
    }
    if req.steep && req.surfaces.len() > 1 {
        return Err(Error::Input("steepness is available for at most one prescribed surface".into()));
    }
    for (k, (s, _)) in req.surfaces.iter().enumerate() {
        s.check_spacelike(st)?;
        if !s.is_invariant(st, group, SURFACE_TOL) {
            return Err(Error::Input(format!("surface {k} is not invariant under the group")));
        }
    }
    let chrono = |lo: &SurfaceGraph, hi: &SurfaceGraph| -> Result<bool> {
        let up = surface_nodes(st, hi)?;
        let down = nodes_below(st, lo)?;
        Ok(lo.u.iter().zip(&hi.u).all(|(a, b)| a < b) && up.iter().all(|s| down.iter().any(|d| cg.ll(*d, *s))))
    };
    for (k, w) in req.surfaces.windows(2).enumerate() {
        if !(w[1].1 > w[0].1) {
            return Err(Error::Input(format!("levels must increase: a_{} = {} after {}", k + 1, w[1].1, w[0].1)));
        }
        if !chrono(&w[0].0, &w[1].0)? {
            return Err(Error::Input(format!("surface {} is not in the chronological future of surface {k}", k + 1)));
        }
    }
    if let (Some((first, _)), Some((last, _))) = (req.surfaces.first(), req.surfaces.last()) {
        let b = req.bounds.as_ref().ok_or_else(|| Error::Input("S+ / S- bounds are required with prescribed surfaces".into()))?;
        if b.f_plus.len() != st.grid.n_x || b.f_minus.len() != st.grid.n_x {
            return Err(Error::Input("bound values need one entry per column".into()));
        }
        if !chrono(&b.s_minus, first)? || !chrono(last, &b.s_plus)? {
            return Err(Error::Input("S- and S+ must lie strictly below and above the prescribed surfaces".into()));
        }
    }
    Ok(())
}

/// Invariant Cauchy temporal function `T` with `T = a_i` on `S_i`:
/// the measure is averaged, each surface gets an adapted function built on
/// invariant Geroch references, the results are averaged and glued
/// `T <- phi(T) + psi(t_{n+1})` with a plateau ramp `phi` and a ramp `psi`.
/// Without surfaces the averaged steep function of the averaged Geroch time
/// is returned.
pub fn invariant_temporal(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    group: &GroupAction,
    req: &InvariantRequest,
    opts: &SteepOptions,
) -> Result<InvariantOutcome> {
    check_request(st, cg, group, req)?;
    let g = &st.grid;
    let m = req.surfaces.len();
    let mu = average_measure(&VolumeMeasure::new(st, None)?, group);
    let eps = 1e-9 * g.h_t;

    let mut adapted = Vec::with_capacity(m);
    let (mut above_top, mut below_bottom) = (None, None);
    for (k, (s, a)) in req.surfaces.iter().enumerate() {
        let b = req.bounds.as_ref().expect("checked");
        let t_plus = side_reference(st, cg.stencil, &mu, |n| s.offset(st, n) > eps)?;
        let t_minus = side_reference(st, cg.stencil, &mu, |n| s.offset(st, n) < -eps)?;
        let (s_minus, f_minus) = match k {
            0 => (b.s_minus.clone(), b.f_minus.iter().map(|f| f - a).collect()),
            _ => (req.surfaces[k - 1].0.clone(), vec![-(a - req.surfaces[k - 1].1); g.n_x]),
        };
        let (s_plus, f_plus) = if k + 1 == m {
            (b.s_plus.clone(), b.f_plus.iter().map(|f| f - a).collect())
        } else {
            (req.surfaces[k + 1].0.clone(), vec![req.surfaces[k + 1].1 - a; g.n_x])
        };
        let inp = AdaptInputs {
            s,
            s_plus: &s_plus,
            s_minus: &s_minus,
            f_plus: &f_plus,
            f_minus: &f_minus,
            t_plus: Some(&t_plus),
            t_minus: Some(&t_minus),
        };
        let t3 = adapted_temporal(st, cg, &inp, opts)?.field;
        if k == 0 {
            below_bottom = Some(t_minus);
        }
        if k + 1 == m {
            above_top = Some(t_plus);
        }
        adapted.push(t3);
    }

    let (field, pre_average_margin) = if m == 0 {
        let (tm, tp) = geroch_pm(cg, &mu);
        let t_ref = geroch_cauchy(&tm, &tp)?;
        let raw = steep_temporal(st, cg, &t_ref, opts)?.field;
        (average_field(&raw, group), Some(raw.steepness_margin(st)))
    } else {
        let pre = (m == 1).then(|| adapted[0].steepness_margin(st));
        let averaged: Vec<ScalarField> = adapted.iter().map(|f| average_field(f, group)).collect();
        (glue(st, &req.surfaces, &averaged)?, pre)
    };

    let grad = field.gradient_report(st, opts.tolerance_scale);
    let mut level_distances = Vec::with_capacity(m);
    for (s, a) in &req.surfaces {
        let level = foliation_export(&field, st, &[*a])?.surfaces.remove(0);
        level_distances.push(level.vertical_distance(s));
    }
    let (mut growth_failures, mut surface_failures) = (0, 0);
    if let (Some(b), Some(up), Some(down)) = (&req.bounds, &above_top, &below_bottom) {
        let (a_lo, a_hi) = (req.surfaces[0].1, req.surfaces[m - 1].1);
        for n in (0..st.len()).filter(|n| st.included[*n]) {
            let v = field.get(n);
            if !up.get(n).is_nan() {
                growth_failures += usize::from(!(v - a_hi > up.get(n) / 2.0 - 2.0));
            }
            if !down.get(n).is_nan() {
                growth_failures += usize::from(!(v - a_lo < down.get(n) / 2.0 + 2.0));
            }
        }
        for (j, s) in surface_nodes(st, &b.s_plus)?.into_iter().enumerate() {
            surface_failures += usize::from(!(field.get(s) > b.f_plus[j]));
        }
        for (j, s) in nodes_below(st, &b.s_minus)?.into_iter().enumerate() {
            surface_failures += usize::from(!(field.get(s) < b.f_minus[j]));
        }
    }
    let report = InvariantReport {
        order: group.order(),
        isometric: group.is_isometric,
        steep: req.steep,
        invariance_deviation: invariance_deviation(st, &field, group),
        margin: field.steepness_margin(st),
        pre_average_margin,
        tol_h: opts.tolerance_scale * (g.h_t + g.h_x),
        temporal_failures: grad.bad.len()
            + ScalarField::interior_nodes(st)
                .filter(|n| grad.bad.binary_search(n).is_err() && field.gradient_sq(st, *n).is_some_and(|s| s >= 0.0))
                .count(),
        increase_violations: field.increase_violations(cg).len(),
        level_distances,
        growth_failures,
        surface_failures,
    };
    if !report.passed(g.h_t) {
        return Err(Error::synthesis("invariant_temporal", format!("post-check failed: {report:?}")));
    }
    Ok(InvariantOutcome { field, report })
}

/// Inductive gluing. With `d = a_{n+1} - a_n`, `phi` is the identity below
/// `a_n + d/4` and the constant `a_n + d/2` above `y1`; `psi(t_{n+1} + d/2)`
/// vanishes where `t_{n+1} <= -d/2` and equals `t_{n+1} + d/2` where
/// `t_{n+1} >= 0`. `y1` is placed between the largest value of `t_n` on the
/// region where `psi` is flat and its smallest value on `S_{n+1}`, so the
/// two ramps are never flat together.
fn glue(st: &SampledSpacetime, surfaces: &[(SurfaceGraph, f64)], parts: &[ScalarField]) -> Result<ScalarField> {
    let a0 = surfaces[0].1;
    let mut total = parts[0].map(|v| v + a0);
    for n in 0..parts.len() - 1 {
        let (a, d) = (surfaces[n].1, surfaces[n + 1].1 - surfaces[n].1);
        let (cur, next) = (&parts[n], &parts[n + 1]);
        let flat_max = (0..st.len())
            .filter(|q| st.included[*q] && next.get(*q) <= -d / 2.0)
            .fold(f64::NEG_INFINITY, |m, q| m.max(cur.get(q)));
        let on_next = surface_nodes(st, &surfaces[n + 1].0)?
            .into_iter()
            .fold(f64::INFINITY, |m, q| m.min(cur.get(q)));
        let y1 = 0.5 * (flat_max.max(d / 4.0) + on_next);
        if !(flat_max < on_next && y1 > d / 4.0) {
            return Err(Error::synthesis(
                "glue",
                format!("surfaces {n} and {} leave no room for the plateau ({flat_max:.3} vs {on_next:.3})", n + 1),
            ));
        }
        total = ScalarField {
            values: total
                .values
                .iter()
                .zip(&next.values)
                .map(|(t, s)| plateau(*t, a + d / 4.0, a + d / 2.0, a + y1) + psi(s + d / 2.0, d / 2.0))
                .collect(),
        };
    }
    Ok(total)
}

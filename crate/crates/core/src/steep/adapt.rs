use rayon::prelude::*;

use super::band::{steep_temporal, BandSpec, ConeFunction, SteepOptions};
use super::cone::{cover_nodes, surface_nodes};
use super::ramp::{phi_plus, ramp, smoothstep};
use super::steep_cone_function;
use crate::causal::CausalGraph;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geroch::{foliation_export, geroch_cauchy, geroch_pm, VolumeMeasure};
use crate::spacetime::{SampledSpacetime, SurfaceGraph};

/// The same chart with only the nodes accepted by `keep`.
pub fn restrict(st: &SampledSpacetime, keep: impl Fn(usize) -> bool) -> Result<SampledSpacetime> {
    let included = (0..st.len()).map(|n| st.included[n] && keep(n)).collect();
    SampledSpacetime::from_parts(st.grid.clone(), st.metrics.clone(), st.orientation.clone(), included, st.family)
}

/// Surface as seen on the time-reversed chart.
pub fn mirror_surface(st: &SampledSpacetime, s: &SurfaceGraph) -> SurfaceGraph {
    let (lo, hi) = (st.grid.t_lo, st.grid.t_hi());
    SurfaceGraph { u: s.u.iter().map(|u| lo + hi - u).collect() }
}

fn pull_back(st: &SampledSpacetime, f: &ScalarField, sign: f64) -> ScalarField {
    ScalarField { values: (0..st.len()).map(|n| sign * f.get(st.mirror_node(n))).collect() }
}

/// Signed proper time to `S` along the node's time column: the integral of
/// `sqrt(-g_tt)` from the surface, positive above it.
pub fn signed_distance(st: &SampledSpacetime, s: &SurfaceGraph) -> ScalarField {
    let g = &st.grid;
    let mut out = vec![f64::NAN; st.len()];
    for j in 0..g.n_x {
        let w: Vec<f64> = (0..g.n_t).map(|i| (-st.metrics[g.node(i, j)].entry(0, 0)).sqrt()).collect();
        let mut acc = vec![0.0; g.n_t];
        for i in 1..g.n_t {
            acc[i] = acc[i - 1] + 0.5 * g.h_t * (w[i - 1] + w[i]);
        }
        let r = ((s.u[j] - g.t_lo) / g.h_t).clamp(0.0, (g.n_t - 1) as f64);
        let k = (r.floor() as usize).min(g.n_t - 2);
        let frac = r - k as f64;
        let wu = w[k] + frac * (w[k + 1] - w[k]);
        let at_surface = acc[k] + 0.5 * frac * g.h_t * (w[k] + wu);
        for i in 0..g.n_t {
            let n = g.node(i, j);
            if st.included[n] {
                out[n] = acc[i] - at_surface;
            }
        }
    }
    ScalarField { values: out }
}

/// Lift above prescribed data: `t1 + sum_i c_i phi_i(t^i)` over a fat cone covering of
/// `surface`, each `t^i` a steep cone function reparametrised to be zero
/// below `m_i - 1` and of slope one above `m_i = min t^i` on its footprint,
/// with `c_i` chosen so the sum exceeds `f` there.
#[allow(clippy::too_many_arguments)]
pub fn lift_over_surface(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    t1: &ScalarField,
    surface: &[usize],
    f: &[f64],
    t_ref: &ScalarField,
    depth: usize,
    opts: &SteepOptions,
) -> Result<ScalarField> {
    let cov = cover_nodes(st, cg, surface, depth)?;
    let open = BandSpec { level: 0.0, lower: Vec::new(), upper: None };
    let cones: Vec<ConeFunction> = cov
        .pairs
        .par_iter()
        .map(|(inner, apex)| steep_cone_function(st, cg, t_ref, &open, *inner, *apex, opts))
        .collect::<Result<_>>()?;
    let mut out = t1.clone();
    for cf in &cones {
        let foot: Vec<(usize, usize)> =
            surface.iter().copied().enumerate().filter(|(_, s)| cg.leq(cf.apex, *s)).collect();
        let mut m = foot.iter().map(|(_, s)| cf.field.get(*s)).fold(f64::INFINITY, f64::min);
        let mut ti = cf.field.clone();
        if m < 2.0 {
            ti.scale(2.0 / m);
            m = 2.0;
        }
        let si = ti.map(|v| ramp(v, m - 1.0, 1.0));
        let need = foot.iter().map(|(j, s)| (f[*j] - t1.get(*s)) / si.get(*s)).fold(f64::NEG_INFINITY, f64::max);
        if need >= 0.0 {
            out.add_scaled(((need / 0.5).floor() + 1.0) * 0.5, &si);
        }
    }
    Ok(out)
}

/// Outcome checks of [`steep_bounded`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedReport {
    pub plus_margin: f64,
    pub minus_margin: f64,
    pub tol_h: f64,
    /// Surface nodes where `t2+ > f+` or `t2- < f-` fails.
    pub surface_failures: usize,
    /// Nodes beyond `S+` (resp. before `S-`) failing the growth bound.
    pub growth_failures: usize,
    pub increase_violations: usize,
}

impl BoundedReport {
    pub fn passed(&self) -> bool {
        self.plus_margin.min(self.minus_margin) >= 1.0 - self.tol_h
            && self.surface_failures == 0
            && self.growth_failures == 0
            && self.increase_violations == 0
    }
}

/// Nodes at or below `S`, one per column, on the forward chart.
pub fn nodes_below(st: &SampledSpacetime, s: &SurfaceGraph) -> Result<Vec<usize>> {
    Ok(surface_nodes(st, &mirror_surface(st, s))?.into_iter().map(|n| st.mirror_node(n)).collect())
}

/// Steep Cauchy temporal functions `t2+` above `f+` on `S+` and `t2-` below
/// `f-` on `S-`, with `t2+ > t/2 - 1` on `J+(S+)` and `t2- < t/2 + 1` on `J-(S-)`.
#[allow(clippy::too_many_arguments)]
pub fn steep_bounded(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    s_plus: &SurfaceGraph,
    s_minus: &SurfaceGraph,
    f_plus: &[f64],
    f_minus: &[f64],
    t_ref: &ScalarField,
    opts: &SteepOptions,
) -> Result<(ScalarField, ScalarField, BoundedReport)> {
    let up = surface_nodes(st, s_plus)?;
    let down = nodes_below(st, s_minus)?;
    if let Some(s) = up.iter().find(|s| !down.iter().any(|d| cg.ll(*d, **s))) {
        return Err(Error::Input(format!("S+ is not in the chronological future of S- at {:?}", st.grid.index(*s))));
    }
    let t1 = steep_temporal(st, cg, t_ref, opts)?.field;
    let plus = lift_over_surface(st, cg, &t1, &up, f_plus, t_ref, opts.band_rows, opts)?;

    let rev = st.time_reversed()?;
    let rev_cg = CausalGraph::build(&rev, cg.stencil)?;
    let neg_f: Vec<f64> = f_minus.iter().map(|v| -v).collect();
    let rev_surface = surface_nodes(&rev, &mirror_surface(st, s_minus))?;
    let minus_rev = lift_over_surface(
        &rev,
        &rev_cg,
        &pull_back(st, &t1, -1.0),
        &rev_surface,
        &neg_f,
        &pull_back(st, t_ref, -1.0),
        opts.band_rows,
        opts,
    )?;
    let minus = pull_back(st, &minus_rev, -1.0);

    let g = &st.grid;
    let mut surface_failures = 0;
    for (j, s) in up.iter().enumerate() {
        surface_failures += usize::from(!(plus.get(*s) > f_plus[j]));
    }
    for (j, s) in down.iter().enumerate() {
        surface_failures += usize::from(!(minus.get(*s) < f_minus[j]));
    }
    let mut growth_failures = 0;
    for n in (0..st.len()).filter(|n| st.included[*n]) {
        let (i, j) = g.index(n);
        let t = t_ref.get(n);
        if i >= g.index(up[j]).0 {
            growth_failures += usize::from(!(plus.get(n) > t / 2.0 - 1.0));
        }
        if i <= g.index(down[j]).0 {
            growth_failures += usize::from(!(minus.get(n) < t / 2.0 + 1.0));
        }
    }
    let report = BoundedReport {
        plus_margin: plus.steepness_margin(st),
        minus_margin: minus.steepness_margin(st),
        tol_h: opts.tolerance_scale * (g.h_t + g.h_x),
        surface_failures,
        growth_failures,
        increase_violations: plus.increase_violations(cg).len() + minus.increase_violations(cg).len(),
    };
    if !report.passed() {
        return Err(Error::synthesis("steep_bounded", format!("post-check failed: {report:?}")));
    }
    Ok((plus, minus, report))
}

/// Collar around `S` on which the interpolating function theta lives:
/// `theta+` rises over `-width <= delta <= 0`, `theta-` over `0 <= delta <= width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collar {
    /// Scale applied to the signed distance inside the theta formula.
    pub kappa: f64,
    pub width: f64,
}

impl Collar {
    /// `kappa` makes theta steep on `S` (its gradient there is `kappa/2`
    /// times that of delta); `kappa * width < 1` keeps `kappa delta + 1 > 0`
    /// wherever `theta+` is nonzero.
    pub fn fit(st: &SampledSpacetime, delta: &ScalarField) -> Result<Self> {
        let g = &st.grid;
        let near = ScalarField::interior_nodes(st).filter(|n| delta.get(*n).abs() <= 2.0 * g.h_t);
        let m = near.filter_map(|n| delta.gradient_sq(st, n)).fold(f64::INFINITY, |m, s| m.min(-s));
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Input("signed distance of S is not timelike near S".into()));
        }
        let kappa = 2.1 / m.sqrt();
        let width = 0.8 / kappa;
        if width < 4.0 * g.h_t {
            return Err(Error::Refinement(format!(
                "collar of width {width:.4} around S spans fewer than four time rows"
            )));
        }
        Ok(Collar { kappa, width })
    }
}

/// `(theta+, theta-, theta)` from the signed distance.
pub fn theta_fields(delta: &ScalarField, collar: &Collar) -> (ScalarField, ScalarField, ScalarField) {
    let w = collar.width;
    let tp = delta.map(|d| smoothstep((d + w) / w));
    let tm = delta.map(|d| smoothstep(d / w) - 1.0);
    let theta = ScalarField {
        values: delta
            .values
            .iter()
            .zip(tp.values.iter().zip(&tm.values))
            .map(|(d, (p, m))| {
                if d.is_nan() {
                    f64::NAN
                } else if *p == 0.0 {
                    -1.0
                } else {
                    let a = (collar.kappa * d + 1.0) * p;
                    2.0 * a / (a - m) - 1.0
                }
            })
            .collect(),
    };
    (tp, tm, theta)
}

/// Inputs of [`adapted_temporal`]; `f+`/`f-` are per-column values on `S+`/`S-`.
#[derive(Debug, Clone)]
pub struct AdaptInputs<'a> {
    pub s: &'a SurfaceGraph,
    pub s_plus: &'a SurfaceGraph,
    pub s_minus: &'a SurfaceGraph,
    pub f_plus: &'a [f64],
    pub f_minus: &'a [f64],
    /// Cauchy time functions on `I+(S)` and `I-(S)`; Geroch functions of
    /// the respective sub-charts when absent.
    pub t_plus: Option<&'a ScalarField>,
    pub t_minus: Option<&'a ScalarField>,
}

struct Side {
    s: ScalarField,
    z: ScalarField,
    t_ref: ScalarField,
}

/// Rows between two surfaces, minimum over columns.
fn row_gap(st: &SampledSpacetime, lo: &[usize], hi: &[usize]) -> usize {
    lo.iter().zip(hi).map(|(a, b)| st.grid.index(*b).0.saturating_sub(st.grid.index(*a).0)).min().unwrap_or(0)
}

/// `s+ = phi+(t+)` and `Z+ = phi+(T+)` on the nodes strictly above `S`.
#[allow(clippy::too_many_arguments)]
fn upper_side(
    st: &SampledSpacetime,
    stencil: usize,
    s: &SurfaceGraph,
    inner: &SurfaceGraph,
    outer: &SurfaceGraph,
    f_outer: &[f64],
    t_ref: Option<&ScalarField>,
    opts: &SteepOptions,
) -> Result<Side> {
    let eps = 1e-9 * st.grid.h_t;
    let sub = restrict(st, |n| s.offset(st, n) > eps)?;
    let cg = CausalGraph::build(&sub, stencil)?;
    let t_ref = match t_ref {
        Some(t) => ScalarField::from_fn(&sub, |n| t.get(n)),
        None => {
            let mu = VolumeMeasure::new(&sub, None)?;
            let (tm, tp) = geroch_pm(&cg, &mu);
            geroch_cauchy(&tm, &tp)?
        }
    };
    let t1 = steep_temporal(&sub, &cg, &t_ref, opts)?.field;
    let first = surface_nodes(&sub, &SurfaceGraph { u: s.u.clone() })?;
    let lift = |surf: &SurfaceGraph, f: &[f64]| -> Result<ScalarField> {
        let nodes = surface_nodes(&sub, surf)?;
        let room = row_gap(&sub, &first, &nodes);
        if room < 2 {
            return Err(Error::Refinement("too few rows between S and a collar surface for cone apexes".into()));
        }
        lift_over_surface(&sub, &cg, &t1, &nodes, f, &t_ref, opts.band_rows.min(room - 1), opts)
    };
    let ones = vec![1.0; st.grid.n_x];
    let small = lift(inner, &ones)?;
    let above_one: Vec<f64> = f_outer.iter().map(|v| v.max(1.0)).collect();
    let big = lift(outer, &above_one)?;
    let extend = |f: &ScalarField| {
        ScalarField::from_fn(st, |n| if sub.included[n] { phi_plus(f.get(n)) } else { 0.0 })
    };
    let t_full = ScalarField::from_fn(st, |n| if sub.included[n] { t_ref.get(n) } else { f64::NAN });
    Ok(Side { s: extend(&small), z: extend(&big), t_ref: t_full })
}

/// Checks on the assembled `t3`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptReport {
    /// `max |t3|` on `S`, evaluated at the surface points.
    pub surface_max_abs: f64,
    /// Vertical distance between the extracted zero level and `S`.
    pub level_distance: f64,
    pub margin: f64,
    pub tol_h: f64,
    /// Nodes beyond the collar where theta is not exactly `+-1`.
    pub plateau_failures: usize,
    /// Nodes failing `+-t3 > +-t+-/2 - 2`.
    pub growth_failures: usize,
    /// Surface nodes failing `+-t3 > +-f+-` on `S+-`.
    pub surface_failures: usize,
    pub increase_violations: usize,
}

impl AdaptReport {
    pub fn passed(&self, h_t: f64) -> bool {
        self.surface_max_abs <= 1e-6
            && self.level_distance <= 2.0 * h_t
            && self.margin >= 1.0 - self.tol_h
            && self.plateau_failures == 0
            && self.growth_failures == 0
            && self.surface_failures == 0
            && self.increase_violations == 0
    }
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub field: ScalarField,
    pub theta: ScalarField,
    pub delta: ScalarField,
    pub collar: Collar,
    pub report: AdaptReport,
}

/// `t3` at the points of `S` (one per column): theta vanishes there exactly,
/// the outer parts are interpolated along the column.
fn on_surface(st: &SampledSpacetime, outer: &ScalarField, s: &SurfaceGraph) -> Vec<f64> {
    let g = &st.grid;
    (0..g.n_x)
        .map(|j| {
            let r = ((s.u[j] - g.t_lo) / g.h_t).clamp(0.0, (g.n_t - 1) as f64);
            let k = (r.floor() as usize).min(g.n_t - 2);
            let f = r - k as f64;
            let (a, b) = (outer.get(g.node(k, j)), outer.get(g.node(k + 1, j)));
            if f == 0.0 { a } else { (1.0 - f) * a + f * b }
        })
        .collect()
}

/// Steep Cauchy temporal `t3` with `t3 = 0` on `S`:
/// `t3 = Z- + s- + theta + s+ + Z+`.
pub fn adapted_temporal(st: &SampledSpacetime, cg: &CausalGraph, inp: &AdaptInputs, opts: &SteepOptions) -> Result<AdaptOutcome> {
    let g = &st.grid;
    inp.s.check_spacelike(st)?;
    for j in 0..g.n_x {
        if !(inp.s_minus.u[j] < inp.s.u[j] && inp.s.u[j] < inp.s_plus.u[j]) {
            return Err(Error::Input(format!("surfaces are not ordered S- < S < S+ at column {j}")));
        }
    }
    let delta = signed_distance(st, inp.s);
    let collar = Collar::fit(st, &delta)?;
    let (_, _, theta) = theta_fields(&delta, &collar);
    let level = |d: f64| -> Result<SurfaceGraph> {
        Ok(foliation_export(&delta, st, &[d])?.surfaces.remove(0))
    };
    let reach = 0.75 * collar.width;

    let up = upper_side(st, cg.stencil, inp.s, &level(reach)?, inp.s_plus, inp.f_plus, inp.t_plus, opts)?;
    let rev = st.time_reversed()?;
    let neg_f: Vec<f64> = inp.f_minus.iter().map(|v| -v).collect();
    let rev_t = inp.t_minus.map(|t| pull_back(st, t, -1.0));
    let down_rev = upper_side(
        &rev,
        cg.stencil,
        &mirror_surface(st, inp.s),
        &mirror_surface(st, &level(-reach)?),
        &mirror_surface(st, inp.s_minus),
        &neg_f,
        rev_t.as_ref(),
        opts,
    )?;
    let (s_minus, z_minus) = (pull_back(st, &down_rev.s, -1.0), pull_back(st, &down_rev.z, -1.0));
    let t_minus = pull_back(st, &down_rev.t_ref, -1.0);

    let mut outer = z_minus.clone();
    for part in [&s_minus, &up.s, &up.z] {
        outer.add_scaled(1.0, part);
    }
    let mut field = outer.clone();
    field.add_scaled(1.0, &theta);

    let surface_max_abs = on_surface(st, &outer, inp.s).into_iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let zero = foliation_export(&field, st, &[0.0])?.surfaces.remove(0);
    let level_distance = zero.vertical_distance(inp.s);
    let mut plateau_failures = 0;
    let mut growth_failures = 0;
    for n in (0..st.len()).filter(|n| st.included[*n]) {
        let d = delta.get(n);
        if d >= collar.width {
            plateau_failures += usize::from(theta.get(n) != 1.0);
        } else if d <= -collar.width {
            plateau_failures += usize::from(theta.get(n) != -1.0);
        }
        let (tp, tm, v) = (up.t_ref.get(n), t_minus.get(n), field.get(n));
        if !tp.is_nan() {
            growth_failures += usize::from(!(v > tp / 2.0 - 2.0));
        }
        if !tm.is_nan() {
            growth_failures += usize::from(!(-v > -tm / 2.0 - 2.0));
        }
    }
    let mut surface_failures = 0;
    for (j, s) in surface_nodes(st, inp.s_plus)?.into_iter().enumerate() {
        surface_failures += usize::from(!(field.get(s) > inp.f_plus[j]));
    }
    for (j, s) in nodes_below(st, inp.s_minus)?.into_iter().enumerate() {
        surface_failures += usize::from(!(field.get(s) < inp.f_minus[j]));
    }
    let report = AdaptReport {
        surface_max_abs,
        level_distance,
        margin: field.steepness_margin(st),
        tol_h: opts.tolerance_scale * (g.h_t + g.h_x),
        plateau_failures,
        growth_failures,
        surface_failures,
        increase_violations: field.increase_violations(cg).len(),
    };
    if !report.passed(g.h_t) {
        return Err(Error::synthesis("adapted_temporal", format!("post-check failed: {report:?}")));
    }
    Ok(AdaptOutcome { field, theta, delta, collar, report })
}

use std::fmt::Write as _;

use rayon::prelude::*;

use super::cone::{cone_interval, cover_nodes, pick_constant, ConeBump, FatConeCovering};
use super::ramp::cutoff;
use crate::causal::CausalGraph;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spacetime::SampledSpacetime;

/// A band is never escalated beyond this factor over the band below it.
pub const ESCALATION_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteepOptions {
    /// Apex depth below a level surface, in rows; bands thinner than twice
    /// this are merged into the terminal band.
    pub band_rows: usize,
    pub tolerance_scale: f64,
}

impl Default for SteepOptions {
    fn default() -> Self {
        SteepOptions { band_rows: 4, tolerance_scale: 1.0 }
    }
}

/// Rows, per column, of the first node with `t_ref >= level`; `None` when
/// some column never gets there.
pub fn level_rows(st: &SampledSpacetime, t_ref: &ScalarField, level: f64) -> Option<Vec<usize>> {
    let g = &st.grid;
    (0..g.n_x)
        .map(|j| (0..g.n_t).find(|i| t_ref.get(g.node(*i, j)) >= level))
        .collect()
}

/// One integer band `a <= t_ref <= a + 1` of the reference time.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub level: f64,
    /// Rows of `S_a`.
    pub lower: Vec<usize>,
    /// Rows of `S_{a+1}`; `None` for the terminal band, whose cones run to
    /// the top of the chart without a cutoff.
    pub upper: Option<Vec<usize>>,
}

impl BandSpec {
    pub fn is_terminal(&self) -> bool {
        self.upper.is_none()
    }

    fn below_upper(&self, st: &SampledSpacetime, q: usize) -> bool {
        let (i, j) = st.grid.index(q);
        self.upper.as_ref().is_none_or(|u| i <= u[j])
    }

    fn lower_nodes(&self, st: &SampledSpacetime) -> Vec<usize> {
        self.lower.iter().enumerate().map(|(j, i)| st.grid.node(*i, j)).collect()
    }

    /// Partition multiplier: 1 up to `a + 3/2`, 0 from `a + 2` on.
    fn cut(&self, t: f64) -> f64 {
        if self.is_terminal() {
            1.0
        } else {
            cutoff(t, self.level + 1.5, self.level + 2.0)
        }
    }
}

/// Bands `a = 0, 1, ...` until the chart runs out; the last one is terminal.
pub fn plan_bands(st: &SampledSpacetime, t_ref: &ScalarField, band_rows: usize) -> Result<Vec<BandSpec>> {
    let mut bands = Vec::new();
    let mut a = 0.0;
    loop {
        let lower = level_rows(st, t_ref, a).ok_or_else(|| {
            Error::synthesis("band planning", format!("level {a} of the reference time is not a full surface"))
        })?;
        let upper = level_rows(st, t_ref, a + 1.0);
        let thick = upper
            .as_ref()
            .map(|u| u.iter().zip(&lower).map(|(hi, lo)| hi.saturating_sub(*lo)).min().unwrap_or(0))
            .unwrap_or(0);
        let regular = thick >= 2 * band_rows && level_rows(st, t_ref, a + 2.0).is_some();
        if regular {
            bands.push(BandSpec { level: a, lower, upper });
            a += 1.0;
        } else {
            bands.push(BandSpec { level: a, lower, upper: None });
            return Ok(bands);
        }
    }
}

/// A steep forward cone function together with its sub-band constants.
#[derive(Debug, Clone)]
pub struct ConeFunction {
    pub inner: usize,
    pub apex: usize,
    pub field: ScalarField,
    pub constants: Vec<f64>,
}

fn on_upper(band: &BandSpec, st: &SampledSpacetime, q: usize) -> bool {
    let (i, j) = st.grid.index(q);
    band.upper.as_ref().is_some_and(|u| u[j] == i)
}

/// Steep forward cone function for `inner << apex` below `S_a`. Row by row
/// through `J(apex, S_{a+1})` a bump of the inner apex, tuned to that row, is
/// added with a constant from [`pick_constant`]; the sum is lifted above 1
/// on `S_{a+1}` and cut off in the reference time before `S_{a+2}`.
pub fn steep_cone_function(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    t_ref: &ScalarField,
    band: &BandSpec,
    inner: usize,
    apex: usize,
    opts: &SteepOptions,
) -> Result<ConeFunction> {
    let g = &st.grid;
    let eta = cone_interval(st, cg, inner);
    let (ip, _) = g.index(apex);
    let region: Vec<usize> = cg.causal_future(apex).into_iter().filter(|q| band.below_upper(st, *q)).collect();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for &q in &region {
        let k = g.index(q).0 - ip;
        if rows.len() <= k {
            rows.resize(k + 1, Vec::new());
        }
        rows[k].push(q);
    }
    let mut interior_mask = vec![false; st.len()];
    ScalarField::interior_nodes(st).for_each(|q| interior_mask[q] = true);
    let interior = |q: &usize| interior_mask[*q];
    let mut f = ScalarField::zeros(st);
    let mut constants = Vec::new();
    for row in rows.iter().filter(|r| !r.is_empty()) {
        let sigma = row.iter().map(|q| eta[*q]).fold(f64::INFINITY, f64::min).sqrt();
        let bump = ConeBump::new(st, &eta, inner, sigma);
        let k: Vec<usize> = row.iter().copied().filter(interior).collect();
        let c = pick_constant(st, &f, &bump.field, &k)?;
        f.add_scaled(c, &bump.field);
        constants.push(c);
    }
    let on_top: Vec<usize> = region.iter().copied().filter(|q| on_upper(band, st, *q)).collect();
    let low = on_top.iter().map(|q| f.get(*q)).fold(f64::INFINITY, f64::min);
    if low.is_finite() && low <= 1.0 {
        f.scale(1.01 / low);
    }
    let f = ScalarField { values: f.values.iter().zip(&t_ref.values).map(|(v, t)| v * band.cut(*t)).collect() };

    // the four defining properties, re-checked on the final field
    let fail = |clause: &str, q: usize| {
        Err(Error::synthesis(
            "steep_cone_function",
            format!("clause {clause} fails at node {:?} (band {}, apex {:?})", g.index(q), band.level, g.index(apex)),
        ))
    };
    let future_of_inner = cg.causal_future(inner);
    let mut in_support = vec![false; st.len()];
    future_of_inner.iter().for_each(|q| in_support[*q] = true);
    for q in 0..st.len() {
        let v = f.get(q);
        if v != 0.0 && !v.is_nan() && (!in_support[q] || (!band.is_terminal() && t_ref.get(q) >= band.level + 2.0)) {
            return fail("1 (support)", q);
        }
    }
    if let Some(q) = on_top.iter().copied().find(|q| !(f.get(*q) > 1.0)) {
        return fail("2 (value on the next surface)", q);
    }
    let tol = opts.tolerance_scale * (g.h_t + g.h_x);
    for q in ScalarField::interior_nodes(st) {
        if f.get(q) != 0.0 && band.below_upper(st, q) {
            if let Some((crate::field::GradientClass::Bad, _)) = f.classify_gradient(st, q, tol) {
                return fail("3 (past-directed gradient)", q);
            }
        }
    }
    for q in region.iter().copied().filter(interior) {
        if let Some(sq) = f.gradient_sq(st, q) {
            if !(-sq > 1.0) {
                return fail("4 (steepness)", q);
            }
        }
    }
    Ok(ConeFunction { inner, apex, field: f, constants })
}

/// Per-band record of the synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct BandTrace {
    pub level: f64,
    pub terminal: bool,
    pub cones: usize,
    pub max_overlap: usize,
    pub min_constant: f64,
    pub max_constant: f64,
    /// Factor applied on top of `|a| + 2`; it compounds from band to band
    /// because each band must dominate the cutoff of the one below.
    pub escalation: f64,
    /// Smallest steepness of the running sum on the band.
    pub margin: f64,
}

/// `h_a = (|a| + 2) sum_i h_{a, i}` over a fat cone covering of `S_a`,
/// escalated until `base + h_a` is steep and strictly increasing on the band
/// (and, for the terminal band, exceeds `floor(t_ref) + 1` above `S_{a+1}`).
pub fn globalize(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    t_ref: &ScalarField,
    band: &BandSpec,
    covering: &FatConeCovering,
    base: Option<(&ScalarField, f64)>,
    opts: &SteepOptions,
) -> Result<(ScalarField, BandTrace)> {
    let pieces: Vec<ConeFunction> = covering
        .pairs
        .par_iter()
        .map(|(inner, apex)| steep_cone_function(st, cg, t_ref, band, *inner, *apex, opts))
        .collect::<Result<_>>()?;
    let mut h = ScalarField::zeros(st);
    for p in &pieces {
        h.add_scaled(1.0, &p.field);
    }
    h.scale(band.level.abs() + 2.0);
    let zero = ScalarField::zeros(st);
    let (base, base_escalation) = base.unwrap_or((&zero, 1.0));

    let a = band.level;
    let in_band = |t: f64| t >= a && (band.is_terminal() || t <= a + 1.0);
    let region: Vec<usize> = ScalarField::interior_nodes(st).filter(|n| in_band(t_ref.get(*n))).collect();
    let edges: Vec<(usize, usize)> = cg.edges().filter(|(p, _, _)| in_band(t_ref.get(*p))).map(|(p, q, _)| (p, q)).collect();
    let bound: Vec<usize> = if band.is_terminal() {
        (0..st.len()).filter(|n| t_ref.get(*n) >= a + 1.0).collect()
    } else {
        Vec::new()
    };
    let check = |lambda: f64| -> (bool, f64) {
        let mut sum = base.clone();
        sum.add_scaled(lambda, &h);
        let margin = region.iter().filter_map(|n| sum.gradient_sq(st, *n)).fold(f64::INFINITY, |m, s| m.min(-s));
        let ok = margin > 1.0
            && edges.iter().all(|(p, q)| sum.get(*q) > sum.get(*p))
            && bound.iter().all(|n| sum.get(*n) > t_ref.get(*n).floor() + 1.0);
        (ok, margin)
    };
    let mut lambda = 1.0;
    let margin = loop {
        let (ok, margin) = check(lambda);
        if ok {
            break margin;
        }
        lambda *= 2.0;
        if lambda > ESCALATION_CAP * base_escalation {
            let mut sum = base.clone();
            sum.add_scaled(lambda, &h);
            let worst = region
                .iter()
                .copied()
                .min_by(|p, q| {
                    let m = |n: usize| -sum.gradient_sq(st, n).unwrap_or(f64::NEG_INFINITY);
                    m(*p).total_cmp(&m(*q))
                })
                .map(|n| st.grid.index(n));
            return Err(Error::synthesis(
                format!("globalize band {a}"),
                format!("escalation cap exceeded (margin {margin:.4} at node {worst:?})"),
            ));
        }
    };
    h.scale(lambda);
    let constants = pieces.iter().flat_map(|p| p.constants.iter().copied());
    let (lo, hi) = constants.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), c| (l.min(c), u.max(c)));
    let trace = BandTrace {
        level: a,
        terminal: band.is_terminal(),
        cones: covering.len(),
        max_overlap: covering.max_overlap(),
        min_constant: lo,
        max_constant: hi,
        escalation: lambda,
        margin,
    };
    Ok((h, trace))
}

/// `t+ = sum_a h_a` over all bands of the reference time.
pub fn forward_sum(
    st: &SampledSpacetime,
    cg: &CausalGraph,
    t_ref: &ScalarField,
    opts: &SteepOptions,
) -> Result<(ScalarField, Vec<BandTrace>)> {
    let mut total = ScalarField::zeros(st);
    let mut traces: Vec<BandTrace> = Vec::new();
    for band in plan_bands(st, t_ref, opts.band_rows)? {
        let covering = cover_nodes(st, cg, &band.lower_nodes(st), opts.band_rows)?;
        let prior = traces.last().map_or(1.0, |t| t.escalation);
        let (h, trace) = globalize(st, cg, t_ref, &band, &covering, Some((&total, prior)), opts)?;
        total.add_scaled(1.0, &h);
        traces.push(trace);
    }
    Ok((total, traces))
}

/// Bands of the future part and of the time-dual past part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthesisTrace {
    pub future: Vec<BandTrace>,
    pub past: Vec<BandTrace>,
}

impl SynthesisTrace {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, bands) in [("future", &self.future), ("past", &self.past)] {
            for b in bands {
                let _ = writeln!(
                    s,
                    "band {name} a={} terminal={} cones={} overlap={} constants=[{}, {}] escalation={} margin={:.6}",
                    b.level, b.terminal, b.cones, b.max_overlap, b.min_constant, b.max_constant, b.escalation, b.margin
                );
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteepReport {
    pub margin: f64,
    pub tol_h: f64,
    pub increase_violations: usize,
    /// Nodes with `t_ref >= 1` checked for `t_1 > floor(t_ref) + 1`.
    pub band_bound_checked: usize,
    pub band_bound_failures: usize,
    /// Nodes violating `|t_1| > |t_ref| / 2 - 1`.
    pub growth_failures: usize,
}

impl SteepReport {
    pub fn passed(&self) -> bool {
        self.margin >= 1.0 - self.tol_h
            && self.increase_violations == 0
            && self.band_bound_failures == 0
            && self.growth_failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct SteepOutcome {
    pub field: ScalarField,
    pub trace: SynthesisTrace,
    pub report: SteepReport,
}

pub fn check_steep(st: &SampledSpacetime, cg: &CausalGraph, t1: &ScalarField, t_ref: &ScalarField, scale: f64) -> SteepReport {
    let mut checked = 0;
    let mut failures = 0;
    let mut growth = 0;
    for n in 0..st.len() {
        let (t, v) = (t_ref.get(n), t1.get(n));
        if t.is_nan() {
            continue;
        }
        if t >= 1.0 {
            checked += 1;
            failures += usize::from(!(v > t.floor() + 1.0));
        }
        growth += usize::from(!(v.abs() > t.abs() / 2.0 - 1.0));
    }
    SteepReport {
        margin: t1.steepness_margin(st),
        tol_h: scale * (st.grid.h_t + st.grid.h_x),
        increase_violations: t1.increase_violations(cg).len(),
        band_bound_checked: checked,
        band_bound_failures: failures,
        growth_failures: growth,
    }
}

/// Steep Cauchy temporal function `t_1 = t_1^+ - t_1^-` from a reference
/// Cauchy time function; `t_1^-` is the same construction run on the
/// time-reversed chart.
pub fn steep_temporal(st: &SampledSpacetime, cg: &CausalGraph, t_ref: &ScalarField, opts: &SteepOptions) -> Result<SteepOutcome> {
    let bad = t_ref.increase_violations(cg).len();
    if bad > 0 {
        return Err(Error::Input(format!("reference time fails to increase along {bad} causal edges")));
    }
    let (plus, future) = forward_sum(st, cg, t_ref, opts)?;
    let rev = st.time_reversed()?;
    let rev_cg = CausalGraph::build(&rev, cg.stencil)?;
    let rev_ref = ScalarField { values: (0..st.len()).map(|n| -t_ref.get(st.mirror_node(n))).collect() };
    let (minus_rev, past) = forward_sum(&rev, &rev_cg, &rev_ref, opts)?;
    let field = ScalarField {
        values: (0..st.len()).map(|n| plus.get(n) - minus_rev.get(st.mirror_node(n))).collect(),
    };
    let report = check_steep(st, cg, &field, t_ref, opts.tolerance_scale);
    if !report.passed() {
        return Err(Error::synthesis(
            "steep_temporal",
            format!(
                "post-check failed: margin {:.4} (need {:.4}), {} increase violations, {} band-bound and {} growth failures",
                report.margin,
                1.0 - report.tol_h,
                report.increase_violations,
                report.band_bound_failures,
                report.growth_failures
            ),
        ));
    }
    Ok(SteepOutcome { field, trace: SynthesisTrace { future, past }, report })
}

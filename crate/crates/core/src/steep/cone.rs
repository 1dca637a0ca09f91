use crate::causal::CausalGraph;
use crate::error::{Error, Result};
use crate::field::{inverse_pairing, ScalarField};
use crate::spacetime::{SampledSpacetime, SurfaceGraph};

/// Grid on which [`pick_constant`] rounds its root up.
pub const CONSTANT_STEP: f64 = 0.5;

/// Whether every included metric is `omega^2 (-dt^2 + dx^2)` up to roundoff.
/// Then squared time separations can be taken in closed form in the
/// conformal frame, where they are exact.
pub fn conformally_flat(st: &SampledSpacetime) -> bool {
    (0..st.len()).filter(|n| st.included[*n]).all(|n| {
        let m = &st.metrics[n];
        let scale = m.null_tolerance();
        m.entry(0, 1).abs() <= scale && (m.entry(0, 0) + m.entry(1, 1)).abs() <= scale
    })
}

/// Squared time separation `eta(p, q) > 0` from `apex` to every node of its
/// graph future, 0 elsewhere (including the null boundary of the cone).
pub fn cone_interval(st: &SampledSpacetime, cg: &CausalGraph, apex: usize) -> Vec<f64> {
    let g = &st.grid;
    let mut eta = vec![0.0; st.len()];
    let (ip, jp) = g.index(apex);
    if conformally_flat(st) {
        for q in cg.causal_future(apex) {
            let (i, j) = g.index(q);
            let dt = (i - ip) as f64 * g.h_t;
            let dx = g.dx_between(jp, j);
            eta[q] = (dt * dt - dx * dx).max(0.0);
        }
    } else {
        for (q, tau) in cg.time_separation_from(apex).into_iter().enumerate() {
            eta[q] = tau * tau;
        }
    }
    eta
}

/// Smooth bump `exp(-sigma^2 / eta)` of a cone interval: positive inside the
/// open cone, vanishing to all orders at its boundary.
#[derive(Debug, Clone)]
pub struct ConeBump {
    /// Apex the interval is measured from.
    pub inner: usize,
    pub sigma: f64,
    pub field: ScalarField,
}

impl ConeBump {
    pub fn new(st: &SampledSpacetime, eta: &[f64], inner: usize, sigma: f64) -> Self {
        let s2 = sigma * sigma;
        let field = ScalarField::from_fn(st, |q| if eta[q] > 0.0 { (-s2 / eta[q]).exp() } else { 0.0 });
        ConeBump { inner, sigma, field }
    }
}

/// Smallest `c >= 1` on a grid of [`CONSTANT_STEP`] with
/// `g(grad(f + c tau), grad(f + c tau)) < -1` on every node of `k`.
/// Per node this is the largest root of `A c^2 + 2 B c + C - 1 = 0` with
/// `A = -g(grad tau, grad tau)`, `B = -g(grad f, grad tau)`, `C = -g(grad f, grad f)`.
pub fn pick_constant(st: &SampledSpacetime, f: &ScalarField, tau: &ScalarField, k: &[usize]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for &n in k {
        let (Some(df), Some(dt)) = (f.differential(st, n), tau.differential(st, n)) else { continue };
        let a = -inverse_pairing(st, n, &dt, &dt);
        let x = st.orientation[n];
        if !(a > 0.0) || dt[0] * x[0] + dt[1] * x[1] <= 0.0 {
            return Err(Error::Precondition {
                node: st.grid.index(n),
                message: format!("gradient of tau is not past-timelike (g = {:.3e})", -a),
            });
        }
        let b = -inverse_pairing(st, n, &df, &dt);
        let c = -inverse_pairing(st, n, &df, &df);
        let disc = b * b - a * (c - 1.0);
        if disc >= 0.0 {
            worst = worst.max((-b + disc.sqrt()) / a);
        }
    }
    let stepped = ((worst / CONSTANT_STEP).floor() + 1.0) * CONSTANT_STEP;
    Ok(if stepped.is_finite() { stepped.max(1.0) } else { 1.0 })
}

/// Pairs `(p'_i, p_i)` whose chronological futures both cover a surface.
#[derive(Debug, Clone, PartialEq)]
pub struct FatConeCovering {
    /// `(inner, apex)`, in placement order.
    pub pairs: Vec<(usize, usize)>,
    /// One node per column, the discrete surface being covered.
    pub surface: Vec<usize>,
    /// Per surface node: how many `I+(p_i)` contain it.
    pub multiplicity: Vec<usize>,
    /// Per surface node: how many `I+(p'_i)` contain it.
    pub inner_multiplicity: Vec<usize>,
}

impl FatConeCovering {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn covers(&self) -> bool {
        self.multiplicity.iter().chain(&self.inner_multiplicity).all(|m| *m >= 1)
    }

    pub fn max_overlap(&self) -> usize {
        self.multiplicity.iter().copied().max().unwrap_or(0)
    }
}

/// First node in every column at or above the graph `t = u(x)`.
pub fn surface_nodes(st: &SampledSpacetime, s: &SurfaceGraph) -> Result<Vec<usize>> {
    let g = &st.grid;
    (0..g.n_x)
        .map(|j| {
            let i = ((s.u[j] - g.t_lo) / g.h_t - 1e-9).ceil().max(0.0) as usize;
            (i..g.n_t)
                .map(|i| g.node(i, j))
                .find(|n| st.included[*n])
                .ok_or_else(|| Error::config("surface", format!("column {j} has no node above the surface")))
        })
        .collect()
}

/// Cover a surface given in coordinates, with apexes `depth` below it.
pub fn fat_cone_covering(st: &SampledSpacetime, cg: &CausalGraph, s: &SurfaceGraph, depth: f64) -> Result<FatConeCovering> {
    let rows = ((depth / st.grid.h_t) + 1e-9).floor().max(1.0) as usize;
    cover_nodes(st, cg, &surface_nodes(st, s)?, rows)
}

/// Greedy sweep over the columns: the leftmost uncovered surface node `s`
/// gets an apex `depth` rows below it, shifted right so that `s` sits on the
/// left rim of its chronological future; the inner apex is one row lower.
pub fn cover_nodes(st: &SampledSpacetime, cg: &CausalGraph, surface: &[usize], depth: usize) -> Result<FatConeCovering> {
    let g = &st.grid;
    let mut covered = vec![false; surface.len()];
    let mut pairs = Vec::new();
    for k in 0..surface.len() {
        if covered[k] {
            continue;
        }
        let (i, j) = g.index(surface[k]);
        let out = || Error::config("depth", format!("cone apex below surface column {j} falls outside the chart"));
        if i < depth + 1 {
            return Err(out());
        }
        let col = match g.shift_x(j, depth as isize - 1) {
            Some(c) => c,
            None => g.n_x - 1,
        };
        let apex = g.node(i - depth, col);
        let inner = g.node(i - depth - 1, col);
        if !st.included[apex] || !st.included[inner] || !cg.ll(inner, apex) {
            return Err(out());
        }
        if !cg.ll(apex, surface[k]) {
            return Err(Error::config("depth", format!("surface column {j} escapes its own cone")));
        }
        for (m, s) in surface.iter().enumerate() {
            covered[m] |= cg.ll(apex, *s);
        }
        pairs.push((inner, apex));
    }
    let count = |pick: fn(&(usize, usize)) -> usize| -> Vec<usize> {
        surface.iter().map(|s| pairs.iter().filter(|pr| cg.ll(pick(pr), *s)).count()).collect()
    };
    let multiplicity = count(|p| p.1);
    let inner_multiplicity = count(|p| p.0);
    Ok(FatConeCovering { pairs, surface: surface.to_vec(), multiplicity, inner_multiplicity })
}

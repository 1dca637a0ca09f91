//! Finite groups of exact grid symmetries acting conformally on the metric.

use serde::{Deserialize, Serialize};

use super::{SampledSpacetime, SpatialTopology};
use crate::error::{Error, Result};

const CONFORMAL_RESIDUAL_TOL: f64 = 1e-9;

/// Requested group: cyclic rotations of order `rotations`, optionally joined
/// with the reflection `x -> -x` (dihedral when both are present).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    #[serde(default)]
    pub rotations: Option<usize>,
    #[serde(default)]
    pub reflection: bool,
}

impl GroupSpec {
    pub fn rotation(k: usize) -> Self {
        GroupSpec { rotations: Some(k), reflection: false }
    }

    pub fn reflection() -> Self {
        GroupSpec { rotations: None, reflection: true }
    }
}

/// Affine column map `x -> shift + x` or `x -> shift - x` (in node units).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Generator {
    pub reflect: bool,
    pub shift: isize,
}

impl Generator {
    pub const IDENTITY: Generator = Generator { reflect: false, shift: 0 };

    /// `self` after `other`.
    fn compose(self, other: Generator, n_x: isize) -> Generator {
        let shift = if self.reflect { self.shift - other.shift } else { self.shift + other.shift };
        Generator { reflect: self.reflect ^ other.reflect, shift: shift.rem_euclid(n_x) }
    }

    fn column(self, j: usize, n_x: usize) -> usize {
        let n = n_x as isize;
        let j = j as isize;
        let y = if self.reflect { self.shift - j } else { self.shift + j };
        y.rem_euclid(n) as usize
    }
}

#[derive(Debug, Clone)]
pub struct GroupElement {
    pub label: String,
    pub generator: Option<Generator>,
    /// Image node of every grid node.
    pub map: Vec<usize>,
    /// Spatial Jacobian sign (`-1` for reflections); the time direction is kept.
    pub jacobian_x: f64,
    /// Per-node `Omega^2` with `phi^* g = Omega^2 g`.
    pub conformal_sq: Vec<f64>,
}

impl GroupElement {
    pub fn apply(&self, node: usize) -> usize {
        self.map[node]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(k, m)| *m == k)
    }
}

#[derive(Debug, Clone)]
pub struct GroupAction {
    pub elements: Vec<GroupElement>,
    pub is_isometric: bool,
    pub preserves_time_orientation: bool,
}

impl GroupAction {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn trivial(st: &SampledSpacetime) -> Self {
        let n = st.len();
        GroupAction {
            elements: vec![GroupElement {
                label: "id".into(),
                generator: Some(Generator::IDENTITY),
                map: (0..n).collect(),
                jacobian_x: 1.0,
                conformal_sq: vec![1.0; n],
            }],
            is_isometric: true,
            preserves_time_orientation: true,
        }
    }

    pub fn build(st: &SampledSpacetime, spec: &GroupSpec) -> Result<Self> {
        let grid = &st.grid;
        let n_x = grid.n_x as isize;
        let mut gens = vec![Generator::IDENTITY];
        if let Some(k) = spec.rotations {
            if k == 0 {
                return Err(Error::config("group.rotations", "rotation order must be >= 1"));
            }
            if k > 1 {
                if grid.topology != SpatialTopology::Circle {
                    return Err(Error::config("group.rotations", "rotations need a circle slice"));
                }
                if grid.n_x % k != 0 {
                    return Err(Error::config(
                        "group.rotations",
                        format!("spatial node count {} not divisible by {k}", grid.n_x),
                    ));
                }
                let step = (grid.n_x / k) as isize;
                gens.extend((1..k as isize).map(|m| Generator { reflect: false, shift: m * step }));
            }
        }
        if spec.reflection {
            // x -> -x: on circles column j -> -j, on symmetric intervals j -> n_x - 1 - j
            let shift = match grid.topology {
                SpatialTopology::Circle => 0,
                SpatialTopology::Interval => {
                    let (a, b) = (grid.x_coord(0), grid.x_coord(grid.n_x - 1));
                    if (a + b).abs() > 1e-12 * (b - a) {
                        return Err(Error::config("group.reflection", "interval chart is not symmetric about x = 0"));
                    }
                    n_x - 1
                }
            };
            let r = Generator { reflect: true, shift };
            let rotations: Vec<Generator> = gens.clone();
            gens.extend(rotations.iter().map(|g| g.compose(r, n_x)));
        }
        // close under composition (small groups only)
        let mut changed = true;
        while changed {
            changed = false;
            let snapshot = gens.clone();
            for a in &snapshot {
                for b in &snapshot {
                    let c = a.compose(*b, n_x);
                    if !gens.contains(&c) {
                        gens.push(c);
                        changed = true;
                    }
                }
            }
        }
        let elements = gens
            .iter()
            .map(|g| element_from_generator(st, *g))
            .collect::<Result<Vec<_>>>()?;
        Self::from_elements(st, elements)
    }

    /// Validate an explicit list of elements (group table, conformality and
    /// orientation) and derive the flags.
    pub fn from_elements(st: &SampledSpacetime, elements: Vec<GroupElement>) -> Result<Self> {
        let action = Self::from_elements_unchecked(st, elements);
        action.check_group_table()?;
        action.check_bijective(st)?;
        action.check_conformal(st)?;
        if !action.preserves_time_orientation {
            return Err(Error::Input("group does not preserve the time orientation".into()));
        }
        Ok(action)
    }

    /// Skips validation; only for deliberately invalid fixtures.
    pub fn from_elements_unchecked(st: &SampledSpacetime, mut elements: Vec<GroupElement>) -> Self {
        for e in &mut elements {
            e.conformal_sq = conformal_factors(st, e);
        }
        let is_isometric = elements
            .iter()
            .all(|e| e.conformal_sq.iter().all(|c| (c - 1.0).abs() <= CONFORMAL_RESIDUAL_TOL));
        let preserves = elements.iter().all(|e| preserves_orientation(st, e));
        GroupAction { elements, is_isometric, preserves_time_orientation: preserves }
    }

    fn find(&self, map: &[usize]) -> Option<usize> {
        self.elements.iter().position(|e| e.map == map)
    }

    /// Closure, identity and inverses checked on the composition table.
    pub fn check_group_table(&self) -> Result<()> {
        if !self.elements.iter().any(|e| e.is_identity()) {
            return Err(Error::Invariant("group lacks the identity".into()));
        }
        let n = self.elements.first().map(|e| e.map.len()).unwrap_or(0);
        for a in &self.elements {
            let mut has_inverse = false;
            for b in &self.elements {
                let comp: Vec<usize> = (0..n).map(|k| a.map[b.map[k]]).collect();
                if self.find(&comp).is_none() {
                    return Err(Error::Invariant(format!("{} o {} not in group", a.label, b.label)));
                }
                if comp.iter().enumerate().all(|(k, m)| *m == k) {
                    has_inverse = true;
                }
            }
            if !has_inverse {
                return Err(Error::Invariant(format!("{} has no inverse", a.label)));
            }
        }
        Ok(())
    }

    fn check_bijective(&self, st: &SampledSpacetime) -> Result<()> {
        for e in &self.elements {
            let mut hit = vec![false; e.map.len()];
            for (node, &img) in e.map.iter().enumerate() {
                if st.included[node] != st.included[img] {
                    return Err(Error::Input(format!("{} does not preserve the included node set", e.label)));
                }
                if hit[img] {
                    return Err(Error::Input(format!("{} is not a bijection", e.label)));
                }
                hit[img] = true;
            }
        }
        Ok(())
    }

    /// Largest `||phi^* g - Omega^2 g||_inf` over elements and included nodes.
    pub fn conformal_residual(&self, st: &SampledSpacetime) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.elements {
            for node in 0..st.len() {
                if !st.included[node] {
                    continue;
                }
                let p = pullback(st, e, node);
                let g = st.metrics[node].components();
                let c = e.conformal_sq[node];
                for k in 0..4 {
                    worst = worst.max((p[k] - c * g[k]).abs());
                }
            }
        }
        worst
    }

    fn check_conformal(&self, st: &SampledSpacetime) -> Result<()> {
        let r = self.conformal_residual(st);
        if r >= CONFORMAL_RESIDUAL_TOL {
            return Err(Error::Input(format!("group is not conformal: residual {r:e}")));
        }
        if self.elements.iter().any(|e| e.conformal_sq.iter().any(|c| !(*c > 0.0))) {
            return Err(Error::Input("non-positive conformal factor".into()));
        }
        Ok(())
    }

    /// Orbit of a node, in element order.
    pub fn orbit(&self, node: usize) -> Vec<usize> {
        self.elements.iter().map(|e| e.apply(node)).collect()
    }
}

fn element_from_generator(st: &SampledSpacetime, g: Generator) -> Result<GroupElement> {
    let grid = &st.grid;
    let map: Vec<usize> = (0..grid.len())
        .map(|node| {
            let (i, j) = grid.index(node);
            grid.node(i, g.column(j, grid.n_x))
        })
        .collect();
    let label = match (g.reflect, g.shift) {
        (false, 0) => "id".to_string(),
        (false, s) => format!("rot{s}"),
        (true, s) => format!("refl{s}"),
    };
    let mut e = GroupElement {
        label,
        generator: Some(g),
        map,
        jacobian_x: if g.reflect { -1.0 } else { 1.0 },
        conformal_sq: Vec::new(),
    };
    e.conformal_sq = conformal_factors(st, &e);
    Ok(e)
}

/// `J^T g(phi(n)) J` with `J = diag(1, jacobian_x)`.
fn pullback(st: &SampledSpacetime, e: &GroupElement, node: usize) -> [f64; 4] {
    let g = st.metrics[e.map[node]].components();
    let s = e.jacobian_x;
    [g[0], g[1] * s, g[2] * s, g[3]]
}

fn conformal_factors(st: &SampledSpacetime, e: &GroupElement) -> Vec<f64> {
    (0..st.len())
        .map(|node| {
            let p = pullback(st, e, node);
            let g = st.metrics[node].components();
            let num: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
            let den: f64 = g.iter().map(|b| b * b).sum();
            num / den
        })
        .collect()
}

fn preserves_orientation(st: &SampledSpacetime, e: &GroupElement) -> bool {
    (0..st.len()).filter(|n| st.included[*n]).all(|node| {
        let x = st.orientation[node];
        let pushed = [x[0], x[1] * e.jacobian_x];
        let img = e.map[node];
        st.metrics[img]
            .same_cone(&pushed, &st.orientation[img])
            .unwrap_or(false)
    })
}

//! Discrete causal relation of a sampled spacetime.
//!
//! An edge `p -> q` joins nodes within the stencil radius whose coordinate
//! displacement is future causal under the midpoint metric (the mean of the
//! endpoint metrics). Reachability is stored as bitsets over the included
//! nodes, filled by a sweep over Kahn layers.

mod bitset;
mod chains;

pub use bitset::{set_bits, BitMatrix};
pub use chains::{Chain, ChainEnd};

use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spacetime::{Grid, SampledSpacetime};

pub const DEFAULT_STENCIL: usize = 2;
/// Relative margin: timelike edges need `-B(v,v) >= TIMELIKE_MARGIN * |v|_e^2`.
pub const TIMELIKE_MARGIN: f64 = 1e-6;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Causal but not strictly timelike.
    Null,
    Timelike,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    other: u32,
    kind: EdgeKind,
    proper_time: f64,
}

#[derive(Debug, Clone)]
struct Adjacency {
    offsets: Vec<usize>,
    edges: Vec<Edge>,
}

impl Adjacency {
    fn of(&self, c: usize) -> &[Edge] {
        &self.edges[self.offsets[c]..self.offsets[c + 1]]
    }

    fn from_lists(n: usize, lists: impl IntoIterator<Item = (u32, Edge)>) -> Self {
        let mut buckets: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for (src, e) in lists {
            buckets[src as usize].push(e);
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut edges = Vec::new();
        offsets.push(0);
        for b in buckets {
            edges.extend(b);
            offsets.push(edges.len());
        }
        Adjacency { offsets, edges }
    }
}

#[derive(Debug, Clone)]
struct TopoOrder {
    order: Vec<u32>,
    position: Vec<u32>,
    layers: Vec<Vec<u32>>,
}

/// Push-up failure: the inclusion that should hold along `from -> to` does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PushUpViolation {
    pub from: usize,
    pub to: usize,
    /// `true` for `I+ o J+ ⊆ I+` (past sets), `false` for `J+ o I+ ⊆ I+`.
    pub chronological_then_causal: bool,
}

#[derive(Debug)]
pub struct CausalGraph {
    pub grid: Grid,
    pub stencil: usize,
    nodes: Vec<usize>,
    compact: Vec<u32>,
    succ: Adjacency,
    pred: Adjacency,
    topo: Option<TopoOrder>,
    future: BitMatrix,
    past: BitMatrix,
    chrono: OnceLock<(BitMatrix, BitMatrix)>,
    carved: bool,
}

type RawEdge = (usize, usize, EdgeKind, f64);

impl CausalGraph {
    /// Build the relation with stencil radius `r`; fails on a causality violation.
    pub fn build(st: &SampledSpacetime, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::config("stencil_radius", "must be >= 1"));
        }
        let g = &st.grid;
        let ri = r as isize;
        let per_node: Vec<Vec<RawEdge>> = (0..g.len())
            .into_par_iter()
            .map(|p| {
                let mut out = Vec::new();
                if !st.included[p] {
                    return out;
                }
                for dt in 1..=ri {
                    for dx in -ri..=ri {
                        let Some(q) = g.shift(p, dt, dx) else { continue };
                        if !st.included[q] || q == p {
                            continue;
                        }
                        if let Some((kind, tau)) = classify_step(st, p, q, dt, dx) {
                            out.push((p, q, kind, tau));
                        }
                    }
                }
                out
            })
            .collect();
        let edges: Vec<RawEdge> = per_node.into_iter().flatten().collect();
        let carved = st.included.iter().any(|b| !b);
        let graph = Self::from_edges(g.clone(), &st.included, edges, r, carved);
        if !graph.check_causal() {
            return Err(Error::Causality("cycle detected during topological sort".into()));
        }
        Ok(graph)
    }

    /// Assemble from an explicit edge list; cyclic input yields a graph whose
    /// `check_causal` is false and whose closures are empty.
    pub fn from_edges(grid: Grid, included: &[bool], edges: Vec<RawEdge>, stencil: usize, carved: bool) -> Self {
        let mut nodes = Vec::new();
        let mut compact = vec![NONE; grid.len()];
        for (k, inc) in included.iter().enumerate() {
            if *inc {
                compact[k] = nodes.len() as u32;
                nodes.push(k);
            }
        }
        let n = nodes.len();
        let succ = Adjacency::from_lists(
            n,
            edges.iter().map(|&(a, b, kind, tau)| (compact[a], Edge { other: compact[b], kind, proper_time: tau })),
        );
        let pred = Adjacency::from_lists(
            n,
            edges.iter().map(|&(a, b, kind, tau)| (compact[b], Edge { other: compact[a], kind, proper_time: tau })),
        );
        let topo = kahn(n, &succ, &pred);
        let mut graph = CausalGraph {
            grid,
            stencil,
            nodes,
            compact,
            succ,
            pred,
            topo,
            future: BitMatrix::new(0, 0),
            past: BitMatrix::new(0, 0),
            chrono: OnceLock::new(),
            carved,
        };
        if graph.topo.is_some() {
            graph.future = graph.sweep(true, None);
            graph.past = graph.sweep(false, None);
        }
        graph
    }

    /// Copy of this graph with one extra edge; used to plant pathologies.
    pub fn with_planted_edge(&self, from: usize, to: usize, kind: EdgeKind) -> Self {
        let mut edges = self.edge_list();
        edges.push((from, to, kind, 0.0));
        let included: Vec<bool> = self.compact.iter().map(|c| *c != NONE).collect();
        Self::from_edges(self.grid.clone(), &included, edges, self.stencil, self.carved)
    }

    pub fn edge_list(&self) -> Vec<RawEdge> {
        let mut out = Vec::with_capacity(self.succ.edges.len());
        for c in 0..self.nodes.len() {
            for e in self.succ.of(c) {
                out.push((self.nodes[c], self.nodes[e.other as usize], e.kind, e.proper_time));
            }
        }
        out
    }

    /// Reachability rows by a layer sweep. `forward` gives J+ (reverse layers),
    /// otherwise J-. With `seed` set, computes the chronological relation.
    fn sweep(&self, forward: bool, seed: Option<&BitMatrix>) -> BitMatrix {
        let n = self.nodes.len();
        let mut m = BitMatrix::new(n, n);
        let topo = self.topo.as_ref().expect("sweep needs an acyclic graph");
        let adj = if forward { &self.succ } else { &self.pred };
        let layers: Box<dyn Iterator<Item = &Vec<u32>>> =
            if forward { Box::new(topo.layers.iter().rev()) } else { Box::new(topo.layers.iter()) };
        let w = m.words_per_row();
        for layer in layers {
            let rows: Vec<Vec<u64>> = layer
                .par_iter()
                .map(|&c| {
                    let c = c as usize;
                    let mut row = vec![0u64; w];
                    match seed {
                        None => {
                            row[c / 64] |= 1 << (c % 64);
                            for e in adj.of(c) {
                                bitset::union_into(&mut row, m.row(e.other as usize));
                            }
                        }
                        Some(causal) => {
                            for e in adj.of(c) {
                                let o = e.other as usize;
                                if e.kind == EdgeKind::Timelike {
                                    bitset::union_into(&mut row, causal.row(o));
                                }
                                bitset::union_into(&mut row, m.row(o));
                            }
                        }
                    }
                    row
                })
                .collect();
            for (&c, row) in layer.iter().zip(rows) {
                m.row_mut(c as usize).copy_from_slice(&row);
            }
        }
        m
    }

    fn chrono(&self) -> &(BitMatrix, BitMatrix) {
        self.chrono.get_or_init(|| {
            let f = self.sweep(true, Some(&self.future));
            let p = self.sweep(false, Some(&self.past));
            (f, p)
        })
    }

    /// True iff the relation is acyclic (topological sort succeeded).
    pub fn check_causal(&self) -> bool {
        self.topo.is_some()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.edges.len()
    }

    pub fn timelike_edge_count(&self) -> usize {
        self.succ.edges.iter().filter(|e| e.kind == EdgeKind::Timelike).count()
    }

    pub fn is_carved(&self) -> bool {
        self.carved
    }

    pub fn contains(&self, node: usize) -> bool {
        self.compact.get(node).is_some_and(|c| *c != NONE)
    }

    pub fn included_nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn compact_index(&self, node: usize) -> Option<usize> {
        self.compact.get(node).and_then(|c| (*c != NONE).then_some(*c as usize))
    }

    pub fn grid_node(&self, compact: usize) -> usize {
        self.nodes[compact]
    }

    fn ci(&self, node: usize) -> usize {
        self.compact_index(node).unwrap_or_else(|| panic!("node {node} is not part of the graph"))
    }

    pub fn successors(&self, node: usize) -> impl Iterator<Item = (usize, EdgeKind, f64)> + '_ {
        self.succ.of(self.ci(node)).iter().map(|e| (self.nodes[e.other as usize], e.kind, e.proper_time))
    }

    pub fn predecessors(&self, node: usize) -> impl Iterator<Item = (usize, EdgeKind, f64)> + '_ {
        self.pred.of(self.ci(node)).iter().map(|e| (self.nodes[e.other as usize], e.kind, e.proper_time))
    }

    /// All edges as `(from, to, kind)` in grid node ids.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        (0..self.nodes.len()).flat_map(move |c| {
            self.succ.of(c).iter().map(move |e| (self.nodes[c], self.nodes[e.other as usize], e.kind))
        })
    }

    /// Nodes in topological order (grid ids).
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        self.topo.as_ref().map(|t| t.order.iter().map(|c| self.nodes[*c as usize]).collect())
    }

    fn rows_to_nodes(&self, words: &[u64]) -> Vec<usize> {
        bitset::set_bits(words).map(|c| self.nodes[c]).collect()
    }

    /// Bit row of J+(p) over compact indices.
    pub fn future_bits(&self, p: usize) -> &[u64] {
        self.future.row(self.ci(p))
    }

    pub fn past_bits(&self, p: usize) -> &[u64] {
        self.past.row(self.ci(p))
    }

    pub fn chrono_future_bits(&self, p: usize) -> &[u64] {
        self.chrono().0.row(self.ci(p))
    }

    pub fn chrono_past_bits(&self, p: usize) -> &[u64] {
        self.chrono().1.row(self.ci(p))
    }

    /// J+(p), reflexive.
    pub fn causal_future(&self, p: usize) -> Vec<usize> {
        self.rows_to_nodes(self.future_bits(p))
    }

    pub fn causal_past(&self, p: usize) -> Vec<usize> {
        self.rows_to_nodes(self.past_bits(p))
    }

    pub fn chronological_future(&self, p: usize) -> Vec<usize> {
        self.rows_to_nodes(self.chrono_future_bits(p))
    }

    pub fn chronological_past(&self, p: usize) -> Vec<usize> {
        self.rows_to_nodes(self.chrono_past_bits(p))
    }

    /// `p <= q`.
    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.future.contains(self.ci(p), self.ci(q))
    }

    /// `p << q`.
    pub fn ll(&self, p: usize, q: usize) -> bool {
        self.chrono().0.contains(self.ci(p), self.ci(q))
    }

    pub fn causally_related(&self, p: usize, q: usize) -> bool {
        self.leq(p, q) || self.leq(q, p)
    }

    /// J+(p) ∩ J-(q).
    pub fn diamond(&self, p: usize, q: usize) -> Vec<usize> {
        let w = bitset::intersect(self.future_bits(p), self.past_bits(q));
        self.rows_to_nodes(&w)
    }

    pub fn future_size(&self, p: usize) -> usize {
        self.future.count_row(self.ci(p))
    }

    /// Push-up as bitset inclusions along every edge `a -> b`:
    /// `I-(a) ⊆ I-(b)` (so `I+ o J+ ⊆ I+`) and `I+(b) ⊆ I+(a)` (so `J+ o I+ ⊆ I+`).
    pub fn check_push_up(&self) -> Vec<PushUpViolation> {
        let (cf, cp) = self.chrono();
        (0..self.nodes.len())
            .into_par_iter()
            .flat_map_iter(|a| {
                self.succ.of(a).iter().flat_map(move |e| {
                    let b = e.other as usize;
                    let mut v = Vec::new();
                    if !bitset::is_subset(cp.row(a), cp.row(b)) {
                        v.push(PushUpViolation { from: self.nodes[a], to: self.nodes[b], chronological_then_causal: true });
                    }
                    if !bitset::is_subset(cf.row(b), cf.row(a)) {
                        v.push(PushUpViolation { from: self.nodes[a], to: self.nodes[b], chronological_then_causal: false });
                    }
                    v
                })
            })
            .collect()
    }

    /// Pairs `p != q` with `q ∈ J+(p)` and `p ∈ J+(q)`.
    pub fn antisymmetry_violations(&self) -> usize {
        (0..self.nodes.len())
            .into_par_iter()
            .map(|c| {
                bitset::set_bits(self.future.row(c))
                    .filter(|&d| d != c && self.future.contains(d, c))
                    .count()
            })
            .sum()
    }

    /// Nodes of some diamond lying outside the coordinate box
    /// `[t(p), t(q)] x [x(p) - (t(q) - t(p)) - r h_x, x(p) + (t(q) - t(p)) + r h_x]`.
    /// Checked through the equivalent per-node bounds on J+(p) and J-(q).
    pub fn diamond_bound_violations(&self) -> usize {
        let g = &self.grid;
        let slack = self.stencil as f64 * g.h_x + 1e-12;
        (0..self.nodes.len())
            .into_par_iter()
            .map(|c| {
                let p = self.nodes[c];
                let (tp, _) = g.coords(p);
                let jp = g.index(p).1;
                let fut = bitset::set_bits(self.future.row(c))
                    .filter(|&d| {
                        let z = self.nodes[d];
                        let (tz, _) = g.coords(z);
                        let dx = g.dx_between(jp, g.index(z).1).abs();
                        tz < tp - 1e-12 || dx > (tz - tp) + slack
                    })
                    .count();
                let past = bitset::set_bits(self.past.row(c))
                    .filter(|&d| g.coords(self.nodes[d]).0 > tp + 1e-12)
                    .count();
                fut + past
            })
            .sum()
    }

    /// Breadth-first J+(p), independent of the stored closure.
    pub fn bfs_future(&self, p: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let start = self.ci(p);
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for e in self.succ.of(c) {
                let o = e.other as usize;
                if !seen[o] {
                    seen[o] = true;
                    queue.push_back(o);
                }
            }
        }
        let mut out: Vec<usize> = (0..seen.len()).filter(|c| seen[*c]).map(|c| self.nodes[c]).collect();
        out.sort_unstable();
        out
    }

    /// Closure equals the closure of itself: every row of J+ is a union of
    /// rows it contains.
    pub fn closure_is_idempotent(&self) -> bool {
        (0..self.nodes.len()).into_par_iter().all(|c| {
            let mut row = vec![0u64; self.future.words_per_row()];
            for d in bitset::set_bits(self.future.row(c)) {
                bitset::union_into(&mut row, self.future.row(d));
            }
            row == self.future.row(c)
        })
    }

    /// Lorentzian distance from `p` to every node: longest path over the
    /// topological order with edge weight the proper time of the step.
    /// Grid-indexed; 0 where the node is not in J+(p) or is excluded.
    pub fn time_separation_from(&self, p: usize) -> Vec<f64> {
        let dist = self.longest_from(self.ci(p), true);
        let mut out = vec![0.0; self.grid.len()];
        for (c, d) in dist.iter().enumerate() {
            if d.is_finite() {
                out[self.nodes[c]] = *d;
            }
        }
        out
    }

    /// Lorentzian distance from every node to `q`.
    pub fn time_separation_to(&self, q: usize) -> Vec<f64> {
        let dist = self.longest_from(self.ci(q), false);
        let mut out = vec![0.0; self.grid.len()];
        for (c, d) in dist.iter().enumerate() {
            if d.is_finite() {
                out[self.nodes[c]] = *d;
            }
        }
        out
    }

    pub fn time_separation(&self, p: usize, q: usize) -> f64 {
        if !self.leq(p, q) {
            return 0.0;
        }
        let topo = self.topo.as_ref().expect("acyclic");
        let (a, b) = (self.ci(p), self.ci(q));
        let diamond = bitset::intersect(self.future.row(a), self.past.row(b));
        let mut dist = vec![f64::NEG_INFINITY; self.nodes.len()];
        dist[a] = 0.0;
        let (lo, hi) = (topo.position[a] as usize, topo.position[b] as usize);
        for &c in &topo.order[lo..=hi] {
            let c = c as usize;
            if !dist[c].is_finite() {
                continue;
            }
            for e in self.succ.of(c) {
                let o = e.other as usize;
                if diamond[o / 64] >> (o % 64) & 1 == 1 {
                    let cand = dist[c] + e.proper_time;
                    if cand > dist[o] {
                        dist[o] = cand;
                    }
                }
            }
        }
        dist[b].max(0.0)
    }

    fn longest_from(&self, start: usize, forward: bool) -> Vec<f64> {
        let topo = self.topo.as_ref().expect("acyclic");
        let mut dist = vec![f64::NEG_INFINITY; self.nodes.len()];
        dist[start] = 0.0;
        let pos = topo.position[start] as usize;
        let (adj, slice): (&Adjacency, Box<dyn Iterator<Item = &u32>>) = if forward {
            (&self.succ, Box::new(topo.order[pos..].iter()))
        } else {
            (&self.pred, Box::new(topo.order[..=pos].iter().rev()))
        };
        for &c in slice {
            let c = c as usize;
            let d = dist[c];
            if !d.is_finite() {
                continue;
            }
            for e in adj.of(c) {
                let o = e.other as usize;
                let cand = d + e.proper_time;
                if cand > dist[o] {
                    dist[o] = cand;
                }
            }
        }
        dist
    }

    /// Sum of edge proper times along a chain of consecutive edges.
    pub fn chain_proper_time(&self, chain: &[usize]) -> Option<f64> {
        chain
            .windows(2)
            .map(|w| self.successors(w[0]).find(|(q, _, _)| *q == w[1]).map(|(_, _, tau)| tau))
            .sum()
    }

    /// Text edge list, one `src dst kind` line per edge.
    pub fn export_edges<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (a, b, kind) in self.edges() {
            let k = match kind {
                EdgeKind::Null => "null",
                EdgeKind::Timelike => "timelike",
            };
            writeln!(out, "{a} {b} {k}")?;
        }
        Ok(())
    }
}

/// Edge kind and proper time of the step `p -> q`, or `None` when the
/// displacement is not future causal under the midpoint metric.
fn classify_step(st: &SampledSpacetime, p: usize, q: usize, dt: isize, dx: isize) -> Option<(EdgeKind, f64)> {
    let g = &st.grid;
    let v = [dt as f64 * g.h_t, dx as f64 * g.h_x];
    let (gp, gq) = (&st.metrics[p], &st.metrics[q]);
    let quad = 0.5 * (gp.apply(&v, &v) + gq.apply(&v, &v));
    let tol = 0.5 * (gp.null_tolerance() + gq.null_tolerance());
    if quad > tol {
        return None;
    }
    let xp = st.orientation[p];
    let xq = st.orientation[q];
    let x = [0.5 * (xp[0] + xq[0]), 0.5 * (xp[1] + xq[1])];
    let orient = 0.5 * (gp.apply(&x, &v) + gq.apply(&x, &v));
    if orient >= 0.0 {
        return None;
    }
    let euclid = v[0] * v[0] + v[1] * v[1];
    let kind = if -quad >= TIMELIKE_MARGIN * euclid { EdgeKind::Timelike } else { EdgeKind::Null };
    Some((kind, (-quad).max(0.0).sqrt()))
}

fn kahn(n: usize, succ: &Adjacency, pred: &Adjacency) -> Option<TopoOrder> {
    let mut indeg: Vec<usize> = (0..n).map(|c| pred.of(c).len()).collect();
    let mut layer: Vec<u32> = (0..n as u32).filter(|c| indeg[*c as usize] == 0).collect();
    let mut layers = Vec::new();
    let mut order = Vec::with_capacity(n);
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &c in &layer {
            order.push(c);
            for e in succ.of(c as usize) {
                let o = e.other as usize;
                indeg[o] -= 1;
                if indeg[o] == 0 {
                    next.push(o as u32);
                }
            }
        }
        next.sort_unstable();
        layers.push(std::mem::replace(&mut layer, next));
    }
    if order.len() != n {
        return None;
    }
    let mut position = vec![0u32; n];
    for (k, c) in order.iter().enumerate() {
        position[*c as usize] = k as u32;
    }
    Some(TopoOrder { order, position, layers })
}

#[cfg(test)]
mod tests;

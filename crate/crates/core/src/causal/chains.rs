use super::CausalGraph;

/// Why a chain stops in a given direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainEnd {
    /// Reached the first or last time row of the chart.
    TimeBoundary,
    /// Reached the edge of an interval slice with nowhere left to go.
    SpatialBoundary,
    /// Stopped next to excised nodes: the chain runs into a hole.
    Excision,
}

/// A causal chain made inextendible within the graph in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Grid nodes, past to future.
    pub nodes: Vec<usize>,
    pub past_end: ChainEnd,
    pub future_end: ChainEnd,
}

impl Chain {
    /// Ends that leave the chart through its time boundary are the ones a
    /// Cauchy time function must push to its extreme values.
    pub fn leaves_through_time_boundary(&self) -> bool {
        self.past_end == ChainEnd::TimeBoundary && self.future_end == ChainEnd::TimeBoundary
    }
}

impl CausalGraph {
    /// Extend `seed` forwards and backwards with steps of one time row and
    /// exactly `drift` columns, until such a step leaves the graph. With
    /// `drift = 0` this is the maximal vertical chain through `seed`.
    pub fn inextendible_chain(&self, seed: usize, drift: isize) -> Chain {
        let mut future = vec![seed];
        let mut cur = seed;
        while let Some(next) = self.step(cur, drift, true) {
            future.push(next);
            cur = next;
        }
        let future_end = self.classify_end(cur, true);
        let mut past = Vec::new();
        cur = seed;
        while let Some(prev) = self.step(cur, -drift, false) {
            past.push(prev);
            cur = prev;
        }
        let past_end = self.classify_end(cur, false);
        past.reverse();
        past.extend(future);
        Chain { nodes: past, past_end, future_end }
    }

    fn step(&self, node: usize, drift: isize, forward: bool) -> Option<usize> {
        let g = &self.grid;
        let (i0, j0) = g.index(node);
        let fits = |q: &usize| {
            let (i, j) = g.index(*q);
            i.abs_diff(i0) == 1 && (g.dx_between(j0, j) / g.h_x - drift as f64).abs() < 0.5
        };
        if forward {
            self.successors(node).map(|(q, _, _)| q).find(fits)
        } else {
            self.predecessors(node).map(|(q, _, _)| q).find(fits)
        }
    }

    fn classify_end(&self, node: usize, forward: bool) -> ChainEnd {
        let g = &self.grid;
        let (i, j) = g.index(node);
        if (forward && i + 1 == g.n_t) || (!forward && i == 0) {
            return ChainEnd::TimeBoundary;
        }
        let dt: isize = if forward { 1 } else { -1 };
        let r = self.stencil as isize;
        let hole = (-r..=r).any(|dx| g.shift(node, dt, dx).is_some_and(|q| !self.contains(q)));
        if hole {
            return ChainEnd::Excision;
        }
        if !g.is_periodic() && (j == 0 || j + 1 == g.n_x) {
            return ChainEnd::SpatialBoundary;
        }
        ChainEnd::Excision
    }
}

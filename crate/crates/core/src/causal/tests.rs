use super::*;
use crate::spacetime::{Family, Grid, ModelSpec, SampledSpacetime};
use crate::lorlin::MetricTensor;

fn flat(n: usize, lo: f64, hi: f64) -> SampledSpacetime {
    let grid = Grid::interval(n, n, [lo, hi], [lo, hi]).unwrap();
    let len = grid.len();
    SampledSpacetime::from_parts(
        grid,
        vec![MetricTensor::minkowski(2); len],
        vec![[1.0, 0.0]; len],
        vec![true; len],
        Family::Minkowski2d,
    )
    .unwrap()
}

#[test]
fn minkowski_cone_counts() {
    let st = flat(21, -1.0, 1.0);
    let cg = CausalGraph::build(&st, 2).unwrap();
    let c = st.grid.node(10, 10);
    // J+ is the index cone dt >= |dx|, I+ its interior dt > |dx|
    assert_eq!(cg.causal_future(c).len(), 121);
    assert_eq!(cg.chronological_future(c).len(), 100);
    assert_eq!(cg.causal_past(c).len(), 121);
    assert!(cg.leq(c, st.grid.node(13, 13)));
    assert!(!cg.ll(c, st.grid.node(13, 13)));
    assert!(cg.ll(c, st.grid.node(13, 12)));
    assert!(!cg.causally_related(c, st.grid.node(11, 12)));
    // per node: (1,0) (2,0) (2,+-1) timelike, (1,+-1) (2,+-2) null
    let interior = st.grid.node(5, 10);
    let kinds: Vec<_> = cg.successors(interior).map(|(_, k, _)| k).collect();
    assert_eq!(kinds.len(), 8);
    assert_eq!(kinds.iter().filter(|k| **k == EdgeKind::Timelike).count(), 4);
}

#[test]
fn closure_matches_bfs() {
    let st = flat(15, -1.0, 1.0);
    let cg = CausalGraph::build(&st, 2).unwrap();
    for p in [0, 7, 50, 112, 200] {
        let mut j = cg.causal_future(p);
        j.sort_unstable();
        assert_eq!(j, cg.bfs_future(p));
    }
    assert!(cg.closure_is_idempotent());
    assert_eq!(cg.antisymmetry_violations(), 0);
}

#[test]
fn diamond_and_bounds() {
    let st = flat(21, -1.0, 1.0);
    let cg = CausalGraph::build(&st, 2).unwrap();
    let p = st.grid.node(2, 10);
    let q = st.grid.node(8, 10);
    // index diamond of half-height 3: 1 + 3 + 5 + 7 + 5 + 3 + 1
    assert_eq!(cg.diamond(p, q).len(), 25);
    assert_eq!(cg.diamond_bound_violations(), 0);
    assert!(cg.check_push_up().is_empty());
    let bad = cg.with_planted_edge(st.grid.node(5, 5), st.grid.node(6, 12), EdgeKind::Null);
    assert!(bad.check_causal());
    assert!(bad.diamond_bound_violations() > 0);
}

#[test]
fn planted_cycle_is_detected() {
    let st = flat(9, -1.0, 1.0);
    let cg = CausalGraph::build(&st, 2).unwrap();
    assert!(cg.check_causal());
    let cyc = cg.with_planted_edge(st.grid.node(6, 4), st.grid.node(3, 4), EdgeKind::Timelike);
    assert!(!cyc.check_causal());
    assert!(cyc.topological_order().is_none());
}

#[test]
fn alternating_orientation_drops_single_steps() {
    let st = flat(5, -1.0, 1.0);
    let mut o = st.orientation.clone();
    for (k, v) in o.iter_mut().enumerate() {
        if st.grid.index(k).0 % 2 == 1 {
            *v = [-1.0, 0.0];
        }
    }
    let st2 = SampledSpacetime::from_parts(st.grid.clone(), st.metrics.clone(), o, st.included.clone(), st.family).unwrap();
    // alternating orientation: midpoint vector vanishes on single steps, so
    // only double steps survive and the relation stays acyclic
    let cg = CausalGraph::build(&st2, 2).unwrap();
    assert!(cg.successors(st.grid.node(0, 2)).all(|(q, _, _)| st.grid.index(q).0 == 2));
}

/// Longest-path oracle on a unit grid: (2,1) is one timelike step of length
/// sqrt(3); (3,1) is off-stencil and its deficit against sqrt(8) shrinks as
/// the stencil grows.
#[test]
fn time_separation_oracle() {
    let st = flat(11, 0.0, 10.0);
    let g = &st.grid;
    let p = g.node(2, 5);
    let cg2 = CausalGraph::build(&st, 2).unwrap();
    assert!((cg2.time_separation(p, g.node(4, 6)) - 3f64.sqrt()).abs() < 1e-12);
    let q = g.node(5, 6);
    let expect = [(1, 2.0), (2, 1.0 + 3f64.sqrt()), (3, 8f64.sqrt())];
    let mut prev_deficit = f64::INFINITY;
    for (r, want) in expect {
        let cg = CausalGraph::build(&st, r).unwrap();
        let tau = cg.time_separation(p, q);
        assert!((tau - want).abs() < 1e-12, "r={r}: {tau}");
        let deficit = 8f64.sqrt() - tau;
        assert!(deficit < prev_deficit);
        prev_deficit = deficit;
        assert!((cg.time_separation_from(p)[q] - want).abs() < 1e-12);
        assert!((cg.time_separation_to(q)[p] - want).abs() < 1e-12);
    }
    // null-related pairs have zero separation
    assert_eq!(cg2.time_separation(p, g.node(5, 8)), 0.0);
    assert_eq!(cg2.time_separation(q, p), 0.0);
}

#[test]
fn carved_graph_and_chains() {
    let st = SampledSpacetime::build(&ModelSpec::new(Family::CarvedMinkowski, 21, 21)).unwrap();
    let cg = CausalGraph::build(&st, 2).unwrap();
    assert!(cg.is_carved());
    assert_eq!(cg.node_count(), st.included_count());
    let g = &st.grid;
    // column x = -0.2 hits the hole at t = 0.2
    let chain = cg.inextendible_chain(g.node(0, 8), 0);
    assert_eq!(chain.past_end, ChainEnd::TimeBoundary);
    assert_eq!(chain.future_end, ChainEnd::Excision);
    assert!(!chain.leaves_through_time_boundary());
    // the corner (1, -1) lies on the removed cone, so even the edge column
    // stops one row short of the top
    let far = cg.inextendible_chain(g.node(0, 0), 0);
    assert_eq!(far.nodes.len(), 20);
    assert!((cg.chain_proper_time(&far.nodes).unwrap() - 1.9).abs() < 1e-12);
}

#[test]
fn cylinder_wraps_and_exports() {
    let mut spec = ModelSpec::new(Family::CylinderProduct, 5, 8);
    spec.params.circumference = Some(4.0);
    let st = SampledSpacetime::build(&spec).unwrap();
    let cg = CausalGraph::build(&st, 1).unwrap();
    let g = &st.grid;
    let succ: Vec<usize> = cg.successors(g.node(0, 0)).map(|(q, _, _)| q).collect();
    assert!(succ.contains(&g.node(1, 7)));
    let mut buf = Vec::new();
    cg.export_edges(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), cg.edge_count());
    assert!(text.lines().all(|l| l.split(' ').count() == 3));
}

#[test]
fn stencil_zero_rejected() {
    let st = flat(5, -1.0, 1.0);
    assert!(matches!(CausalGraph::build(&st, 0), Err(Error::Config { .. })));
}

#[test]
fn time_reversal_swaps_cones() {
    let spec = ModelSpec {
        params: crate::spacetime::ModelParams {
            warp: Some("1.5 + 0.3 * t".into()),
            slice: Some(crate::spacetime::Slice::Interval),
            ..Default::default()
        },
        ..ModelSpec::new(Family::ConformalWarp, 9, 9)
    };
    let st = SampledSpacetime::build(&spec).unwrap();
    let rev = st.time_reversed().unwrap();
    let a = CausalGraph::build(&st, 2).unwrap();
    let b = CausalGraph::build(&rev, 2).unwrap();
    let p = st.grid.node(3, 4);
    let mut past: Vec<usize> = a.causal_past(p).into_iter().map(|n| st.mirror_node(n)).collect();
    past.sort_unstable();
    let mut fut = b.causal_future(st.mirror_node(p));
    fut.sort_unstable();
    assert_eq!(past, fut);
}

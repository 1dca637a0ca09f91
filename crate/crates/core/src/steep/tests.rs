use super::*;
use crate::causal::CausalGraph;
use crate::field::ScalarField;
use crate::geroch::{geroch_cauchy, geroch_pm, VolumeMeasure};
use crate::spacetime::{Family, ModelSpec, SampledSpacetime, SurfaceGraph};

fn square(n: usize, half: f64) -> (SampledSpacetime, CausalGraph, ScalarField) {
    let mut spec = ModelSpec::new(Family::Minkowski2d, n, n);
    spec.params.t_range = Some([-half, half]);
    spec.params.x_range = Some([-half, half]);
    let st = SampledSpacetime::build(&spec).unwrap();
    let cg = CausalGraph::build(&st, 2).unwrap();
    let mu = VolumeMeasure::new(&st, None).unwrap();
    let (tm, tp) = geroch_pm(&cg, &mu);
    let t = geroch_cauchy(&tm, &tp).unwrap();
    (st, cg, t)
}

#[test]
fn steep_on_small_square() {
    let (st, cg, t) = square(61, 3.0);
    let out = steep_temporal(&st, &cg, &t, &SteepOptions::default());
    match &out {
        Ok(o) => println!("{}\n{:?}", o.trace.to_text(), o.report),
        Err(e) => println!("{e}"),
    }
    out.unwrap();
}

#[test]
fn steep_on_criterion_square() {
    let (st, cg, t) = square(121, 3.0);
    let now = std::time::Instant::now();
    let o = steep_temporal(&st, &cg, &t, &SteepOptions::default()).unwrap();
    println!("{}\n{:?}\n{:?}", o.trace.to_text(), o.report, now.elapsed());
    for n in 0..st.len() {
        let (a, b) = (o.field.get(n), o.field.get(st.mirror_node(n)));
        assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}

#[test]
fn adapt_flat_surface() {
    let (st, cg, _) = square(121, 3.0);
    let s = SurfaceGraph::from_fn(&st, |x| 0.1 * (x * 0.7).sin());
    let sp = s.shifted(1.5);
    let sm = s.shifted(-1.5);
    let fp = vec![5.0; 121];
    let fm = vec![-5.0; 121];
    let inp = AdaptInputs { s: &s, s_plus: &sp, s_minus: &sm, f_plus: &fp, f_minus: &fm, t_plus: None, t_minus: None };
    let now = std::time::Instant::now();
    let out = adapted_temporal(&st, &cg, &inp, &SteepOptions::default());
    println!("{:?}", now.elapsed());
    match &out {
        Ok(o) => println!("{:?} {:?}", o.collar, o.report),
        Err(e) => println!("{e}"),
    }
    out.unwrap();
}

#[test]
fn signed_distance_on_flat_slice() {
    let (st, _, _) = square(41, 2.0);
    let s = SurfaceGraph::from_fn(&st, |_| 0.0);
    let d = signed_distance(&st, &s);
    for n in 0..st.len() {
        assert!((d.get(n) - st.grid.coords(n).0).abs() < 1e-12);
    }
    let tol = st.grid.h_t + st.grid.h_x;
    for n in ScalarField::interior_nodes(&st) {
        assert!((d.gradient_sq(&st, n).unwrap() + 1.0).abs() <= tol);
    }
}

#[test]
fn theta_plateaus_and_zero_on_surface() {
    let collar = Collar { kappa: 2.0, width: 0.4 };
    let delta = ScalarField { values: vec![-1.0, -0.4, -0.1, 0.0, 0.1, 0.4, 1.0] };
    let (tp, tm, th) = theta_fields(&delta, &collar);
    assert_eq!(th.values[0], -1.0);
    assert_eq!(th.values[1], -1.0);
    assert_eq!(th.values[3], 0.0);
    assert_eq!(th.values[5], 1.0);
    assert_eq!(th.values[6], 1.0);
    assert!(-1.0 < th.values[2] && th.values[2] < 0.0 && 0.0 < th.values[4] && th.values[4] < 1.0);
    assert_eq!((tp.values[3], tm.values[3]), (1.0, -1.0));
}

#[test]
fn bounded_pair_above_unit_data() {
    let (st, cg, t) = square(81, 3.0);
    let sp = SurfaceGraph::from_fn(&st, |_| 1.0);
    let sm = SurfaceGraph::from_fn(&st, |_| -1.0);
    let one = vec![1.0; 81];
    let (plus, minus, rep) = steep_bounded(&st, &cg, &sp, &sm, &one, &one.iter().map(|v| -v).collect::<Vec<_>>(), &t, &SteepOptions::default()).unwrap();
    assert!(rep.passed(), "{rep:?}");
    let top = st.grid.node(st.grid.n_t - 1, 40);
    assert!(plus.get(top) > 1.0 && minus.get(st.grid.node(0, 40)) < -1.0);
    // S- lies below S+: a node from one is in the chronological past of the other
    assert!(cg.ll(st.grid.node(20, 40), st.grid.node(60, 40)));
}

//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: pass|fail (...)` line. Run with `--nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cauchy_time::causal::CausalGraph;
use cauchy_time::field::ScalarField;
use cauchy_time::geroch::{
    chart_threshold, geroch_cauchy, geroch_pm, noncauchy_witness, verify_cauchy, verify_time_function, VolumeMeasure,
};
use cauchy_time::lorlin::{linearly_dependent, CausalClass, MetricTensor};
use cauchy_time::spacetime::{Family, GroupAction, GroupSpec, ModelSpec, SampledSpacetime, Slice, SurfaceGraph};
use cauchy_time::steep::{adapted_temporal, steep_temporal, AdaptInputs, SteepOptions};
use cauchy_time::symmetry::{check_orbit_acausal, invariant_temporal, InvariantRequest, SurfaceBounds, INVARIANCE_TOL};
use cauchy_time::Error;

fn verdict(n: usize, ok: bool, detail: String) {
    println!("criterion {n}: {} ({detail})", if ok { "pass" } else { "fail" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn build(spec: &ModelSpec) -> (SampledSpacetime, CausalGraph) {
    let st = SampledSpacetime::build(spec).unwrap();
    let cg = CausalGraph::build(&st, 2).unwrap();
    (st, cg)
}

fn square(n: usize, half: f64) -> ModelSpec {
    let mut s = ModelSpec::new(Family::Minkowski2d, n, n);
    s.params.t_range = Some([-half, half]);
    s.params.x_range = Some([-half, half]);
    s
}

fn warp(n_t: usize, n_x: usize, expr: &str) -> ModelSpec {
    let mut s = ModelSpec::new(Family::ConformalWarp, n_t, n_x);
    s.params.slice = Some(Slice::Circle);
    s.params.warp = Some(expr.into());
    s
}

fn four_models(n: usize) -> Vec<ModelSpec> {
    vec![
        ModelSpec::new(Family::Minkowski2d, n, n),
        ModelSpec::new(Family::DiamondMinkowski, n, n),
        ModelSpec::new(Family::CylinderProduct, n, n),
        warp(n, n, "1.2 + 0.1 * math::cos(2 * pi * x / L) + 0.05 * t"),
    ]
}

fn max_orbit_deviation(f: &ScalarField, group: &GroupAction, st: &SampledSpacetime) -> f64 {
    let mut worst = 0.0_f64;
    for g in &group.elements {
        for n in (0..st.len()).filter(|n| st.included[*n]) {
            worst = worst.max((f.get(g.apply(n)) - f.get(n)).abs());
        }
    }
    worst
}

#[test]
fn criterion_01_causality_axioms() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut ok = true;
    for spec in four_models(101) {
        let (_, cg) = build(&spec);
        let acyclic = cg.check_causal();
        let push_up = cg.check_push_up().len();
        let antisym = cg.antisymmetry_violations();
        let diamonds = cg.diamond_bound_violations();
        ok &= acyclic && push_up == 0 && antisym == 0 && diamonds == 0;
        detail.push(format!("{:?}: acyclic={acyclic} push_up={push_up} diamonds={diamonds}", spec.family));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    verdict(1, ok, format!("{}; {:.1}s", detail.join(", "), elapsed.as_secs_f64()));
}

/// Area fraction of the past cone of the centre inside `|t| + |x| <= 1`,
/// by midpoint quadrature on an `m x m` cell grid.
fn past_cone_fraction(m: usize) -> f64 {
    let h = 2.0 / m as f64;
    let (mut inside, mut past) = (0usize, 0usize);
    for i in 0..m {
        let t = -1.0 + (i as f64 + 0.5) * h;
        for j in 0..m {
            let x = -1.0 + (j as f64 + 0.5) * h;
            if t.abs() + x.abs() <= 1.0 {
                inside += 1;
                if t <= -x.abs() {
                    past += 1;
                }
            }
        }
    }
    past as f64 / inside as f64
}

#[test]
fn criterion_02_geroch_construction() {
    let mut specs = four_models(61);
    specs.push(ModelSpec::new(Family::CarvedMinkowski, 61, 61));
    let mut worst = 0;
    for spec in &specs {
        let (st, cg) = build(spec);
        let mu = VolumeMeasure::new(&st, None).unwrap();
        let (tm, tp) = geroch_pm(&cg, &mu);
        let t = geroch_cauchy(&tm, &tp).unwrap();
        // t+ = -mu(J+) already carries the minus sign and increases
        for f in [&tm, &tp, &t] {
            worst = worst.max(verify_time_function(f, &cg));
        }
    }

    let (st, cg) = build(&ModelSpec::new(Family::DiamondMinkowski, 201, 201));
    let mu = VolumeMeasure::new(&st, None).unwrap();
    let (tm, tp) = geroch_pm(&cg, &mu);
    let t = geroch_cauchy(&tm, &tp).unwrap();
    let c = st.grid.node(100, 100);
    let center = t.get(c);
    let oracle = past_cone_fraction(4000);
    let rel = (tm.get(c) - oracle).abs() / oracle;
    // lattice count: 5101 of the 20201 diamond nodes lie in the past cone
    let frozen = (tm.get(c) - 5101.0 / 20201.0).abs() < 1e-12;
    let ok = worst == 0 && center.abs() <= 1e-12 && rel <= 0.02 && frozen;
    verdict(
        2,
        ok,
        format!("violating edges={worst}, t(center)={center:.1e}, mu(J-(center))={:.6} vs oracle {oracle:.6} ({:.2}%)", tm.get(c), 100.0 * rel),
    );
}

#[test]
fn criterion_03_carved_counterexample() {
    let (carved, cg) = build(&ModelSpec::new(Family::CarvedMinkowski, 81, 81));
    let mu = VolumeMeasure::new(&carved, None).unwrap();
    let (tm, _) = geroch_pm(&cg, &mu);
    let w = noncauchy_witness(&cg, &tm, &mu, -0.25, -0.75);
    let gap = (w.sups[1] - w.sups[0]).abs();

    let (st, full) = build(&ModelSpec::new(Family::Minkowski2d, 81, 81));
    let mu = VolumeMeasure::new(&st, None).unwrap();
    let (tm, tp) = geroch_pm(&full, &mu);
    let t = geroch_cauchy(&tm, &tp).unwrap();
    let th = chart_threshold(&st);
    let rep = verify_cauchy(&t, &full, th).unwrap();
    let ok = w.both_trapped && w.confirms(0.05) && rep.passed();
    verdict(
        3,
        ok,
        format!("sups {:.4} vs {:.4}, gap {:.4} of total; uncarved verify_cauchy(threshold {th:.3}) failures={}", w.sups[0], w.sups[1], gap, rep.failures.len()),
    );
}

#[test]
fn criterion_04_steep_synthesis() {
    let (st, cg) = build(&square(121, 3.0));
    let start = Instant::now();
    let mu = VolumeMeasure::new(&st, None).unwrap();
    let (tm, tp) = geroch_pm(&cg, &mu);
    let t = geroch_cauchy(&tm, &tp).unwrap();
    let out = steep_temporal(&st, &cg, &t, &SteepOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let r = &out.report;
    let ok = r.margin >= 1.0 - r.tol_h
        && r.increase_violations == 0
        && r.band_bound_checked > 0
        && r.band_bound_failures == 0
        && elapsed < Duration::from_secs(120);
    verdict(
        4,
        ok,
        format!(
            "margin {:.4} >= {:.4}, increase violations {}, band bound {}/{} ok, {:.1}s",
            r.margin,
            1.0 - r.tol_h,
            r.increase_violations,
            r.band_bound_checked - r.band_bound_failures,
            r.band_bound_checked,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_05_adaptation() {
    let (st, cg) = build(&square(121, 3.0));
    let s = SurfaceGraph::from_fn(&st, |x| 0.1 * (0.7 * x).sin());
    let (sp, sm) = (s.shifted(1.5), s.shifted(-1.5));
    let (fp, fm) = (vec![5.0; 121], vec![-5.0; 121]);
    let inp = AdaptInputs { s: &s, s_plus: &sp, s_minus: &sm, f_plus: &fp, f_minus: &fm, t_plus: None, t_minus: None };
    let out = adapted_temporal(&st, &cg, &inp, &SteepOptions::default()).unwrap();
    let r = &out.report;
    // theta must be exactly +-1 wherever the signed distance leaves the collar
    let off_plateau = (0..st.len())
        .filter(|n| out.delta.get(*n).abs() >= out.collar.width)
        .filter(|n| out.theta.get(*n).abs() != 1.0)
        .count();
    let ok = r.surface_max_abs <= 1e-6 && r.level_distance <= 2.0 * st.grid.h_t && r.plateau_failures == 0 && off_plateau == 0;
    verdict(
        5,
        ok,
        format!(
            "max |t3| on S {:.1e}, level distance {:.4} <= {:.4}, theta off plateau {}",
            r.surface_max_abs,
            r.level_distance,
            2.0 * st.grid.h_t,
            off_plateau
        ),
    );
}

#[test]
fn criterion_06_invariance() {
    let (st, cg) = build(&ModelSpec::new(Family::CylinderProduct, 81, 80));
    let z4 = GroupAction::build(&st, &GroupSpec::rotation(4)).unwrap();
    let bounds = SurfaceBounds {
        s_plus: SurfaceGraph::from_fn(&st, |_| 1.5),
        s_minus: SurfaceGraph::from_fn(&st, |_| -1.5),
        f_plus: vec![3.0; st.grid.n_x],
        f_minus: vec![-3.0; st.grid.n_x],
    };
    let req = InvariantRequest { surfaces: vec![(SurfaceGraph::from_fn(&st, |_| 0.0), 0.0)], bounds: Some(bounds), steep: true };
    let out = invariant_temporal(&st, &cg, &z4, &req, &SteepOptions::default()).unwrap();
    let dev = max_orbit_deviation(&out.field, &z4, &st);
    let r = &out.report;
    let cyl_ok = dev <= INVARIANCE_TOL && r.margin >= 1.0 - r.tol_h && r.level_distances[0] <= 2.0 * st.grid.h_t;

    let (wst, wcg) = build(&warp(41, 40, "1.5 + 0.5 * math::sin(2 * pi * x / L)"));
    let half = GroupAction::build(&wst, &GroupSpec::rotation(2)).unwrap();
    let plain = invariant_temporal(&wst, &wcg, &half, &InvariantRequest::default(), &SteepOptions::default()).unwrap();
    let wdev = max_orbit_deviation(&plain.field, &half, &wst);
    let warp_ok = !half.is_isometric && wdev <= INVARIANCE_TOL && plain.report.temporal_failures == 0 && plain.report.increase_violations == 0;

    let steep = InvariantRequest { steep: true, ..Default::default() };
    let rejected = match invariant_temporal(&wst, &wcg, &half, &steep, &SteepOptions::default()) {
        Err(Error::Input(m)) => m.contains("isometric"),
        _ => false,
    };
    verdict(
        6,
        cyl_ok && warp_ok && rejected,
        format!(
            "Z4: deviation {dev:.1e}, margin {:.4}, level distance {:.4}; warped Z2: deviation {wdev:.1e}, temporal failures {}; steep+conformal rejected={rejected}",
            r.margin, r.level_distances[0], plain.report.temporal_failures
        ),
    );
}

#[test]
fn criterion_07_orbit_acausality() {
    let cases = [
        (ModelSpec::new(Family::CylinderProduct, 41, 40), GroupSpec::rotation(4)),
        (ModelSpec::new(Family::CylinderProduct, 41, 40), GroupSpec { rotations: Some(4), reflection: true }),
        (warp(41, 40, "1.5 + 0.5 * math::sin(2 * pi * x / L)"), GroupSpec::rotation(2)),
        (ModelSpec::new(Family::Minkowski2d, 41, 41), GroupSpec::reflection()),
        (ModelSpec::new(Family::DiamondMinkowski, 41, 41), GroupSpec::reflection()),
    ];
    let mut total = 0;
    let mut elements = 0;
    for (spec, g) in &cases {
        let (st, cg) = build(spec);
        let grp = GroupAction::build(&st, g).unwrap();
        elements += grp.order() - 1;
        total += check_orbit_acausal(&cg, &grp).len();
    }
    verdict(7, total == 0, format!("{} models, {elements} nontrivial elements, {total} violations", cases.len()));
}

/// Random Lorentzian form `A^T eta A` and the map `u -> A^{-1} u` that takes
/// eta-frame vectors to vectors of the same causal character.
fn random_frame(rng: &mut ChaCha8Rng, dim: usize) -> (MetricTensor, nalgebra::DMatrix<f64>) {
    let a = loop {
        let a = nalgebra::DMatrix::<f64>::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.4..0.4));
        if a.determinant().abs() > 0.2 {
            break a;
        }
    };
    let mut eta = nalgebra::DMatrix::identity(dim, dim);
    eta[(0, 0)] = -1.0;
    let g = a.transpose() * &eta * &a;
    let g = (&g + g.transpose()) * 0.5;
    let metric = MetricTensor::new(dim, g.as_slice().to_vec()).unwrap();
    (metric, a.try_inverse().unwrap())
}

/// Future causal vector in the eta frame; lightlike with probability 1/5.
/// Null draws sit 1e-11 inside the cone so the change of frame cannot round
/// them into spacelike vectors.
fn eta_causal(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
    let spatial: Vec<f64> = (1..dim).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    let len = spatial.iter().map(|s| s * s).sum::<f64>().sqrt();
    let t = if rng.gen_bool(0.2) { len * (1.0 + 1e-11) } else { len + rng.gen_range(1e-3..1.0) * scale };
    std::iter::once(t).chain(spatial).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn criterion_08_lorentzian_algebra() {
    const SAMPLES: usize = 100_000;
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut cs_bad, mut tri_bad, mut energy_bad, mut rank_bad) = (0, 0, 0, 0);
    let (mut eq_light, mut eq_time) = (0, 0);
    let mut frame = random_frame(&mut rng, 2);
    for k in 0..SAMPLES {
        if k % 100 == 0 {
            let dim = 2 + (k / 100) % 3;
            frame = if k % 300 == 0 { (MetricTensor::minkowski(dim), nalgebra::DMatrix::identity(dim, dim)) } else { random_frame(&mut rng, dim) };
        }
        let (b, inv) = &frame;
        let dim = b.dim();
        let to_frame = |u: Vec<f64>| (inv * nalgebra::DVector::from_vec(u)).as_slice().to_vec();
        let v = to_frame(eta_causal(&mut rng, dim));
        // every tenth pair is planted collinear to exercise the equality case
        let w = if k % 10 == 0 {
            let c = rng.gen_range(0.1..10.0);
            v.iter().map(|x| c * x).collect()
        } else {
            to_frame(eta_causal(&mut rng, dim))
        };
        let m = b.components().iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let scale = m * norm(&v) * norm(&w);

        // inverse Cauchy-Schwarz, with w flipped to the other cone half the time
        let ws: Vec<f64> = if rng.gen_bool(0.5) { w.iter().map(|x| -x).collect() } else { w.clone() };
        let (vv, wwv, vw) = (b.apply(&v, &v), b.apply(&ws, &ws), b.apply(&v, &ws));
        if vw * vw < vv * wwv - TOL * scale * scale {
            cs_bad += 1;
        }

        assert!(b.same_cone(&v, &w).unwrap(), "sampler left the future cone");
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, c)| a + c).collect();
        let nv = b.lorentz_norm(&v).unwrap();
        let nw = b.lorentz_norm(&w).unwrap();
        let ns = b.lorentz_norm(&sum).unwrap();
        let sc = m.sqrt() * (norm(&v) + norm(&w));
        if ns < nv + nw - TOL * sc {
            tri_bad += 1;
        }
        if (ns - nv - nw).abs() <= TOL * sc {
            let lightlike = b.classify(&v).unwrap() == CausalClass::Lightlike && b.classify(&w).unwrap() == CausalClass::Lightlike;
            if lightlike {
                eq_light += 1;
            } else {
                eq_time += 1;
            }
            if !linearly_dependent(&v, &w, 1e-6) {
                rank_bad += 1;
            }
        }

        let ss = b.apply(&sum, &sum);
        let energy_scale = m * norm(&sum).powi(2);
        if ss > b.apply(&v, &v) + TOL * energy_scale || ss > b.apply(&w, &w) + TOL * energy_scale {
            energy_bad += 1;
        }
    }
    let ok = cs_bad == 0 && tri_bad == 0 && energy_bad == 0 && rank_bad == 0 && eq_light + eq_time > 0;
    verdict(
        8,
        ok,
        format!(
            "{SAMPLES} pairs: Cauchy-Schwarz {cs_bad}, triangle {tri_bad}, energy {energy_bad} counterexamples; \
             equality cases {} ({eq_light} lightlike, {eq_time} timelike), rank-2 among them {rank_bad}",
            eq_light + eq_time
        ),
    );
}

#[test]
fn criterion_09_time_separation() {
    // unit spacing: node (i, j) sits at t = i, x = j - 7
    let mut spec = ModelSpec::new(Family::Minkowski2d, 15, 15);
    spec.params.t_range = Some([0.0, 14.0]);
    spec.params.x_range = Some([-7.0, 7.0]);
    let st = SampledSpacetime::build(&spec).unwrap();
    let g = &st.grid;
    let graphs: Vec<CausalGraph> = (1..=3).map(|r| CausalGraph::build(&st, r).unwrap()).collect();
    let cg2 = &graphs[1];
    let p = g.node(0, 7);
    let interval = |dt: f64, dx: f64| (dt * dt - dx * dx).max(0.0).sqrt();

    let mut on_err = 0.0_f64;
    let mut on_checked = 0;
    for a in 1..=2_isize {
        for b in -a..=a {
            for k in 1..=(6 / a) {
                let (dt, dx) = (k * a, k * b);
                let q = g.node(dt as usize, (7 + dx) as usize);
                on_err = on_err.max((cg2.time_separation(p, q) - interval(dt as f64, dx as f64)).abs());
                on_checked += 1;
            }
        }
    }

    let off = [(3, 1), (5, 2), (5, 3), (7, 2), (4, 3), (7, 5)];
    let mut off_ok = true;
    let mut shown = Vec::new();
    for (dt, dx) in off {
        let q = g.node(dt, 7 + dx);
        let want = interval(dt as f64, dx as f64);
        let deficits: Vec<f64> = graphs.iter().map(|cg| want - cg.time_separation(p, q)).collect();
        off_ok &= deficits.iter().all(|d| *d >= -1e-12);
        off_ok &= deficits.windows(2).all(|w| w[1] <= w[0] + 1e-12) && deficits[2] < deficits[0];
        shown.push(format!("({dt},{dx}): {:.3}/{:.3}/{:.3}", deficits[0], deficits[1], deficits[2]));
    }
    verdict(
        9,
        on_err <= 1e-9 && off_ok,
        format!("{on_checked} stencil displacements, max error {on_err:.1e}; deficits r=1/2/3 {}", shown.join(" ")),
    );
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_invariant(threads: usize) -> (i32, Vec<u8>, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cauchy-time"))
        .args(["invariant", "--steep", "--threads", &threads.to_string(), "--out"])
        .arg(dir.path())
        .arg("--config")
        .arg(config("cyl_z4.toml"))
        .output()
        .unwrap();
    let field = std::fs::read(dir.path().join("T.csv")).unwrap_or_default();
    (out.status.code().unwrap_or(-1), out.stdout, field)
}

#[test]
fn criterion_10_determinism() {
    let runs: Vec<_> = [1, 8, 1, 8].into_iter().map(run_invariant).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    let ok = same && runs[0].0 == 0 && !runs[0].1.is_empty() && !runs[0].2.is_empty();
    verdict(
        10,
        ok,
        format!("4 runs (threads 1, 8, 1, 8): exit {}, report {} bytes, T.csv {} bytes, identical={same}", runs[0].0, runs[0].1.len(), runs[0].2.len()),
    );
}

//! Command-line front end: config in, report and CSV artifacts out.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 schema or input
//! error, 3 synthesis failure.

pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::causal::CausalGraph;
use crate::error::Error;
use crate::field::ScalarField;
use crate::geroch::{
    chart_threshold, foliation_export, geroch_cauchy, geroch_pm, noncauchy_witness, verify_cauchy, verify_time_function,
    VolumeMeasure,
};
use crate::spacetime::{GroupAction, SampledSpacetime, SurfaceGraph};
use crate::steep::{adapted_temporal, steep_temporal, AdaptInputs, SteepOptions};
use crate::symmetry::{check_orbit_acausal, cone_equivariance_violations, invariant_temporal, InvariantRequest, SurfaceBounds};

pub use config::{RunConfig, SchemaError};
pub use report::Report;

/// Relative gap between the two witness chains that confirms the counterexample.
const WITNESS_GAP: f64 = 0.05;
/// Nodes whose stored closure is compared against a fresh BFS in `build`.
const SPOT_CHECKS: usize = 32;

#[derive(Debug, Parser)]
#[command(name = "cauchy-time", version, about = "Causal DAGs and Cauchy temporal functions on sampled spacetimes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report.txt, summary.json and CSV artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tolerance_scale: f64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Witness {
    /// Compare the two boundary-approaching chains left of the removed cone.
    Tplus,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model, causal graph and causality axioms.
    Build,
    /// Geroch time functions, verification and foliation export.
    Geroch {
        #[arg(long, value_enum)]
        expect_noncauchy: Option<Witness>,
    },
    /// Steep Cauchy temporal function.
    Steep,
    /// Steep Cauchy temporal function vanishing on one prescribed surface.
    Adapt,
    /// Group-invariant Cauchy temporal function with prescribed level sets.
    Invariant {
        #[arg(long)]
        steep: bool,
    },
    /// Property checks on a stored field CSV.
    Verify {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        steep: bool,
    },
    /// Node table and edge list.
    Export,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Schema(SchemaError),
    Synthesis(String),
    Io(String),
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Schema(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { path, message } => Failure::Schema(SchemaError { path, message }),
            Error::Input(message) => Failure::Schema(SchemaError { path: "<input>".into(), message }),
            other => Failure::Synthesis(other.to_string()),
        }
    }
}

/// Files produced by a command, written only when `--out` is given.
type Artifacts = Vec<(String, String)>;

pub fn execute(cli: &Cli) -> Outcome {
    let run = || run_command(cli);
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Failure::Io(format!("cannot start {n} threads: {e}"))),
        },
        None => run(),
    };
    let (report, artifacts) = match result {
        Ok(r) => r,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Schema(e) => (2, format!("error: {e}\n")),
                Failure::Synthesis(m) => (3, format!("error: synthesis failed: {m}\n")),
                Failure::Io(m) => (2, format!("error: {m}\n")),
            };
            return Outcome { code, stdout: String::new(), stderr: msg };
        }
    };
    let text = report.to_text();
    if let Some(dir) = &cli.out {
        let mut files = artifacts;
        files.push(("report.txt".into(), text.clone()));
        files.push(("summary.json".into(), report.to_json()));
        if let Err(e) = write_all(dir, &files) {
            return Outcome { code: 2, stdout: text, stderr: format!("error: {e}\n") };
        }
    }
    let (code, stderr) = if report.passed() {
        (0, String::new())
    } else {
        (1, format!("failed checks: {}\n", report.failed_checks().join(", ")))
    };
    Outcome { code, stdout: text, stderr }
}

fn write_all(dir: &Path, files: &Artifacts) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

struct Setup {
    cfg: RunConfig,
    st: SampledSpacetime,
    cg: CausalGraph,
    opts: SteepOptions,
}

fn setup(cli: &Cli) -> Result<Setup, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| SchemaError { path: "--config".into(), message: "a configuration file is required".into() })?;
    let cfg = RunConfig::load(path)?;
    let st = SampledSpacetime::build(&cfg.model)?;
    let cg = CausalGraph::build(&st, cfg.causal.stencil)?;
    let opts = SteepOptions { band_rows: cfg.steep.band_rows, tolerance_scale: cli.tolerance_scale };
    Ok(Setup { cfg, st, cg, opts })
}

fn run_command(cli: &Cli) -> Result<(Report, Artifacts), Failure> {
    if !(cli.tolerance_scale > 0.0 && cli.tolerance_scale.is_finite()) {
        return Err(SchemaError { path: "--tolerance-scale".into(), message: "must be positive".into() }.into());
    }
    let s = setup(cli)?;
    match &cli.command {
        Command::Build => build(&s, cli.seed),
        Command::Geroch { expect_noncauchy } => geroch(&s, *expect_noncauchy),
        Command::Steep => steep(&s),
        Command::Adapt => adapt(&s),
        Command::Invariant { steep } => invariant(&s, *steep),
        Command::Verify { field, steep } => verify(&s, field, *steep),
        Command::Export => export(&s, cli.out.is_some()),
    }
}

fn model_header(r: &mut Report, s: &Setup) {
    let g = &s.st.grid;
    r.put("model.family", serde_json::to_value(s.cfg.model.family).expect("family serialises"));
    r.put("model.resolution", format!("{}x{}", g.n_t, g.n_x));
    r.put_f64("model.h_t", g.h_t);
    r.put_f64("model.h_x", g.h_x);
    r.put("graph.stencil", s.cg.stencil);
    r.put("graph.nodes", s.cg.node_count());
    r.put("graph.edges", s.cg.edge_count());
}

fn build(s: &Setup, seed: u64) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("build");
    model_header(&mut r, s);
    let cg = &s.cg;
    r.put("graph.timelike_edges", cg.timelike_edge_count());
    let push_up = cg.check_push_up().len();
    let anti = cg.antisymmetry_violations();
    let diamonds = cg.diamond_bound_violations();
    let mut sample = cg.included_nodes().to_vec();
    sample.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    sample.truncate(SPOT_CHECKS);
    let closure_mismatches = sample
        .iter()
        .filter(|p| {
            let (mut a, mut b) = (cg.causal_future(**p), cg.bfs_future(**p));
            a.sort_unstable();
            b.sort_unstable();
            a != b
        })
        .count();
    r.put("check.seed", seed);
    r.put("causal.push_up_violations", push_up);
    r.put("causal.antisymmetry_violations", anti);
    r.put("causal.diamond_bound_violations", diamonds);
    r.put("causal.closure_spot_checks", sample.len());
    r.put("causal.closure_mismatches", closure_mismatches);
    r.check("acyclic", cg.check_causal());
    r.check("push_up", push_up == 0);
    r.check("antisymmetry", anti == 0);
    r.check("diamond_bound", diamonds == 0);
    r.check("closure_matches_bfs", closure_mismatches == 0);
    Ok((r, Vec::new()))
}

fn geroch(s: &Setup, witness: Option<Witness>) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("geroch");
    model_header(&mut r, s);
    let (st, cg) = (&s.st, &s.cg);
    let mu = VolumeMeasure::new(st, s.cfg.geroch.damping)?;
    let (tm, tp) = geroch_pm(cg, &mu);
    let mut files: Artifacts = vec![("t_minus.csv".into(), tm.to_csv(st)), ("t_plus.csv".into(), tp.to_csv(st))];
    let (vm, vp) = (verify_time_function(&tm, cg), verify_time_function(&tp, cg));
    r.put("geroch.t_minus_violations", vm);
    r.put("geroch.t_plus_violations", vp);
    r.check("t_minus_increasing", vm == 0);
    r.check("t_plus_increasing", vp == 0);
    if let Some(Witness::Tplus) = witness {
        let [xa, xb] = s.cfg.geroch.witness.ok_or_else(|| SchemaError {
            path: "geroch.witness".into(),
            message: "--expect-noncauchy needs the two chain positions".into(),
        })?;
        let w = noncauchy_witness(cg, &tm, &mu, xa, xb);
        r.put("witness.columns", format!("{} {}", w.columns[0], w.columns[1]));
        r.put_f64("witness.sup_a", w.sups[0]);
        r.put_f64("witness.sup_b", w.sups[1]);
        r.put_f64("witness.relative_gap", w.relative_gap);
        r.put("witness.both_trapped", w.both_trapped);
        r.check("noncauchy_confirmed", w.confirms(WITNESS_GAP));
        return Ok((r, files));
    }
    let t = geroch_cauchy(&tm, &tp)?;
    let vt = verify_time_function(&t, cg);
    let th = chart_threshold(st);
    let cauchy = verify_cauchy(&t, cg, th)?;
    let (lo, hi) = t.range();
    r.put("geroch.t_violations", vt);
    r.put_f64("geroch.t_min", lo);
    r.put_f64("geroch.t_max", hi);
    r.put_f64("cauchy.threshold", th);
    r.put("cauchy.chains", cauchy.chains.len());
    r.put("cauchy.failures", cauchy.failures.len());
    r.check("t_increasing", vt == 0);
    r.check("cauchy", cauchy.passed());
    if !s.cfg.geroch.levels.is_empty() {
        let fol = foliation_export(&t, st, &s.cfg.geroch.levels)?;
        let mut csv = String::from("level,i_x,x_coord,t_coord\n");
        for (level, surf) in fol.levels.iter().zip(&fol.surfaces) {
            for (j, u) in surf.u.iter().enumerate() {
                csv.push_str(&format!("{level:.12e},{j},{:.12e},{u:.12e}\n", st.grid.x_coord(j)));
            }
        }
        r.put("foliation.levels", fol.levels.len());
        files.push(("foliation.csv".into(), csv));
    }
    files.push(("t.csv".into(), t.to_csv(st)));
    Ok((r, files))
}

fn geroch_reference(s: &Setup) -> Result<ScalarField, Failure> {
    let mu = VolumeMeasure::new(&s.st, s.cfg.geroch.damping)?;
    let (tm, tp) = geroch_pm(&s.cg, &mu);
    Ok(geroch_cauchy(&tm, &tp)?)
}

fn steep(s: &Setup) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("steep");
    model_header(&mut r, s);
    let t_ref = geroch_reference(s)?;
    let out = steep_temporal(&s.st, &s.cg, &t_ref, &s.opts)?;
    let rep = &out.report;
    r.put("steep.future_bands", out.trace.future.len());
    r.put("steep.past_bands", out.trace.past.len());
    r.put_f64("steep.margin", rep.margin);
    r.put_f64("steep.tol_h", rep.tol_h);
    r.put("steep.increase_violations", rep.increase_violations);
    r.put("steep.band_bound_checked", rep.band_bound_checked);
    r.put("steep.band_bound_failures", rep.band_bound_failures);
    r.put("steep.growth_failures", rep.growth_failures);
    r.check("steep", rep.margin >= 1.0 - rep.tol_h);
    r.check("increasing", rep.increase_violations == 0);
    r.check("band_bound", rep.band_bound_failures == 0);
    r.check("growth", rep.growth_failures == 0);
    Ok((r, vec![("t1.csv".into(), out.field.to_csv(&s.st)), ("trace.txt".into(), out.trace.to_text())]))
}

struct Surfaces {
    levels: Vec<(SurfaceGraph, f64)>,
    bounds: SurfaceBounds,
}

fn surfaces(s: &Setup) -> Result<Option<Surfaces>, Failure> {
    let Some(sec) = &s.cfg.surfaces else { return Ok(None) };
    let st = &s.st;
    let mut levels = Vec::new();
    for (k, l) in sec.level.iter().enumerate() {
        levels.push((config::surface_from_expr(st, &l.height, &format!("surfaces.level[{k}].height"))?, l.value));
    }
    let bounds = SurfaceBounds {
        s_plus: config::surface_from_expr(st, &sec.plus.height, "surfaces.plus.height")?,
        s_minus: config::surface_from_expr(st, &sec.minus.height, "surfaces.minus.height")?,
        f_plus: vec![sec.plus.bound; st.grid.n_x],
        f_minus: vec![sec.minus.bound; st.grid.n_x],
    };
    Ok(Some(Surfaces { levels, bounds }))
}

fn adapt(s: &Setup) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("adapt");
    model_header(&mut r, s);
    let surf = surfaces(s)?.filter(|x| x.levels.len() == 1).ok_or_else(|| SchemaError {
        path: "surfaces.level".into(),
        message: "adapt needs exactly one level surface with plus/minus bounds".into(),
    })?;
    let b = &surf.bounds;
    let inp = AdaptInputs {
        s: &surf.levels[0].0,
        s_plus: &b.s_plus,
        s_minus: &b.s_minus,
        f_plus: &b.f_plus,
        f_minus: &b.f_minus,
        t_plus: None,
        t_minus: None,
    };
    let out = adapted_temporal(&s.st, &s.cg, &inp, &s.opts)?;
    let rep = &out.report;
    let h_t = s.st.grid.h_t;
    r.put_f64("collar.kappa", out.collar.kappa);
    r.put_f64("collar.width", out.collar.width);
    r.put_f64("adapt.surface_max_abs", rep.surface_max_abs);
    r.put_f64("adapt.level_distance", rep.level_distance);
    r.put_f64("adapt.margin", rep.margin);
    r.put_f64("adapt.tol_h", rep.tol_h);
    r.put("adapt.plateau_failures", rep.plateau_failures);
    r.put("adapt.growth_failures", rep.growth_failures);
    r.put("adapt.surface_failures", rep.surface_failures);
    r.put("adapt.increase_violations", rep.increase_violations);
    r.check("zero_on_surface", rep.surface_max_abs <= 1e-6);
    r.check("level_set", rep.level_distance <= 2.0 * h_t);
    r.check("steep", rep.margin >= 1.0 - rep.tol_h);
    r.check("plateaus", rep.plateau_failures == 0);
    r.check("growth", rep.growth_failures == 0);
    r.check("surface_bounds", rep.surface_failures == 0);
    r.check("increasing", rep.increase_violations == 0);
    Ok((r, vec![("t3.csv".into(), out.field.to_csv(&s.st)), ("theta.csv".into(), out.theta.to_csv(&s.st))]))
}

fn invariant(s: &Setup, steep: bool) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("invariant");
    model_header(&mut r, s);
    let (st, cg) = (&s.st, &s.cg);
    let group = match &s.cfg.group {
        Some(spec) => GroupAction::build(st, spec)?,
        None => GroupAction::trivial(st),
    };
    let orbit = check_orbit_acausal(cg, &group).len();
    let cones = cone_equivariance_violations(cg, &group).len();
    r.put("group.order", group.order());
    r.put("group.isometric", group.is_isometric);
    r.put("group.orbit_violations", orbit);
    r.put("group.cone_equivariance_violations", cones);
    let req = match surfaces(s)? {
        Some(x) => InvariantRequest { surfaces: x.levels, bounds: Some(x.bounds), steep },
        None => InvariantRequest { steep, ..Default::default() },
    };
    let out = invariant_temporal(st, cg, &group, &req, &s.opts)?;
    let rep = &out.report;
    r.put("invariant.surfaces", req.surfaces.len());
    r.put("invariant.steep", rep.steep);
    r.put_f64("invariant.deviation", rep.invariance_deviation);
    r.put_f64("invariant.margin", rep.margin);
    if let Some(pre) = rep.pre_average_margin {
        r.put_f64("invariant.pre_average_margin", pre);
    }
    r.put_f64("invariant.tol_h", rep.tol_h);
    r.put("invariant.temporal_failures", rep.temporal_failures);
    r.put("invariant.increase_violations", rep.increase_violations);
    for (k, d) in rep.level_distances.iter().enumerate() {
        r.put_f64(&format!("invariant.level_distance[{k}]"), *d);
    }
    r.put("invariant.growth_failures", rep.growth_failures);
    r.put("invariant.surface_failures", rep.surface_failures);
    r.check("orbits_acausal", orbit == 0);
    r.check("cone_equivariance", cones == 0);
    r.check("invariance", rep.invariance_deviation <= crate::symmetry::INVARIANCE_TOL);
    r.check("temporal", rep.temporal_failures == 0 && rep.increase_violations == 0);
    if steep {
        r.check("steep", rep.margin >= 1.0 - rep.tol_h);
    }
    r.check("level_sets", rep.level_distances.iter().all(|d| *d <= 2.0 * st.grid.h_t));
    r.check("growth", rep.growth_failures == 0);
    r.check("surface_bounds", rep.surface_failures == 0);
    Ok((r, vec![("T.csv".into(), out.field.to_csv(st))]))
}

/// Inverse of [`ScalarField::to_csv`].
pub fn read_field_csv(st: &SampledSpacetime, text: &str) -> Result<ScalarField, String> {
    let g = &st.grid;
    let mut values = vec![f64::NAN; st.len()];
    let mut seen = vec![false; st.len()];
    for (k, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || format!("line {}: expected `i_t,i_x,t_coord,x_coord,value`", k + 1);
        if cols.len() != 5 {
            return Err(bad());
        }
        let i: usize = cols[0].parse().map_err(|_| bad())?;
        let j: usize = cols[1].parse().map_err(|_| bad())?;
        let v: f64 = cols[4].parse().map_err(|_| bad())?;
        if i >= g.n_t || j >= g.n_x {
            return Err(format!("line {}: node ({i}, {j}) outside the {}x{} grid", k + 1, g.n_t, g.n_x));
        }
        let n = g.node(i, j);
        values[n] = v;
        seen[n] = true;
    }
    if let Some(n) = (0..st.len()).find(|n| !seen[*n]) {
        return Err(format!("node {:?} missing", g.index(n)));
    }
    Ok(ScalarField { values })
}

fn verify(s: &Setup, path: &Path, steep: bool) -> Result<(Report, Artifacts), Failure> {
    let mut r = Report::new("verify");
    model_header(&mut r, s);
    let (st, cg) = (&s.st, &s.cg);
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    let f = read_field_csv(st, &text).map_err(|m| SchemaError { path: "--field".into(), message: m })?;
    let non_finite = (0..st.len()).filter(|n| st.included[*n] && !f.get(*n).is_finite()).count();
    r.put("verify.non_finite", non_finite);
    r.check("finite", non_finite == 0);
    if non_finite > 0 {
        return Ok((r, Vec::new()));
    }
    let grad = f.gradient_report(st, s.opts.tolerance_scale);
    let not_timelike = ScalarField::interior_nodes(st).filter(|n| f.gradient_sq(st, *n).is_some_and(|q| q >= 0.0)).count();
    let margin = f.steepness_margin(st);
    let tol_h = s.opts.tolerance_scale * (st.grid.h_t + st.grid.h_x);
    let inc = verify_time_function(&f, cg);
    let cauchy = verify_cauchy(&f, cg, chart_threshold(st))?;
    r.put("verify.gradient_checked", grad.checked);
    r.put("verify.gradient_bad", grad.bad.len());
    r.put("verify.not_timelike", not_timelike);
    r.put_f64("verify.margin", margin);
    r.put_f64("verify.tol_h", tol_h);
    r.put("verify.increase_violations", inc);
    r.put("verify.cauchy_failures", cauchy.failures.len());
    r.check("temporal", grad.bad.is_empty() && not_timelike == 0);
    r.check("increasing", inc == 0);
    r.check("cauchy", cauchy.passed());
    if steep {
        r.check("steep", margin >= 1.0 - tol_h);
    }
    Ok((r, Vec::new()))
}

fn export(s: &Setup, has_out: bool) -> Result<(Report, Artifacts), Failure> {
    if !has_out {
        return Err(SchemaError { path: "--out".into(), message: "export writes files and needs an output directory".into() }.into());
    }
    let mut r = Report::new("export");
    model_header(&mut r, s);
    let (st, g) = (&s.st, &s.st.grid);
    let mut nodes = String::from("i_t,i_x,t_coord,x_coord,included,volume_density\n");
    for n in 0..st.len() {
        let (i, j) = g.index(n);
        let (t, x) = g.coords(n);
        nodes.push_str(&format!("{i},{j},{t:.12e},{x:.12e},{},{:.12e}\n", u8::from(st.included[n]), st.volume_density[n]));
    }
    let mut edges = Vec::new();
    s.cg.export_edges(&mut edges).map_err(|e| Failure::Io(e.to_string()))?;
    let edges = String::from_utf8(edges).expect("edge list is ascii");
    r.put("export.files", "nodes.csv edges.txt");
    Ok((r, vec![("nodes.csv".into(), nodes), ("edges.txt".into(), edges)]))
}

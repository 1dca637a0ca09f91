use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cauchy-time"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], cfg: &Path, out: Option<&Path>) -> Output {
    let mut c = bin();
    c.args(args).arg("--config").arg(cfg);
    if let Some(dir) = out {
        c.arg("--out").arg(dir);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[model]
family = "minkowski2d"
resolution = [21, 21]
"#;

#[test]
fn build_passes_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["build", "--seed", "7"], &config("diamond.toml"), Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("command = build\n"));
    assert!(text.ends_with("status = pass\n"));
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), text);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "build");
    assert_eq!(summary["passed"], true);
}

#[test]
fn geroch_writes_fields_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["geroch"], &config("diamond.toml"), Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    for f in ["t_minus.csv", "t_plus.csv", "t.csv", "foliation.csv"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let o = run(&["geroch", "--expect-noncauchy", "tplus"], &config("carved.toml"), None);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn unknown_key_is_a_schema_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[model.params]\nwidth = 2.0\n"));
    let o = run(&["build"], &cfg, None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("model.params.width"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_values_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("[21, 21]", "[21, 2]"));
    assert_eq!(run(&["build"], &cfg, None).status.code(), Some(2));
    // steep with a conformal but non-isometric group is refused
    let o = run(&["invariant", "--steep"], &config("warp_z2.toml"), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("isometric"));
    let o = bin().arg("build").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_round_trip_and_failing_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("geroch");
    assert_eq!(run(&["geroch"], &cfg, Some(&out)).status.code(), Some(0));
    let t = out.join("t.csv");
    let o = run(&["verify", "--field", t.to_str().unwrap()], &cfg, None);
    assert!(stdout(&o).contains("verify.increase_violations = 0"), "{}", stdout(&o));

    // the negated field decreases along every edge
    let text = std::fs::read_to_string(&t).unwrap();
    let mut flipped = String::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            flipped.push_str(line);
        } else {
            let (head, v) = line.rsplit_once(',').unwrap();
            flipped.push_str(&format!("{head},{}", -v.parse::<f64>().unwrap()));
        }
        flipped.push('\n');
    }
    let bad = dir.path().join("flipped.csv");
    std::fs::write(&bad, flipped).unwrap();
    let o = run(&["verify", "--field", bad.to_str().unwrap()], &cfg, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("check.increasing = fail"));

    let truncated = dir.path().join("short.csv");
    std::fs::write(&truncated, text.lines().take(10).collect::<Vec<_>>().join("\n")).unwrap();
    let o = run(&["verify", "--field", truncated.to_str().unwrap()], &cfg, None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_lists_nodes_and_edges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(run(&["export"], &cfg, None).status.code(), Some(2));
    let out = dir.path().join("export");
    assert_eq!(run(&["export"], &cfg, Some(&out)).status.code(), Some(0));
    let nodes = std::fs::read_to_string(out.join("nodes.csv")).unwrap();
    assert_eq!(nodes.lines().count(), 1 + 21 * 21);
    let edges = std::fs::read_to_string(out.join("edges.txt")).unwrap();
    let first = edges.lines().next().unwrap();
    let cols: Vec<&str> = first.split_whitespace().collect();
    assert_eq!(cols.len(), 3, "{first}");
    assert!(cols[0].parse::<usize>().is_ok() && cols[1].parse::<usize>().is_ok());
}

#[test]
fn steep_and_adapt_on_the_square() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["steep"], &config("square.toml"), Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("t1.csv").exists() && dir.path().join("trace.txt").exists());
    let o = run(&["adapt"], &config("square.toml"), Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(dir.path().join("t3.csv").exists() && dir.path().join("theta.csv").exists());
}

#[test]
fn adapt_without_surfaces_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(run(&["adapt"], &cfg, None).status.code(), Some(2));
}

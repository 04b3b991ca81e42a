use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fosp");

const ALG2: &str = r#"
seed = 3
[instance]
kind = "quadratic"
dx = 1
dy = 1
a = [-1.0]
b = [0.5]
c = [2.0]
a_vec = [0.3]
b_vec = [0.1]
[sweep]
D = [0.0009]
eps = [0.1]
[solver]
algorithm = "alg2"
x0 = [0.1]
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn fosp(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out-dir").arg(out).env_remove("FOSP_OUT_DIR").output().unwrap()
}

#[test]
fn good_config_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bilinear.toml", ALG2);
    let out = dir.path().join("out");
    let o = fosp(&["run", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("bilinear.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("run_id,family,k,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 19);
    assert_eq!(row[15], "", "wall_ms must be blank without --timing");
    assert!(out.join("runs/bilinear/0000.json").exists());
    assert!(out.join("plots/bilinear/0000.csv").exists());
}

#[test]
fn timing_fills_wall_ms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.toml", ALG2);
    let out = dir.path().join("out");
    let o = fosp(&["--timing", "run", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("t.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(row[15].parse::<f64>().is_ok());
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "env.toml", ALG2);
    let out = dir.path().join("from_env");
    let o = Command::new(BIN).args(["run", cfg.to_str().unwrap()]).env("FOSP_OUT_DIR", &out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("env.csv").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &ALG2.replace("x0 = [0.1]", "x0 = [0.1]\nstep = 2"));
    let o = fosp(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.toml", &ALG2.replace("eps = [0.1]", "eps = []"));
    let o = fosp(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fosp(&["run", dir.path().join("nope.toml").to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_assertion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{ALG2}\n[assert]\nmin_certified = 2\n");
    let cfg = write_config(dir.path(), "assert.toml", &body);
    let o = fosp(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exhausted_budget_exits_three_and_keeps_best_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
seed = 5
[instance]
kind = "ball_cubic"
dim = 8
data_seed = 2
[sweep]
D = [0.25]
eps = [0.2]
[solver]
algorithm = "alg3"
x0 = [0.5]
gap = 0.5
t_cap = 10
"#;
    let cfg = write_config(dir.path(), "budget.toml", body);
    let out = dir.path().join("out");
    let o = fosp(&["run", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err = std::fs::read_to_string(out.join("runs/budget/0000.error.json")).unwrap();
    assert!(err.contains("best_iterate"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "same.toml", ALG2);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(fosp(&["run", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(fosp(&["--jobs", "2", "run", cfg.to_str().unwrap()], &b).status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("same.csv")).unwrap(), std::fs::read(b.join("same.csv")).unwrap());
    assert_eq!(
        std::fs::read(a.join("runs/same/0000.json")).unwrap(),
        std::fs::read(b.join("runs/same/0000.json")).unwrap()
    );
}

#[test]
fn seed_flag_changes_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed.toml", ALG2);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(fosp(&["run", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(fosp(&["--seed", "99", "run", cfg.to_str().unwrap()], &b).status.code(), Some(0));
    let hash = |p: &Path| std::fs::read_to_string(p.join("seed.csv")).unwrap().lines().nth(1).unwrap().split(',').nth(17).unwrap().to_string();
    assert_ne!(hash(&a), hash(&b));
}

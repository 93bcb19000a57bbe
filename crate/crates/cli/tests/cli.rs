use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn chemonet(args: &[&str], cfg: &str, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemonet"))
        .args(args)
        .arg("--config")
        .arg(config(cfg))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn validate_reports_star_as_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["validate"], "star.toml", dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("nondegeneracy condition satisfied, acyclic"));
}

#[test]
fn validate_rejects_asymmetric_sigma_with_node_id() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["validate"], "asymmetric.toml", dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("node 10"), "{}", stdout(&o));
}

#[test]
fn validate_warns_on_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["validate"], "cyclic.toml", dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("stationary solver unavailable"));
}

#[test]
fn zero_data_gives_all_zero_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["simulate", "--tmax", "2"], "zero.toml", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("time_series.csv"));
    assert_eq!(rows.len(), 201);
    assert_eq!(rows.last().unwrap()[0], 2.0);
    assert!(rows.iter().all(|r| r[1..].iter().all(|x| *x == 0.0)));
    let snap = std::fs::read_to_string(dir.path().join("snapshot_t0.txt")).unwrap();
    assert!(snap.lines().skip(2).all(|l| l.split(' ').skip(2).all(|x| x == "0e0")));
}

#[test]
fn constant_solution_does_not_drift() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["simulate"], "cs.toml", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("time_series.csv"));
    let cols: Vec<&str> = header.split(',').collect();
    assert_eq!(rows.last().unwrap()[0], 10.0);
    for name in ["dist_to_stationary_u", "dist_to_stationary_v", "dist_to_stationary_psi"] {
        let c = cols.iter().position(|h| *h == name).unwrap();
        assert!(rows.iter().all(|r| r[c] <= 1e-10), "{name}");
    }
}

#[test]
fn distances_are_nan_without_a_profile() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("star.toml")).unwrap();
    let cut = text.find("[stationary]").unwrap();
    let end = text[cut..].find("[perturbation]").unwrap();
    let cfg = dir.path().join("no_profile.toml");
    std::fs::write(&cfg, format!("{}{}", &text[..cut], &text[cut + end..])).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_chemonet"))
        .args(["simulate", "--tmax", "0.5", "--cells", "20", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_rows(&dir.path().join("time_series.csv"));
    assert!(rows.iter().all(|r| r[6].is_nan() && r[7].is_nan() && r[8].is_nan()));
    assert!(rows.iter().all(|r| r[5].is_finite()));
}

#[test]
fn stationary_writes_profile_report_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["stationary", "--dump-matrix"], "star.toml", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("converged = true"));
    assert!(report.contains("[thresholds]"));
    let profile = std::fs::read_to_string(dir.path().join("profile.txt")).unwrap();
    assert_eq!(profile.lines().next(), Some("arc x U V Psi"));
    assert_eq!(profile.lines().count(), 1 + 3 * 101);
    let matrix = std::fs::read_to_string(dir.path().join("matrix.txt")).unwrap();
    assert!(matrix.starts_with("# n = 303"));
}

#[test]
fn stationary_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["stationary"], "asymmetric.toml", dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sigma not symmetric"), "{}", stderr(&o));
}

#[test]
fn missing_simulation_section_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["simulate"], "path2.toml", dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[simulation]"));
}

#[test]
fn perturbation_decays() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["perturb", "--tmax", "50"], "decay.toml", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&dir.path().join("distance.csv"));
    assert_eq!(header, "t,sup_u,sup_v,sup_psi,h1_u,h1_v,h1_psi,ft");
    let sup = |r: &Vec<f64>| r[1].max(r[2]).max(r[3]);
    assert!(sup(rows.last().unwrap()) <= 1e-3 * sup(&rows[0]));
    assert!(dir.path().join("perturb_report.toml").exists());
}

#[test]
fn oracle_check_passes_on_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemonet(&["oracle-check"], "path2.toml", dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS"));
    let strict = chemonet(&["oracle-check", "--tol", "1e-12"], "path2.toml", dir.path());
    assert_eq!(strict.status.code(), Some(1));
    assert!(stdout(&strict).starts_with("FAIL"));
}

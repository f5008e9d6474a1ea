use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const DISK: &str = "[domain]\nkind = disk\ncenter = 0 0\nradius = 1\n";

fn oscbound(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscbound"))
        .args(args)
        .current_dir(dir)
        .env_remove("OSCBOUND_WORKERS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn verify_canonical_case() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "canon.cfg",
        &format!("{DISK}[data]\nsource = linear(1,0,0)\n[inequality]\nh = 0.04\n"),
    );
    let out = oscbound(&["verify", "--config", &cfg, "--out", "res"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = tmp.path().join("res/inequality.csv");
    let header = fs::read_to_string(&csv).unwrap();
    assert!(header.starts_with("run_id,kind,alpha,p,c,C,k_bound,lhs,rhs,sigma_star,branch,slack,"));
    let r = rows(&csv);
    assert_eq!(r.len(), 1);
    let slack: f64 = r[0][column(&csv, "slack")].parse().unwrap();
    assert!((slack - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-3, "{slack}");
    assert_eq!(&r[0][column(&csv, "status")], "ok");
    assert!(tmp.path().join("res/slack_vs_h.svg").exists());
    assert!(tmp.path().join("res/rhs_sigma.svg").exists());
}

#[test]
fn bad_config_reports_line_and_exits_nonzero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.cfg",
        &format!("{DISK}[data]\nsource = linear(1,0,0)\n[inequality]\nalpha = 1.5\n"),
    );
    let out = oscbound(&["verify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 8: alpha must lie in (0,1]"), "{err}");
}

#[test]
fn sweep_is_deterministic_and_refines() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.cfg",
        &format!(
            "{DISK}[data]\nsource = harmonic(3,re)\n[inequality]\np = 1 2 4\nh = 0.08 0.04 0.02\n"
        ),
    );
    let a = oscbound(
        &["sweep", "--config", &cfg, "--out", "a", "--workers", "1"],
        tmp.path(),
    );
    assert!(a.status.success());
    let b = Command::new(env!("CARGO_BIN_EXE_oscbound"))
        .args(["sweep", "--config", &cfg, "--out", "b"])
        .current_dir(tmp.path())
        .env("OSCBOUND_WORKERS", "3")
        .output()
        .unwrap();
    assert!(b.status.success());
    let (ca, cb) = (
        fs::read(tmp.path().join("a/inequality.csv")).unwrap(),
        fs::read(tmp.path().join("b/inequality.csv")).unwrap(),
    );
    assert_eq!(ca, cb);
    assert_eq!(rows(&tmp.path().join("a/inequality.csv")).len(), 9);

    let refinement = tmp.path().join("a/refinement.csv");
    let min_order = column(&refinement, "min_order");
    for r in rows(&refinement) {
        let order: f64 = r[min_order].parse().unwrap();
        assert!(order >= 1.5, "{order}");
    }
}

#[test]
fn compare_modes() {
    let tmp = TempDir::new().unwrap();
    for h in ["0.08", "0.04"] {
        let cfg = write(
            tmp.path(),
            &format!("c{h}.cfg"),
            &format!("{DISK}[data]\nsource = harmonic(2,im)\n[inequality]\nh = {h}\n"),
        );
        let out = oscbound(
            &["verify", "--config", &cfg, "--out", &format!("r{h}")],
            tmp.path(),
        );
        assert!(out.status.success());
    }
    let same = oscbound(
        &["compare", "r0.08/inequality.csv", "r0.08/inequality.csv"],
        tmp.path(),
    );
    assert!(same.status.success());
    assert!(String::from_utf8_lossy(&same.stdout).contains("no refinement"));

    let refined = oscbound(
        &[
            "compare",
            "r0.08/inequality.csv",
            "r0.04/inequality.csv",
            "--out",
            "cmp",
        ],
        tmp.path(),
    );
    assert!(refined.status.success());
    assert!(String::from_utf8_lossy(&refined.stdout).contains("min order"));
    assert!(tmp.path().join("cmp/refinement.csv").exists());

    let other = write(
        tmp.path(),
        "other.cfg",
        &format!("{DISK}[data]\nsource = linear(0,1,0)\n[inequality]\nh = 0.04\n"),
    );
    assert!(
        oscbound(&["verify", "--config", &other, "--out", "o"], tmp.path())
            .status
            .success()
    );
    let mismatch = oscbound(
        &["compare", "r0.08/inequality.csv", "o/inequality.csv"],
        tmp.path(),
    );
    assert!(!mismatch.status.success());
    assert!(String::from_utf8_lossy(&mismatch.stderr).contains("mismatched"));
}

#[test]
fn meanvalue_of_squared_distance() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "mv.cfg",
        &format!("{DISK}[meanvalue]\nreference = sqdist(0,0)\nradii = 0.2 0.4 0.6\n"),
    );
    let out = oscbound(&["meanvalue", "--config", &cfg, "--out", "mv"], tmp.path());
    assert!(out.status.success());
    let csv = tmp.path().join("mv/meanvalue.csv");
    let avg = column(&csv, "average");
    let got: Vec<f64> = rows(&csv).iter().map(|r| r[avg].parse().unwrap()).collect();
    for (g, e) in got.iter().zip([0.02, 0.08, 0.18]) {
        assert!((g - e).abs() < 5e-4, "{g} vs {e}");
    }
    assert!(tmp.path().join("mv/averages_vs_r.svg").exists());
}

#[test]
fn extremal_runs_and_variable_fields_are_refused() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "ex.cfg",
        &format!("{DISK}[extremal]\ndegree = 3\npopulation = 8\niterations = 5\nh = 0.1\n"),
    );
    let out = oscbound(&["extremal", "--config", &cfg, "--out", "ex"], tmp.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = tmp.path().join("ex/extremal.csv");
    let best = column(&csv, "best_objective");
    let trace: Vec<f64> = rows(&csv)
        .iter()
        .map(|r| r[best].parse().unwrap())
        .collect();
    assert_eq!(trace.len(), 6);
    assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    assert!(trace[5] >= 2.8284 && trace[5] <= 4.0);

    let board = write(
        tmp.path(),
        "board.cfg",
        &format!(
            "{DISK}[field]\nkind = checkerboard\ncell = 0.25\neven = 1 0 1\nodd = 4 0 4\n[extremal]\ndegree = 2\n"
        ),
    );
    let refused = oscbound(&["extremal", "--config", &board, "--out", "eb"], tmp.path());
    assert_eq!(refused.status.code(), Some(1));
}

#[test]
fn variable_fields_are_exploratory_and_errors_fail_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "var.cfg",
        &format!(
            "{DISK}[field]\nkind = random\ncell = 0.2\nmin_eig = 1\nmax_eig = 5\nseed = 3\n[data]\nsource = random\ncount = 2\ndegree = 4\n[inequality]\nh = 0.08\n"
        ),
    );
    let out = oscbound(&["verify", "--config", &cfg, "--out", "v"], tmp.path());
    assert!(out.status.success());
    let csv = tmp.path().join("v/inequality.csv");
    let gated = column(&csv, "gated");
    assert!(rows(&csv).iter().all(|r| &r[gated] == "false"));

    let coarse = write(
        tmp.path(),
        "coarse.cfg",
        &format!("{DISK}[data]\nsource = linear(1,0,0)\n[inequality]\nh = 1.5\n"),
    );
    let out = oscbound(&["verify", "--config", &coarse, "--out", "c"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = tmp.path().join("c/inequality.csv");
    assert_eq!(&rows(&csv)[0][column(&csv, "status")], "error");
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if let Err(d) = oscbound::harness::parse_config(&text) {
            panic!("{}: {d}", path.display());
        }
        count += 1;
    }
    assert!(count >= 5);
}

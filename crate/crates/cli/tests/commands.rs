use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qdamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdamp")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

fn run_ok(args: &[&str]) {
    let out = qdamp(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn propagate_kernel_moments_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "[grid]\nx_min = -20.0\nx_max = 20.0\nn = 512\n[run]\ntimes = [0.5, 1.0]\n");
    let o = out.to_str().unwrap();
    for cmd in ["propagate", "kernel", "moments"] {
        run_ok(&["--config", &cfg, "--out", o, cmd]);
    }
    assert_eq!(header(&out.join("psi_000.csv")), "x,re,im,abs2");
    assert_eq!(fs::read_to_string(out.join("psi_001.csv")).unwrap().lines().count(), 513);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("psi_001.json")).unwrap()).unwrap();
    assert_eq!(meta["t"], 1.0);
    assert!(meta["norm2"].as_f64().unwrap() > 1.0);
    assert_eq!(header(&out.join("kernel.csv")), "t,alpha,beta,gamma,pref_re,pref_im,source");
    assert_eq!(fs::read_to_string(out.join("kernel.csv")).unwrap().lines().count(), 5);
    assert_eq!(header(&out.join("moments.csv")), "t,p2,x2,sym,x1,p1,one,E");
    assert!(out.join("moments.json").exists());
}

#[test]
fn mehler_and_eigen_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "[model]\nname = \"shifted\"\n[run]\neps = [0.1]\nterms = [50, 100]\nlevels = 3\n");
    let o = out.to_str().unwrap();
    run_ok(&["--config", &cfg, "--out", o, "mehler"]);
    run_ok(&["--config", &cfg, "--out", o, "eigen"]);
    assert_eq!(header(&out.join("mehler_000.csv")), "N,eps,sup_error");
    assert_eq!(header(&out.join("eigen.csv")), "n,E_n,norm_defect,rayleigh_defect");
    assert_eq!(fs::read_to_string(out.join("eigen.csv")).unwrap().lines().count(), 5);
}

#[test]
fn config_errors_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nname = \"shifted\"\nlambda = 1.5\n");
    let out = qdamp(&["--config", &cfg, "eigen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("underdamped"));

    let cfg = write_config(dir.path(), "[model]\nomega0 = 1..0\n");
    let out = qdamp(&["--config", &cfg, "kernel"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(qdamp(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn verify_is_reproducible_and_detects_a_truncated_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(&["--seed", "7", "--out", a.to_str().unwrap(), "verify"]);
    run_ok(&["--seed", "7", "--out", b.to_str().unwrap(), "verify"]);
    let report = fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, fs::read(b.join("report.json")).unwrap());
    let parsed: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(parsed["overall"], true);
    assert!(a.join("timings.json").exists());

    let bad = dir.path().join("bad");
    let cfg = write_config(dir.path(), "[grid]\nx_min = -60.0\nx_max = 60.0\nn = 256\n");
    let out = qdamp(&["--config", &cfg, "--out", bad.to_str().unwrap(), "verify"]);
    assert_eq!(out.status.code(), Some(1));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(bad.join("report.json")).unwrap()).unwrap();
    assert_eq!(parsed["overall"], false);
    let checks = parsed["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"].as_str().unwrap().starts_with("02_") && c["pass"] == false));
}

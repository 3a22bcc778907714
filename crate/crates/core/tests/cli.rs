use std::fs;
use std::process::Command;

fn run(args: &[&str]) -> (i32, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_monofront"))
        .args(args)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    (status.code().unwrap(), dir)
}

#[test]
fn solve_local_front_writes_profile() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    fs::write(
        cfg.path(),
        "kernel = dirac\ng = nicholson\nh = 0.2\nc = 5\n[g]\np = 6\ndelta = 1\n",
    )
    .unwrap();
    let (code, dir) = run(&["solve", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(profile.starts_with("t,phi\n"));
    assert!(dir.path().join("kernelN.csv").exists());
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("config_sha256 = "));
    assert!(report.contains("residual_yp = "));
}

#[test]
fn solve_below_critical_speed_exits_2() {
    let (code, dir) = run(&["solve", "--set", "c=4", "--set", "h=0"]);
    assert_eq!(code, 2);
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn check_model_reports_st_failure() {
    let (code, dir) = run(&["check-model", "--set", "g.p=20"]);
    assert_eq!(code, 1);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("ST = false"));
    assert!(report.lines().any(|l| l.starts_with("ST:") && l.ends_with("FAIL")));
}

#[test]
fn unknown_key_and_missing_file() {
    assert_eq!(run(&["solve", "--set", "kernel.width=1"]).0, 1);
    assert_eq!(run(&["solve", "--config", "/nonexistent/run.cfg"]).0, 4);
}

#[test]
fn outputs_are_byte_identical() {
    let (a, da) = run(&["domain-map", "--set", "map.h_max=0.5", "--set", "map.c_max=4"]);
    let (b, db) = run(&["domain-map", "--set", "map.h_max=0.5", "--set", "map.c_max=4"]);
    assert_eq!((a, b), (0, 0));
    for name in ["domain_map.csv", "report.txt"] {
        assert_eq!(
            fs::read(da.path().join(name)).unwrap(),
            fs::read(db.path().join(name)).unwrap()
        );
    }
    let csv = fs::read_to_string(da.path().join("domain_map.csv")).unwrap();
    assert!(csv.starts_with("h,c,in_D0,on_D0_boundary,in_Dkappa,in_DL,c_sharp,xi_star,margin_kappa\n"));
}

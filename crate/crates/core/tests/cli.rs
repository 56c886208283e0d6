use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dislocflow"))
}

#[test]
fn version_flag() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(
        s.contains("dislocflow") && s.contains(env!("CARGO_PKG_VERSION")),
        "{s}"
    );
}

#[test]
fn profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("phi.csv");
    let out = bin()
        .args(["profile", "--alpha", "1", "--samples", "101", "--out"])
        .arg(&p)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,phi,phi_prime"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let y_alpha = 2.0 / std::f64::consts::PI.sqrt();
    assert!((rows[0][0] + 2.0 * y_alpha).abs() < 1e-12);
    assert_eq!(rows[0][1], 0.0);
    assert_eq!(rows[100][1], 1.0);
    assert!((rows[50][1] - 0.5).abs() < 1e-12);
}

#[test]
fn getoor_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    let out = bin()
        .args([
            "getoor",
            "--alpha",
            "1",
            "--n",
            "1024",
            "--half-length",
            "8",
            "--out",
        ])
        .arg(&p)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("x,v,lap_spectral,lap_quadrature\n"));
    assert_eq!(text.lines().count(), 1025);
}

#[test]
fn evolve_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# short box run\nalpha = 0.5\nn = 1024\nhalf_length = 8\nt_end = 1\nic = box\nic_params = 1,1\nsnapshot_every = 20\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let mut listed: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let mut present: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    listed.sort();
    present.sort();
    assert_eq!(listed, present);
    assert!(manifest["levy_constant"].as_f64().unwrap() > 0.0);
    assert_eq!(manifest["config"]["epsilon"], "auto");
    assert!(present.iter().any(|p| p == "snap_0.csv"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpha = 2.5\n").unwrap();
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha must lie in (0,2)"));

    let missing = dir.path().join("nope.cfg");
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&missing)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // explicit fixed step far above the stability limit
    let cfg = dir.path().join("unstable.cfg");
    fs::write(
        &cfg,
        "alpha = 1\nn = 1024\nhalf_length = 8\nt_end = 5\nic = box\nepsilon = 0\ndt = 0.5\n",
    )
    .unwrap();
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("u"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_profile_suite() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.csv");
    let out = bin()
        .args(["verify", "--suite", "profile", "--report"])
        .arg(&report)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[PASS] criterion  3"));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("criterion,label,value,bound,pass\n"));
}

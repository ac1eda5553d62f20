use std::path::Path;
use std::process::{Command, Output};

fn zoll(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zoll"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn zoll")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Data rows as `(header, rows)`, skipping `#` lines.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (h, rows) = table(text);
    let k = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn csv_starts_with_digest() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["radon", "--set", "count=3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read(dir.path(), "radon.csv");
    let first = text.lines().next().unwrap();
    let hex = first.strip_prefix("# config-sha256: ").unwrap();
    assert_eq!(hex.len(), 64);
    assert!(hex.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(table(&text).1.len(), 3);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let run = |dir: &Path, seed: &str, jobs: &str| {
        let o = zoll(&["radon", "--set", "count=8", "--seed", seed, "--jobs", jobs], dir);
        assert!(o.status.success(), "{}", stderr(&o));
        read(dir, "radon.csv")
    };
    let first = run(a.path(), "5", "1");
    assert_eq!(first, run(b.path(), "5", "3"));
    assert_ne!(first, run(c.path(), "6", "1"));
}

#[test]
fn json_config_matches_key_value() {
    let dir = tempfile::tempdir().unwrap();
    let kv = dir.path().join("run.conf");
    let js = dir.path().join("run.json");
    std::fs::write(&kv, "# cubic Tannery surface\nsurface = tannery\nsigma = 0.3, -0.3\ncount = 4\nseed = 11\n").unwrap();
    std::fs::write(&js, r#"{"surface": "tannery", "sigma": [0.3, -0.3], "count": 4, "seed": 11}"#).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (cfg, out) in [(&kv, &a), (&js, &b)] {
        let o = zoll(&["radon", "--config", cfg.to_str().unwrap()], out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(read(&a, "radon.csv"), read(&b, "radon.csv"));
}

#[test]
fn odd_potential_has_vanishing_radon_transform() {
    // Great circles are antipodally symmetric, so odd V integrates to zero.
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["radon", "--set", "potential=x3 + 0.5*x1*x2*x3", "--set", "count=12"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let vals = column(&read(dir.path(), "radon.csv"), "radon");
    assert_eq!(vals.len(), 12);
    assert!(vals.iter().all(|v| v.abs() < 1e-10), "{vals:?}");
}

#[test]
fn q0_rows_from_equator_to_meridian() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["q0", "--set", "surface=tannery", "--set", "tannery_a=0.3", "--set", "count=3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read(dir.path(), "q0.csv");
    let (_, rows) = table(&text);
    let labels: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(labels, ["equator", "tilted", "meridian"]);
    let q = column(&text, "q0");
    // Closed form of the invariant on the equator: 1/4 − σ'(0)²/4.
    assert!((q[0] - (0.25 - 0.09 / 4.0)).abs() < 1e-6, "{}", q[0]);
    assert!(q[2] > q[0]);

    let round = tempfile::tempdir().unwrap();
    let o = zoll(&["q0", "--set", "count=4"], round.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(column(&read(round.path(), "q0.csv"), "q0").iter().all(|q| (q - 0.25).abs() < 1e-8));
}

#[test]
fn geodesic_energy_is_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["geodesic", "--set", "surface=tannery", "--set", "tannery_a=0.1", "--set", "samples=64"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let e = column(&read(dir.path(), "geodesic.csv"), "energy");
    assert_eq!(e.len(), 64);
    assert!(e.iter().all(|x| (x - e[0]).abs() < 1e-9));
}

#[test]
fn constant_potential_scan_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["crit", "--set", "potential=2", "--set", "resolution=16"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read(dir.path(), "critical.csv");
    assert!(text.contains("# degenerate: C(V) = M"));
    assert!(table(&text).1.is_empty());
}

#[test]
fn small_echo_starts_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["echo", "--set", "levels=6", "--set", "times=5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read(dir.path(), "echo.csv");
    let abs = column(&text, "abs");
    assert_eq!(abs.len(), 5);
    assert_eq!(abs[0], 1.0);
    assert!(abs.iter().all(|&a| a <= 1.0 + 1e-12));
    assert!(column(&text, "predicted_abs").iter().all(|p| p.is_finite()));
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "count = 3\nfrobnicate = 1\n").unwrap();
    let o = zoll(&["radon", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`frobnicate`") && stderr(&o).contains("line 2"), "{}", stderr(&o));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"count\": ").unwrap();
    let o = zoll(&["radon", "--config", broken.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let cases: &[&[&str]] = &[
        &["geodesic", "--set", "tol=-1"],
        &["geodesic", "--set", "samples=many"],
        &["geodesic", "--set", "theta=0"],
        &["radon", "--set", "surface=tannery"],
        &["radon", "--set", "surface=tannery", "--set", "sigma=0.3,0.3"],
        &["radon", "--jobs", "0"],
        &["band", "--set", "surface=tannery", "--set", "tannery_a=0.1"],
        &["echo", "--set", "levels=6", "--set", "eps_exponent=0.4"],
        &["transport", "--set", "levels=6", "--set", "lmax=8"],
        &["transport", "--set", "time_scale=sideways"],
    ];
    for args in cases {
        let o = zoll(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().path().ends_with("radon.csv")));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["gaps", "--set", "levels=4", "--set", "window_center=100"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("spectral::min_gap"));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = zoll(&["verify", "--set", "samples=4"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}\n{}", stderr(&o));
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
    assert!(!stdout.contains("FAIL"));
    let (_, rows) = table(&read(dir.path(), "verify.csv"));
    assert!(rows.iter().all(|r| r[3] == "true"));
}

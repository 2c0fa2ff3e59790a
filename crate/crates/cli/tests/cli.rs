use std::path::Path;
use std::process::{Command, Output};

fn vortex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex"))
        .current_dir(dir)
        .env_remove("VORTEX_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn missing_input_is_a_data_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = vortex(dir.path(), &["solve", "--rhs", "nope.csv", "--out", "phi.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("phi.csv").exists());
}

#[test]
fn bad_configuration_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"profile_tol": -1}"#).unwrap();
    let out = vortex(dir.path(), &["--config", "c.json", "profile", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_vortex"))
        .current_dir(dir.path())
        .env("VORTEX_THREADS", "0")
        .args(["profile", "--out", "p.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{"K": 8, "n_theta": 64, "corpus_modes": 4}"#;
    std::fs::write(d.join("c.json"), cfg).unwrap();
    for tag in ["a", "b"] {
        let h = format!("h_{tag}.csv");
        let out = vortex(d, &["--config", "c.json", "--seed", "7", "rhs", "--project-orthogonal", "--out", &h]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let (phi, rep) = (format!("phi_{tag}.csv"), format!("r_{tag}.json"));
        let out = vortex(
            d,
            &["--config", "c.json", "--seed", "7", "solve", "--rhs", &h, "--project-orthogonal", "--out", &phi, "--report", &rep],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for (a, b) in [("h_a.csv", "h_b.csv"), ("phi_a.csv", "phi_b.csv"), ("r_a.json", "r_b.json")] {
        assert_eq!(std::fs::read(d.join(a)).unwrap(), std::fs::read(d.join(b)).unwrap(), "{}", a);
    }
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r_a.json")).unwrap()).unwrap();
    assert_eq!(rep["config"]["seed"], 7);
    assert!(rep["result"]["residual_2d"].as_f64().unwrap() <= 5e-5);
}

#[test]
fn mode_solve_and_kernel_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(vortex(d, &["profile", "--out", "p.csv"]).status.success());
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    let mut rhs = String::from("r,h1,h2\n");
    for line in text.lines().skip(1) {
        let r: f64 = line.split(',').next().unwrap().parse().unwrap();
        let b = (-(r - 1.5) * (r - 1.5)).exp();
        rhs.push_str(&format!("{:e},{:e},{:e}\n", r, b, 0.5 * b));
    }
    std::fs::write(d.join("m.csv"), rhs).unwrap();
    let out = vortex(d, &["solve-mode", "--k", "2", "--l", "1", "--rhs", "m.csv", "--out", "s.csv", "--report", "s.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s.json")).unwrap()).unwrap();
    assert!(rep["result"]["estimate"]["ratio"].as_f64().unwrap() > 0.0);
    assert!(vortex(d, &["kernel", "--mode", "3", "--out", "k.csv"]).status.success());
    let header = std::fs::read_to_string(d.join("k.csv")).unwrap();
    assert!(header.starts_with("r,z11,z12,z11p,z12p,z21"));
}

#[test]
fn oracle_writes_field_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), r#"{"K": 4, "n_theta": 32, "corpus_modes": 3}"#).unwrap();
    assert!(vortex(d, &["--config", "c.json", "rhs", "--out", "h.csv"]).status.success());
    let out = vortex(
        d,
        &["--config", "c.json", "oracle", "--R", "6", "--n", "64", "--rhs", "h.csv", "--out", "o.csv", "--compare", "c.json.out"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("c.json.out")).unwrap()).unwrap();
    assert!(rep["result"]["aggregate"].as_f64().unwrap() < 0.1);
    let too_coarse = vortex(d, &["oracle", "--R", "10", "--n", "32", "--rhs", "h.csv", "--out", "x.csv"]);
    assert_eq!(too_coarse.status.code(), Some(2));
}

#[test]
fn quick_verify_emits_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = vortex(dir.path(), &["verify", "--quick", "--report", "v.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("v.json")).unwrap()).unwrap();
    assert_eq!(v["criteria"].as_array().unwrap().len(), 11);
    assert_eq!(v["all_passed"], true);
}

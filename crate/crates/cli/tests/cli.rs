use std::path::Path;
use std::process::{Command, Output};

fn fanodiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fanodiag"))
        .args(args)
        .env_remove("FANODIAG_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&fanodiag(&a))).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[model]\ngama = 0.1\n");
    assert_eq!(fanodiag(&["lineshape", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_with_config_code() {
    assert_eq!(fanodiag(&["evolve", "--gamma=-1"]).status.code(), Some(2));
    assert_eq!(fanodiag(&["evolve", "--omega0", "0"]).status.code(), Some(2));
    assert_eq!(fanodiag(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn unstable_coupling_exits_with_validity_code() {
    let o = fanodiag(&["lineshape", "--counter-term=false", "--gamma", "1", "--cutoff", "50"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ω₀² > Δω²"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["rwa-check", "--gamma", "0.3", "--t-points", "6"];
    assert_eq!(stdout(&fanodiag(&args)), stdout(&fanodiag(&args)));
    let lv = ["langevin", "--bath", "ohmic-sharp", "--cutoff", "20", "--samples", "200", "--modes", "100", "--t-max", "2", "--t-points", "3"];
    assert_eq!(stdout(&fanodiag(&lv)), stdout(&fanodiag(&lv)));
}

#[test]
fn csv_starts_with_config_hash() {
    let a = stdout(&fanodiag(&["mean-q", "--t-points", "4"]));
    let b = stdout(&fanodiag(&["mean-q", "--t-points", "5"]));
    let first = |s: &str| s.lines().next().unwrap().to_string();
    assert!(first(&a).starts_with("# fanodiag mean-q config_sha256="));
    assert_eq!(first(&a).len(), "# fanodiag mean-q config_sha256=".len() + 64);
    assert_ne!(first(&a), first(&b));
    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t,"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fanodiag"))
        .args(["appendix-b", "--t-points", "4"])
        .env("FANODIAG_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("appendix-b.csv")).unwrap();
    assert!(text.starts_with("# fanodiag appendix-b"));
}

#[test]
fn explicit_output_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub/ls.json");
    let svg = dir.path().join("ls.svg");
    let o = fanodiag(&[
        "lineshape",
        "--gammas",
        "0.1,1",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "lineshape");
    assert_eq!(v["gammas"], serde_json::json!([0.1, 1.0]));
    let s = std::fs::read_to_string(&svg).unwrap();
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
}

#[test]
fn evolve_conserves_commutator() {
    let v = json(&["evolve", "--gamma", "0.5", "--cutoff", "10", "--t-max", "5", "--t-points", "2"]);
    assert!(v["max_sum_rule_residual"].as_f64().unwrap() <= 1e-4);
    let v = json(&["evolve", "--rwa", "--limit", "--gamma", "0.1", "--t-points", "6"]);
    assert!(v["max_sum_rule_residual"].is_null());
    for (t, c) in v["t"].as_array().unwrap().iter().zip(v["c_a_abs"].as_array().unwrap()) {
        let (t, c) = (t.as_f64().unwrap(), c.as_f64().unwrap());
        assert!((c - (-0.1 * t).exp()).abs() <= 1e-2, "t={t} |c_a|={c}");
    }
}

#[test]
fn mean_position_offset_matches_kernel() {
    let v = json(&["mean-q", "--limit", "--gamma", "0.2", "--t-points", "11"]);
    let diff = v["classical_minus_bare"].as_array().unwrap();
    let expect = v["two_gamma_q0_l"].as_array().unwrap();
    for (d, e) in diff.iter().zip(expect) {
        assert!((d.as_f64().unwrap() - e.as_f64().unwrap()).abs() <= 1e-12);
    }
    let shifted = v["shifted"].as_array().unwrap();
    let classical = v["classical"].as_array().unwrap();
    for (s, c) in shifted.iter().zip(classical) {
        assert!((s.as_f64().unwrap() - c.as_f64().unwrap()).abs() <= 1e-12);
    }
}

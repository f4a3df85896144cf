use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsetrig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn layers_prints_indices_and_count() {
    let out = stdout(&run(&["layers", "--d", "2", "--n", "3"]));
    let indices: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(indices.len(), 32);
    assert!(out.trim_end().ends_with("# count 32"));
}

#[test]
fn norm_of_constant_is_one() {
    let out = stdout(&run(&["norm", "--space", "wiener", "--r", "1", "--theta", "1"]));
    assert_eq!(out.trim().parse::<f64>().unwrap(), 1.0);
}

#[test]
fn norm_reads_coefficient_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.txt");
    fs::write(&path, "d=1\n3 1 0\n-3 0 1\n").unwrap();
    let p = path.to_str().unwrap();
    let out = stdout(&run(&["norm", "--space", "wiener", "--r", "1", "--theta", "1", "--input", p]));
    assert!((out.trim().parse::<f64>().unwrap() - 8.0).abs() < 1e-12);
    let l2 = stdout(&run(&["norm", "--space", "lebesgue", "--q", "2", "--input", p]));
    assert!((l2.trim().parse::<f64>().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn sigma_lower_rates_csv() {
    let out = stdout(&run(&[
        "rates", "--task", "sigma-lower", "--d", "2", "--r", "1", "--theta", "1", "--m", "64..16384",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "m,error,seed,tags");
    assert_eq!(lines.len(), 10);
    assert!(lines[1].starts_with("64,"));
    assert!(lines[9].starts_with("16384,"));
}

#[test]
fn invalid_parameters_give_error_record() {
    let o = run(&["rates", "--task", "sigma-lower", "--d", "2", "--r", "0", "--theta", "1", "--m", "64"]);
    assert!(!o.status.success());
    let err: toml::Table = toml::from_str(&String::from_utf8_lossy(&o.stderr)).unwrap();
    let body = err["error"].as_table().unwrap();
    assert_eq!(body["kind"].as_str(), Some("invalid_parameter"));
    assert!(body["message"].as_str().unwrap().contains("r > (1 - 1/theta)_+"));
}

#[test]
fn sidecar_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    stdout(&run(&[
        "rates", "--task", "sigma-upper", "--d", "2", "--r", "1", "--theta", "1", "--m", "64..256",
        "--trials", "3", "--seed", "9", "--out", a.to_str().unwrap(),
    ]));
    let meta = dir.path().join("a.csv.meta.toml");
    let text = fs::read_to_string(&meta).unwrap();
    assert!(text.contains("seed = 9"));
    assert!(text.contains("[results.fit]"));
    stdout(&run(&["rates", "--config", meta.to_str().unwrap(), "--out", b.to_str().unwrap()]));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn config_command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "command = \"gap\"\nd = 2\n").unwrap();
    let o = run(&["layers", "--config", cfg.to_str().unwrap(), "--n", "2"]);
    assert!(!o.status.success());
}

#[test]
fn config_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "d = 3\nn = 2\n").unwrap();
    let out = stdout(&run(&["layers", "--config", cfg.to_str().unwrap(), "--d", "1"]));
    assert!(out.trim_end().ends_with("# count 4"));
}

#[test]
fn recover_and_mterm_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("f.txt");
    fs::write(&input, "d=2\n3 -2 1 0\n-5 1 0 -1\n").unwrap();
    let out = dir.path().join("rec.toml");
    stdout(&run(&[
        "recover", "--input", input.to_str().unwrap(), "--n", "2", "--M", "8",
        "--out", out.to_str().unwrap(),
    ]));
    let rep: toml::Table = toml::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(rep["error"].as_float().unwrap() < 1e-8);
    assert!(dir.path().join("rec.toml.coeffs").exists());

    let m = stdout(&run(&[
        "mterm", "--input", input.to_str().unwrap(), "--m", "1", "--space", "lebesgue", "--q", "2",
    ]));
    let rep: toml::Table = toml::from_str(&m).unwrap();
    assert_eq!(rep["term_count"].as_integer(), Some(1));
}

#[test]
fn lemmas_and_embeddings_pass() {
    let out = stdout(&run(&["lemmas"]));
    assert!(out.lines().all(|l| l.starts_with("PASS")));
    let e = stdout(&run(&[
        "embeddings", "--tag", "B-to-A-norm1", "--d", "2", "--r", "1", "--p", "2", "--theta", "1",
        "--trials", "40", "--n", "4",
    ]));
    let rep: toml::Table = toml::from_str(&e).unwrap();
    assert_eq!(rep["violations"].as_integer(), Some(0));
}

#[test]
fn gap_writes_both_arms() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gap.csv");
    stdout(&run(&[
        "gap", "--d", "2", "--r", "1", "--theta", "1", "--m", "4..16", "--out", out.to_str().unwrap(),
    ]));
    for suffix in ["", ".linear.csv", ".nonlinear.csv", ".meta.toml"] {
        let p = format!("{}{suffix}", out.display());
        assert!(std::path::Path::new(&p).exists(), "{p}");
    }
}

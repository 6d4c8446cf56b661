use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pucci-lab"))
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn eigen_config_writes_summary_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("eigen.toml");
    fs::write(&cfg, "kind = \"eigen\"\n[numeric]\nh = 0.03125\n").unwrap();
    let out = tmp.path().join("run");
    let st = bin()
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    let s = summary(&out);
    let lambda = s["results"]["lambda"].as_f64().unwrap();
    let two_pi2 = 2.0 * std::f64::consts::PI.powi(2);
    assert!((lambda - two_pi2).abs() < 0.01 * two_pi2, "{lambda}");
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["seed"], 0);
    assert!(s["config"]["numeric"]["h"].is_number());
    for name in ["eigenfunction.csv", "eigenfunction.svg", "trace.csv"] {
        let bytes = fs::read(out.join(name)).unwrap();
        assert!(!bytes.is_empty());
        assert!(s["artifacts"][name].as_str().unwrap().len() == 64);
    }
    let csv = fs::read_to_string(out.join("eigenfunction.csv")).unwrap();
    assert!(csv.starts_with("x,y,value\n"));
}

#[test]
fn barrier_check_defaults_certify_the_linear_unit_case() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .arg("barrier-check")
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(st.status.success());
    let s = summary(tmp.path());
    assert_eq!(s["results"]["gamma"], 16.0);
    assert_eq!(s["results"]["pass"], true);
    assert!(s["results"]["min_residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_alpha_fails_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(
        &cfg,
        "kind = \"eigen\"\n[operator]\nkind = \"pucci_plus\"\na = 1.0\nA = 2.0\n",
    )
    .unwrap();
    let out = tmp.path().join("run");
    let st = bin()
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!st.status.success());
    assert!(String::from_utf8_lossy(&st.stderr).contains("alpha"));
    assert!(!out.exists());
}

#[test]
fn mismatched_subcommand_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "kind = \"solve\"\n").unwrap();
    let st = bin()
        .args(["eigen", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn replay_solve_and_harnack() {
    let tmp = tempfile::tempdir().unwrap();
    let solve = tmp.path().join("solve");
    let cfg = tmp.path().join("solve.toml");
    fs::write(
        &cfg,
        "kind = \"solve\"\n[operator]\nkind = \"pucci_minus\"\nalpha = 0.5\na = 1.0\nA = 2.0\n[numeric]\nh = 0.0625\n[problem]\ng = \"1 + x*y\"\nf = \"-1\"\n",
    )
    .unwrap();
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&solve)
        .status()
        .unwrap()
        .success());
    let st = bin()
        .arg("replay")
        .arg(solve.join("summary.json"))
        .arg("--out")
        .arg(tmp.path().join("r1"))
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    assert_eq!(
        fs::read(solve.join("field.csv")).unwrap(),
        fs::read(tmp.path().join("r1").join("field.csv")).unwrap()
    );

    let h = tmp.path().join("harnack");
    let hcfg = tmp.path().join("h.toml");
    fs::write(
        &hcfg,
        "kind = \"harnack\"\n[numeric]\nh = 0.0625\n[harnack]\ntrials = 8\n",
    )
    .unwrap();
    let st = bin()
        .args(["harnack", "--seed", "5", "--config"])
        .arg(&hcfg)
        .arg("--out")
        .arg(&h)
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    assert_eq!(summary(&h)["seed"], 5);
    let st = bin()
        .arg("replay")
        .arg(h.join("summary.json"))
        .arg("--out")
        .arg(tmp.path().join("r2"))
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    assert_eq!(
        fs::read(h.join("trials.csv")).unwrap(),
        fs::read(tmp.path().join("r2").join("trials.csv")).unwrap()
    );

    // Editing the recorded seed makes the replay diverge.
    let mut s = summary(&h);
    s["seed"] = 6.into();
    fs::write(h.join("summary.json"), serde_json::to_string(&s).unwrap()).unwrap();
    let st = bin()
        .arg("replay")
        .arg(h.join("summary.json"))
        .arg("--out")
        .arg(tmp.path().join("r3"))
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&st.stderr).contains("mismatch"));
}

#[test]
fn threads_flag_is_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["--threads", "2", "hypothesis-check", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(
        st.status.success(),
        "{}",
        String::from_utf8_lossy(&st.stderr)
    );
    let s = summary(tmp.path());
    assert!(s["results"]["h1"]["max_defect"].as_f64().unwrap() <= 1e-10);
}

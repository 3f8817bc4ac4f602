use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn casimir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir")).args(args).output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.conf")
}

#[test]
fn pressure_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "a.conf", "geometry.l = 0.8\ngeometry.T_L = 0.4\nright.gamma = 0.3\n");
    let other = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("p.csv"), other.path().join("p.csv"));
    for out in [&a, &b] {
        let o = casimir(&["pressure", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let strip = |p: &Path| -> String {
        fs::read_to_string(p).unwrap().lines().filter(|l| !l.starts_with("# output.path")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
    let text = fs::read_to_string(&a).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].split(',').count(), 14);
    assert!(text.contains("# geometry.T_L = 0.4"));
}

#[test]
fn sweep_produces_one_row_per_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "s.conf",
        "sweep.variable = T_R\nsweep.start = 0.5\nsweep.stop = 1.5\nsweep.points = 3\noptions.rel_tol = 1e-4\n",
    );
    let o = casimir(&["pressure", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let t_r: Vec<f64> = data_rows(&text).iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(t_r, vec![0.5, 1.0, 1.5]);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("neg.conf", "geometry.l = -1\n"), ("unknown.conf", "geometry.l = 1\nfoo.bar = 2\n")] {
        let cfg = write_config(&dir, name, text);
        let o = casimir(&["pressure", "--config", cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    }
    let o = casimir(&["pressure", "--rel-tol", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes_on_default_and_fails_without_loss() {
    let o = casimir(&["verify", "--config", default_config().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for line in String::from_utf8(o.stdout).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["passed"], true, "{line}");
    }
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "u.conf", "left.kind = undamped\nright.kind = undamped\n");
    let o = casimir(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED causality.L"));
}

#[test]
fn uncoupled_plate_has_unit_permittivity() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "v.conf", "left.lambda0 = 0\n");
    let o = casimir(&["epsilon", "--config", cfg.to_str().unwrap(), "--points", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 5);
    for r in rows {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&v[1..], &[1.0, 0.0, 1.0, 0.0]);
    }
}

#[test]
fn poles_json_round_trips() {
    let o = casimir(&["poles", "--material", "right"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["plate"], "R");
    let roots = v["report"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 2);
    for r in roots {
        assert!((r["s"][0].as_f64().unwrap() + 0.05).abs() < 1e-12);
    }
    assert_eq!(v["report"]["causal"], true);
    let again = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<serde_json::Value>(&again).unwrap(), v);
}

#[test]
fn compare_eq_rejects_unequal_temperatures() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "n.conf", "geometry.T_L = 0.5\n");
    let o = casimir(&["compare-eq", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = casimir(&["compare-eq", "--config", default_config().to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rel: f64 = data_rows(&text)[0].split(',').last().unwrap().parse().unwrap();
    assert!(rel <= 1e-3);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn periph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_periph"))
        .args(args)
        .env_remove("PERIPH_AMBIENT_CAP")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
    p
}

fn real_rows(rows: &[&[f64]]) -> Value {
    json!(rows.iter().map(|r| r.iter().map(|x| [*x, 0.0]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn channel(dim: usize, kraus: Vec<Value>, label: &str) -> Value {
    json!({"schema": "periph-channel/1", "dim": dim, "kraus": kraus, "label": label, "metadata": {}})
}

fn identity_rows(d: usize) -> Value {
    let rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    real_rows(&refs)
}

fn dephasing() -> Value {
    let h = 0.5f64.sqrt();
    channel(2, vec![real_rows(&[&[h, 0.0], &[0.0, h]]), real_rows(&[&[h, 0.0], &[0.0, -h]])], "dephasing")
}

fn pauli_z_channel() -> Value {
    channel(2, vec![real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])], "Ad(Z)")
}

fn pauli_x() -> Value {
    real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn matrix(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            r.as_array()
                .unwrap()
                .iter()
                .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
                .collect()
        })
        .collect()
}

#[test]
fn identity_spectrum_is_single_full_eigenvalue() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "id.json", &channel(3, vec![identity_rows(3)], "id"));
    let out = periph(&["spectrum", f.to_str().unwrap()]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    let eig = r["data"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 1);
    assert_eq!(eig[0]["geometric_multiplicity"], 9);
    assert!((eig[0]["lambda"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn weyl_example_round_trips_and_has_cube_roots() {
    let out = periph(&["example", "weyl", "--d", "3", "--n", "2", "--probs", "0.5,0.5"]);
    assert!(out.status.success());
    let file = stdout_json(&out);
    assert_eq!(file["dim"], 9);
    assert_eq!(file["schema"], "periph-channel/1");
    assert_eq!(file["kraus"].as_array().unwrap().len(), 2);

    let dir = TempDir::new().unwrap();
    let f = dir.path().join("weyl.json");
    std::fs::write(&f, &out.stdout).unwrap();
    let r = stdout_json(&periph(&["spectrum", f.to_str().unwrap()]));
    let lambdas: Vec<(f64, f64)> = r["data"]["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["lambda"][0].as_f64().unwrap(), e["lambda"][1].as_f64().unwrap()))
        .collect();
    let s = 3f64.sqrt() / 2.0;
    for target in [(-0.5, s), (-0.5, -s)] {
        assert!(
            lambdas
                .iter()
                .any(|l| (l.0 - target.0).abs() < 1e-8 && (l.1 - target.1).abs() < 1e-8),
            "{target:?} missing from {lambdas:?}"
        );
    }
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{not json").unwrap();
    assert_eq!(periph(&["spectrum", f.to_str().unwrap()]).status.code(), Some(2));

    let wrong_schema = json!({"schema": "other", "dim": 1, "kraus": [[[[1.0, 0.0]]]], "label": "", "metadata": {}});
    let f = write(dir.path(), "schema.json", &wrong_schema);
    assert_eq!(periph(&["spectrum", f.to_str().unwrap()]).status.code(), Some(2));

    let not_unital = channel(2, vec![real_rows(&[&[1.0, 0.0], &[0.0, 0.5]])], "bad");
    let f = write(dir.path(), "nonunital.json", &not_unital);
    assert_eq!(periph(&["spectrum", f.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(periph(&["spectrum", "/nonexistent/file.json"]).status.code(), Some(2));
}

#[test]
fn unknown_example_exits_2() {
    assert_eq!(periph(&["example", "no-such-example"]).status.code(), Some(2));
    let bad_probs = periph(&["example", "weyl", "--d", "3", "--n", "2", "--probs", "0.5,0.6"]);
    assert_eq!(bad_probs.status.code(), Some(2));
    let not_unitary = periph(&["example", "unitary", "--diag", "1,2"]);
    assert_eq!(not_unitary.status.code(), Some(2));
}

#[test]
fn dephasing_passes_all_suites() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "deph.json", &dephasing());
    let out = periph(&["verify", f.to_str().unwrap(), "--suite", "all", "--seed", "7"]);
    let r = stdout_json(&out);
    assert_eq!(out.status.code(), Some(0), "{r:#}");
    assert_eq!(r["pass"], true);
    assert_eq!(r["seed"], 7);
    for c in r["checks"].as_array().unwrap() {
        assert!(c["paper_anchor"].as_str().is_some_and(|a| !a.is_empty()));
        // skipped checks carry a reason
        if c["pass"].is_null() {
            assert!(c["reason"].is_string());
        }
    }
    assert!(r["tolerances"]["tol_peripheral"].is_number());
}

#[test]
fn unitary_z_is_stable() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "z.json", &pauli_z_channel());
    let out = periph(&["verify", f.to_str().unwrap(), "--suite", "stability", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert!(check(&r, "span_gap[k=2]")["value"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn cap_exceeded_exits_3() {
    let out = periph(&["example", "weyl", "--d", "3", "--n", "3", "--probs", "0.2,0.3,0.5"]);
    assert!(out.status.success());
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("w.json");
    std::fs::write(&f, &out.stdout).unwrap();
    let out = periph(&["verify", f.to_str().unwrap(), "--depth", "8"]);
    assert_eq!(out.status.code(), Some(3));

    // the environment override lowers the cap below 2·2³ = 16
    let f = write(dir.path(), "deph.json", &dephasing());
    let out = Command::new(env!("CARGO_BIN_EXE_periph"))
        .args(["verify", f.to_str().unwrap(), "--suite", "dilation", "--depth", "3"])
        .env("PERIPH_AMBIENT_CAP", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn identity_channel_products_agree() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "id.json", &channel(2, vec![identity_rows(2)], "id"));
    let x = write(dir.path(), "x.json", &json!([[[0.3, -1.2], [0.7, 0.1]], [[-0.4, 0.9], [1.5, -0.2]]]));
    let y = write(dir.path(), "y.json", &json!([[[1.1, 0.4], [-0.6, 0.0]], [[0.2, 0.3], [-0.8, 1.3]]]));
    let out = periph(&["product", f.to_str().unwrap(), x.to_str().unwrap(), y.to_str().unwrap(), "--method", "cesaro"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    for name in ["agreement_cesaro", "agreement_limit", "agreement_dilation"] {
        assert!(check(&r["report"], name)["value"].as_f64().unwrap() <= 1e-10, "{name}");
    }
    // ordinary matrix product
    let p = matrix(&r["product"]);
    let entry = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let xs = [[(0.3, -1.2), (0.7, 0.1)], [(-0.4, 0.9), (1.5, -0.2)]];
    let ys = [[(1.1, 0.4), (-0.6, 0.0)], [(0.2, 0.3), (-0.8, 1.3)]];
    for i in 0..2 {
        for j in 0..2 {
            let (s0, s1) = (0..2).fold((0.0, 0.0), |acc, k| {
                let e = entry(xs[i][k], ys[k][j]);
                (acc.0 + e.0, acc.1 + e.1)
            });
            assert!((p[i][j].0 - s0).abs() < 1e-10 && (p[i][j].1 - s1).abs() < 1e-10);
        }
    }
}

#[test]
fn x_squared_is_identity_under_z() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "z.json", &pauli_z_channel());
    let x = write(dir.path(), "x.json", &pauli_x());
    for method in ["spectral", "cesaro", "limit", "dilation"] {
        let out = periph(&["product", f.to_str().unwrap(), x.to_str().unwrap(), x.to_str().unwrap(), "--method", method]);
        assert_eq!(out.status.code(), Some(0), "{method}");
        let p = matrix(&stdout_json(&out)["product"]);
        let expected = [[(1.0, 0.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[i][j].0 - expected[i][j].0).abs() < 1e-10, "{method}");
                assert!((p[i][j].1 - expected[i][j].1).abs() < 1e-10, "{method}");
            }
        }
    }
}

#[test]
fn pauli_x_outside_dephasing_span_exits_5() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "deph.json", &dephasing());
    let x = write(dir.path(), "x.json", &pauli_x());
    let out = periph(&["product", f.to_str().unwrap(), x.to_str().unwrap(), x.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn unitary_example_has_dim_2() {
    let out = periph(&["example", "unitary", "--diag", "1,i"]);
    assert!(out.status.success());
    let file = stdout_json(&out);
    assert_eq!(file["dim"], 2);
    assert_eq!(file["metadata"]["peripheral_dim"], 4);
}

#[test]
fn group_walk_example_predicts_characters() {
    let out = periph(&["example", "group-walk", "--group", "Z4", "--mu", "0,1,0,0"]);
    assert!(out.status.success());
    let file = stdout_json(&out);
    assert_eq!(file["dim"], 4);
    assert_eq!(file["metadata"]["predicted_eigenvalues"].as_array().unwrap().len(), 4);
}

#[test]
fn toeplitz_demo_emits_csv() {
    let out = periph(&["example", "toeplitz-demo", "--M", "64,128,256", "--symbol", "1:1,-1:1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    let ratios: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] >= w[0] - 1e-3));
    assert!(ratios[2] >= 0.95);
    for l in &lines[1..] {
        let defect: f64 = l.split(',').nth(4).unwrap().parse().unwrap();
        assert!(defect <= 1e-10);
    }
}

#[test]
fn reports_are_deterministic_modulo_timings() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "deph.json", &dephasing());
    let run = || {
        let mut r = stdout_json(&periph(&["verify", f.to_str().unwrap(), "--seed", "11", "--trials", "5"]));
        r["timings"] = Value::Null;
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

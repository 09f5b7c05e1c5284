use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BUNDLED: [&str; 9] =
    ["k1", "k2", "k3", "linear", "k2_plus_bump", "k2_minus_bump", "perturbed_s0.001", "perturbed_s0.01", "perturbed_bump"];

fn problems() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn s3curv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s3curv")).args(args).output().expect("binary runs")
}

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn close(a: &Value, b: &Value) -> bool {
    (a.as_f64().unwrap() - b.as_f64().unwrap()).abs() < 1e-6
}

#[test]
fn bundled_degree_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    for name in BUNDLED {
        let file = problems().join(format!("{name}.json"));
        let out_path = dir.path().join(format!("{name}.json"));
        let out = s3curv(&["degree", file.to_str().unwrap(), "--json", out_path.to_str().unwrap()]);
        let want = read_json(&problems().join("expected").join(format!("{name}.json")));
        assert_eq!(out.status.code(), want["exit_code"].as_i64().map(|c| c as i32), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let got = read_json(&out_path);

        let mut idx: Vec<i64> = got["critical_points"].as_array().unwrap().iter().map(|r| r["morse_index"].as_i64().unwrap()).collect();
        idx.sort();
        let want_idx: Vec<i64> = want["morse_indices"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
        assert_eq!(idx, want_idx, "{name}");

        let in_m = got["invariants"].as_array().unwrap().iter().filter(|r| r["in_m"].as_bool().unwrap()).count();
        assert_eq!(in_m as i64, want["in_m"].as_i64().unwrap(), "{name}");

        let degree = &got["degree"];
        let (gb, wb) = (degree["breakpoints"].as_array().unwrap(), want["breakpoints"].as_array().unwrap());
        assert_eq!(gb.len(), wb.len(), "{name}");
        assert!(gb.iter().zip(wb).all(|(a, b)| close(a, b)), "{name}: {gb:?}");

        let (gi, wi) = (degree["intervals"].as_array().unwrap(), want["intervals"].as_array().unwrap());
        assert_eq!(gi.len(), wi.len(), "{name}");
        for (g, w) in gi.iter().zip(wi) {
            assert!(close(&g["t_lo"], &w["t_lo"]) && close(&g["t_hi"], &w["t_hi"]), "{name}: {g}");
            assert_eq!(g["degree"], w["degree"], "{name}");
        }
    }
}

#[test]
fn verdict_text() {
    let k1 = s3curv(&["degree", "k1"]);
    assert!(String::from_utf8_lossy(&k1.stdout).contains("d =   1  solvable"));
    let linear = s3curv(&["degree", "linear"]);
    assert_eq!(linear.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&linear.stdout).contains("no conclusion"));
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |p: &std::path::Path| {
        let mut v = read_json(p);
        v["wall_time_seconds"] = Value::Null;
        serde_json::to_string(&v).unwrap()
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        assert!(s3curv(&["invariants", "k2_plus_bump", "--seed", "3", "--json", p.to_str().unwrap()]).status.success());
    }
    assert_eq!(strip(&a), strip(&b));
    let v = read_json(&a);
    assert_eq!(v["input_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["problem"]["options"]["seed"], 3);
}

#[test]
fn blowup_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curves.csv");
    let out = s3curv(&["blowup", "perturbed_bump", "--t0", "0.3", "--csv", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta_index,mu,s,y1,y2,y3,slope,morse_index"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.len() == 8 && r[7] == "3"));
    assert!(rows.iter().all(|r| r[6].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn exit_codes() {
    // M_* is empty for K₂
    assert_eq!(s3curv(&["blowup", "k2", "--t0", "0.3"]).status.code(), Some(2));
    assert_eq!(s3curv(&["degree", "no_such_problem"]).status.code(), Some(1));
    assert_eq!(s3curv(&["degree", "k1", "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(s3curv(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"polynomial": [{"powers": [0,0,0,0], "coeff": -12.0}]}"#).unwrap();
    assert_eq!(s3curv(&["crit", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn t_range_restricts_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = read_json(&problems().join("perturbed_s0.001.json"));
    p["t_range"] = serde_json::json!([0.6, 1.0]);
    let file = dir.path().join("p.json");
    std::fs::write(&file, p.to_string()).unwrap();
    let json = dir.path().join("r.json");
    let out = s3curv(&["degree", file.to_str().unwrap(), "--json", json.to_str().unwrap()]);
    assert!(out.status.success());
    let r = read_json(&json);
    let iv = r["degree"]["intervals"].as_array().unwrap();
    assert_eq!(iv.len(), 1);
    assert_eq!(iv[0]["degree"], -1);
    assert!(r["degree"]["breakpoints"].as_array().unwrap().is_empty());
}

use std::process::Command;

use serde_json::Value;

const FIG1: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json");

fn mpe(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mpe")).args(args).env_remove("MPE_LOG_SPACE").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = mpe(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn mpe_on_fig1() {
    let v = json(&["mpe", FIG1]);
    let r = &v["results"][0];
    assert_eq!(r["rank"], 1);
    let want: Value = serde_json::json!({"a": "0", "b": "0", "c": "0", "d": "0", "e": "0", "f": "1"});
    assert_eq!(r["assignment"], want);
    assert!((r["probability"].as_f64().unwrap() - 0.153664).abs() < 1e-12);
    assert_eq!(r["probability_4dp"].as_f64().unwrap(), 0.1537);
    assert!(v.get("stats").is_none());
}

#[test]
fn kbest_all_of_fig1() {
    let v = json(&["kbest", FIG1, "-l", "64", "--stats"]);
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 64);
    assert_eq!(v["engine"]["exhausted"], true);
    let visits = v["stats"]["nodes_visited"].as_array().unwrap();
    assert_eq!(visits.len(), 64);
    assert_eq!(visits[0], 0);
    assert!(visits.iter().all(|x| x.as_u64().unwrap() <= 11));
    let p: Vec<f64> = results.iter().map(|r| r["probability"].as_f64().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[0] >= w[1]));
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(results.iter().enumerate().all(|(i, r)| r["rank"] == i + 1));
}

#[test]
fn map_matches_oracle() {
    let engine = json(&["map", FIG1, "--targets", "c,d,e"]);
    let oracle = json(&["oracle", "map", FIG1, "--targets", "c,d,e"]);
    let flag = json(&["map", FIG1, "--targets", "c,d,e", "--oracle"]);
    assert_eq!(engine["results"][0]["assignment"], oracle["results"][0]["assignment"]);
    assert_eq!(flag["results"], oracle["results"]);
    assert_eq!(oracle["engine"]["strategy"], "oracle");
    let (a, b) =
        (engine["results"][0]["probability"].as_f64().unwrap(), oracle["results"][0]["probability"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn engine_and_oracle_agree_with_evidence() {
    for strategy in ["min-degree", "min-fill", "exhaustive", "file-order"] {
        let e = json(&["kbest", FIG1, "-l", "5", "--evidence", "d=1,f=0", "--strategy", strategy]);
        let o = json(&["oracle", "kbest", FIG1, "-l", "5", "--evidence", "d=1,f=0"]);
        for (x, y) in e["results"].as_array().unwrap().iter().zip(o["results"].as_array().unwrap()) {
            assert_eq!(x["assignment"], y["assignment"]);
            assert!((x["probability"].as_f64().unwrap() - y["probability"].as_f64().unwrap()).abs() < 1e-12);
        }
        assert_eq!(e["engine"]["strategy"], strategy);
    }
}

#[test]
fn log_space_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_mpe")).args(["mpe", FIG1]).env("MPE_LOG_SPACE", "1").output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["engine"]["log_space"], true);
    assert!((v["results"][0]["probability"].as_f64().unwrap() - 0.153664).abs() < 1e-12);
    let flag = json(&["mpe", FIG1, "--log-space"]);
    assert_eq!(flag["engine"]["log_space"], true);
    assert_eq!(flag["results"][0]["assignment"], v["results"][0]["assignment"]);
}

#[test]
fn output_is_deterministic() {
    let args = ["kbest", FIG1, "-l", "20", "--stats", "--strategy", "min-fill"];
    let (_, a, _) = mpe(&args);
    let (_, b, _) = mpe(&args);
    assert_eq!(a, b);
}

#[test]
fn info_summary() {
    let v = json(&["info", FIG1]);
    assert_eq!(v["variables"].as_array().unwrap().len(), 6);
    assert_eq!(v["max_family_size"], 3);
    assert_eq!(v["joint_states"], 64);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"variables":[{"name":"x","states":["0","1"]}],"cpts":[{"child":"x","parents":[],"table":[0.5,0.6]}]}"#,
    )
    .unwrap();
    let bad = bad.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(mpe(&["mpe", bad]).0, 2);
    assert_eq!(mpe(&["mpe", missing.to_str().unwrap()]).0, 2);
    let (code, _, err) = mpe(&["map", FIG1, "--targets", "c", "--evidence", "c=1"]);
    assert_eq!(code, 3);
    assert!(err.contains("`c`"), "{err}");
    assert_eq!(mpe(&["mpe", FIG1, "--evidence", "z=1"]).0, 3);
    assert_eq!(mpe(&["mpe", FIG1, "--evidence", "a=7"]).0, 3);
    assert_eq!(mpe(&["map", FIG1, "--targets", "q"]).0, 3);
    assert_ne!(mpe(&["mpe", FIG1, "--strategy", "best"]).0, 0);
}

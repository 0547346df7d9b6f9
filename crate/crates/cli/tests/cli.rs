mod common;

use common::*;

#[test]
fn gs_exact_heisenberg_pair() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", HEISENBERG_PAIR);
    let v = run_json(&["gs-exact", &h]);
    assert!((v["energy"].as_f64().unwrap() + 3.0).abs() < 1e-9);
    assert_eq!(v["command"], "gs-exact");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn fe_exact_single_z() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "z.json", SINGLE_Z);
    let v = run_json(&["fe-exact", &h, "--beta", "1"]);
    let closed_form = -(2.0 * 1f64.cosh()).ln();
    assert!((v["free_energy"].as_f64().unwrap() - closed_form).abs() < 1e-9);
    assert!((closed_form + 1.126928011).abs() < 1e-9);
}

#[test]
fn decompose_empty_instance() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "e.json", EMPTY);
    let v = run_json(&["decompose", &h]);
    assert_eq!(v["terms"], 0);
    assert_eq!(v["classes"].as_array().unwrap().len(), 0);
    assert_eq!(v["l1_norm"], 0.0);
}

#[test]
fn decompose_labels_colors() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", HEISENBERG_PAIR);
    let v = run_json(&["decompose", &h]);
    let labels: Vec<&str> = v["classes"].as_array().unwrap().iter().map(|c| c["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["X X", "Y Y", "Z Z"]);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", HEISENBERG_PAIR);
    let out = dir.path().join("r.json");
    let o = run(&["gs-exact", &h, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!((v["energy"].as_f64().unwrap() + 3.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", HEISENBERG_PAIR);
    let bad = write(dir.path(), "bad.json", r#"{"n":2,"d":2,"k":2,"terms":[{"support":[0,5],"matrix_re":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}]}"#);
    let code = |args: &[&str]| run(args).status.code().unwrap();

    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["gs-exact", &bad]), 2);
    assert_eq!(code(&["gs-exact", "/nonexistent/instance.json"]), 2);
    assert_eq!(code(&["gs-estimate", &h, "--eps", "-1"]), 2);
    assert_eq!(code(&["gs-estimate", &h, "--gamma", "0"]), 2);
    assert_eq!(code(&["fe-exact", &h, "--beta", "nan"]), 2);
    assert_eq!(code(&["fe-exact", &h, "--beta", "abc"]), 2);
    assert_eq!(code(&["vsc", &h, "--q", "5"]), 2);
    assert_eq!(code(&["gs-exact", &h, "--threads", "0"]), 2);

    let big = run_json(&["gen", "complete-heisenberg", "--n", "24"]);
    let big = write(dir.path(), "big.json", &big.to_string());
    assert_eq!(code(&["gs-exact", &big]), 3);
    let r6 = run_json(&["gen", "complete-random", "--n", "6"]);
    let r6 = write(dir.path(), "r6.json", &r6.to_string());
    assert_eq!(code(&["gs-estimate", &r6, "--eps", "0.1", "--gamma", "0.1"]), 3);
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert!(run(&["gen", "complete-random", "--n", "6", "--seed", "7", "--out", p.to_str().unwrap()]).status.success());
    }
    let (sa, sb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let (mut va, mut vb): (serde_json::Value, serde_json::Value) = (serde_json::from_slice(&sa).unwrap(), serde_json::from_slice(&sb).unwrap());
    strip_timing(&mut va);
    strip_timing(&mut vb);
    assert_eq!(va, vb);
    assert_eq!(va["terms"].as_array().unwrap().len(), 15);

    let other = run_json(&["gen", "complete-random", "--n", "6", "--seed", "8"]);
    assert_ne!(other["terms"], va["terms"]);

    let d = run_json(&["decompose", a.to_str().unwrap()]);
    assert_eq!(d["terms"], 15);

    let grid = run_json(&["gen", "grid-heisenberg", "--rows", "3", "--cols", "3"]);
    assert_eq!(grid["terms"].as_array().unwrap().len(), 12);
    assert_eq!(run(&["gen", "grid-heisenberg", "--rows", "3"]).status.code(), Some(2));
}

#[test]
fn every_command_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let v = result_validator();
    let h = write(dir.path(), "h.json", HEISENBERG_PAIR);
    let e = write(dir.path(), "e.json", EMPTY);
    let (inst, plan, graph, grid) = (p("inst.json"), p("plan.json"), p("graph.json"), p("grid.json"));
    for (family, extra, path) in [
        ("complete-random", vec!["--n", "5"], &inst),
        ("planar", vec!["--rows", "2", "--cols", "3"], &plan),
        ("qmc-cycle", vec!["--n", "4"], &graph),
        ("grid-heisenberg", vec!["--rows", "2", "--cols", "2"], &grid),
    ] {
        let mut args = vec!["gen", family, "--out", path.as_str()];
        args.extend(extra);
        assert!(run(&args).status.success());
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_valid(&v, &doc);
    }
    let cases: Vec<Vec<&str>> = vec![
        vec!["decompose", &h],
        vec!["decompose", &e],
        vec!["cutdecomp", &inst, "--eps", "0.5"],
        vec!["gs-exact", &inst],
        vec!["gs-direct", &inst, "--restarts", "2", "--iters", "50"],
        vec!["gs-estimate", &h, "--eps", "0.5", "--gamma", "0.5"],
        vec!["gs-estimate", &inst, "--node-cap", "1", "--direct-fallback"],
        vec!["fe-exact", &inst, "--beta", "2"],
        vec!["fe-estimate", &h, "--beta", "1", "--eps", "0.5", "--gamma", "0.5"],
        vec!["qmc", &graph, "--eps", "0.9"],
        vec!["threshold-rank", &graph, "--delta", "0.1", "--delta", "0.6"],
        vec!["vsc", &inst, "--q", "3", "--trials", "3", "--solver", "exact"],
        vec!["sparse-gs", &plan, "--eps", "0.5", "--r", "3"],
        vec!["sparse-fe", &grid, "--beta", "1", "--r", "3"],
        vec!["eb-experiment", &grid, "--l", "1", "--trials", "5"],
        vec!["eb-experiment", &grid, "--l", "2", "--trials", "5", "--beta", "1"],
    ];
    for args in cases {
        let doc = run_json(&args);
        assert_eq!(doc["command"], args[0]);
        assert_valid(&v, &doc);
    }
}

#[test]
fn schema_rejects_malformed_documents() {
    let v = result_validator();
    assert!(!v.is_valid(&serde_json::json!({"command": "gs-exact", "version": "0", "seed": 0, "params": {}, "budget": null, "wall_time_s": 0.0})));
    assert!(!v.is_valid(&serde_json::json!({"command": "bogus"})));
}

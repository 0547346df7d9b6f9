#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_meanfield"));
    c.env("RUST_LOG", "error");
    c
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn meanfield")
}

pub fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Drops every `*wall_time_s` key, at any depth.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| !k.ends_with("wall_time_s"));
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn read_schema(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

pub fn result_validator() -> jsonschema::Validator {
    let base = "https://example.invalid/meanfield/";
    let mut opts = jsonschema::options();
    for name in ["instance.schema.json", "graph.schema.json"] {
        opts = opts.with_resource(format!("{base}{name}"), jsonschema::Resource::from_contents(read_schema(name)).unwrap());
    }
    opts.build(&read_schema("result.schema.json")).expect("schema compiles")
}

pub fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations for {}: {errors:?}", doc["command"]);
}

/// `XX + YY + ZZ` on two qubits.
pub const HEISENBERG_PAIR: &str = r#"{"n":2,"d":2,"k":2,"terms":[{"support":[0,1],
 "matrix_re":[[1,0,0,0],[0,-1,2,0],[0,2,-1,0],[0,0,0,1]]}]}"#;

pub const SINGLE_Z: &str = r#"{"n":1,"d":2,"k":1,"terms":[{"support":[0],"matrix_re":[[1,0],[0,-1]]}]}"#;

pub const EMPTY: &str = r#"{"n":3,"d":2,"k":2,"terms":[]}"#;

pub fn write(dir: &Path, name: &str, contents: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_string()
}

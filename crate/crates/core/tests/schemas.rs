//! JSON reports validate against the schemas in docs/schemas.

use std::path::PathBuf;

use clap::Parser;
use jsonschema::{Resource, Validator};
use serde_json::Value;
use steerwork::cli::{execute, Cli};

fn load(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn validator(name: &str) -> Validator {
    let optimizer = Resource::from_contents(load("optimizer_result.schema.json")).unwrap();
    jsonschema::options()
        .with_resource("json-schema:///optimizer_result.schema.json", optimizer)
        .build(&load(name))
        .unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let mut full = vec!["steerwork"];
    full.extend_from_slice(args);
    full.extend(["--format", "json"]);
    let outcome = execute(&Cli::try_parse_from(full).unwrap().command).unwrap();
    serde_json::from_str(&outcome.output).unwrap()
}

fn assert_valid(validator: &Validator, instance: &Value) {
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{instance:#}");
}

#[test]
fn bound_set_outputs() {
    let v = validator("bound_set.schema.json");
    assert_valid(&v, &run_json(&["bounds", "--dim", "2", "--n-bases", "3"]));
    assert_valid(&v, &run_json(&["bounds", "--dim", "3", "--n-bases", "4", "--beta", "inf"]));
    assert_valid(&v, &run_json(&["bounds", "--dim", "5", "--n-bases", "6", "--beta", "0"]));
}

#[test]
fn work_report_outputs() {
    let v = validator("work_report.schema.json");
    assert_valid(&v, &run_json(&["simulate", "--dim", "3", "--n-bases", "4"]));
    assert_valid(&v, &run_json(&["simulate", "--dim", "2", "--n-bases", "3", "--shots", "5000", "--seed", "3"]));
    assert_valid(&v, &run_json(&["simulate", "--dim", "2", "--n-bases", "2", "--shots", "1"]));
}

#[test]
fn optimizer_outputs() {
    let v = validator("lhs_opt_report.schema.json");
    let qubit = run_json(&["lhs-opt", "--dim", "2", "--n-bases", "3", "--resolution", "50"]);
    assert_valid(&v, &qubit);
    assert_valid(&validator("optimizer_result.schema.json"), &qubit["optimizer"]);
    assert_valid(&v, &run_json(&["lhs-opt", "--dim", "5", "--n-bases", "3", "--restarts", "4"]));
}

#[test]
fn mub_report_outputs() {
    let v = validator("mub_report.schema.json");
    assert_valid(&v, &run_json(&["verify-mub", "--dim", "5", "--n-bases", "6"]));
    let failing = run_json(&["verify-mub", "--dim", "5", "--n-bases", "6", "--tol", "0"]);
    assert_eq!(failing["pass"], false);
    assert_valid(&v, &failing);
}

#[test]
fn schemas_reject_malformed_reports() {
    let v = validator("work_report.schema.json");
    let mut report = run_json(&["simulate", "--dim", "2", "--n-bases", "3"]);
    report["mode"] = Value::from("sampled");
    assert!(!v.is_valid(&report));

    let v = validator("bound_set.schema.json");
    let mut bounds = run_json(&["bounds", "--dim", "2", "--n-bases", "3"]);
    bounds["beta"] = Value::from("hot");
    assert!(!v.is_valid(&bounds));
}

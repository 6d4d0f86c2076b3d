// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lch"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn train_then_analyse_a_saved_network() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "t.json", r#"{"epochs": 3, "n_train": 300, "hidden": [6, 6]}"#);
    assert_eq!(lch(d, &["train", "--config", "t.json", "--out", "tr", "--seed", "4"]).status.code(), Some(0));
    assert_eq!(manifest(&d.join("tr"))["seeds"]["seed"], 4);

    write(d, "in.csv", "x0,x1\n0.1,0.2\n-0.5,0.3\n0.9,-0.9\n");
    write(d, "c.json", r#"{"network": "tr/network.json", "inputs": "in.csv"}"#);
    assert_eq!(lch(d, &["centroids", "--config", "c.json", "--out", "ce"]).status.code(), Some(0));
    let csv = fs::read_to_string(d.join("ce/centroids.csv")).unwrap();
    assert!(csv.starts_with("input_id,l1,l2,v0,v1\n"));
    assert_eq!(csv.lines().count(), 4);

    write(d, "r.json", r#"{"network": "tr/network.json"}"#);
    assert_eq!(lch(d, &["regions", "--config", "r.json", "--out", "re"]).status.code(), Some(0));
    assert!(d.join("re/partition.svg").exists());

    write(d, "s.json", r#"{"network": "tr/network.json", "input": [0.1, 0.2], "samples": 8}"#);
    assert_eq!(lch(d, &["saliency", "--config", "s.json", "--out", "sa"]).status.code(), Some(0));
    assert!(fs::read(d.join("sa/saliency.pgm")).unwrap().starts_with(b"P5\n2 1\n255\n"));

    write(d, "a.json", r#"{"network": "tr/network.json", "center": [0.1, 0.2], "hidden_layer": 2, "samples": 16}"#);
    assert_eq!(lch(d, &["attribute", "--config", "a.json", "--out", "at"]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(d.join("at/scores.csv")).unwrap().lines().count(), 7);
}

#[test]
fn probe_and_sae_on_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut table = String::from("a,b,label\n");
    for i in 0..120 {
        let l = i % 2;
        let t = i as f64 * 0.37;
        table += &format!("{},{},{l}\n", l as f64 * 3.0 + t.sin(), t.cos());
    }
    write(d, "p.csv", &table);
    write(d, "p.json", r#"{"data": "p.csv"}"#);
    assert_eq!(lch(d, &["probe", "--config", "p.json", "--out", "pr"]).status.code(), Some(0));
    assert_eq!(manifest(&d.join("pr"))["metrics"]["test_accuracy"], 1.0);
    write(d, "m.json", r#"{"data": "p.csv", "kind": "mass-mean"}"#);
    assert_eq!(lch(d, &["probe", "--config", "m.json", "--out", "pm"]).status.code(), Some(0));

    write(d, "s.json", r#"{"data": "p.csv", "k": 2, "m": 6, "sae": {"epochs": 3}}"#);
    assert_eq!(lch(d, &["sae", "--config", "s.json", "--out", "sae"]).status.code(), Some(0));
    assert!(d.join("sae/dictionary.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "bad.json", r#"{"bogus": 1}"#);
    assert_eq!(lch(d, &["train", "--config", "bad.json"]).status.code(), Some(2));
    assert_eq!(lch(d, &["train", "--config", "missing.json"]).status.code(), Some(2));
    write(d, "broken.json", "{");
    assert_eq!(lch(d, &["experiment", "attribution", "--config", "broken.json"]).status.code(), Some(2));
    assert_eq!(lch(d, &["experiment", "no-such-thing"]).status.code(), Some(2));

    // a NaN input is a numeric failure
    write(d, "t.json", r#"{"epochs": 1, "n_train": 64, "hidden": [4]}"#);
    assert_eq!(lch(d, &["train", "--config", "t.json", "--out", "tr"]).status.code(), Some(0));
    write(d, "nan.csv", "x0,x1\nNaN,0.2\n");
    write(d, "n.json", r#"{"network": "tr/network.json", "inputs": "nan.csv"}"#);
    assert_eq!(lch(d, &["centroids", "--config", "n.json", "--out", "nn"]).status.code(), Some(3));
}

#[test]
fn experiment_rerun_reproduces_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "a.json", r#"{"samples": 32, "resamples": 2, "sweep_radii": [0.05, 0.25]}"#);
    let run = lch(d, &["experiment", "attribution", "--config", "a.json", "--out", "a1", "--seed", "7"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(manifest(&d.join("a1"))["config"]["seed"], 7);
    assert_eq!(lch(d, &["experiment", "rerun", "--from", "a1", "--out", "a2"]).status.code(), Some(0));
    assert_eq!(
        fs::read(d.join("a1/scores.csv")).unwrap(),
        fs::read(d.join("a2/scores.csv")).unwrap()
    );
    assert_eq!(lch(d, &["experiment", "rerun", "--out", "a3"]).status.code(), Some(2));
}

#[test]
fn image_saliency_has_one_map_per_channel() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let net: lch_core::Network = lch_core::Network::builder(&[3, 4, 4], 1)
        .conv2d(2, 3, 1, 1)
        .relu()
        .flatten()
        .affine(2)
        .build()
        .unwrap();
    write(d, "net.json", &net.to_json());
    let input: Vec<String> = (0..48).map(|i| format!("{}", (i as f64 * 0.1).sin())).collect();
    write(d, "s.json", &format!(r#"{{"network": "net.json", "input": [{}], "samples": 4}}"#, input.join(",")));
    let out = lch(d, &["saliency", "--config", "s.json", "--out", "sa"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for ch in 0..3 {
        let pgm = fs::read(d.join(format!("sa/saliency_ch{ch}.pgm"))).unwrap();
        assert!(pgm.starts_with(b"P5\n4 4\n255\n"));
        assert!(d.join(format!("sa/saliency_ch{ch}.svg")).exists());
    }
    // wrong input length is a config error
    write(d, "bad.json", r#"{"network": "net.json", "input": [1.0, 2.0]}"#);
    assert_eq!(lch(d, &["saliency", "--config", "bad.json", "--out", "sb"]).status.code(), Some(2));
}

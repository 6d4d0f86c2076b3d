// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;

use lch_experiments::manifest::MANIFEST_FILE;
use lch_experiments::{csv_differences, override_seed, rerun, run_experiment, Error, RunManifest};
use serde_json::{json, Value};

fn small_star() -> Value {
    json!({
        "epochs": 6,
        "n_train": 600,
        "hidden": [10, 10, 10],
        "per_side": 6,
        "heatmap_grid": 5,
        "heatmap_samples": 4
    })
}

fn lines(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn star_run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let m = run_experiment("star", small_star(), tmp.path()).unwrap();
    assert_eq!(m.experiment, "polygon-star");
    for f in [
        "losses.csv",
        "network.json",
        "edge_centroids.csv",
        "edge_anisotropy.csv",
        "edge_centroids_pca.csv",
        "partition.svg",
        "partition.json",
        "levelset_layer1.svg",
        "levelset_layer3.svg",
        "levelset_concentration.csv",
        "attribution_layer2.svg",
        "attribution_layer3.csv",
        "snapshots.csv",
        "snapshot_anisotropy.csv",
        "gelu_centroids.csv",
        MANIFEST_FILE,
    ] {
        assert!(tmp.path().join(f).exists(), "missing {f}");
    }
    // 10 sides of 6 samples each
    let edges = lines(&tmp.path().join("edge_centroids.csv"));
    assert_eq!(edges[0], "id,side,x0,x1,mu0,mu1");
    assert_eq!(edges.len(), 61);
    // checkpoints at 0, 5%, 10%, 30% and 100% of 6 epochs collapse to 0, 1, 2, 6
    let snaps = lines(&tmp.path().join("snapshot_anisotropy.csv"));
    let epochs: Vec<&str> = snaps[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(epochs, ["0", "1", "2", "6"]);
    assert_eq!(m.artifacts.iter().filter(|a| a.path.ends_with(".csv")).count(), 10);
    for key in ["train_accuracy", "anisotropy_min", "regions", "gelu_mean_cosine", "centroid_over_forward"] {
        assert!(m.metric_f64(key).is_some(), "metric {key}");
    }
}

#[test]
fn shape_names_force_the_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_star();
    cfg["skip_geometry"] = json!(true);
    let m = run_experiment("polygon-bowtie", cfg, tmp.path()).unwrap();
    assert_eq!(m.experiment, "polygon-bowtie");
    assert_eq!(m.config["shape"], "bowtie");
    assert!(!tmp.path().join("partition.svg").exists());
    // 4 sides
    assert_eq!(lines(&tmp.path().join("edge_anisotropy.csv")).len(), 5);
}

#[test]
fn empty_shape_list_gives_an_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let m = run_experiment("polygon-suite", json!({"shapes": []}), tmp.path()).unwrap();
    assert!(m.artifacts.is_empty());
    assert!(m.metrics.is_empty());
    assert!(tmp.path().join(MANIFEST_FILE).exists());
}

#[test]
fn suite_prefixes_files_per_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({"shapes": ["reuleaux", "bowtie"], "base": small_star()});
    let m = run_experiment("polygon-suite", cfg, tmp.path()).unwrap();
    assert!(tmp.path().join("reuleaux/partition.svg").exists());
    assert!(tmp.path().join("bowtie/edge_centroids.csv").exists());
    assert!(m.metric_f64("bowtie/train_accuracy").is_some());
}

#[test]
fn single_seed_spurious_table_has_zero_std() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({
        "correlations": [0.0, 1.0],
        "seeds": 1,
        "n_probe": 200,
        "classifier": {"n_train": 200, "epochs": 1}
    });
    run_experiment("spurious", cfg, tmp.path()).unwrap();
    let table = lines(&tmp.path().join("spurious_feature_hypothesis.csv"));
    assert_eq!(table[0], "correlation,lrh_mean,lrh_std,lch_mean,lch_std,class_accuracy");
    assert_eq!(table.len(), 3);
    for row in &table[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "0");
        assert_eq!(cols[4], "0");
    }
}

#[test]
fn dictionary_compare_emits_both_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({
        "n_samples": 200,
        "ks": [2, 4],
        "classifier": {"n_train": 200, "epochs": 1},
        "sae": {"epochs": 2},
        "jaccard_queries": 2,
        "jaccard_top": 3
    });
    let m = run_experiment("dictionary", cfg, tmp.path()).unwrap();
    for src in ["latents", "centroids"] {
        for k in [2, 4] {
            for kind in ["firing", "jaccard", "cosine"] {
                assert!(tmp.path().join(format!("{kind}_{src}_k{k}.csv")).exists());
            }
        }
    }
    let probe = lines(&tmp.path().join("probe_vs_k.csv"));
    assert!(probe.len() >= 3);
    assert!(m.metrics.contains_key("reconstruction_monotone_in_k"));
}

#[test]
fn attribution_demo_isolates_the_planted_neuron() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({"samples": 64, "resamples": 3, "sweep_radii": [0.025, 0.25]});
    let m = run_experiment("attribution", cfg, tmp.path()).unwrap();
    assert_eq!(m.metric_f64("designated_percentile"), Some(100.0));
    assert_eq!(m.metric_f64("disconnected_score"), Some(0.0));
    assert!(m.metric_f64("median_over_max").unwrap() <= 0.2);
}

#[test]
fn reruns_reproduce_csvs_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("a");
    let m = run_experiment("oracles", json!({"networks": 4, "constructions": 4}), &first).unwrap();
    let (again, diff) = rerun(&first, &tmp.path().join("b")).unwrap();
    assert!(diff.is_empty(), "{diff:?}");
    assert_eq!(m.config_digest, again.config_digest);

    let star = tmp.path().join("s");
    run_experiment("star", small_star(), &star).unwrap();
    let (_, diff) = rerun(&star, &tmp.path().join("s2")).unwrap();
    assert!(diff.is_empty(), "{diff:?}");
}

#[test]
fn a_tampered_csv_is_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("a");
    let cfg = json!({"samples": 16, "resamples": 1, "sweep_radii": [0.25]});
    run_experiment("attribution", cfg, &dir).unwrap();
    let path = dir.join(MANIFEST_FILE);
    let mut m = RunManifest::load(&path).unwrap();
    let scores = m.artifacts.iter_mut().find(|a| a.path == "scores.csv").unwrap();
    scores.sha256 = "0".repeat(64);
    fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    let (fresh, diff) = rerun(&dir, &tmp.path().join("b")).unwrap();
    assert_eq!(diff, ["scores.csv"]);
    assert!(csv_differences(&fresh, &fresh).is_empty());
}

#[test]
fn seed_overrides_land_in_the_right_field() {
    let mut v = Value::Null;
    override_seed("spurious", &mut v, 9).unwrap();
    assert_eq!(v, json!({"base_seed": 9}));
    let mut v = json!({"shapes": ["star"]});
    override_seed("polygon-suite", &mut v, 4).unwrap();
    assert_eq!(v["base"]["seed"], 4);
    let mut v = json!({"seed": 1, "epochs": 3});
    override_seed("star", &mut v, 2).unwrap();
    assert_eq!(v, json!({"seed": 2, "epochs": 3}));
    assert!(override_seed("star", &mut json!([1]), 2).is_err());
}

#[test]
fn config_errors_map_to_exit_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = [
        ("star", json!({"hidden": []})),
        ("star", json!({"unknown_field": 1})),
        ("spurious", json!({"correlations": [1.5]})),
        ("attribution", json!({"designated": 500})),
        ("nope", Value::Null),
    ];
    for (name, cfg) in bad {
        let err: Error = run_experiment(name, cfg.clone(), tmp.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{name} {cfg}: {err}");
    }
}

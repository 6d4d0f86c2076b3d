// SPDX-License-Identifier: MIT OR Apache-2.0

//! Desk-scale experiments built on `lch-core`: synthetic datasets,
//! scripted runs and their reproducible manifests.

pub mod attribution;
pub mod checks;
pub mod colored;
pub mod dictionary_compare;
pub mod error;
pub mod manifest;
pub mod polygon;
pub mod spurious;
pub mod star;

pub use error::{Error, Result};
pub use manifest::{RunDir, RunManifest};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: &[&str] = &[
    "star",
    "polygon-star",
    "polygon-bowtie",
    "polygon-reuleaux",
    "polygon-suite",
    "spurious",
    "dictionary",
    "attribution",
    "oracles",
];

fn parse<T: DeserializeOwned>(config: Value) -> Result<T> {
    serde_json::from_value(config).map_err(|e| Error::config(format!("bad config: {e}")))
}

/// Path of the seed field inside each experiment's config.
fn seed_path(name: &str) -> &'static [&'static str] {
    match name {
        "polygon-suite" => &["base", "seed"],
        "spurious" => &["base_seed"],
        _ => &["seed"],
    }
}

/// Writes `seed` into the experiment's config, creating objects as needed.
pub fn override_seed(name: &str, config: &mut Value, seed: u64) -> Result<()> {
    let path = seed_path(name);
    let mut cur = config;
    for (i, key) in path.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::config("config must be a JSON object"))?;
        if i + 1 == path.len() {
            obj.insert((*key).to_owned(), seed.into());
            return Ok(());
        }
        cur = obj.entry(*key).or_insert(Value::Null);
    }
    Ok(())
}

/// Runs a named experiment with a JSON config (`null` selects defaults).
pub fn run_experiment(name: &str, config: Value, out: &Path) -> Result<RunManifest> {
    let config = if config.is_null() { Value::Object(Default::default()) } else { config };
    match name {
        "star" => star::run_star(&parse(config)?, out),
        "polygon-star" | "polygon-bowtie" | "polygon-reuleaux" => {
            let mut cfg: star::StarConfig = parse(config)?;
            cfg.shape = polygon::Shape::parse(&name["polygon-".len()..])?;
            star::run_star(&cfg, out)
        }
        "polygon-suite" => star::run_polygon_suite(&parse(config)?, out),
        "spurious" => spurious::run_spurious(&parse(config)?, out),
        "dictionary" => dictionary_compare::run_dictionary_compare(&parse(config)?, out),
        "attribution" => attribution::run_attribution_demo(&parse(config)?, out),
        "oracles" => checks::run_oracles(&parse(config)?, out),
        other => Err(Error::config(format!(
            "unknown experiment {other:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        ))),
    }
}

/// CSV files whose hashes differ between two manifests, including files
/// present in only one of them.
pub fn csv_differences(a: &RunManifest, b: &RunManifest) -> Vec<String> {
    let (ha, hb) = (a.csv_hashes(), b.csv_hashes());
    let mut keys: Vec<&str> = ha.keys().chain(hb.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter()
        .filter(|k| ha.get(k) != hb.get(k))
        .map(str::to_owned)
        .collect()
}

/// Re-executes the run recorded in `run_dir` into `out` and returns the new
/// manifest with the list of CSV files that changed.
pub fn rerun(run_dir: &Path, out: &Path) -> Result<(RunManifest, Vec<String>)> {
    let old = RunManifest::load(&run_dir.join(manifest::MANIFEST_FILE))?;
    let new = run_experiment(&old.experiment, old.config.clone(), out)?;
    let diff = csv_differences(&old, &new);
    Ok((new, diff))
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! TopK dictionaries trained on head activations versus head centroids of
//! the glyph classifier: probe accuracy across k, firing statistics,
//! cross-seed feature agreement and Jaccard retrieval.

use std::path::Path;
use std::time::Instant;

use lch_core::dictionary::{
    cross_dictionary_cosine, firing_frequency, jaccard_neighbors, probe_on_codes, sae_train, SaeConfig, Source,
};
use lch_core::probes::ProbeConfig;
use lch_core::{FeatureDictionary, Tensor};
use serde::{Deserialize, Serialize};

use crate::colored::ColoredDataset;
use crate::error::{Error, Result};
use crate::manifest::{RunDir, RunManifest};
use crate::spurious::{head_representations, train_classifier, ClassifierConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DictionaryConfig {
    pub seed: u64,
    pub classifier: ClassifierConfig,
    /// Color/class correlation of the classifier's training data.
    pub correlation: f64,
    /// Samples whose representations are fed to the dictionaries.
    pub n_samples: usize,
    pub ks: Vec<usize>,
    /// Dictionary size as a multiple of the input dimension.
    pub expansion: usize,
    /// Seeds of the two dictionaries trained per (source, k).
    pub sae_seeds: [u64; 2],
    pub sae: SaeConfig,
    pub probe: ProbeConfig,
    pub probe_test_fraction: f64,
    pub cosine_bins: usize,
    /// Queries and neighbours per query for the retrieval grids.
    pub jaccard_queries: usize,
    pub jaccard_top: usize,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            classifier: ClassifierConfig {
                head_hidden: 128,
                ..ClassifierConfig::default()
            },
            correlation: 0.0,
            n_samples: 1500,
            ks: vec![8, 16, 32, 64],
            expansion: 4,
            sae_seeds: [0, 1],
            sae: SaeConfig {
                epochs: 20,
                ..SaeConfig::default()
            },
            probe: ProbeConfig::default(),
            probe_test_fraction: 0.3,
            cosine_bins: 20,
            jaccard_queries: 5,
            jaccard_top: 8,
        }
    }
}

impl DictionaryConfig {
    pub fn validate(&self) -> Result<()> {
        self.classifier.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) || self.expansion == 0 || self.n_samples < 10 {
            return Err(Error::config("need positive k values, expansion and at least 10 samples"));
        }
        if self.cosine_bins == 0 {
            return Err(Error::config("cosine_bins must be positive"));
        }
        Ok(())
    }
}

/// One trained dictionary and its scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DictionaryRow {
    pub source: Source,
    pub k: usize,
    pub seed: u64,
    pub probe_accuracy: f64,
    pub reconstruction_error: f64,
    pub dead_fraction: f64,
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::Latents => "latents",
        Source::Centroids => "centroids",
    }
}

/// Counts of `values` in `bins` equal-width bins over `[-1, 1]`.
pub fn cosine_histogram(values: &[f64], bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    for &v in values {
        let b = (((v + 1.0) / 2.0) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        h[b] += 1;
    }
    h
}

/// True when `errors` (ordered by increasing k) never increases.
pub fn nonincreasing(errors: &[f64]) -> bool {
    errors.windows(2).all(|w| w[1] <= w[0])
}

pub fn run_dictionary_compare(cfg: &DictionaryConfig, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let mut run = RunDir::create(out, "dictionary", serde_json::to_value(cfg)?)?;
    run.seed("classifier", cfg.seed);
    run.seed("sae_a", cfg.sae_seeds[0]);
    run.seed("sae_b", cfg.sae_seeds[1]);
    let t0 = Instant::now();
    let trained = train_classifier(&cfg.classifier, cfg.correlation, cfg.seed)?;
    let data = ColoredDataset::generate(cfg.n_samples, cfg.correlation, cfg.seed.wrapping_add(7))?;
    let (acts, mu) = head_representations(&trained.net, &data.images)?;
    run.metric("classifier_train_accuracy", trained.train_accuracy);

    let mut rows = Vec::new();
    let mut monotone = true;
    let mut ks = cfg.ks.clone();
    ks.sort_unstable();
    ks.dedup();
    for (source, x) in [(Source::Latents, &acts), (Source::Centroids, &mu)] {
        let sname = source_name(source);
        let m = cfg.expansion * x.row_len();
        for &k in &ks {
            let mut pair: Vec<FeatureDictionary> = Vec::with_capacity(2);
            for &seed in &cfg.sae_seeds {
                let sc = SaeConfig { seed, ..cfg.sae.clone() };
                let dict = sae_train(x, m, k.min(m), source, &sc)?;
                let firing = firing_frequency(&dict, x)?;
                let probe = probe_on_codes(&dict, x, &data.classes, cfg.probe_test_fraction, &ProbeConfig {
                    seed: cfg.seed,
                    ..cfg.probe.clone()
                })?;
                rows.push(DictionaryRow {
                    source,
                    k,
                    seed,
                    probe_accuracy: probe.accuracy,
                    reconstruction_error: *dict.error_trace.last().expect("trace starts at initialization"),
                    dead_fraction: firing.dead_fraction(),
                });
                if seed == cfg.sae_seeds[0] {
                    let mut buf = Vec::new();
                    firing.write_csv(&mut buf)?;
                    run.write_bytes(&format!("firing_{sname}_k{k}.csv"), &buf)?;
                    write_retrieval(&mut run, &dict, x, &data.classes, &format!("jaccard_{sname}_k{k}.csv"), cfg)?;
                }
                pair.push(dict);
            }
            let cos: Vec<f64> = cross_dictionary_cosine(&pair[0], &pair[1])?;
            let hist = cosine_histogram(&cos, cfg.cosine_bins);
            let width = 2.0 / cfg.cosine_bins as f64;
            run.write_csv(
                &format!("cosine_{sname}_k{k}.csv"),
                &["bin_lo", "bin_hi", "count"],
                hist.iter().enumerate().map(|(b, c)| {
                    let lo = -1.0 + b as f64 * width;
                    vec![lo.to_string(), (lo + width).to_string(), c.to_string()]
                }),
            )?;
            let mean_cos = cos.iter().sum::<f64>() / cos.len().max(1) as f64;
            run.metric(&format!("mean_cross_seed_cosine_{sname}_k{k}"), mean_cos);
        }
        for &seed in &cfg.sae_seeds {
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.source == source && r.seed == seed)
                .map(|r| r.reconstruction_error)
                .collect();
            monotone &= nonincreasing(&errs);
        }
    }
    run.write_csv(
        "probe_vs_k.csv",
        &["source", "k", "seed", "probe_accuracy", "reconstruction_error", "dead_fraction"],
        rows.iter().map(|r| {
            vec![
                source_name(r.source).to_string(),
                r.k.to_string(),
                r.seed.to_string(),
                r.probe_accuracy.to_string(),
                r.reconstruction_error.to_string(),
                r.dead_fraction.to_string(),
            ]
        }),
    )?;
    let mut trend = Vec::new();
    for &k in &ks {
        let mean = |s: Source| {
            let v: Vec<f64> = rows.iter().filter(|r| r.source == s && r.k == k).map(|r| r.probe_accuracy).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let (lat, cen) = (mean(Source::Latents), mean(Source::Centroids));
        trend.push(vec![k.to_string(), lat.to_string(), cen.to_string(), (cen - lat).to_string()]);
    }
    run.write_csv("probe_trend.csv", &["k", "latents", "centroids", "centroids_minus_latents"], trend)?;
    run.metric("reconstruction_monotone_in_k", monotone);
    run.metric("seconds", t0.elapsed().as_secs_f64());
    run.finish()
}

fn write_retrieval(
    run: &mut RunDir,
    dict: &FeatureDictionary,
    x: &Tensor,
    classes: &[usize],
    name: &str,
    cfg: &DictionaryConfig,
) -> Result<()> {
    let mut rows = Vec::new();
    let stride = (x.rows() / cfg.jaccard_queries.max(1)).max(1);
    for q in (0..x.rows()).step_by(stride).take(cfg.jaccard_queries) {
        for (rank, (id, sim)) in jaccard_neighbors(dict, x, q, cfg.jaccard_top)?.into_iter().enumerate() {
            rows.push(vec![
                q.to_string(),
                classes[q].to_string(),
                rank.to_string(),
                id.to_string(),
                classes[id].to_string(),
                sim.to_string(),
            ]);
        }
    }
    run.write_csv(
        name,
        &["query", "query_class", "rank", "neighbor", "neighbor_class", "jaccard"],
        rows,
    )
}

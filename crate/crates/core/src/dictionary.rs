// SPDX-License-Identifier: MIT OR Apache-2.0

//! TopK sparse autoencoders and the analyses that compare dictionaries.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::Adam;
use crate::probes::{fit_logistic_probe, ProbeConfig};
use crate::scalar::Scalar;
use crate::tensor::{dot, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Latents,
    Centroids,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SaeConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 1e-3,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Mean-centering and a global scale giving unit mean row norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization<S = f64> {
    pub mean: Vec<S>,
    pub scale: S,
}

impl<S: Scalar> Normalization<S> {
    pub fn fit(x: &Tensor<S>) -> Self {
        let mean = linalg::column_means(x);
        let mut total = S::zero();
        for i in 0..x.rows() {
            let r: Vec<S> = x.row(i).iter().zip(&mean).map(|(&v, &m)| v - m).collect();
            total += crate::tensor::norm(&r);
        }
        let avg = total / S::from_usize_lossy(x.rows().max(1));
        let scale = if avg > S::c(1e-12) { avg } else { S::one() };
        Self { mean, scale }
    }

    pub fn apply_row(&self, row: &[S]) -> Vec<S> {
        row.iter().zip(&self.mean).map(|(&v, &m)| (v - m) / self.scale).collect()
    }

    pub fn apply(&self, x: &Tensor<S>) -> Tensor<S> {
        let mut data = Vec::with_capacity(x.len());
        for i in 0..x.rows() {
            data.extend(self.apply_row(x.row(i)));
        }
        Tensor::new(vec![x.rows(), x.row_len()], data).expect("same shape")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub seed: u64,
    pub config: SaeConfig,
    /// sha256 of the config and training data.
    pub digest: String,
    pub samples: usize,
}

/// Sparse code: sorted feature ids and their (nonnegative) values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCode<S = f64> {
    pub indices: Vec<usize>,
    pub values: Vec<S>,
}

impl<S: Scalar> FeatureCode<S> {
    pub fn dense(&self, m: usize) -> Vec<S> {
        let mut z = vec![S::zero(); m];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            z[i] = v;
        }
        z
    }

    /// Ids whose value is strictly positive.
    pub fn fired(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v > S::zero())
            .map(|(&i, _)| i)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDictionary<S = f64> {
    /// `(m, d)`.
    pub encoder_weight: Tensor<S>,
    pub encoder_bias: Vec<S>,
    /// `(d, m)`; columns are the dictionary features.
    pub decoder_weight: Tensor<S>,
    pub decoder_bias: Vec<S>,
    pub k: usize,
    pub source: Source,
    pub normalization: Normalization<S>,
    pub manifest: TrainingManifest,
    /// Mean squared reconstruction error on the training data after each
    /// accepted epoch; entry 0 is the initialization.
    pub error_trace: Vec<f64>,
}

impl<S: Scalar> FeatureDictionary<S> {
    pub fn input_dim(&self) -> usize {
        self.decoder_weight.shape()[0]
    }

    pub fn size(&self) -> usize {
        self.encoder_weight.shape()[0]
    }

    /// Raw sample to the dictionary's working coordinates.
    pub fn prepare(&self, x: &Tensor<S>) -> Tensor<S> {
        self.normalization.apply(x)
    }

    pub fn decoder_column(&self, j: usize) -> Vec<S> {
        let (d, m) = (self.input_dim(), self.size());
        (0..d).map(|i| self.decoder_weight.data()[i * m + j]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

/// Keeps the `min(k, m)` largest pre-activations, ties to the lower index,
/// and rectifies them.
pub fn topk_code<S: Scalar>(pre: &[S], k: usize) -> FeatureCode<S> {
    let mut order: Vec<usize> = (0..pre.len()).collect();
    let k = k.min(pre.len());
    let cmp = |&a: &usize, &b: &usize| {
        pre[b]
            .partial_cmp(&pre[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    };
    if k < order.len() && k > 0 {
        order.select_nth_unstable_by(k - 1, cmp);
    }
    order.truncate(k);
    order.sort_unstable();
    let values = order.iter().map(|&i| pre[i].max(S::zero())).collect();
    FeatureCode { indices: order, values }
}

fn pre_activations<S: Scalar>(dict: &FeatureDictionary<S>, x: &[S]) -> Vec<S> {
    let d = dict.input_dim();
    (0..dict.size())
        .map(|j| dot(&dict.encoder_weight.data()[j * d..(j + 1) * d], x) + dict.encoder_bias[j])
        .collect()
}

/// Encodes one sample given in working coordinates.
pub fn encode<S: Scalar>(dict: &FeatureDictionary<S>, x: &[S]) -> Result<FeatureCode<S>> {
    if x.len() != dict.input_dim() {
        return Err(Error::Shape {
            op: "encode",
            lhs: vec![x.len()],
            rhs: vec![dict.input_dim()],
        });
    }
    Ok(topk_code(&pre_activations(dict, x), dict.k))
}

/// `decoder · code + decoder_bias`, in working coordinates.
pub fn decode<S: Scalar>(dict: &FeatureDictionary<S>, code: &FeatureCode<S>) -> Result<Vec<S>> {
    let m = dict.size();
    if let Some(&bad) = code.indices.iter().find(|&&i| i >= m) {
        return Err(Error::invalid(format!("feature {bad} out of range for {m} features")));
    }
    let mut out = dict.decoder_bias.clone();
    for (row, o) in out.iter_mut().enumerate() {
        let w = &dict.decoder_weight.data()[row * m..(row + 1) * m];
        for (&j, &v) in code.indices.iter().zip(&code.values) {
            *o += w[j] * v;
        }
    }
    Ok(out)
}

/// Squared reconstruction error of one working-coordinate sample.
pub fn reconstruction_error<S: Scalar>(dict: &FeatureDictionary<S>, x: &[S]) -> Result<S> {
    let code = encode(dict, x)?;
    let y = decode(dict, &code)?;
    Ok(y.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).sum())
}

fn mean_error<S: Scalar>(dict: &FeatureDictionary<S>, x: &Tensor<S>) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..x.rows() {
        total += reconstruction_error(dict, x.row(i))?.to_f64_lossy();
    }
    Ok(total / x.rows().max(1) as f64)
}

fn normalize_columns<S: Scalar>(w: &mut [S], d: usize, m: usize) {
    for j in 0..m {
        let n = (0..d).map(|i| w[i * m + j] * w[i * m + j]).sum::<S>().sqrt();
        if n > S::zero() {
            for i in 0..d {
                w[i * m + j] /= n;
            }
        }
    }
}

fn digest<S: Scalar>(x: &Tensor<S>, m: usize, k: usize, source: Source, cfg: &SaeConfig) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&(cfg, m, k, source)).expect("config serializes"));
    for v in x.data() {
        h.update(v.to_f64_lossy().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Trains a TopK autoencoder with `m` features on the rows of `data`.
///
/// An epoch whose full-data error exceeds the previous one is rolled back
/// and retried at half the learning rate, so `error_trace` never increases.
pub fn sae_train<S: Scalar>(
    data: &Tensor<S>,
    m: usize,
    k: usize,
    source: Source,
    cfg: &SaeConfig,
) -> Result<FeatureDictionary<S>> {
    if data.rank() != 2 || data.rows() == 0 || data.row_len() == 0 {
        return Err(Error::invalid(format!("SAE needs nonempty (n, d) data, got {:?}", data.shape())));
    }
    if k == 0 || k > m {
        return Err(Error::invalid(format!("SAE needs 1 ≤ k ≤ m, got k = {k}, m = {m}")));
    }
    if !data.is_finite() {
        return Err(Error::NonFinite("SAE training data".into()));
    }
    let (n, d) = (data.rows(), data.row_len());
    let normalization = Normalization::fit(data);
    let x = normalization.apply(data);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut dec: Vec<S> = (0..d * m)
        .map(|_| S::c(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)))
        .collect();
    normalize_columns(&mut dec, d, m);
    let mut enc = vec![S::zero(); m * d];
    for i in 0..d {
        for j in 0..m {
            enc[j * d + i] = dec[i * m + j];
        }
    }
    let mut dict = FeatureDictionary {
        encoder_weight: Tensor::new(vec![m, d], enc)?,
        encoder_bias: vec![S::zero(); m],
        decoder_weight: Tensor::new(vec![d, m], dec)?,
        decoder_bias: vec![S::zero(); d],
        k,
        source,
        normalization,
        manifest: TrainingManifest {
            seed: cfg.seed,
            config: cfg.clone(),
            digest: digest(data, m, k, source, cfg),
            samples: n,
        },
        error_trace: Vec::with_capacity(cfg.epochs + 1),
    };
    let mut err = mean_error(&dict, &x)?;
    dict.error_trace.push(err);

    let mut lr = cfg.learning_rate;
    let sizes = [m * d, m, d * m, d];
    let mut adam = Adam::new(lr, &sizes);
    let mut order: Vec<usize> = (0..n).collect();
    let bs = cfg.batch_size.max(1);
    let mut g_enc = vec![S::zero(); m * d];
    let mut g_be = vec![S::zero(); m];
    let mut g_dec = vec![S::zero(); d * m];
    let mut g_bd = vec![S::zero(); d];
    for epoch in 1..=cfg.epochs {
        let snapshot = (dict.clone(), lr);
        order.shuffle(&mut rng);
        for batch in order.chunks(bs) {
            g_enc.iter_mut().for_each(|g| *g = S::zero());
            g_be.iter_mut().for_each(|g| *g = S::zero());
            g_dec.iter_mut().for_each(|g| *g = S::zero());
            g_bd.iter_mut().for_each(|g| *g = S::zero());
            let scale = S::c(2.0) / S::from_usize_lossy(batch.len());
            for &s in batch {
                let xs = x.row(s);
                let pre = pre_activations(&dict, xs);
                let code = topk_code(&pre, k);
                let y = decode(&dict, &code)?;
                let r: Vec<S> = y.iter().zip(xs).map(|(&a, &b)| (a - b) * scale).collect();
                for (gb, &ri) in g_bd.iter_mut().zip(&r) {
                    *gb += ri;
                }
                let w = dict.decoder_weight.data();
                for (&j, &v) in code.indices.iter().zip(&code.values) {
                    let mut dz = S::zero();
                    for i in 0..d {
                        g_dec[i * m + j] += r[i] * v;
                        dz += w[i * m + j] * r[i];
                    }
                    if pre[j] > S::zero() {
                        g_be[j] += dz;
                        for (ge, &xi) in g_enc[j * d..(j + 1) * d].iter_mut().zip(xs) {
                            *ge += dz * xi;
                        }
                    }
                }
            }
            adam.tick();
            adam.update(0, dict.encoder_weight.data_mut(), &g_enc);
            adam.update(1, &mut dict.encoder_bias, &g_be);
            adam.update(2, dict.decoder_weight.data_mut(), &g_dec);
            adam.update(3, &mut dict.decoder_bias, &g_bd);
            normalize_columns(dict.decoder_weight.data_mut(), d, m);
        }
        let next = mean_error(&dict, &x)?;
        if !next.is_finite() {
            return Err(Error::Divergence { epoch, loss: next });
        }
        if next > err {
            let (prev, prev_lr) = snapshot;
            let trace = std::mem::take(&mut dict.error_trace);
            dict = prev;
            dict.error_trace = trace;
            lr = prev_lr * 0.5;
            adam = Adam::new(lr, &sizes);
        } else {
            err = next;
        }
        dict.error_trace.push(err);
    }
    Ok(dict)
}

/// Dense `(n, m)` code matrix of raw samples.
pub fn encode_dense<S: Scalar>(dict: &FeatureDictionary<S>, data: &Tensor<S>) -> Result<Tensor<S>> {
    let x = dict.prepare(data);
    let m = dict.size();
    let mut out = Vec::with_capacity(x.rows() * m);
    for i in 0..x.rows() {
        out.extend(encode(dict, x.row(i))?.dense(m));
    }
    Tensor::new(vec![x.rows(), m], out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiringRow {
    pub rank: usize,
    pub feature: usize,
    pub count: usize,
    pub log_activation_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiringTable {
    pub rows: Vec<FiringRow>,
    pub samples: usize,
}

impl FiringTable {
    pub fn dead_fraction(&self) -> f64 {
        let dead = self.rows.iter().filter(|r| r.count == 0).count();
        dead as f64 / self.rows.len().max(1) as f64
    }

    /// CSV with header `rank,feature,count,log_activation_frequency`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-feature firing counts (value strictly positive), most frequent first.
pub fn firing_frequency<S: Scalar>(dict: &FeatureDictionary<S>, data: &Tensor<S>) -> Result<FiringTable> {
    if data.rows() == 0 {
        return Err(Error::invalid("firing frequency needs at least one sample"));
    }
    let x = dict.prepare(data);
    let mut counts = vec![0usize; dict.size()];
    for i in 0..x.rows() {
        for j in encode(dict, x.row(i))?.fired() {
            counts[j] += 1;
        }
    }
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let rows = order
        .into_iter()
        .enumerate()
        .map(|(rank, feature)| FiringRow {
            rank,
            feature,
            count: counts[feature],
            log_activation_frequency: ((counts[feature] + 1) as f64).log10(),
        })
        .collect();
    Ok(FiringTable {
        rows,
        samples: x.rows(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeProbeOutcome {
    pub accuracy: f64,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

/// Held-out accuracy of a logistic probe on dense codes. The split is a
/// seeded shuffle with `test_fraction` of the samples held out.
pub fn probe_on_codes<S: Scalar>(
    dict: &FeatureDictionary<S>,
    data: &Tensor<S>,
    labels: &[usize],
    test_fraction: f64,
    cfg: &ProbeConfig,
) -> Result<CodeProbeOutcome> {
    if labels.len() != data.rows() {
        return Err(Error::invalid(format!("{} samples but {} labels", data.rows(), labels.len())));
    }
    let codes = encode_dense(dict, data)?;
    let (train_ids, test_ids) = split_ids(data.rows(), test_fraction, cfg.seed)?;
    let accuracy = probe_accuracy(&codes, labels, &train_ids, &test_ids, cfg)?;
    Ok(CodeProbeOutcome {
        accuracy,
        train_ids,
        test_ids,
    })
}

/// Seeded train/test split of `0..n`; both parts sorted.
pub fn split_ids(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::invalid(format!("test fraction {test_fraction} outside [0, 1)")));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let mut test = ids[..n_test].to_vec();
    let mut train = ids[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Fits on `train` rows and scores on `test` rows (on `train` when `test` is empty).
pub fn probe_accuracy<S: Scalar>(
    x: &Tensor<S>,
    y: &[usize],
    train: &[usize],
    test: &[usize],
    cfg: &ProbeConfig,
) -> Result<f64> {
    let pick = |ids: &[usize]| ids.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let probe = fit_logistic_probe(&x.select_rows(train), &pick(train), cfg)?;
    let eval = if test.is_empty() { train } else { test };
    probe.accuracy(&x.select_rows(eval), &pick(eval))
}

/// For each feature of `a`, the largest cosine with any feature of `b`.
pub fn cross_dictionary_cosine<S: Scalar>(a: &FeatureDictionary<S>, b: &FeatureDictionary<S>) -> Result<Vec<S>> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::Shape {
            op: "cross_dictionary_cosine",
            lhs: a.decoder_weight.shape().to_vec(),
            rhs: b.decoder_weight.shape().to_vec(),
        });
    }
    let bcols: Vec<Vec<S>> = (0..b.size()).map(|j| b.decoder_column(j)).collect();
    Ok((0..a.size())
        .map(|i| {
            let u = a.decoder_column(i);
            bcols
                .iter()
                .map(|v| {
                    if &u == v && u.iter().any(|&x| x != S::zero()) {
                        S::one()
                    } else {
                        crate::tensor::cosine(&u, v).max(-S::one()).min(S::one())
                    }
                })
                .fold(S::neg_infinity(), S::max)
        })
        .collect())
}

/// Samples ranked by Jaccard similarity of their code supports to the
/// query's, descending, ties to the lower id; the query itself is skipped.
pub fn jaccard_neighbors<S: Scalar>(
    dict: &FeatureDictionary<S>,
    data: &Tensor<S>,
    query: usize,
    top_n: usize,
) -> Result<Vec<(usize, f64)>> {
    if query >= data.rows() {
        return Err(Error::invalid(format!("query {query} not among {} samples", data.rows())));
    }
    let x = dict.prepare(data);
    let supports: Vec<Vec<usize>> = (0..x.rows())
        .map(|i| encode(dict, x.row(i)).map(|c| c.indices))
        .collect::<Result<_>>()?;
    let q = &supports[query];
    let mut sims: Vec<(usize, f64)> = supports
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != query)
        .map(|(i, s)| (i, jaccard(q, s)))
        .collect();
    sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    sims.truncate(top_n);
    Ok(sims)
}

/// Jaccard index of two sorted id lists; two empty sets count as identical.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_data(n: usize, d: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Tensor::from_rows(&rows).unwrap()
    }

    fn quick(epochs: usize) -> SaeConfig {
        SaeConfig {
            epochs,
            learning_rate: 1e-2,
            batch_size: 16,
            seed: 7,
        }
    }

    #[test]
    fn topk_ties_go_to_lower_index() {
        let c = topk_code(&[0.5, 2.0, 1.0, 1.0, 1.0], 3);
        assert_eq!(c.indices, vec![1, 2, 3]);
        assert_eq!(c.values, vec![2.0, 1.0, 1.0]);
        let neg = topk_code(&[-1.0, -2.0, 3.0], 2);
        assert_eq!(neg.indices, vec![0, 2]);
        assert_eq!(neg.values, vec![0.0, 3.0]);
        assert_eq!(neg.fired().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn rank_one_data_is_reconstructed() {
        let rows = vec![vec![0.3, -1.2, 0.8]; 32];
        let mut x = Tensor::from_rows(&rows).unwrap();
        // tiny spread so the normalization has something to scale
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v *= 1.0 + (i / 3) as f64 * 0.01;
        }
        let dict = sae_train(&x, 4, 1, Source::Latents, &quick(200)).unwrap();
        assert!(*dict.error_trace.last().unwrap() < 1e-3, "{:?}", dict.error_trace.last());
    }

    #[test]
    fn trace_is_monotone_and_decoder_columns_unit() {
        let x = random_data(200, 6, 1);
        let dict = sae_train(&x, 24, 3, Source::Centroids, &quick(20)).unwrap();
        assert_eq!(dict.error_trace.len(), 21);
        assert!(dict.error_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(dict.error_trace.last().unwrap() < &dict.error_trace[0]);
        for j in 0..dict.size() {
            let n = crate::tensor::norm(&dict.decoder_column(j));
            assert!((n - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn training_is_reproducible_and_round_trips() {
        let x = random_data(60, 4, 2);
        let a = sae_train(&x, 8, 2, Source::Latents, &quick(3)).unwrap();
        let b = sae_train(&x, 8, 2, Source::Latents, &quick(3)).unwrap();
        assert_eq!(a, b);
        let back = FeatureDictionary::<f64>::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn zero_code_decodes_to_bias() {
        let x = random_data(20, 3, 3);
        let dict = sae_train(&x, 6, 2, Source::Latents, &quick(2)).unwrap();
        let code = FeatureCode {
            indices: vec![0, 1],
            values: vec![0.0, 0.0],
        };
        assert_eq!(decode(&dict, &code).unwrap(), dict.decoder_bias);
    }

    #[test]
    fn k_equal_m_fires_everything_identically() {
        let x = random_data(30, 3, 4);
        let dict = sae_train(&x, 5, 5, Source::Latents, &quick(2)).unwrap();
        let nb = jaccard_neighbors(&dict, &x, 0, 29).unwrap();
        assert!(nb.iter().all(|&(_, s)| s == 1.0));
        assert_eq!(nb.len(), 29);
    }

    #[test]
    fn duplicate_of_query_ranks_first() {
        let mut x = random_data(30, 3, 5);
        let q = x.row(4).to_vec();
        x.data_mut()[27 * 3..28 * 3].copy_from_slice(&q);
        let dict = sae_train(&x, 12, 3, Source::Latents, &quick(2)).unwrap();
        let nb = jaccard_neighbors(&dict, &x, 4, 3).unwrap();
        assert_eq!(nb[0].1, 1.0);
        assert!(nb.iter().all(|&(i, _)| i != 4));
        assert!(nb.iter().take_while(|e| e.1 == 1.0).any(|e| e.0 == 27));
    }

    #[test]
    fn self_cosine_is_one() {
        let x = random_data(30, 4, 6);
        let dict = sae_train(&x, 8, 2, Source::Latents, &quick(2)).unwrap();
        let c = cross_dictionary_cosine(&dict, &dict).unwrap();
        assert!(c.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn orthogonal_dictionaries_have_zero_cosine() {
        let x = random_data(30, 4, 6);
        let mut a = sae_train(&x, 2, 1, Source::Latents, &quick(1)).unwrap();
        let mut b = a.clone();
        a.decoder_weight = Tensor::from_f64(&[4, 2], &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        b.decoder_weight = Tensor::from_f64(&[4, 2], &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(cross_dictionary_cosine(&a, &b).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn firing_table_is_ranked() {
        let x = random_data(50, 4, 8);
        let dict = sae_train(&x, 16, 2, Source::Latents, &quick(2)).unwrap();
        let t = firing_frequency(&dict, &x).unwrap();
        assert!(t.rows.windows(2).all(|w| w[0].count >= w[1].count));
        let total: usize = t.rows.iter().map(|r| r.count).sum();
        assert!(total <= 2 * 50);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("rank,feature,count,log_activation_frequency\n"));
        assert!(firing_frequency(&dict, &Tensor::zeros(&[0, 4])).is_err());
    }

    #[test]
    fn separable_codes_probe_perfectly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let c = if i % 2 == 0 { 3.0 } else { -3.0 };
                vec![c + rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)]
            })
            .collect();
        let y: Vec<usize> = (0..200).map(|i| i % 2).collect();
        let x = Tensor::from_rows(&rows).unwrap();
        let dict = sae_train(&x, 8, 2, Source::Latents, &quick(20)).unwrap();
        let out = probe_on_codes(&dict, &x, &y, 0.25, &ProbeConfig::default()).unwrap();
        assert_eq!(out.accuracy, 1.0);
        assert_eq!(out.test_ids.len(), 50);
    }

    proptest! {
        #[test]
        fn codes_have_exactly_k_entries(
            m in 1usize..24,
            d in 1usize..6,
            k in 1usize..30,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_data(4, d, seed);
            let mut dict = sae_train(&x, m, k.min(m), Source::Latents, &SaeConfig { epochs: 0, ..SaeConfig::default() }).unwrap();
            dict.k = k;
            dict.encoder_bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
            for _ in 0..8 {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let c = encode(&dict, &v).unwrap();
                prop_assert_eq!(c.indices.len(), k.min(m));
                prop_assert!(c.indices.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(c.values.iter().all(|&v| v >= 0.0));
                let pre = pre_activations(&dict, &v);
                let kth = c.indices.iter().map(|&i| pre[i]).fold(f64::INFINITY, f64::min);
                prop_assert!((0..m).filter(|i| !c.indices.contains(i)).all(|i| pre[i] <= kth));
            }
        }
    }
}

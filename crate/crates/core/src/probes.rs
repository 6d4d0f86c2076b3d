// SPDX-License-Identifier: MIT OR Apache-2.0

//! Linear probes (logistic and mass-mean) and PCA.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::optim::Adam;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    Logistic,
    MassMean,
}

/// Per-dimension z-score taken from a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer<S = f64> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

impl<S: Scalar> Standardizer<S> {
    pub fn fit(x: &Tensor<S>) -> Self {
        let mean = linalg::column_means(x);
        let n = S::from_usize_lossy(x.rows().max(1));
        let mut var = vec![S::zero(); mean.len()];
        for i in 0..x.rows() {
            for ((v, &a), &m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *v += (a - m) * (a - m);
            }
        }
        // constant columns keep unit scale
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > S::c(1e-12) {
                    s
                } else {
                    S::one()
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[S]) -> Vec<S> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe<S = f64> {
    pub kind: ProbeKind,
    /// `(c, d)`; `c = 1` for mass-mean probes.
    pub weight: Tensor<S>,
    pub bias: Vec<S>,
    /// Mass-mean decision offset: predict the positive class when `w·x > threshold`.
    pub threshold: S,
    pub standardizer: Option<Standardizer<S>>,
    /// Mass-mean probe whose class means coincide.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-2,
            batch_size: 64,
            seed: 0,
            standardize: true,
        }
    }
}

impl<S: Scalar> LinearProbe<S> {
    pub fn num_classes(&self) -> usize {
        match self.kind {
            ProbeKind::Logistic => self.weight.shape()[0],
            ProbeKind::MassMean => 2,
        }
    }

    /// Class scores of one sample (logits, or the signed margin for mass-mean).
    pub fn scores(&self, row: &[S]) -> Vec<S> {
        let x = match &self.standardizer {
            Some(s) => s.apply_row(row),
            None => row.to_vec(),
        };
        let c = self.weight.shape()[0];
        let mut out: Vec<S> = (0..c)
            .map(|k| crate::tensor::dot(self.weight.row(k), &x) + self.bias[k])
            .collect();
        if self.kind == ProbeKind::MassMean {
            out[0] -= self.threshold;
        }
        out
    }

    pub fn predict_row(&self, row: &[S]) -> usize {
        let s = self.scores(row);
        match self.kind {
            ProbeKind::MassMean => usize::from(s[0] > S::zero()),
            ProbeKind::Logistic => argmax(&s),
        }
    }

    pub fn predict(&self, x: &Tensor<S>) -> Result<Vec<usize>> {
        self.check_dim(x)?;
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    pub fn accuracy(&self, x: &Tensor<S>, y: &[usize]) -> Result<f64> {
        if x.rows() != y.len() {
            return Err(Error::invalid(format!("{} samples but {} labels", x.rows(), y.len())));
        }
        let pred = self.predict(x)?;
        let hits = pred.iter().zip(y).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / y.len().max(1) as f64)
    }

    fn check_dim(&self, x: &Tensor<S>) -> Result<()> {
        let d = self.weight.shape()[1];
        if x.rank() != 2 || x.row_len() != d {
            return Err(Error::Shape {
                op: "probe",
                lhs: x.shape().to_vec(),
                rhs: vec![d],
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
    }
}

fn argmax<S: Scalar>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Multinomial logistic regression trained with Adam on minibatches.
pub fn fit_logistic_probe<S: Scalar>(x: &Tensor<S>, y: &[usize], cfg: &ProbeConfig) -> Result<LinearProbe<S>> {
    if x.rank() != 2 || x.rows() != y.len() || y.is_empty() {
        return Err(Error::invalid(format!(
            "probe needs (n, d) inputs with n labels, got {:?} and {} labels",
            x.shape(),
            y.len()
        )));
    }
    let c = y.iter().max().map_or(0, |&m| m + 1);
    let distinct = {
        let mut seen = vec![false; c];
        y.iter().for_each(|&l| seen[l] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::invalid("logistic probe needs at least two classes"));
    }
    let (n, d) = (x.rows(), x.row_len());
    let standardizer = cfg.standardize.then(|| Standardizer::fit(x));
    let rows: Vec<Vec<S>> = (0..n)
        .map(|i| match &standardizer {
            Some(s) => s.apply_row(x.row(i)),
            None => x.row(i).to_vec(),
        })
        .collect();

    let mut w = vec![S::zero(); c * d];
    let mut b = vec![S::zero(); c];
    let mut adam = Adam::new(cfg.learning_rate, &[c * d, c]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let bs = cfg.batch_size.max(1);
    let mut gw = vec![S::zero(); c * d];
    let mut gb = vec![S::zero(); c];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(bs) {
            gw.iter_mut().for_each(|g| *g = S::zero());
            gb.iter_mut().for_each(|g| *g = S::zero());
            let inv = S::one() / S::from_usize_lossy(batch.len());
            for &i in batch {
                let r = &rows[i];
                let mut z: Vec<S> = (0..c)
                    .map(|k| crate::tensor::dot(&w[k * d..(k + 1) * d], r) + b[k])
                    .collect();
                let mx = z.iter().copied().fold(S::neg_infinity(), S::max);
                let mut total = S::zero();
                for v in &mut z {
                    *v = (*v - mx).exp();
                    total += *v;
                }
                for k in 0..c {
                    let g = (z[k] / total - if k == y[i] { S::one() } else { S::zero() }) * inv;
                    gb[k] += g;
                    for (gwj, &xj) in gw[k * d..(k + 1) * d].iter_mut().zip(r) {
                        *gwj += g * xj;
                    }
                }
            }
            adam.tick();
            adam.update(0, &mut w, &gw);
            adam.update(1, &mut b, &gb);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                loss: f64::NAN,
            });
        }
    }
    Ok(LinearProbe {
        kind: ProbeKind::Logistic,
        weight: Tensor::new(vec![c, d], w)?,
        bias: b,
        threshold: S::zero(),
        standardizer,
        degenerate: false,
    })
}

/// Difference-of-means direction with a midpoint threshold. Positive
/// samples are class 1.
pub fn fit_mass_mean_probe<S: Scalar>(x_pos: &Tensor<S>, x_neg: &Tensor<S>) -> Result<LinearProbe<S>> {
    if x_pos.rows() == 0 || x_neg.rows() == 0 {
        return Err(Error::invalid("mass-mean probe needs both classes nonempty"));
    }
    if x_pos.row_len() != x_neg.row_len() {
        return Err(Error::Shape {
            op: "mass_mean_probe",
            lhs: x_pos.shape().to_vec(),
            rhs: x_neg.shape().to_vec(),
        });
    }
    let mp = linalg::column_means(x_pos);
    let mn = linalg::column_means(x_neg);
    let w: Vec<S> = mp.iter().zip(&mn).map(|(&a, &b)| a - b).collect();
    let mid: Vec<S> = mp.iter().zip(&mn).map(|(&a, &b)| (a + b) * S::c(0.5)).collect();
    let threshold = crate::tensor::dot(&w, &mid);
    let degenerate = w.iter().all(|&v| v == S::zero());
    let d = w.len();
    Ok(LinearProbe {
        kind: ProbeKind::MassMean,
        weight: Tensor::new(vec![1, d], w)?,
        bias: vec![S::zero()],
        threshold,
        standardizer: None,
        degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel<S = f64> {
    pub mean: Vec<S>,
    /// `(p, d)` with orthonormal rows.
    pub components: Tensor<S>,
    pub explained_variance: Vec<S>,
    /// Sum of all covariance eigenvalues.
    pub total_variance: S,
}

pub fn pca_fit<S: Scalar>(x: &Tensor<S>, p: usize) -> Result<PcaModel<S>> {
    if x.rank() != 2 || x.rows() == 0 {
        return Err(Error::invalid(format!("PCA needs a nonempty (n, d) matrix, got {:?}", x.shape())));
    }
    let (n, d) = (x.rows(), x.row_len());
    if p == 0 || p > n.min(d) {
        return Err(Error::invalid(format!("PCA with p = {p} needs 1 ≤ p ≤ min(n, d) = {}", n.min(d))));
    }
    let mean = linalg::column_means(x);
    let cov = linalg::covariance(x, &mean);
    let (vals, vecs) = linalg::symmetric_eigen(&cov)?;
    let total_variance = vals.iter().map(|&v| v.max(S::zero())).sum();
    let components = vecs.select_rows(&(0..p).collect::<Vec<_>>());
    Ok(PcaModel {
        mean,
        components,
        explained_variance: vals[..p].iter().map(|&v| v.max(S::zero())).collect(),
        total_variance,
    })
}

/// `(X − mean) · componentsᵀ`.
pub fn pca_project<S: Scalar>(model: &PcaModel<S>, x: &Tensor<S>) -> Result<Tensor<S>> {
    let d = model.mean.len();
    if x.rank() != 2 || x.row_len() != d {
        return Err(Error::Shape {
            op: "pca_project",
            lhs: x.shape().to_vec(),
            rhs: vec![d],
        });
    }
    let p = model.components.shape()[0];
    let mut out = Vec::with_capacity(x.rows() * p);
    for i in 0..x.rows() {
        let c: Vec<S> = x.row(i).iter().zip(&model.mean).map(|(&v, &m)| v - m).collect();
        for k in 0..p {
            out.push(crate::tensor::dot(model.components.row(k), &c));
        }
    }
    Tensor::new(vec![x.rows(), p], out)
}

/// Maps projections back to the input space.
pub fn pca_reconstruct<S: Scalar>(model: &PcaModel<S>, z: &Tensor<S>) -> Result<Tensor<S>> {
    let back = z.matmul(&model.components)?;
    let d = model.mean.len();
    let mut data = back.into_data();
    for row in data.chunks_mut(d) {
        for (v, &m) in row.iter_mut().zip(&model.mean) {
            *v += m;
        }
    }
    Tensor::new(vec![z.rows(), d], data)
}

/// CSV with header `id,label,pc0..`.
pub fn write_projection_csv<S: Scalar, W: Write>(proj: &Tensor<S>, labels: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let p = proj.row_len();
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..p).map(|k| format!("pc{k}")));
    w.write_record(&header)?;
    for i in 0..proj.rows() {
        let mut rec = vec![i.to_string(), labels.get(i).map_or(String::new(), |l| l.to_string())];
        rec.extend(proj.row(i).iter().map(|v| v.to_f64_lossy().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_projection_csv<S: Scalar>(proj: &Tensor<S>, labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    write_projection_csv(proj, labels, std::fs::File::create(path)?)
}

/// Ratio of the largest to the second-largest centered singular value.
/// Infinite when the cloud is exactly one-dimensional.
pub fn anisotropy_ratio<S: Scalar>(x: &Tensor<S>) -> Result<f64> {
    let s = linalg::centered_singular_values(x)?;
    if s.len() < 2 {
        return Err(Error::invalid("anisotropy needs at least two dimensions"));
    }
    let (a, b) = (s[0].to_f64_lossy(), s[1].to_f64_lossy());
    Ok(if b > 0.0 { a / b } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn clouds(n: usize, sep: f64, seed: u64) -> (Tensor, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let s = if c == 1 { sep } else { -sep };
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![s + 0.3 * a, 0.3 * b]);
            y.push(c);
        }
        (Tensor::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn logistic_separates_two_clouds() {
        let (x, y) = clouds(200, 2.0, 1);
        let p = fit_logistic_probe(&x, &y, &ProbeConfig::default()).unwrap();
        assert_eq!(p.accuracy(&x, &y).unwrap(), 1.0);
        let back = LinearProbe::<f64>::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn logistic_on_random_labels_is_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, _) = clouds(2000, 0.0, 2);
        let y: Vec<usize> = (0..2000).map(|_| rng.random_range(0..2)).collect();
        let p = fit_logistic_probe(&x.select_rows(&(0..1000).collect::<Vec<_>>()), &y[..1000], &ProbeConfig::default()).unwrap();
        let acc = p
            .accuracy(&x.select_rows(&(1000..2000).collect::<Vec<_>>()), &y[1000..])
            .unwrap();
        assert!((acc - 0.5).abs() <= 0.05, "{acc}");
    }

    #[test]
    fn logistic_rejects_single_class() {
        let (x, _) = clouds(10, 1.0, 3);
        assert!(fit_logistic_probe(&x, &[1; 10], &ProbeConfig::default()).is_err());
    }

    #[test]
    fn mass_mean_symmetric_case() {
        let pos = Tensor::from_f64(&[1, 2], &[1.0, 0.0]).unwrap();
        let neg = Tensor::from_f64(&[1, 2], &[-1.0, 0.0]).unwrap();
        let p = fit_mass_mean_probe::<f64>(&pos, &neg).unwrap();
        assert_eq!(p.weight.data(), &[2.0, 0.0]);
        assert_eq!(p.threshold, 0.0);
        assert!(!p.degenerate);
        assert_eq!(p.predict(&pos).unwrap(), vec![1]);
        assert_eq!(p.predict(&neg).unwrap(), vec![0]);
    }

    #[test]
    fn mass_mean_degenerate_and_empty() {
        let a = Tensor::from_f64(&[2, 2], &[1.0, 0.0, -1.0, 0.0]).unwrap();
        let b = Tensor::from_f64(&[1, 2], &[0.0, 0.0]).unwrap();
        let p = fit_mass_mean_probe::<f64>(&a, &b).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.weight.data(), &[0.0, 0.0]);
        let empty = Tensor::<f64>::zeros(&[0, 2]);
        assert!(fit_mass_mean_probe(&a, &empty).is_err());
    }

    #[test]
    fn mass_mean_is_rotation_invariant() {
        let (x, y) = clouds(100, 0.5, 9);
        let split = |x: &Tensor, c: usize| {
            x.select_rows(&(0..x.rows()).filter(|&i| y[i] == c).collect::<Vec<_>>())
        };
        let rot = |x: &Tensor, t: f64| {
            let r = Tensor::from_f64(&[2, 2], &[t.cos(), t.sin(), -t.sin(), t.cos()]).unwrap();
            x.matmul(&r).unwrap()
        };
        let p = fit_mass_mean_probe(&split(&x, 1), &split(&x, 0)).unwrap();
        let xr = rot(&x, 0.7);
        let pr = fit_mass_mean_probe(&split(&xr, 1), &split(&xr, 0)).unwrap();
        assert_eq!(p.predict(&x).unwrap(), pr.predict(&xr).unwrap());
    }

    #[test]
    fn logistic_beats_mass_mean_on_training_data() {
        let (x, y) = clouds(300, 0.4, 4);
        let split = |c: usize| x.select_rows(&(0..x.rows()).filter(|&i| y[i] == c).collect::<Vec<_>>());
        let mm = fit_mass_mean_probe(&split(1), &split(0)).unwrap();
        let cfg = ProbeConfig {
            epochs: 300,
            ..ProbeConfig::default()
        };
        let lg = fit_logistic_probe(&x, &y, &cfg).unwrap();
        assert!(lg.accuracy(&x, &y).unwrap() >= mm.accuracy(&x, &y).unwrap());
    }

    #[test]
    fn pca_of_a_line_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let t: f64 = rng.random_range(-3.0..3.0);
                vec![t, 2.0 * t + 1.0, -t]
            })
            .collect();
        let x = Tensor::from_rows(&rows).unwrap();
        let m = pca_fit(&x, 1).unwrap();
        assert!(m.explained_variance[0] / m.total_variance >= 0.999);
        let mean = Tensor::from_rows(&[m.mean.clone()]).unwrap();
        assert!(pca_project(&m, &mean).unwrap().data()[0].abs() < 1e-12);

        let full = pca_fit(&x, 3).unwrap();
        let c = &full.components;
        let gram = c.matmul(&c.transpose().unwrap()).unwrap();
        assert!(gram.max_abs_diff(&Tensor::identity(3)).unwrap() < 1e-8);
        let back = pca_reconstruct(&full, &pca_project(&full, &x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-8);
        assert!(full.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        assert!(pca_fit(&x, 4).is_err());
    }

    #[test]
    fn projection_csv_layout() {
        let z = Tensor::from_f64(&[2, 2], &[0.5, -1.0, 2.0, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_projection_csv::<f64, _>(&z, &[3, 4], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,label,pc0,pc1\n0,3,0.5,-1\n1,4,2,0\n");
    }

    #[test]
    fn anisotropy_of_elongated_cloud() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 2) as f64 * 0.1]).collect();
        let r = anisotropy_ratio(&Tensor::from_rows(&rows).unwrap()).unwrap();
        assert!(r > 50.0);
    }
}

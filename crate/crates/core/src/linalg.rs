// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small dense linear-algebra kernels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit
/// eigenvectors as the rows of a `(n, n)` tensor.
pub fn symmetric_eigen<S: Scalar>(m: &Tensor<S>) -> Result<(Vec<S>, Tensor<S>)> {
    if m.rank() != 2 || m.shape()[0] != m.shape()[1] {
        return Err(Error::invalid(format!(
            "symmetric_eigen needs a square matrix, got {:?}",
            m.shape()
        )));
    }
    let n = m.shape()[0];
    let mut a: Vec<S> = m.data().to_vec();
    let mut v: Vec<S> = Tensor::<S>::identity(n).into_data();
    let at = |a: &[S], i: usize, j: usize| a[i * n + j];

    for _sweep in 0..100 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| at(&a, i, j) * at(&a, i, j))
            .sum();
        let diag: S = (0..n).map(|i| at(&a, i, i) * at(&a, i, i)).sum();
        if off <= S::epsilon() * S::epsilon() * diag.max(S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = at(&a, p, q);
                if apq == S::zero() {
                    continue;
                }
                let app = at(&a, p, p);
                let aqq = at(&a, q, q);
                let theta = (aqq - app) / (S::c(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        at(&a, j, j)
            .partial_cmp(&at(&a, i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| at(&a, i, i)).collect();
    let mut vecs = Vec::with_capacity(n * n);
    for &i in &order {
        // column i of v, sign fixed so the largest-magnitude entry is positive
        let col: Vec<S> = (0..n).map(|k| v[k * n + i]).collect();
        let pivot = col
            .iter()
            .copied()
            .fold(S::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < S::zero() { -S::one() } else { S::one() };
        vecs.extend(col.into_iter().map(|x| x * sign));
    }
    Ok((values, Tensor::new(vec![n, n], vecs)?))
}

/// Column means of an `(n, d)` matrix.
pub fn column_means<S: Scalar>(x: &Tensor<S>) -> Vec<S> {
    let (n, d) = (x.rows(), x.row_len());
    let mut m = vec![S::zero(); d];
    for i in 0..n {
        for (a, &v) in m.iter_mut().zip(x.row(i)) {
            *a += v;
        }
    }
    let nn = S::from_usize_lossy(n.max(1));
    m.iter_mut().for_each(|v| *v /= nn);
    m
}

/// Sample covariance `(X - mean)ᵀ(X - mean) / (n - 1)` (divides by 1 when n = 1).
pub fn covariance<S: Scalar>(x: &Tensor<S>, mean: &[S]) -> Tensor<S> {
    let (n, d) = (x.rows(), x.row_len());
    let mut c = vec![S::zero(); d * d];
    for i in 0..n {
        let r: Vec<S> = x.row(i).iter().zip(mean).map(|(&v, &m)| v - m).collect();
        for a in 0..d {
            if r[a] == S::zero() {
                continue;
            }
            for b in 0..d {
                c[a * d + b] += r[a] * r[b];
            }
        }
    }
    let denom = S::from_usize_lossy(n.saturating_sub(1).max(1));
    c.iter_mut().for_each(|v| *v /= denom);
    Tensor::new(vec![d, d], c).expect("square")
}

/// Singular values of the mean-centered rows, largest first.
pub fn centered_singular_values<S: Scalar>(x: &Tensor<S>) -> Result<Vec<S>> {
    let mean = column_means(x);
    let mut scatter = covariance(x, &mean);
    let denom = S::from_usize_lossy(x.rows().saturating_sub(1).max(1));
    scatter.data_mut().iter_mut().for_each(|v| *v *= denom);
    let (vals, _) = symmetric_eigen(&scatter)?;
    Ok(vals.into_iter().map(|v| v.max(S::zero()).sqrt()).collect())
}

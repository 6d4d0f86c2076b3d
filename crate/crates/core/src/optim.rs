// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adam over a fixed list of flat parameter buffers.

use crate::scalar::Scalar;

pub(crate) struct Adam<S> {
    lr: S,
    t: i32,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> Adam<S> {
    pub(crate) fn new(lr: f64, sizes: &[usize]) -> Self {
        Self {
            lr: S::c(lr),
            t: 0,
            m: sizes.iter().map(|&n| vec![S::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![S::zero(); n]).collect(),
        }
    }

    /// Advances the step counter; call once before updating each buffer.
    pub(crate) fn tick(&mut self) {
        self.t += 1;
    }

    pub(crate) fn update(&mut self, k: usize, params: &mut [S], grad: &[S]) {
        let (b1, b2, eps) = (S::c(0.9), S::c(0.999), S::c(1e-8));
        let c1 = S::one() - b1.powi(self.t);
        let c2 = S::one() - b2.powi(self.t);
        for (((w, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m[k]).zip(&mut self.v[k]) {
            *m = b1 * *m + (S::one() - b1) * g;
            *v = b2 * *v + (S::one() - b2) * g * g;
            *w -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic 16×16 glyphs tinted with a color that agrees with the class
//! with a chosen probability.

use lch_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SIDE: usize = 16;
pub const CLASSES: usize = 10;

/// Ten tints with pairwise distinct chromaticity.
pub const PALETTE: [[f64; 3]; CLASSES] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 0.5, 0.0],
    [0.5, 0.0, 1.0],
    [0.0, 1.0, 0.5],
    [1.0, 1.0, 1.0],
];

/// Grayscale glyph of `class` with its center shifted by `(dx, dy)` pixels.
pub fn glyph(class: usize, dx: f64, dy: f64) -> [f64; SIDE * SIDE] {
    let mut img = [0.0; SIDE * SIDE];
    let c = (SIDE as f64 - 1.0) / 2.0;
    for i in 0..SIDE {
        for j in 0..SIDE {
            let y = i as f64 - c - dy;
            let x = j as f64 - c - dx;
            let r = x.hypot(y);
            let on = match class {
                0 => y.abs() <= 1.0 && x.abs() <= 5.5,
                1 => x.abs() <= 1.0 && y.abs() <= 5.5,
                2 => (x - y).abs() <= 1.2 && r <= 6.0,
                3 => (x + y).abs() <= 1.2 && r <= 6.0,
                4 => (x.abs() <= 1.0 && y.abs() <= 5.5) || (y.abs() <= 1.0 && x.abs() <= 5.5),
                5 => ((x - y).abs() <= 1.2 || (x + y).abs() <= 1.2) && r <= 6.0,
                6 => x.abs().max(y.abs()) <= 5.5 && x.abs().max(y.abs()) >= 4.0,
                7 => r <= 4.0,
                8 => (4.0..=6.0).contains(&r),
                _ => y <= 5.0 && y >= -5.0 && x.abs() <= (y + 5.0) * 0.55,
            };
            if on {
                img[i * SIDE + j] = 1.0;
            }
        }
    }
    img
}

/// Tinted glyph samples.
#[derive(Clone, Debug)]
pub struct ColoredDataset {
    /// `(n, 3, 16, 16)` images.
    pub images: Tensor,
    pub classes: Vec<usize>,
    pub colors: Vec<usize>,
    pub correlation: f64,
    pub seed: u64,
}

impl ColoredDataset {
    /// With probability `correlation` the tint index equals the class,
    /// otherwise it is uniform over the palette. Glyphs get a random shift
    /// of up to two pixels, a brightness in `[0.6, 1]` and pixel noise.
    pub fn generate(n: usize, correlation: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&correlation) {
            return Err(Error::config(format!("correlation {correlation} outside [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plane = SIDE * SIDE;
        let mut data = Vec::with_capacity(n * 3 * plane);
        let mut classes = Vec::with_capacity(n);
        let mut colors = Vec::with_capacity(n);
        for _ in 0..n {
            let class = rng.random_range(0..CLASSES);
            let color = if rng.random_bool(correlation) {
                class
            } else {
                rng.random_range(0..CLASSES)
            };
            let g = glyph(class, rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
            let bright = rng.random_range(0.6..=1.0);
            let gray: Vec<f64> = g
                .iter()
                .map(|&v| (v * bright + rng.random_range(-0.05..=0.05)).clamp(0.0, 1.0))
                .collect();
            for &tint in &PALETTE[color] {
                data.extend(gray.iter().map(|&v| v * tint));
            }
            classes.push(class);
            colors.push(color);
        }
        Ok(Self {
            images: Tensor::new(vec![n, 3, SIDE, SIDE], data)?,
            classes,
            colors,
            correlation,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Fraction of samples whose tint index equals the class.
    pub fn agreement(&self) -> f64 {
        let hits = self.classes.iter().zip(&self.colors).filter(|(a, b)| a == b).count();
        hits as f64 / self.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_matches_correlation() {
        for rho in [0.0, 0.3, 0.7, 1.0] {
            let d = ColoredDataset::generate(10_000, rho, 5).unwrap();
            let want = rho + (1.0 - rho) / CLASSES as f64;
            assert!((d.agreement() - want).abs() <= 0.02, "rho {rho}: {}", d.agreement());
        }
    }

    #[test]
    fn glyphs_are_distinct_and_nonempty() {
        let gs: Vec<_> = (0..CLASSES).map(|c| glyph(c, 0.0, 0.0)).collect();
        for (a, ga) in gs.iter().enumerate() {
            assert!(ga.iter().sum::<f64>() >= 10.0, "class {a} too small");
            for gb in &gs[a + 1..] {
                assert!(ga.iter().zip(gb.iter()).any(|(x, y)| x != y));
            }
        }
    }

    #[test]
    fn tint_multiplies_the_gray_channel() {
        let d = ColoredDataset::generate(20, 1.0, 1).unwrap();
        let plane = SIDE * SIDE;
        for i in 0..d.len() {
            let tint = PALETTE[d.colors[i]];
            let img = &d.images.data()[i * 3 * plane..(i + 1) * 3 * plane];
            let gray = (0..3).position(|c| tint[c] == 1.0).unwrap();
            for c in 0..3 {
                for p in 0..plane {
                    let want = img[gray * plane + p] * tint[c];
                    assert!((img[c * plane + p] - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_correlation() {
        assert!(ColoredDataset::generate(10, 1.5, 0).is_err());
    }
}

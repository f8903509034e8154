use std::borrow::Cow;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::SpectralGrid;
use super::operators::l2_norm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunctionKind {
    /// `exp(-|x|²/2σ²)` times a random trigonometric polynomial with
    /// frequencies on the lattice `k/(2πσ)`, `|k_a| ≤ max_mode`.
    BandLimitedGaussian,
    /// Random combination of Hermite functions `Π_a H_{k_a}(x_a/σ) exp(-|x|²/2σ²)`, `k_a ≤ max_mode`.
    GaussianHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestFunctionSpec {
    pub kind: TestFunctionKind,
    pub seed: u64,
    pub envelope_width: f64,
    pub max_mode: usize,
    /// Every `adversarial_every`-th member is replaced by a Gaussian wave
    /// packet at a frequency of modulus in `[0.75, 1.25]` along one space axis.
    /// Zero disables them.
    pub adversarial_every: usize,
}

impl Default for TestFunctionSpec {
    fn default() -> Self {
        Self {
            kind: TestFunctionKind::BandLimitedGaussian,
            seed: 20200318,
            envelope_width: 1.5,
            max_mode: 3,
            adversarial_every: 4,
        }
    }
}

const TRIG_TERMS: usize = 6;
const HERMITE_TERMS: usize = 3;

impl TestFunctionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.envelope_width.is_finite() && self.envelope_width > 0.0) {
            return Err(Error::Config("envelope_width must be positive".into()));
        }
        Ok(())
    }

    /// Smooth ensemble without adversarial members.
    pub fn smooth(self) -> Self {
        Self {
            adversarial_every: 0,
            ..self
        }
    }

    pub fn is_adversarial(&self, member: usize) -> bool {
        self.adversarial_every > 0 && member % self.adversarial_every == self.adversarial_every - 1
    }

    /// Member `member`, normalized to `‖u‖ = 1`. The draw depends only on
    /// `(seed, member)` and the physical parameters, not on the resolution.
    pub fn member(&self, grid: &SpectralGrid, member: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(member as u64);
        let d = grid.axes();
        let sigma = self.envelope_width;
        let tau = std::f64::consts::TAU;
        let x: Vec<f64> = (0..grid.points_per_axis).map(|j| grid.coordinate(j)).collect();
        let envelope: Vec<f64> = x.iter().map(|t| (-t * t / (2.0 * sigma * sigma)).exp()).collect();
        let wave = |k: f64| -> Vec<Complex64> {
            x.iter()
                .zip(&envelope)
                .map(|(t, e)| Complex64::from_polar(*e, tau * k * t))
                .collect()
        };
        // Each term is `Re(c Π_a f_a(x_a))`.
        let terms: Vec<(Complex64, Vec<Vec<Complex64>>)> = if self.is_adversarial(member) {
            let axis = grid.space_axis(rng.gen_range(0..grid.space_dim));
            let freq = rng.gen_range(0.75..1.25) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let phase = rng.gen_range(0.0..tau);
            let tables = (0..d).map(|a| wave(if a == axis { freq } else { 0.0 })).collect();
            vec![(Complex64::from_polar(1.0, phase), tables)]
        } else {
            match self.kind {
                TestFunctionKind::BandLimitedGaussian => {
                    let step = 1.0 / (tau * sigma);
                    let m = self.max_mode as i64;
                    (0..TRIG_TERMS)
                        .map(|_| {
                            let k: Vec<f64> = (0..d).map(|_| rng.gen_range(-m..=m) as f64 * step).collect();
                            let c = Complex64::from_polar(normal(&mut rng), rng.gen_range(0.0..tau));
                            (c, k.iter().map(|&k| wave(k)).collect())
                        })
                        .collect()
                }
                TestFunctionKind::GaussianHermite => (0..HERMITE_TERMS)
                    .map(|_| {
                        let k: Vec<usize> = (0..d).map(|_| rng.gen_range(0..=self.max_mode)).collect();
                        let c = Complex64::new(normal(&mut rng), 0.0);
                        let tables = k
                            .iter()
                            .map(|&k| {
                                x.iter()
                                    .zip(&envelope)
                                    .map(|(t, e)| Complex64::new(hermite(k, t / sigma) * e, 0.0))
                                    .collect()
                            })
                            .collect();
                        (c, tables)
                    })
                    .collect(),
            }
        };
        let mut u = vec![0.0; grid.len()];
        for (c, tables) in &terms {
            let mut acc = vec![*c];
            for t in tables {
                acc = acc.iter().flat_map(|a| t.iter().map(move |f| a * f)).collect();
            }
            for (v, a) in u.iter_mut().zip(&acc) {
                *v += a.re;
            }
        }
        let norm = l2_norm(grid, &u);
        if norm > 0.0 {
            for v in &mut u {
                *v /= norm;
            }
        }
        u
    }

    pub fn ensemble(&self, grid: &SpectralGrid, count: usize) -> Vec<Vec<f64>> {
        (0..count).into_par_iter().map(|i| self.member(grid, i)).collect()
    }
}

/// Test functions handed to the verification kernels: either explicit fields
/// or members generated on demand, optionally scaled by `scale`.
#[derive(Debug, Clone, Copy)]
pub enum EnsembleSource<'a> {
    Fields(&'a [Vec<f64>]),
    Generated {
        spec: &'a TestFunctionSpec,
        count: usize,
        scale: f64,
    },
}

impl<'a> EnsembleSource<'a> {
    pub fn generated(spec: &'a TestFunctionSpec, count: usize) -> Self {
        EnsembleSource::Generated { spec, count, scale: 1.0 }
    }

    pub fn len(&self) -> usize {
        match self {
            EnsembleSource::Fields(f) => f.len(),
            EnsembleSource::Generated { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn member(&self, grid: &SpectralGrid, i: usize) -> Cow<'a, [f64]> {
        match self {
            EnsembleSource::Fields(f) => Cow::Borrowed(&f[i]),
            EnsembleSource::Generated { spec, scale, .. } => {
                let mut u = spec.member(grid, i);
                if *scale != 1.0 {
                    for v in &mut u {
                        *v *= scale;
                    }
                }
                Cow::Owned(u)
            }
        }
    }
}

impl<'a> From<&'a [Vec<f64>]> for EnsembleSource<'a> {
    fn from(f: &'a [Vec<f64>]) -> Self {
        EnsembleSource::Fields(f)
    }
}

impl<'a> From<&'a Vec<Vec<f64>>> for EnsembleSource<'a> {
    fn from(f: &'a Vec<Vec<f64>>) -> Self {
        EnsembleSource::Fields(f)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Physicists' Hermite polynomial `H_k`.
pub fn hermite(k: usize, y: f64) -> f64 {
    let (mut a, mut b) = (1.0, 2.0 * y);
    if k == 0 {
        return a;
    }
    for j in 1..k {
        let c = 2.0 * y * b - 2.0 * j as f64 * a;
        a = b;
        b = c;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::operators::seam_tail;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.3), 1.0);
        assert_eq!(hermite(2, 1.0), 2.0);
        assert_eq!(hermite(3, 2.0), 40.0);
    }

    #[test]
    fn members_are_normalized_and_reproducible() {
        let g = SpectralGrid::new(2, false, 64, 16.0).unwrap();
        for (kind, width) in [
            (TestFunctionKind::BandLimitedGaussian, 1.5),
            (TestFunctionKind::GaussianHermite, 1.0),
        ] {
            let spec = TestFunctionSpec {
                kind,
                envelope_width: width,
                ..TestFunctionSpec::default()
            };
            for i in 0..8 {
                let u = spec.member(&g, i);
                assert!((l2_norm(&g, &u) - 1.0).abs() < 1e-12);
                assert_eq!(u, spec.member(&g, i));
                assert!(seam_tail(&g, &u, &[0, 1]) <= 1e-12, "{kind:?} {i}");
            }
        }
    }
}

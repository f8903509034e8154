//! Smooth plateau cutoffs `ψ` (1 near the origin) and `w` (1 far away).
//!
//! Both are built from the C^∞ step `s(t) = θ(t)/(θ(t) + θ(1-t))` with
//! `θ(t) = exp(-1/t)` for `t > 0` and `θ(t) = 0` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn theta(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// `(θ(t), θ(1-t))` for `t` strictly inside `(0, 1)`.
fn theta_pair(t: f64) -> (f64, f64) {
    (theta(t), theta(1.0 - t))
}

/// `s(t)`, exactly 0 for `t ≤ 0` and exactly 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let (a, b) = theta_pair(t);
        a / (a + b)
    }
}

/// `1 - s(t)` evaluated without cancellation.
pub fn smooth_step_complement(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let (a, b) = theta_pair(t);
        b / (a + b)
    }
}

/// `s'(t)`, zero outside `(0, 1)`.
pub fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let (a, b) = theta_pair(t);
    let u = 1.0 - t;
    let da = a / (t * t);
    let db = b / (u * u);
    let sum = a + b;
    (da * b + a * db) / (sum * sum)
}

/// Supports of the pair: `ψ = 1` on `|x| ≤ a`, `supp ψ ⊂ |x| ≤ b`,
/// `supp w ⊂ |x| ≥ c`, `w = 1` on `|x| ≥ d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub psi_inner: f64,
    pub psi_outer: f64,
    pub w_inner: f64,
    pub w_outer: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            psi_inner: 0.5,
            psi_outer: 1.0,
            w_inner: 0.25,
            w_outer: 0.5,
        }
    }
}

impl CutoffSpec {
    pub fn new(psi_inner: f64, psi_outer: f64, w_inner: f64, w_outer: f64) -> Result<Self> {
        let spec = Self {
            psi_inner,
            psi_outer,
            w_inner,
            w_outer,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The pairing `ψ = 1 - w` with transition band `(a, b)`.
    pub fn complementary(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi;
        if !ok(self.psi_inner, self.psi_outer) {
            return Err(Error::InvalidCutoff(format!(
                "psi band ({}, {}) must satisfy 0 < a < b",
                self.psi_inner, self.psi_outer
            )));
        }
        if !ok(self.w_inner, self.w_outer) {
            return Err(Error::InvalidCutoff(format!(
                "w band ({}, {}) must satisfy 0 < c < d",
                self.w_inner, self.w_outer
            )));
        }
        Ok(())
    }

    pub fn is_complementary(&self) -> bool {
        self.psi_inner == self.w_inner && self.psi_outer == self.w_outer
    }

    fn psi_t(&self, x: f64) -> f64 {
        (x.abs() - self.psi_inner) / (self.psi_outer - self.psi_inner)
    }

    fn w_t(&self, x: f64) -> f64 {
        (x.abs() - self.w_inner) / (self.w_outer - self.w_inner)
    }

    pub fn psi(&self, x: f64) -> f64 {
        smooth_step_complement(self.psi_t(x))
    }

    pub fn psi_prime(&self, x: f64) -> f64 {
        let t = self.psi_t(x);
        -smooth_step_prime(t) / (self.psi_outer - self.psi_inner) * x.signum()
    }

    pub fn w(&self, x: f64) -> f64 {
        smooth_step(self.w_t(x))
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        let t = self.w_t(x);
        smooth_step_prime(t) / (self.w_outer - self.w_inner) * x.signum()
    }

    /// `1 - ψ(x)` evaluated without cancellation.
    pub fn one_minus_psi(&self, x: f64) -> f64 {
        smooth_step(self.psi_t(x))
    }

    /// `1 - w(x)`, i.e. the `ψ` of the pairing built on the `w` band.
    pub fn one_minus_w(&self, x: f64) -> f64 {
        smooth_step_complement(self.w_t(x))
    }

    /// `sup |ψ'| = 2/(b - a)`, attained at the midpoint of the band.
    pub fn psi_prime_bound(&self) -> f64 {
        2.0 / (self.psi_outer - self.psi_inner)
    }

    pub fn w_prime_bound(&self) -> f64 {
        2.0 / (self.w_outer - self.w_inner)
    }
}

pub fn eval_psi(spec: &CutoffSpec, x: f64) -> f64 {
    spec.psi(x)
}

pub fn eval_psi_prime(spec: &CutoffSpec, x: f64) -> f64 {
    spec.psi_prime(x)
}

pub fn eval_w(spec: &CutoffSpec, x: f64) -> f64 {
    spec.w(x)
}

pub fn eval_w_prime(spec: &CutoffSpec, x: f64) -> f64 {
    spec.w_prime(x)
}

/// Measured constants with `1 - ψ ≤ C w` and `|ψ'| ≤ C w` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub c_one_minus_psi: f64,
    pub c_psi_prime: f64,
}

/// Grid maxima of `(1 - ψ)/w` and `|ψ'|/w`, where `ψ` comes from
/// `spec_psi` and `w` from `spec_w`.
pub fn dominance_certificate(spec_psi: &CutoffSpec, spec_w: &CutoffSpec, grid: &[f64]) -> Result<Dominance> {
    spec_psi.validate()?;
    spec_w.validate()?;
    let mut c1: f64 = 0.0;
    let mut c2: f64 = 0.0;
    for &x in grid {
        let w = spec_w.w(x);
        let one_minus = spec_psi.one_minus_psi(x);
        let dpsi = spec_psi.psi_prime(x).abs();
        let ratio = |lhs: f64| {
            if lhs <= 0.0 {
                0.0
            } else if w > 0.0 {
                lhs / w
            } else {
                f64::INFINITY
            }
        };
        c1 = c1.max(ratio(one_minus));
        c2 = c2.max(ratio(dpsi));
    }
    if !c1.is_finite() || !c2.is_finite() {
        return Err(Error::IncompatibleSupports(format!(
            "w band ({}, {}) misses the transition of psi ({}, {})",
            spec_w.w_inner, spec_w.w_outer, spec_psi.psi_inner, spec_psi.psi_outer
        )));
    }
    Ok(Dominance {
        c_one_minus_psi: c1,
        c_psi_prime: c2,
    })
}

/// `count + 1` equispaced points of `[0, 2·max(b, d)]`.
pub fn dominance_grid(spec_psi: &CutoffSpec, spec_w: &CutoffSpec, count: usize) -> Vec<f64> {
    let top = 2.0 * spec_psi.psi_outer.max(spec_w.w_outer);
    (0..=count).map(|k| top * k as f64 / count as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_and_midpoints() {
        let c = CutoffSpec::default();
        assert_eq!(c.psi(0.3), 1.0);
        assert_eq!(c.psi(2.0), 0.0);
        assert_eq!(c.psi(-0.5), 1.0);
        assert!((c.psi(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(c.w(1.0), 1.0);
        assert_eq!(c.w(0.1), 0.0);
        assert!((c.w(0.375) - 0.5).abs() < 1e-15);
        assert_eq!(c.psi_prime(0.0), 0.0);
        assert_eq!(c.w_prime(0.6), 0.0);
    }

    #[test]
    fn step_derivative_at_midpoint() {
        assert!((smooth_step_prime(0.5) - 2.0).abs() < 1e-14);
        let c = CutoffSpec::default();
        assert!((c.psi_prime(0.75) + c.psi_prime_bound()).abs() < 1e-13);
    }

    #[test]
    fn psi_prime_matches_central_difference() {
        let c = CutoffSpec::default();
        let h = 1e-6;
        for x in [0.55, 0.6, 0.75, 0.9, 0.97] {
            let fd = (c.psi(x + h) - c.psi(x - h)) / (2.0 * h);
            let an = c.psi_prime(x);
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "x={x}: {fd} vs {an}");
            assert!(an <= 0.0);
        }
    }

    #[test]
    fn complementary_pair_sums_to_one() {
        let c = CutoffSpec::complementary(0.25, 0.5).unwrap();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            assert!((c.psi(x) + c.w(x) - 1.0).abs() <= 1e-15);
            assert!((c.one_minus_w(x) - c.psi(x)).abs() == 0.0);
        }
    }

    #[test]
    fn dominance_examples() {
        let psi = CutoffSpec::default();
        let grid = dominance_grid(&psi, &psi, 20_000);
        let d = dominance_certificate(&psi, &psi, &grid).unwrap();
        assert!(d.c_one_minus_psi.is_finite() && d.c_psi_prime.is_finite());
        assert!((d.c_one_minus_psi - 1.0).abs() < 1e-15);

        let pair = CutoffSpec::complementary(0.5, 1.0).unwrap();
        let d = dominance_certificate(&pair, &pair, &grid).unwrap();
        assert_eq!(d.c_one_minus_psi, 1.0);

        let far = CutoffSpec::new(0.5, 1.0, 1.5, 2.0).unwrap();
        assert!(matches!(
            dominance_certificate(&psi, &far, &grid),
            Err(Error::IncompatibleSupports(_))
        ));
    }
}

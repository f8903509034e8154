//! The two-step chain `L = x_0·∇_{x_1} + x_1·∇_{x_2}` with blocks
//! `ξ = (ξ_0, ξ_1, ξ_2)` and transport field `ξ_2·∇_{ξ_1} + ξ_1·∇_{ξ_0}`:
//!
//! * `g_1 = (ξ_1·ξ_2)⟨ξ_2⟩^{2λ_2-2} ψ(X)`, `X = |ξ_1|²/⟨ξ_2⟩^{2λ_2/λ_1}`,
//! * `g_2 = (ξ_0·ξ_1)|ξ_1|^{2λ_1-2} w(X) ψ(Y)`, `Y = Γ²|ξ_0|²/|ξ_1|^{2λ_1/λ_0}`.
//!
//! The same `g_1` with `ξ_1 = ξ_v`, `ξ_2 = ξ_x` serves the kinetic operator `v·∇_x`.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::certificate::{certify, grid_max, CertificateSpec, InequalityCertificate, Sample};
use super::grid::PointwiseRegion;
use super::{dot, norm2, Symbol};
use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::ParticularExponents;

/// Coordinate blocks of `ξ_0`, `ξ_1`, `ξ_2` inside the full frequency vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub dim: usize,
    pub xi0: Option<Range<usize>>,
    pub xi1: Range<usize>,
    pub xi2: Range<usize>,
}

impl BlockLayout {
    /// `(ξ_0, ξ_1, ξ_2)` stacked, each of size `n_block`.
    pub fn chain(n_block: usize) -> Self {
        Self {
            dim: 3 * n_block,
            xi0: Some(0..n_block),
            xi1: n_block..2 * n_block,
            xi2: 2 * n_block..3 * n_block,
        }
    }

    /// `(ξ_x, ξ_v)` with `ξ_1 = ξ_v`, `ξ_2 = ξ_x`.
    pub fn kinetic(n_block: usize) -> Self {
        Self {
            dim: 2 * n_block,
            xi0: None,
            xi1: n_block..2 * n_block,
            xi2: 0..n_block,
        }
    }

    fn blocks<'a>(&self, xi: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let x0 = match &self.xi0 {
            Some(r) => &xi[r.clone()],
            None => &xi[0..0],
        };
        (x0, &xi[self.xi1.clone()], &xi[self.xi2.clone()])
    }
}

fn jap2(a: &[f64]) -> f64 {
    1.0 + norm2(a)
}

#[derive(Debug, Clone)]
pub struct G1 {
    pub layout: BlockLayout,
    pub lambda1: f64,
    pub lambda2: f64,
    pub cut: CutoffSpec,
}

impl G1 {
    /// `X` and `ξ_2·∇_{ξ_1}X`.
    pub fn argument(&self, xi1: &[f64], xi2: &[f64]) -> (f64, f64) {
        let scale = jap2(xi2).powf(-self.lambda2 / self.lambda1);
        (norm2(xi1) * scale, 2.0 * dot(xi1, xi2) * scale)
    }

    /// `ξ_2·∇_{ξ_1} g_1`; `g_1` does not depend on `ξ_0`.
    pub fn d1(&self, xi: &[f64]) -> f64 {
        let (_, x1, x2) = self.layout.blocks(xi);
        let (x, dx) = self.argument(x1, x2);
        let weight = jap2(x2).powf(self.lambda2 - 1.0);
        let psi = self.cut.psi(x);
        let dpsi = self.cut.psi_prime(x);
        norm2(x2) * weight * psi + dot(x1, x2) * weight * dpsi * dx
    }
}

impl Symbol for G1 {
    fn dim(&self) -> usize {
        self.layout.dim
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        let (_, x1, x2) = self.layout.blocks(xi);
        let (x, _) = self.argument(x1, x2);
        let psi = self.cut.psi(x);
        if psi == 0.0 {
            return 0.0;
        }
        dot(x1, x2) * jap2(x2).powf(self.lambda2 - 1.0) * psi
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        self.d1(xi)
    }
    fn description(&self) -> String {
        format!(
            "(ξ1·ξ2) <ξ2>^(2·{:.6}-2) ψ(|ξ1|²/<ξ2>^(2·{:.6}/{:.6}))",
            self.lambda2, self.lambda2, self.lambda1
        )
    }
}

#[derive(Debug, Clone)]
pub struct G2 {
    pub layout: BlockLayout,
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma: f64,
    pub cut: CutoffSpec,
}

/// Pieces of `g_2` at one point, `None` outside `supp w(X)`.
struct G2Parts {
    x1_norm2: f64,
    n01: f64,
    n02: f64,
    n12: f64,
    x0_norm2: f64,
    w: f64,
    dw1: f64,
    y: f64,
    psi: f64,
    dpsi: f64,
}

impl G2 {
    fn parts(&self, xi: &[f64]) -> Option<G2Parts> {
        let (x0, x1, x2) = self.layout.blocks(xi);
        let scale = jap2(x2).powf(-self.lambda2 / self.lambda1);
        let x1_norm2 = norm2(x1);
        let x = x1_norm2 * scale;
        if x <= self.cut.w_inner {
            return None;
        }
        let n12 = dot(x1, x2);
        let x0_norm2 = norm2(x0);
        let y = self.gamma * self.gamma * x0_norm2 * x1_norm2.powf(-self.lambda1 / self.lambda0);
        Some(G2Parts {
            x1_norm2,
            n01: dot(x0, x1),
            n02: dot(x0, x2),
            n12,
            x0_norm2,
            w: self.cut.w(x),
            dw1: self.cut.w_prime(x) * 2.0 * n12 * scale,
            y,
            psi: self.cut.psi(y),
            dpsi: self.cut.psi_prime(y),
        })
    }

    /// `ξ_1·∇_{ξ_0} g_2`.
    pub fn d0(&self, xi: &[f64]) -> f64 {
        let Some(p) = self.parts(xi) else { return 0.0 };
        let pw = p.x1_norm2.powf(self.lambda1 - 1.0);
        let dy = self.gamma * self.gamma * 2.0 * p.n01 * p.x1_norm2.powf(-self.lambda1 / self.lambda0);
        p.x1_norm2 * pw * p.w * p.psi + p.n01 * pw * p.w * p.dpsi * dy
    }

    /// `ξ_2·∇_{ξ_1} g_2`.
    pub fn d1(&self, xi: &[f64]) -> f64 {
        let Some(p) = self.parts(xi) else { return 0.0 };
        let l1 = self.lambda1;
        let pw = p.x1_norm2.powf(l1 - 1.0);
        let e = l1 / self.lambda0;
        let dy = -self.gamma * self.gamma * p.x0_norm2 * 2.0 * e * p.x1_norm2.powf(-e - 1.0) * p.n12;
        p.n02 * pw * p.w * p.psi
            + p.n01 * (2.0 * l1 - 2.0) * p.x1_norm2.powf(l1 - 2.0) * p.n12 * p.w * p.psi
            + p.n01 * pw * p.dw1 * p.psi
            + p.n01 * pw * p.w * p.dpsi * dy
    }

    /// `Y = Γ²|ξ_0|²/|ξ_1|^{2λ_1/λ_0}` and `w(X)`; `None` outside `supp w(X)`.
    pub fn localizers(&self, xi: &[f64]) -> Option<(f64, f64)> {
        self.parts(xi).map(|p| (p.y, p.w))
    }
}

impl Symbol for G2 {
    fn dim(&self) -> usize {
        self.layout.dim
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        match self.parts(xi) {
            Some(p) if p.psi != 0.0 => p.n01 * p.x1_norm2.powf(self.lambda1 - 1.0) * p.w * p.psi,
            _ => 0.0,
        }
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        self.d1(xi) + self.d0(xi)
    }
    fn description(&self) -> String {
        format!(
            "(ξ0·ξ1) |ξ1|^(2·{:.6}-2) w(|ξ1|²/<ξ2>^(2·{:.6}/{:.6})) ψ({}²|ξ0|²/|ξ1|^(2·{:.6}/{:.6}))",
            self.lambda1, self.lambda2, self.lambda1, self.gamma, self.lambda1, self.lambda0
        )
    }
}

#[derive(Debug, Clone)]
pub struct ParticularSymbols {
    pub g1: Arc<G1>,
    pub g2: Arc<G2>,
    pub exponents: ParticularExponents,
    pub gamma: f64,
}

pub fn build_particular_g1_g2(
    exponents: &ParticularExponents,
    cut: &CutoffSpec,
    gamma: f64,
    n_block: usize,
) -> Result<ParticularSymbols> {
    cut.validate()?;
    if !(gamma >= 1.0) {
        return Err(Error::Precondition(format!("Gamma must be >= 1, got {gamma}")));
    }
    let layout = BlockLayout::chain(n_block);
    let e = exponents;
    Ok(ParticularSymbols {
        g1: Arc::new(G1 {
            layout: layout.clone(),
            lambda1: e.lambda1,
            lambda2: e.lambda2,
            cut: *cut,
        }),
        g2: Arc::new(G2 {
            layout,
            lambda0: e.lambda0,
            lambda1: e.lambda1,
            lambda2: e.lambda2,
            gamma,
            cut: *cut,
        }),
        exponents: *e,
        gamma,
    })
}

/// Options of the Γ search for the two-step chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    pub start: f64,
    pub cap: f64,
    /// Largest accepted absorption fraction `max (-ξ_2·∇_{ξ_1}g_2)_+/|ξ_1|^{2λ_1}`.
    pub margin: f64,
}

impl Default for GammaSearch {
    fn default() -> Self {
        Self {
            start: 2.0,
            cap: super::ladder::GAMMA_CAP,
            margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaAttempt {
    pub gamma: f64,
    pub accepted: bool,
    pub absorption_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticularReport {
    pub gamma: f64,
    pub history: Vec<GammaAttempt>,
    pub certificates: Vec<InequalityCertificate>,
}

/// Second-step target with separate weights on `ξ_2·∇g_1` and `B^Tξ·∇g_2`.
fn second_step_target(
    s: &ParticularSymbols,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<InequalityCertificate> {
    let e = s.exponents;
    let lay = &s.g1.layout;
    certify(
        CertificateSpec {
            name: "second_step_target",
            description: "<ξ1>^(2λ1) <= c2 <ξ0>^(2λ0) + c3 ξ2·∇ξ1 g1 + c4 (ξ2·∇ξ1 + ξ1·∇ξ0) g2",
            term_names: &["c2", "c3", "c4"],
            cap,
        },
        region,
        points,
        |xi| {
            let (x0, x1, _) = lay.blocks(xi);
            Sample {
                lhs: jap2(x1).powf(e.lambda1),
                terms: vec![jap2(x0).powf(e.lambda0), s.g1.d1(xi), s.g2.transport(xi)],
            }
        },
    )
}

fn absorption_fraction(s: &ParticularSymbols, points: &[Vec<f64>]) -> f64 {
    let lay = &s.g1.layout;
    let l1 = s.exponents.lambda1;
    grid_max(points, |xi| {
        let (_, x1, _) = lay.blocks(xi);
        let n = norm2(x1);
        (n > 0.0).then(|| (-s.g2.d1(xi)).max(0.0) / n.powf(l1))
    })
    .0
}

/// Doubles `Γ` until the second-step target passes and the cross term is
/// absorbed, then measures every inequality of the two-step construction.
pub fn verify_particular_chain(
    exponents: &ParticularExponents,
    cut: &CutoffSpec,
    n_block: usize,
    region: &PointwiseRegion,
    search: &GammaSearch,
    cap: f64,
) -> Result<(ParticularSymbols, ParticularReport)> {
    region.validate()?;
    let dim = 3 * n_block;
    let points = region.points(dim, None);
    let mut history = Vec::new();
    let mut gamma = search.start;
    let symbols = loop {
        if gamma > search.cap {
            return Err(Error::GammaExhausted {
                stage: "two-step chain".into(),
                cap: search.cap,
            });
        }
        let s = build_particular_g1_g2(exponents, cut, gamma, n_block)?;
        let target = second_step_target(&s, region, &points, cap)?;
        let fraction = absorption_fraction(&s, &points);
        let ok = target.passed && fraction <= search.margin;
        history.push(GammaAttempt {
            gamma,
            accepted: ok,
            absorption_fraction: fraction,
        });
        if ok {
            break s;
        }
        gamma *= 2.0;
    };
    let certificates = particular_certificates(&symbols, region, &points, cap)?;
    Ok((
        symbols.clone(),
        ParticularReport {
            gamma,
            history,
            certificates,
        },
    ))
}

/// Every pointwise inequality of the two-step construction at fixed `Γ`.
pub fn particular_certificates(
    s: &ParticularSymbols,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<Vec<InequalityCertificate>> {
    let e = s.exponents;
    let lay = s.g1.layout.clone();
    let gamma = s.gamma;
    let g1 = s.g1.clone();
    let g2 = s.g2.clone();
    let wx = |x1: &[f64], x2: &[f64]| s.g1.cut.w(s.g1.argument(x1, x2).0);
    let mut out = Vec::new();

    out.push(certify(
        CertificateSpec {
            name: "g1_bound",
            description: "|g1| <= c1 <ξ1>^q1 <ξ2>^(s2+λ2)",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let (_, x1, x2) = lay.blocks(xi);
            Sample {
                lhs: g1.eval(xi).abs(),
                terms: vec![jap2(x1).powf(0.5 * e.q1) * jap2(x2).powf(0.5 * (e.s2 + e.lambda2))],
            }
        },
    )?);
    out.push(certify(
        CertificateSpec {
            name: "g2_bound",
            description: "|g2| <= c1 <ξ0>^q0 <ξ1>^(s1+λ1)",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let (x0, x1, _) = lay.blocks(xi);
            Sample {
                lhs: g2.eval(xi).abs(),
                terms: vec![jap2(x0).powf(0.5 * e.q0) * jap2(x1).powf(0.5 * (e.s1 + e.lambda1))],
            }
        },
    )?);
    out.push(certify(
        CertificateSpec {
            name: "first_step_target",
            description: "<ξ2>^(2λ2) <= c2 <ξ1>^(2λ1) + c3 ξ2·∇ξ1 g1",
            term_names: &["c2", "c3"],
            cap,
        },
        region,
        points,
        |xi| {
            let (_, x1, x2) = lay.blocks(xi);
            Sample {
                lhs: jap2(x2).powf(e.lambda2),
                terms: vec![jap2(x1).powf(e.lambda1), g1.d1(xi)],
            }
        },
    )?);
    out.push(second_step_target(s, region, points, cap)?);
    out.push(certify(
        CertificateSpec {
            name: "first_step_split",
            description: "<ξ2>^(2λ2) <= c2 |ξ1|^(2λ1) w(X) + c3 ξ2·∇ξ1 g1 + c4",
            term_names: &["c2", "c3", "c4"],
            cap,
        },
        region,
        points,
        |xi| {
            let (_, x1, x2) = lay.blocks(xi);
            Sample {
                lhs: jap2(x2).powf(e.lambda2),
                terms: vec![norm2(x1).powf(e.lambda1) * wx(x1, x2), g1.d1(xi), 1.0],
            }
        },
    )?);
    out.push(certify(
        CertificateSpec {
            name: "w_split",
            description: "|ξ1|^(2λ1) <= c2 <ξ2>^(2λ2) + c3 |ξ1|^(2λ1) w(X)",
            term_names: &["c2", "c3"],
            cap,
        },
        region,
        points,
        |xi| {
            let (_, x1, x2) = lay.blocks(xi);
            let a = norm2(x1).powf(e.lambda1);
            Sample {
                lhs: a,
                terms: vec![jap2(x2).powf(e.lambda2), a * wx(x1, x2)],
            }
        },
    )?);
    let base0 = |x0: &[f64]| (gamma * gamma * norm2(x0)).powf(e.lambda0);
    out.push(certify(
        CertificateSpec {
            name: "double_w_bound",
            description: "|ξ1|^(2λ1) w(X) w(Y) <= c1 Γ^(2λ0) |ξ0|^(2λ0)",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let (x0, x1, _) = lay.blocks(xi);
            let lhs = match g2.localizers(xi) {
                Some((y, w)) => norm2(x1).powf(e.lambda1) * w * s.g2.cut.w(y),
                None => 0.0,
            };
            Sample {
                lhs,
                terms: vec![base0(x0)],
            }
        },
    )?);
    out.push(certify(
        CertificateSpec {
            name: "second_step_transport",
            description: "|ξ1|^(2λ1) w(X) ψ(Y) <= c2 Γ^(2λ0) |ξ0|^(2λ0) + c3 ξ1·∇ξ0 g2",
            term_names: &["c2", "c3"],
            cap,
        },
        region,
        points,
        |xi| {
            let (x0, x1, _) = lay.blocks(xi);
            let lhs = match g2.localizers(xi) {
                Some((y, w)) => norm2(x1).powf(e.lambda1) * w * s.g2.cut.psi(y),
                None => 0.0,
            };
            Sample {
                lhs,
                terms: vec![base0(x0), g2.d0(xi)],
            }
        },
    )?);
    out.push(certify(
        CertificateSpec {
            name: "cross_term",
            description: "-ξ2·∇ξ1 g2 <= (c1/Γ) |ξ1|^(2λ1)",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let (_, x1, _) = lay.blocks(xi);
            Sample {
                lhs: -g2.d1(xi),
                terms: vec![norm2(x1).powf(e.lambda1) / gamma],
            }
        },
    )?);
    Ok(out)
}

/// Kinetic multiplier `g_1(ξ_v, ξ_x)` for the gain exponents `(p, q, s)`.
pub fn kinetic_g1(p: f64, q: f64, s: f64, cut: &CutoffSpec, n_block: usize) -> Result<Arc<G1>> {
    let lambda2 = crate::exponents::kinetic_gain_exponent(p, q, s)?;
    cut.validate()?;
    Ok(Arc::new(G1 {
        layout: BlockLayout::kinetic(n_block),
        lambda1: p,
        lambda2,
        cut: *cut,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::finite_difference_transport;

    fn field(xi: &[f64]) -> Vec<f64> {
        vec![xi[1], xi[2], 0.0]
    }

    #[test]
    fn vanish_without_middle_block() {
        let e = ParticularExponents::new(1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let s = build_particular_g1_g2(&e, &CutoffSpec::default(), 8.0, 1).unwrap();
        assert_eq!(s.g1.eval(&[3.0, 0.0, 5.0]), 0.0);
        assert_eq!(s.g2.eval(&[3.0, 0.0, 5.0]), 0.0);
        assert_eq!(s.g2.transport(&[3.0, 0.0, 5.0]), 0.0);
    }

    #[test]
    fn split_derivatives_match_finite_differences() {
        let e = ParticularExponents::new(1.0, 0.1, 0.2, 0.05, 0.1).unwrap();
        let s = build_particular_g1_g2(&e, &CutoffSpec::default(), 4.0, 1).unwrap();
        for xi in [[0.3, 3.0, 2.0], [0.05, 12.0, 30.0], [0.4, 2.5, 1.0], [-0.2, 25.0, 60.0]] {
            for sym in [s.g1.clone() as Arc<dyn Symbol>, s.g2.clone()] {
                let fd = finite_difference_transport(sym.as_ref(), &field(&xi), &xi, 1e-5);
                let an = sym.transport(&xi);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-4), "{xi:?}: {fd} vs {an}");
            }
        }
    }
}

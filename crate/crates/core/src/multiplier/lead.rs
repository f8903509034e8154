//! The leading symbol
//! `g_m(ξ) = (v_{m-1}·v_m) ⟨ξ⟩^{λ_m-2} ψ(|v_{m-1}|²/⟨ξ⟩^{2λ_m/λ_{m-1}})`
//! with `v_j = Q(B^T)^jξ`, and its transport derivative split into a main
//! term and three remainders.

use std::sync::Arc;

use serde::Serialize;

use super::certificate::{certify, CertificateSpec, InequalityCertificate, Sample};
use super::grid::PointwiseRegion;
use super::{dot, japanese, norm2, Frame, Symbol};
use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::{ExponentChain, ExponentInput};
use crate::kalman::OperatorSpec;

#[derive(Debug, Clone)]
pub struct LeadSymbol {
    frame: Arc<Frame>,
    index: usize,
    lambda: f64,
    lambda_prev: f64,
    cut: CutoffSpec,
}

/// `B^Tξ·∇g_m = main + a1 + a2 + a3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadTerms {
    /// `|v_m|² ⟨ξ⟩^{λ_m-2} ψ(X)`.
    pub main: f64,
    /// `(v_{m-1}·v_{m+1}) ⟨ξ⟩^{λ_m-2} ψ(X)`.
    pub a1: f64,
    /// `(v_{m-1}·v_m)(λ_m-2)⟨ξ⟩^{λ_m-4}(B^Tξ·ξ) ψ(X)`.
    pub a2: f64,
    /// `(v_{m-1}·v_m)⟨ξ⟩^{λ_m-2} ψ'(X) B^Tξ·∇X`.
    pub a3: f64,
}

impl LeadTerms {
    pub fn total(&self) -> f64 {
        self.main + self.a1 + self.a2 + self.a3
    }
}

impl LeadSymbol {
    pub fn new(frame: Arc<Frame>, index: usize, lambda: f64, lambda_prev: f64, cut: CutoffSpec) -> Result<Self> {
        if index == 0 || frame.max_index() < index + 1 {
            return Err(Error::Precondition(format!(
                "lead symbol at index {index} needs directions up to {}",
                index + 1
            )));
        }
        if !(lambda > 0.0 && lambda_prev > 0.0) {
            return Err(Error::InvalidExponents("lead symbol exponents must be positive".into()));
        }
        cut.validate()?;
        Ok(Self {
            frame,
            index,
            lambda,
            lambda_prev,
            cut,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn cutoff(&self) -> &CutoffSpec {
        &self.cut
    }

    /// `(λ_m, λ_{m-1})`.
    pub fn exponents(&self) -> (f64, f64) {
        (self.lambda, self.lambda_prev)
    }

    fn exponent(&self) -> f64 {
        2.0 * self.lambda / self.lambda_prev
    }

    /// `X = |v_{m-1}|²⟨ξ⟩^{-e}` and `B^Tξ·∇X`, with `e = 2λ_m/λ_{m-1}`.
    pub fn argument(&self, xi: &[f64]) -> (f64, f64) {
        let m = self.index;
        let a = self.frame.direction(m - 1, xi);
        let b = self.frame.direction(m, xi);
        let field = self.frame.field(xi);
        argument_from(&a, &b, dot(&field, xi), japanese(xi), self.exponent())
    }

    pub fn terms(&self, xi: &[f64]) -> LeadTerms {
        let m = self.index;
        let a = self.frame.direction(m - 1, xi);
        let b = self.frame.direction(m, xi);
        let c = self.frame.direction(m + 1, xi);
        let field_dot = dot(&self.frame.field(xi), xi);
        let jx = japanese(xi);
        let (x, dx) = argument_from(&a, &b, field_dot, jx, self.exponent());
        let psi = self.cut.psi(x);
        let dpsi = self.cut.psi_prime(x);
        let weight = jx.powf(self.lambda - 2.0);
        let ab = dot(&a, &b);
        LeadTerms {
            main: norm2(&b) * weight * psi,
            a1: dot(&a, &c) * weight * psi,
            a2: ab * (self.lambda - 2.0) * jx.powf(self.lambda - 4.0) * field_dot * psi,
            a3: ab * weight * dpsi * dx,
        }
    }
}

pub(crate) fn argument_from(a: &[f64], b: &[f64], field_dot: f64, jx: f64, e: f64) -> (f64, f64) {
    let na = norm2(a);
    let scale = jx.powf(-e);
    let x = na * scale;
    let dx = 2.0 * dot(a, b) * scale - e * na * scale / (jx * jx) * field_dot;
    (x, dx)
}

impl Symbol for LeadSymbol {
    fn dim(&self) -> usize {
        self.frame.dim()
    }

    fn eval(&self, xi: &[f64]) -> f64 {
        let m = self.index;
        let a = self.frame.direction(m - 1, xi);
        let jx = japanese(xi);
        let x = norm2(&a) * jx.powf(-self.exponent());
        let psi = self.cut.psi(x);
        if psi == 0.0 {
            return 0.0;
        }
        let b = self.frame.direction(m, xi);
        dot(&a, &b) * jx.powf(self.lambda - 2.0) * psi
    }

    fn transport(&self, xi: &[f64]) -> f64 {
        self.terms(xi).total()
    }

    fn description(&self) -> String {
        let m = self.index;
        format!(
            "(v{}·v{}) <ξ>^({:.6}-2) ψ(|v{}|²/<ξ>^(2·{:.6}/{:.6})), v_j = Q(B^T)^j ξ",
            m - 1,
            m,
            self.lambda,
            m - 1,
            self.lambda,
            self.lambda_prev
        )
    }
}

/// The leading symbol at the Kalman index `r = chain.lambdas.len() - 1`.
pub fn build_gr(spec: &OperatorSpec, chain: &ExponentChain, cut: &CutoffSpec) -> Result<Arc<LeadSymbol>> {
    let r = chain.lambdas.len() - 1;
    if r == 0 {
        return Err(Error::Precondition("the leading symbol needs r >= 1".into()));
    }
    let frame = Arc::new(Frame::new(spec, r + 1));
    Ok(Arc::new(LeadSymbol::new(
        frame,
        r,
        chain.lambdas[r],
        chain.lambdas[r - 1],
        *cut,
    )?))
}

/// Smallest `c` with `|g_r| ≤ c⟨v_{r-1}⟩^{q_{r-1}}⟨ξ⟩^{s_{r-1}}` on the grid.
pub fn verify_gr_bound(
    sym: &LeadSymbol,
    input: &ExponentInput,
    region: &PointwiseRegion,
    cap: f64,
) -> Result<InequalityCertificate> {
    region.validate()?;
    let m = sym.index();
    let (q, s) = (input.q[m - 1], input.s[m - 1]);
    let frame = sym.frame().clone();
    let points = region.points(frame.dim(), Some(&frame));
    certify(
        CertificateSpec {
            name: "lead_symbol_bound",
            description: "|g_r| <= c1 <v_{r-1}>^q_{r-1} <ξ>^s_{r-1}",
            term_names: &["c1"],
            cap,
        },
        region,
        &points,
        |xi| {
            let v = frame.direction(m - 1, xi);
            Sample {
                lhs: sym.eval(xi).abs(),
                terms: vec![japanese(&v).powf(q) * japanese(xi).powf(s)],
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::exponent_chain;
    use crate::multiplier::finite_difference_transport;
    use nalgebra::dmatrix;

    fn kinetic_lead() -> Arc<LeadSymbol> {
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0, 0.0; 0.0, 1.0], false).unwrap();
        let chain = exponent_chain(&ExponentInput::zero(1.0, 1).unwrap()).unwrap();
        build_gr(&spec, &chain, &CutoffSpec::default()).unwrap()
    }

    #[test]
    fn vanishes_without_velocity_frequency() {
        let g = kinetic_lead();
        assert_eq!(g.eval(&[37.0, 0.0]), 0.0);
        assert_eq!(g.eval(&[1.0, 50.0]), 0.0);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let g = kinetic_lead();
        for xi in [[4.0, 1.2], [-20.0, 3.1], [150.0, -9.0], [7.0, 2.3]] {
            let f = g.frame().field(&xi);
            let fd = finite_difference_transport(g.as_ref(), &f, &xi, 1e-5);
            let an = g.transport(&xi);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-3), "{xi:?}: {fd} vs {an}");
        }
    }

    #[test]
    fn homogeneity_on_plateau() {
        let g = kinetic_lead();
        for t in [1.0, 1.5, 2.0] {
            let xi = [2000.0 * t, 3.0 * t];
            let ratio = g.eval(&xi) / g.eval(&[2000.0, 3.0]);
            assert!((ratio / t.powf(0.5) - 1.0).abs() < 0.05, "t={t}: {ratio}");
        }
    }
}

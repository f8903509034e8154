//! Multiplier symbols `g(ξ)` with analytic transport derivatives `B^Tξ·∇_ξ g(ξ)`,
//! and the grid certificates measuring the constants of pointwise inequalities.

pub mod assemble;
pub mod certificate;
pub mod grid;
pub mod ladder;
pub mod lead;
pub mod particular;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::kalman::{direction_powers, OperatorSpec};

pub use assemble::{assemble_full_multiplier, lemma_derivative_bounds, AssembledMultiplier, BuildOptions};
pub use certificate::{InequalityCertificate, DEFAULT_CAP};
pub use grid::{PointwiseRegion, RegionConstraint};
pub use ladder::{build_correctors, build_ladder, Correctors, GammaSchedule, Ladder};
pub use lead::{build_gr, verify_gr_bound, LeadSymbol};
pub use particular::{build_particular_g1_g2, verify_particular_chain, ParticularSymbols};

/// A real symbol on `R^n` with its derivative along the field `ξ ↦ B^Tξ`.
pub trait Symbol: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, xi: &[f64]) -> f64;
    /// `B^Tξ·∇_ξ g(ξ)`.
    fn transport(&self, xi: &[f64]) -> f64;
    /// Formula implemented by the symbol.
    fn description(&self) -> String;
}

pub type MultiplierSymbol = Arc<dyn Symbol>;

impl fmt::Debug for dyn Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.description())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `⟨ξ⟩ = (1 + |ξ|²)^{1/2}`.
pub(crate) fn japanese(a: &[f64]) -> f64 {
    (1.0 + norm2(a)).sqrt()
}

/// Row-major copies of `B^T` and `M_j = Q(B^T)^j` for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dim: usize,
    bt: Vec<f64>,
    mats: Vec<Vec<f64>>,
}

fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    (0..r).flat_map(|i| (0..c).map(move |j| m[(i, j)])).collect()
}

impl Frame {
    /// Frame holding `M_0, ..., M_jmax`.
    pub fn new(spec: &OperatorSpec, jmax: usize) -> Self {
        Self {
            dim: spec.dim(),
            bt: flatten(&spec.b.transpose()),
            mats: direction_powers(spec, jmax).iter().map(flatten).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_index(&self) -> usize {
        self.mats.len() - 1
    }

    fn apply(&self, m: &[f64], xi: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| dot(&m[i * n..(i + 1) * n], xi)).collect()
    }

    /// `B^Tξ`.
    pub fn field(&self, xi: &[f64]) -> Vec<f64> {
        self.apply(&self.bt, xi)
    }

    /// `Q(B^T)^jξ`.
    pub fn direction(&self, j: usize, xi: &[f64]) -> Vec<f64> {
        self.apply(&self.mats[j], xi)
    }

    /// `[Q(B^T)^jξ for j in 0..=upto]`.
    pub fn directions(&self, upto: usize, xi: &[f64]) -> Vec<Vec<f64>> {
        (0..=upto).map(|j| self.direction(j, xi)).collect()
    }

    /// `λ_min(M_j^T M_j)`.
    pub fn direction_gram_min(&self, j: usize) -> f64 {
        let n = self.dim;
        let m = DMatrix::from_row_slice(n, n, &self.mats[j]);
        nalgebra::SymmetricEigen::new(m.transpose() * &m).eigenvalues.min().max(0.0)
    }
}

/// Fourth-order central difference of `g` along the field `F(ξ)` with
/// spatial step `h = step·(1 + |ξ|)`.
pub fn finite_difference_transport<S: Symbol + ?Sized>(sym: &S, field: &[f64], xi: &[f64], step: f64) -> f64 {
    let nf = norm2(field).sqrt();
    if nf == 0.0 {
        return 0.0;
    }
    let tau = step * (1.0 + norm2(xi).sqrt()) / nf;
    let at = |k: f64| {
        let p: Vec<f64> = xi.iter().zip(field).map(|(x, f)| x + k * tau * f).collect();
        sym.eval(&p)
    };
    (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * tau)
}

/// [`finite_difference_transport`] over the steps `1e-4, ..., 1e-8`, returning
/// the value at the step whose estimate differs least from the next smaller one.
/// Symbols varying on a scale much finer than `|ξ|` need the smaller steps.
pub fn finite_difference_transport_adaptive<S: Symbol + ?Sized>(sym: &S, field: &[f64], xi: &[f64]) -> f64 {
    let d: Vec<f64> = [1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&h| finite_difference_transport(sym, field, xi, h))
        .collect();
    let best = (0..d.len() - 1)
        .min_by(|&a, &b| (d[a] - d[a + 1]).abs().total_cmp(&(d[b] - d[b + 1]).abs()))
        .expect("several steps");
    d[best + 1]
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSymbol {
    pub dim: usize,
}

impl Symbol for ZeroSymbol {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn transport(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn description(&self) -> String {
        "0".into()
    }
}

/// `Σ_i c_i g_i`.
pub struct WeightedSum {
    pub parts: Vec<(f64, MultiplierSymbol)>,
    pub label: String,
}

impl WeightedSum {
    pub fn new(parts: Vec<(f64, MultiplierSymbol)>, label: impl Into<String>) -> Self {
        Self {
            parts,
            label: label.into(),
        }
    }
}

impl Symbol for WeightedSum {
    fn dim(&self) -> usize {
        self.parts.first().map_or(0, |p| p.1.dim())
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.0 != 0.0)
            .map(|(c, g)| c * g.eval(xi))
            .sum()
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        self.parts
            .iter()
            .filter(|p| p.0 != 0.0)
            .map(|(c, g)| c * g.transport(xi))
            .sum()
    }
    fn description(&self) -> String {
        if self.parts.is_empty() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .parts
            .iter()
            .map(|(c, g)| format!("{c:.6e}·[{}]", g.description()))
            .collect();
        format!("{} = {}", self.label, terms.join(" + "))
    }
}

/// A symbol given by closures, mostly for tests and smooth reference symbols.
pub struct FnSymbol<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub dim: usize,
    pub value: F,
    pub derivative: D,
    pub label: String,
}

impl<F, D> FnSymbol<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, value: F, derivative: D, label: impl Into<String>) -> Self {
        Self {
            dim,
            value,
            derivative,
            label: label.into(),
        }
    }
}

impl<F, D> Symbol for FnSymbol<F, D>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    D: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        (self.value)(xi)
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        (self.derivative)(xi)
    }
    fn description(&self) -> String {
        self.label.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn frame_directions_follow_the_field() {
        let spec = OperatorSpec::new(
            dmatrix![0.3, 1.0, -0.2; 0.5, 0.0, 0.7; -1.0, 0.4, 0.1],
            dmatrix![2.0, 0.5, 0.0; 0.5, 1.0, 0.0; 0.0, 0.0, 0.0],
            false,
        )
        .unwrap();
        let f = Frame::new(&spec, 4);
        let xi = [0.7, -1.3, 2.1];
        let field = f.field(&xi);
        for j in 0..4 {
            let next = f.direction(j + 1, &xi);
            let via_field = f.direction(j, &field);
            for (a, b) in next.iter().zip(&via_field) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weighted_sum_is_linear() {
        let a: MultiplierSymbol = Arc::new(FnSymbol {
            dim: 1,
            value: |x: &[f64]| x[0],
            derivative: |_: &[f64]| 1.0,
            label: "x".into(),
        });
        let s = WeightedSum::new(vec![(2.0, a.clone()), (-3.0, a)], "s");
        assert_eq!(s.eval(&[2.0]), -2.0);
        assert_eq!(s.transport(&[2.0]), -1.0);
    }
}

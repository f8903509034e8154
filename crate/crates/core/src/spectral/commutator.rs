use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSource;
use super::grid::SpectralGrid;
use super::operators::{apply_table, inner, transport_parts, MultiplierTable};
use crate::error::{Error, Result};
use crate::kalman::OperatorSpec;
use crate::multiplier::Symbol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSample {
    pub member: usize,
    /// `2Re⟨Lu, g(D_x)u⟩ + Tr(B)⟨u, g(D_x)u⟩`.
    pub lhs: f64,
    /// `⟨(B^Tξ·∇g)(2πξ)û, û⟩`.
    pub rhs: f64,
    pub relative_error: f64,
    /// `2Re⟨∂_t u, g(D_x)u⟩` relative to the same scale, on time-dependent grids.
    pub time_part: Option<f64>,
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub symbol: String,
    pub points_per_axis: usize,
    pub box_length: f64,
    pub max_relative_error: f64,
    pub max_time_part: Option<f64>,
    pub samples: Vec<CommutatorSample>,
}

/// Checks `2Re⟨Lu, g(D_x)u⟩ + Tr(B)⟨u, g(D_x)u⟩ = ⟨(B^Tξ·∇g)(2πξ)û, û⟩` on
/// each member. The error is relative to
/// `⟨|B^Tξ·∇g|û, û⟩ + |Tr B||⟨u, g(D_x)u⟩|`, or to `‖u‖² max|g|` when that vanishes.
pub fn commutator_identity_check(
    spec: &OperatorSpec,
    grid: &SpectralGrid,
    g: &dyn Symbol,
    ensemble: EnsembleSource<'_>,
) -> Result<CommutatorReport> {
    grid.validate()?;
    if g.dim() != grid.space_dim {
        return Err(Error::Precondition(format!(
            "symbol dimension {} does not match grid space dimension {}",
            g.dim(),
            grid.space_dim
        )));
    }
    let gt = MultiplierTable::new(grid, |eta| g.eval(eta));
    let dgt = MultiplierTable::new(grid, |eta| g.transport(eta));
    let gmax = gt.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let trace = spec.trace_b();
    let scale = grid.cell_volume() / grid.len() as f64;
    let samples = (0..ensemble.len())
        .into_par_iter()
        .map(|member| -> Result<CommutatorSample> {
            let u = ensemble.member(grid, member);
            let u: &[f64] = &u;
            let parts = transport_parts(spec, grid, u)?;
            let v = apply_table(grid, u, &gt);
            let lu = parts.total();
            let ugu = inner(grid, u, &v);
            let lhs = 2.0 * inner(grid, &lu, &v) + trace * ugu;
            let spectrum = &parts.spectrum;
            let (rhs, abs_rhs) = spectrum
                .iter()
                .zip(&dgt.values)
                .fold((0.0, 0.0), |(s, a), (c, d)| (s + d * c.norm_sqr(), a + d.abs() * c.norm_sqr()));
            let (rhs, abs_rhs) = (rhs * scale, abs_rhs * scale);
            let mut denom = abs_rhs + trace.abs() * ugu.abs();
            if denom == 0.0 {
                denom = inner(grid, u, u) * gmax;
            }
            let rel = |x: f64| if denom > 0.0 { x / denom } else { x };
            let time_part = parts.time.as_ref().map(|dt| rel((2.0 * inner(grid, dt, &v)).abs()));
            Ok(CommutatorSample {
                member,
                lhs,
                rhs,
                relative_error: rel((lhs - rhs).abs()),
                time_part,
                tail: parts.tail,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative_error = samples.iter().map(|s| s.relative_error).fold(0.0, f64::max);
    let max_time_part = grid
        .time_axis
        .then(|| samples.iter().filter_map(|s| s.time_part).fold(0.0, f64::max));
    Ok(CommutatorReport {
        symbol: g.description(),
        points_per_axis: grid.points_per_axis,
        box_length: grid.box_length,
        max_relative_error,
        max_time_part,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::FnSymbol;
    use crate::spectral::TestFunctionSpec;
    use nalgebra::dmatrix;

    #[test]
    fn constant_symbol_reduces_to_trace_term() {
        let grid = SpectralGrid::new(2, false, 64, 16.0).unwrap();
        let spec = OperatorSpec::new(dmatrix![0.5, 1.0; 0.0, -0.2], dmatrix![1.0, 0.0; 0.0, 0.0], false).unwrap();
        let g = FnSymbol::new(2, |_: &[f64]| 3.0, |_: &[f64]| 0.0, "3");
        let ens = TestFunctionSpec::default().smooth().ensemble(&grid, 4);
        let rep = commutator_identity_check(&spec, &grid, &g, (&ens).into()).unwrap();
        assert!(rep.max_relative_error <= 1e-10, "{}", rep.max_relative_error);
        for s in &rep.samples {
            assert!(s.lhs.abs() <= 1e-10 && s.rhs == 0.0);
        }
    }

    #[test]
    fn smooth_symbol_satisfies_identity() {
        let grid = SpectralGrid::new(2, false, 64, 32.0).unwrap();
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0, 0.0; 0.0, 1.0], false).unwrap();
        let g = FnSymbol::new(
            2,
            |e: &[f64]| e[0] * e[1] / (1.0 + e[0] * e[0] + e[1] * e[1]),
            |e: &[f64]| {
                let j = 1.0 + e[0] * e[0] + e[1] * e[1];
                e[0] * e[0] / j - e[0] * e[1] * 2.0 * e[0] * e[1] / (j * j)
            },
            "ξx ξv / <ξ>²",
        );
        let ens = TestFunctionSpec::default().smooth().ensemble(&grid, 4);
        let rep = commutator_identity_check(&spec, &grid, &g, (&ens).into()).unwrap();
        assert!(rep.max_relative_error <= 1e-10, "{}", rep.max_relative_error);
    }
}

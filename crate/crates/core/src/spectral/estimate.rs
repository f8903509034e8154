use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ensemble::EnsembleSource;
use super::fft::forward_real;
use super::grid::SpectralGrid;
use super::operators::{multiplier_norm, transport_parts, MultiplierTable};
use crate::error::{Error, Result};
use crate::exponents::{ExponentChain, ExponentInput};
use crate::kalman::{direction_powers, OperatorSpec};
use crate::multiplier::particular::BlockLayout;

/// Smallest ensemble accepted by [`measure_estimate`].
pub const MIN_ENSEMBLE: usize = 50;

pub const ESTIMATE_STATEMENT: &str = "max_ratio is the largest ratio observed on a finite ensemble: an empirical lower bound on the best constant c, not an upper bound or a certificate of the estimate";

pub const FREQUENCY_CONVENTION: &str = "multipliers act through D_x = ∇_x/i, so symbols are evaluated at 2πξ for the grid frequencies ξ = k/L";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    /// `‖⟨D⟩^{λ_r}u‖ ≤ c(‖⟨QD⟩^{λ_0}u‖ + Σ_j ‖⟨Q(B^T)^jD⟩^{q_j}⟨D⟩^{s_j}Lu‖)`.
    #[serde(rename = "theorem-main")]
    MainEstimate,
    /// `‖⟨D_{x1}⟩^{λ_1}u‖ ≤ c(‖⟨D_{x0}⟩^{λ_0}u‖ + ‖⟨D_{x0}⟩^{q_0}⟨D_{x1}⟩^{s_1}Lu‖)`.
    #[serde(rename = "prop-particular-1")]
    ChainFirstStep,
    /// `‖⟨D_{x2}⟩^{λ_2}u‖ ≤ c(‖⟨D_{x1}⟩^{λ_1}u‖ + ‖⟨D_{x1}⟩^{q_1}⟨D_{x2}⟩^{s_2}Lu‖)`.
    #[serde(rename = "prop-particular-2")]
    ChainSecondStep,
    /// `‖⟨D_x⟩^{p(1+s)/(1-q+p)}u‖ ≤ c(‖⟨D_v⟩^p u‖ + ‖⟨D_x⟩^s⟨D_v⟩^q Lu‖)`.
    KineticExample,
}

impl EstimateKind {
    pub const ALL: [EstimateKind; 4] = [
        EstimateKind::MainEstimate,
        EstimateKind::ChainFirstStep,
        EstimateKind::ChainSecondStep,
        EstimateKind::KineticExample,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimateKind::MainEstimate => "theorem-main",
            EstimateKind::ChainFirstStep => "prop-particular-1",
            EstimateKind::ChainSecondStep => "prop-particular-2",
            EstimateKind::KineticExample => "kinetic-example",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSample {
    pub member: usize,
    pub lhs_norm: f64,
    pub rhs_terms: BTreeMap<String, f64>,
    /// `lhs / Σ rhs`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeasurement {
    pub which: EstimateKind,
    pub statement: String,
    pub convention: String,
    pub lhs: String,
    /// `(N, L)`.
    pub resolution: (usize, f64),
    pub ensemble_size: usize,
    pub max_ratio: f64,
    pub argmax_member: usize,
    pub samples: Vec<EstimateSample>,
}

type SymbolFn = Box<dyn Fn(&[f64]) -> f64 + Sync>;

enum Target {
    U,
    Lu,
}

struct Norm {
    name: String,
    target: Target,
    table: MultiplierTable,
}

fn bracket(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn block_bracket(eta: &[f64], r: &std::ops::Range<usize>) -> f64 {
    bracket(&eta[r.clone()])
}

fn mat_bracket(m: &DMatrix<f64>, eta: &[f64]) -> f64 {
    let n = eta.len();
    let v: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * eta[j]).sum()).collect();
    bracket(&v)
}

fn norms(
    which: EstimateKind,
    spec: &OperatorSpec,
    grid: &SpectralGrid,
    input: &ExponentInput,
    chain: &ExponentChain,
) -> Result<(Norm, Vec<Norm>)> {
    let n = spec.dim();
    let l = &chain.lambdas;
    let mk = |name: String, target: Target, f: SymbolFn| Norm {
        name,
        target,
        table: MultiplierTable::new(grid, f),
    };
    Ok(match which {
        EstimateKind::MainEstimate => {
            let r = input.r;
            let mats = direction_powers(spec, r);
            let lr = l[r];
            let l0 = l[0];
            let lhs = mk(format!("<D>^{lr} u"), Target::U, Box::new(move |e| bracket(e).powf(lr)));
            let q0 = mats[0].clone();
            let mut rhs = vec![mk(
                format!("<QD>^{l0} u"),
                Target::U,
                Box::new(move |e| mat_bracket(&q0, e).powf(l0)),
            )];
            for (j, m) in mats.iter().enumerate().take(r) {
                let (q, s) = (input.q[j], input.s[j]);
                let m = m.clone();
                rhs.push(mk(
                    format!("<Q(B^T)^{j}D>^{q} <D>^{s} Lu"),
                    Target::Lu,
                    Box::new(move |e| mat_bracket(&m, e).powf(q) * bracket(e).powf(s)),
                ));
            }
            (lhs, rhs)
        }
        EstimateKind::ChainFirstStep | EstimateKind::ChainSecondStep => {
            if !n.is_multiple_of(3) || input.r != 2 {
                return Err(Error::Precondition(
                    "two-step chain estimates need three equal blocks and r = 2".into(),
                ));
            }
            let lay = BlockLayout::chain(n / 3);
            let (lo, hi, ll, lh, q, s) = if which == EstimateKind::ChainFirstStep {
                (lay.xi0.clone().unwrap_or(0..0), lay.xi1.clone(), l[0], l[1], input.q[0], input.s[0])
            } else {
                (lay.xi1.clone(), lay.xi2.clone(), l[1], l[2], input.q[1], input.s[1])
            };
            let (a, b) = (lo.clone(), hi.clone());
            let lhs = mk(
                format!("<D_hi>^{lh} u"),
                Target::U,
                Box::new(move |e| block_bracket(e, &b).powf(lh)),
            );
            let b2 = hi.clone();
            let rhs = vec![
                mk(format!("<D_lo>^{ll} u"), Target::U, Box::new(move |e| block_bracket(e, &a).powf(ll))),
                mk(
                    format!("<D_lo>^{q} <D_hi>^{s} Lu"),
                    Target::Lu,
                    Box::new(move |e| block_bracket(e, &lo).powf(q) * block_bracket(e, &b2).powf(s)),
                ),
            ];
            (lhs, rhs)
        }
        EstimateKind::KineticExample => {
            if !n.is_multiple_of(2) || input.r != 1 {
                return Err(Error::Precondition("kinetic estimate needs (x, v) blocks and r = 1".into()));
            }
            let nb = n / 2;
            let (x, v) = (0..nb, nb..n);
            let (p, q, s) = (input.lambda0, input.q[0], input.s[0]);
            let gain = l[1];
            let (x1, x2, v1, v2) = (x.clone(), x.clone(), v.clone(), v.clone());
            let lhs = mk(format!("<D_x>^{gain} u"), Target::U, Box::new(move |e| block_bracket(e, &x1).powf(gain)));
            let rhs = vec![
                mk(format!("<D_v>^{p} u"), Target::U, Box::new(move |e| block_bracket(e, &v1).powf(p))),
                mk(
                    format!("<D_x>^{s} <D_v>^{q} Lu"),
                    Target::Lu,
                    Box::new(move |e| block_bracket(e, &x2).powf(s) * block_bracket(e, &v2).powf(q)),
                ),
            ];
            (lhs, rhs)
        }
    })
}

/// Measures one estimate on an ensemble. Every norm is a multiplier norm
/// computed by Parseval; `Lu` comes from [`super::apply_transport`].
pub fn measure_estimate(
    spec: &OperatorSpec,
    grid: &SpectralGrid,
    input: &ExponentInput,
    chain: &ExponentChain,
    ensemble: EnsembleSource<'_>,
    which: EstimateKind,
) -> Result<EstimateMeasurement> {
    Ok(measure_estimates(spec, grid, input, chain, ensemble, &[which])?.remove(0))
}

/// Several estimates sharing the transforms of `u` and `Lu`.
pub fn measure_estimates(
    spec: &OperatorSpec,
    grid: &SpectralGrid,
    input: &ExponentInput,
    chain: &ExponentChain,
    ensemble: EnsembleSource<'_>,
    kinds: &[EstimateKind],
) -> Result<Vec<EstimateMeasurement>> {
    grid.validate()?;
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(Error::Precondition(format!(
            "estimate measurement needs at least {MIN_ENSEMBLE} test functions, got {}",
            ensemble.len()
        )));
    }
    let all: Vec<(Norm, Vec<Norm>)> = kinds
        .iter()
        .map(|&k| norms(k, spec, grid, input, chain))
        .collect::<Result<_>>()?;
    let per_member: Vec<Vec<EstimateSample>> = (0..ensemble.len())
        .into_par_iter()
        .map(|member| -> Result<Vec<EstimateSample>> {
            let u = ensemble.member(grid, member);
            let parts = transport_parts(spec, grid, &u)?;
            let slu = forward_real(&parts.total(), grid.points_per_axis, grid.axes());
            let eval = |nm: &Norm| {
                let s = match nm.target {
                    Target::U => &parts.spectrum,
                    Target::Lu => &slu,
                };
                multiplier_norm(grid, s, &nm.table)
            };
            Ok(all
                .iter()
                .map(|(lhs, rhs)| {
                    let lhs_norm = eval(lhs);
                    let rhs_terms: BTreeMap<String, f64> =
                        rhs.iter().map(|nm| (nm.name.clone(), eval(nm))).collect();
                    let total: f64 = rhs_terms.values().sum();
                    EstimateSample {
                        member,
                        lhs_norm,
                        rhs_terms,
                        ratio: lhs_norm / total,
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(kinds
        .iter()
        .zip(all)
        .enumerate()
        .map(|(i, (&which, (lhs, _)))| {
            let samples: Vec<EstimateSample> = per_member.iter().map(|m| m[i].clone()).collect();
            let (argmax_member, max_ratio) = samples
                .iter()
                .map(|s| (s.member, s.ratio))
                .fold((0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
            EstimateMeasurement {
                which,
                statement: ESTIMATE_STATEMENT.into(),
                convention: FREQUENCY_CONVENTION.into(),
                lhs: lhs.name,
                resolution: (grid.points_per_axis, grid.box_length),
                ensemble_size: ensemble.len(),
                max_ratio,
                argmax_member,
                samples,
            }
        })
        .collect())
}

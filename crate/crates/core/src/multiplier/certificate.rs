//! Measured constants of pointwise inequalities `L(ξ) ≤ Σ_k c_k T_k(ξ)` on a grid.
//!
//! With one right-hand term the smallest constant is the grid maximum of
//! `L/T`. With several terms the constants minimizing `Σ_k c_k` are found by a
//! cutting-plane linear program.

use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::PointwiseRegion;
use crate::error::{Error, Result};

/// Default cap on measured constants.
pub const DEFAULT_CAP: f64 = 1e6;
const WORST_ROWS: usize = 256;
const LP_ROUNDS: usize = 200;
const LP_BATCH: usize = 64;
const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub xi: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCertificate {
    pub name: String,
    pub description: String,
    pub measured_constants: BTreeMap<String, f64>,
    pub worst_point: Vec<f64>,
    /// `max L/(Σ c_k T_k)` with the fitted constants.
    pub worst_ratio: f64,
    pub passed: bool,
    pub cap: f64,
    pub points: usize,
    pub grid: PointwiseRegion,
    #[serde(skip)]
    pub worst_rows: Vec<CertificateRow>,
}

impl InequalityCertificate {
    pub fn constant(&self, name: &str) -> f64 {
        self.measured_constants.get(name).copied().unwrap_or(f64::NAN)
    }

    /// Largest relative change of any constant against `other`.
    pub fn max_relative_change(&self, other: &InequalityCertificate) -> f64 {
        self.measured_constants
            .iter()
            .map(|(k, &a)| {
                let b = other.constant(k);
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// One evaluated grid point: left side and right-hand terms.
#[derive(Debug, Clone)]
pub struct Sample {
    pub lhs: f64,
    pub terms: Vec<f64>,
}

/// Evaluates `f` on every point in parallel, preserving order.
pub fn evaluate<F>(points: &[Vec<f64>], f: F) -> Vec<Sample>
where
    F: Fn(&[f64]) -> Sample + Sync,
{
    points.par_iter().map(|p| f(p)).collect()
}

fn rhs(c: &[f64], terms: &[f64]) -> f64 {
    c.iter().zip(terms).map(|(a, b)| a * b).sum()
}

/// Smallest `c ≥ 0` (minimal `Σ c_k`) with `lhs ≤ Σ c_k terms_k` on all samples.
/// Returns infinite constants when no such `c` exists.
pub fn fit_constants(samples: &[Sample], n_terms: usize) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].lhs > 0.0 || samples[i].terms.iter().any(|&t| t < 0.0))
        .collect();
    if active.is_empty() {
        return Ok(vec![0.0; n_terms]);
    }
    if n_terms == 1 {
        let mut c: f64 = 0.0;
        for &i in &active {
            let (l, t) = (samples[i].lhs, samples[i].terms[0]);
            if l <= 0.0 {
                continue;
            }
            c = c.max(if t > 0.0 { l / t } else { f64::INFINITY });
        }
        return Ok(vec![c]);
    }
    let scale: Vec<f64> = samples
        .iter()
        .map(|s| s.terms.iter().fold(s.lhs.abs(), |m, t| m.max(t.abs())))
        .collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut in_set = vec![false; samples.len()];
    fn push(i: usize, chosen: &mut Vec<usize>, in_set: &mut [bool]) {
        if !in_set[i] {
            in_set[i] = true;
            chosen.push(i);
        }
    }
    for k in 0..n_terms {
        let mut order: Vec<usize> = active.clone();
        let key = |i: usize| {
            let t = samples[i].terms[k];
            samples[i].lhs / t.max(1e-300 * scale[i])
        };
        order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
        for &i in order.iter().take(LP_BATCH / 2) {
            push(i, &mut chosen, &mut in_set);
        }
    }
    for _ in 0..LP_ROUNDS {
        let c = match solve_lp(samples, &scale, &chosen, n_terms)? {
            Some(c) => c,
            None => return Ok(vec![f64::INFINITY; n_terms]),
        };
        let mut violated: Vec<(f64, usize)> = active
            .iter()
            .filter_map(|&i| {
                let gap = (rhs(&c, &samples[i].terms) - samples[i].lhs) / scale[i];
                (gap < -LP_TOL && !in_set[i]).then_some((gap, i))
            })
            .collect();
        if violated.is_empty() {
            return Ok(exact_feasible(samples, &active, c));
        }
        violated.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, i) in violated.iter().take(LP_BATCH) {
            push(i, &mut chosen, &mut in_set);
        }
    }
    Err(Error::Solver("cutting-plane iteration did not converge".into()))
}

/// Rescales `c` so that every sample holds exactly despite solver tolerance.
fn exact_feasible(samples: &[Sample], active: &[usize], mut c: Vec<f64>) -> Vec<f64> {
    let mut worst: f64 = 1.0;
    for &i in active {
        let (l, r) = (samples[i].lhs, rhs(&c, &samples[i].terms));
        if l > 0.0 {
            worst = worst.max(if r > 0.0 { l / r } else { f64::INFINITY });
        } else if r < l {
            worst = f64::INFINITY;
        }
    }
    if !worst.is_finite() {
        return vec![f64::INFINITY; c.len()];
    }
    for x in &mut c {
        *x *= worst;
    }
    c
}

fn solve_lp(samples: &[Sample], scale: &[f64], rows: &[usize], n_terms: usize) -> Result<Option<Vec<f64>>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..n_terms).map(|_| p.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for &i in rows {
        let s = scale[i];
        let expr: Vec<_> = vars
            .iter()
            .zip(&samples[i].terms)
            .map(|(&v, &t)| (v, t / s))
            .collect();
        p.add_constraint(expr.as_slice(), ComparisonOp::Ge, samples[i].lhs / s);
    }
    match p.solve() {
        Ok(outcome) => match outcome.into_solution() {
            Ok(sol) => Ok(Some(vars.iter().map(|&v| sol.var_value(v).max(0.0)).collect())),
            Err(_) => Err(Error::Solver("linear program interrupted".into())),
        },
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Solver(e.to_string())),
    }
}

/// Specification of one certificate before evaluation.
pub struct CertificateSpec<'a> {
    pub name: &'a str,
    pub description: &'a str,
    pub term_names: &'a [&'a str],
    pub cap: f64,
}

/// Evaluates the samples, fits constants and assembles the certificate.
pub fn certify<F>(spec: CertificateSpec<'_>, region: &PointwiseRegion, points: &[Vec<f64>], f: F) -> Result<InequalityCertificate>
where
    F: Fn(&[f64]) -> Sample + Sync,
{
    let samples = evaluate(points, f);
    certify_samples(spec, region, points, &samples)
}

pub fn certify_samples(
    spec: CertificateSpec<'_>,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    samples: &[Sample],
) -> Result<InequalityCertificate> {
    for (p, s) in points.iter().zip(samples) {
        if !s.lhs.is_finite() || s.terms.iter().any(|t| !t.is_finite()) {
            return Err(Error::DomainViolation(format!(
                "{}: non-finite evaluation at {:?}",
                spec.name, p
            )));
        }
    }
    let n_terms = spec.term_names.len();
    let c = fit_constants(samples, n_terms)?;
    let mut rows: Vec<CertificateRow> = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_point = points.first().cloned().unwrap_or_default();
    let finite = c.iter().all(|x| x.is_finite());
    for (p, s) in points.iter().zip(samples) {
        if s.lhs <= 0.0 {
            continue;
        }
        let r = if finite { rhs(&c, &s.terms) } else { 0.0 };
        let ratio = if r > 0.0 { s.lhs / r } else { f64::INFINITY };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_point = p.clone();
        }
        rows.push(CertificateRow {
            xi: p.clone(),
            lhs: s.lhs,
            rhs: r,
            ratio,
        });
    }
    rows.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    rows.truncate(WORST_ROWS);
    let measured_constants: BTreeMap<String, f64> = spec
        .term_names
        .iter()
        .zip(&c)
        .map(|(n, &v)| (n.to_string(), v))
        .collect();
    let passed = worst_ratio.is_finite() && worst_ratio <= 1.0 + 1e-9 && c.iter().all(|&x| x <= spec.cap);
    Ok(InequalityCertificate {
        name: spec.name.to_string(),
        description: spec.description.to_string(),
        measured_constants,
        worst_point,
        worst_ratio,
        passed,
        cap: spec.cap,
        points: points.len(),
        grid: region.clone(),
        worst_rows: rows,
    })
}

/// Grid maximum of an optional ratio, with its location.
pub fn grid_max<F>(points: &[Vec<f64>], f: F) -> (f64, Option<Vec<f64>>)
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let vals: Vec<Option<f64>> = points.par_iter().map(|p| f(p)).collect();
    let mut best = 0.0;
    let mut at = None;
    for (p, v) in points.iter().zip(vals) {
        match v {
            Some(v) if v.is_nan() => return (f64::NAN, Some(p.clone())),
            Some(v) if v > best => {
                best = v;
                at = Some(p.clone());
            }
            _ => {}
        }
    }
    (best, at)
}

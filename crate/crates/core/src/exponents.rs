//! Regularity exponents `λ_0 > λ_1 > ... > λ_r` and their admissibility relations.
//!
//! The chain follows `λ_{j+1}((1 - q_j)/λ_j + 1) = 1 + s_j`, i.e.
//! `λ_{j+1} = (1 + s_j) λ_j / (1 - q_j + λ_j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for the non-strict ratio condition, which holds with
/// equality whenever all `q_j = s_j = 0`.
pub const RATIO_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentInput {
    pub lambda0: f64,
    pub r: usize,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
}

impl ExponentInput {
    /// Validates the structural hypotheses: `q_j = s_j = 0` for `j ≤ r-3`,
    /// `0 ≤ q_{r-2} ≤ q_{r-1} ≤ 1` and `s_{r-1} ≥ s_{r-2} ≥ 0`.
    pub fn new(lambda0: f64, q: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let input = Self {
            lambda0,
            r: q.len(),
            q,
            s,
        };
        input.validate()?;
        Ok(input)
    }

    /// All-zero `q`, `s` of length `r`.
    pub fn zero(lambda0: f64, r: usize) -> Result<Self> {
        Self::new(lambda0, vec![0.0; r], vec![0.0; r])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidExponents(m));
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return bad(format!("lambda0 must be positive, got {}", self.lambda0));
        }
        if self.q.len() != self.r || self.s.len() != self.r {
            return bad(format!(
                "expected {} entries in q and s, got {} and {}",
                self.r,
                self.q.len(),
                self.s.len()
            ));
        }
        for (j, (&q, &s)) in self.q.iter().zip(&self.s).enumerate() {
            if !(0.0..=1.0).contains(&q) {
                return bad(format!("q[{j}] = {q} outside [0, 1]"));
            }
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("s[{j}] = {s} must be nonnegative"));
            }
            if j + 3 <= self.r && (q != 0.0 || s != 0.0) {
                return bad(format!("q[{j}] and s[{j}] must vanish below index r-2"));
            }
        }
        if self.r >= 2 {
            let (a, b) = (self.r - 2, self.r - 1);
            if self.q[a] > self.q[b] {
                return bad(format!("q[{a}] = {} exceeds q[{b}] = {}", self.q[a], self.q[b]));
            }
            if self.s[a] > self.s[b] {
                return bad(format!("s[{a}] = {} exceeds s[{b}] = {}", self.s[a], self.s[b]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentChain {
    pub lambdas: Vec<f64>,
    pub decreasing: bool,
    /// `λ_{j-1}/λ_{j-2} + λ_{j-1}/λ_j ≤ 2` for all `2 ≤ j ≤ r`.
    pub ratio_condition: bool,
    /// Smallest `2 - (λ_{j-1}/λ_{j-2} + λ_{j-1}/λ_j)`; `+∞` when `r < 2`.
    pub ratio_condition_margin: f64,
    pub admissibility: Option<AdmissibilityReport>,
}

/// Applies the recursion to arbitrary `(q_j, s_j)` without structural checks.
pub fn exponent_recursion(lambda0: f64, q: &[f64], s: &[f64]) -> Result<Vec<f64>> {
    if q.len() != s.len() {
        return Err(Error::InvalidExponents("q and s lengths differ".into()));
    }
    let mut lambdas = Vec::with_capacity(q.len() + 1);
    lambdas.push(lambda0);
    for (j, (&qj, &sj)) in q.iter().zip(s).enumerate() {
        let l = lambdas[j];
        let denominator = 1.0 - qj + l;
        if !(denominator > 0.0) {
            return Err(Error::DegenerateExponent {
                step: j,
                denominator,
            });
        }
        lambdas.push((1.0 + sj) * l / denominator);
    }
    Ok(lambdas)
}

/// `|λ_{j+1}((1 - q_j)/λ_j + 1) - (1 + s_j)| / (1 + s_j)` for each step.
pub fn recursion_residuals(lambdas: &[f64], q: &[f64], s: &[f64]) -> Vec<f64> {
    (0..q.len())
        .map(|j| {
            let lhs = lambdas[j + 1] * ((1.0 - q[j]) / lambdas[j] + 1.0);
            (lhs - (1.0 + s[j])).abs() / (1.0 + s[j])
        })
        .collect()
}

fn ratio_margin(lambdas: &[f64]) -> f64 {
    (2..lambdas.len())
        .map(|j| 2.0 - (lambdas[j - 1] / lambdas[j - 2] + lambdas[j - 1] / lambdas[j]))
        .fold(f64::INFINITY, f64::min)
}

pub fn exponent_chain(input: &ExponentInput) -> Result<ExponentChain> {
    input.validate()?;
    let lambdas = exponent_recursion(input.lambda0, &input.q, &input.s)?;
    let decreasing = lambdas.windows(2).all(|w| w[0] > w[1]);
    let margin = ratio_margin(&lambdas);
    let admissibility = if input.r >= 2 {
        Some(admissibility_with_margin(input, 0.0)?)
    } else {
        None
    };
    Ok(ExponentChain {
        ratio_condition: margin >= -2.0 * RATIO_SLACK,
        ratio_condition_margin: margin,
        decreasing,
        lambdas,
        admissibility,
    })
}

/// Closed forms of `(λ_{r-1}, λ_r)` for `r ≥ 2`.
pub fn closed_form_lambda_r(input: &ExponentInput) -> Result<(f64, f64)> {
    input.validate()?;
    if input.r < 2 {
        return Err(Error::InvalidExponents("closed form needs r >= 2".into()));
    }
    let l0 = input.lambda0;
    let rm2 = (input.r - 2) as f64;
    let (q, qq) = (input.q[input.r - 2], input.q[input.r - 1]);
    let (s, ss) = (input.s[input.r - 2], input.s[input.r - 1]);
    let lrm1 = l0 * (1.0 + s) / (1.0 - q + l0 + l0 * (1.0 - q) * rm2);
    let den = (1.0 - q) * (1.0 - qq) + l0 * (1.0 + s) + l0 * (1.0 - qq) + l0 * (1.0 - q) * (1.0 - qq) * rm2;
    let lr = l0 * (1.0 + s) * (1.0 + ss) / den;
    Ok((lrm1, lr))
}

/// One equivalence: the chain-side predicate against its closed-form counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub chain_side: bool,
    /// Signed distance to the boundary of the chain-side predicate.
    pub chain_distance: f64,
    pub formula_side: bool,
    pub formula_distance: f64,
    pub agree: bool,
}

impl Equivalence {
    fn strict(chain_distance: f64, formula_distance: f64, margin: f64) -> Self {
        let chain_side = chain_distance > margin;
        let formula_side = formula_distance > margin;
        Self {
            chain_side,
            chain_distance,
            formula_side,
            formula_distance,
            agree: chain_side == formula_side,
        }
    }

    fn non_strict(chain_distance: f64, formula_distance: f64, margin: f64, slack: f64) -> Self {
        let chain_side = chain_distance >= margin - slack;
        let formula_side = formula_distance >= margin - slack;
        Self {
            chain_side,
            chain_distance,
            formula_side,
            formula_distance,
            agree: chain_side == formula_side,
        }
    }

    /// Smallest absolute boundary distance of the two sides.
    pub fn boundary_distance(&self) -> f64 {
        self.chain_distance.abs().min(self.formula_distance.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `λ_{r-2} > λ_{r-1}` against `(s_{r-2}+q_{r-2})(1+λ_0(r-2)) < λ_0`.
    pub descent_before_last: Equivalence,
    /// `λ_{r-1} > λ_r` against `(s_{r-1}+q_{r-1})(1-q_{r-2})(1+λ_0(r-2)) < λ_0(1+s_{r-2}-s_{r-1}-q_{r-1})`.
    pub descent_at_last: Equivalence,
    /// `λ_{r-1} > λ_r` against `λ_r > q_{r-1}+s_{r-1}`.
    pub descent_gain: Equivalence,
    /// `q_{r-1}+s_{r-1} ≥ q_{r-2}+s_{r-2}`.
    pub loss_ordered: bool,
    /// Ratio condition at `j = r` against its closed-form rewriting.
    pub ratio_at_last: Equivalence,
    /// `(q+s)(1+λ_0(r-2)) < λ_0`, defined when `q_{r-2}=q_{r-1}` and `s_{r-2}=s_{r-1}`.
    pub simplified_condition: Option<bool>,
    pub margin: f64,
}

impl AdmissibilityReport {
    pub fn all_agree(&self) -> bool {
        self.descent_before_last.agree && self.descent_at_last.agree && self.descent_gain.agree && self.ratio_at_last.agree
    }

    pub fn equivalences(&self) -> [(&'static str, &Equivalence); 4] {
        [
            ("descent_before_last", &self.descent_before_last),
            ("descent_at_last", &self.descent_at_last),
            ("descent_gain", &self.descent_gain),
            ("ratio_at_last", &self.ratio_at_last),
        ]
    }
}

pub fn admissibility_report(input: &ExponentInput) -> Result<AdmissibilityReport> {
    admissibility_with_margin(input, 0.0)
}

/// Evaluates both sides of each equivalence independently. Strict predicates
/// hold when their distance exceeds `margin`.
pub fn admissibility_with_margin(input: &ExponentInput, margin: f64) -> Result<AdmissibilityReport> {
    input.validate()?;
    let r = input.r;
    if r < 2 {
        return Err(Error::InvalidExponents("admissibility needs r >= 2".into()));
    }
    let l = exponent_recursion(input.lambda0, &input.q, &input.s)?;
    let l0 = input.lambda0;
    let d = 1.0 + (r - 2) as f64 * l0;
    let (q, qq) = (input.q[r - 2], input.q[r - 1]);
    let (s, ss) = (input.s[r - 2], input.s[r - 1]);

    let descent_before_last = Equivalence::strict(l[r - 2] - l[r - 1], l0 - (s + q) * d, margin);
    let descent_at_last = Equivalence::strict(
        l[r - 1] - l[r],
        l0 * (1.0 + s - ss - qq) - (ss + qq) * (1.0 - q) * d,
        margin,
    );
    let descent_gain = Equivalence::strict(l[r - 1] - l[r], l[r] - (qq + ss), margin);

    let chain_ratio = 2.0 - (l[r - 1] / l[r - 2] + l[r - 1] / l[r]);
    let formula_ratio = l0 * (2.0 * ss - s + qq)
        - d * ((1.0 + s) * (1.0 + ss) + (1.0 - q) * (1.0 - qq) - 2.0 * (1.0 + ss) * (1.0 - q));
    let scale = l0 * (2.0 + ss + qq) + d * (4.0 + 4.0 * ss + 2.0 * s);
    let ratio_at_last = Equivalence::non_strict(chain_ratio, formula_ratio, margin, RATIO_SLACK * scale);

    let simplified_condition = (q == qq && s == ss).then_some((q + s) * d < l0 - margin);
    Ok(AdmissibilityReport {
        descent_before_last,
        descent_at_last,
        descent_gain,
        loss_ordered: qq + ss >= q + s,
        ratio_at_last,
        simplified_condition,
        margin,
    })
}

/// Gain exponent `p(1+s)/(1-q+p)` of the kinetic example.
pub fn kinetic_gain_exponent(p: f64, q: f64, s: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidExponents(format!("p must be positive, got {p}")));
    }
    let den = 1.0 - q + p;
    if !(den > 0.0) {
        return Err(Error::DegenerateExponent {
            step: 0,
            denominator: den,
        });
    }
    Ok(p * (1.0 + s) / den)
}

/// Exponents of the two-step chain with gains `(q_0, s_1)` then `(q_1, s_2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticularExponents {
    pub lambda0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub q0: f64,
    pub q1: f64,
    pub s1: f64,
    pub s2: f64,
}

impl ParticularExponents {
    pub fn new(lambda0: f64, q0: f64, q1: f64, s1: f64, s2: f64) -> Result<Self> {
        for (name, v) in [("q0", q0), ("q1", q1)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidExponents(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("s1", s1), ("s2", s2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidExponents(format!("{name} = {v} must be nonnegative")));
            }
        }
        if !(lambda0 > 0.0) {
            return Err(Error::InvalidExponents("lambda0 must be positive".into()));
        }
        let l = exponent_recursion(lambda0, &[q0, q1], &[s1, s2])?;
        Ok(Self {
            lambda0,
            lambda1: l[1],
            lambda2: l[2],
            q0,
            q1,
            s1,
            s2,
        })
    }

    /// Residuals of the two defining relations.
    pub fn residuals(&self) -> [f64; 2] {
        let r = recursion_residuals(
            &[self.lambda0, self.lambda1, self.lambda2],
            &[self.q0, self.q1],
            &[self.s1, self.s2],
        );
        [r[0], r[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_chain_values() {
        let c = exponent_chain(&ExponentInput::zero(1.0, 2).unwrap()).unwrap();
        assert!((c.lambdas[1] - 0.5).abs() < 1e-15);
        assert!((c.lambdas[2] - 1.0 / 3.0).abs() < 1e-15);
        assert!(c.decreasing && c.ratio_condition);
        let c = exponent_chain(&ExponentInput::zero(2.0, 1).unwrap()).unwrap();
        assert!((c.lambdas[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_loss_keeps_exponent() {
        let c = exponent_chain(&ExponentInput::new(1.0, vec![1.0], vec![0.0]).unwrap()).unwrap();
        assert_eq!(c.lambdas[1], 1.0);
        assert!(!c.decreasing);
    }

    #[test]
    fn closed_form_examples() {
        let (a, b) = closed_form_lambda_r(&ExponentInput::zero(1.0, 3).unwrap()).unwrap();
        assert!((a - 1.0 / 3.0).abs() < 1e-15 && (b - 0.25).abs() < 1e-15);
        let inp = ExponentInput::new(2.0, vec![0.5, 0.5], vec![0.0, 0.0]).unwrap();
        let (a, b) = closed_form_lambda_r(&inp).unwrap();
        let c = exponent_chain(&inp).unwrap();
        assert!((a - c.lambdas[1]).abs() < 1e-12 && (b - c.lambdas[2]).abs() < 1e-12);
        let inp = ExponentInput::new(1.0, vec![0.0, 0.25], vec![0.0, 0.125]).unwrap();
        let (_, b) = closed_form_lambda_r(&inp).unwrap();
        assert!((b - exponent_chain(&inp).unwrap().lambdas[2]).abs() < 1e-12);
    }

    #[test]
    fn structural_hypotheses_enforced() {
        assert!(ExponentInput::new(1.0, vec![0.1, 0.0, 0.0], vec![0.0; 3]).is_err());
        assert!(ExponentInput::new(1.0, vec![0.5, 0.2], vec![0.0; 2]).is_err());
        assert!(ExponentInput::new(1.0, vec![0.0; 2], vec![0.3, 0.1]).is_err());
        assert!(ExponentInput::new(0.0, vec![], vec![]).is_err());
    }

    #[test]
    fn admissibility_agrees_on_examples() {
        let rep = admissibility_report(&ExponentInput::zero(0.7, 2).unwrap()).unwrap();
        assert!(rep.all_agree());
        assert!(rep.descent_before_last.chain_side && rep.descent_at_last.chain_side && rep.ratio_at_last.chain_side);
        assert_eq!(rep.simplified_condition, Some(true));
        let rep = admissibility_report(&ExponentInput::new(1.0, vec![0.0; 2], vec![0.6; 2]).unwrap()).unwrap();
        assert!(rep.all_agree());
    }

    #[test]
    fn kinetic_gain_examples() {
        assert_eq!(kinetic_gain_exponent(1.0, 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(kinetic_gain_exponent(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert!((kinetic_gain_exponent(2.0, 0.5, 1.0).unwrap() - 1.6).abs() < 1e-15);
    }

    #[test]
    fn particular_residuals_vanish() {
        let p = ParticularExponents::new(1.0, 0.2, 0.3, 0.1, 0.4).unwrap();
        assert!(p.residuals().iter().all(|&r| r < 1e-12));
    }
}

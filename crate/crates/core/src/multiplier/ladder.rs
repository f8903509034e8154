//! Ladder cutoffs `W_j`, `Ψ_j = 1 - W_j`, `𝒲_k = Π_{j≤k} W_j` and the
//! correctors `𝔭_k`, `p_k` built on them.
//!
//! At top level `m`, with `v_j = Q(B^T)^jξ`:
//!
//! * `W_1 = w(|v_{m-1}|²/⟨ξ⟩^{2λ_m/λ_{m-1}})`,
//! * `W_j = w(Γ_j²|v_{m-j}|²/|v_{m-j+1}|^{2λ_{m-j+1}/λ_{m-j}})` for `j ≥ 2`,
//! * `𝔭_k = (v_{m-k}·v_{m-k-1}) |v_{m-k}|^{λ_{m-k}-2} 𝒲_k Ψ_{k+1}`.
//!
//! `Ψ_{j}` is only evaluated where `𝒲_{j-1} > 0`, which keeps every power
//! of `|v_{m-j+1}|` away from zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lead::argument_from;
use super::{dot, japanese, norm2, Frame, Symbol};
use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};

/// Default cap of the Γ search.
pub const GAMMA_CAP: f64 = 1_048_576.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTrial {
    /// Index `j` of `Γ_j`.
    pub stage: usize,
    pub gamma: f64,
    pub accepted: bool,
    /// Measured ratios driving the acceptance test.
    pub ratios: Vec<(String, f64)>,
}

/// `Γ_2, ..., Γ_m` with the search history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub gammas: Vec<f64>,
    pub search_cap: f64,
    pub history: Vec<GammaTrial>,
}

impl GammaSchedule {
    pub fn fixed(gammas: Vec<f64>) -> Self {
        Self {
            gammas,
            search_cap: GAMMA_CAP,
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ladder {
    frame: Arc<Frame>,
    top: usize,
    lambdas: Vec<f64>,
    cut: CutoffSpec,
    gammas: Vec<f64>,
}

/// Ladder values at one point. Index `j` of `w`, `dw`, `psi` refers to `W_j`;
/// entries past `depth` were not evaluated because `𝒲_{j-1} = 0` there.
#[derive(Debug, Clone)]
pub struct LadderState {
    pub v: Vec<Vec<f64>>,
    pub jx: f64,
    pub field_dot: f64,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub psi: Vec<f64>,
    /// `cal_w[k] = 𝒲_k`, `cal_w[0] = 1`.
    pub cal_w: Vec<f64>,
    pub depth: usize,
    pub domain_ok: bool,
}

impl Ladder {
    /// `lambdas = [λ_0, ..., λ_m]`, `gammas = [Γ_2, ..., Γ_m]`; `cut` supplies the `w` band.
    pub fn new(frame: Arc<Frame>, lambdas: Vec<f64>, cut: CutoffSpec, gammas: Vec<f64>) -> Result<Self> {
        let top = lambdas.len().saturating_sub(1);
        if top < 2 {
            return Err(Error::Precondition("the ladder needs level >= 2".into()));
        }
        if frame.max_index() < top + 1 {
            return Err(Error::Precondition(format!("ladder needs directions up to {}", top + 1)));
        }
        if gammas.len() != top - 1 || gammas.iter().any(|&g| !(g >= 1.0)) {
            return Err(Error::Precondition(format!(
                "expected {} values Γ_j >= 1, got {:?}",
                top - 1,
                gammas
            )));
        }
        cut.validate()?;
        Ok(Self {
            frame,
            top,
            lambdas,
            cut,
            gammas,
        })
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn cutoff(&self) -> &CutoffSpec {
        &self.cut
    }

    pub fn with_gammas(&self, gammas: Vec<f64>) -> Result<Self> {
        Self::new(self.frame.clone(), self.lambdas.clone(), self.cut, gammas)
    }

    /// Argument of `W_j` and its transport derivative.
    pub fn argument(&self, j: usize, v: &[Vec<f64>], jx: f64, field_dot: f64) -> Option<(f64, f64)> {
        let m = self.top;
        if j == 1 {
            let e = 2.0 * self.lambdas[m] / self.lambdas[m - 1];
            return Some(argument_from(&v[m - 1], &v[m], field_dot, jx, e));
        }
        let (lo, hi, next) = (&v[m - j], &v[m - j + 1], &v[m - j + 2]);
        let nh2 = norm2(hi);
        if nh2 == 0.0 {
            return None;
        }
        let g2 = self.gammas[j - 2] * self.gammas[j - 2];
        let e = 2.0 * self.lambdas[m - j + 1] / self.lambdas[m - j];
        let scale = nh2.powf(-0.5 * e);
        let nl2 = norm2(lo);
        let y = g2 * nl2 * scale;
        let dy = g2 * (2.0 * dot(lo, hi) * scale - e * nl2 * scale / nh2 * dot(hi, next));
        Some((y, dy))
    }

    /// Evaluates `W_1 .. W_upto` sequentially, stopping once `𝒲` vanishes.
    pub fn state(&self, xi: &[f64], upto: usize) -> LadderState {
        let m = self.top;
        let upto = upto.min(m);
        let v = self.frame.directions(m + 1, xi);
        let jx = japanese(xi);
        let field_dot = dot(&self.frame.field(xi), xi);
        let mut st = LadderState {
            v,
            jx,
            field_dot,
            w: vec![0.0; upto + 1],
            dw: vec![0.0; upto + 1],
            psi: vec![1.0; upto + 1],
            cal_w: vec![0.0; upto + 1],
            depth: 0,
            domain_ok: true,
        };
        st.cal_w[0] = 1.0;
        st.w[0] = 1.0;
        for j in 1..=upto {
            if st.cal_w[j - 1] == 0.0 {
                break;
            }
            match self.argument(j, &st.v, jx, field_dot) {
                Some((y, dy)) => {
                    st.w[j] = self.cut.w(y);
                    st.psi[j] = self.cut.one_minus_w(y);
                    st.dw[j] = self.cut.w_prime(y) * dy;
                }
                None => {
                    st.domain_ok = false;
                    break;
                }
            }
            st.cal_w[j] = st.cal_w[j - 1] * st.w[j];
            st.depth = j;
        }
        st
    }

    /// B-term decomposition of `B^Tξ·∇𝔭_k` for `1 ≤ k ≤ m-1`.
    pub fn corrector_terms(&self, st: &LadderState, k: usize) -> CorrectorTerms {
        let m = self.top;
        let mut t = CorrectorTerms::zero(k);
        if !st.domain_ok && st.depth < k + 1 {
            t.value = f64::NAN;
            return t;
        }
        if st.depth < k || st.cal_w[k] == 0.0 {
            return t;
        }
        let a = &st.v[m - k];
        let prev = &st.v[m - k - 1];
        let next = &st.v[m - k + 1];
        let lam = self.lambdas[m - k];
        let na2 = norm2(a);
        let na = na2.sqrt();
        let n = dot(a, prev);
        let p = na.powf(lam - 2.0);
        let calw = st.cal_w[k];
        let psi = st.psi[k + 1];
        let dpsi = -st.dw[k + 1];
        t.value = n * p * calw * psi;
        t.main = na.powf(lam) * calw * psi;
        t.b1 = dot(next, prev) * p * calw * psi;
        t.b2 = n * (lam - 2.0) * na.powf(lam - 4.0) * dot(next, a) * calw * psi;
        let tail = |from: usize| (from..=k).map(|l| st.w[l]).product::<f64>();
        t.b3 = n * p * st.dw[1] * tail(2) * psi;
        t.b4 = n * p * calw * dpsi;
        for j in 2..=k {
            t.b5[j - 2] = n * p * st.cal_w[j - 1] * st.dw[j] * tail(j + 1) * psi;
        }
        t
    }
}

/// `B^Tξ·∇𝔭_k = main + b1 + b2 + b3 + b4 + Σ b5`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectorTerms {
    pub value: f64,
    /// `|v_{m-k}|^{λ_{m-k}} 𝒲_k Ψ_{k+1}`.
    pub main: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    /// Contributions of `B^Tξ·∇W_j`, `2 ≤ j ≤ k`.
    pub b5: Vec<f64>,
}

impl CorrectorTerms {
    fn zero(k: usize) -> Self {
        Self {
            value: 0.0,
            main: 0.0,
            b1: 0.0,
            b2: 0.0,
            b3: 0.0,
            b4: 0.0,
            b5: vec![0.0; k.saturating_sub(1)],
        }
    }

    pub fn total(&self) -> f64 {
        self.main + self.b1 + self.b2 + self.b3 + self.b4 + self.b5.iter().sum::<f64>()
    }
}

/// Which ladder function a [`LadderSymbol`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LadderPart {
    W(usize),
    Psi(usize),
    CalW(usize),
}

/// One ladder function as a symbol.
#[derive(Debug, Clone)]
pub struct LadderSymbol {
    pub ladder: Arc<Ladder>,
    pub part: LadderPart,
}

impl LadderSymbol {
    fn value_and_derivative(&self, xi: &[f64]) -> (f64, f64) {
        match self.part {
            LadderPart::W(j) | LadderPart::Psi(j) => {
                let l = &self.ladder;
                let v = l.frame.directions(l.top + 1, xi);
                let field_dot = dot(&l.frame.field(xi), xi);
                match l.argument(j, &v, japanese(xi), field_dot) {
                    Some((y, dy)) => {
                        let dw = l.cut.w_prime(y) * dy;
                        if matches!(self.part, LadderPart::W(_)) {
                            (l.cut.w(y), dw)
                        } else {
                            (l.cut.one_minus_w(y), -dw)
                        }
                    }
                    None => (f64::NAN, f64::NAN),
                }
            }
            LadderPart::CalW(k) => {
                let st = self.ladder.state(xi, k);
                if !st.domain_ok {
                    return (f64::NAN, f64::NAN);
                }
                let mut d = 0.0;
                if st.depth >= k {
                    for j in 1..=k {
                        let others: f64 = (1..=k).filter(|&l| l != j).map(|l| st.w[l]).product();
                        d += st.dw[j] * others;
                    }
                }
                (st.cal_w[k], d)
            }
        }
    }
}

impl Symbol for LadderSymbol {
    fn dim(&self) -> usize {
        self.ladder.frame.dim()
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        self.value_and_derivative(xi).0
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        self.value_and_derivative(xi).1
    }
    fn description(&self) -> String {
        match self.part {
            LadderPart::W(j) => format!("W_{j}"),
            LadderPart::Psi(j) => format!("Psi_{j} = 1 - W_{j}"),
            LadderPart::CalW(k) => format!("prod_(j<={k}) W_j"),
        }
    }
}

/// `Σ_k c_k 𝔭_k` over `k = 1..m-1`.
#[derive(Debug, Clone)]
pub struct CorrectorSymbol {
    pub ladder: Arc<Ladder>,
    pub weights: Vec<f64>,
    pub label: String,
}

impl CorrectorSymbol {
    fn terms(&self, xi: &[f64]) -> Vec<CorrectorTerms> {
        let kmax = self.weights.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        if kmax == 0 {
            return Vec::new();
        }
        let st = self.ladder.state(xi, kmax + 1);
        (1..=kmax).map(|k| self.ladder.corrector_terms(&st, k)).collect()
    }
}

impl Symbol for CorrectorSymbol {
    fn dim(&self) -> usize {
        self.ladder.frame.dim()
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        self.terms(xi)
            .iter()
            .zip(&self.weights)
            .map(|(t, c)| c * t.value)
            .sum()
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        self.terms(xi)
            .iter()
            .zip(&self.weights)
            .map(|(t, c)| if t.value.is_nan() { f64::NAN } else { c * t.total() })
            .sum()
    }
    fn description(&self) -> String {
        let parts: Vec<String> = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, c)| format!("{c}·frak_p_{}", k + 1))
            .collect();
        format!(
            "{} = {}, frak_p_k = (v_(m-k)·v_(m-k-1)) |v_(m-k)|^(λ_(m-k)-2) prod_(j<=k) W_j Psi_(k+1)",
            self.label,
            parts.join(" + ")
        )
    }
}

/// Ladder functions as symbols.
pub struct LadderRecord {
    pub ladder: Arc<Ladder>,
    pub w: Vec<Arc<LadderSymbol>>,
    pub psi: Vec<Arc<LadderSymbol>>,
    pub cal_w: Vec<Arc<LadderSymbol>>,
}

pub fn build_ladder(ladder: Arc<Ladder>) -> LadderRecord {
    let m = ladder.top();
    let make = |part| {
        Arc::new(LadderSymbol {
            ladder: ladder.clone(),
            part,
        })
    };
    LadderRecord {
        w: (1..=m).map(|j| make(LadderPart::W(j))).collect(),
        psi: (1..=m).map(|j| make(LadderPart::Psi(j))).collect(),
        cal_w: (1..=m).map(|k| make(LadderPart::CalW(k))).collect(),
        ladder,
    }
}

/// Individual correctors and their running sums.
pub struct Correctors {
    /// `𝔭_1, ..., 𝔭_{m-1}`.
    pub frak_p: Vec<Arc<CorrectorSymbol>>,
    /// `p_1, ..., p_{m-1}` with `p_k = 𝔭_k + Σ_{j<k} p_j`.
    pub p: Vec<Arc<CorrectorSymbol>>,
    /// `p_m = Σ_{k<m} p_k`.
    pub total: Arc<CorrectorSymbol>,
}

/// Coefficients of `p_k` in the basis `𝔭_1, ..., 𝔭_{m-1}`.
pub fn corrector_weights(m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = m - 1;
    let mut p: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        for prev in &p {
            for (x, y) in c.iter_mut().zip(prev) {
                *x += y;
            }
        }
        p.push(c);
    }
    let mut total = vec![0.0; n];
    for c in &p {
        for (x, y) in total.iter_mut().zip(c) {
            *x += y;
        }
    }
    (p, total)
}

pub fn build_correctors(ladder: Arc<Ladder>) -> Correctors {
    let m = ladder.top();
    let n = m - 1;
    let unit = |k: usize| {
        let mut c = vec![0.0; n];
        c[k] = 1.0;
        c
    };
    let make = |weights: Vec<f64>, label: String| {
        Arc::new(CorrectorSymbol {
            ladder: ladder.clone(),
            weights,
            label,
        })
    };
    let (pw, tw) = corrector_weights(m);
    Correctors {
        frak_p: (0..n).map(|k| make(unit(k), format!("frak_p_{}", k + 1))).collect(),
        p: pw
            .into_iter()
            .enumerate()
            .map(|(k, c)| make(c, format!("p_{}", k + 1)))
            .collect(),
        total: make(tw, format!("p_{m}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_sum_weights() {
        let (p, total) = corrector_weights(4);
        assert_eq!(p[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(p[1], vec![1.0, 1.0, 0.0]);
        assert_eq!(p[2], vec![2.0, 1.0, 1.0]);
        assert_eq!(total, vec![4.0, 2.0, 1.0]);
    }
}

//! Recursive assembly of the full multiplier and its certificates.
//!
//! At level `m ≥ 2` the multiplier combines the leading symbol `g_m`, the
//! corrector `p_m` built on the ladder, and, when `M_m = Q(B^T)^m` is not
//! coercive by itself, the level `m-1` multiplier localized to
//! `{|v_m|² < c_1|ξ|²} ∩ {|ξ| ≳ 1}`. Component weights are fitted by linear
//! programming against the target estimate
//! `⟨ξ⟩^{λ_m} ≤ c_2⟨Qξ⟩^{λ_0} + c_3 B^Tξ·∇g`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::certificate::{certify, evaluate, fit_constants, grid_max, CertificateSpec, InequalityCertificate, Sample};
use super::grid::PointwiseRegion;
use super::ladder::{build_correctors, GammaSchedule, GammaTrial, Ladder, GAMMA_CAP};
use super::lead::LeadSymbol;
use super::{dot, japanese, norm2, Frame, MultiplierSymbol, Symbol, WeightedSum, ZeroSymbol};
use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::{ExponentChain, ExponentInput};
use crate::kalman::{coercivity_estimate, iterated_directions, kalman_index, OperatorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub cut: CutoffSpec,
    /// Acceptance margin of the Γ search.
    pub eps: f64,
    pub gamma_start: f64,
    pub gamma_cap: f64,
    /// `c_1 = omega_fraction · c` for the localized lower level.
    pub omega_fraction: f64,
    pub constant_cap: f64,
    pub coercivity_samples: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            cut: CutoffSpec::default(),
            eps: 0.1,
            gamma_start: 2.0,
            gamma_cap: GAMMA_CAP,
            omega_fraction: 0.5,
            constant_cap: super::certificate::DEFAULT_CAP,
            coercivity_samples: 4096,
        }
    }
}

/// `ψ_0(|v_m|²/|ξ|²) w_0(|ξ|²) h(ξ)`.
pub struct LocalizedSymbol {
    frame: Arc<Frame>,
    index: usize,
    loc: CutoffSpec,
    inner: MultiplierSymbol,
}

impl LocalizedSymbol {
    /// `ψ_0` has band `(c_1/4, c_1/2)`, `w_0` has band `(1/4, 1)`.
    pub fn new(frame: Arc<Frame>, index: usize, c1: f64, inner: MultiplierSymbol) -> Result<Self> {
        let loc = CutoffSpec::new(0.25 * c1, 0.5 * c1, 0.25, 1.0)?;
        Ok(Self {
            frame,
            index,
            loc,
            inner,
        })
    }
}

impl Symbol for LocalizedSymbol {
    fn dim(&self) -> usize {
        self.frame.dim()
    }
    fn eval(&self, xi: &[f64]) -> f64 {
        let r2 = norm2(xi);
        if r2 <= self.loc.w_inner {
            return 0.0;
        }
        let z = norm2(&self.frame.direction(self.index, xi)) / r2;
        let psi = self.loc.psi(z);
        if psi == 0.0 {
            return 0.0;
        }
        psi * self.loc.w(r2) * self.inner.eval(xi)
    }
    fn transport(&self, xi: &[f64]) -> f64 {
        let r2 = norm2(xi);
        if r2 <= self.loc.w_inner {
            return 0.0;
        }
        let vm = self.frame.direction(self.index, xi);
        let z = norm2(&vm) / r2;
        let psi = self.loc.psi(z);
        let dpsi = self.loc.psi_prime(z);
        if psi == 0.0 && dpsi == 0.0 {
            return 0.0;
        }
        let field_dot = dot(&self.frame.field(xi), xi);
        let vnext = self.frame.direction(self.index + 1, xi);
        let dz = 2.0 * dot(&vnext, &vm) / r2 - 2.0 * norm2(&vm) * field_dot / (r2 * r2);
        let w0 = self.loc.w(r2);
        let dw0 = self.loc.w_prime(r2) * 2.0 * field_dot;
        let h = self.inner.eval(xi);
        (dpsi * dz * w0 + psi * dw0) * h + psi * w0 * self.inner.transport(xi)
    }
    fn description(&self) -> String {
        format!(
            "ψ0(|v{}|²/|ξ|²) w0(|ξ|²) [{}]",
            self.index,
            self.inner.description()
        )
    }
}

/// How one level of the recursion was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub level: usize,
    /// Coercivity constant available at this level.
    pub coercivity: f64,
    /// `λ_min(M_m^T M_m)`.
    pub top_direction_min: f64,
    /// True when the leading direction alone is coercive and no localized lower level is used.
    pub direct: bool,
    pub omega_c1: Option<f64>,
    pub gammas: Vec<f64>,
}

pub struct AssembledMultiplier {
    pub g: MultiplierSymbol,
    pub r: usize,
    pub components: Vec<(String, MultiplierSymbol)>,
    /// Normalized component weights of `g`, summing to one.
    pub weights: Vec<f64>,
    pub schedule: GammaSchedule,
    pub levels: Vec<LevelInfo>,
    pub c0: f64,
    pub certificates: Vec<InequalityCertificate>,
    /// Threshold radius of the basic case.
    pub r0: Option<f64>,
    pub lead: Option<Arc<LeadSymbol>>,
    pub ladder: Option<Arc<Ladder>>,
}

struct Level {
    components: Vec<(String, MultiplierSymbol)>,
    infos: Vec<LevelInfo>,
    trials: Vec<GammaTrial>,
    top_gammas: Vec<f64>,
    lead: Arc<LeadSymbol>,
    ladder: Option<Arc<Ladder>>,
}

/// Γ search for one ladder: `Γ_{k+1}` is doubled until the corrector remainders
/// `B_1 + B_2`, `B_3` and `B_5` fall below `eps` relative to their absorbers.
fn search_gammas(
    frame: &Arc<Frame>,
    lambdas: &[f64],
    opts: &BuildOptions,
    points: &[Vec<f64>],
    trials: &mut Vec<GammaTrial>,
) -> Result<Arc<Ladder>> {
    let m = lambdas.len() - 1;
    let lam_top = lambdas[m];
    let mut gammas = vec![opts.gamma_start; m - 1];
    for k in 1..m {
        let mut gamma = opts.gamma_start;
        loop {
            if gamma > opts.gamma_cap {
                return Err(Error::GammaExhausted {
                    stage: format!("Γ_{} at level {m}", k + 1),
                    cap: opts.gamma_cap,
                });
            }
            gammas[k - 1] = gamma;
            let ladder = Ladder::new(frame.clone(), lambdas.to_vec(), opts.cut, gammas.clone())?;
            let rows: Vec<(f64, f64, f64, bool)> = evaluate_rows(points, |xi| {
                let st = ladder.state(xi, k + 1);
                let t = ladder.corrector_terms(&st, k);
                if t.value.is_nan() {
                    return (f64::NAN, f64::NAN, f64::NAN, false);
                }
                let top = japanese(xi).powf(lam_top);
                let r12 = if t.main > 0.0 {
                    (t.b1.abs() + t.b2.abs()) / t.main
                } else {
                    0.0
                };
                (r12, t.b3.abs() / top, t.b5.iter().sum::<f64>().abs() / top, true)
            });
            if rows.iter().any(|r| !r.3) {
                return Err(Error::DomainViolation(format!(
                    "ladder denominator vanished inside its support at level {m}"
                )));
            }
            let max = |f: fn(&(f64, f64, f64, bool)) -> f64| rows.iter().map(f).fold(0.0, f64::max);
            let (r12, r3, r5) = (max(|r| r.0), max(|r| r.1), max(|r| r.2));
            let accepted = r12 <= opts.eps && r3 <= opts.eps && r5 <= opts.eps;
            trials.push(GammaTrial {
                stage: k + 1,
                gamma,
                accepted,
                ratios: vec![
                    ("b1_b2_over_main".into(), r12),
                    ("b3_over_top".into(), r3),
                    ("b5_over_top".into(), r5),
                ],
            });
            if accepted {
                break;
            }
            gamma *= 2.0;
        }
    }
    Ok(Arc::new(Ladder::new(frame.clone(), lambdas.to_vec(), opts.cut, gammas)?))
}

fn evaluate_rows<T: Send, F: Fn(&[f64]) -> T + Sync>(points: &[Vec<f64>], f: F) -> Vec<T> {
    use rayon::prelude::*;
    points.par_iter().map(|p| f(p)).collect()
}

fn build_level(
    frame: &Arc<Frame>,
    lambdas: &[f64],
    coercivity: f64,
    opts: &BuildOptions,
    points: &[Vec<f64>],
) -> Result<Level> {
    let m = lambdas.len() - 1;
    let lead = Arc::new(LeadSymbol::new(frame.clone(), m, lambdas[m], lambdas[m - 1], opts.cut)?);
    let top_direction_min = frame.direction_gram_min(m);
    if m == 1 {
        return Ok(Level {
            components: vec![("g_1".into(), lead.clone() as MultiplierSymbol)],
            infos: vec![LevelInfo {
                level: 1,
                coercivity,
                top_direction_min,
                direct: true,
                omega_c1: None,
                gammas: Vec::new(),
            }],
            trials: Vec::new(),
            top_gammas: Vec::new(),
            lead,
            ladder: None,
        });
    }
    let mut trials = Vec::new();
    let ladder = search_gammas(frame, lambdas, opts, points, &mut trials)?;
    let correctors = build_correctors(ladder.clone());
    let mut components: Vec<(String, MultiplierSymbol)> = vec![
        (format!("g_{m}"), lead.clone() as MultiplierSymbol),
        (format!("p_{m}"), correctors.total.clone() as MultiplierSymbol),
    ];
    let direct = top_direction_min >= coercivity;
    let mut infos = vec![LevelInfo {
        level: m,
        coercivity,
        top_direction_min,
        direct,
        omega_c1: None,
        gammas: ladder.gammas().to_vec(),
    }];
    if !direct {
        let c1 = opts.omega_fraction * coercivity;
        infos[0].omega_c1 = Some(c1);
        let lower = build_level(frame, &lambdas[..m], coercivity - c1, opts, points)?;
        for (name, sym) in lower.components {
            let loc = LocalizedSymbol::new(frame.clone(), m, c1, sym)?;
            components.push((format!("loc{m}[{name}]"), Arc::new(loc) as MultiplierSymbol));
        }
        infos.extend(lower.infos);
        trials.extend(lower.trials);
    }
    Ok(Level {
        components,
        infos,
        trials,
        top_gammas: ladder.gammas().to_vec(),
        lead,
        ladder: Some(ladder),
    })
}

/// Builds the multiplier for the Kalman index `r` of `spec`, runs the Γ search
/// and measures the target and bound certificates on `region`.
pub fn assemble_full_multiplier(
    spec: &OperatorSpec,
    input: &ExponentInput,
    chain: &ExponentChain,
    region: &PointwiseRegion,
    opts: &BuildOptions,
) -> Result<AssembledMultiplier> {
    region.validate()?;
    opts.cut.validate()?;
    let r = kalman_index(spec)?;
    if chain.lambdas.len() != r + 1 || input.r != r {
        return Err(Error::Precondition(format!(
            "exponent chain has length {} but the Kalman index is {r}",
            chain.lambdas.len()
        )));
    }
    let n = spec.dim();
    let frame = Arc::new(Frame::new(spec, r + 1));
    let points = region.points(n, Some(&frame));
    let dirs = iterated_directions(spec);
    let c0 = coercivity_estimate(&dirs, r, opts.coercivity_samples).sampled_min;
    let lambdas = &chain.lambdas;
    let l0 = lambdas[0];
    let cap = opts.constant_cap;

    if r == 0 {
        let cert = certify(
            CertificateSpec {
                name: "target_estimate",
                description: "<ξ>^λ0 <= c2 <Qξ>^λ0",
                term_names: &["c2"],
                cap,
            },
            region,
            &points,
            |xi| Sample {
                lhs: japanese(xi).powf(l0),
                terms: vec![japanese(&frame.direction(0, xi)).powf(l0)],
            },
        )?;
        return Ok(AssembledMultiplier {
            g: Arc::new(ZeroSymbol { dim: n }),
            r,
            components: Vec::new(),
            weights: Vec::new(),
            schedule: GammaSchedule::fixed(Vec::new()),
            levels: Vec::new(),
            c0,
            certificates: vec![cert],
            r0: None,
            lead: None,
            ladder: None,
        });
    }

    let level = build_level(&frame, lambdas, c0, opts, &points)?;
    let lam_r = lambdas[r];
    let names: Vec<String> = std::iter::once("c2".to_string())
        .chain(level.components.iter().map(|c| c.0.clone()))
        .collect();
    let base = |xi: &[f64]| japanese(&frame.direction(0, xi)).powf(l0);
    let samples = evaluate(&points, |xi| {
        let mut terms = vec![base(xi)];
        terms.extend(level.components.iter().map(|c| c.1.transport(xi)));
        Sample {
            lhs: japanese(xi).powf(lam_r),
            terms,
        }
    });
    for (p, s) in points.iter().zip(&samples) {
        if s.terms.iter().any(|t| !t.is_finite()) {
            return Err(Error::DomainViolation(format!("non-finite transport at {p:?}")));
        }
    }
    let fitted = fit_constants(&samples, names.len())?;
    let mut component_weights: Vec<f64> = fitted[1..].to_vec();
    let total: f64 = component_weights.iter().sum();
    if total > 0.0 && total.is_finite() {
        for c in &mut component_weights {
            *c /= total;
        }
    } else {
        component_weights = vec![0.0; level.components.len()];
        component_weights[0] = 1.0;
    }
    let g: MultiplierSymbol = Arc::new(WeightedSum::new(
        component_weights
            .iter()
            .zip(&level.components)
            .map(|(&c, comp)| (c, comp.1.clone()))
            .collect(),
        "g",
    ));

    let mut certificates = vec![target_certificate(&frame, &g, l0, lam_r, region, &points, cap)?];
    certificates.push(multiplier_bound(&frame, &g, input, region, &points, cap)?);
    certificates.push(super::lead::verify_gr_bound(&level.lead, input, region, cap)?);

    let mut r0 = None;
    if r == 1 {
        certificates.push(certify(
            CertificateSpec {
                name: "basic_case_estimate",
                description: "<ξ>^λ1 <= c2 (<Qξ>^λ0 + <Qξ>^q0 <ξ>^s0) + c3 B^Tξ·∇g1",
                term_names: &["c2", "c3"],
                cap,
            },
            region,
            &points,
            |xi| {
                let jq = japanese(&frame.direction(0, xi));
                Sample {
                    lhs: japanese(xi).powf(lam_r),
                    terms: vec![
                        jq.powf(l0) + jq.powf(input.q[0]) * japanese(xi).powf(input.s[0]),
                        level.lead.transport(xi),
                    ],
                }
            },
        )?);
        r0 = basic_case_threshold(&frame, lambdas, &opts.cut, c0, &points);
    }
    if let Some(ladder) = &level.ladder {
        certificates.extend(corrector_certificates(ladder, input, region, &points, cap)?);
    }

    let history = level.trials;
    Ok(AssembledMultiplier {
        g,
        r,
        components: level.components,
        weights: component_weights,
        schedule: GammaSchedule {
            gammas: level.top_gammas,
            search_cap: opts.gamma_cap,
            history,
        },
        levels: level.infos,
        c0,
        certificates,
        r0,
        lead: Some(level.lead),
        ladder: level.ladder,
    })
}

fn target_certificate(
    frame: &Arc<Frame>,
    g: &MultiplierSymbol,
    l0: f64,
    lam_r: f64,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<InequalityCertificate> {
    certify(
        CertificateSpec {
            name: "target_estimate",
            description: "<ξ>^λr <= c2 <Qξ>^λ0 + c3 B^Tξ·∇g",
            term_names: &["c2", "c3"],
            cap,
        },
        region,
        points,
        |xi| Sample {
            lhs: japanese(xi).powf(lam_r),
            terms: vec![japanese(&frame.direction(0, xi)).powf(l0), g.transport(xi)],
        },
    )
}

fn multiplier_bound(
    frame: &Arc<Frame>,
    g: &MultiplierSymbol,
    input: &ExponentInput,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<InequalityCertificate> {
    certify(
        CertificateSpec {
            name: "multiplier_bound",
            description: "|g| <= c1 Σ_j <Q(B^T)^j ξ>^q_j <ξ>^s_j",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let jx = japanese(xi);
            let rhs: f64 = (0..input.r)
                .map(|j| japanese(&frame.direction(j, xi)).powf(input.q[j]) * jx.powf(input.s[j]))
                .sum();
            Sample {
                lhs: g.eval(xi).abs(),
                terms: vec![rhs],
            }
        },
    )
}

fn corrector_certificates(
    ladder: &Arc<Ladder>,
    input: &ExponentInput,
    region: &PointwiseRegion,
    points: &[Vec<f64>],
    cap: f64,
) -> Result<Vec<InequalityCertificate>> {
    let m = ladder.top();
    let frame = ladder.frame().clone();
    let lambdas = ladder.lambdas().to_vec();
    let mut out = Vec::new();
    for k in 1..m {
        let gamma = ladder.gammas()[k - 1];
        let name = format!("corrector_bound_{k}");
        out.push(certify(
            CertificateSpec {
                name: &name,
                description: "|frak_p_k| <= c1 / Γ_(k+1)",
                term_names: &["c1"],
                cap,
            },
            region,
            points,
            |xi| {
                let st = ladder.state(xi, k + 1);
                Sample {
                    lhs: ladder.corrector_terms(&st, k).value.abs(),
                    terms: vec![1.0 / gamma],
                }
            },
        )?);
        let name = format!("ladder_domination_{k}");
        out.push(certify(
            CertificateSpec {
                name: &name,
                description: "<ξ>^λr <= c1 |v_(r-k)|^λ_(r-k) on supp W_1···W_k",
                term_names: &["c1"],
                cap,
            },
            region,
            points,
            |xi| {
                let st = ladder.state(xi, k);
                let on = st.depth >= k && st.cal_w[k] > 0.0;
                Sample {
                    lhs: if on { japanese(xi).powf(lambdas[m]) } else { 0.0 },
                    terms: vec![norm2(&st.v[m - k]).sqrt().powf(lambdas[m - k])],
                }
            },
        )?);
    }
    let gamma2 = ladder.gammas()[0];
    let (q, s) = (input.q[m - 2], input.s[m - 2]);
    out.push(certify(
        CertificateSpec {
            name: "first_corrector_bound",
            description: "|p_1| <= (c1/Γ_2) <v_(r-2)>^q_(r-2) <ξ>^s_(r-2)",
            term_names: &["c1"],
            cap,
        },
        region,
        points,
        |xi| {
            let st = ladder.state(xi, 2);
            Sample {
                lhs: ladder.corrector_terms(&st, 1).value.abs(),
                terms: vec![japanese(&frame.direction(m - 2, xi)).powf(q) * japanese(xi).powf(s) / gamma2],
            }
        },
    )?);
    Ok(out)
}

/// Smallest grid radius `R` with `|QB^Tξ|²/⟨ξ⟩² ≥ c_0/4` at every grid point
/// `|ξ| ≥ R` of `supp ψ(|Qξ|²/⟨ξ⟩^{2λ_1/λ_0})`.
pub fn basic_case_threshold(
    frame: &Frame,
    lambdas: &[f64],
    cut: &CutoffSpec,
    c0: f64,
    points: &[Vec<f64>],
) -> Option<f64> {
    let e = 2.0 * lambdas[1] / lambdas[0];
    let mut rows: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|xi| {
            let jx = japanese(xi);
            let x = norm2(&frame.direction(0, xi)) * jx.powf(-e);
            (x < cut.psi_outer).then(|| (norm2(xi).sqrt(), norm2(&frame.direction(1, xi)) / (jx * jx)))
        })
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut r0 = None;
    let mut suffix_ok = true;
    for (radius, ratio) in rows.iter().rev() {
        suffix_ok &= *ratio >= 0.25 * c0;
        if !suffix_ok {
            break;
        }
        r0 = Some(*radius);
    }
    r0
}

/// Constants of the cutoff-transport lemma at the leading level and, for
/// `r ≥ 2`, of the two ladder transport bounds at each `k`.
pub fn lemma_derivative_bounds(
    lead: &LeadSymbol,
    ladder: Option<&Ladder>,
    region: &PointwiseRegion,
    cap: f64,
) -> Result<Vec<InequalityCertificate>> {
    region.validate()?;
    let frame = lead.frame().clone();
    let points = region.points(frame.dim(), Some(&frame));
    let mut out = Vec::new();
    let cut = *lead.cutoff();
    let exponent = lead_ratio_exponent(lead);
    for (name, chi_prime) in [
        ("cutoff_transport_psi", &(|x: f64| cut.psi_prime(x)) as &(dyn Fn(f64) -> f64 + Sync)),
        ("cutoff_transport_w", &|x: f64| cut.w_prime(x)),
    ] {
        out.push(certify(
            CertificateSpec {
                name,
                description: "|B^Tξ·∇ χ(X)| <= c1 <ξ>^(1-λr/λ(r-1)) |χ'(X)|",
                term_names: &["c1"],
                cap,
            },
            region,
            &points,
            |xi| {
                let (x, dx) = lead.argument(xi);
                let c = chi_prime(x).abs();
                Sample {
                    lhs: c * dx.abs(),
                    terms: vec![japanese(xi).powf(exponent) * c],
                }
            },
        )?);
    }
    if let Some(ladder) = ladder {
        let top = ladder.top();
        for k in 1..top {
            let lam = ladder.lambdas()[top - k - 1];
            let name = format!("ladder_psi_transport_{k}");
            out.push(certify(
                CertificateSpec {
                    name: &name,
                    description: "|W_1···W_k B^Tξ·∇Ψ_(k+1)| <= c1 |v_(r-k-1)|^λ_(r-k-1) W_1···W_(k+1)",
                    term_names: &["c1"],
                    cap,
                },
                region,
                &points,
                |xi| {
                    let st = ladder.state(xi, k + 1);
                    let on = st.depth > k;
                    let v = norm2(&st.v[top - k - 1]).sqrt().powf(lam);
                    Sample {
                        lhs: if on { (st.cal_w[k] * st.dw[k + 1]).abs() } else { 0.0 },
                        terms: vec![if on { v * st.cal_w[k + 1] } else { 0.0 }],
                    }
                },
            )?);
            let name = format!("ladder_w_transport_{k}");
            out.push(certify(
                CertificateSpec {
                    name: &name,
                    description: "|W_1···W_k B^Tξ·∇W_(k+1)| <= c1 |v_(r-k-1)|^λ_(r-k-1) W_1···W_k Ψ_(k+1)",
                    term_names: &["c1"],
                    cap,
                },
                region,
                &points,
                |xi| {
                    let st = ladder.state(xi, k + 1);
                    let on = st.depth > k;
                    let v = norm2(&st.v[top - k - 1]).sqrt().powf(lam);
                    Sample {
                        lhs: if on { (st.cal_w[k] * st.dw[k + 1]).abs() } else { 0.0 },
                        terms: vec![if on { v * st.cal_w[k] * st.psi[k + 1] } else { 0.0 }],
                    }
                },
            )?);
        }
    }
    let (worst, _) = grid_max(&points, |xi| Some(lead.eval(xi).abs()));
    if !worst.is_finite() {
        return Err(Error::DomainViolation("leading symbol is not finite on the grid".into()));
    }
    Ok(out)
}

fn lead_ratio_exponent(lead: &LeadSymbol) -> f64 {
    let (lam, lam_prev) = lead.exponents();
    1.0 - lam / lam_prev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::exponent_chain;
    use nalgebra::dmatrix;

    fn build(spec: &OperatorSpec, r: usize, region: &PointwiseRegion) -> AssembledMultiplier {
        let input = ExponentInput::zero(1.0, r).unwrap();
        let chain = exponent_chain(&input).unwrap();
        assemble_full_multiplier(spec, &input, &chain, region, &BuildOptions::default()).unwrap()
    }

    fn small_region() -> PointwiseRegion {
        PointwiseRegion {
            r_max: 1e3,
            n_radial: 24,
            n_angular: 96,
            aniso_levels: 6,
            ..PointwiseRegion::default()
        }
    }

    #[test]
    fn kinetic_basic_case() {
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0, 0.0; 0.0, 1.0], false).unwrap();
        let a = build(&spec, 1, &small_region());
        assert_eq!(a.r, 1);
        assert!(a.certificates.iter().all(|c| c.passed));
        assert!(a.r0.is_some());
    }

    #[test]
    fn chain_builds_ladder() {
        let spec = OperatorSpec::new(
            dmatrix![0.0, 0.0, 0.0; 1.0, 0.0, 0.0; 0.0, 1.0, 0.0],
            dmatrix![1.0, 0.0, 0.0; 0.0, 0.0, 0.0; 0.0, 0.0, 0.0],
            false,
        )
        .unwrap();
        let a = build(&spec, 2, &small_region());
        assert_eq!(a.r, 2);
        assert!(a.schedule.gammas[0] >= 2.0);
        assert!(a.certificates.iter().find(|c| c.name == "target_estimate").unwrap().passed);
    }

    #[test]
    fn full_rank_q_is_trivial() {
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; -1.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0], false).unwrap();
        let a = build(&spec, 0, &small_region());
        assert_eq!(a.g.eval(&[3.0, 4.0]), 0.0);
        assert!(a.certificates[0].passed);
    }
}

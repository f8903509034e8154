//! Task orchestration: kalman → exponents → build → verify-*.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::config::{CommutatorSymbol, RunConfig, Task};
use crate::error::{Error, Result};
use crate::exponents::{exponent_chain, ExponentChain, ParticularExponents};
use crate::kalman::{coercivity_estimate, iterated_directions, kalman_index, OperatorSpec};
use crate::multiplier::particular::verify_particular_chain;
use crate::multiplier::{assemble_full_multiplier, lemma_derivative_bounds, AssembledMultiplier, BuildOptions, Symbol};
use crate::report::{BuildSection, ErrorRecord, KalmanSection, SpectralSection, TaskState, TaskStatus, VerificationReport};
use crate::spectral::estimate::FREQUENCY_CONVENTION;
use crate::spectral::{commutator_identity_check, measure_estimates, EnsembleSource};

#[derive(Default)]
struct State {
    spec: Option<OperatorSpec>,
    r: Option<usize>,
    chain: Option<ExponentChain>,
    assembled: Option<AssembledMultiplier>,
}

/// Runs the configured tasks. Task failures are recorded in the report;
/// only an invalid configuration is returned as an error.
pub fn run(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let mut report = VerificationReport::new(config.clone());
    let mut state = State::default();
    let mut failed: Vec<Task> = Vec::new();
    for task in config.task_plan() {
        let implied = !config.tasks.contains(&task);
        if let Some(dep) = task.prerequisites().iter().find(|d| failed.contains(d)) {
            failed.push(task);
            report.tasks.insert(
                task.name().into(),
                TaskStatus {
                    state: TaskState::Skipped,
                    implied,
                    error: Some(ErrorRecord {
                        kind: "Skipped".into(),
                        message: format!("prerequisite task {} failed", dep.name()),
                        exit_code: 0,
                    }),
                },
            );
            continue;
        }
        let start = Instant::now();
        let outcome = run_task(task, config, &mut state, &mut report);
        report.wall_times.insert(task.name().into(), start.elapsed().as_secs_f64());
        let status = match outcome {
            Ok(()) => TaskStatus {
                state: TaskState::Ok,
                implied,
                error: None,
            },
            Err(e) => {
                failed.push(task);
                TaskStatus {
                    state: TaskState::Failed,
                    implied,
                    error: Some(ErrorRecord::from(&e)),
                }
            }
        };
        report.tasks.insert(task.name().into(), status);
    }
    Ok(report)
}

fn build_options(config: &RunConfig) -> BuildOptions {
    BuildOptions {
        cut: config.cutoffs,
        ..config.build.clone()
    }
}

fn run_task(task: Task, config: &RunConfig, state: &mut State, report: &mut VerificationReport) -> Result<()> {
    match task {
        Task::Kalman => {
            let op = &config.operator;
            let spec = OperatorSpec::new(op.b.clone(), op.q.clone(), op.time_dependent)?;
            let result = kalman_index(&spec);
            let section = match &result {
                Ok(r) => {
                    let est = coercivity_estimate(&iterated_directions(&spec), *r, config.build.coercivity_samples);
                    KalmanSection {
                        rank_ok: true,
                        r: Some(*r),
                        c0_estimate: Some(est.sampled_min),
                        gram_min_eigenvalue: Some(est.gram_min_eigenvalue),
                    }
                }
                Err(_) => KalmanSection {
                    rank_ok: false,
                    r: None,
                    c0_estimate: None,
                    gram_min_eigenvalue: None,
                },
            };
            report.kalman = Some(section);
            state.r = Some(result?);
            state.spec = Some(spec);
        }
        Task::Exponents => {
            let r = state.r.expect("kalman ran");
            if config.exponents.r != r {
                return Err(Error::Precondition(format!(
                    "exponents are given for r = {} but the Kalman index is {r}",
                    config.exponents.r
                )));
            }
            let chain = exponent_chain(&config.exponents)?;
            report.exponent_chain = Some(chain.clone());
            state.chain = Some(chain);
        }
        Task::Build => {
            let spec = state.spec.as_ref().expect("kalman ran");
            let chain = state.chain.as_ref().expect("exponents ran");
            let a = assemble_full_multiplier(spec, &config.exponents, chain, &config.pointwise, &build_options(config))?;
            report.build = Some(BuildSection {
                r: a.r,
                description: a.g.description(),
                weights: a
                    .components
                    .iter()
                    .zip(&a.weights)
                    .map(|((name, _), w)| (name.clone(), *w))
                    .collect::<BTreeMap<_, _>>(),
                levels: a.levels.clone(),
                basic_case_radius: a.r0,
                particular_gamma: None,
            });
            report.gamma_schedule = Some(a.schedule.clone());
            state.assembled = Some(a);
        }
        Task::VerifyPointwise => {
            let a = state.assembled.as_ref().expect("build ran");
            report.certificates.extend(a.certificates.iter().cloned());
            if let Some(lead) = &a.lead {
                report.certificates.extend(lemma_derivative_bounds(
                    lead,
                    a.ladder.as_deref(),
                    &config.pointwise,
                    config.build.constant_cap,
                )?);
            }
            if let Some(p) = &config.particular {
                let e = &config.exponents;
                if e.r != 2 {
                    return Err(Error::Precondition("the two-step chain needs r = 2".into()));
                }
                let pe = ParticularExponents::new(e.lambda0, e.q[0], e.q[1], e.s[0], e.s[1])?;
                let (_, rep) = verify_particular_chain(
                    &pe,
                    &config.cutoffs,
                    p.n_block,
                    &config.pointwise,
                    &p.gamma_search,
                    config.build.constant_cap,
                )?;
                if let Some(b) = report.build.as_mut() {
                    b.particular_gamma = Some(rep.gamma);
                }
                report.particular = Some(rep);
            }
        }
        Task::VerifySpectral => {
            let spec = state.spec.as_ref().expect("kalman ran");
            let chain = state.chain.as_ref().expect("exponents ran");
            let a = state.assembled.as_ref().expect("build ran");
            let s = config.spectral.as_ref().expect("validated");
            let g: &dyn Symbol = match (s.commutator_symbol, &a.lead) {
                (CommutatorSymbol::Lead, Some(lead)) => lead.as_ref(),
                _ => a.g.as_ref(),
            };
            let commutator = if s.commutator_members > 0 {
                let smooth = s.test_functions.smooth();
                let src = EnsembleSource::generated(&smooth, s.commutator_members);
                Some(commutator_identity_check(spec, &s.grid, g, src)?)
            } else {
                None
            };
            let estimates = if s.estimates.is_empty() {
                Vec::new()
            } else {
                let src = EnsembleSource::generated(&s.test_functions, s.estimate_members);
                measure_estimates(spec, &s.grid, &config.exponents, chain, src, &s.estimates)?
            };
            report.spectral = Some(SpectralSection {
                convention: FREQUENCY_CONVENTION.into(),
                commutator,
                estimates,
            });
        }
    }
    Ok(())
}

//! Named run configurations.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CommutatorSymbol, ParticularConfig, RunConfig, SpectralConfig, Task};
use crate::cutoff::CutoffSpec;
use crate::error::{Error, Result};
use crate::exponents::ExponentInput;
use crate::kalman::{kalman_index, OperatorSpec};
use crate::multiplier::particular::GammaSearch;
use crate::multiplier::{BuildOptions, PointwiseRegion};
use crate::spectral::{EstimateKind, SpectralGrid, TestFunctionSpec};

/// Seed of the `random-controllable` operator draw.
pub const RANDOM_PRESET_SEED: u64 = 7;

const NAMES: [&str; 5] = [
    "kinetic-autonomous",
    "kinetic-time-dependent",
    "chain-3-block",
    "full-rank-Q",
    "random-controllable",
];

pub fn preset_names() -> &'static [&'static str] {
    &NAMES
}

fn spec(b: DMatrix<f64>, q: DMatrix<f64>, time_dependent: bool) -> OperatorSpec {
    OperatorSpec::new(b, q, time_dependent).expect("preset operator is valid")
}

fn base(name: &str, operator: OperatorSpec, exponents: ExponentInput) -> RunConfig {
    RunConfig {
        name: name.into(),
        operator,
        exponents,
        cutoffs: CutoffSpec::default(),
        build: BuildOptions::default(),
        pointwise: PointwiseRegion::default(),
        particular: None,
        spectral: None,
        tasks: Task::ALL.to_vec(),
        output_dir: None,
    }
}

fn spectral(space_dim: usize, time_axis: bool, n: usize, estimates: Vec<EstimateKind>, members: usize) -> SpectralConfig {
    SpectralConfig {
        grid: SpectralGrid::new(space_dim, time_axis, n, 16.0).expect("preset grid is valid"),
        test_functions: TestFunctionSpec::default(),
        commutator_members: 20,
        commutator_symbol: CommutatorSymbol::Lead,
        estimate_members: members,
        estimates,
    }
}

fn kinetic(time_dependent: bool) -> RunConfig {
    let name = if time_dependent {
        "kinetic-time-dependent"
    } else {
        "kinetic-autonomous"
    };
    let op = spec(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        time_dependent,
    );
    let mut cfg = base(name, op, ExponentInput::zero(1.0, 1).expect("valid exponents"));
    cfg.spectral = Some(if time_dependent {
        spectral(2, true, 64, vec![EstimateKind::KineticExample], 50)
    } else {
        spectral(
            2,
            false,
            128,
            vec![EstimateKind::KineticExample, EstimateKind::MainEstimate],
            200,
        )
    });
    cfg
}

fn chain() -> RunConfig {
    let op = spec(
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        false,
    );
    let mut cfg = base("chain-3-block", op, ExponentInput::zero(1.0, 2).expect("valid exponents"));
    cfg.pointwise = PointwiseRegion {
        n_radial: 48,
        n_angular: 256,
        aniso_levels: 8,
        ..PointwiseRegion::default()
    };
    cfg.particular = Some(ParticularConfig {
        n_block: 1,
        gamma_search: GammaSearch::default(),
    });
    cfg.spectral = Some(spectral(
        3,
        false,
        64,
        vec![
            EstimateKind::ChainFirstStep,
            EstimateKind::ChainSecondStep,
            EstimateKind::MainEstimate,
        ],
        50,
    ));
    cfg
}

fn full_rank() -> RunConfig {
    let op = spec(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
        DMatrix::identity(2, 2),
        false,
    );
    let mut cfg = base("full-rank-Q", op, ExponentInput::zero(1.0, 0).expect("valid exponents"));
    cfg.spectral = Some(spectral(2, false, 64, vec![EstimateKind::MainEstimate], 50));
    cfg
}

/// Controllable `(B, Q)` in dimension 4 with `Q` of rank one, drawn from
/// [`RANDOM_PRESET_SEED`]. Entries are rounded to two decimals so the JSON
/// form is exact.
pub fn random_controllable_operator(seed: u64) -> OperatorSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 4;
    loop {
        let b = DMatrix::from_fn(n, n, |_, _| (rng.gen_range(-1.0f64..1.0) * 100.0).round() / 100.0);
        let mut q = DMatrix::zeros(n, n);
        q[(0, 0)] = 1.0;
        let op = spec(b, q, false);
        if kalman_index(&op).is_ok() {
            return op;
        }
    }
}

fn random() -> RunConfig {
    let op = random_controllable_operator(RANDOM_PRESET_SEED);
    let r = kalman_index(&op).expect("drawn operator is controllable");
    let mut cfg = base("random-controllable", op, ExponentInput::zero(1.0, r).expect("valid exponents"));
    cfg.pointwise = PointwiseRegion {
        r_max: 1e3,
        n_radial: 24,
        n_angular: 512,
        aniso_levels: 3,
        ..PointwiseRegion::default()
    };
    cfg.tasks = vec![Task::Kalman, Task::Exponents, Task::Build, Task::VerifyPointwise];
    cfg
}

pub fn preset(name: &str) -> Result<RunConfig> {
    match name {
        "kinetic-autonomous" => Ok(kinetic(false)),
        "kinetic-time-dependent" => Ok(kinetic(true)),
        "chain-3-block" => Ok(chain()),
        "full-rank-Q" => Ok(full_rank()),
        "random-controllable" => Ok(random()),
        _ => Err(Error::Config(format!(
            "unknown preset '{name}', expected one of {}",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_kalman_indices() {
        let r = |n: &str| kalman_index(&preset(n).unwrap().operator).unwrap();
        assert_eq!(r("kinetic-autonomous"), 1);
        assert_eq!(r("kinetic-time-dependent"), 1);
        assert_eq!(r("chain-3-block"), 2);
        assert_eq!(r("full-rank-Q"), 0);
        let rc = preset("random-controllable").unwrap();
        assert_eq!(rc.exponents.r, r("random-controllable"));
    }

    #[test]
    fn presets_validate() {
        for n in preset_names() {
            preset(n).unwrap().validate().unwrap();
        }
    }
}

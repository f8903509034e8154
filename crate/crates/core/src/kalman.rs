//! Kalman rank condition, Kalman index and the iterated directions `Q(B^T)^j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling;

/// Relative singular-value threshold used for numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Matrices `B`, `Q` defining `L = ∂_t + Bx·∇_x` (or `Bx·∇_x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(with = "matrix_rows")]
    pub b: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub q: DMatrix<f64>,
    pub time_dependent: bool,
}

impl OperatorSpec {
    /// Validates shapes, symmetry and positive semidefiniteness of `Q`.
    pub fn new(b: DMatrix<f64>, q: DMatrix<f64>, time_dependent: bool) -> Result<Self> {
        let n = b.nrows();
        if n == 0 {
            return Err(Error::InvalidOperator("dimension must be positive".into()));
        }
        if b.ncols() != n || q.nrows() != n || q.ncols() != n {
            return Err(Error::InvalidOperator(format!(
                "B is {}x{}, Q is {}x{}",
                b.nrows(),
                b.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        if b.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        let qmax = q.amax();
        let asym = (&q - q.transpose()).amax();
        if asym > SYMMETRY_TOL * qmax.max(1.0) {
            return Err(Error::InvalidOperator(format!(
                "Q is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let sym = (&q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lo = eig.eigenvalues.min();
        let spec_norm = eig.eigenvalues.amax();
        if lo < -PSD_TOL * spec_norm {
            return Err(Error::InvalidOperator(format!(
                "Q is not positive semidefinite (smallest eigenvalue {lo:e})"
            )));
        }
        Ok(Self { b, q, time_dependent })
    }

    /// Builds a spec from row-major nested arrays.
    pub fn from_rows(b: &[Vec<f64>], q: &[Vec<f64>], time_dependent: bool) -> Result<Self> {
        Self::new(rows_to_matrix(b)?, rows_to_matrix(q)?, time_dependent)
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn trace_b(&self) -> f64 {
        self.b.trace()
    }
}

pub(crate) fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidOperator("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        super::matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::rows_to_matrix(&rows).map_err(D::Error::custom)
    }
}

/// `[Q, QB^T, ..., Q(B^T)^{n-1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedDirections {
    pub mats: Vec<DMatrix<f64>>,
    pub rank_tol: f64,
}

pub fn iterated_directions(spec: &OperatorSpec) -> IteratedDirections {
    IteratedDirections {
        mats: direction_powers(spec, spec.dim() - 1),
        rank_tol: DEFAULT_RANK_TOL,
    }
}

/// `Q(B^T)^j` for `j = 0..=jmax`, with `jmax` allowed to exceed `n - 1`.
pub fn direction_powers(spec: &OperatorSpec, jmax: usize) -> Vec<DMatrix<f64>> {
    let bt = spec.b.transpose();
    let mut mats = Vec::with_capacity(jmax + 1);
    mats.push(spec.q.clone());
    for j in 0..jmax {
        let next = &mats[j] * &bt;
        mats.push(next);
    }
    mats
}

fn stack(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = mats[0].ncols();
    let rows: usize = mats.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(rows, n);
    let mut off = 0;
    for m in mats {
        out.view_mut((off, 0), (m.nrows(), n)).copy_from(m);
        off += m.nrows();
    }
    out
}

/// Number of singular values above `tol · σ_1`; zero for the zero matrix.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let s1 = sv.max();
    if s1 <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * s1).count()
}

impl IteratedDirections {
    pub fn dim(&self) -> usize {
        self.mats[0].ncols()
    }

    /// Rank of the stacked prefix `[Q; ...; Q(B^T)^j]`.
    pub fn prefix_rank(&self, j: usize) -> usize {
        numerical_rank(&stack(&self.mats[..=j]), self.rank_tol)
    }

    /// Gram sum `Σ_{j≤r} mats[j]^T mats[j]`.
    pub fn gram_sum(&self, r: usize) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for m in &self.mats[..=r] {
            g += m.transpose() * m;
        }
        g
    }
}

pub fn kalman_rank_holds(spec: &OperatorSpec) -> bool {
    let dirs = iterated_directions(spec);
    dirs.prefix_rank(dirs.mats.len() - 1) == spec.dim()
}

/// Smallest `r` with `Ker Q ∩ ... ∩ Ker Q(B^T)^r = {0}`.
pub fn kalman_index(spec: &OperatorSpec) -> Result<usize> {
    let dirs = iterated_directions(spec);
    let n = spec.dim();
    for j in 0..n {
        if dirs.prefix_rank(j) == n {
            return Ok(j);
        }
    }
    Err(Error::NotControllable {
        rank: dirs.prefix_rank(n - 1),
        dim: n,
    })
}

/// Sampled and spectral lower bounds for `Σ_{j≤r}|Q(B^T)^jξ|²` on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityEstimate {
    pub sampled_min: f64,
    pub gram_min_eigenvalue: f64,
    pub samples: usize,
}

pub fn coercivity_estimate(dirs: &IteratedDirections, r: usize, samples: usize) -> CoercivityEstimate {
    let r = r.min(dirs.mats.len() - 1);
    let n = dirs.dim();
    let gram = dirs.gram_sum(r);
    let eig = SymmetricEigen::new(gram.clone());
    let quad = |x: &DVector<f64>| {
        let nx = x.norm();
        (x.transpose() * &gram * x)[(0, 0)] / (nx * nx)
    };
    let mut sampled = f64::INFINITY;
    for p in sampling::sphere_points(n, samples) {
        sampled = sampled.min(quad(&DVector::from_vec(p)));
    }
    for k in 0..n {
        sampled = sampled.min(quad(&eig.eigenvectors.column(k).into_owned()));
    }
    CoercivityEstimate {
        sampled_min: sampled.max(0.0),
        gram_min_eigenvalue: eig.eigenvalues.min().max(0.0),
        samples,
    }
}

/// Minimum of `Σ_{j≤r}|Q(B^T)^jξ|²` over sampled unit vectors and Gram eigenvectors.
pub fn directional_coercivity_constant(dirs: &IteratedDirections, r: usize, samples: usize) -> f64 {
    coercivity_estimate(dirs, r, samples).sampled_min
}

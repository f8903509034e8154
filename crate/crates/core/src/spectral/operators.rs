use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::{fft_nd, forward_real, inverse_real};
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use crate::kalman::OperatorSpec;

/// Boundary mass above which `Bx·∇_x u` is not trusted.
pub const TAIL_LIMIT: f64 = 1e-9;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A symbol sampled on the FFT frequencies, `η = 2πξ_k` on the space axes.
/// Entries with Nyquist components average the symbol over the sign flips of
/// those components so the discrete operator maps real fields to real fields.
#[derive(Debug, Clone)]
pub struct MultiplierTable {
    pub values: Vec<f64>,
}

impl MultiplierTable {
    pub fn new<F: Fn(&[f64]) -> f64 + Sync>(grid: &SpectralGrid, symbol: F) -> Self {
        let axes = grid.axes();
        let d = grid.space_dim;
        let values = (0..grid.len())
            .into_par_iter()
            .map_init(
                || (vec![0usize; axes], vec![0.0; d]),
                |(idx, eta), flat| {
                    grid.index(flat, idx);
                    let mut nyq = Vec::new();
                    for i in 0..d {
                        let k = idx[grid.space_axis(i)];
                        eta[i] = TWO_PI * grid.frequency(k);
                        if grid.is_nyquist(k) {
                            nyq.push(i);
                        }
                    }
                    if nyq.is_empty() {
                        return symbol(eta);
                    }
                    let flips = 1usize << nyq.len();
                    let mut acc = 0.0;
                    let mut e = eta.clone();
                    for mask in 0..flips {
                        for (b, &i) in nyq.iter().enumerate() {
                            e[i] = if mask >> b & 1 == 1 { -eta[i] } else { eta[i] };
                        }
                        acc += symbol(&e);
                    }
                    acc / flips as f64
                },
            )
            .collect();
        Self { values }
    }

    pub fn constant(grid: &SpectralGrid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// `m(D_x)u` with `D_x = ∇_x/i`, the symbol evaluated at `2πξ`.
pub fn apply_multiplier<F: Fn(&[f64]) -> f64 + Sync>(grid: &SpectralGrid, u: &[f64], symbol: F) -> Vec<f64> {
    apply_table(grid, u, &MultiplierTable::new(grid, symbol))
}

pub fn apply_table(grid: &SpectralGrid, u: &[f64], table: &MultiplierTable) -> Vec<f64> {
    let mut d = forward_real(u, grid.points_per_axis, grid.axes());
    for (c, m) in d.iter_mut().zip(&table.values) {
        *c *= *m;
    }
    inverse_real(d, grid.points_per_axis, grid.axes())
}

/// `‖m(D_x)u‖` by Parseval from the transform `spectrum` of `u`.
pub fn multiplier_norm(grid: &SpectralGrid, spectrum: &[Complex64], table: &MultiplierTable) -> f64 {
    let s: f64 = spectrum
        .iter()
        .zip(&table.values)
        .map(|(c, m)| m * m * c.norm_sqr())
        .sum();
    (s * grid.cell_volume() / grid.len() as f64).sqrt()
}

/// `‖u‖` on the grid.
pub fn l2_norm(grid: &SpectralGrid, u: &[f64]) -> f64 {
    (u.iter().map(|x| x * x).sum::<f64>() * grid.cell_volume()).sqrt()
}

/// `⟨a, b⟩ = h^d Σ a b`.
pub fn inner(grid: &SpectralGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * grid.cell_volume()
}

/// Grid axes along which `Bx` grows: space axes `j` with a nonzero column of `B`.
pub fn growing_axes(spec: &OperatorSpec, grid: &SpectralGrid) -> Vec<usize> {
    let n = spec.dim();
    (0..n)
        .filter(|&j| (0..n).any(|i| spec.b[(i, j)] != 0.0))
        .map(|j| grid.space_axis(j))
        .collect()
}

/// Fraction of `Σ u²` carried by the seam `x_a = -L/2` of the given axes.
pub fn seam_tail(grid: &SpectralGrid, u: &[f64], axes: &[usize]) -> f64 {
    let total: f64 = u.iter().map(|x| x * x).sum();
    if total == 0.0 || axes.is_empty() {
        return 0.0;
    }
    let mut idx = vec![0usize; grid.axes()];
    let mut seam = 0.0;
    for (flat, x) in u.iter().enumerate() {
        grid.index(flat, &mut idx);
        if axes.iter().any(|&a| idx[a] == 0) {
            seam += x * x;
        }
    }
    seam / total
}

/// Spectral derivative along grid axis `axis`; the Nyquist mode is dropped.
pub fn spectral_derivative(grid: &SpectralGrid, spectrum: &[Complex64], axis: usize) -> Vec<f64> {
    let n = grid.points_per_axis;
    let stride = n.pow((grid.axes() - 1 - axis) as u32);
    let mut d: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(flat, c)| {
            let k = flat / stride % n;
            if grid.is_nyquist(k) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, TWO_PI * grid.frequency(k))
            }
        })
        .collect();
    fft_nd(&mut d, n, grid.axes(), true);
    d.into_iter().map(|c| c.re).collect()
}

/// Parts of `Lu`: the space transport `Bx·∇_x u` and, on time-dependent
/// grids, `∂_t u`.
#[derive(Debug, Clone)]
pub struct TransportParts {
    /// Transform of `u`.
    pub spectrum: Vec<Complex64>,
    pub space: Vec<f64>,
    pub time: Option<Vec<f64>>,
    pub tail: f64,
}

impl TransportParts {
    pub fn total(&self) -> Vec<f64> {
        match &self.time {
            Some(t) => self.space.iter().zip(t).map(|(a, b)| a + b).collect(),
            None => self.space.clone(),
        }
    }
}

pub fn transport_parts(spec: &OperatorSpec, grid: &SpectralGrid, u: &[f64]) -> Result<TransportParts> {
    let n = spec.dim();
    if n != grid.space_dim {
        return Err(Error::Precondition(format!(
            "operator dimension {n} does not match grid space dimension {}",
            grid.space_dim
        )));
    }
    if spec.time_dependent != grid.time_axis {
        return Err(Error::Precondition("time axis of grid and operator disagree".into()));
    }
    if u.len() != grid.len() {
        return Err(Error::Precondition("field length does not match grid".into()));
    }
    let tail = seam_tail(grid, u, &growing_axes(spec, grid));
    if tail > TAIL_LIMIT {
        return Err(Error::TailViolation {
            tail,
            limit: TAIL_LIMIT,
        });
    }
    let spectrum = forward_real(u, grid.points_per_axis, grid.axes());
    let mut space = vec![0.0; u.len()];
    let np = grid.points_per_axis;
    let strides: Vec<usize> = (0..n)
        .map(|j| np.pow((grid.axes() - 1 - grid.space_axis(j)) as u32))
        .collect();
    let coords: Vec<f64> = (0..np).map(|j| grid.coordinate(j)).collect();
    for i in 0..n {
        let row: Vec<(usize, f64)> = (0..n).filter(|&j| spec.b[(i, j)] != 0.0).map(|j| (j, spec.b[(i, j)])).collect();
        if row.is_empty() {
            continue;
        }
        let du = spectral_derivative(grid, &spectrum, grid.space_axis(i));
        for (flat, (s, d)) in space.iter_mut().zip(&du).enumerate() {
            let bx: f64 = row.iter().map(|&(j, b)| b * coords[flat / strides[j] % np]).sum();
            *s += bx * d;
        }
    }
    let time = grid.time_axis.then(|| spectral_derivative(grid, &spectrum, 0));
    Ok(TransportParts {
        spectrum,
        space,
        time,
        tail,
    })
}

/// `Lu = ∂_t u + Bx·∇_x u` (or `Bx·∇_x u`).
pub fn apply_transport(spec: &OperatorSpec, grid: &SpectralGrid, u: &[f64]) -> Result<Vec<f64>> {
    Ok(transport_parts(spec, grid, u)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn gaussian(grid: &SpectralGrid, sigma: f64) -> Vec<f64> {
        let mut idx = vec![0; grid.axes()];
        (0..grid.len())
            .map(|f| {
                grid.index(f, &mut idx);
                let r2: f64 = idx.iter().map(|&j| grid.coordinate(j).powi(2)).sum();
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
            .collect()
    }

    #[test]
    fn identity_multiplier_and_plancherel() {
        let g = SpectralGrid::new(2, false, 32, 16.0).unwrap();
        let u = gaussian(&g, 1.5);
        let v = apply_multiplier(&g, &u, |_| 1.0);
        let err = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-13);
        let spec = forward_real(&u, 32, 2);
        let n = multiplier_norm(&g, &spec, &MultiplierTable::constant(&g, 1.0));
        assert!((n / l2_norm(&g, &u) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn transport_matches_closed_form() {
        let g = SpectralGrid::new(2, true, 32, 16.0).unwrap();
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; 0.0, 0.0], dmatrix![0.0, 0.0; 0.0, 1.0], true).unwrap();
        let u = gaussian(&g, 1.0);
        let lu = apply_transport(&spec, &g, &u).unwrap();
        let mut idx = vec![0; 3];
        for (f, (l, u)) in lu.iter().zip(&u).enumerate() {
            g.index(f, &mut idx);
            let (t, x, v) = (g.coordinate(idx[0]), g.coordinate(idx[1]), g.coordinate(idx[2]));
            let exact = -(t + v * x) * u;
            assert!((l - exact).abs() <= 1e-8, "{l} vs {exact}");
        }
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = SpectralGrid::new(2, false, 16, 16.0).unwrap();
        let spec = OperatorSpec::new(dmatrix![0.0, 0.0; 0.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0], false).unwrap();
        let lu = apply_transport(&spec, &g, &gaussian(&g, 1.0)).unwrap();
        assert!(lu.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn wide_function_trips_tail_guard() {
        let g = SpectralGrid::new(2, false, 16, 16.0).unwrap();
        let spec = OperatorSpec::new(dmatrix![0.0, 1.0; -1.0, 0.0], dmatrix![1.0, 0.0; 0.0, 1.0], false).unwrap();
        assert!(matches!(
            apply_transport(&spec, &g, &gaussian(&g, 4.0)),
            Err(Error::TailViolation { .. })
        ));
    }
}

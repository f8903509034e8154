//! Deterministic direction sets on the unit sphere.

use std::f64::consts::PI;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// `count` quasi-uniform unit vectors in `R^dim`.
///
/// Uniform angles for `dim = 2`, a Fibonacci lattice for `dim = 3` and
/// normalized Halton points of `[-1, 1]^dim` otherwise.
pub fn sphere_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => {
            let mut v = vec![vec![1.0], vec![-1.0]];
            v.truncate(count.max(1));
            v
        }
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * k as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut out = Vec::with_capacity(count);
            let mut k = 1u64;
            while out.len() < count {
                let p: Vec<f64> = (0..dim)
                    .map(|i| 2.0 * radical_inverse(k, PRIMES[i % PRIMES.len()]) - 1.0)
                    .collect();
                k += 1;
                let n = norm(&p);
                if n > 1e-3 {
                    out.push(p.iter().map(|x| x / n).collect());
                }
            }
            out
        }
    }
}

/// Directions resolving anisotropic regimes such as `|ξ_a| ~ |ξ|^θ`.
///
/// One coordinate is pinned at 1, every other coordinate ranges over
/// `{0} ∪ {±10^(-k·decades/(levels-1))}`. Returned vectors are normalized.
pub fn anisotropic_directions(dim: usize, decades: f64, levels: usize) -> Vec<Vec<f64>> {
    if dim < 2 || levels == 0 {
        return Vec::new();
    }
    let step = if levels > 1 {
        decades / (levels - 1) as f64
    } else {
        0.0
    };
    let mut values = vec![0.0];
    for k in 0..levels {
        let m = 10f64.powf(-(k as f64) * step);
        values.push(m);
        values.push(-m);
    }
    let others = dim - 1;
    let combos = values.len().pow(others as u32);
    let mut out = Vec::with_capacity(dim * combos);
    for lead in 0..dim {
        for c in 0..combos {
            let mut rest = c;
            let mut p = vec![0.0; dim];
            p[lead] = 1.0;
            for i in (0..dim).filter(|&i| i != lead) {
                p[i] = values[rest % values.len()];
                rest /= values.len();
            }
            let n = norm(&p);
            out.push(p.iter().map(|x| x / n).collect());
        }
    }
    out
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn sphere_points_are_unit() {
        for dim in 2..6 {
            let pts = sphere_points(dim, 100);
            assert_eq!(pts.len(), 100);
            for p in pts {
                assert!((norm(&p) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fibonacci_points_are_balanced() {
        let pts = sphere_points(3, 2000);
        for axis in 0..3 {
            let mean: f64 = pts.iter().map(|p| p[axis]).sum::<f64>() / 2000.0;
            assert!(mean.abs() < 0.01, "axis {axis} mean {mean}");
        }
    }

    #[test]
    fn anisotropic_directions_count_and_norm() {
        let d = anisotropic_directions(3, 2.0, 3);
        assert_eq!(d.len(), 3 * 49);
        assert!(d.iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }
}

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place n-D FFT of row-major `data` with equal-length axes. The inverse
/// is normalized by `1/len`.
pub fn fft_nd(data: &mut [Complex64], n: usize, axes: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    let total = data.len();
    plan.process_with_scratch(data, &mut scratch);
    let mut block = Vec::new();
    for axis in 0..axes.saturating_sub(1) {
        let stride = n.pow((axes - 1 - axis) as u32);
        let size = stride * n;
        block.resize(size, Complex64::new(0.0, 0.0));
        for base in (0..total).step_by(size) {
            let chunk = &mut data[base..base + size];
            for j in 0..n {
                for o in 0..stride {
                    block[o * n + j] = chunk[j * stride + o];
                }
            }
            plan.process_with_scratch(&mut block, &mut scratch);
            for j in 0..n {
                for o in 0..stride {
                    chunk[j * stride + o] = block[o * n + j];
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        for c in data.iter_mut() {
            *c *= s;
        }
    }
}

pub fn forward_real(u: &[f64], n: usize, axes: usize) -> Vec<Complex64> {
    let mut d: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_nd(&mut d, n, axes, false);
    d
}

pub fn inverse_real(mut d: Vec<Complex64>, n: usize, axes: usize) -> Vec<f64> {
    fft_nd(&mut d, n, axes, true);
    d.into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_delta() {
        let n = 8;
        let u: Vec<f64> = (0..n * n).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let back = inverse_real(forward_real(&u, n, 2), n, 2);
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut delta = vec![0.0; n * n];
        delta[0] = 1.0;
        assert!(forward_real(&delta, n, 2).iter().all(|c| (c.re - 1.0).abs() < 1e-15 && c.im.abs() < 1e-15));
    }

    #[test]
    fn single_mode_lands_on_its_bin() {
        let n = 16;
        let u: Vec<f64> = (0..n * n)
            .map(|i| (2.0 * std::f64::consts::PI * 3.0 * (i % n) as f64 / n as f64).cos())
            .collect();
        let d = forward_real(&u, n, 2);
        let mag = |i: usize| d[i].norm();
        assert!((mag(3) - (n * n) as f64 / 2.0).abs() < 1e-9);
        assert!(mag(1) < 1e-9 && mag(3 * n) < 1e-9);
    }
}

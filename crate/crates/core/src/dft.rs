//! Non-normalized d-dimensional DFT on `N^d` row-major arrays.
//!
//! `c_k = Σ_n f_n exp(-2πi k·n / N)`; the inverse carries the `N^{-d}` factor.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

fn transform(data: &mut [Complex64], n: usize, d: usize, direction: FftDirection) {
    assert_eq!(data.len(), n.pow(d as u32), "array is not N^d");
    let fft: std::sync::Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft(n, direction);
    let mut line = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

pub fn forward(values: &[Complex64], n: usize, d: usize) -> Vec<Complex64> {
    let mut out = values.to_vec();
    transform(&mut out, n, d, FftDirection::Forward);
    out
}

pub fn forward_real(values: &[f64], n: usize, d: usize) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut out, n, d, FftDirection::Forward);
    out
}

pub fn inverse(coeffs: &[Complex64], n: usize, d: usize) -> Vec<Complex64> {
    let mut out = coeffs.to_vec();
    transform(&mut out, n, d, FftDirection::Inverse);
    let scale = 1.0 / (n as f64).powi(d as i32);
    for v in &mut out {
        *v *= scale;
    }
    out
}

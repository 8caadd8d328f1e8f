//! Orthonormal DCT-II / DCT-III pair used to turn log-mel energies into
//! cepstral coefficients.

use std::f64::consts::PI;

/// Orthonormal DCT-II of `input`, keeping the first `n_out` coefficients.
///
/// `y[0] = sqrt(1/n) * sum(x)`, `y[k] = sqrt(2/n) * sum_j x[j] cos(pi k (2j+1) / 2n)`.
pub fn dct2_ortho(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len();
    assert!(n > 0 && n_out <= n);
    let mut out = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let mut acc = 0.0;
        for (j, &x) in input.iter().enumerate() {
            acc += x * (PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * n as f64)).cos();
        }
        let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        out.push(acc * scale);
    }
    out
}

/// Orthonormal DCT-III (the transpose/inverse of [`dct2_ortho`] at full
/// length).
pub fn dct3_ortho(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    assert!(n > 0);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = input[0] * (1.0 / n as f64).sqrt();
        for (k, &x) in input.iter().enumerate().skip(1) {
            acc += x
                * (2.0 / n as f64).sqrt()
                * (PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * n as f64)).cos();
        }
        out.push(acc);
    }
    out
}

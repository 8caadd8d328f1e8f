//! Per-column feature standardization, fitted on the training split only.

use crate::error::{Error, Result};
use crate::mat::Matrix;

/// Column means and standard deviations (population, floored at 1e-8).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-8;

pub fn standardize_fit(x: &Matrix) -> Result<Standardizer> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Train("cannot fit a standardizer on an empty matrix".into()));
    }
    if !x.is_finite() {
        return Err(Error::Train("non-finite values while fitting standardizer".into()));
    }
    let n = x.rows() as f64;
    let mut means = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (m, &v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for ((var, &v), &m) in vars.iter_mut().zip(x.row(i)).zip(&means) {
            let d = v - m;
            *var += d * d;
        }
    }
    let stds = vars.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
    Ok(Standardizer { means, stds })
}

impl Standardizer {
    /// `(x - mean) / std`, componentwise.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.means.len(), "standardizer dimension mismatch");
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for ((v, &m), &s) in row.iter_mut().zip(&self.means).zip(&self.stds) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }
}

//! RBF-kernel support vector machine trained by sequential minimal
//! optimization, with one-vs-one multiclass voting.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::rng::{derive_seed, seeded_rng, stream};

use super::{check_predict_input, check_training_inputs};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// RBF width; `None` picks `1 / n_features`.
    pub gamma: Option<f64>,
    /// KKT tolerance for the SMO stopping rule.
    pub tol: f64,
    /// Safety bound on outer optimization sweeps per class pair.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, gamma: None, tol: 1e-3, max_passes: 10_000, seed: 0 }
    }
}

/// One soft-margin binary problem: decides `class_pos` (+1) vs `class_neg`
/// (-1). Stores only the support vectors.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub class_pos: usize,
    pub class_neg: usize,
    /// Support vectors, one per row.
    pub support: Matrix,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Largest KKT violation over the pair's training set after SMO.
    pub kkt_residual: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64], gamma: f64) -> f64 {
        let mut acc = self.bias;
        for (i, &c) in self.coef.iter().enumerate() {
            acc += c * rbf(self.support.row(i), x, gamma);
        }
        acc
    }
}

/// One-vs-one multiclass SVM.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub pairs: Vec<BinarySvm>,
    pub c: f64,
    pub gamma: f64,
    n_features: usize,
    n_classes: usize,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// SMO working state for one binary problem.
struct Smo<'a> {
    kernel: &'a [f64],
    n: usize,
    y: &'a [f64],
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
}

const EPS: f64 = 1e-12;

impl<'a> Smo<'a> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.n + j]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;

        let (lo, hi) = if y1 != y2 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a1_old + a2_old - self.c).max(0.0), (a1_old + a2_old).min(self.c))
        };
        if hi - lo < EPS {
            return false;
        }

        let (k11, k12, k22) = (self.k(i1, i1), self.k(i1, i2), self.k(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Degenerate curvature: evaluate the dual objective at both ends.
            let f1 = y1 * (e1 + self.bias) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + self.bias) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let lo_obj = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let hi_obj = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            if lo_obj < hi_obj - EPS {
                lo
            } else if lo_obj > hi_obj + EPS {
                hi
            } else {
                a2_old
            }
        };
        if a2 < EPS {
            a2 = 0.0;
        } else if a2 > self.c - EPS {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < EPS * (a2 + a2_old + EPS) {
            return false;
        }
        let a1 = a1_old + s * (a2_old - a2);

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = b_new - self.bias;

        for i in 0..self.n {
            self.errors[i] += d1 * self.k(i1, i) + d2 * self.k(i2, i) + db;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.bias = b_new;
        true
    }

    fn examine(&mut self, i2: usize, rng: &mut impl Rng) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates = (r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0);
        if !violates {
            return false;
        }

        // Second-choice heuristic: maximize |E1 - E2| over free multipliers.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.n {
            if self.is_free(i) {
                let gap = (self.errors[i] - e2).abs();
                if best.map_or(true, |(_, g)| gap > g) {
                    best = Some((i, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // Fall back to scanning free then all multipliers from random offsets.
        let start = rng.random_range(0..self.n);
        for k in 0..self.n {
            let i1 = (start + k) % self.n;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = rng.random_range(0..self.n);
        for k in 0..self.n {
            let i1 = (start + k) % self.n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// Largest KKT violation at the current solution.
    fn kkt_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let margin = self.y[i] * (self.errors[i] + self.y[i]); // y_i * f(x_i)
            let v = if self.alpha[i] <= 0.0 {
                1.0 - margin
            } else if self.alpha[i] >= self.c {
                margin - 1.0
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }
}

fn train_pair(
    x: &Matrix,
    indices: &[usize],
    y: &[f64],
    class_pos: usize,
    class_neg: usize,
    gamma: f64,
    params: &SvmParams,
    seed: u64,
) -> BinarySvm {
    let n = indices.len();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(x.row(indices[i]), x.row(indices[j]), gamma);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }

    let mut smo = Smo {
        kernel: &kernel,
        n,
        y,
        c: params.c,
        tol: params.tol,
        alpha: vec![0.0; n],
        bias: 0.0,
        errors: y.iter().map(|&v| -v).collect(), // f = 0 initially
    };

    let mut rng = seeded_rng(seed);
    let mut examine_all = true;
    let mut passes = 0;
    loop {
        let mut changed = 0;
        if examine_all {
            for i in 0..n {
                changed += smo.examine(i, &mut rng) as usize;
            }
        } else {
            for i in 0..n {
                if smo.is_free(i) {
                    changed += smo.examine(i, &mut rng) as usize;
                }
            }
        }
        passes += 1;
        if passes >= params.max_passes {
            break;
        }
        if examine_all {
            // A full sweep with no violations means KKT holds within tol.
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let kkt_residual = smo.kkt_residual();
    let mut sv_rows = Vec::new();
    let mut coef = Vec::new();
    for (local, &global) in indices.iter().enumerate() {
        if smo.alpha[local] > 0.0 {
            sv_rows.push(x.row(global).to_vec());
            coef.push(smo.alpha[local] * y[local]);
        }
    }
    BinarySvm {
        class_pos,
        class_neg,
        support: Matrix::from_rows(&sv_rows),
        coef,
        bias: smo.bias,
        kkt_residual,
    }
}

/// Trains one binary SVM per unordered class pair.
pub fn svm_train(x: &Matrix, y: &[usize], params: &SvmParams) -> Result<SvmModel> {
    check_training_inputs(x, y)?;
    if !(params.c > 0.0) {
        return Err(Error::Train("C must be positive".into()));
    }
    let gamma = params.gamma.unwrap_or(1.0 / x.cols() as f64);
    if !(gamma > 0.0) {
        return Err(Error::Train("gamma must be positive".into()));
    }

    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let n_classes = classes.last().unwrap() + 1;

    let mut tasks = Vec::new();
    for (ai, &a) in classes.iter().enumerate() {
        for &b in &classes[ai + 1..] {
            let indices: Vec<usize> =
                (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
            let pair_y: Vec<f64> =
                indices.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
            tasks.push((a, b, indices, pair_y));
        }
    }

    use rayon::prelude::*;
    let pairs: Vec<BinarySvm> = tasks
        .par_iter()
        .enumerate()
        .map(|(pair_idx, (a, b, indices, pair_y))| {
            let seed = derive_seed(params.seed, stream::SVM, pair_idx as u64);
            train_pair(x, indices, pair_y, *a, *b, gamma, params, seed)
        })
        .collect();

    Ok(SvmModel { pairs, c: params.c, gamma, n_features: x.cols(), n_classes })
}

impl SvmModel {
    pub(super) fn from_parts(
        pairs: Vec<BinarySvm>,
        c: f64,
        gamma: f64,
        n_features: usize,
        n_classes: usize,
    ) -> Self {
        Self { pairs, c, gamma, n_features, n_classes }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Per-class pair-vote counts; each row sums to the number of pairs.
    pub fn vote_scores(&self, x: &Matrix) -> Result<Vec<Vec<u32>>> {
        check_predict_input(x, self.n_features)?;
        Ok((0..x.rows()).map(|i| self.votes_one(x.row(i)).0).collect())
    }

    fn votes_one(&self, row: &[f64]) -> (Vec<u32>, Vec<f64>) {
        let mut votes = vec![0u32; self.n_classes];
        let mut strength = vec![0.0; self.n_classes];
        for pair in &self.pairs {
            let f = pair.decision(row, self.gamma);
            if f > 0.0 {
                votes[pair.class_pos] += 1;
            } else {
                votes[pair.class_neg] += 1;
            }
            strength[pair.class_pos] += f;
            strength[pair.class_neg] -= f;
        }
        (votes, strength)
    }

    fn predict_one(&self, row: &[f64]) -> usize {
        let (votes, strength) = self.votes_one(row);
        let top = *votes.iter().max().unwrap();
        // Vote ties break toward the larger summed decision magnitude,
        // then toward the lower class index.
        let mut best: Option<usize> = None;
        for c in 0..self.n_classes {
            if votes[c] == top && best.map_or(true, |b| strength[c] > strength[b]) {
                best = Some(c);
            }
        }
        best.unwrap()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        check_predict_input(x, self.n_features)?;
        Ok((0..x.rows()).map(|i| self.predict_one(x.row(i))).collect())
    }

    /// Vote fractions nudged by an infinitesimal margin-strength term so the
    /// row argmax always agrees with [`SvmModel::predict`]'s tie-break. Not
    /// calibrated probabilities.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        check_predict_input(x, self.n_features)?;
        let n_pairs = self.pairs.len() as f64;
        let mut out = Matrix::zeros(x.rows(), self.n_classes);
        for i in 0..x.rows() {
            let (votes, strength) = self.votes_one(x.row(i));
            // Stable softmax maps strengths into (0, 1).
            let smax = strength.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = strength.iter().map(|&s| (s - smax).exp()).collect();
            let esum: f64 = exps.iter().sum();
            const NUDGE: f64 = 1e-9;
            let total = n_pairs + NUDGE;
            let row = out.row_mut(i);
            for c in 0..self.n_classes {
                row[c] = (votes[c] as f64 + NUDGE * exps[c] / esum) / total;
            }
        }
        Ok(out)
    }

    /// Largest per-pair KKT violation recorded at the end of training.
    pub fn max_kkt_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.kkt_residual).fold(0.0, f64::max)
    }
}

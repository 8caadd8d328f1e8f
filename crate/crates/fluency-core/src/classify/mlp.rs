//! Two-hidden-layer perceptron (ReLU, softmax) trained with mini-batch Adam
//! on mean cross-entropy.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::rng::{derive_seed, seeded_rng, stream};

use super::{argmax, check_predict_input, check_training_inputs};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub hidden: (usize, usize),
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: (512, 512),
            epochs: 200,
            batch: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

/// One dense layer: weights are `fan_in x fan_out`, biases start at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Matrix,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MlpModel {
    /// `d -> hidden.0 -> hidden.1 -> n_classes`; ReLU between hidden layers,
    /// softmax on the output.
    pub layers: Vec<Dense>,
    n_features: usize,
    n_classes: usize,
    /// Mean training cross-entropy per epoch.
    pub train_loss: Vec<f64>,
}

/// Analytic gradients for every parameter, same shapes as the layers.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub dw: Vec<Matrix>,
    pub db: Vec<Vec<f64>>,
}

/// `out = x * w + b`, with rows of `x` as samples.
fn affine(x: &Matrix, layer: &Dense, out: &mut Matrix) {
    debug_assert_eq!(x.cols(), layer.w.rows());
    for i in 0..x.rows() {
        let out_row = out.row_mut(i);
        out_row.copy_from_slice(&layer.b);
        for (k, &a) in x.row(i).iter().enumerate() {
            if a != 0.0 {
                for (o, &wv) in out_row.iter_mut().zip(layer.w.row(k)) {
                    *o += a * wv;
                }
            }
        }
    }
}

fn relu_in_place(m: &mut Matrix) {
    for v in m.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Row-wise stable softmax.
fn softmax_in_place(m: &mut Matrix) {
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

struct Activations {
    h1: Matrix,
    h2: Matrix,
    probs: Matrix,
}

fn forward(layers: &[Dense], x: &Matrix) -> Activations {
    let m = x.rows();
    let mut h1 = Matrix::zeros(m, layers[0].w.cols());
    affine(x, &layers[0], &mut h1);
    relu_in_place(&mut h1);
    let mut h2 = Matrix::zeros(m, layers[1].w.cols());
    affine(&h1, &layers[1], &mut h2);
    relu_in_place(&mut h2);
    let mut probs = Matrix::zeros(m, layers[2].w.cols());
    affine(&h2, &layers[2], &mut probs);
    softmax_in_place(&mut probs);
    Activations { h1, h2, probs }
}

fn cross_entropy(probs: &Matrix, y: &[usize]) -> f64 {
    let mut loss = 0.0;
    for (i, &label) in y.iter().enumerate() {
        loss -= probs.get(i, label).max(1e-15).ln();
    }
    loss / y.len() as f64
}

/// `dw += a^T * delta`, `db += column sums of delta`.
fn accumulate_layer_grads(a: &Matrix, delta: &Matrix, dw: &mut Matrix, db: &mut [f64]) {
    for i in 0..a.rows() {
        let d_row = delta.row(i);
        for (g, &dv) in db.iter_mut().zip(d_row) {
            *g += dv;
        }
        for (k, &av) in a.row(i).iter().enumerate() {
            if av != 0.0 {
                for (g, &dv) in dw.row_mut(k).iter_mut().zip(d_row) {
                    *g += av * dv;
                }
            }
        }
    }
}

/// `prev[i][k] = (delta[i] . w[k]) * relu'(act[i][k])`.
fn backprop_delta(delta: &Matrix, w: &Matrix, act: &Matrix, prev: &mut Matrix) {
    for i in 0..delta.rows() {
        let d_row = delta.row(i);
        let a_row = act.row(i);
        let p_row = prev.row_mut(i);
        for k in 0..w.rows() {
            p_row[k] = if a_row[k] > 0.0 {
                w.row(k).iter().zip(d_row).map(|(wv, dv)| wv * dv).sum()
            } else {
                0.0
            };
        }
    }
}

/// Full backward pass: mean cross-entropy loss and gradients for `x`, `y`.
fn loss_and_gradients(layers: &[Dense], x: &Matrix, y: &[usize]) -> (f64, MlpGradients) {
    let m = x.rows();
    let acts = forward(layers, x);
    let loss = cross_entropy(&acts.probs, y);

    // Softmax + cross-entropy: delta = (p - onehot) / m.
    let mut delta3 = acts.probs.clone();
    for (i, &label) in y.iter().enumerate() {
        let row = delta3.row_mut(i);
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v /= m as f64;
        }
    }

    let mut dw = vec![
        Matrix::zeros(layers[0].w.rows(), layers[0].w.cols()),
        Matrix::zeros(layers[1].w.rows(), layers[1].w.cols()),
        Matrix::zeros(layers[2].w.rows(), layers[2].w.cols()),
    ];
    let mut db = vec![
        vec![0.0; layers[0].b.len()],
        vec![0.0; layers[1].b.len()],
        vec![0.0; layers[2].b.len()],
    ];

    accumulate_layer_grads(&acts.h2, &delta3, &mut dw[2], &mut db[2]);
    let mut delta2 = Matrix::zeros(m, layers[1].w.cols());
    backprop_delta(&delta3, &layers[2].w, &acts.h2, &mut delta2);

    accumulate_layer_grads(&acts.h1, &delta2, &mut dw[1], &mut db[1]);
    let mut delta1 = Matrix::zeros(m, layers[0].w.cols());
    backprop_delta(&delta2, &layers[1].w, &acts.h1, &mut delta1);

    accumulate_layer_grads(x, &delta1, &mut dw[0], &mut db[0]);

    (loss, MlpGradients { dw, db })
}

struct AdamState {
    mw: Vec<Vec<f64>>,
    vw: Vec<Vec<f64>>,
    mb: Vec<Vec<f64>>,
    vb: Vec<Vec<f64>>,
    t: i32,
}

fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    p: &MlpParams,
    bc1: f64,
    bc2: f64,
) {
    for (((pv, &gv), mv), vv) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut())
    {
        *mv = p.beta1 * *mv + (1.0 - p.beta1) * gv;
        *vv = p.beta2 * *vv + (1.0 - p.beta2) * gv * gv;
        let mhat = *mv / bc1;
        let vhat = *vv / bc2;
        *pv -= p.lr * mhat / (vhat.sqrt() + p.eps);
    }
}

/// He-uniform initialized layers: `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
/// zero biases.
fn init_layers(dims: &[usize], seed: u64) -> Vec<Dense> {
    use rand::Rng;
    let mut rng = seeded_rng(derive_seed(seed, stream::MLP_INIT, 0));
    dims.windows(2)
        .map(|io| {
            let (fan_in, fan_out) = (io[0], io[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut w = Matrix::zeros(fan_in, fan_out);
            for v in w.data_mut() {
                *v = rng.random_range(-limit..limit);
            }
            Dense { w, b: vec![0.0; fan_out] }
        })
        .collect()
}

/// Trains the network by mini-batch Adam; epoch order is reshuffled from a
/// seeded stream, so training is bit-deterministic.
pub fn mlp_train(x: &Matrix, y: &[usize], params: &MlpParams) -> Result<MlpModel> {
    check_training_inputs(x, y)?;
    if params.batch == 0 || params.epochs == 0 {
        return Err(Error::Train("batch size and epochs must be positive".into()));
    }
    if !(params.lr >= 0.0) {
        return Err(Error::Train("learning rate must be non-negative".into()));
    }
    let n_classes = y.iter().max().unwrap() + 1;
    let dims = [x.cols(), params.hidden.0, params.hidden.1, n_classes];
    let mut layers = init_layers(&dims, params.seed);

    let mut adam = AdamState {
        mw: layers.iter().map(|l| vec![0.0; l.w.data().len()]).collect(),
        vw: layers.iter().map(|l| vec![0.0; l.w.data().len()]).collect(),
        mb: layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        vb: layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        t: 0,
    };

    let n = x.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = seeded_rng(derive_seed(params.seed, stream::MLP_SHUFFLE, 0));
    let mut train_loss = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(params.batch) {
            let batch_x = x.select_rows(chunk);
            let batch_y: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grads) = loss_and_gradients(&layers, &batch_x, &batch_y);
            epoch_loss += loss * chunk.len() as f64;

            adam.t += 1;
            let bc1 = 1.0 - params.beta1.powi(adam.t);
            let bc2 = 1.0 - params.beta2.powi(adam.t);
            for (l, layer) in layers.iter_mut().enumerate() {
                adam_update(
                    layer.w.data_mut(),
                    grads.dw[l].data(),
                    &mut adam.mw[l],
                    &mut adam.vw[l],
                    params,
                    bc1,
                    bc2,
                );
                adam_update(
                    &mut layer.b,
                    &grads.db[l],
                    &mut adam.mb[l],
                    &mut adam.vb[l],
                    params,
                    bc1,
                    bc2,
                );
            }
        }
        train_loss.push(epoch_loss / n as f64);
    }

    Ok(MlpModel { layers, n_features: x.cols(), n_classes, train_loss })
}

impl MlpModel {
    /// Builds an untrained network (He-uniform weights, zero biases);
    /// used for gradient checking and symmetry tests.
    pub fn untrained(d: usize, hidden: (usize, usize), n_classes: usize, seed: u64) -> Self {
        let dims = [d, hidden.0, hidden.1, n_classes];
        Self {
            layers: init_layers(&dims, seed),
            n_features: d,
            n_classes,
            train_loss: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// True when training never reduced the loss (final >= initial, up to
    /// summation-order noise).
    pub fn convergence_warning(&self) -> bool {
        match (self.train_loss.first(), self.train_loss.last()) {
            (Some(first), Some(last)) => *last >= first - 1e-12 * first.abs().max(1.0),
            _ => false,
        }
    }

    /// Mean cross-entropy of the current weights on `(x, y)`.
    pub fn training_loss(&self, x: &Matrix, y: &[usize]) -> f64 {
        cross_entropy(&forward(&self.layers, x).probs, y)
    }

    /// Mean cross-entropy plus analytic gradients; the quantity the
    /// finite-difference oracle checks.
    pub fn loss_gradients(&self, x: &Matrix, y: &[usize]) -> (f64, MlpGradients) {
        loss_and_gradients(&self.layers, x, y)
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        check_predict_input(x, self.n_features)?;
        Ok(forward(&self.layers, x).probs)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let probs = self.predict_proba(x)?;
        Ok((0..probs.rows()).map(|i| argmax(probs.row(i))).collect())
    }

    pub fn from_parts(layers: Vec<Dense>, n_features: usize, n_classes: usize) -> Self {
        Self { layers, n_features, n_classes, train_loss: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::testutil::blobs;

    fn small_params() -> MlpParams {
        MlpParams { hidden: (16, 16), epochs: 120, ..Default::default() }
    }

    #[test]
    fn separable_blobs_reach_100_percent_training_accuracy() {
        let (x, y) = blobs(&[vec![0.0, 0.0], vec![1.0, 1.0]], 0.15, 40, 8);
        let model = mlp_train(&x, &y, &small_params()).unwrap();
        assert_eq!(model.predict(&x).unwrap(), y);
        assert!(
            model.train_loss.last().unwrap() < model.train_loss.first().unwrap(),
            "loss did not decrease: {:?}",
            model.train_loss
        );
        assert!(!model.convergence_warning());
    }

    #[test]
    fn zero_input_gives_uniform_probabilities_at_init() {
        let model = MlpModel::untrained(23, (8, 8), 3, 1);
        let x = Matrix::zeros(1, 23);
        let probs = model.predict_proba(&x).unwrap();
        for c in 0..3 {
            assert!((probs.get(0, c) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        // Small network, every parameter, 5-sample batch.
        let (x, y) = blobs(&[vec![0.2; 6], vec![-0.2; 6]], 0.5, 3, 14);
        let x = x.select_rows(&[0, 1, 2, 3, 4]);
        let y = &y[..5];
        let mut model = MlpModel::untrained(6, (5, 4), 3, 99);
        let (_, grads) = model.loss_gradients(&x, y);

        let eps = 1e-5;
        for l in 0..3 {
            for idx in 0..model.layers[l].w.data().len() {
                let orig = model.layers[l].w.data()[idx];
                model.layers[l].w.data_mut()[idx] = orig + eps;
                let up = model.training_loss(&x, y);
                model.layers[l].w.data_mut()[idx] = orig - eps;
                let down = model.training_loss(&x, y);
                model.layers[l].w.data_mut()[idx] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.dw[l].data()[idx];
                let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
                assert!(rel < 1e-4, "layer {l} weight {idx}: {analytic} vs {numeric}");
            }
            for idx in 0..model.layers[l].b.len() {
                let orig = model.layers[l].b[idx];
                model.layers[l].b[idx] = orig + eps;
                let up = model.training_loss(&x, y);
                model.layers[l].b[idx] = orig - eps;
                let down = model.training_loss(&x, y);
                model.layers[l].b[idx] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads.db[l][idx];
                let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
                assert!(rel < 1e-4, "layer {l} bias {idx}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn probabilities_stay_on_the_simplex() {
        use rand::Rng;
        let (x, y) = blobs(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.5, 0.2]], 0.4, 30, 3);
        let model = mlp_train(&x, &y, &small_params()).unwrap();
        let mut rng = crate::rng::seeded_rng(55);
        let random_rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let probes = Matrix::from_rows(&random_rows);
        let probs = model.predict_proba(&probes).unwrap();
        let pred = model.predict(&probes).unwrap();
        for i in 0..probes.rows() {
            let row = probs.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&p| p >= 0.0));
            assert_eq!(argmax(row), pred[i]);
        }
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let (x, y) = blobs(&[vec![0.0, 0.0], vec![0.7, 0.7]], 0.3, 25, 6);
        let params = MlpParams { hidden: (8, 8), epochs: 10, seed: 42, ..Default::default() };
        let a = mlp_train(&x, &y, &params).unwrap();
        let b = mlp_train(&x, &y, &params).unwrap();
        assert_eq!(a.layers, b.layers);
        assert_eq!(a.train_loss, b.train_loss);
    }

    #[test]
    fn zero_learning_rate_raises_the_convergence_warning() {
        let (x, y) = blobs(&[vec![0.0, 0.0], vec![1.0, 1.0]], 0.2, 10, 3);
        let params = MlpParams { hidden: (4, 4), epochs: 5, lr: 0.0, ..Default::default() };
        let model = mlp_train(&x, &y, &params).unwrap();
        assert!(model.convergence_warning());
    }

    #[test]
    fn logits_of_zero_map_to_uniform_softmax() {
        let mut m = Matrix::zeros(1, 3);
        softmax_in_place(&mut m);
        for c in 0..3 {
            assert!((m.get(0, c) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_inputs_error() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(mlp_train(&x, &[1, 1], &small_params()), Err(Error::Train(_))));
        let model = mlp_train(&x, &[0, 1], &MlpParams { hidden: (4, 4), epochs: 2, ..Default::default() })
            .unwrap();
        assert!(matches!(model.predict(&Matrix::zeros(1, 3)), Err(Error::Predict(_))));
    }
}

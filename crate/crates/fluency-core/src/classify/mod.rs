//! From-scratch classifiers behind one train/predict interface.
//!
//! Three models, matching the pipeline's best performers: an RBF-kernel SVM
//! trained by SMO with one-vs-one multiclass voting, a random forest with
//! Gini splits, and a two-hidden-layer MLP trained with Adam. SVM and MLP
//! expect standardized features; trees are scale-free.

mod forest;
mod mlp;
mod serialize;
mod standardize;
mod svm;

pub use forest::{rf_train, ForestModel, RfParams};
pub use mlp::{mlp_train, MlpGradients, MlpModel, MlpParams};
pub use serialize::{load_model, save_model};
pub use standardize::{standardize_fit, Standardizer};
pub use svm::{svm_train, BinarySvm, SvmModel, SvmParams};

use crate::error::{Error, Result};
use crate::mat::Matrix;

/// Model family selector used by the CLI and the evaluation harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Svm,
    Forest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Svm, ModelKind::Forest, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Forest => "rf",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(token: &str) -> Option<ModelKind> {
        match token.to_ascii_lowercase().as_str() {
            "svm" => Some(ModelKind::Svm),
            "rf" | "forest" => Some(ModelKind::Forest),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A trained model of any family, with an optional feature standardizer
/// baked in so prediction sees the same scaling as training.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub standardizer: Option<Standardizer>,
    pub inner: ModelInner,
}

#[derive(Debug, Clone)]
pub enum ModelInner {
    Svm(SvmModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self.inner {
            ModelInner::Svm(_) => ModelKind::Svm,
            ModelInner::Forest(_) => ModelKind::Forest,
            ModelInner::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn n_features(&self) -> usize {
        match &self.inner {
            ModelInner::Svm(m) => m.n_features(),
            ModelInner::Forest(m) => m.n_features(),
            ModelInner::Mlp(m) => m.n_features(),
        }
    }

    pub fn n_classes(&self) -> usize {
        match &self.inner {
            ModelInner::Svm(m) => m.n_classes(),
            ModelInner::Forest(m) => m.n_classes(),
            ModelInner::Mlp(m) => m.n_classes(),
        }
    }

    fn prepared(&self, x: &Matrix) -> Result<Matrix> {
        check_predict_input(x, self.n_features())?;
        Ok(match &self.standardizer {
            Some(s) => s.transform(x),
            None => x.clone(),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let x = self.prepared(x)?;
        match &self.inner {
            ModelInner::Svm(m) => m.predict(&x),
            ModelInner::Forest(m) => m.predict(&x),
            ModelInner::Mlp(m) => m.predict(&x),
        }
    }

    /// Per-class scores on the probability simplex. MLP rows are softmax
    /// outputs, forest rows are tree-vote fractions, SVM rows are pair-vote
    /// fractions (not calibrated probabilities).
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        let x = self.prepared(x)?;
        match &self.inner {
            ModelInner::Svm(m) => m.predict_proba(&x),
            ModelInner::Forest(m) => m.predict_proba(&x),
            ModelInner::Mlp(m) => m.predict_proba(&x),
        }
    }
}

/// Shared training-input validation: non-empty, finite, at least two classes.
fn check_training_inputs(x: &Matrix, y: &[usize]) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Train("empty training matrix".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Train(format!(
            "feature rows ({}) and labels ({}) disagree",
            x.rows(),
            y.len()
        )));
    }
    if !x.is_finite() {
        return Err(Error::Train("non-finite feature values".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    seen.extend(y.iter().copied());
    if seen.len() < 2 {
        return Err(Error::Train("training labels contain a single class".into()));
    }
    Ok(())
}

fn check_predict_input(x: &Matrix, n_features: usize) -> Result<()> {
    if x.cols() != n_features {
        return Err(Error::Predict(format!(
            "feature dimension {} does not match the model's {}",
            x.cols(),
            n_features
        )));
    }
    if !x.is_finite() {
        return Err(Error::Predict("non-finite feature values".into()));
    }
    Ok(())
}

/// Lowest-index argmax, the documented tie-break for probabilities and votes.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

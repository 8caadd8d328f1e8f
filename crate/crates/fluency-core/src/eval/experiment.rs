//! Sweep and ablation harness.
//!
//! Features are extracted once at the widest configuration; narrower
//! configurations are column prefixes of the same matrix (DCT coefficients
//! do not depend on how many are kept, and the extras are appended columns),
//! so every cell of a report sees bit-identical inputs to a direct
//! extraction at its own config. One seeded split is shared by every cell of
//! a repeat, making columns comparable across feature configs.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::classify::{
    mlp_train, rf_train, standardize_fit, svm_train, MlpParams, ModelKind, RfParams,
    Standardizer, SvmParams,
};
use crate::dsp::FeatureConfig;
use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::segment::{build_dataset, Dataset, Manifest};

use super::metrics::{accuracy, confusion, ConfusionMatrix};
use super::split::{split_train_test, Split};

/// Hyperparameters shared by every cell of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub svm_c: f64,
    pub svm_gamma: Option<f64>,
    pub rf_trees: usize,
    pub mlp_hidden: (usize, usize),
    pub mlp_epochs: usize,
    pub mlp_batch: usize,
    pub mlp_lr: f64,
    /// Standardize features for SVM and MLP (never for the forest).
    pub standardize: bool,
    pub stratified: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            svm_c: 1.0,
            svm_gamma: None,
            rf_trees: 100,
            mlp_hidden: (512, 512),
            mlp_epochs: 200,
            mlp_batch: 32,
            mlp_lr: 1e-3,
            standardize: true,
            stratified: false,
        }
    }
}

/// Segment-level features extracted once at the widest config.
pub struct FeatureCache {
    base: Matrix,
    labels: Vec<usize>,
    max_n_mfcc: usize,
    base_config: FeatureConfig,
}

impl FeatureCache {
    /// Extracts the manifest at `max_n_mfcc` MFCCs plus extras.
    pub fn from_manifest(
        manifest: &Manifest,
        config: &FeatureConfig,
        max_n_mfcc: usize,
    ) -> Result<FeatureCache> {
        let base_config =
            FeatureConfig { n_mfcc: max_n_mfcc, include_extras: true, ..config.clone() };
        let dataset = build_dataset(manifest, &base_config)?;
        Ok(Self::from_dataset(&dataset, &base_config))
    }

    /// Wraps an already-extracted dataset (must carry `max + 3` columns).
    pub fn from_dataset(dataset: &Dataset, base_config: &FeatureConfig) -> FeatureCache {
        assert!(base_config.include_extras, "feature cache needs the extras columns");
        assert_eq!(dataset.dim, base_config.dim(), "dataset dim mismatch");
        FeatureCache {
            base: dataset.matrix(),
            labels: dataset.labels(),
            max_n_mfcc: base_config.n_mfcc,
            base_config: base_config.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.base.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.base.rows() == 0
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn max_n_mfcc(&self) -> usize {
        self.max_n_mfcc
    }

    pub fn base_config(&self) -> &FeatureConfig {
        &self.base_config
    }

    /// Feature matrix for a narrower config: the first `n_mfcc` columns plus
    /// (optionally) the trailing ZCR/RMSE/SF columns.
    pub fn features(&self, n_mfcc: usize, extras: bool) -> Result<Matrix> {
        if n_mfcc == 0 || n_mfcc > self.max_n_mfcc {
            return Err(Error::Config(format!(
                "n_mfcc {} outside the cached range 1..={}",
                n_mfcc, self.max_n_mfcc
            )));
        }
        let dim = n_mfcc + if extras { 3 } else { 0 };
        let mut out = Matrix::zeros(self.base.rows(), dim);
        for i in 0..self.base.rows() {
            let src = self.base.row(i);
            let dst = out.row_mut(i);
            dst[..n_mfcc].copy_from_slice(&src[..n_mfcc]);
            if extras {
                dst[n_mfcc..].copy_from_slice(&src[self.max_n_mfcc..]);
            }
        }
        Ok(out)
    }
}

/// Coordinates of one report cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub model: ModelKind,
    pub n_mfcc: usize,
    pub extras: bool,
    pub seed: u64,
}

/// Outcome of one trained-and-scored cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub spec: CellSpec,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub confusion: ConfusionMatrix,
    /// Standardizer the cell fitted (train split only), when one applies.
    pub standardizer: Option<Standardizer>,
}

/// Trains one model on the split's training rows and scores the test rows.
pub fn run_cell(
    x: &Matrix,
    y: &[usize],
    split: &Split,
    spec: CellSpec,
    hyper: &Hyperparams,
) -> Result<CellResult> {
    let x_train = x.select_rows(&split.train);
    let x_test = x.select_rows(&split.test);
    let y_train: Vec<usize> = split.train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<usize> = split.test.iter().map(|&i| y[i]).collect();

    let wants_standardizer = hyper.standardize && spec.model != ModelKind::Forest;
    let standardizer = if wants_standardizer { Some(standardize_fit(&x_train)?) } else { None };
    let (x_train, x_test) = match &standardizer {
        Some(s) => (s.transform(&x_train), s.transform(&x_test)),
        None => (x_train, x_test),
    };

    let started = Instant::now();
    let (predicted, train_seconds) = match spec.model {
        ModelKind::Svm => {
            let params = SvmParams {
                c: hyper.svm_c,
                gamma: hyper.svm_gamma,
                seed: spec.seed,
                ..Default::default()
            };
            let model = svm_train(&x_train, &y_train, &params)?;
            let elapsed = started.elapsed().as_secs_f64();
            (model.predict(&x_test)?, elapsed)
        }
        ModelKind::Forest => {
            let params =
                RfParams { n_estimators: hyper.rf_trees, seed: spec.seed, ..Default::default() };
            let model = rf_train(&x_train, &y_train, &params)?;
            let elapsed = started.elapsed().as_secs_f64();
            (model.predict(&x_test)?, elapsed)
        }
        ModelKind::Mlp => {
            let params = MlpParams {
                hidden: hyper.mlp_hidden,
                epochs: hyper.mlp_epochs,
                batch: hyper.mlp_batch,
                lr: hyper.mlp_lr,
                seed: spec.seed,
                ..Default::default()
            };
            let model = mlp_train(&x_train, &y_train, &params)?;
            let elapsed = started.elapsed().as_secs_f64();
            (model.predict(&x_test)?, elapsed)
        }
    };
    finish_cell(spec, predicted, &y_test, train_seconds, standardizer)
}

fn finish_cell(
    spec: CellSpec,
    predicted: Vec<usize>,
    y_test: &[usize],
    train_seconds: f64,
    standardizer: Option<Standardizer>,
) -> Result<CellResult> {
    let acc = accuracy(&predicted, y_test)
        .map_err(|e| Error::Eval(format!("{} n_mfcc={}: {e}", spec.model, spec.n_mfcc)))?;
    let cm = confusion(&predicted, y_test)?;
    Ok(CellResult { spec, accuracy: acc, train_seconds, confusion: cm, standardizer })
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: ModelKind,
    pub n_mfcc: usize,
    pub extras: bool,
    pub seed: u64,
    pub accuracy: f64,
    pub train_seconds: f64,
}

/// Accuracy table plus confusion matrices and the reproducibility record.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    /// Confusion matrices from the extras cells of the base seed (ablation
    /// reports) or empty (sweep reports).
    pub confusions: Vec<(ModelKind, ConfusionMatrix)>,
    /// Base-seed split, shared by every feature config of that repeat.
    pub split: Split,
    pub seed: u64,
    pub ratio: f64,
    pub n_examples: usize,
    /// `key=value` snapshot of everything that determines the report.
    pub config_snapshot: Vec<(String, String)>,
    /// Per-cell errors; non-empty means the report is partial.
    pub failures: Vec<String>,
}

fn snapshot(
    cache: &FeatureCache,
    models: &[ModelKind],
    ratio: f64,
    seed: u64,
    repeats: usize,
    hyper: &Hyperparams,
    kind: &str,
    detail: String,
) -> Vec<(String, String)> {
    let c = cache.base_config();
    let mut snap = vec![
        ("experiment".into(), kind.into()),
        ("detail".into(), detail),
        ("models".into(), models.iter().map(|m| m.as_str()).collect::<Vec<_>>().join("+")),
        ("n_examples".into(), cache.len().to_string()),
        ("ratio".into(), ratio.to_string()),
        ("seed".into(), seed.to_string()),
        ("repeats".into(), repeats.to_string()),
        ("n_fft".into(), c.n_fft.to_string()),
        ("hop".into(), c.hop.to_string()),
        ("n_mel_filters".into(), c.n_mel_filters.to_string()),
        ("fmin".into(), c.fmin.to_string()),
        ("fmax".into(), c.fmax().to_string()),
        ("sr".into(), c.sr.to_string()),
        ("svm_c".into(), hyper.svm_c.to_string()),
        (
            "svm_gamma".into(),
            hyper.svm_gamma.map_or("auto".into(), |g| g.to_string()),
        ),
        ("rf_trees".into(), hyper.rf_trees.to_string()),
        ("mlp_hidden".into(), format!("{}x{}", hyper.mlp_hidden.0, hyper.mlp_hidden.1)),
        ("mlp_epochs".into(), hyper.mlp_epochs.to_string()),
        ("mlp_batch".into(), hyper.mlp_batch.to_string()),
        ("mlp_lr".into(), hyper.mlp_lr.to_string()),
        ("standardize".into(), hyper.standardize.to_string()),
        ("stratified".into(), hyper.stratified.to_string()),
    ];
    if cache.len() == 1424 {
        // This corpus size is documented elsewhere with a 926/498 split,
        // which is 65/35; the configured ratio is what actually runs.
        snap.push((
            "split_note".into(),
            format!(
                "N=1424: round(ratio*N) gives {}/{} train/test; a 926/498 split would be 65/35",
                (ratio * 1424.0).round() as usize,
                1424 - (ratio * 1424.0).round() as usize
            ),
        ));
    }
    snap
}

fn run_grid(
    cache: &FeatureCache,
    configs: &[(usize, bool)],
    models: &[ModelKind],
    ratio: f64,
    seed: u64,
    repeats: usize,
    hyper: &Hyperparams,
) -> Result<(Vec<CellResult>, Vec<String>, Split)> {
    if models.is_empty() {
        return Err(Error::Config("no models selected".into()));
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let labels = cache.labels().to_vec();
    let stratify = hyper.stratified.then_some(labels.as_slice());

    // Shared split per repeat; feature matrices per config.
    let mut splits = Vec::with_capacity(repeats);
    for r in 0..repeats {
        splits.push(split_train_test(cache.len(), ratio, seed + r as u64, stratify)?);
    }
    let mut matrices = Vec::with_capacity(configs.len());
    for &(n_mfcc, extras) in configs {
        matrices.push(cache.features(n_mfcc, extras)?);
    }

    // Cell order: model -> config -> repeat.
    let mut cells = Vec::new();
    for &model in models {
        for (ci, &(n_mfcc, extras)) in configs.iter().enumerate() {
            for r in 0..repeats {
                cells.push((ci, r, CellSpec { model, n_mfcc, extras, seed: seed + r as u64 }));
            }
        }
    }

    let results: Vec<Result<CellResult>> = cells
        .par_iter()
        .map(|&(ci, r, spec)| {
            run_cell(&matrices[ci], &labels, &splits[r], spec, hyper).map_err(|e| {
                Error::Eval(format!(
                    "cell model={} n_mfcc={} extras={}: {e}",
                    spec.model, spec.n_mfcc, spec.extras
                ))
            })
        })
        .collect();

    // Completed cells survive a failing sibling, so callers can flush a
    // partial report before surfacing the errors.
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(cell) => out.push(cell),
            Err(e) => failures.push(e.to_string()),
        }
    }
    Ok((out, failures, splits.remove(0)))
}

/// Accuracy for every `(model, n_mfcc)` pair with extras off; the mel-count
/// sweep table.
pub fn sweep_nmel(
    cache: &FeatureCache,
    nmel_values: &[usize],
    models: &[ModelKind],
    ratio: f64,
    seed: u64,
    repeats: usize,
    hyper: &Hyperparams,
) -> Result<ExperimentReport> {
    if nmel_values.is_empty() {
        return Err(Error::Config("empty n_mfcc sweep".into()));
    }
    let configs: Vec<(usize, bool)> = nmel_values.iter().map(|&n| (n, false)).collect();
    let (cells, failures, split) = run_grid(cache, &configs, models, ratio, seed, repeats, hyper)?;
    Ok(ExperimentReport {
        rows: cells.iter().map(row_of).collect(),
        confusions: Vec::new(),
        split,
        seed,
        ratio,
        n_examples: cache.len(),
        config_snapshot: snapshot(
            cache,
            models,
            ratio,
            seed,
            repeats,
            hyper,
            "sweep_nmel",
            format!("nmel={nmel_values:?}"),
        ),
        failures,
    })
}

/// Baseline (`n_mfcc` only) vs extras (`n_mfcc` + ZCR + RMSE + SF) per model,
/// on the same split; the feature-ablation table.
pub fn compare_extras(
    cache: &FeatureCache,
    n_mfcc: usize,
    models: &[ModelKind],
    ratio: f64,
    seed: u64,
    repeats: usize,
    hyper: &Hyperparams,
) -> Result<ExperimentReport> {
    let configs = [(n_mfcc, false), (n_mfcc, true)];
    let (cells, failures, split) = run_grid(cache, &configs, models, ratio, seed, repeats, hyper)?;
    let confusions = cells
        .iter()
        .filter(|c| c.spec.extras && c.spec.seed == seed)
        .map(|c| (c.spec.model, c.confusion.clone()))
        .collect();
    Ok(ExperimentReport {
        rows: cells.iter().map(row_of).collect(),
        confusions,
        split,
        seed,
        ratio,
        n_examples: cache.len(),
        config_snapshot: snapshot(
            cache,
            models,
            ratio,
            seed,
            repeats,
            hyper,
            "compare_extras",
            format!("n_mfcc={n_mfcc}"),
        ),
        failures,
    })
}

fn row_of(cell: &CellResult) -> ReportRow {
    ReportRow {
        model: cell.spec.model,
        n_mfcc: cell.spec.n_mfcc,
        extras: cell.spec.extras,
        seed: cell.spec.seed,
        accuracy: cell.accuracy,
        train_seconds: cell.train_seconds,
    }
}

impl ExperimentReport {
    pub fn row(&self, model: ModelKind, n_mfcc: usize, extras: bool, seed: u64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.n_mfcc == n_mfcc && r.extras == extras && r.seed == seed)
    }

    /// `report.csv`: `model,n_mfcc,extras,seed,accuracy`. Timing lives in
    /// `timings.csv` so reruns with one seed are byte-identical.
    pub fn write_report_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Eval(format!("{}: {e}", path.display())))?;
        w.write_record(["model", "n_mfcc", "extras", "seed", "accuracy"])
            .map_err(|e| Error::Eval(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.model.as_str().to_string(),
                r.n_mfcc.to_string(),
                r.extras.to_string(),
                r.seed.to_string(),
                format!("{}", r.accuracy),
            ])
            .map_err(|e| Error::Eval(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `timings.csv`: wall-clock training seconds per cell (informational,
    /// never byte-stable).
    pub fn write_timings_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Eval(format!("{}: {e}", path.display())))?;
        w.write_record(["model", "n_mfcc", "extras", "seed", "train_seconds"])
            .map_err(|e| Error::Eval(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.model.as_str().to_string(),
                r.n_mfcc.to_string(),
                r.extras.to_string(),
                r.seed.to_string(),
                format!("{:.6}", r.train_seconds),
            ])
            .map_err(|e| Error::Eval(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `bars.csv`: `model,baseline,extras` pairs for bar plotting (ablation
    /// reports only).
    pub fn write_bars_csv(&self, path: &Path, models: &[ModelKind], n_mfcc: usize) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Eval(format!("{}: {e}", path.display())))?;
        w.write_record(["model", "baseline", "extras"])
            .map_err(|e| Error::Eval(e.to_string()))?;
        for &model in models {
            let base = self
                .row(model, n_mfcc, false, self.seed)
                .ok_or_else(|| Error::Eval(format!("missing baseline row for {model}")))?;
            let extras = self
                .row(model, n_mfcc, true, self.seed)
                .ok_or_else(|| Error::Eval(format!("missing extras row for {model}")))?;
            w.write_record([
                model.as_str().to_string(),
                format!("{}", base.accuracy),
                format!("{}", extras.accuracy),
            ])
            .map_err(|e| Error::Eval(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `confusion_<model>.csv` for every stored confusion matrix.
    pub fn write_confusions(&self, dir: &Path) -> Result<()> {
        for (model, cm) in &self.confusions {
            cm.write_csv(&dir.join(format!("confusion_{}.csv", model.as_str())))?;
        }
        Ok(())
    }

    /// The reproducibility record as `key=value` lines.
    pub fn metadata_lines(&self) -> Vec<String> {
        self.config_snapshot.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }
}

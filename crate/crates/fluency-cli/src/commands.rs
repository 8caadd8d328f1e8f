//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use fluency_core::audio::{decode_wav, downmix_mono, resample};
use fluency_core::classify::{
    load_model, mlp_train, rf_train, save_model, standardize_fit, svm_train, MlpParams,
    ModelInner, ModelKind, RfParams, SvmParams, TrainedModel,
};
use fluency_core::dsp::{stft_power, FeatureConfig};
use fluency_core::error::Error;
use fluency_core::eval::{
    accuracy, compare_extras, confusion, split_train_test, sweep_nmel, ExperimentReport,
    FeatureCache, Hyperparams,
};
use fluency_core::segment::{
    build_dataset, load_manifest, segment_fixed, Dataset, DEFAULT_SEGMENT_SECONDS,
};
use fluency_core::synth::{generate_corpus, ClassProfile};

use crate::{BankArgs, CliError, Command, HyperArgs};

type CliResult = Result<(), CliError>;

pub fn run(command: Command) -> CliResult {
    match command {
        Command::Synth { out, seed, balanced, per_class, counts } => {
            cmd_synth(out, seed, balanced, per_class as usize, counts)
        }
        Command::Extract { manifest, out, n_mfcc, extras, no_extras, bank, dump_spectrogram } => {
            cmd_extract(manifest, out, n_mfcc as usize, extras && !no_extras, &bank, dump_spectrogram)
        }
        Command::Train { features, model, out, ratio, seed, hyper, log } => {
            cmd_train(features, &model, out, ratio, seed, &hyper, log)
        }
        Command::Eval { features, model_file, out_dir, test_features, ratio, seed, stratified } => {
            cmd_eval(features, model_file, out_dir, test_features, ratio, seed, stratified)
        }
        Command::Sweep { manifest, out_dir, nmel, models, ratio, seed, repeats, bank, hyper } => {
            cmd_sweep(manifest, out_dir, &nmel, &models, ratio, seed, repeats as usize, &bank, &hyper)
        }
        Command::Compare {
            manifest,
            out_dir,
            n_mfcc,
            models,
            ratio,
            seed,
            repeats,
            bank,
            hyper,
        } => cmd_compare(
            manifest,
            out_dir,
            n_mfcc as usize,
            &models,
            ratio,
            seed,
            repeats as usize,
            &bank,
            &hyper,
        ),
    }
}

fn feature_config(n_mfcc: usize, extras: bool, bank: &BankArgs) -> Result<FeatureConfig, CliError> {
    let config = FeatureConfig {
        n_mfcc,
        include_extras: extras,
        n_fft: bank.n_fft as usize,
        hop: bank.hop as usize,
        n_mel_filters: bank.n_mels as usize,
        fmin: bank.fmin,
        fmax: bank.fmax,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn parse_hidden(token: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = token.split('x').collect();
    if parts.len() == 2 {
        if let (Ok(a), Ok(b)) = (parts[0].parse::<usize>(), parts[1].parse::<usize>()) {
            if a > 0 && b > 0 {
                return Ok((a, b));
            }
        }
    }
    Err(CliError::Usage(format!("--hidden wants AxB with positive sizes, got '{token}'")))
}

fn hyperparams(args: &HyperArgs) -> Result<Hyperparams, CliError> {
    if !(args.c > 0.0) {
        return Err(CliError::Usage("--c must be positive".into()));
    }
    if let Some(g) = args.gamma {
        if !(g > 0.0) {
            return Err(CliError::Usage("--gamma must be positive".into()));
        }
    }
    if !(args.lr > 0.0) {
        return Err(CliError::Usage("--lr must be positive".into()));
    }
    Ok(Hyperparams {
        svm_c: args.c,
        svm_gamma: args.gamma,
        rf_trees: args.trees as usize,
        mlp_hidden: parse_hidden(&args.hidden)?,
        mlp_epochs: args.epochs as usize,
        mlp_batch: args.batch as usize,
        mlp_lr: args.lr,
        standardize: !args.no_standardize,
        stratified: args.stratified,
    })
}

fn parse_models(token: &str) -> Result<Vec<ModelKind>, CliError> {
    let mut models = Vec::new();
    for part in token.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind = ModelKind::parse(part)
            .ok_or_else(|| CliError::Usage(format!("unknown model '{part}'")))?;
        if !models.contains(&kind) {
            models.push(kind);
        }
    }
    if models.is_empty() {
        return Err(CliError::Usage("no models selected".into()));
    }
    Ok(models)
}

fn parse_nmel(token: &str) -> Result<Vec<usize>, CliError> {
    let mut values = Vec::new();
    for part in token.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let n: usize = part
            .parse()
            .map_err(|_| CliError::Usage(format!("bad mel count '{part}'")))?;
        if n == 0 {
            return Err(CliError::Usage("mel counts must be positive".into()));
        }
        values.push(n);
    }
    if values.is_empty() {
        return Err(CliError::Usage("empty --nmel list".into()));
    }
    Ok(values)
}

fn parse_counts(token: &str) -> Result<[usize; 3], CliError> {
    let parts: Vec<&str> = token.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--counts wants low,intermediate,high (3 numbers), got '{token}'"
        )));
    }
    let mut counts = [0usize; 3];
    for (slot, part) in counts.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Usage(format!("bad count '{part}'")))?;
        if *slot == 0 {
            return Err(CliError::Usage("per-class counts must be positive".into()));
        }
    }
    Ok(counts)
}

fn cmd_synth(
    out: PathBuf,
    seed: u64,
    balanced: bool,
    per_class: usize,
    counts: Option<String>,
) -> CliResult {
    let profiles = match (&counts, balanced) {
        (Some(token), _) => ClassProfile::with_counts(parse_counts(token)?),
        (None, true) => ClassProfile::balanced(per_class),
        (None, false) => ClassProfile::defaults(),
    };
    let summary = generate_corpus(&profiles, seed, &out)?;
    println!("seed={seed}");
    println!(
        "wrote {} segments ({} low / {} intermediate / {} high), {:.2} minutes of audio",
        summary.counts.iter().sum::<usize>(),
        summary.counts[0],
        summary.counts[1],
        summary.counts[2],
        summary.total_minutes
    );
    println!("manifest: {}", summary.manifest_path.display());
    Ok(())
}

fn dump_spectrograms(
    manifest: &fluency_core::segment::Manifest,
    config: &FeatureConfig,
    dir: &Path,
) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    for entry in &manifest.entries {
        let path = manifest.resolve(entry);
        let bytes = fs::read(&path)?;
        let decoded = decode_wav(&bytes, &entry.wav_path.display().to_string())?;
        let canonical = resample(&downmix_mono(decoded), config.sr)?;
        let segments =
            segment_fixed(&canonical, DEFAULT_SEGMENT_SECONDS, true, &entry.speaker_id, entry.label)?;
        let stem = entry
            .wav_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "segment".into());
        for segment in &segments {
            let spec = stft_power(&segment.samples, config);
            let out = dir.join(format!("{stem}_seg{:04}.csv", segment.index));
            let mut w = csv::Writer::from_path(&out)
                .map_err(|e| Error::Extraction(format!("{}: {e}", out.display())))?;
            for bin in 0..spec.n_bins() {
                let row: Vec<String> =
                    (0..spec.n_frames()).map(|t| format!("{}", spec.at(bin, t))).collect();
                w.write_record(&row).map_err(|e| Error::Extraction(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_extract(
    manifest_path: PathBuf,
    out: PathBuf,
    n_mfcc: usize,
    extras: bool,
    bank: &BankArgs,
    dump: Option<PathBuf>,
) -> CliResult {
    let config = feature_config(n_mfcc, extras, bank)?;
    let manifest = load_manifest(&manifest_path)?;
    let dataset = build_dataset(&manifest, &config)?;
    dataset.write_csv(&out)?;
    let counts = dataset.class_counts();
    println!(
        "extracted {} segments x {} features ({} low / {} intermediate / {} high, {:.2} minutes)",
        dataset.len(),
        dataset.dim,
        counts[0],
        counts[1],
        counts[2],
        dataset.total_minutes()
    );
    println!("features: {}", out.display());
    if let Some(dir) = dump {
        dump_spectrograms(&manifest, &config, &dir)?;
        println!("spectrograms: {}", dir.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    features: PathBuf,
    model_token: &str,
    out: PathBuf,
    ratio: f64,
    seed: u64,
    hyper_args: &HyperArgs,
    log: Option<PathBuf>,
) -> CliResult {
    let kind = ModelKind::parse(model_token)
        .ok_or_else(|| CliError::Usage(format!("unknown model '{model_token}'")))?;
    let hyper = hyperparams(hyper_args)?;
    let dataset = Dataset::read_csv(&features)?;
    let x = dataset.matrix();
    let y = dataset.labels();
    let stratify = hyper.stratified.then_some(y.as_slice());
    let split = split_train_test(dataset.len(), ratio, seed, stratify)?;
    let x_train = x.select_rows(&split.train);
    let y_train: Vec<usize> = split.train.iter().map(|&i| y[i]).collect();

    let standardizer = if hyper.standardize && kind != ModelKind::Forest {
        Some(standardize_fit(&x_train)?)
    } else {
        None
    };
    let x_fit = match &standardizer {
        Some(s) => s.transform(&x_train),
        None => x_train,
    };

    println!(
        "seed={seed} ratio={ratio} train={} test={} model={kind}",
        split.train.len(),
        split.test.len()
    );
    let started = std::time::Instant::now();
    let inner = match kind {
        ModelKind::Svm => {
            let params = SvmParams {
                c: hyper.svm_c,
                gamma: hyper.svm_gamma,
                seed,
                ..Default::default()
            };
            let model = svm_train(&x_fit, &y_train, &params)?;
            println!(
                "svm: {} pairs, kkt residual {:.2e}",
                model.pairs.len(),
                model.max_kkt_residual()
            );
            ModelInner::Svm(model)
        }
        ModelKind::Forest => {
            let params = RfParams { n_estimators: hyper.rf_trees, seed, ..Default::default() };
            let model = rf_train(&x_fit, &y_train, &params)?;
            println!("rf: {} trees", model.trees.len());
            ModelInner::Forest(model)
        }
        ModelKind::Mlp => {
            let params = MlpParams {
                hidden: hyper.mlp_hidden,
                epochs: hyper.mlp_epochs,
                batch: hyper.mlp_batch,
                lr: hyper.mlp_lr,
                seed,
                ..Default::default()
            };
            let model = mlp_train(&x_fit, &y_train, &params)?;
            println!(
                "mlp: loss {:.4} -> {:.4} over {} epochs",
                model.train_loss.first().unwrap_or(&f64::NAN),
                model.train_loss.last().unwrap_or(&f64::NAN),
                model.train_loss.len()
            );
            if model.convergence_warning() {
                eprintln!("fluency: warning: training loss did not decrease");
            }
            if let Some(log_path) = &log {
                let mut text = String::from("epoch,loss\n");
                for (i, loss) in model.train_loss.iter().enumerate() {
                    text.push_str(&format!("{},{}\n", i + 1, loss));
                }
                fs::write(log_path, text).map_err(Error::from)?;
            }
            ModelInner::Mlp(model)
        }
    };
    println!("trained in {:.2}s", started.elapsed().as_secs_f64());

    if let Some(log_path) = &log {
        if kind != ModelKind::Mlp {
            fs::write(log_path, format!("model={kind} seed={seed}\n")).map_err(Error::from)?;
        }
    }

    let model = TrainedModel { standardizer, inner };
    save_model(&out, &model)?;
    println!("model: {}", out.display());
    Ok(())
}

fn cmd_eval(
    features: PathBuf,
    model_file: PathBuf,
    out_dir: PathBuf,
    test_features: Option<PathBuf>,
    ratio: f64,
    seed: u64,
    stratified: bool,
) -> CliResult {
    let model = load_model(&model_file)?;
    let (x_test, y_test) = match test_features {
        Some(path) => {
            let test = Dataset::read_csv(&path)?;
            (test.matrix(), test.labels())
        }
        None => {
            let dataset = Dataset::read_csv(&features)?;
            let y = dataset.labels();
            let stratify = stratified.then_some(y.as_slice());
            let split = split_train_test(dataset.len(), ratio, seed, stratify)?;
            let x = dataset.matrix();
            let y_test: Vec<usize> = split.test.iter().map(|&i| y[i]).collect();
            (x.select_rows(&split.test), y_test)
        }
    };

    let predicted = model.predict(&x_test)?;
    let acc = accuracy(&predicted, &y_test)?;
    let cm = confusion(&predicted, &y_test)?;
    fs::create_dir_all(&out_dir).map_err(Error::from)?;
    let cm_path = out_dir.join(format!("confusion_{}.csv", model.kind().as_str()));
    cm.write_csv(&cm_path)?;

    println!("seed={seed} ratio={ratio} test={}", y_test.len());
    println!("accuracy={acc}");
    println!("confusion: {}", cm_path.display());
    Ok(())
}

/// Writes every artifact of a sweep/compare run and reports partial-cell
/// failures (flushing results first).
fn write_report(
    report: &ExperimentReport,
    out_dir: &Path,
    bars: Option<(&[ModelKind], usize)>,
) -> CliResult {
    fs::create_dir_all(out_dir).map_err(Error::from)?;
    report.write_report_csv(&out_dir.join("report.csv"))?;
    report.write_timings_csv(&out_dir.join("timings.csv"))?;
    if let Some((models, n_mfcc)) = bars {
        report.write_bars_csv(&out_dir.join("bars.csv"), models, n_mfcc)?;
    }
    report.write_confusions(out_dir)?;
    fs::write(
        out_dir.join("run_meta.txt"),
        report.metadata_lines().join("\n") + "\n",
    )
    .map_err(Error::from)?;

    for row in &report.rows {
        println!(
            "model={} n_mfcc={} extras={} seed={} accuracy={:.4} ({:.2}s)",
            row.model, row.n_mfcc, row.extras, row.seed, row.accuracy, row.train_seconds
        );
    }
    if !report.failures.is_empty() {
        for failure in &report.failures {
            eprintln!("fluency: {failure}");
        }
        return Err(CliError::Runtime(Error::Eval(format!(
            "{} of {} cells failed; partial results written to {}",
            report.failures.len(),
            report.failures.len() + report.rows.len(),
            out_dir.display()
        ))));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    manifest_path: PathBuf,
    out_dir: PathBuf,
    nmel: &str,
    models: &str,
    ratio: f64,
    seed: u64,
    repeats: usize,
    bank: &BankArgs,
    hyper_args: &HyperArgs,
) -> CliResult {
    let nmel_values = parse_nmel(nmel)?;
    let models = parse_models(models)?;
    let hyper = hyperparams(hyper_args)?;
    let max_n = *nmel_values.iter().max().unwrap();
    let base = feature_config(max_n, true, bank)?;
    if max_n > base.n_mel_filters {
        return Err(CliError::Usage(format!(
            "n_mfcc {max_n} exceeds the {} mel filters",
            base.n_mel_filters
        )));
    }

    println!("seed={seed} ratio={ratio} nmel={nmel_values:?}");
    let manifest = load_manifest(&manifest_path)?;
    let cache = FeatureCache::from_manifest(&manifest, &base, max_n)?;
    let report = sweep_nmel(&cache, &nmel_values, &models, ratio, seed, repeats, &hyper)?;
    write_report(&report, &out_dir, None)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    manifest_path: PathBuf,
    out_dir: PathBuf,
    n_mfcc: usize,
    models: &str,
    ratio: f64,
    seed: u64,
    repeats: usize,
    bank: &BankArgs,
    hyper_args: &HyperArgs,
) -> CliResult {
    let models = parse_models(models)?;
    let hyper = hyperparams(hyper_args)?;
    let base = feature_config(n_mfcc, true, bank)?;
    if n_mfcc > base.n_mel_filters {
        return Err(CliError::Usage(format!(
            "n_mfcc {n_mfcc} exceeds the {} mel filters",
            base.n_mel_filters
        )));
    }

    println!("seed={seed} ratio={ratio} n_mfcc={n_mfcc}");
    let manifest = load_manifest(&manifest_path)?;
    let cache = FeatureCache::from_manifest(&manifest, &base, n_mfcc)?;
    let report = compare_extras(&cache, n_mfcc, &models, ratio, seed, repeats, &hyper)?;
    write_report(&report, &out_dir, Some((&models, n_mfcc)))
}

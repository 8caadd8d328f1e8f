//! Cross-module integration: manifest -> dataset -> split -> train -> score.

use std::fs;

use fluency_core::audio::{encode_wav, AudioBuffer};
use fluency_core::classify::ModelKind;
use fluency_core::dsp::FeatureConfig;
use fluency_core::eval::{compare_extras, sweep_nmel, FeatureCache, Hyperparams};
use fluency_core::segment::{build_dataset, load_manifest, Dataset};
use fluency_core::synth::{generate_corpus, ClassProfile};

fn tiny_hyper() -> Hyperparams {
    Hyperparams {
        rf_trees: 15,
        mlp_hidden: (16, 16),
        mlp_epochs: 40,
        ..Default::default()
    }
}

/// Small synthetic corpus on disk (12 segments per class).
fn corpus() -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let profiles = ClassProfile::balanced(12);
    let summary = generate_corpus(&profiles, 77, dir.path()).unwrap();
    let manifest_path = summary.manifest_path.clone();
    (dir, manifest_path)
}

#[test]
fn corpus_to_dataset_to_models() {
    let (_dir, manifest_path) = corpus();
    let manifest = load_manifest(&manifest_path).unwrap();
    let config = FeatureConfig::default();
    let dataset = build_dataset(&manifest, &config).unwrap();
    assert_eq!(dataset.len(), 36);
    assert_eq!(dataset.dim, 23);
    assert_eq!(dataset.class_counts(), [12, 12, 12]);
    assert!((dataset.total_minutes() - 3.0).abs() < 1e-9);

    let cache = FeatureCache::from_dataset(&dataset, &config);
    let report = sweep_nmel(
        &cache,
        &[5, 20],
        &[ModelKind::Svm, ModelKind::Forest, ModelKind::Mlp],
        0.7,
        42,
        1,
        &tiny_hyper(),
    )
    .unwrap();
    assert_eq!(report.rows.len(), 6);
    for row in &report.rows {
        assert!((0.0..=1.0).contains(&row.accuracy), "{row:?}");
    }

    let cmp = compare_extras(
        &cache,
        20,
        &[ModelKind::Svm, ModelKind::Forest, ModelKind::Mlp],
        0.7,
        42,
        1,
        &tiny_hyper(),
    )
    .unwrap();
    assert_eq!(cmp.rows.len(), 6);
    assert_eq!(cmp.confusions.len(), 3);
    for (_, cm) in &cmp.confusions {
        assert_eq!(cm.total(), cmp.split.test.len());
        assert_eq!(
            cm.row_sums(),
            {
                let mut sums = [0usize; 3];
                for &i in &cmp.split.test {
                    sums[cache.labels()[i]] += 1;
                }
                sums
            },
            "confusion rows must be the per-class test counts"
        );
    }
}

#[test]
fn ten_minute_conversation_becomes_120_labeled_rows() {
    let dir = tempfile::tempdir().unwrap();
    let n = 22050usize * 600;
    let samples: Vec<f64> = (0..n)
        .map(|i| 0.4 * (2.0 * std::f64::consts::PI * 180.0 * i as f64 / 22050.0).sin())
        .collect();
    let bytes = encode_wav(&AudioBuffer::mono(samples, 22050, "conv")).unwrap();
    fs::write(dir.path().join("conv.wav"), bytes).unwrap();
    fs::write(
        dir.path().join("m.csv"),
        "path,speaker,label,sublevel\nconv.wav,spk,intermediate,\n",
    )
    .unwrap();

    let manifest = load_manifest(&dir.path().join("m.csv")).unwrap();
    let config = FeatureConfig { n_mfcc: 5, n_mel_filters: 40, ..Default::default() };
    let dataset = build_dataset(&manifest, &config).unwrap();
    assert_eq!(dataset.len(), 120);
    assert_eq!(dataset.class_counts(), [0, 120, 0]);
    assert!((dataset.total_minutes() - 10.0).abs() < 1e-9);
}

#[test]
fn feature_cache_views_match_direct_extraction() {
    let (_dir, manifest_path) = corpus();
    let manifest = load_manifest(&manifest_path).unwrap();
    let base = FeatureConfig::default();
    let cache = FeatureCache::from_manifest(&manifest, &base, 20).unwrap();

    // Direct extraction at a narrower config must be bit-identical to the
    // cached prefix view.
    let narrow = FeatureConfig { n_mfcc: 12, include_extras: false, ..base.clone() };
    let direct = build_dataset(&manifest, &narrow).unwrap();
    let view = cache.features(12, false).unwrap();
    assert_eq!(view.rows(), direct.len());
    for (i, row) in direct.rows.iter().enumerate() {
        for (a, b) in row.features.iter().zip(view.row(i)) {
            assert_eq!(a.to_bits(), b.to_bits(), "row {i}");
        }
    }

    let narrow_extras = FeatureConfig { n_mfcc: 12, include_extras: true, ..base };
    let direct = build_dataset(&manifest, &narrow_extras).unwrap();
    let view = cache.features(12, true).unwrap();
    for (i, row) in direct.rows.iter().enumerate() {
        for (a, b) in row.features.iter().zip(view.row(i)) {
            assert_eq!(a.to_bits(), b.to_bits(), "row {i}");
        }
    }
}

#[test]
fn dataset_csv_is_byte_deterministic() {
    let (_dir, manifest_path) = corpus();
    let manifest = load_manifest(&manifest_path).unwrap();
    let config = FeatureConfig { n_mfcc: 8, n_mel_filters: 64, ..Default::default() };
    let dataset = build_dataset(&manifest, &config).unwrap();

    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a.csv"), out.path().join("b.csv"));
    dataset.write_csv(&a).unwrap();
    build_dataset(&manifest, &config).unwrap().write_csv(&b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let back = Dataset::read_csv(&a).unwrap();
    assert_eq!(back.len(), dataset.len());
}

#[test]
fn mixed_rate_sources_are_canonicalized() {
    // A 48 kHz stereo source must land at 22050 Hz mono with 5 s segments.
    let dir = tempfile::tempdir().unwrap();
    let sr = 48_000u32;
    let n = sr as usize * 11;
    let samples: Vec<f64> = (0..2 * n)
        .map(|i| {
            let t = (i / 2) as f64 / sr as f64;
            let amp = if i % 2 == 0 { 0.5 } else { 0.3 };
            amp * (2.0 * std::f64::consts::PI * 200.0 * t).sin()
        })
        .collect();
    // Hand-rolled stereo PCM16 container.
    let mut bytes = Vec::new();
    let data_len = (samples.len() * 2) as u32;
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data_len).to_le_bytes());
    bytes.extend_from_slice(b"WAVE");
    bytes.extend_from_slice(b"fmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&2u16.to_le_bytes());
    bytes.extend_from_slice(&sr.to_le_bytes());
    bytes.extend_from_slice(&(sr * 4).to_le_bytes());
    bytes.extend_from_slice(&4u16.to_le_bytes());
    bytes.extend_from_slice(&16u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&data_len.to_le_bytes());
    for s in &samples {
        bytes.extend_from_slice(&(((s * 32768.0).round() as i16).to_le_bytes()));
    }
    fs::write(dir.path().join("wide.wav"), bytes).unwrap();
    fs::write(
        dir.path().join("m.csv"),
        "path,speaker,label,sublevel\nwide.wav,spk,high,\n",
    )
    .unwrap();

    let manifest = load_manifest(&dir.path().join("m.csv")).unwrap();
    let config = FeatureConfig { n_mfcc: 5, n_mel_filters: 40, ..Default::default() };
    let dataset = build_dataset(&manifest, &config).unwrap();
    assert_eq!(dataset.len(), 2); // 11 s -> 2 whole 5 s segments
    assert!(dataset.rows.iter().all(|r| r.features.iter().all(|v| v.is_finite())));
}

#[test]
fn write_then_reload_wav_preserves_features_closely() {
    // Fully voiced segment: 16-bit quantization only matters for features of
    // near-silent spans (where it redefines the noise floor), so the
    // stability contract is over voiced content.
    let profile = ClassProfile {
        pause_fraction: (0.0, 0.0),
        ..ClassProfile::balanced(1)[1].clone()
    };
    let seg = fluency_core::synth::generate_segment(&profile, 3);
    let config = FeatureConfig::default();
    let direct = fluency_core::dsp::extract_samples(&seg.samples, &config).unwrap();

    let buffer = AudioBuffer::mono(seg.samples.clone(), 22050, "x");
    let bytes = encode_wav(&buffer).unwrap();
    let decoded = fluency_core::audio::decode_wav(&bytes, "x").unwrap();
    let redone = fluency_core::dsp::extract_samples(&decoded.samples, &config).unwrap();

    // 16-bit quantization moves features only slightly.
    for (a, b) in direct.values.iter().zip(&redone.values) {
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }
}

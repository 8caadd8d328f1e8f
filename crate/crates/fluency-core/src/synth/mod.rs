//! Synthetic labeled corpus.
//!
//! Each 5-second segment is a speech proxy: a four-harmonic voice carrier,
//! amplitude-modulated at a syllabic rate, interrupted by near-silent pauses
//! scheduled by a seeded renewal process. The three class profiles differ in
//! pause fraction and syllabic rate, so pause-sensitive features (RMSE, SF,
//! MFCC energy) carry learnable structure while the fundamental frequency
//! overlaps across classes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::audio::{encode_wav, AudioBuffer, CANONICAL_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded_rng, stream};
use crate::segment::manifest::write_manifest_csv;
use crate::segment::{Fluency, FluencyLabel, DEFAULT_SEGMENT_SECONDS};

/// Ranges a class's segments are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    /// Fraction of the segment spent in pauses, drawn per segment.
    pub pause_fraction: (f64, f64),
    /// Amplitude-modulation rate in Hz (syllables per second proxy).
    pub syllable_rate: (f64, f64),
    /// Fundamental of the harmonic carrier in Hz.
    pub f0: (f64, f64),
    /// Segments to generate for this class.
    pub n_segments: usize,
}

impl ClassProfile {
    /// Default profiles, sized like the reference corpus distribution
    /// (374 / 618 / 432 = 1424 segments). Intermediate straddles both
    /// neighbors so it stays the hardest class.
    pub fn defaults() -> [ClassProfile; 3] {
        [
            ClassProfile {
                pause_fraction: (0.35, 0.55),
                syllable_rate: (1.5, 2.5),
                f0: (90.0, 250.0),
                n_segments: 374,
            },
            ClassProfile {
                pause_fraction: (0.15, 0.30),
                syllable_rate: (2.5, 4.0),
                f0: (90.0, 250.0),
                n_segments: 618,
            },
            ClassProfile {
                pause_fraction: (0.02, 0.10),
                syllable_rate: (4.0, 6.0),
                f0: (90.0, 250.0),
                n_segments: 432,
            },
        ]
    }

    /// Default ranges with `n` segments per class.
    pub fn balanced(n: usize) -> [ClassProfile; 3] {
        let mut profiles = Self::defaults();
        for p in &mut profiles {
            p.n_segments = n;
        }
        profiles
    }

    /// Default ranges with explicit per-class counts.
    pub fn with_counts(counts: [usize; 3]) -> [ClassProfile; 3] {
        let mut profiles = Self::defaults();
        for (p, n) in profiles.iter_mut().zip(counts) {
            p.n_segments = n;
        }
        profiles
    }
}

/// One generated segment plus the parameters it was drawn with.
#[derive(Debug, Clone)]
pub struct SynthSegment {
    pub samples: Vec<f64>,
    pub pause_fraction: f64,
    pub syllable_rate: f64,
    pub f0: f64,
}

const SR: u32 = CANONICAL_SAMPLE_RATE;
/// Peak amplitude of the voiced carrier.
const PEAK: f64 = 0.7;
/// Raised-cosine AM envelope `A - B cos(2 pi rate t)` with `B = 1 - A`:
/// peak 1.0, floor `2A - 1`. The offset `A` is drawn per segment, which
/// jitters voiced loudness so no single energy feature separates the
/// classes on its own; the floor stays well above the pause detector so a
/// segment's silent fraction is its scheduled pause fraction.
const ENV_OFFSET: (f64, f64) = (0.60, 0.80);
/// Harmonic amplitudes 1/k; phases chosen numerically to minimize the crest
/// factor (peak 1.208 vs 1.527 at zero phase), which keeps the voiced RMS
/// high at a fixed 0.7 peak.
const HARMONICS: usize = 4;
const PHASES: [f64; HARMONICS] = [0.0, 1.127837138891729, 5.335818562231485, 1.9711558303273693];
/// Pause-floor noise amplitude range (log-uniform per segment, always under
/// the 1e-4 near-silence bound). The per-segment draw keeps any single
/// energy statistic from pinning the pause fraction on its own.
const PAUSE_AMP: (f64, f64) = (3e-6, 9e-5);
/// Linear boundary ramp length (10 ms).
const RAMP: usize = 220;

/// Peak magnitude of the unit-f0 harmonic sum; used to normalize the
/// carrier so the envelope crest hits [`PEAK`]. Time scaling leaves it
/// independent of f0.
fn carrier_peak() -> f64 {
    let mut peak: f64 = 0.0;
    for i in 0..8192 {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / 8192.0;
        peak = peak.max(carrier(theta).abs());
    }
    peak
}

fn carrier(theta: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..HARMONICS {
        acc += ((k + 1) as f64 * theta + PHASES[k]).sin() / (k + 1) as f64;
    }
    acc
}

fn draw(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Alternating voiced/pause span lengths in samples, scheduled so the pause
/// total lands exactly on the drawn fraction.
fn schedule_spans(rng: &mut impl Rng, n: usize, pause_fraction: f64) -> Vec<(bool, usize)> {
    let target_pause = (pause_fraction * n as f64).round() as usize;
    let voiced_total = n - target_pause;
    if target_pause == 0 {
        return vec![(true, n)];
    }
    if voiced_total == 0 {
        return vec![(false, n)];
    }

    // Renewal draw of pause runs (0.12-0.45 s) until the budget is spent.
    let mut runs: Vec<usize> = Vec::new();
    let mut budget = target_pause;
    while budget > 0 {
        let r = (draw(rng, (0.12, 0.45)) * SR as f64).round() as usize;
        let r = r.clamp(1, budget);
        runs.push(r);
        budget -= r;
    }

    // Voiced gaps around the pause runs, proportional to random weights.
    let n_gaps = runs.len() + 1;
    let weights: Vec<f64> = (0..n_gaps).map(|_| draw(rng, (0.2, 1.0))).collect();
    let weight_sum: f64 = weights.iter().sum();
    let mut gaps: Vec<usize> = weights
        .iter()
        .map(|w| (w / weight_sum * voiced_total as f64).floor() as usize)
        .collect();
    let assigned: usize = gaps.iter().sum();
    *gaps.last_mut().unwrap() += voiced_total - assigned;

    let mut spans = Vec::with_capacity(2 * runs.len() + 1);
    for (gap, run) in gaps.iter().zip(&runs) {
        if *gap > 0 {
            spans.push((true, *gap));
        }
        spans.push((false, *run));
    }
    if *gaps.last().unwrap() > 0 {
        spans.push((true, *gaps.last().unwrap()));
    }
    spans
}

/// Generates one 5-second segment at the canonical rate.
pub fn generate_segment(profile: &ClassProfile, seed: u64) -> SynthSegment {
    let mut rng = seeded_rng(seed);
    let pause_fraction = draw(&mut rng, profile.pause_fraction).clamp(0.0, 1.0);
    let syllable_rate = draw(&mut rng, profile.syllable_rate);
    let f0 = draw(&mut rng, profile.f0);
    let env_a = draw(&mut rng, ENV_OFFSET);
    let env_b = 1.0 - env_a;
    let pause_amp =
        10f64.powf(draw(&mut rng, (PAUSE_AMP.0.log10(), PAUSE_AMP.1.log10())));

    let n = (DEFAULT_SEGMENT_SECONDS * SR as f64).round() as usize;
    let scale = PEAK / carrier_peak();
    let spans = schedule_spans(&mut rng, n, pause_fraction);

    let mut samples = Vec::with_capacity(n);
    let mut pos = 0usize;
    for &(voiced, len) in &spans {
        if voiced {
            let ramp = RAMP.min(len / 2);
            for i in 0..len {
                let t = (pos + i) as f64 / SR as f64;
                let envelope =
                    env_a - env_b * (2.0 * std::f64::consts::PI * syllable_rate * t).cos();
                let mut s = scale
                    * envelope
                    * carrier(2.0 * std::f64::consts::PI * f0 * t);
                if ramp > 0 {
                    if i < ramp {
                        s *= i as f64 / ramp as f64;
                    }
                    if len - 1 - i < ramp {
                        s *= (len - 1 - i) as f64 / ramp as f64;
                    }
                }
                samples.push(s);
            }
        } else {
            for _ in 0..len {
                samples.push(rng.random_range(-pause_amp..pause_amp));
            }
        }
        pos += len;
    }
    debug_assert_eq!(samples.len(), n);

    SynthSegment { samples, pause_fraction, syllable_rate, f0 }
}

/// What [`generate_corpus`] wrote.
#[derive(Debug, Clone)]
pub struct CorpusSummary {
    pub manifest_path: PathBuf,
    pub counts: [usize; 3],
    pub total_minutes: f64,
}

/// Writes one WAV per segment plus `manifest.csv` into `out_dir`.
///
/// Per-file RNG streams are derived from `(seed, class, index)`, so the same
/// seed reproduces byte-identical files regardless of parallelism.
pub fn generate_corpus(
    profiles: &[ClassProfile; 3],
    seed: u64,
    out_dir: &Path,
) -> Result<CorpusSummary> {
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Corpus(format!("{}: {e}", out_dir.display())))?;

    let mut jobs = Vec::new();
    for (class_idx, profile) in profiles.iter().enumerate() {
        let class = Fluency::from_index(class_idx).unwrap();
        for i in 0..profile.n_segments {
            jobs.push((class, profile.clone(), i));
        }
    }

    let rows: Vec<Result<(String, String, FluencyLabel, Option<(usize, usize)>)>> = jobs
        .par_iter()
        .map(|(class, profile, i)| {
            let class_idx = class.index();
            let file_seed =
                derive_seed(seed, stream::SYNTH, (class_idx as u64) << 32 | *i as u64);
            let segment = generate_segment(profile, file_seed);

            let name = format!("{}_{:04}.wav", class.as_str(), i);
            let buffer = AudioBuffer::mono(segment.samples, SR, name.clone());
            let bytes = encode_wav(&buffer)?;
            let path = out_dir.join(&name);
            fs::write(&path, bytes)
                .map_err(|e| Error::Corpus(format!("{}: {e}", path.display())))?;

            // Deterministic sublevel within the class band.
            let mut label_rng = seeded_rng(derive_seed(file_seed, stream::SYNTH, 1));
            let sublevel = 2 * class_idx as u8 + label_rng.random_range(0..2u8);
            let label = FluencyLabel::new(*class, Some(sublevel))?;
            let speaker = format!("syn_{}_{:04}", class.as_str(), i);
            Ok((name, speaker, label, None))
        })
        .collect();

    let mut manifest_rows = Vec::with_capacity(rows.len());
    for row in rows {
        manifest_rows.push(row?);
    }

    let manifest_path = out_dir.join("manifest.csv");
    write_manifest_csv(&manifest_path, &manifest_rows)?;

    let counts = [profiles[0].n_segments, profiles[1].n_segments, profiles[2].n_segments];
    let total: usize = counts.iter().sum();
    Ok(CorpusSummary {
        manifest_path,
        counts,
        total_minutes: total as f64 * DEFAULT_SEGMENT_SECONDS / 60.0,
    })
}

/// Fraction of non-overlapping 10 ms windows whose RMS is below 1e-3; the
/// measurement side of the pause-fraction contract.
pub fn measured_pause_fraction(samples: &[f64]) -> f64 {
    let window = (0.01 * SR as f64).round() as usize;
    let mut silent = 0usize;
    let mut total = 0usize;
    for chunk in samples.chunks_exact(window) {
        let rms = (chunk.iter().map(|s| s * s).sum::<f64>() / window as f64).sqrt();
        total += 1;
        if rms < 1e-3 {
            silent += 1;
        }
    }
    silent as f64 / total as f64
}

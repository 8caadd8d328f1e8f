//! Frame-level feature computations and the per-segment extractor.

use crate::error::{Error, Result};
use crate::mat::Matrix;
use crate::segment::Segment;

use super::dct::dct2_ortho;
use super::fft::{Complex, FftPlan};
use super::mel::{mel_filterbank, MelFilterbank};
use super::{FeatureConfig, FeatureVector, Spectrogram};

/// Power floor before dB conversion.
const DB_FLOOR_POWER: f64 = 1e-10;
/// Dynamic range kept below each frame's maximum, in dB.
const DB_TOP: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Window {
    Hann,
    #[allow(dead_code)] // impulse-response tests only
    Rect,
}

/// Reflect-pads `samples` by `pad` on both sides (edge samples not repeated,
/// reflections bounce for short inputs).
fn reflect_pad(samples: &[f64], pad: usize) -> Vec<f64> {
    let n = samples.len();
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n + 2 * pad);
    if n == 1 {
        out.resize(n + 2 * pad, samples[0]);
        return out;
    }
    let period = 2 * (n as i64 - 1);
    for i in 0..(n + 2 * pad) as i64 {
        let mut m = (i - pad as i64).rem_euclid(period);
        if m >= n as i64 {
            m = period - m;
        }
        out.push(samples[m as usize]);
    }
    out
}

/// Frame count under centered framing.
fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Power spectrogram of Hann-windowed centered frames.
pub fn stft_power(samples: &[f64], config: &FeatureConfig) -> Spectrogram {
    stft_power_with_window(samples, config, Window::Hann)
}

pub(crate) fn stft_power_with_window(
    samples: &[f64],
    config: &FeatureConfig,
    window: Window,
) -> Spectrogram {
    assert!(!samples.is_empty(), "stft needs at least one sample");
    assert!(config.hop > 0 && config.hop <= config.n_fft, "invalid framing config");
    let n_fft = config.n_fft;
    let n_bins = n_fft / 2 + 1;
    let n_frames = frame_count(samples.len(), config.hop);
    let padded = reflect_pad(samples, n_fft / 2);
    let win = match window {
        Window::Hann => hann_window(n_fft),
        Window::Rect => vec![1.0; n_fft],
    };
    let plan = FftPlan::new(n_fft);

    let mut values = vec![0.0; n_bins * n_frames];
    let mut buf = vec![Complex::zero(); n_fft];
    for t in 0..n_frames {
        let frame = &padded[t * config.hop..t * config.hop + n_fft];
        for ((slot, &s), &w) in buf.iter_mut().zip(frame).zip(&win) {
            *slot = Complex::new(s * w, 0.0);
        }
        let spec = plan.forward(&buf);
        let out = &mut values[t * n_bins..(t + 1) * n_bins];
        for (o, v) in out.iter_mut().zip(spec.iter().take(n_bins)) {
            *o = v.norm_sq();
        }
    }
    Spectrogram::new(values, n_bins, n_frames)
}

/// dB mel spectrogram (`n_mel_filters` rows by `n_frames` columns): mel
/// projection of the power spectrogram, floored at 1e-10 before dB, then
/// clamped to 80 dB below each frame's maximum.
fn mel_db_frames(samples: &[f64], config: &FeatureConfig, bank: &MelFilterbank) -> Matrix {
    let spec = stft_power(samples, config);
    let n_frames = spec.n_frames();
    let n_mels = bank.n_filters();
    let mut out = Matrix::zeros(n_mels, n_frames);
    let mut mel = vec![0.0; n_mels];
    for t in 0..n_frames {
        bank.project(spec.frame(t), &mut mel);
        let mut frame_max = f64::NEG_INFINITY;
        for v in &mut mel {
            *v = 10.0 * v.max(DB_FLOOR_POWER).log10();
            frame_max = frame_max.max(*v);
        }
        let floor = frame_max - DB_TOP;
        for (f, &v) in mel.iter().enumerate() {
            out.set(f, t, v.max(floor));
        }
    }
    out
}

/// MFCC matrix (`n_mfcc` rows by `n_frames` columns): orthonormal DCT-II of
/// the dB mel spectrogram along the filter axis, coefficients `0..n_mfcc`.
pub fn mfcc_frames(samples: &[f64], config: &FeatureConfig) -> Result<Matrix> {
    let bank = mel_filterbank(config)?;
    Ok(mfcc_from_mel_db(&mel_db_frames(samples, config, &bank), config.n_mfcc))
}

fn mfcc_from_mel_db(mel_db: &Matrix, n_mfcc: usize) -> Matrix {
    let n_mels = mel_db.rows();
    let n_frames = mel_db.cols();
    let mut out = Matrix::zeros(n_mfcc, n_frames);
    let mut column = vec![0.0; n_mels];
    for t in 0..n_frames {
        for f in 0..n_mels {
            column[f] = mel_db.get(f, t);
        }
        for (k, &c) in dct2_ortho(&column, n_mfcc).iter().enumerate() {
            out.set(k, t, c);
        }
    }
    out
}

/// Per-frame zero-crossing rate: the fraction of adjacent sample pairs whose
/// signs differ, with `sign(0)` treated as non-negative. Framing matches
/// [`stft_power`].
pub fn zcr_frames(samples: &[f64], config: &FeatureConfig) -> Vec<f64> {
    assert!(!samples.is_empty());
    let n_fft = config.n_fft;
    let padded = reflect_pad(samples, n_fft / 2);
    let n_frames = frame_count(samples.len(), config.hop);
    let mut out = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let frame = &padded[t * config.hop..t * config.hop + n_fft];
        let crossings = frame
            .windows(2)
            .filter(|pair| (pair[0] >= 0.0) != (pair[1] >= 0.0))
            .count();
        out.push(crossings as f64 / (n_fft - 1) as f64);
    }
    out
}

/// Per-frame root-mean-square energy, centered framing as in [`stft_power`].
pub fn rmse_frames(samples: &[f64], config: &FeatureConfig) -> Vec<f64> {
    assert!(!samples.is_empty());
    let n_fft = config.n_fft;
    let padded = reflect_pad(samples, n_fft / 2);
    let n_frames = frame_count(samples.len(), config.hop);
    let mut out = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let frame = &padded[t * config.hop..t * config.hop + n_fft];
        let energy: f64 = frame.iter().map(|s| s * s).sum();
        out.push((energy / n_fft as f64).sqrt());
    }
    out
}

/// Spectral-flux onset strength: mean over mel bands of the half-wave
/// rectified frame-to-frame increase of the dB mel spectrogram. `SF[0] = 0`.
pub fn spectral_flux_frames(samples: &[f64], config: &FeatureConfig) -> Result<Vec<f64>> {
    let bank = mel_filterbank(config)?;
    Ok(flux_from_mel_db(&mel_db_frames(samples, config, &bank)))
}

fn flux_from_mel_db(mel_db: &Matrix) -> Vec<f64> {
    let n_mels = mel_db.rows();
    let n_frames = mel_db.cols();
    let mut out = Vec::with_capacity(n_frames);
    out.push(0.0);
    for t in 1..n_frames {
        let mut acc = 0.0;
        for f in 0..n_mels {
            acc += (mel_db.get(f, t) - mel_db.get(f, t - 1)).max(0.0);
        }
        out.push(acc / n_mels as f64);
    }
    out
}

fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Pools one segment into its feature vector (arithmetic mean over frames).
pub fn extract_segment(segment: &Segment, config: &FeatureConfig) -> Result<FeatureVector> {
    extract_samples(&segment.samples, config)
}

/// [`extract_segment`] on raw samples.
pub fn extract_samples(samples: &[f64], config: &FeatureConfig) -> Result<FeatureVector> {
    FeatureExtractor::new(config.clone())?.extract(samples)
}

/// Reusable extractor: the filterbank and FFT plan are built once per config
/// and shared read-only across workers.
pub struct FeatureExtractor {
    config: FeatureConfig,
    bank: MelFilterbank,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Result<Self> {
        config.validate()?;
        let bank = mel_filterbank(&config)?;
        Ok(Self { config, bank })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn extract(&self, samples: &[f64]) -> Result<FeatureVector> {
        if samples.is_empty() {
            return Err(Error::Extraction("empty segment".into()));
        }
        let mel_db = mel_db_frames(samples, &self.config, &self.bank);
        let mfcc = mfcc_from_mel_db(&mel_db, self.config.n_mfcc);

        let mut values = Vec::with_capacity(self.config.dim());
        for k in 0..self.config.n_mfcc {
            values.push(mean(mfcc.row(k)));
        }
        if self.config.include_extras {
            values.push(mean(&zcr_frames(samples, &self.config)));
            values.push(mean(&rmse_frames(samples, &self.config)));
            values.push(mean(&flux_from_mel_db(&mel_db)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Extraction("non-finite feature mean".into()));
        }
        Ok(FeatureVector { values, config_hash: self.config.config_hash() })
    }
}

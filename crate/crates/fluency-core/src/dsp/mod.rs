//! Acoustic feature extraction.
//!
//! A segment is analyzed in short Hann-windowed frames (`n_fft` samples,
//! `hop` apart, reflect-padded so frames are centered); each frame yields
//! mel-cepstral coefficients plus optional zero-crossing rate, RMS energy
//! and spectral-flux onset strength. Per-frame series are mean-pooled into
//! one [`FeatureVector`] per segment.

mod dct;
mod features;
mod fft;
mod mel;

pub use dct::{dct2_ortho, dct3_ortho};
pub use features::{
    extract_samples, extract_segment, mfcc_frames, rmse_frames, spectral_flux_frames, stft_power,
    zcr_frames, FeatureExtractor,
};
pub use fft::{dft_reference, fft_real, Complex, FftPlan};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};

use crate::error::{Error, Result};

/// Extraction parameters. Defaults give the 23-dimensional vector
/// (20 MFCCs + ZCR + RMSE + SF) at the canonical 22050 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    /// Cepstral coefficients kept (coefficient 0 included).
    pub n_mfcc: usize,
    /// Append ZCR, RMSE and spectral flux after the MFCCs.
    pub include_extras: bool,
    /// Analysis frame length in samples.
    pub n_fft: usize,
    /// Hop between frame starts in samples.
    pub hop: usize,
    /// Triangular mel filters in the bank.
    pub n_mel_filters: usize,
    /// Lower edge of the filterbank in Hz.
    pub fmin: f64,
    /// Upper edge of the filterbank in Hz; `None` means `sr / 2`.
    pub fmax: Option<f64>,
    /// Sample rate the features are computed at.
    pub sr: u32,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            n_mfcc: 20,
            include_extras: true,
            n_fft: 2048,
            hop: 512,
            n_mel_filters: 128,
            fmin: 0.0,
            fmax: None,
            sr: crate::audio::CANONICAL_SAMPLE_RATE,
        }
    }
}

impl FeatureConfig {
    pub fn fmax(&self) -> f64 {
        self.fmax.unwrap_or(self.sr as f64 / 2.0)
    }

    /// Final feature dimension for this config.
    pub fn dim(&self) -> usize {
        self.n_mfcc + if self.include_extras { 3 } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sr == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if self.n_fft < 2 {
            return Err(Error::Config("n_fft must be at least 2".into()));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::Config(format!(
                "hop must satisfy 0 < hop <= n_fft (got hop={}, n_fft={})",
                self.hop, self.n_fft
            )));
        }
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mel_filters {
            return Err(Error::Config(format!(
                "n_mfcc must satisfy 1 <= n_mfcc <= n_mel_filters (got {} vs {})",
                self.n_mfcc, self.n_mel_filters
            )));
        }
        if self.n_mel_filters == 0 {
            return Err(Error::Config("need at least one mel filter".into()));
        }
        let nyquist = self.sr as f64 / 2.0;
        let fmax = self.fmax();
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= nyquist) {
            return Err(Error::Config(format!(
                "need 0 <= fmin < fmax <= sr/2 (got fmin={}, fmax={}, sr/2={})",
                self.fmin, fmax, nyquist
            )));
        }
        Ok(())
    }

    /// FNV-1a hash over the fields; binds feature vectors to the exact
    /// configuration that produced them.
    pub fn config_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        eat(&(self.n_mfcc as u64).to_le_bytes());
        eat(&[self.include_extras as u8]);
        eat(&(self.n_fft as u64).to_le_bytes());
        eat(&(self.hop as u64).to_le_bytes());
        eat(&(self.n_mel_filters as u64).to_le_bytes());
        eat(&self.fmin.to_bits().to_le_bytes());
        eat(&self.fmax().to_bits().to_le_bytes());
        eat(&self.sr.to_le_bytes());
        h
    }
}

/// Power spectrogram: `n_bins = n_fft/2 + 1` rows by `n_frames` columns,
/// stored frame-major.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    values: Vec<f64>,
    n_bins: usize,
    n_frames: usize,
}

impl Spectrogram {
    fn new(values: Vec<f64>, n_bins: usize, n_frames: usize) -> Self {
        debug_assert_eq!(values.len(), n_bins * n_frames);
        Self { values, n_bins, n_frames }
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn at(&self, bin: usize, frame: usize) -> f64 {
        self.values[frame * self.n_bins + bin]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Mean power per bin across frames.
    pub fn mean_spectrum(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.n_bins];
        for t in 0..self.n_frames {
            for (m, &v) in mean.iter_mut().zip(self.frame(t)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.n_frames as f64;
        }
        mean
    }
}

/// One segment's pooled features: `[mfcc_0 .. mfcc_{n-1}, zcr?, rmse?, sf?]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// Hash of the [`FeatureConfig`] that produced the vector.
    pub config_hash: u64,
}

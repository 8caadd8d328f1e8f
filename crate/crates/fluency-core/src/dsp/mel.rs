//! Slaney-style mel scale and triangular filterbank.

use crate::error::{Error, Result};

use super::FeatureConfig;

const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP; // 15.0
const LOG_STEP: f64 = 0.06875177742094912; // ln(6.4) / 27

/// Hz -> mel; linear below 1 kHz, logarithmic above.
pub fn hz_to_mel(hz: f64) -> f64 {
    if hz >= MIN_LOG_HZ {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / LOG_STEP
    } else {
        hz / F_SP
    }
}

/// mel -> Hz, inverse of [`hz_to_mel`].
pub fn mel_to_hz(mel: f64) -> f64 {
    if mel >= MIN_LOG_MEL {
        MIN_LOG_HZ * (LOG_STEP * (mel - MIN_LOG_MEL)).exp()
    } else {
        F_SP * mel
    }
}

/// Triangular mel filterbank over the power-spectrum bins.
///
/// Filter centers are uniformly spaced in mel between `fmin` and `fmax`;
/// every row is area-normalized by `2 / (f_hi - f_lo)` so the bank has
/// roughly constant energy per channel. Rows are stored dense plus a
/// `[start, end)` bin span for sparse application.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    spans: Vec<(usize, usize)>,
    n_filters: usize,
    n_bins: usize,
}

pub fn mel_filterbank(config: &FeatureConfig) -> Result<MelFilterbank> {
    config.validate()?;
    let n_bins = config.n_fft / 2 + 1;
    let n_filters = config.n_mel_filters;
    let fmax = config.fmax();

    // Bin center frequencies 0 .. sr/2.
    let bin_hz: Vec<f64> =
        (0..n_bins).map(|k| k as f64 * config.sr as f64 / config.n_fft as f64).collect();

    // n_filters + 2 corner frequencies, uniform in mel.
    let mel_lo = hz_to_mel(config.fmin);
    let mel_hi = hz_to_mel(fmax);
    let corners: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_filters + 1) as f64))
        .collect();

    let mut weights = vec![0.0; n_filters * n_bins];
    let mut spans = Vec::with_capacity(n_filters);
    for f in 0..n_filters {
        let (lo, center, hi) = (corners[f], corners[f + 1], corners[f + 2]);
        let enorm = 2.0 / (hi - lo);
        let row = &mut weights[f * n_bins..(f + 1) * n_bins];
        let mut start = n_bins;
        let mut end = 0;
        for (k, &hz) in bin_hz.iter().enumerate() {
            let lower = (hz - lo) / (center - lo);
            let upper = (hi - hz) / (hi - center);
            let w = lower.min(upper).max(0.0);
            if w > 0.0 {
                row[k] = w * enorm;
                start = start.min(k);
                end = k + 1;
            }
        }
        if start >= end {
            return Err(Error::Config(format!(
                "mel filter {f} spans no spectrum bins; lower n_mel_filters or raise n_fft"
            )));
        }
        spans.push((start, end));
    }

    Ok(MelFilterbank { weights, spans, n_filters, n_bins })
}

impl MelFilterbank {
    pub fn n_filters(&self) -> usize {
        self.n_filters
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, f: usize) -> &[f64] {
        &self.weights[f * self.n_bins..(f + 1) * self.n_bins]
    }

    /// Projects one power-spectrum frame onto the bank; `out.len()` must be
    /// `n_filters`.
    pub fn project(&self, power: &[f64], out: &mut [f64]) {
        debug_assert_eq!(power.len(), self.n_bins);
        debug_assert_eq!(out.len(), self.n_filters);
        for (f, slot) in out.iter_mut().enumerate() {
            let (start, end) = self.spans[f];
            let row = &self.weights[f * self.n_bins + start..f * self.n_bins + end];
            let seg = &power[start..end];
            *slot = row.iter().zip(seg).map(|(w, p)| w * p).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_constants() {
        assert!((hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
        assert!((hz_to_mel(200.0) - 3.0).abs() < 1e-12);
        assert!((mel_to_hz(15.0) - 1000.0).abs() < 1e-9);
        assert!(hz_to_mel(0.0) == 0.0);
    }

    #[test]
    fn scale_round_trips() {
        for hz in [0.0, 60.0, 440.0, 999.0, 1000.0, 4000.0, 11025.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-6, "{hz}");
        }
    }

    #[test]
    fn default_bank_rows_are_triangular() {
        let config = FeatureConfig::default();
        let bank = mel_filterbank(&config).unwrap();
        assert_eq!(bank.n_filters(), 128);
        assert_eq!(bank.n_bins(), 1025);
        for f in 0..bank.n_filters() {
            let row = bank.row(f);
            assert!(row.iter().all(|&w| w >= 0.0), "filter {f} has negative weight");
            let peak = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!(peak > 0 || f == 0, "filter {f} peaks at the edge");
            // Monotone up to the peak, monotone down after: single interior max.
            for k in 1..=peak {
                assert!(row[k] >= row[k - 1], "filter {f} not rising at bin {k}");
            }
            for k in peak + 1..row.len() {
                assert!(row[k] <= row[k - 1], "filter {f} not falling at bin {k}");
            }
            let positive = row.iter().filter(|&&w| w > 0.0).count();
            assert!(positive >= 1, "filter {f} empty");
        }
    }

    #[test]
    fn rows_are_zero_outside_their_corner_frequencies() {
        let config = FeatureConfig::default();
        let bank = mel_filterbank(&config).unwrap();
        let mel_lo = hz_to_mel(config.fmin);
        let mel_hi = hz_to_mel(config.fmax());
        let corner = |i: usize| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / 129.0);
        for f in 0..bank.n_filters() {
            let (lo, hi) = (corner(f), corner(f + 2));
            for (k, &w) in bank.row(f).iter().enumerate() {
                let hz = k as f64 * config.sr as f64 / config.n_fft as f64;
                if hz <= lo || hz >= hi {
                    assert_eq!(w, 0.0, "filter {f} leaks at bin {k}");
                }
            }
        }
    }

    #[test]
    fn matches_reference_filterbank_weights() {
        // Reference values for sr=22050, n_fft=2048, 128 filters, Slaney
        // scale and norm (the de-facto standard audio-analysis defaults).
        assert!((hz_to_mel(60.0) - 0.8999999999999999).abs() < 1e-15);
        assert!((hz_to_mel(440.0) - 6.6).abs() < 1e-12);
        assert!((hz_to_mel(11025.0) - 49.91059448015905).abs() < 1e-12);

        let bank = mel_filterbank(&FeatureConfig::default()).unwrap();
        let row0_expected = [
            0.0,
            0.016182853208219942,
            0.032365706416439884,
            0.028990088037379964,
            0.012807234829160026,
            0.0,
        ];
        for (k, want) in row0_expected.iter().enumerate() {
            assert!((bank.row(0)[k] - want).abs() < 1e-12, "row 0 bin {k}");
        }
        let row1_expected = [
            0.0,
            0.0,
            0.0,
            0.009779235793639925,
            0.025962089001859864,
            0.035393705451959974,
            0.01921085224374004,
            0.003027999035520103,
            0.0,
        ];
        for (k, want) in row1_expected.iter().enumerate() {
            assert!((bank.row(1)[k] - want).abs() < 1e-12, "row 1 bin {k}");
        }
    }

    #[test]
    fn unresolvable_filters_error() {
        let config =
            FeatureConfig { n_fft: 64, hop: 16, n_mel_filters: 64, n_mfcc: 4, ..Default::default() };
        assert!(matches!(mel_filterbank(&config).unwrap_err(), Error::Config(_)));
    }
}

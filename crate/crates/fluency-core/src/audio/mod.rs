//! Audio ingestion: WAV decoding, mono downmix, band-limited resampling.
//!
//! Everything downstream expects one canonical form: mono samples in
//! `[-1.0, 1.0]` at [`CANONICAL_SAMPLE_RATE`]. Sources at other rates or
//! channel counts are converted on the way in.

mod resample;
mod wav;

pub use resample::resample;
pub use wav::{decode_wav, encode_wav};

/// Pipeline sample rate; every segment is resampled to this before feature
/// extraction so frame counts and feature dimensions are comparable.
pub const CANONICAL_SAMPLE_RATE: u32 = 22050;

/// Decoded audio. Samples are interleaved while `channels > 1`; the rest of
/// the pipeline operates on mono buffers only.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    /// Normalized amplitudes in `[-1.0, 1.0]`, interleaved across channels.
    pub samples: Vec<f64>,
    /// Sample rate in Hz, always positive.
    pub sample_rate: u32,
    /// Channel count; 1 after [`downmix_mono`].
    pub channels: u16,
    /// Opaque name of the origin file.
    pub source_id: String,
}

impl AudioBuffer {
    pub fn mono(samples: Vec<f64>, sample_rate: u32, source_id: impl Into<String>) -> Self {
        Self { samples, sample_rate, channels: 1, source_id: source_id.into() }
    }

    /// Number of sample frames (samples per channel).
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn is_mono(&self) -> bool {
        self.channels == 1
    }
}

/// Averages interleaved channels into one. Mono input is returned unchanged,
/// which also makes the operation idempotent.
pub fn downmix_mono(buffer: AudioBuffer) -> AudioBuffer {
    if buffer.channels <= 1 {
        return buffer;
    }
    let ch = buffer.channels as usize;
    let frames = buffer.samples.len() / ch;
    let mut mono = Vec::with_capacity(frames);
    for frame in buffer.samples.chunks_exact(ch) {
        mono.push(frame.iter().sum::<f64>() / ch as f64);
    }
    AudioBuffer {
        samples: mono,
        sample_rate: buffer.sample_rate,
        channels: 1,
        source_id: buffer.source_id,
    }
}

//! Fixed-length segmentation and label binding.
//!
//! Conversations are cut into 5-second non-overlapped segments; speaker and
//! fluency labels come from a manifest CSV rather than from the audio.

mod dataset;
pub(crate) mod manifest;

pub use dataset::{build_dataset, Dataset, DatasetRow, DEFAULT_SEGMENT_SECONDS};
pub use manifest::{load_manifest, Manifest, ManifestEntry, MANIFEST_FORMAT_VERSION};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Fluency class, ordered Low = 0, Intermediate = 1, High = 2 everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fluency {
    Low,
    Intermediate,
    High,
}

pub const CLASS_COUNT: usize = 3;

impl Fluency {
    pub const ALL: [Fluency; CLASS_COUNT] = [Fluency::Low, Fluency::Intermediate, Fluency::High];

    pub fn index(self) -> usize {
        match self {
            Fluency::Low => 0,
            Fluency::Intermediate => 1,
            Fluency::High => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Fluency> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Fluency::Low => "low",
            Fluency::Intermediate => "intermediate",
            Fluency::High => "high",
        }
    }

    /// Case-insensitive parse of a label token.
    pub fn parse(token: &str) -> Option<Fluency> {
        match token.to_ascii_lowercase().as_str() {
            "low" => Some(Fluency::Low),
            "intermediate" => Some(Fluency::Intermediate),
            "high" => Some(Fluency::High),
            _ => None,
        }
    }

    /// Class owning a rubric sublevel: 0-1 low, 2-3 intermediate, 4-5 high.
    pub fn from_sublevel(sublevel: u8) -> Option<Fluency> {
        match sublevel {
            0 | 1 => Some(Fluency::Low),
            2 | 3 => Some(Fluency::Intermediate),
            4 | 5 => Some(Fluency::High),
            _ => None,
        }
    }
}

impl std::fmt::Display for Fluency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fluency class plus the optional 0-5 rubric band it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FluencyLabel {
    pub class: Fluency,
    pub sublevel: Option<u8>,
}

impl FluencyLabel {
    /// Builds a label, enforcing class/sublevel consistency.
    pub fn new(class: Fluency, sublevel: Option<u8>) -> Result<Self> {
        if let Some(s) = sublevel {
            match Fluency::from_sublevel(s) {
                Some(owner) if owner == class => {}
                Some(owner) => {
                    return Err(Error::Manifest(format!(
                        "sublevel {s} belongs to class '{owner}', not '{class}'"
                    )))
                }
                None => return Err(Error::Manifest(format!("sublevel {s} outside 0..=5"))),
            }
        }
        Ok(Self { class, sublevel })
    }

    pub fn class_only(class: Fluency) -> Self {
        Self { class, sublevel: None }
    }
}

/// One fixed-duration slice of a source, bound to its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Samples at the canonical rate; always the full segment length
    /// (zero-padded when `padded` is set).
    pub samples: Vec<f64>,
    pub source_id: String,
    /// Ordinal position within the source.
    pub index: usize,
    pub speaker_id: String,
    pub label: FluencyLabel,
    pub duration_s: f64,
    /// True for a final partial segment that was zero-padded to full length.
    pub padded: bool,
}

/// Cuts a mono buffer into consecutive non-overlapped segments of
/// `segment_s` seconds.
///
/// With `drop_partial` the trailing remainder is discarded and segment `i`
/// holds exactly `buffer[i*L .. (i+1)*L]`; otherwise the remainder is
/// zero-padded to full length and flagged. A buffer shorter than one segment
/// yields an empty vector.
pub fn segment_fixed(
    buffer: &AudioBuffer,
    segment_s: f64,
    drop_partial: bool,
    speaker_id: &str,
    label: FluencyLabel,
) -> Result<Vec<Segment>> {
    if !buffer.is_mono() {
        return Err(Error::Config("segment_fixed expects a mono buffer".into()));
    }
    if !(segment_s > 0.0) {
        return Err(Error::Config("segment length must be positive".into()));
    }
    let len = (segment_s * buffer.sample_rate as f64).round() as usize;
    if len == 0 {
        return Err(Error::Config("segment length rounds to zero samples".into()));
    }

    let full = buffer.samples.len() / len;
    let remainder = buffer.samples.len() % len;
    let mut segments = Vec::with_capacity(full + 1);
    for i in 0..full {
        segments.push(Segment {
            samples: buffer.samples[i * len..(i + 1) * len].to_vec(),
            source_id: buffer.source_id.clone(),
            index: i,
            speaker_id: speaker_id.to_string(),
            label,
            duration_s: segment_s,
            padded: false,
        });
    }
    if !drop_partial && remainder > 0 {
        let mut samples = buffer.samples[full * len..].to_vec();
        samples.resize(len, 0.0);
        segments.push(Segment {
            samples,
            source_id: buffer.source_id.clone(),
            index: full,
            speaker_id: speaker_id.to_string(),
            label,
            duration_s: segment_s,
            padded: true,
        });
    }
    Ok(segments)
}

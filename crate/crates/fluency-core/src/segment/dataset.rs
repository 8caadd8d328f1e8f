//! Dataset assembly: manifest -> decoded audio -> segments -> features.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::audio::{decode_wav, downmix_mono, resample};
use crate::dsp::{FeatureConfig, FeatureExtractor};
use crate::error::{Error, Result};
use crate::mat::Matrix;

use super::{segment_fixed, Fluency, FluencyLabel, Manifest, ManifestEntry, CLASS_COUNT};

/// Segment length used throughout the pipeline.
pub const DEFAULT_SEGMENT_SECONDS: f64 = 5.0;

/// One labeled feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub source_id: String,
    pub index: usize,
    pub speaker_id: String,
    pub label: FluencyLabel,
    pub features: Vec<f64>,
}

/// Manifest-backed collection of labeled feature vectors.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub dim: usize,
    pub segment_seconds: f64,
}

impl Dataset {
    pub fn class_counts(&self) -> [usize; CLASS_COUNT] {
        let mut counts = [0usize; CLASS_COUNT];
        for row in &self.rows {
            counts[row.label.class.index()] += 1;
        }
        counts
    }

    pub fn total_minutes(&self) -> f64 {
        self.rows.len() as f64 * self.segment_seconds / 60.0
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature matrix in row order.
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&row.features);
        }
        m
    }

    /// Class indices in row order.
    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label.class.index()).collect()
    }

    /// Writes the interchange CSV: `source,index,speaker,label,f0..f{d-1}`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let mut header = vec![
            "source".to_string(),
            "index".to_string(),
            "speaker".to_string(),
            "label".to_string(),
        ];
        header.extend((0..self.dim).map(|i| format!("f{i}")));
        w.write_record(&header).map_err(|e| Error::Dataset(e.to_string()))?;
        for row in &self.rows {
            let mut record = vec![
                row.source_id.clone(),
                row.index.to_string(),
                row.speaker_id.clone(),
                row.label.class.as_str().to_string(),
            ];
            record.extend(row.features.iter().map(|v| format!("{v}")));
            w.write_record(&record).map_err(|e| Error::Dataset(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the interchange CSV back.
    pub fn read_csv(path: &Path) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        let headers = r.headers().map_err(|e| Error::Dataset(e.to_string()))?.clone();
        let fields: Vec<&str> = headers.iter().collect();
        if fields.len() < 5 || fields[..4] != ["source", "index", "speaker", "label"] {
            return Err(Error::Dataset(format!(
                "{}: unexpected feature CSV header",
                path.display()
            )));
        }
        let dim = fields.len() - 4;
        for (i, name) in fields[4..].iter().enumerate() {
            if *name != format!("f{i}") {
                return Err(Error::Dataset(format!(
                    "{}: feature column {i} is named '{name}'",
                    path.display()
                )));
            }
        }

        let mut rows = Vec::new();
        for (i, record) in r.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| Error::Dataset(format!("row {row_no}: {e}")))?;
            let class = Fluency::parse(record.get(3).unwrap_or("")).ok_or_else(|| {
                Error::Dataset(format!(
                    "row {row_no}: unknown label '{}'",
                    record.get(3).unwrap_or("")
                ))
            })?;
            let mut features = Vec::with_capacity(dim);
            for j in 0..dim {
                let field = record.get(4 + j).unwrap_or("");
                features.push(field.parse::<f64>().map_err(|_| {
                    Error::Dataset(format!("row {row_no}: bad feature value '{field}'"))
                })?);
            }
            rows.push(DatasetRow {
                source_id: record.get(0).unwrap_or("").to_string(),
                index: record
                    .get(1)
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| Error::Dataset(format!("row {row_no}: bad index")))?,
                speaker_id: record.get(2).unwrap_or("").to_string(),
                label: FluencyLabel::class_only(class),
                features,
            });
        }
        if rows.is_empty() {
            return Err(Error::Dataset(format!("{}: no feature rows", path.display())));
        }
        Ok(Dataset { rows, dim, segment_seconds: DEFAULT_SEGMENT_SECONDS })
    }
}

fn process_entry(
    manifest: &Manifest,
    entry: &ManifestEntry,
    extractor: &FeatureExtractor,
) -> Result<Vec<DatasetRow>> {
    let path = manifest.resolve(entry);
    let context = |e: Error| match e {
        Error::Io(io) => Error::Decode(format!("{}: {io}", path.display())),
        Error::Decode(m) => Error::Decode(format!("{}: {m}", path.display())),
        Error::UnsupportedFormat(m) => Error::UnsupportedFormat(format!("{}: {m}", path.display())),
        other => other,
    };

    let bytes = fs::read(&path).map_err(|e| context(Error::Io(e)))?;
    let source_id = entry.wav_path.display().to_string();
    let decoded = decode_wav(&bytes, &source_id).map_err(context)?;
    let mono = downmix_mono(decoded);
    let canonical = resample(&mono, extractor.config().sr)?;
    let segments = segment_fixed(
        &canonical,
        DEFAULT_SEGMENT_SECONDS,
        true,
        &entry.speaker_id,
        entry.label,
    )?;

    let selected: Vec<_> = match entry.segments {
        None => segments.iter().collect(),
        Some((start, end)) => {
            if end >= segments.len() {
                return Err(Error::Dataset(format!(
                    "{}: segment range {start}-{end} exceeds the {} available segments",
                    path.display(),
                    segments.len()
                )));
            }
            segments[start..=end].iter().collect()
        }
    };

    selected
        .into_iter()
        .map(|seg| {
            let features = extractor
                .extract(&seg.samples)
                .map_err(|e| Error::Extraction(format!("{}[{}]: {e}", path.display(), seg.index)))?;
            Ok(DatasetRow {
                source_id: seg.source_id.clone(),
                index: seg.index,
                speaker_id: seg.speaker_id.clone(),
                label: seg.label,
                features: features.values,
            })
        })
        .collect()
}

/// Decodes, canonicalizes, segments and extracts every manifest entry.
///
/// Entries are processed in parallel; output row order always follows
/// manifest order.
pub fn build_dataset(manifest: &Manifest, config: &FeatureConfig) -> Result<Dataset> {
    if manifest.entries.is_empty() {
        return Err(Error::Dataset("manifest has no entries".into()));
    }
    let extractor = FeatureExtractor::new(config.clone())?;

    let per_entry: Vec<Result<Vec<DatasetRow>>> = manifest
        .entries
        .par_iter()
        .map(|entry| process_entry(manifest, entry, &extractor))
        .collect();

    let mut rows = Vec::new();
    for result in per_entry {
        rows.extend(result?);
    }
    if rows.is_empty() {
        return Err(Error::Dataset(
            "manifest produced no segments (all sources shorter than one segment?)".into(),
        ));
    }
    Ok(Dataset { rows, dim: config.dim(), segment_seconds: DEFAULT_SEGMENT_SECONDS })
}

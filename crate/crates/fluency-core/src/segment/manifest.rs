//! Manifest CSV: binds WAV files to speaker ids and fluency labels.
//!
//! Format (version 1): header `path,speaker,label,sublevel` with an optional
//! trailing `segments` column. `label` is one of low/intermediate/high
//! (case-insensitive); `sublevel` is an optional 0-5 rubric band; `segments`
//! restricts a row to an inclusive index range (`12` or `0-59`), which is how
//! per-segment label overrides are expressed. Paths are resolved relative to
//! the manifest's directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{Fluency, FluencyLabel};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

const HEADER: [&str; 4] = ["path", "speaker", "label", "sublevel"];
const HEADER_SEGMENTS: &str = "segments";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// Path exactly as written in the CSV.
    pub wav_path: PathBuf,
    pub speaker_id: String,
    pub label: FluencyLabel,
    /// Inclusive segment-index range this row covers; `None` = whole file.
    pub segments: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory wav paths are resolved against.
    pub base_dir: PathBuf,
    pub format_version: u32,
}

impl Manifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.wav_path.is_absolute() {
            entry.wav_path.clone()
        } else {
            self.base_dir.join(&entry.wav_path)
        }
    }
}

fn parse_range(token: &str, row: usize) -> Result<(usize, usize)> {
    let parse_one = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Manifest(format!("row {row}: bad segment index '{s}'")))
    };
    match token.split_once('-') {
        Some((a, b)) => {
            let (start, end) = (parse_one(a)?, parse_one(b)?);
            if start > end {
                return Err(Error::Manifest(format!(
                    "row {row}: segment range '{token}' is reversed"
                )));
            }
            Ok((start, end))
        }
        None => {
            let i = parse_one(token)?;
            Ok((i, i))
        }
    }
}

/// Loads and validates a manifest CSV.
///
/// Validation covers header shape, label tokens, sublevel consistency,
/// duplicate `(path, segment-index)` coverage, and file existence (all
/// missing paths are reported together).
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?
        .clone();
    let fields: Vec<&str> = headers.iter().map(str::trim).collect();
    let with_segments = match fields.as_slice() {
        f if f == HEADER => false,
        [a, b, c, d, e] if [*a, *b, *c, *d] == HEADER && *e == HEADER_SEGMENTS => true,
        _ => {
            return Err(Error::Manifest(format!(
                "unexpected header '{}'; want 'path,speaker,label,sublevel[,segments]'",
                fields.join(",")
            )))
        }
    };

    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1; // 1-based data rows
        let record = record.map_err(|e| Error::Manifest(format!("row {row}: {e}")))?;
        let field = |j: usize| record.get(j).unwrap_or("").trim();

        let wav = field(0);
        if wav.is_empty() {
            return Err(Error::Manifest(format!("row {row}: empty path")));
        }
        let label_token = field(2);
        let class = Fluency::parse(label_token)
            .ok_or_else(|| Error::Manifest(format!("row {row}: unknown label '{label_token}'")))?;
        let sublevel = match field(3) {
            "" => None,
            s => Some(s.parse::<u8>().map_err(|_| {
                Error::Manifest(format!("row {row}: bad sublevel '{s}'"))
            })?),
        };
        let label = FluencyLabel::new(class, sublevel)
            .map_err(|e| Error::Manifest(format!("row {row}: {e}")))?;
        let segments = if with_segments {
            match field(4) {
                "" => None,
                token => Some(parse_range(token, row)?),
            }
        } else {
            None
        };

        entries.push(ManifestEntry {
            wav_path: PathBuf::from(wav),
            speaker_id: field(1).to_string(),
            label,
            segments,
        });
    }

    let manifest = Manifest { entries, base_dir, format_version: MANIFEST_FORMAT_VERSION };
    validate_coverage(&manifest)?;
    validate_paths(&manifest)?;
    Ok(manifest)
}

/// Rejects rows whose segment coverage overlaps for the same path.
fn validate_coverage(manifest: &Manifest) -> Result<()> {
    let mut by_path: HashMap<&Path, Vec<Option<(usize, usize)>>> = HashMap::new();
    for entry in &manifest.entries {
        by_path.entry(entry.wav_path.as_path()).or_default().push(entry.segments);
    }
    for (path, ranges) in by_path {
        if ranges.len() > 1 && ranges.iter().any(Option::is_none) {
            return Err(Error::Manifest(format!(
                "{}: whole-file row combined with other rows covers duplicate segments",
                path.display()
            )));
        }
        let mut spans: Vec<(usize, usize)> = ranges.into_iter().flatten().collect();
        spans.sort_unstable();
        for pair in spans.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(Error::Manifest(format!(
                    "{}: segment ranges {}-{} and {}-{} overlap",
                    path.display(),
                    pair[0].0,
                    pair[0].1,
                    pair[1].0,
                    pair[1].1
                )));
            }
        }
    }
    Ok(())
}

fn validate_paths(manifest: &Manifest) -> Result<()> {
    let mut missing: Vec<String> = manifest
        .entries
        .iter()
        .map(|e| manifest.resolve(e))
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    missing.sort();
    missing.dedup();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Manifest(format!("missing wav files: {}", missing.join(", "))))
    }
}

/// Writes a manifest CSV (always with the `segments` column present).
pub(crate) fn write_manifest_csv(
    path: &Path,
    rows: &[(String, String, FluencyLabel, Option<(usize, usize)>)],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    w.write_record(["path", "speaker", "label", "sublevel", "segments"])
        .map_err(|e| Error::Manifest(e.to_string()))?;
    for (wav, speaker, label, range) in rows {
        let sublevel = label.sublevel.map(|s| s.to_string()).unwrap_or_default();
        let segments = match range {
            None => String::new(),
            Some((a, b)) if a == b => a.to_string(),
            Some((a, b)) => format!("{a}-{b}"),
        };
        w.write_record([wav.as_str(), speaker, label.class.as_str(), &sublevel, &segments])
            .map_err(|e| Error::Manifest(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

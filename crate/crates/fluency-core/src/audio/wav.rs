//! Minimal RIFF/WAVE codec: reads 16-bit PCM and 32-bit IEEE float, writes
//! the canonical 16-bit PCM mono form used by the synthetic generator.

use super::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

const MIN_SAMPLE_RATE: u32 = 8_000;
const MAX_SAMPLE_RATE: u32 = 192_000;

/// 16-bit PCM normalization divisor (symmetric full scale).
const PCM16_SCALE: f64 = 32768.0;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Decode(format!(
                "truncated file: wanted {} bytes at offset {}, have {}",
                n,
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self) -> Result<[u8; 4]> {
        let b = self.take(4)?;
        Ok([b[0], b[1], b[2], b[3]])
    }
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

/// Decodes a RIFF/WAVE byte stream.
///
/// Accepts integer PCM 16-bit and IEEE float 32-bit, 1-2 channels, sample
/// rates in 8000..=192000 Hz. Multi-channel audio stays interleaved in the
/// returned buffer until [`super::downmix_mono`] runs.
pub fn decode_wav(bytes: &[u8], source_id: &str) -> Result<AudioBuffer> {
    let mut r = Reader { bytes, pos: 0 };
    if r.tag()? != *b"RIFF" {
        return Err(Error::Decode("missing RIFF magic".into()));
    }
    let _riff_size = r.u32()?;
    if r.tag()? != *b"WAVE" {
        return Err(Error::Decode("missing WAVE form type".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    while r.pos < bytes.len() {
        // A final stray byte is RIFF word padding, not a chunk.
        if bytes.len() - r.pos < 8 {
            break;
        }
        let id = r.tag()?;
        let size = r.u32()? as usize;
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(Error::Decode(format!("fmt chunk too short ({size} bytes)")));
                }
                let body = r.take(size)?;
                fmt = Some(FmtChunk {
                    format: u16::from_le_bytes([body[0], body[1]]),
                    channels: u16::from_le_bytes([body[2], body[3]]),
                    sample_rate: u32::from_le_bytes([body[4], body[5], body[6], body[7]]),
                    bits_per_sample: u16::from_le_bytes([body[14], body[15]]),
                });
            }
            b"data" => {
                data = Some(r.take(size)?);
            }
            _ => {
                // Skip unknown chunks (LIST, fact, ...), honoring word alignment.
                r.take(size.min(bytes.len() - r.pos))?;
            }
        }
        if size % 2 == 1 && r.pos < bytes.len() {
            r.pos += 1;
        }
    }

    let fmt = fmt.ok_or_else(|| Error::Decode("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Decode("no data chunk".into()))?;

    if fmt.format != FORMAT_PCM && fmt.format != FORMAT_IEEE_FLOAT {
        return Err(Error::UnsupportedFormat(format!(
            "fmt code {} (only PCM int 1 and IEEE float 3 are read)",
            fmt.format
        )));
    }
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(Error::UnsupportedFormat(format!("{} channels", fmt.channels)));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::Decode("zero sample rate".into()));
    }
    if !(MIN_SAMPLE_RATE..=MAX_SAMPLE_RATE).contains(&fmt.sample_rate) {
        return Err(Error::UnsupportedFormat(format!(
            "sample rate {} Hz outside {}..={} Hz",
            fmt.sample_rate, MIN_SAMPLE_RATE, MAX_SAMPLE_RATE
        )));
    }

    let samples = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => {
            if data.len() % 2 != 0 {
                return Err(Error::Decode("data chunk not a whole number of 16-bit samples".into()));
            }
            data.chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / PCM16_SCALE)
                .collect::<Vec<_>>()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            if data.len() % 4 != 0 {
                return Err(Error::Decode("data chunk not a whole number of 32-bit samples".into()));
            }
            data.chunks_exact(4)
                .map(|b| (f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64).clamp(-1.0, 1.0))
                .collect::<Vec<_>>()
        }
        (f, bits) => {
            return Err(Error::UnsupportedFormat(format!("fmt code {f} at {bits} bits per sample")))
        }
    };

    if samples.len() % fmt.channels as usize != 0 {
        return Err(Error::Decode("data chunk not a whole number of frames".into()));
    }

    Ok(AudioBuffer {
        samples,
        sample_rate: fmt.sample_rate,
        channels: fmt.channels,
        source_id: source_id.to_string(),
    })
}

/// Encodes a mono buffer as canonical 16-bit PCM WAV.
pub fn encode_wav(buffer: &AudioBuffer) -> Result<Vec<u8>> {
    if !buffer.is_mono() {
        return Err(Error::Config("encode_wav expects a mono buffer".into()));
    }
    let n = buffer.samples.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &buffer.samples {
        let v = (s * PCM16_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

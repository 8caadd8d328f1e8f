//! Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Zero crossings of the sinc kernel on each side of the center tap.
const ZERO_CROSSINGS: f64 = 32.0;
/// Kaiser window shape parameter.
const KAISER_BETA: f64 = 8.6;

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut m = 1.0;
    loop {
        term *= (half / m) * (half / m);
        sum += term;
        if term < sum * 1e-16 {
            return sum;
        }
        m += 1.0;
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Resamples a mono buffer to `target_sr`.
///
/// The kernel low-passes at 90%-safe margin below the smaller of the two
/// Nyquist frequencies, so content above the output Nyquist aliases into
/// nothing rather than erroring. Equal rates pass the buffer through
/// untouched. Per-output-position kernel sums are normalized, which keeps DC
/// exact everywhere including near the edges.
pub fn resample(buffer: &AudioBuffer, target_sr: u32) -> Result<AudioBuffer> {
    if !buffer.is_mono() {
        return Err(Error::Config("resample expects a mono buffer".into()));
    }
    if target_sr == 0 {
        return Err(Error::Config("target sample rate must be positive".into()));
    }
    if target_sr == buffer.sample_rate {
        return Ok(buffer.clone());
    }

    let src = &buffer.samples;
    let n_in = src.len();
    let ratio = target_sr as f64 / buffer.sample_rate as f64;
    let n_out = (n_in as f64 * ratio).round() as usize;
    if n_in == 0 || n_out == 0 {
        return Ok(AudioBuffer {
            samples: Vec::new(),
            sample_rate: target_sr,
            channels: 1,
            source_id: buffer.source_id.clone(),
        });
    }

    // Cutoff in cycles per *input* sample: half the smaller Nyquist.
    let cutoff = 0.5 * ratio.min(1.0);
    let half_width = ZERO_CROSSINGS / (2.0 * cutoff);
    let i0_beta = bessel_i0(KAISER_BETA);

    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let t = j as f64 / ratio;
        let lo = ((t - half_width).ceil() as i64).max(0) as usize;
        let hi = ((t + half_width).floor() as i64).min(n_in as i64 - 1) as usize;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (i, &s) in src[lo..=hi].iter().enumerate() {
            let x = (lo + i) as f64 - t;
            let u = x / half_width;
            let window = bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / i0_beta;
            let k = 2.0 * cutoff * sinc(2.0 * cutoff * x) * window;
            acc += s * k;
            norm += k;
        }
        out.push(if norm != 0.0 { acc / norm } else { 0.0 });
    }

    Ok(AudioBuffer {
        samples: out,
        sample_rate: target_sr,
        channels: 1,
        source_id: buffer.source_id.clone(),
    })
}

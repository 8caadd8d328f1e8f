//! Speaker-fluency classification pipeline.
//!
//! The crate covers the full workflow for scoring the fluency of 5-second
//! speech segments:
//!
//! ```text
//! WAV files ─► audio (decode, downmix, resample to 22050 Hz)
//!           ─► segment (5 s non-overlapped cuts + manifest labels)
//!           ─► dsp (MFCC / ZCR / RMSE / spectral-flux feature vectors)
//!           ─► classify (SVM, random forest, MLP — trained from scratch)
//!           ─► eval (train/test split, accuracy, confusion, sweeps)
//! ```
//!
//! `synth` generates a labeled synthetic corpus so the pipeline can be
//! exercised end to end without any external recordings.

pub mod audio;
pub mod classify;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod mat;
pub mod rng;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};

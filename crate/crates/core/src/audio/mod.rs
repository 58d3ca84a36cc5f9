//! Mono audio clips and 16-bit PCM WAV I/O.

mod synth;

pub use synth::{synth_exercise, synth_pluck, ScoreEntry, SynthScore, TempoPolicy};

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("no such file: {}", .0.display())]
    Missing(PathBuf),
    #[error("{}: unsupported encoding ({detail}); expected 16-bit integer PCM", path.display())]
    UnsupportedEncoding { path: PathBuf, detail: String },
    #[error("{}: truncated data chunk", .0.display())]
    Truncated(PathBuf),
    #[error("{}: malformed WAV header: {detail}", path.display())]
    Malformed { path: PathBuf, detail: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid clip: {0}")]
    InvalidClip(String),
    #[error("infeasible synthesis: {0}")]
    InfeasibleSynth(String),
}

/// A mono clip. Samples are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::InvalidClip(format!("non-finite sample at {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

fn map_hound(path: &Path, err: hound::Error) -> AudioError {
    match err {
        hound::Error::IoError(e) if e.kind() == io::ErrorKind::NotFound => {
            AudioError::Missing(path.to_path_buf())
        }
        hound::Error::IoError(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
            AudioError::Truncated(path.to_path_buf())
        }
        hound::Error::IoError(source) => AudioError::Io {
            path: path.to_path_buf(),
            source,
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "format not recognised".into(),
        },
        other => AudioError::Malformed {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Reads a 16-bit PCM WAV file, averaging channels down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{:?} {}-bit", spec.sample_format, spec.bits_per_sample),
        });
    }
    let channels = usize::from(spec.channels.max(1));
    let declared = reader.len() as usize;
    let raw = reader
        .into_samples::<i16>()
        .collect::<Result<Vec<i16>, _>>()
        .map_err(|e| match e {
            // the header parsed, so running out of bytes means a short data chunk
            hound::Error::IoError(_) => AudioError::Truncated(path.to_path_buf()),
            other => map_hound(path, other),
        })?;
    if raw.len() != declared || raw.len() % channels != 0 {
        return Err(AudioError::Truncated(path.to_path_buf()));
    }
    let scale = 1.0 / 32768.0;
    let samples = raw
        .chunks_exact(channels)
        .map(|frame| {
            let sum: f32 = frame.iter().map(|&s| f32::from(s) * scale).sum();
            sum / channels as f32
        })
        .collect();
    AudioClip::new(samples, spec.sample_rate)
}

/// Quantizes one sample to 16 bits, saturating outside [-1, 1).
pub fn quantize(sample: f32) -> i16 {
    (f64::from(sample) * 32768.0)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &clip.samples {
        writer
            .write_sample(quantize(s))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

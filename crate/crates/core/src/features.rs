//! 39-dimensional MFCC streams: 13 cepstra plus velocity and acceleration.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::audio::AudioClip;

pub const CEPSTRA: usize = 13;
pub const FEATURE_DIM: usize = 3 * CEPSTRA;

pub type Frame = [f64; FEATURE_DIM];
pub type StaticFrame = [f64; CEPSTRA];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("clip has {samples} samples but one frame needs {frame}")]
    TooShort { samples: usize, frame: usize },
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("frame index {index} out of range 0..={frames}")]
    FrameOutOfRange { index: usize, frames: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub frame_length: f64,
    pub hop: f64,
    pub pre_emphasis: f64,
    pub mel_filters: usize,
    pub delta_window: usize,
    pub log_floor: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_length: 0.025,
            hop: 0.010,
            pre_emphasis: 0.97,
            mel_filters: 26,
            delta_window: 2,
            log_floor: 1e-10,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let bad = |m: &str| Err(FeatureError::InvalidConfig(m.to_string()));
        if !(self.hop > 0.0 && self.frame_length > self.hop) {
            return bad("need frame_length > hop > 0");
        }
        if self.mel_filters < CEPSTRA {
            return bad("need at least 13 mel filters");
        }
        if self.delta_window == 0 {
            return bad("delta_window must be at least 1");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return bad("pre_emphasis must be in [0, 1)");
        }
        Ok(())
    }

    /// Compact, whitespace-free description used to tie trained models to
    /// the features they were trained on.
    pub fn fingerprint(&self) -> String {
        format!(
            "frame={};hop={};pre={};mel={};cep={};dw={};floor={:e}",
            self.frame_length,
            self.hop,
            self.pre_emphasis,
            self.mel_filters,
            CEPSTRA,
            self.delta_window,
            self.log_floor
        )
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        (self.frame_length * f64::from(sample_rate)).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop * f64::from(sample_rate)).round() as usize).max(1)
    }
}

/// Frames of 39 features. Row `i` starts at `start_offset + i * hop`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    frames: Vec<Frame>,
    hop: f64,
    start_offset: f64,
}

impl FeatureMatrix {
    pub fn new(frames: Vec<Frame>, hop: f64, start_offset: f64) -> Self {
        Self {
            frames,
            hop,
            start_offset,
        }
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn hop(&self) -> f64 {
        self.hop
    }

    pub fn start_offset(&self) -> f64 {
        self.start_offset
    }

    /// Time of the left edge of frame `index`; `index == len()` is the end
    /// of the last segment.
    pub fn frame_time(&self, index: usize) -> Result<f64, FeatureError> {
        if index > self.frames.len() {
            return Err(FeatureError::FrameOutOfRange {
                index,
                frames: self.frames.len(),
            });
        }
        Ok(self.start_offset + index as f64 * self.hop)
    }

    /// First frame whose left edge is at or after `seconds`.
    pub fn frame_at(&self, seconds: f64) -> usize {
        let idx = ((seconds - self.start_offset) / self.hop - 1e-6).ceil();
        (idx.max(0.0) as usize).min(self.frames.len())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = ["c", "d", "a"]
            .iter()
            .flat_map(|p| (0..CEPSTRA).map(move |i| format!("{p}{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.frames {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(",")).expect("write to string");
        }
        out
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with edges evenly spaced on the mel scale from 0 Hz
/// to Nyquist, evaluated at the FFT bin frequencies.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<Vec<(usize, f64)>>,
    centers: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(filters: usize, fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = f64::from(sample_rate) / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (filters + 1) as f64))
            .collect();
        let bin_hz = f64::from(sample_rate) / fft_size as f64;
        let weights = (0..filters)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..=fft_size / 2)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f > lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f < hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect();
        Self {
            weights,
            centers: edges[1..=filters].to_vec(),
        }
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn apply(&self, magnitude: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|ws| ws.iter().map(|&(k, w)| w * magnitude[k]).sum())
            .collect()
    }
}

/// Reusable per-sample-rate state: window, FFT plan, filterbank, DCT basis.
pub struct MfccExtractor {
    cfg: FeatureConfig,
    sample_rate: u32,
    frame: usize,
    hop: usize,
    fft_size: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    bank: MelFilterbank,
    dct: Vec<Vec<f64>>,
}

impl MfccExtractor {
    pub fn new(cfg: &FeatureConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        cfg.validate()?;
        let frame = cfg.frame_samples(sample_rate);
        if frame < 2 {
            return Err(FeatureError::InvalidConfig("frame shorter than two samples".into()));
        }
        let fft_size = frame.next_power_of_two();
        let window = (0..frame)
            .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (frame - 1) as f64).cos())
            .collect();
        let m = cfg.mel_filters;
        let dct = (0..CEPSTRA)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / m as f64).sqrt()
                } else {
                    (2.0 / m as f64).sqrt()
                };
                (0..m)
                    .map(|j| scale * (PI * k as f64 * (j as f64 + 0.5) / m as f64).cos())
                    .collect()
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            sample_rate,
            frame,
            hop: cfg.hop_samples(sample_rate),
            fft_size,
            window,
            fft: FftPlanner::new().plan_fft_forward(fft_size),
            bank: MelFilterbank::new(m, fft_size, sample_rate),
            dct,
        })
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.bank
    }

    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.frame {
            0
        } else {
            1 + (samples - self.frame) / self.hop
        }
    }

    fn check(&self, clip: &AudioClip) -> Result<(), FeatureError> {
        if clip.sample_rate() != self.sample_rate {
            return Err(FeatureError::InvalidConfig(format!(
                "extractor built for {} Hz, clip is {} Hz",
                self.sample_rate,
                clip.sample_rate()
            )));
        }
        if clip.len() < self.frame {
            return Err(FeatureError::TooShort {
                samples: clip.len(),
                frame: self.frame,
            });
        }
        Ok(())
    }

    /// Mel filterbank energies before the log, one row per frame.
    pub fn filterbank_energies(&self, clip: &AudioClip) -> Result<Vec<Vec<f64>>, FeatureError> {
        self.check(clip)?;
        let x = clip.samples();
        let a = self.cfg.pre_emphasis;
        let emphasized: Vec<f64> = (0..x.len())
            .map(|n| {
                let prev = if n == 0 { 0.0 } else { f64::from(x[n - 1]) };
                f64::from(x[n]) - a * prev
            })
            .collect();

        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut magnitude = vec![0.0; self.fft_size / 2 + 1];
        let count = self.frame_count(x.len());
        let mut out = Vec::with_capacity(count);
        for t in 0..count {
            let start = t * self.hop;
            for (i, slot) in buf.iter_mut().enumerate() {
                *slot = if i < self.frame {
                    Complex::new(emphasized[start + i] * self.window[i], 0.0)
                } else {
                    Complex::new(0.0, 0.0)
                };
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (m, c) in magnitude.iter_mut().zip(&buf) {
                *m = c.norm();
            }
            out.push(self.bank.apply(&magnitude));
        }
        Ok(out)
    }

    /// Static cepstra c0..c12 per frame.
    pub fn cepstra(&self, clip: &AudioClip) -> Result<Vec<StaticFrame>, FeatureError> {
        let floor = self.cfg.log_floor;
        Ok(self
            .filterbank_energies(clip)?
            .into_iter()
            .map(|energies| {
                let logs: Vec<f64> = energies.iter().map(|&e| e.max(floor).ln()).collect();
                let mut c = [0.0; CEPSTRA];
                for (ck, basis) in c.iter_mut().zip(&self.dct) {
                    *ck = basis.iter().zip(&logs).map(|(b, l)| b * l).sum();
                }
                c
            })
            .collect())
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<FeatureMatrix, FeatureError> {
        let statics = self.cepstra(clip)?;
        let velocity = deltas(&statics, self.cfg.delta_window);
        let accel = deltas(&velocity, self.cfg.delta_window);
        let frames = statics
            .iter()
            .zip(&velocity)
            .zip(&accel)
            .map(|((s, v), a)| {
                let mut row = [0.0; FEATURE_DIM];
                row[..CEPSTRA].copy_from_slice(s);
                row[CEPSTRA..2 * CEPSTRA].copy_from_slice(v);
                row[2 * CEPSTRA..].copy_from_slice(a);
                row
            })
            .collect();
        Ok(FeatureMatrix::new(frames, self.cfg.hop, 0.0))
    }
}

/// One-shot MFCC extraction.
pub fn mfcc(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureMatrix, FeatureError> {
    MfccExtractor::new(cfg, clip.sample_rate())?.extract(clip)
}

/// Regression deltas over `±window` frames, replicating edge frames.
pub fn deltas(block: &[StaticFrame], window: usize) -> Vec<StaticFrame> {
    let last = block.len().saturating_sub(1) as isize;
    let at = |t: isize| &block[t.clamp(0, last) as usize];
    let norm = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    (0..block.len() as isize)
        .map(|t| {
            let mut d = [0.0; CEPSTRA];
            for n in 1..=window as isize {
                let (ahead, behind) = (at(t + n), at(t - n));
                for (dk, (a, b)) in d.iter_mut().zip(ahead.iter().zip(behind)) {
                    *dk += n as f64 * (a - b);
                }
            }
            d.iter_mut().for_each(|v| *v /= norm);
            d
        })
        .collect()
}

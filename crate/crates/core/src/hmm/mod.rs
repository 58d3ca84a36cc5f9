//! Single-state, single-Gaussian note models.
//!
//! Each note is one emitting state with a diagonal-covariance Gaussian over
//! 39-dimensional MFCC frames. Training is plain maximum likelihood over the
//! pooled frames of every labelled instance of the note; the variance is
//! floored relative to the global variance of all training frames.

mod align;
mod io;

pub use align::{align_scores, force_align, segmentation_to_labels, AlignConfig, Segment, Segmentation};
pub use io::{format_models, load_models, parse_models, save_models};

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use thiserror::Error;

use crate::features::{FeatureConfig, Frame, FEATURE_DIM};

/// Model name reserved for the optional inter-note gap model.
pub const GAP_LABEL: &str = "sil";

/// Absolute lower bound on any variance, for dimensions with no global spread.
pub const MIN_VARIANCE: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum HmmError {
    #[error("insufficient training examples: {}", format_deficits(.0))]
    InsufficientExamples(Vec<(String, usize)>),
    #[error("no training frames for {0}")]
    NoFrames(String),
    #[error("invalid model {label}: {reason}")]
    InvalidModel { label: String, reason: String },
    #[error("model set is empty")]
    EmptyModelSet,
    #[error("no model for note {0:?}")]
    UnknownNote(String),
    #[error("cannot fit {needed} frames of minimum-duration segments into {frames} frames")]
    InfeasibleAlignment { needed: usize, frames: usize },
    #[error("invalid alignment configuration: {0}")]
    InvalidConfig(String),
    #[error("models were trained with features `{trained}` but the current configuration is `{current}`")]
    ConfigMismatch { trained: String, current: String },
    #[error("corrupt model file{}: {reason}", path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    Corrupt { path: Option<PathBuf>, reason: String },
    #[error("model dimension {found} does not match {expected}")]
    DimensionMismatch { found: usize, expected: usize },
    #[error("{}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },
}

fn format_deficits(notes: &[(String, usize)]) -> String {
    notes
        .iter()
        .map(|(n, c)| format!("{n} has {c}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// A diagonal Gaussian emission model for one note.
#[derive(Debug, Clone, PartialEq)]
pub struct NoteModel {
    label: String,
    mean: Frame,
    variance: Frame,
    frame_count: usize,
    /// Σ_d ln(2π σ²_d)
    log_norm: f64,
}

impl NoteModel {
    pub fn new(
        label: impl Into<String>,
        mean: Frame,
        variance: Frame,
        frame_count: usize,
    ) -> Result<Self, HmmError> {
        let label = label.into();
        let invalid = |reason: &str| HmmError::InvalidModel {
            label: label.clone(),
            reason: reason.to_string(),
        };
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(invalid("label must be non-empty without whitespace"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid("non-finite mean"));
        }
        if variance.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("variances must be positive and finite"));
        }
        if frame_count == 0 {
            return Err(invalid("frame_count must be at least 1"));
        }
        let log_norm = variance.iter().map(|v| (2.0 * PI * v).ln()).sum();
        Ok(Self {
            label,
            mean,
            variance,
            frame_count,
            log_norm,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mean(&self) -> &Frame {
        &self.mean
    }

    pub fn variance(&self) -> &Frame {
        &self.variance
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn log_likelihood(&self, frame: &Frame) -> f64 {
        let mahalanobis: f64 = frame
            .iter()
            .zip(&self.mean)
            .zip(&self.variance)
            .map(|((x, m), v)| (x - m) * (x - m) / v)
            .sum();
        -0.5 * (self.log_norm + mahalanobis)
    }
}

/// Note models keyed by name, tagged with the feature configuration they
/// were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    models: BTreeMap<String, NoteModel>,
    fingerprint: String,
}

impl ModelSet {
    pub fn new(models: impl IntoIterator<Item = NoteModel>, fingerprint: impl Into<String>) -> Result<Self, HmmError> {
        let models: BTreeMap<String, NoteModel> = models
            .into_iter()
            .map(|m| (m.label.clone(), m))
            .collect();
        if models.is_empty() {
            return Err(HmmError::EmptyModelSet);
        }
        Ok(Self {
            models,
            fingerprint: fingerprint.into(),
        })
    }

    pub fn get(&self, note: &str) -> Option<&NoteModel> {
        self.models.get(note)
    }

    pub fn models(&self) -> impl Iterator<Item = &NoteModel> {
        self.models.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn check_config(&self, cfg: &FeatureConfig) -> Result<(), HmmError> {
        let current = cfg.fingerprint();
        if current == self.fingerprint {
            Ok(())
        } else {
            Err(HmmError::ConfigMismatch {
                trained: self.fingerprint.clone(),
                current,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Variance floor as a fraction of the global per-dimension variance.
    pub floor_ratio: f64,
    /// Minimum labelled instances per note; set to 0 or 1 to opt out.
    pub min_instances: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            floor_ratio: 1e-3,
            min_instances: 5,
        }
    }
}

/// Running count, mean and sum of squared deviations (Welford).
#[derive(Clone)]
struct Moments {
    n: usize,
    mean: Frame,
    m2: Frame,
}

impl Moments {
    fn new() -> Self {
        Self {
            n: 0,
            mean: [0.0; FEATURE_DIM],
            m2: [0.0; FEATURE_DIM],
        }
    }

    fn push(&mut self, x: &Frame) {
        self.n += 1;
        let n = self.n as f64;
        for d in 0..FEATURE_DIM {
            let delta = x[d] - self.mean[d];
            self.mean[d] += delta / n;
            self.m2[d] += delta * (x[d] - self.mean[d]);
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for d in 0..FEATURE_DIM {
            let delta = other.mean[d] - self.mean[d];
            self.mean[d] += delta * nb / n;
            self.m2[d] += other.m2[d] + delta * delta * na * nb / n;
        }
        self.n += other.n;
    }

    fn variance(&self) -> Frame {
        std::array::from_fn(|d| self.m2[d] / self.n as f64)
    }
}

/// Trains one model per note from labelled feature segments.
pub fn train<S: AsRef<[Frame]>>(
    examples: &BTreeMap<String, Vec<S>>,
    fingerprint: impl Into<String>,
    opts: &TrainOptions,
) -> Result<ModelSet, HmmError> {
    if !(opts.floor_ratio >= 0.0 && opts.floor_ratio.is_finite()) {
        return Err(HmmError::InvalidConfig("floor_ratio must be non-negative".into()));
    }
    let deficits: Vec<(String, usize)> = examples
        .iter()
        .filter(|(_, segs)| segs.len() < opts.min_instances)
        .map(|(note, segs)| (note.clone(), segs.len()))
        .collect();
    if !deficits.is_empty() {
        return Err(HmmError::InsufficientExamples(deficits));
    }

    let mut per_note = Vec::with_capacity(examples.len());
    let mut global = Moments::new();
    for (note, segments) in examples {
        let mut m = Moments::new();
        for seg in segments {
            let frames = seg.as_ref();
            if frames.is_empty() {
                return Err(HmmError::NoFrames(format!("{note} (empty segment)")));
            }
            frames.iter().for_each(|f| m.push(f));
        }
        if m.n == 0 {
            return Err(HmmError::NoFrames(note.clone()));
        }
        global.merge(&m);
        per_note.push((note, m));
    }
    if per_note.is_empty() {
        return Err(HmmError::EmptyModelSet);
    }

    let global_var = global.variance();
    let floor: Frame =
        std::array::from_fn(|d| (opts.floor_ratio * global_var[d]).max(MIN_VARIANCE));
    let models = per_note
        .into_iter()
        .map(|(note, m)| {
            let var = m.variance();
            let floored = std::array::from_fn(|d| var[d].max(floor[d]));
            NoteModel::new(note.clone(), m.mean, floored, m.n)
        })
        .collect::<Result<Vec<_>, _>>()?;
    ModelSet::new(models, fingerprint)
}

//! What the page can do, as plain Rust so it runs and tests natively.

use std::collections::BTreeMap;

use fretalign::annot::{estimate_constant_shift, onset_errors, DEFAULT_THRESHOLDS_MS};
use fretalign::audio::{synth_exercise, synth_pluck, TempoPolicy};
use fretalign::features::{mfcc, FeatureConfig, Frame, MfccExtractor};
use fretalign::hmm::{force_align, segmentation_to_labels, train, AlignConfig, TrainOptions};
use fretalign::music::{compose_exercises, default_exercise_length, pitch_from_fret, FretPosition};
use serde::Serialize;

pub const SAMPLE_RATE: u32 = 22_050;
const BOOTSTRAP_TAKES: u64 = 5;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NoteInfo {
    pub string: u8,
    pub fret: u8,
    pub name: String,
    pub midi: u8,
    pub frequency: f64,
    pub covered: bool,
}

pub fn note_info(string: u8, fret: u8) -> Result<NoteInfo, String> {
    let pos = FretPosition::new(string, fret).map_err(|e| e.to_string())?;
    let pitch = pos.pitch();
    Ok(NoteInfo {
        string,
        fret,
        name: pitch.name(),
        midi: pitch.midi(),
        frequency: pitch.frequency(),
        covered: pos.is_covered(),
    })
}

pub fn pluck(string: u8, fret: u8, seconds: f64, seed: u64) -> Result<Vec<f32>, String> {
    let pitch = pitch_from_fret(string, fret).map_err(|e| e.to_string())?;
    synth_pluck(pitch, seconds, SAMPLE_RATE, seed)
        .map(|c| c.into_samples())
        .map_err(|e| e.to_string())
}

/// Static cepstra c0..c12, row-major by frame.
#[derive(Debug, Clone, Serialize)]
pub struct Heatmap {
    pub frames: usize,
    pub coeffs: usize,
    pub hop_seconds: f64,
    pub values: Vec<f64>,
}

pub fn heatmap(samples: &[f32], sample_rate: u32) -> Result<Heatmap, String> {
    let clip = fretalign::AudioClip::new(samples.to_vec(), sample_rate).map_err(|e| e.to_string())?;
    let cfg = FeatureConfig::default();
    let ex = MfccExtractor::new(&cfg, sample_rate).map_err(|e| e.to_string())?;
    let rows = ex.cepstra(&clip).map_err(|e| e.to_string())?;
    Ok(Heatmap {
        frames: rows.len(),
        coeffs: rows.first().map_or(0, |r| r.len()),
        hop_seconds: cfg.hop,
        values: rows.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignedNote {
    pub note: String,
    pub truth: f64,
    pub predicted: f64,
    pub error_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlignDemo {
    pub string: u8,
    pub duration: f64,
    pub shift_ms: f64,
    pub notes: Vec<AlignedNote>,
    pub max_error_ms: f64,
    pub mean_error_ms: f64,
    #[serde(skip)]
    pub samples: Vec<f32>,
}

/// Trains on five synthetic takes of the string's all-notes exercise, then
/// aligns one fresh take of another exercise and applies the median shift.
pub fn align_demo(string: u8, seed: u64) -> Result<AlignDemo, String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let length = default_exercise_length(string).map_err(|e| err(&e))?;
    let exercises = compose_exercises(string, 2, length, seed).map_err(|e| err(&e))?;
    let cfg = FeatureConfig::default();
    let policy = TempoPolicy::default();

    let mut examples: BTreeMap<String, Vec<Vec<Frame>>> = BTreeMap::new();
    for take in 0..BOOTSTRAP_TAKES {
        let (clip, score) = synth_exercise(&exercises[0], &policy, SAMPLE_RATE, seed ^ (take + 1) << 32)
            .map_err(|e| err(&e))?;
        let feats = mfcc(&clip, &cfg).map_err(|e| err(&e))?;
        for l in score.to_labels().labels() {
            let (a, b) = (feats.frame_at(l.start()), feats.frame_at(l.end()).min(feats.len()));
            examples.entry(l.text().to_string()).or_default().push(feats.frames()[a..b].to_vec());
        }
    }
    let models = train(&examples, cfg.fingerprint(), &TrainOptions::default()).map_err(|e| err(&e))?;

    let target = &exercises[1];
    let (clip, score) = synth_exercise(target, &policy, SAMPLE_RATE, seed.wrapping_mul(31).wrapping_add(7))
        .map_err(|e| err(&e))?;
    let feats = mfcc(&clip, &cfg).map_err(|e| err(&e))?;
    let seg = force_align(&feats, &target.transcript(), &models, &AlignConfig::default()).map_err(|e| err(&e))?;
    let labels = segmentation_to_labels(&seg, &feats);
    let truth = score.to_labels();
    let shift_ms = estimate_constant_shift(&labels, &truth).map_err(|e| err(&e))?;
    let shifted = labels.shift(shift_ms).map_err(|e| err(&e))?;
    let report = onset_errors(&shifted, &truth, &DEFAULT_THRESHOLDS_MS).map_err(|e| err(&e))?;
    let notes = shifted
        .labels()
        .iter()
        .zip(truth.labels())
        .zip(&report.per_note)
        .map(|((p, t), e)| AlignedNote {
            note: t.text().to_string(),
            truth: t.start(),
            predicted: p.start(),
            error_ms: e.signed_ms,
        })
        .collect();
    Ok(AlignDemo {
        string,
        duration: clip.duration(),
        shift_ms,
        notes,
        max_error_ms: report.max_ms,
        mean_error_ms: report.mean_ms,
        samples: clip.into_samples(),
    })
}

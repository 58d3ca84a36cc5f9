//! Karplus-Strong plucked strings, used to manufacture recordings whose
//! onsets are known exactly.
//!
//! The loop has no averaging lowpass: every partial decays at the same rate,
//! so a note keeps its timbre while it rings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AudioClip, AudioError};
use crate::annot::{Label, LabelTrack};
use crate::music::{Exercise, Pitch};

/// Amplitude remaining after one second of loop loss.
const LOOP_GAIN_PER_SECOND: f64 = 0.25;
const PEAK: f64 = 0.5;
/// Pluck point as a fraction of the string length, measured from the bridge.
const PLUCK_POSITION: f64 = 0.2;
/// Level of the pick scrape relative to the triangle.
const SCRAPE: f64 = 1.0;

/// Renders a single pluck of `duration` seconds.
pub fn synth_pluck(
    pitch: Pitch,
    duration: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<AudioClip, AudioError> {
    let len = (duration * f64::from(sample_rate)).round() as usize;
    if !(duration > 0.0) || len == 0 {
        return Err(AudioError::InfeasibleSynth(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let f0 = pitch.frequency();
    if f0 >= f64::from(sample_rate) / 4.0 {
        return Err(AudioError::InfeasibleSynth(format!(
            "{pitch} ({f0:.1} Hz) is too high for {sample_rate} Hz"
        )));
    }
    let samples = pluck(f0, len, f64::from(sample_rate), seed, PEAK);
    AudioClip::new(samples, sample_rate)
}

fn pluck(f0: f64, len: usize, sample_rate: f64, seed: u64, peak: f64) -> Vec<f32> {
    // integer delay line plus a first-order allpass for the fractional part
    let period = sample_rate / f0;
    let delay = ((period - 0.1).floor() as usize).max(1);
    let frac = period - delay as f64;
    let coef = (1.0 - frac) / (1.0 + frac);
    let loss = LOOP_GAIN_PER_SECOND.powf(1.0 / f0);

    // Initial string displacement: a triangle peaking at the pluck point
    // plus a scrape that is fixed for the pitch, so every pluck of a note
    // shares a timbre. The seed only picks upstroke or downstroke.
    let mut voice = ChaCha8Rng::seed_from_u64(f0.to_bits());
    let stroke = if ChaCha8Rng::seed_from_u64(seed).gen::<bool>() { 1.0 } else { -1.0 };
    let apex = (PLUCK_POSITION * delay as f64).clamp(1.0, delay as f64 - 1.0);
    let mut burst: Vec<f64> = (0..delay)
        .map(|n| {
            let x = n as f64;
            let shape = if x < apex {
                x / apex
            } else {
                (delay as f64 - x) / (delay as f64 - apex)
            };
            stroke * (shape + SCRAPE * voice.gen_range(-1.0..1.0))
        })
        .collect();
    let mean = burst.iter().sum::<f64>() / delay as f64;
    burst.iter_mut().for_each(|s| *s -= mean);
    let max = burst.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-12);
    burst.iter_mut().for_each(|s| *s *= peak / max);

    let mut out = vec![0.0f64; len];
    let (mut prev_in, mut prev_out) = (0.0, 0.0);
    for n in 0..len {
        out[n] = if n < delay {
            burst[n]
        } else {
            let x = out[n - delay];
            let ap = coef * x + prev_in - coef * prev_out;
            prev_in = x;
            prev_out = ap;
            loss * ap
        };
    }
    out.into_iter().map(|s| s as f32).collect()
}

/// Timing of a synthesized exercise.
#[derive(Debug, Clone, PartialEq)]
pub struct TempoPolicy {
    /// Nominal time between onsets, seconds.
    pub inter_onset: f64,
    /// Maximum absolute deviation applied to each inter-onset interval.
    pub jitter: f64,
    /// How long the last note rings.
    pub final_duration: f64,
    /// A note keeps sounding for this long past the next onset while it is damped.
    pub release: f64,
    /// Relative spread of per-note peak level.
    pub level_jitter: f64,
}

impl Default for TempoPolicy {
    fn default() -> Self {
        Self {
            inter_onset: 0.5,
            jitter: 0.05,
            final_duration: 0.8,
            release: 0.0,
            level_jitter: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreEntry {
    pub pitch: Pitch,
    pub onset: f64,
    pub duration: f64,
}

/// Ground truth for a synthesized clip. Each duration runs to the next onset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthScore {
    pub entries: Vec<ScoreEntry>,
}

impl SynthScore {
    pub fn onsets(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.onset).collect()
    }

    pub fn to_labels(&self) -> LabelTrack {
        let labels = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                // reuse the next onset exactly so rounding cannot create overlap
                let end = self
                    .entries
                    .get(i + 1)
                    .map_or(e.onset + e.duration, |next| next.onset);
                Label::new(e.onset, end, e.pitch.to_string())
            })
            .collect::<Result<Vec<_>, _>>()
            .expect("synth scores have positive durations");
        LabelTrack::new(labels).expect("synth scores are sorted and contiguous")
    }
}

/// Renders an exercise as consecutive plucks on one string.
pub fn synth_exercise(
    exercise: &Exercise,
    policy: &TempoPolicy,
    sample_rate: u32,
    seed: u64,
) -> Result<(AudioClip, SynthScore), AudioError> {
    if !(policy.inter_onset > policy.jitter && policy.jitter >= 0.0) {
        return Err(AudioError::InfeasibleSynth(
            "inter-onset interval must exceed its jitter".into(),
        ));
    }
    if !(policy.final_duration > 0.0 && policy.release >= 0.0 && policy.level_jitter < 1.0) {
        return Err(AudioError::InfeasibleSynth("invalid tempo policy".into()));
    }
    let sr = f64::from(sample_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let notes = exercise.sequence();
    let mut onsets = Vec::with_capacity(notes.len() + 1);
    let mut at = 0usize;
    for _ in notes {
        onsets.push(at);
        let ioi = policy.inter_onset + rng.gen_range(-1.0..=1.0) * policy.jitter;
        at += (ioi * sr).round() as usize;
    }
    // the final note rings for final_duration instead of a jittered interval
    let end = onsets.last().copied().unwrap_or(0) + (policy.final_duration * sr).round() as usize;
    onsets.push(end);

    let release = (policy.release * sr).round() as usize;
    let mut mix = vec![0.0f64; end];
    let mut entries = Vec::with_capacity(notes.len());
    for (i, &pitch) in notes.iter().enumerate() {
        let (start, next) = (onsets[i], onsets[i + 1]);
        let f0 = pitch.frequency();
        if f0 >= sr / 4.0 {
            return Err(AudioError::InfeasibleSynth(format!("{pitch} too high")));
        }
        let level = PEAK * (1.0 + rng.gen_range(-1.0..=1.0) * policy.level_jitter);
        let pluck_seed: u64 = rng.gen();
        let sounding = (next - start + release).min(end - start);
        let tone = pluck(f0, sounding, sr, pluck_seed, level);
        for (k, s) in tone.iter().enumerate() {
            // the next pluck damps this one with a linear fade
            let gain = if start + k >= next && release > 0 {
                1.0 - (start + k - next) as f64 / release as f64
            } else {
                1.0
            };
            mix[start + k] += f64::from(*s) * gain;
        }
        entries.push(ScoreEntry {
            pitch,
            onset: start as f64 / sr,
            duration: (next - start) as f64 / sr,
        });
    }
    let samples = mix.into_iter().map(|s| s.clamp(-1.0, 1.0) as f32).collect();
    Ok((AudioClip::new(samples, sample_rate)?, SynthScore { entries }))
}

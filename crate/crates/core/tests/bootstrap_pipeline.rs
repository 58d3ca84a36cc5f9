//! One string's worth of the bootstrap loop entirely in memory: synthesize
//! takes, train from the first five takes of the first exercise, align the
//! rest and compare to the synthesis ground truth.

use std::collections::BTreeMap;

use fretalign::annot::{estimate_constant_shift, onset_errors, OnsetErrorReport, DEFAULT_THRESHOLDS_MS};
use fretalign::audio::{synth_exercise, TempoPolicy};
use fretalign::features::{mfcc, FeatureConfig, Frame};
use fretalign::hmm::{force_align, segmentation_to_labels, train, AlignConfig, TrainOptions};
use fretalign::music::{compose_exercises, default_exercise_length};

fn run_string(string: u8) -> (OnsetErrorReport, OnsetErrorReport) {
    let cfg = FeatureConfig::default();
    let exercises = compose_exercises(string, 3, default_exercise_length(string).unwrap(), 42).unwrap();
    let policy = TempoPolicy::default();
    let mut takes = Vec::new();
    for (e, ex) in exercises.iter().enumerate() {
        for t in 0..12u64 {
            let (clip, score) = synth_exercise(ex, &policy, 44_100, 1000 * e as u64 + t).unwrap();
            let feats = mfcc(&clip, &cfg).unwrap();
            takes.push((e, t, ex.clone(), feats, score.to_labels()));
        }
    }
    let bootstrap = |e: usize, t: u64| e == 0 && t < 5;

    let mut examples: BTreeMap<String, Vec<Vec<Frame>>> = BTreeMap::new();
    for (_, _, _, feats, truth) in takes.iter().filter(|(e, t, ..)| bootstrap(*e, *t)) {
        for l in truth.labels() {
            let (a, b) = (feats.frame_at(l.start()), feats.frame_at(l.end()));
            examples
                .entry(l.text().to_string())
                .or_default()
                .push(feats.frames()[a..b].to_vec());
        }
    }
    let models = train(&examples, cfg.fingerprint(), &TrainOptions::default()).unwrap();
    assert_eq!(models.len(), exercises[0].sequence().iter().collect::<std::collections::BTreeSet<_>>().len());

    let mut raw = Vec::new();
    let mut fixed = Vec::new();
    for (_, _, ex, feats, truth) in takes.iter().filter(|(e, t, ..)| !bootstrap(*e, *t)) {
        let seg = force_align(feats, &ex.transcript(), &models, &AlignConfig::default()).unwrap();
        let labels = segmentation_to_labels(&seg, feats);
        raw.push(onset_errors(&labels, truth, &DEFAULT_THRESHOLDS_MS).unwrap());
        let delta = estimate_constant_shift(&labels, truth).unwrap();
        let shifted = labels.shift(delta).unwrap();
        fixed.push(onset_errors(&shifted, truth, &DEFAULT_THRESHOLDS_MS).unwrap());
    }
    assert_eq!(raw.len(), 31);
    (
        OnsetErrorReport::pooled(&raw, &DEFAULT_THRESHOLDS_MS),
        OnsetErrorReport::pooled(&fixed, &DEFAULT_THRESHOLDS_MS),
    )
}

#[test]
fn string_three_aligns_within_a_few_frames() {
    let (raw, fixed) = run_string(3);
    println!(
        "raw max {:.1} median {:.1}; shifted max {:.1} median {:.1}",
        raw.max_ms,
        raw.median_abs_ms(),
        fixed.max_ms,
        fixed.median_abs_ms()
    );
    assert!(fixed.median_abs_ms() <= 10.0);
    assert!(fixed.max_ms <= 30.0);
    // shifting per file can only lower the summed absolute error
    assert!(fixed.mean_ms <= raw.mean_ms + 1e-9);
}

use fretalign::annot::{
    cumulative_table, estimate_constant_shift, format_lab, onset_errors, parse_lab, Label, LabelTrack,
    DEFAULT_THRESHOLDS_MS,
};
use proptest::prelude::*;

/// Contiguous track whose onsets sit at the given gaps (seconds) after 1 s.
fn track(gaps: &[f64]) -> LabelTrack {
    let mut t = 1.0;
    let mut labels = Vec::new();
    for (i, g) in gaps.iter().enumerate() {
        labels.push(Label::new(t, t + g, format!("N{i}")).unwrap());
        t += g;
    }
    LabelTrack::new(labels).unwrap()
}

fn offsets(track: &LabelTrack, ms: &[f64]) -> LabelTrack {
    let mut labels = Vec::new();
    let l = track.labels();
    for (i, lab) in l.iter().enumerate() {
        let start = lab.start() + ms[i] / 1000.0;
        let end = match l.get(i + 1) {
            Some(next) => next.start() + ms[i + 1] / 1000.0,
            None => lab.end(),
        };
        labels.push(Label::new(start, end, lab.text()).unwrap());
    }
    LabelTrack::new(labels).unwrap()
}

#[test]
fn table_two_multiset() {
    // 66 errors binned 24/14/7/15/6 across (0,2], (2,4], (4,6], (6,8], (8,10]
    let mut errors = Vec::new();
    for (bin, count) in [24, 14, 7, 15, 6].into_iter().enumerate() {
        let mid = 2.0 * bin as f64 + 1.0;
        errors.extend(std::iter::repeat_n(mid, count));
    }
    assert_eq!(errors.len(), 66);
    let rows = cumulative_table(&errors, &DEFAULT_THRESHOLDS_MS);
    let shown: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.percentage)).collect();
    assert_eq!(shown, ["36.36", "57.58", "68.18", "90.91", "100.00", "100.00"]);
}

#[test]
fn boundary_errors_count_as_within() {
    let rows = cumulative_table(&[2.0, 4.0000000001, 10.0], &[2.0, 4.0, 10.0]);
    let pct: Vec<f64> = rows.iter().map(|r| r.percentage).collect();
    assert!((pct[0] - 100.0 / 3.0).abs() < 1e-9);
    assert!((pct[1] - 200.0 / 3.0).abs() < 1e-9);
    assert_eq!(pct[2], 100.0);
}

proptest! {
    #[test]
    fn shift_is_additive(gaps in proptest::collection::vec(0.1f64..1.0, 1..8), a in -500.0f64..500.0, b in -500.0f64..500.0) {
        // starts at >= 1 s, so shifts within 1 s never clamp
        let t = track(&gaps);
        let two = t.shift(a).unwrap().shift(b).unwrap();
        let one = t.shift(a + b).unwrap();
        for (x, y) in two.labels().iter().zip(one.labels()) {
            prop_assert!((x.start() - y.start()).abs() < 1e-9);
            prop_assert!((x.end() - y.end()).abs() < 1e-9);
            prop_assert_eq!(x.text(), y.text());
        }
    }

    #[test]
    fn cumulative_is_monotone(errors in proptest::collection::vec(0.0f64..40.0, 0..60)) {
        let rows = cumulative_table(&errors, &DEFAULT_THRESHOLDS_MS);
        for w in rows.windows(2) {
            prop_assert!(w[0].percentage <= w[1].percentage);
        }
        prop_assert_eq!(rows.last().unwrap().percentage, 100.0);
    }

    #[test]
    fn errors_are_antisymmetric(gaps in proptest::collection::vec(0.2f64..1.0, 1..8), seed in proptest::collection::vec(-50.0f64..50.0, 8)) {
        let reference = track(&gaps);
        let predicted = offsets(&reference, &seed);
        let fwd = onset_errors(&predicted, &reference, &DEFAULT_THRESHOLDS_MS).unwrap();
        let back = onset_errors(&reference, &predicted, &DEFAULT_THRESHOLDS_MS).unwrap();
        for (x, y) in fwd.per_note.iter().zip(&back.per_note) {
            prop_assert!((x.signed_ms + y.signed_ms).abs() < 1e-9);
            prop_assert!((x.abs_ms - y.abs_ms).abs() < 1e-9);
        }
    }

    #[test]
    fn median_shift_beats_every_grid_shift(gaps in proptest::collection::vec(0.2f64..1.0, 1..8), seed in proptest::collection::vec(-50.0f64..50.0, 8)) {
        let reference = track(&gaps);
        let predicted = offsets(&reference, &seed);
        let summed = |p: &LabelTrack| -> f64 {
            onset_errors(p, &reference, &DEFAULT_THRESHOLDS_MS).unwrap().per_note.iter().map(|e| e.abs_ms).sum()
        };
        let delta = estimate_constant_shift(&predicted, &reference).unwrap();
        let best = summed(&predicted.shift(delta).unwrap());
        prop_assert!(best <= summed(&predicted) + 1e-6);
        let mut grid = -60.0;
        while grid <= 60.0 {
            prop_assert!(best <= summed(&predicted.shift(grid).unwrap()) + 1e-6);
            grid += 0.5;
        }
    }

    #[test]
    fn lab_text_round_trips_to_a_millisecond(gaps in proptest::collection::vec(0.01f64..2.0, 1..10)) {
        let t = track(&gaps);
        let back = parse_lab(&format_lab(&t)).unwrap();
        prop_assert_eq!(back.len(), t.len());
        for (x, y) in back.labels().iter().zip(t.labels()) {
            prop_assert!((x.start() - y.start()).abs() <= 0.0005 + 1e-9);
            prop_assert!((x.end() - y.end()).abs() <= 0.0005 + 1e-9);
        }
    }
}

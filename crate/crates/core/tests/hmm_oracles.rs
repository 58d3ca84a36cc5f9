use std::collections::BTreeMap;
use std::f64::consts::PI;

use fretalign::features::{Frame, FEATURE_DIM};
use fretalign::hmm::{align_scores, train, AlignConfig, NoteModel, Segmentation, TrainOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, spread: f64) -> Frame {
    std::array::from_fn(|_| rng.gen_range(-spread..spread))
}

#[test]
fn log_likelihood_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let mean = random_frame(&mut rng, 20.0);
        let var: Frame = std::array::from_fn(|_| rng.gen_range(0.01..50.0));
        let x = random_frame(&mut rng, 20.0);
        let model = NoteModel::new("A2", mean, var, 1).unwrap();
        let mut direct = 0.0;
        for d in 0..FEATURE_DIM {
            direct += (2.0 * PI * var[d]).ln() + (x[d] - mean[d]).powi(2) / var[d];
        }
        direct *= -0.5;
        let got = model.log_likelihood(&x);
        assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0), "{got} vs {direct}");
    }
}

#[test]
fn doubling_a_variance_costs_half_log_two() {
    let mean = [0.5; FEATURE_DIM];
    let base = NoteModel::new("E2", mean, [1.0; FEATURE_DIM], 1).unwrap();
    let mut var = [1.0; FEATURE_DIM];
    var[7] = 2.0;
    let wider = NoteModel::new("E2", mean, var, 1).unwrap();
    let diff = base.log_likelihood(&mean) - wider.log_likelihood(&mean);
    assert!((diff - 0.5 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn training_matches_two_pass_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let frames: Vec<Frame> = (0..1000)
        .map(|_| std::array::from_fn(|d| 100.0 + d as f64 + rng.gen_range(-3.0..3.0) * (1.0 + d as f64)))
        .collect();
    // five uneven segments of one note
    let cuts = [0, 137, 300, 301, 722, 1000];
    let segments: Vec<Vec<Frame>> = cuts.windows(2).map(|w| frames[w[0]..w[1]].to_vec()).collect();
    let mut examples = BTreeMap::new();
    examples.insert("C3".to_string(), segments);
    let set = train(&examples, "fp", &TrainOptions::default()).unwrap();
    let model = set.get("C3").unwrap();
    assert_eq!(model.frame_count(), 1000);

    let n = frames.len() as f64;
    for d in 0..FEATURE_DIM {
        let mean = frames.iter().map(|f| f[d]).sum::<f64>() / n;
        let var = frames.iter().map(|f| (f[d] - mean).powi(2)).sum::<f64>() / n;
        assert!((model.mean()[d] - mean).abs() <= 1e-9 * mean.abs());
        // one note: the floor is 1e-3 of its own variance, so it never binds
        assert!((model.variance()[d] - var).abs() <= 1e-9 * var);
    }
}

#[test]
fn variance_floor_uses_global_variance() {
    // note A is constant, note B varies, so A's variance is the floor
    let a: Vec<Vec<Frame>> = (0..5).map(|_| vec![[1.0; FEATURE_DIM]; 4]).collect();
    let b: Vec<Vec<Frame>> = (0..5)
        .map(|i| vec![[i as f64; FEATURE_DIM], [-(i as f64); FEATURE_DIM]])
        .collect();
    let all: Vec<f64> = a.iter().chain(&b).flatten().map(|f| f[0]).collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let global = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;

    let mut examples = BTreeMap::new();
    examples.insert("A".to_string(), a);
    examples.insert("B".to_string(), b);
    let set = train(&examples, "fp", &TrainOptions::default()).unwrap();
    for v in set.get("A").unwrap().variance() {
        assert!((v - 1e-3 * global).abs() < 1e-15);
    }
}

/// Every feasible segmentation of `t` frames into `notes` pieces of at least
/// `min` frames, scored the same way the aligner scores them.
fn brute_force(scores: &[Vec<f64>], min: usize, p_stay: f64) -> Vec<(Vec<usize>, f64)> {
    let notes = scores.len();
    let t = scores[0].len();
    let mut out = Vec::new();
    let mut bounds = vec![0usize; notes + 1];
    bounds[notes] = t;
    fn rec(
        i: usize,
        bounds: &mut Vec<usize>,
        scores: &[Vec<f64>],
        min: usize,
        p_stay: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        let notes = scores.len();
        let t = scores[0].len();
        if i == notes {
            if t - bounds[notes - 1] < min {
                return;
            }
            let mut s = 0.0;
            for n in 0..notes {
                for f in bounds[n]..bounds[n + 1] {
                    s += scores[n][f];
                }
                s += (bounds[n + 1] - bounds[n] - 1) as f64 * p_stay.ln();
            }
            s += (notes - 1) as f64 * (1.0 - p_stay).ln();
            out.push((bounds[1..notes].to_vec(), s));
            return;
        }
        for b in bounds[i - 1] + min..=t {
            bounds[i] = b;
            rec(i + 1, bounds, scores, min, p_stay, out);
        }
    }
    if notes == 1 {
        if t >= min {
            let s: f64 = scores[0].iter().sum::<f64>() + (t - 1) as f64 * p_stay.ln();
            out.push((vec![], s));
        }
        return out;
    }
    rec(1, &mut bounds, scores, min, p_stay, &mut out);
    out
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, usize)> {
    (1usize..=3, 1usize..=2).prop_flat_map(|(notes, min)| {
        let t_lo = notes * min;
        (t_lo..=14).prop_flat_map(move |t| {
            // coarse integer grids make exact ties common
            let cell = prop_oneof![(-3i32..=3).prop_map(f64::from), -20.0f64..5.0];
            (proptest::collection::vec(proptest::collection::vec(cell, t), notes), Just(min))
        })
    })
}

proptest! {
    #[test]
    fn aligner_matches_exhaustive_search((scores, min) in instance()) {
        let labels: Vec<String> = (0..scores.len()).map(|i| format!("n{i}")).collect();
        let cfg = AlignConfig { min_duration_frames: min, ..AlignConfig::default() };
        let seg = align_scores(&scores, &labels, &cfg).unwrap();
        let all = brute_force(&scores, min, cfg.self_loop_prob);
        let best = all.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((seg.total_log_likelihood - best).abs() <= 1e-9 * best.abs().max(1.0));

        // the chosen path scores what it claims
        let claimed = all.iter().find(|(b, _)| *b == seg.boundaries()).expect("path is feasible");
        prop_assert!((claimed.1 - seg.total_log_likelihood).abs() <= 1e-9 * best.abs().max(1.0));

        // earliest boundaries among the optima
        let earliest = all
            .iter()
            .filter(|(_, s)| (s - best).abs() <= 1e-9 * best.abs().max(1.0))
            .map(|(b, _)| b.clone())
            .min()
            .unwrap();
        prop_assert_eq!(seg.boundaries(), earliest);
        check_shape(&seg, &labels, scores[0].len(), min)?;
    }

    #[test]
    fn constant_offset_keeps_the_argmax((scores, min) in instance(), c in -50.0f64..50.0) {
        let labels: Vec<String> = (0..scores.len()).map(|i| format!("n{i}")).collect();
        let cfg = AlignConfig { min_duration_frames: min, ..AlignConfig::default() };
        let a = align_scores(&scores, &labels, &cfg).unwrap();
        let shifted: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|x| x + c).collect()).collect();
        let b = align_scores(&shifted, &labels, &cfg).unwrap();
        prop_assert_eq!(a.boundaries(), b.boundaries());
        let t = scores[0].len() as f64;
        prop_assert!((b.total_log_likelihood - a.total_log_likelihood - t * c).abs() < 1e-6);
    }

    #[test]
    fn alignment_is_deterministic((scores, min) in instance()) {
        let labels: Vec<String> = (0..scores.len()).map(|i| format!("n{i}")).collect();
        let cfg = AlignConfig { min_duration_frames: min, ..AlignConfig::default() };
        prop_assert_eq!(
            align_scores(&scores, &labels, &cfg).unwrap(),
            align_scores(&scores, &labels, &cfg).unwrap()
        );
    }

    #[test]
    fn training_ignores_segment_order(seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut segments: Vec<Vec<Frame>> = (0..6)
            .map(|_| (0..rng.gen_range(1..20)).map(|_| random_frame(&mut rng, 5.0)).collect())
            .collect();
        let mut examples = BTreeMap::new();
        examples.insert("G3".to_string(), segments.clone());
        let a = train(&examples, "fp", &TrainOptions::default()).unwrap();

        let mut prng = ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..segments.len()).rev() {
            segments.swap(i, prng.gen_range(0..=i));
        }
        examples.insert("G3".to_string(), segments);
        let b = train(&examples, "fp", &TrainOptions::default()).unwrap();
        let (ma, mb) = (a.get("G3").unwrap(), b.get("G3").unwrap());
        for d in 0..FEATURE_DIM {
            prop_assert!((ma.mean()[d] - mb.mean()[d]).abs() <= 1e-12 * ma.mean()[d].abs().max(1.0));
            prop_assert!((ma.variance()[d] - mb.variance()[d]).abs() <= 1e-12 * ma.variance()[d]);
        }
    }
}

fn check_shape(seg: &Segmentation, labels: &[String], t: usize, min: usize) -> Result<(), TestCaseError> {
    prop_assert_eq!(seg.segments.len(), labels.len());
    prop_assert_eq!(seg.segments[0].start, 0);
    prop_assert_eq!(seg.segments.last().unwrap().end, t);
    for (s, l) in seg.segments.iter().zip(labels) {
        prop_assert_eq!(&s.label, l);
        prop_assert!(s.end - s.start >= min);
    }
    for w in seg.segments.windows(2) {
        prop_assert_eq!(w[0].end, w[1].start);
    }
    Ok(())
}

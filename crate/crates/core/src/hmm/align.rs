//! Forced Viterbi alignment of a feature stream to a known note sequence.
//!
//! Every transcript note is one left-to-right state with a self-loop and a
//! minimum duration. The search runs backwards over frames and the best
//! path is then traced forwards, so that at every frame where advancing and
//! staying score the same the path advances: among equally good
//! segmentations the one with the earliest boundaries wins.

use std::collections::BTreeMap;

use super::{HmmError, ModelSet, GAP_LABEL};
use crate::annot::{Label, LabelTrack};
use crate::features::FeatureMatrix;

/// Relative tolerance under which advancing and staying count as a tie.
const TIE_RELATIVE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignConfig {
    pub self_loop_prob: f64,
    pub min_duration_frames: usize,
    /// Allow an optional gap segment before the first and after the last
    /// note. Requires a model named [`GAP_LABEL`].
    pub gap_model: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            self_loop_prob: 0.9,
            min_duration_frames: 5,
            gap_model: false,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<(), HmmError> {
        if !(self.self_loop_prob > 0.0 && self.self_loop_prob < 1.0) {
            return Err(HmmError::InvalidConfig(format!(
                "self_loop_prob {} outside (0, 1)",
                self.self_loop_prob
            )));
        }
        if self.min_duration_frames == 0 {
            return Err(HmmError::InvalidConfig("min_duration_frames must be at least 1".into()));
        }
        Ok(())
    }
}

/// One aligned segment covering frames `start..end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn is_gap(&self) -> bool {
        self.label == GAP_LABEL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub total_log_likelihood: f64,
}

impl Segmentation {
    /// Start frames of every segment after the first.
    pub fn boundaries(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    /// Segments excluding gaps.
    pub fn notes(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| !s.is_gap())
    }
}

struct States<'a> {
    labels: Vec<&'a str>,
    optional: Vec<bool>,
}

impl States<'_> {
    fn len(&self) -> usize {
        self.labels.len()
    }

    /// States reachable by one advance from `j`, skipping optional ones.
    fn successors(&self, j: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for k in j + 1..self.len() {
            out.push(k);
            if !self.optional[k] {
                break;
            }
        }
        out
    }

    fn initial(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            out.push(k);
            if !self.optional[k] {
                break;
            }
        }
        out
    }

    fn may_end(&self, j: usize) -> bool {
        self.optional[j + 1..].iter().all(|&o| o)
    }
}

fn tie_slack(x: f64) -> f64 {
    TIE_RELATIVE * (1.0 + x.abs())
}

/// Core search over a per-state emission table: `scores[j][t]` is the log
/// likelihood of frame `t` under state `j`.
fn search(scores: &[Vec<f64>], states: &States<'_>, cfg: &AlignConfig) -> Result<Segmentation, HmmError> {
    cfg.validate()?;
    let n = states.len();
    let frames = scores.first().map_or(0, Vec::len);
    let d = cfg.min_duration_frames;
    let required = states.optional.iter().filter(|o| !**o).count();
    if n == 0 || required * d > frames {
        return Err(HmmError::InfeasibleAlignment {
            needed: required.max(1) * d,
            frames,
        });
    }
    let (stay_lp, adv_lp) = (cfg.self_loop_prob.ln(), (1.0 - cfg.self_loop_prob).ln());
    let succ: Vec<Vec<usize>> = (0..n).map(|j| states.successors(j)).collect();

    // stay[j][t]: best score of frames t.. with frame t in state j after its
    // minimum duration is met. start[j][t]: best score of frames t.. when
    // state j begins at t.
    let mut stay = vec![vec![f64::NEG_INFINITY; frames]; n];
    let mut start = vec![vec![f64::NEG_INFINITY; frames + 1]; n];
    for t in (0..frames).rev() {
        for j in 0..n {
            let rest = if t + 1 == frames {
                if states.may_end(j) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                let mut best = stay_lp + stay[j][t + 1];
                for &k in &succ[j] {
                    best = best.max(adv_lp + start[k][t + 1]);
                }
                best
            };
            stay[j][t] = scores[j][t] + rest;
        }
        for j in 0..n {
            if t + d <= frames {
                let head: f64 = scores[j][t..t + d - 1].iter().sum();
                start[j][t] = head + (d - 1) as f64 * stay_lp + stay[j][t + d - 1];
            }
        }
    }

    let pick = |cands: &[usize], at: usize| -> Option<(usize, f64)> {
        let best = cands
            .iter()
            .map(|&k| start[k][at])
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return None;
        }
        cands
            .iter()
            .find(|&&k| start[k][at] >= best - tie_slack(best))
            .map(|&k| (k, best))
    };

    let (mut j, _) = pick(&states.initial(), 0).ok_or(HmmError::InfeasibleAlignment {
        needed: required * d,
        frames,
    })?;
    let mut seg_start = 0;
    let mut segments = Vec::with_capacity(n);
    let mut u = d - 1;
    loop {
        if u + 1 == frames {
            segments.push((j, seg_start, frames));
            break;
        }
        let stay_score = stay_lp + stay[j][u + 1];
        let advance = pick(&succ[j], u + 1)
            .map(|(k, s)| (k, adv_lp + s))
            .filter(|&(_, s)| s >= stay_score - tie_slack(stay_score));
        match advance {
            Some((k, _)) => {
                segments.push((j, seg_start, u + 1));
                j = k;
                seg_start = u + 1;
                u = seg_start + d - 1;
            }
            None => u += 1,
        }
    }

    let mut total = 0.0;
    for (i, &(j, s, e)) in segments.iter().enumerate() {
        total += scores[j][s..e].iter().sum::<f64>() + (e - s - 1) as f64 * stay_lp;
        if i > 0 {
            total += adv_lp;
        }
    }
    Ok(Segmentation {
        segments: segments
            .into_iter()
            .map(|(j, start, end)| Segment {
                label: states.labels[j].to_string(),
                start,
                end,
            })
            .collect(),
        total_log_likelihood: total,
    })
}

/// Aligns a precomputed emission table (`scores[i][t]` for transcript
/// position `i`, frame `t`) to the labels in order.
pub fn align_scores<S: AsRef<str>>(
    scores: &[Vec<f64>],
    labels: &[S],
    cfg: &AlignConfig,
) -> Result<Segmentation, HmmError> {
    if scores.len() != labels.len() {
        return Err(HmmError::InvalidConfig(format!(
            "{} score rows for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(HmmError::InvalidConfig("score rows differ in length".into()));
    }
    let states = States {
        labels: labels.iter().map(AsRef::as_ref).collect(),
        optional: vec![false; labels.len()],
    };
    search(scores, &states, cfg)
}

/// Finds the highest-scoring segmentation of `features` into the notes of
/// `transcript`, in order.
pub fn force_align<S: AsRef<str>>(
    features: &FeatureMatrix,
    transcript: &[S],
    models: &ModelSet,
    cfg: &AlignConfig,
) -> Result<Segmentation, HmmError> {
    cfg.validate()?;
    if transcript.is_empty() {
        return Err(HmmError::InvalidConfig("empty transcript".into()));
    }
    let mut labels: Vec<&str> = Vec::with_capacity(transcript.len() + 2);
    let mut optional = Vec::with_capacity(transcript.len() + 2);
    if cfg.gap_model {
        labels.push(GAP_LABEL);
        optional.push(true);
    }
    for note in transcript {
        labels.push(note.as_ref());
        optional.push(false);
    }
    if cfg.gap_model {
        labels.push(GAP_LABEL);
        optional.push(true);
    }
    if let Some(missing) = labels.iter().find(|l| models.get(l).is_none()) {
        return Err(HmmError::UnknownNote(missing.to_string()));
    }

    let mut cache: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for &label in &labels {
        cache.entry(label).or_insert_with(|| {
            let model = models.get(label).expect("checked above");
            features.frames().iter().map(|f| model.log_likelihood(f)).collect()
        });
    }
    let scores: Vec<Vec<f64>> = labels.iter().map(|l| cache[l].clone()).collect();
    search(&scores, &States { labels, optional }, cfg)
}

/// Converts note segments to a label track (gaps are dropped).
pub fn segmentation_to_labels(seg: &Segmentation, features: &FeatureMatrix) -> LabelTrack {
    let labels = seg
        .notes()
        .map(|s| {
            let start = features.frame_time(s.start).expect("segment inside matrix");
            let end = features.frame_time(s.end).expect("segment inside matrix");
            Label::new(start, end, s.label.clone()).expect("segments are non-empty")
        })
        .collect();
    LabelTrack::new(labels).expect("segments are ordered and disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(d: usize) -> AlignConfig {
        AlignConfig {
            min_duration_frames: d,
            ..AlignConfig::default()
        }
    }

    #[test]
    fn single_note_takes_everything() {
        let scores = vec![vec![-1.0; 12]];
        let seg = align_scores(&scores, &["A"], &cfg(5)).unwrap();
        assert_eq!(
            seg.segments,
            vec![Segment {
                label: "A".into(),
                start: 0,
                end: 12
            }]
        );
        let want = -12.0 + 11.0 * 0.9f64.ln();
        assert!((seg.total_log_likelihood - want).abs() < 1e-12);
    }

    #[test]
    fn two_note_boundary() {
        // frames 0..5 prefer A, 5..10 prefer B
        let a: Vec<f64> = (0..10).map(|t| if t < 5 { -1.0 } else { -9.0 }).collect();
        let b: Vec<f64> = (0..10).map(|t| if t < 5 { -9.0 } else { -1.0 }).collect();
        let seg = align_scores(&[a, b], &["A", "B"], &cfg(1)).unwrap();
        assert_eq!(seg.boundaries(), vec![5]);
    }

    #[test]
    fn ties_go_to_the_earliest_boundary() {
        let flat = vec![vec![-2.0; 10]; 3];
        let seg = align_scores(&flat, &["A", "B", "C"], &cfg(2)).unwrap();
        assert_eq!(seg.boundaries(), vec![2, 4]);
        let seg = align_scores(&flat, &["A", "B", "C"], &cfg(1)).unwrap();
        assert_eq!(seg.boundaries(), vec![1, 2]);
    }

    #[test]
    fn infeasible_and_invalid() {
        let s = vec![vec![0.0; 9]; 2];
        assert!(matches!(
            align_scores(&s, &["A", "B"], &cfg(5)),
            Err(HmmError::InfeasibleAlignment { needed: 10, frames: 9 })
        ));
        assert!(align_scores(&s, &["A", "B"], &cfg(0)).is_err());
        let bad = AlignConfig {
            self_loop_prob: 1.0,
            ..AlignConfig::default()
        };
        assert!(align_scores(&s, &["A", "B"], &bad).is_err());
        assert!(align_scores(&s, &["A"], &cfg(1)).is_err());
    }

    #[test]
    fn exact_fit() {
        let s = vec![vec![0.0; 10]; 2];
        let seg = align_scores(&s, &["A", "B"], &cfg(5)).unwrap();
        assert_eq!(seg.boundaries(), vec![5]);
    }
}

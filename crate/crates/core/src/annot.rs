//! Label files (`start end name`, seconds) and onset-accuracy statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Onset-error thresholds in milliseconds used by default in reports.
pub const DEFAULT_THRESHOLDS_MS: [f64; 6] = [2.0, 4.0, 6.0, 8.0, 10.0, f64::INFINITY];

/// Slack when comparing errors derived from decimal label times to a threshold.
const THRESHOLD_SLACK_MS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnnotError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: end {end} is not after start {start}")]
    Interval { line: usize, start: f64, end: f64 },
    #[error("line {line}: label overlaps the previous one")]
    Overlap { line: usize },
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("shift of {delta_ms} ms would push label {index} to or before time zero")]
    ShiftUnderflow { index: usize, delta_ms: f64 },
    #[error("tracks do not line up: {0}")]
    Misaligned(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    start: f64,
    end: f64,
    text: String,
}

impl Label {
    pub fn new(start: f64, end: f64, text: impl Into<String>) -> Result<Self, AnnotError> {
        let text = text.into();
        if !(start >= 0.0 && start < end && end.is_finite()) {
            return Err(AnnotError::InvalidLabel(format!("interval {start}..{end}")));
        }
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(AnnotError::InvalidLabel(format!("text {text:?}")));
        }
        Ok(Self { start, end, text })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Sorted, non-overlapping labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelTrack {
    labels: Vec<Label>,
    source: Option<PathBuf>,
}

impl LabelTrack {
    pub fn new(mut labels: Vec<Label>) -> Result<Self, AnnotError> {
        labels.sort_by(|a, b| a.start.total_cmp(&b.start));
        if let Some(i) = labels.windows(2).position(|w| w[1].start < w[0].end) {
            return Err(AnnotError::Overlap { line: i + 2 });
        }
        Ok(Self {
            labels,
            source: None,
        })
    }

    pub fn with_source(mut self, path: impl Into<PathBuf>) -> Self {
        self.source = Some(path.into());
        self
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|l| l.text.as_str())
    }

    /// All labels moved by `delta_ms`. Starts are clamped at zero; an end at
    /// or before zero is an error.
    pub fn shift(&self, delta_ms: f64) -> Result<Self, AnnotError> {
        let delta = delta_ms / 1000.0;
        let labels = self
            .labels
            .iter()
            .enumerate()
            .map(|(index, l)| {
                let end = l.end + delta;
                if end <= 0.0 {
                    return Err(AnnotError::ShiftUnderflow { index, delta_ms });
                }
                Ok(Label {
                    start: (l.start + delta).max(0.0),
                    end,
                    text: l.text.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            labels,
            source: self.source.clone(),
        })
    }
}

pub fn parse_lab(text: &str) -> Result<LabelTrack, AnnotError> {
    let mut rows: Vec<(usize, Label)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(AnnotError::Malformed {
                line,
                reason: format!("expected `start end name`, got {} fields", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64, AnnotError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnnotError::Malformed {
                    line,
                    reason: format!("bad time {s:?}"),
                })
        };
        let (start, end) = (num(fields[0])?, num(fields[1])?);
        if !(start >= 0.0 && end > start) {
            return Err(AnnotError::Interval { line, start, end });
        }
        rows.push((
            line,
            Label {
                start,
                end,
                text: fields[2].to_string(),
            },
        ));
    }
    rows.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
    if let Some(w) = rows.windows(2).find(|w| w[1].1.start < w[0].1.end) {
        return Err(AnnotError::Overlap {
            line: w[0].0.max(w[1].0),
        });
    }
    Ok(LabelTrack {
        labels: rows.into_iter().map(|(_, l)| l).collect(),
        source: None,
    })
}

pub fn read_lab(path: impl AsRef<Path>) -> Result<LabelTrack, AnnotError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| AnnotError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_lab(&text)?.with_source(path))
}

pub fn format_lab(track: &LabelTrack) -> String {
    let mut out = String::new();
    for l in &track.labels {
        writeln!(out, "{:.3} {:.3} {}", l.start, l.end, l.text).expect("write to string");
    }
    out
}

pub fn write_lab(track: &LabelTrack, path: impl AsRef<Path>) -> Result<(), AnnotError> {
    let path = path.as_ref();
    fs::write(path, format_lab(track)).map_err(|source| AnnotError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteError {
    pub note: String,
    pub abs_ms: f64,
    pub signed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeRow {
    pub threshold_ms: f64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnsetErrorReport {
    pub per_note: Vec<NoteError>,
    pub max_ms: f64,
    pub mean_ms: f64,
    pub cumulative: Vec<CumulativeRow>,
}

impl OnsetErrorReport {
    pub fn from_errors(per_note: Vec<NoteError>, thresholds_ms: &[f64]) -> Self {
        let abs: Vec<f64> = per_note.iter().map(|e| e.abs_ms).collect();
        let max_ms = abs.iter().copied().fold(0.0, f64::max);
        let mean_ms = if abs.is_empty() {
            0.0
        } else {
            abs.iter().sum::<f64>() / abs.len() as f64
        };
        Self {
            cumulative: cumulative_table(&abs, thresholds_ms),
            per_note,
            max_ms,
            mean_ms,
        }
    }

    /// Pools several reports into one over all their notes.
    pub fn pooled<'a>(reports: impl IntoIterator<Item = &'a OnsetErrorReport>, thresholds_ms: &[f64]) -> Self {
        let all = reports
            .into_iter()
            .flat_map(|r| r.per_note.iter().cloned())
            .collect();
        Self::from_errors(all, thresholds_ms)
    }

    pub fn median_abs_ms(&self) -> f64 {
        let mut abs: Vec<f64> = self.per_note.iter().map(|e| e.abs_ms).collect();
        median(&mut abs).unwrap_or(0.0)
    }

    /// CSV with header `threshold_ms,percentage`; percentages to two decimals.
    pub fn cumulative_csv(&self) -> String {
        let mut out = String::from("threshold_ms,percentage\n");
        for row in &self.cumulative {
            let thr = if row.threshold_ms.is_infinite() {
                "inf".to_string()
            } else {
                format!("{}", row.threshold_ms)
            };
            writeln!(out, "{thr},{:.2}", row.percentage).expect("write to string");
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        format!("max_ms,mean_ms\n{:.3},{:.3}\n", self.max_ms, self.mean_ms)
    }
}

/// Percentage of errors at or under each threshold.
pub fn cumulative_table(abs_errors_ms: &[f64], thresholds_ms: &[f64]) -> Vec<CumulativeRow> {
    thresholds_ms
        .iter()
        .map(|&threshold_ms| {
            let percentage = if abs_errors_ms.is_empty() {
                100.0
            } else {
                let n = abs_errors_ms
                    .iter()
                    .filter(|&&e| e <= threshold_ms + THRESHOLD_SLACK_MS)
                    .count();
                100.0 * n as f64 / abs_errors_ms.len() as f64
            };
            CumulativeRow {
                threshold_ms,
                percentage,
            }
        })
        .collect()
}

fn check_matching(predicted: &LabelTrack, reference: &LabelTrack) -> Result<(), AnnotError> {
    if predicted.len() != reference.len() {
        return Err(AnnotError::Misaligned(format!(
            "{} predicted labels vs {} reference labels",
            predicted.len(),
            reference.len()
        )));
    }
    for (i, (p, r)) in predicted.labels.iter().zip(&reference.labels).enumerate() {
        if p.text != r.text {
            return Err(AnnotError::Misaligned(format!(
                "note mismatch at index {i}: {} vs {}",
                p.text, r.text
            )));
        }
    }
    Ok(())
}

fn signed_errors_ms(predicted: &LabelTrack, reference: &LabelTrack) -> Vec<f64> {
    predicted
        .labels
        .iter()
        .zip(&reference.labels)
        .map(|(p, r)| (p.start - r.start) * 1000.0)
        .collect()
}

/// Index-matched onset errors (`predicted - reference`) in milliseconds.
pub fn onset_errors(
    predicted: &LabelTrack,
    reference: &LabelTrack,
    thresholds_ms: &[f64],
) -> Result<OnsetErrorReport, AnnotError> {
    check_matching(predicted, reference)?;
    let per_note = signed_errors_ms(predicted, reference)
        .into_iter()
        .zip(&reference.labels)
        .map(|(signed_ms, r)| NoteError {
            note: r.text.clone(),
            abs_ms: signed_ms.abs(),
            signed_ms,
        })
        .collect();
    Ok(OnsetErrorReport::from_errors(per_note, thresholds_ms))
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// The constant shift (ms) that, added to `predicted`, minimises the summed
/// absolute onset error: the negated median signed error.
pub fn estimate_constant_shift(predicted: &LabelTrack, reference: &LabelTrack) -> Result<f64, AnnotError> {
    check_matching(predicted, reference)?;
    let mut errors = signed_errors_ms(predicted, reference);
    Ok(median(&mut errors).map(|m| -m).unwrap_or(0.0))
}

pub fn note_counts<'a>(tracks: impl IntoIterator<Item = &'a LabelTrack>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for track in tracks {
        for name in track.names() {
            *counts.entry(name.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn note_counts_csv(counts: &BTreeMap<String, usize>) -> String {
    let mut out = String::from("note,count\n");
    for (note, count) in counts {
        writeln!(out, "{note},{count}").expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(rows: &[(f64, f64, &str)]) -> LabelTrack {
        LabelTrack::new(rows.iter().map(|&(s, e, t)| Label::new(s, e, t).unwrap()).collect()).unwrap()
    }

    #[test]
    fn parse_two_labels() {
        let t = parse_lab("0.000 0.500 E2\n0.500 1.020 F2").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.labels()[1].start(), 0.5);
        assert_eq!(t.labels()[1].text(), "F2");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            parse_lab("0.5 0.4 E2"),
            Err(AnnotError::Interval { line: 1, .. })
        ));
        assert!(matches!(
            parse_lab("\n0.0 0.4 E2\n0.1 x E2"),
            Err(AnnotError::Malformed { line: 3, .. })
        ));
        assert!(matches!(
            parse_lab("0.0 0.4 E2 extra"),
            Err(AnnotError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_lab("0.0 0.4 E2\n0.3 0.6 F2"),
            Err(AnnotError::Overlap { line: 2 })
        ));
    }

    #[test]
    fn parse_sorts_and_skips_blanks() {
        let t = parse_lab("\n0.5 1.0 F2\n\n  \n0.0 0.5 E2\n").unwrap();
        assert_eq!(t.names().collect::<Vec<_>>(), ["E2", "F2"]);
    }

    #[test]
    fn write_rounds_to_milliseconds() {
        let t = track(&[(0.6789, 1.0, "E2")]);
        assert_eq!(format_lab(&t), "0.679 1.000 E2\n");
        assert_eq!(format_lab(&LabelTrack::default()), "");
    }

    #[test]
    fn shift_rules() {
        let t = track(&[(0.005, 0.5, "E2"), (0.5, 1.0, "F2")]);
        assert_eq!(t.shift(0.0).unwrap(), t);
        let s = t.shift(-7.0).unwrap();
        assert_eq!(s.labels()[0].start(), 0.0);
        assert!((s.labels()[1].start() - 0.493).abs() < 1e-12);
        let back = t.shift(10.0).unwrap().shift(-10.0).unwrap();
        for (a, b) in back.labels().iter().zip(t.labels()) {
            assert!((a.start() - b.start()).abs() < 1e-12);
            assert!((a.end() - b.end()).abs() < 1e-12);
        }
        assert!(matches!(
            t.shift(-600.0),
            Err(AnnotError::ShiftUnderflow { index: 0, .. })
        ));
    }

    #[test]
    fn identical_tracks_have_zero_error() {
        let t = track(&[(0.0, 0.5, "E2"), (0.5, 1.0, "F2")]);
        let r = onset_errors(&t, &t, &DEFAULT_THRESHOLDS_MS).unwrap();
        assert_eq!(r.max_ms, 0.0);
        assert_eq!(r.mean_ms, 0.0);
        assert!(r.cumulative.iter().all(|c| c.percentage == 100.0));
    }

    #[test]
    fn mismatch_names_index() {
        let a = track(&[(0.0, 0.1, "A"), (0.1, 0.2, "B"), (0.2, 0.3, "C"), (0.3, 0.4, "D")]);
        let b = track(&[(0.0, 0.1, "A"), (0.1, 0.2, "B"), (0.2, 0.3, "C"), (0.3, 0.4, "E")]);
        let err = onset_errors(&a, &b, &DEFAULT_THRESHOLDS_MS).unwrap_err();
        assert!(err.to_string().contains("index 3"), "{err}");
        let short = track(&[(0.0, 0.1, "A")]);
        assert!(onset_errors(&a, &short, &DEFAULT_THRESHOLDS_MS).is_err());
        assert!(estimate_constant_shift(&a, &b).is_err());
    }

    #[test]
    fn constant_shift_is_negated_median() {
        let r = track(&[(0.1, 0.2, "A"), (0.2, 0.3, "B"), (0.3, 0.4, "C")]);
        let p = r.shift(7.0).unwrap();
        let d = estimate_constant_shift(&p, &r).unwrap();
        assert!((d + 7.0).abs() < 1e-9);
        let fixed = p.shift(d).unwrap();
        assert!(onset_errors(&fixed, &r, &DEFAULT_THRESHOLDS_MS).unwrap().max_ms < 1e-9);

        let p = track(&[(0.104, 0.2, "A"), (0.206, 0.3, "B"), (0.308, 0.4, "C")]);
        assert!((estimate_constant_shift(&p, &r).unwrap() + 6.0).abs() < 1e-9);
    }

    #[test]
    fn counts() {
        assert!(note_counts(std::iter::empty()).is_empty());
        let a = track(&[(0.0, 0.1, "E2"), (0.1, 0.2, "F2")]);
        let b = track(&[(0.0, 0.1, "F2")]);
        let c = note_counts([&a, &b]);
        assert_eq!(c["E2"], 1);
        assert_eq!(c["F2"], 2);
        assert_eq!(note_counts_csv(&c), "note,count\nE2,1\nF2,2\n");
    }

    #[test]
    fn csv_layout() {
        let t = track(&[(0.0, 0.1, "E2")]);
        let p = t.shift(3.0).unwrap();
        let r = onset_errors(&p, &t, &DEFAULT_THRESHOLDS_MS).unwrap();
        let csv = r.cumulative_csv();
        assert!(csv.starts_with("threshold_ms,percentage\n2,0.00\n4,100.00\n"));
        assert!(csv.ends_with("inf,100.00\n"));
        assert_eq!(r.summary_csv(), "max_ms,mean_ms\n3.000,3.000\n");
    }
}

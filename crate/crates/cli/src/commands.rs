//! The corpus workflow: compose, synth, train, align, eval, stats and shift.
//!
//! Each command returns an [`Outcome`] holding the text for standard output
//! and a list of per-file failures. Failures do not stop a batch; they turn
//! into a nonzero exit code at the end.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fretalign::annot::{
    estimate_constant_shift, format_lab, note_counts, note_counts_csv, onset_errors, read_lab, LabelTrack,
    NoteError, OnsetErrorReport, DEFAULT_THRESHOLDS_MS,
};
use fretalign::audio::{read_wav, synth_exercise, write_wav};
use fretalign::features::{mfcc, FeatureMatrix, Frame};
use fretalign::hmm::{
    force_align, format_models, load_models, segmentation_to_labels, train, HmmError, ModelSet, GAP_LABEL,
};
use fretalign::music::{compose_exercises, default_exercise_length, format_exercises, string_pitches, STRING_COUNT};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::corpus::{files_with_ext, write_atomic, write_text_atomic, CorpusLayout, LabelKind, TakeId};
use crate::error::CliError;

/// A string number or every string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strings {
    All,
    One(u8),
}

impl Strings {
    pub fn list(self) -> Vec<u8> {
        match self {
            Strings::All => (1..=STRING_COUNT).collect(),
            Strings::One(s) => vec![s],
        }
    }

    fn contains(self, string: u8) -> bool {
        match self {
            Strings::All => true,
            Strings::One(s) => s == string,
        }
    }
}

impl std::str::FromStr for Strings {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Strings::All);
        }
        match s.parse::<u8>() {
            Ok(n) if (1..=STRING_COUNT).contains(&n) => Ok(Strings::One(n)),
            _ => Err(format!("expected a string number 1-{STRING_COUNT} or `all`, got {s:?}")),
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub failures: Vec<String>,
}

pub struct Context {
    pub layout: CorpusLayout,
    pub config: RunConfig,
    pub force: bool,
    pub jobs: usize,
}

impl Context {
    pub fn new(root: impl Into<PathBuf>, config: RunConfig) -> Self {
        Self {
            layout: CorpusLayout::new(root),
            config,
            force: false,
            jobs: 1,
        }
    }

    /// Runs `f` over `items` on a pool of `jobs` workers, keeping input order.
    fn par_map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(pool.install(|| items.par_iter().map(&f).collect()))
    }

    fn check_collisions(&self, paths: &[PathBuf]) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        let existing: Vec<&PathBuf> = paths.iter().filter(|p| p.exists()).collect();
        match existing.first() {
            Some(first) => Err(CliError::Collision {
                count: existing.len(),
                first: (*first).clone(),
            }),
            None => Ok(()),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Synthesis seed of one take.
pub fn take_seed(seed: u64, id: &TakeId) -> u64 {
    let key = (u64::from(id.string) << 48) ^ ((id.exercise as u64) << 24) ^ id.take as u64;
    splitmix64(seed ^ splitmix64(key))
}

pub fn compose(ctx: &Context, strings: Strings) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let mut planned = Vec::new();
    for string in strings.list() {
        let length = match cfg.length {
            Some(n) => n,
            None => default_exercise_length(string)?,
        };
        let exercises = compose_exercises(string, cfg.count, length, cfg.seed)?;
        planned.push((string, exercises));
    }
    let paths: Vec<PathBuf> = planned.iter().map(|(s, _)| ctx.layout.exercise_file(*s)).collect();
    ctx.check_collisions(&paths)?;

    let mut out = Outcome::default();
    for ((string, exercises), path) in planned.iter().zip(&paths) {
        write_text_atomic(path, &format_exercises(exercises))?;
        writeln!(out.stdout, "string {string}: {} exercises -> {}", exercises.len(), path.display()).unwrap();
    }
    Ok(out)
}

struct SynthJob {
    id: TakeId,
    exercise: fretalign::music::Exercise,
    manual: bool,
}

pub fn synth(ctx: &Context, strings: Strings) -> Result<Outcome, CliError> {
    let cfg = &ctx.config;
    let layout = &ctx.layout;
    let mut jobs = Vec::new();
    for string in strings.list() {
        let exercises = layout.exercises(string)?;
        if exercises.is_empty() {
            return Err(CliError::Input(format!(
                "no exercises for string {string}; run `compose` first"
            )));
        }
        let notes: BTreeSet<_> = string_pitches(string)?.into_iter().collect();
        let bootstrap = exercises
            .iter()
            .position(|e| notes.iter().all(|n| e.sequence().contains(n)))
            .ok_or_else(|| CliError::Input(format!("no exercise of string {string} covers all its notes")))?;
        for (k, ex) in exercises.iter().enumerate() {
            let exercise = TakeId::parse(&format!("{}_t1", ex.id()))
                .filter(|id| id.string == string)
                .ok_or_else(|| CliError::Input(format!("exercise id {:?} is not s<string>_e<n>", ex.id())))?
                .exercise;
            for take in 1..=cfg.takes {
                jobs.push(SynthJob {
                    id: TakeId { string, exercise, take },
                    exercise: ex.clone(),
                    manual: k == bootstrap && take <= cfg.bootstrap_takes,
                });
            }
        }
    }

    let mut targets = Vec::new();
    for job in &jobs {
        targets.push(layout.wav(&job.id));
        targets.push(layout.label(LabelKind::Truth, &job.id));
        if job.manual {
            targets.push(layout.label(LabelKind::Manual, &job.id));
        }
    }
    ctx.check_collisions(&targets)?;

    let results = ctx.par_map(&jobs, |job| -> Result<(), CliError> {
        let (clip, score) =
            synth_exercise(&job.exercise, &cfg.tempo, cfg.sample_rate, take_seed(cfg.seed, &job.id))?;
        write_atomic(&layout.wav(&job.id), |tmp| Ok(write_wav(&clip, tmp)?))?;
        let lab = format_lab(&score.to_labels());
        write_text_atomic(&layout.label(LabelKind::Truth, &job.id), &lab)?;
        if job.manual {
            write_text_atomic(&layout.label(LabelKind::Manual, &job.id), &lab)?;
        }
        Ok(())
    })?;
    results.into_iter().collect::<Result<Vec<()>, _>>()?;

    let mut out = Outcome::default();
    for string in strings.list() {
        let n = jobs.iter().filter(|j| j.id.string == string).count();
        let m = jobs.iter().filter(|j| j.id.string == string && j.manual).count();
        writeln!(out.stdout, "string {string}: {n} wav files, {m} manual label files").unwrap();
    }
    Ok(out)
}

fn features_of(ctx: &Context, id: &TakeId) -> Result<FeatureMatrix, CliError> {
    let clip = read_wav(ctx.layout.wav(id))?;
    Ok(mfcc(&clip, &ctx.config.features)?)
}

/// Frames `frame_at(start)..frame_at(end)` of each label, plus unlabelled
/// stretches as gap examples when `gaps` is set.
fn label_segments(
    feats: &FeatureMatrix,
    track: &LabelTrack,
    gaps: bool,
    source: &Path,
) -> Result<Vec<(String, Vec<Frame>)>, CliError> {
    let mut out = Vec::new();
    let mut cursor = 0;
    for (i, l) in track.labels().iter().enumerate() {
        let (a, b) = (feats.frame_at(l.start()), feats.frame_at(l.end()).min(feats.len()));
        if gaps && a > cursor {
            out.push((GAP_LABEL.to_string(), feats.frames()[cursor..a].to_vec()));
        }
        if a >= b {
            return Err(CliError::Input(format!(
                "{}: label {} ({}) covers no whole frame",
                source.display(),
                i + 1,
                l.text()
            )));
        }
        out.push((l.text().to_string(), feats.frames()[a..b].to_vec()));
        cursor = b;
    }
    if gaps && cursor < feats.len() {
        out.push((GAP_LABEL.to_string(), feats.frames()[cursor..].to_vec()));
    }
    Ok(out)
}

fn train_string(ctx: &Context, string: u8) -> Result<(ModelSet, usize), CliError> {
    let layout = &ctx.layout;
    let cfg = &ctx.config;
    let takes: Vec<TakeId> = layout
        .label_takes(LabelKind::Manual)?
        .into_iter()
        .filter(|id| id.string == string)
        .collect();
    if takes.is_empty() {
        return Err(CliError::Input(format!(
            "no manual label files in {}",
            layout.labels_dir(LabelKind::Manual).display()
        )));
    }
    let segments = ctx.par_map(&takes, |id| -> Result<_, CliError> {
        let path = layout.label(LabelKind::Manual, id);
        let track = read_lab(&path)?;
        label_segments(&features_of(ctx, id)?, &track, cfg.align.gap_model, &path)
    })?;
    let mut examples: BTreeMap<String, Vec<Vec<Frame>>> = BTreeMap::new();
    for segs in segments {
        for (note, frames) in segs? {
            examples.entry(note).or_default().push(frames);
        }
    }
    if cfg.align.gap_model && !examples.contains_key(GAP_LABEL) {
        return Err(CliError::Input(
            "gap_model is on but the manual labels leave no unlabelled frames".into(),
        ));
    }
    let mut deficits: Vec<(String, usize)> = string_pitches(string)?
        .iter()
        .map(|p| p.to_string())
        .filter(|n| !examples.contains_key(n))
        .map(|n| (n, 0))
        .collect();
    deficits.extend(
        examples
            .iter()
            .filter(|(_, segs)| segs.len() < cfg.train.min_instances)
            .map(|(n, segs)| (n.clone(), segs.len())),
    );
    if !deficits.is_empty() && cfg.train.min_instances > 0 {
        deficits.sort();
        return Err(HmmError::InsufficientExamples(deficits).into());
    }
    let models = train(&examples, cfg.features.fingerprint(), &cfg.train)?;
    Ok((models, takes.len()))
}

pub fn train_models(ctx: &Context, strings: Strings) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    let mut errors = Vec::new();
    for string in strings.list() {
        match train_string(ctx, string) {
            Ok((models, files)) => {
                let path = ctx.layout.model_file(string);
                write_text_atomic(&path, &format_models(&models))?;
                writeln!(
                    out.stdout,
                    "string {string}: {} models from {files} manual files -> {}",
                    models.len(),
                    path.display()
                )
                .unwrap();
                writeln!(out.stdout, "  note   frames").unwrap();
                for m in models.models() {
                    writeln!(out.stdout, "  {:<6} {}", m.label(), m.frame_count()).unwrap();
                }
            }
            Err(e) => errors.push((string, e)),
        }
    }
    if errors.is_empty() {
        return Ok(out);
    }
    let config = errors.iter().any(|(_, e)| matches!(e, CliError::Config(_)));
    let msg = errors
        .iter()
        .map(|(string, e)| format!("string {string}: {e}"))
        .collect::<Vec<_>>()
        .join("\n");
    Err(if config { CliError::Config(msg) } else { CliError::Input(msg) })
}

struct AlignRow {
    id: TakeId,
    frames: usize,
    notes: usize,
    log_likelihood: f64,
    shift_ms: Option<f64>,
}

fn align_one(
    ctx: &Context,
    models: &BTreeMap<u8, Result<ModelSet, String>>,
    id: &TakeId,
    shift_correct: bool,
) -> Result<AlignRow, CliError> {
    let layout = &ctx.layout;
    let models = models[&id.string].as_ref().map_err(|e| CliError::Input(e.clone()))?;
    let transcript = layout.transcript(id)?.transcript();
    let feats = features_of(ctx, id)?;
    let seg = force_align(&feats, &transcript, models, &ctx.config.align)?;
    let mut labels = segmentation_to_labels(&seg, &feats);
    let mut shift_ms = None;
    if shift_correct {
        let reference = [LabelKind::Truth, LabelKind::Manual]
            .into_iter()
            .map(|k| layout.label(k, id))
            .find(|p| p.exists());
        if let Some(path) = reference {
            let delta = estimate_constant_shift(&labels, &read_lab(&path)?)?;
            labels = labels.shift(delta)?;
            shift_ms = Some(delta);
        }
    }
    write_text_atomic(&layout.label(LabelKind::Auto, id), &format_lab(&labels))?;
    Ok(AlignRow {
        id: *id,
        frames: feats.len(),
        notes: transcript.len(),
        log_likelihood: seg.total_log_likelihood,
        shift_ms,
    })
}

/// Aligns every take that has a wav but no manual labels.
pub fn align(ctx: &Context, strings: Strings, shift_correct: bool) -> Result<Outcome, CliError> {
    let layout = &ctx.layout;
    let manual: BTreeSet<TakeId> = layout.label_takes(LabelKind::Manual)?.into_iter().collect();
    let targets: Vec<TakeId> = layout
        .wav_takes()?
        .into_iter()
        .filter(|id| strings.contains(id.string) && !manual.contains(id))
        .collect();
    if targets.is_empty() {
        return Err(CliError::Input(format!(
            "no unlabelled takes to align in {}",
            layout.wav_dir().display()
        )));
    }
    let mut models = BTreeMap::new();
    for string in targets.iter().map(|t| t.string).collect::<BTreeSet<_>>() {
        let path = layout.model_file(string);
        let loaded = load_models(&path)
            .and_then(|m| m.check_config(&ctx.config.features).map(|()| m))
            .map_err(|e| format!("models for string {string}: {e}"));
        models.insert(string, loaded);
    }

    let results = ctx.par_map(&targets, |id| align_one(ctx, &models, id, shift_correct))?;

    let mut out = Outcome::default();
    let mut csv = ctx.config.csv_preamble();
    csv.push_str("file,notes,frames,log_likelihood,shift_ms,status\n");
    let mut unshifted = 0;
    for (id, res) in targets.iter().zip(&results) {
        match res {
            Ok(row) => {
                let shift = match row.shift_ms {
                    Some(s) => format!("{s:.3}"),
                    None => {
                        unshifted += 1;
                        String::new()
                    }
                };
                writeln!(
                    csv,
                    "{},{},{},{:.6},{shift},ok",
                    row.id.stem(),
                    row.notes,
                    row.frames,
                    row.log_likelihood
                )
                .unwrap();
            }
            Err(e) => {
                writeln!(csv, "{},,,,,failed", id.stem()).unwrap();
                out.failures.push(format!("{}: {e}", id.stem()));
            }
        }
    }
    let report = layout.reports_dir().join("align.csv");
    write_text_atomic(&report, &csv)?;
    let ok = results.iter().filter(|r| r.is_ok()).count();
    writeln!(out.stdout, "aligned {ok} of {} files -> {}", targets.len(), layout.labels_dir(LabelKind::Auto).display())
        .unwrap();
    if shift_correct && unshifted > 0 {
        writeln!(out.stdout, "{unshifted} files had no reference labels and were written unshifted").unwrap();
    }
    writeln!(out.stdout, "report: {}", report.display()).unwrap();
    Ok(out)
}

/// Raw and shift-corrected errors of one file.
struct FileEval {
    stem: String,
    raw: OnsetErrorReport,
    shifted: OnsetErrorReport,
    shift_ms: f64,
    reference: LabelTrack,
}

fn eval_one(predicted: &Path, reference: &Path) -> Result<FileEval, CliError> {
    let pred = read_lab(predicted)?;
    let reference_track = read_lab(reference)?;
    let raw = onset_errors(&pred, &reference_track, &DEFAULT_THRESHOLDS_MS)?;
    let shift_ms = estimate_constant_shift(&pred, &reference_track)?;
    // shift arithmetically: a whole-track shift could push a label below zero
    let shifted_errors = raw
        .per_note
        .iter()
        .map(|e| NoteError {
            note: e.note.clone(),
            signed_ms: e.signed_ms + shift_ms,
            abs_ms: (e.signed_ms + shift_ms).abs(),
        })
        .collect();
    Ok(FileEval {
        stem: predicted.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
        shifted: OnsetErrorReport::from_errors(shifted_errors, &DEFAULT_THRESHOLDS_MS),
        raw,
        shift_ms,
        reference: reference_track,
    })
}

fn threshold_name(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        format!("{t}")
    }
}

pub fn eval(ctx: &Context, predicted_dir: &Path, reference_dir: &Path) -> Result<Outcome, CliError> {
    let predicted = files_with_ext(predicted_dir, "lab")?;
    if predicted.is_empty() {
        return Err(CliError::Input(format!("no label files in {}", predicted_dir.display())));
    }
    let mut out = Outcome::default();
    let mut pairs = Vec::new();
    for p in &predicted {
        let r = reference_dir.join(p.file_name().expect("listed files have names"));
        if r.exists() {
            pairs.push((p.clone(), r));
        } else {
            out.failures.push(format!("unmatched: {} has no reference in {}", p.display(), reference_dir.display()));
        }
    }
    if pairs.is_empty() {
        return Err(CliError::Input(format!(
            "none of the {} predicted files has a reference in {}",
            predicted.len(),
            reference_dir.display()
        )));
    }
    let results = ctx.par_map(&pairs, |(p, r)| eval_one(p, r))?;
    let mut files = Vec::new();
    for ((p, _), res) in pairs.iter().zip(results) {
        match res {
            Ok(f) => files.push(f),
            Err(e) => out.failures.push(format!("{}: {e}", p.display())),
        }
    }
    if files.is_empty() {
        return Err(CliError::Input("no file could be evaluated".into()));
    }
    let raw = OnsetErrorReport::pooled(files.iter().map(|f| &f.raw), &DEFAULT_THRESHOLDS_MS);
    let shifted = OnsetErrorReport::pooled(files.iter().map(|f| &f.shifted), &DEFAULT_THRESHOLDS_MS);

    let preamble = ctx.config.csv_preamble();
    let mut per_file = preamble.clone();
    per_file.push_str("file,notes,max_ms,mean_ms,median_ms,shift_ms,shifted_max_ms,shifted_mean_ms,shifted_median_ms\n");
    for f in &files {
        writeln!(
            per_file,
            "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
            f.stem,
            f.raw.per_note.len(),
            f.raw.max_ms,
            f.raw.mean_ms,
            f.raw.median_abs_ms(),
            f.shift_ms,
            f.shifted.max_ms,
            f.shifted.mean_ms,
            f.shifted.median_abs_ms()
        )
        .unwrap();
    }
    let mut cumulative = preamble.clone();
    cumulative.push_str("threshold_ms,percentage,shifted_percentage\n");
    for (a, b) in raw.cumulative.iter().zip(&shifted.cumulative) {
        writeln!(cumulative, "{},{:.2},{:.2}", threshold_name(a.threshold_ms), a.percentage, b.percentage).unwrap();
    }
    let mut summary = preamble.clone();
    summary.push_str("statistic,raw,shifted\n");
    writeln!(summary, "files,{},{}", files.len(), files.len()).unwrap();
    writeln!(summary, "notes,{},{}", raw.per_note.len(), shifted.per_note.len()).unwrap();
    writeln!(summary, "median_ms,{:.3},{:.3}", raw.median_abs_ms(), shifted.median_abs_ms()).unwrap();
    writeln!(summary, "mean_ms,{:.3},{:.3}", raw.mean_ms, shifted.mean_ms).unwrap();
    writeln!(summary, "max_ms,{:.3},{:.3}", raw.max_ms, shifted.max_ms).unwrap();
    let counts = note_counts(files.iter().map(|f| &f.reference));
    let counts_csv = format!("{preamble}{}", note_counts_csv(&counts));

    let dir = ctx.layout.reports_dir();
    write_text_atomic(&dir.join("eval_files.csv"), &per_file)?;
    write_text_atomic(&dir.join("eval_cumulative.csv"), &cumulative)?;
    write_text_atomic(&dir.join("eval_summary.csv"), &summary)?;
    write_text_atomic(&dir.join("note_counts.csv"), &counts_csv)?;

    let s = &mut out.stdout;
    writeln!(s, "files evaluated: {} of {} predicted", files.len(), predicted.len()).unwrap();
    writeln!(s, "notes: {}", raw.per_note.len()).unwrap();
    writeln!(s, "{:<12} {:>9} {:>9}", "", "raw", "shifted").unwrap();
    writeln!(s, "{:<12} {:>9.3} {:>9.3}", "median (ms)", raw.median_abs_ms(), shifted.median_abs_ms()).unwrap();
    writeln!(s, "{:<12} {:>9.3} {:>9.3}", "mean (ms)", raw.mean_ms, shifted.mean_ms).unwrap();
    writeln!(s, "{:<12} {:>9.3} {:>9.3}", "max (ms)", raw.max_ms, shifted.max_ms).unwrap();
    writeln!(s, "Error (ms)   Percentage of Notes (raw / shifted)").unwrap();
    for (a, b) in raw.cumulative.iter().zip(&shifted.cumulative) {
        let name = if a.threshold_ms.is_infinite() {
            "any".to_string()
        } else {
            format!("<= {}", a.threshold_ms)
        };
        writeln!(s, "{name:<12} {:>9.2} {:>9.2}", a.percentage, b.percentage).unwrap();
    }
    writeln!(s, "reports: {}", dir.display()).unwrap();
    Ok(out)
}

/// Per-note inventory: occurrences in transcribed takes and manual instances.
pub fn stats(ctx: &Context) -> Result<Outcome, CliError> {
    let layout = &ctx.layout;
    let wavs = layout.wav_takes()?;
    let manual = layout.label_takes(LabelKind::Manual)?;
    let truth = layout.label_takes(LabelKind::Truth)?;
    let auto = layout.label_takes(LabelKind::Auto)?;
    let mut out = Outcome::default();
    if wavs.is_empty() && manual.is_empty() && truth.is_empty() && auto.is_empty() {
        writeln!(out.stdout, "no files in {}", layout.root().display()).unwrap();
        return Ok(out);
    }

    let mut corpus: BTreeMap<String, usize> = BTreeMap::new();
    let mut untranscribed = Vec::new();
    let mut exercises = BTreeMap::new();
    for string in 1..=STRING_COUNT {
        exercises.insert(string, layout.exercises(string)?);
    }
    for id in &wavs {
        let want = id.exercise_id();
        match exercises[&id.string].iter().find(|e| e.id() == want) {
            Some(ex) => {
                for name in ex.transcript() {
                    *corpus.entry(name).or_insert(0) += 1;
                }
            }
            None => untranscribed.push(id.stem()),
        }
    }
    let manual_tracks = manual
        .iter()
        .map(|id| read_lab(layout.label(LabelKind::Manual, id)))
        .collect::<Result<Vec<_>, _>>()?;
    let manual_counts = note_counts(&manual_tracks);

    let s = &mut out.stdout;
    writeln!(s, "string  exercises  wav  takes  manual  truth  auto").unwrap();
    for string in 1..=STRING_COUNT {
        let on = |v: &[TakeId]| v.iter().filter(|id| id.string == string).count();
        let takes = wavs
            .iter()
            .filter(|id| id.string == string)
            .map(|id| id.take)
            .collect::<BTreeSet<_>>()
            .len();
        writeln!(
            s,
            "{string:<7} {:<10} {:<4} {:<6} {:<7} {:<6} {}",
            exercises[&string].len(),
            on(&wavs),
            takes,
            on(&manual),
            on(&truth),
            on(&auto)
        )
        .unwrap();
    }

    let mut csv = String::from("note,string,corpus,manual\n");
    let mut gaps = Vec::new();
    let mut covered = 0;
    for string in 1..=STRING_COUNT {
        let has_files = wavs.iter().chain(&manual).any(|id| id.string == string);
        for pitch in string_pitches(string)? {
            let name = pitch.to_string();
            let c = corpus.get(&name).copied().unwrap_or(0);
            let m = manual_counts.get(&name).copied().unwrap_or(0);
            writeln!(csv, "{name},{string},{c},{m}").unwrap();
            if c > 0 {
                covered += 1;
            }
            if has_files && m < 5 {
                gaps.push(format!("{name} (string {string}): {m} manual instances"));
            }
        }
    }
    let total_notes = fretalign::music::covered_pitches().len();
    writeln!(s, "notes present: {covered} of {total_notes}").unwrap();
    if !corpus.is_empty() {
        let (lo, hi) = (corpus.values().min().unwrap(), corpus.values().max().unwrap());
        writeln!(s, "occurrences per note: {lo} to {hi}").unwrap();
    }
    if !untranscribed.is_empty() {
        writeln!(s, "takes without a transcript: {}", untranscribed.join(" ")).unwrap();
    }
    if gaps.is_empty() {
        writeln!(s, "coverage gaps: none").unwrap();
    } else {
        writeln!(s, "coverage gaps (< 5 manual instances):").unwrap();
        for g in &gaps {
            writeln!(s, "  {g}").unwrap();
        }
    }
    let report = layout.reports_dir().join("stats_notes.csv");
    write_text_atomic(&report, &csv)?;
    writeln!(s, "report: {}", report.display()).unwrap();
    Ok(out)
}

/// Shifts one label file or every `.lab` in a directory by `delta_ms`.
pub fn shift(ctx: &Context, delta_ms: f64, input: &Path, output: &Path) -> Result<Outcome, CliError> {
    if !delta_ms.is_finite() {
        return Err(CliError::Config(format!("shift {delta_ms} is not finite")));
    }
    let pairs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        files_with_ext(input, "lab")?
            .into_iter()
            .map(|p| {
                let name = p.file_name().expect("listed files have names").to_owned();
                (p, output.join(name))
            })
            .collect()
    } else if input.is_file() {
        let target = if output.is_dir() {
            output.join(input.file_name().unwrap_or_default())
        } else {
            output.to_path_buf()
        };
        vec![(input.to_path_buf(), target)]
    } else {
        return Err(CliError::Input(format!("{}: no such file or directory", input.display())));
    };
    if pairs.is_empty() {
        return Err(CliError::Input(format!("no label files in {}", input.display())));
    }
    if let Some((_, t)) = pairs.iter().find(|(_, t)| ctx.layout.is_protected(t)) {
        return Err(CliError::Config(format!("refusing to write into {}", t.display())));
    }
    let targets: Vec<PathBuf> = pairs.iter().map(|(_, t)| t.clone()).collect();
    ctx.check_collisions(&targets)?;

    let mut out = Outcome::default();
    for (src, dst) in &pairs {
        let track = read_lab(src)?;
        match track.shift(delta_ms) {
            Ok(moved) => write_text_atomic(dst, &format_lab(&moved))?,
            Err(e) => out.failures.push(format!("{}: {e}", src.display())),
        }
    }
    writeln!(out.stdout, "shifted {} of {} files by {delta_ms} ms", pairs.len() - out.failures.len(), pairs.len())
        .unwrap();
    Ok(out)
}

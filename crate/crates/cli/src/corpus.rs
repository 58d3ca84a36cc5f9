//! Directory layout of a corpus and file naming.
//!
//! ```text
//! root/exercises/s<string>.txt
//! root/wav/s<string>_e<exercise>_t<take>.wav
//! root/labels/{manual,truth,auto}/<stem>.lab
//! root/models/s<string>.models
//! root/reports/
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fretalign::music::{parse_exercises, Exercise};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TakeId {
    pub string: u8,
    pub exercise: usize,
    pub take: usize,
}

impl TakeId {
    pub fn stem(&self) -> String {
        format!("s{}_e{}_t{}", self.string, self.exercise, self.take)
    }

    pub fn exercise_id(&self) -> String {
        format!("s{}_e{}", self.string, self.exercise)
    }

    /// Parses `s<string>_e<exercise>_t<take>`.
    pub fn parse(stem: &str) -> Option<Self> {
        let mut parts = stem.split('_');
        let num = |p: Option<&str>, prefix: char| -> Option<usize> {
            let p = p?.strip_prefix(prefix)?;
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            p.parse().ok()
        };
        let string = num(parts.next(), 's')?;
        let exercise = num(parts.next(), 'e')?;
        let take = num(parts.next(), 't')?;
        if parts.next().is_some() {
            return None;
        }
        Some(Self {
            string: u8::try_from(string).ok()?,
            exercise,
            take,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Manual,
    Truth,
    Auto,
}

impl LabelKind {
    pub fn dir_name(self) -> &'static str {
        match self {
            LabelKind::Manual => "manual",
            LabelKind::Truth => "truth",
            LabelKind::Auto => "auto",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusLayout {
    root: PathBuf,
}

impl CorpusLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exercises_dir(&self) -> PathBuf {
        self.root.join("exercises")
    }

    pub fn exercise_file(&self, string: u8) -> PathBuf {
        self.exercises_dir().join(format!("s{string}.txt"))
    }

    pub fn wav_dir(&self) -> PathBuf {
        self.root.join("wav")
    }

    pub fn wav(&self, id: &TakeId) -> PathBuf {
        self.wav_dir().join(format!("{}.wav", id.stem()))
    }

    pub fn labels_dir(&self, kind: LabelKind) -> PathBuf {
        self.root.join("labels").join(kind.dir_name())
    }

    pub fn label(&self, kind: LabelKind, id: &TakeId) -> PathBuf {
        self.labels_dir(kind).join(format!("{}.lab", id.stem()))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model_file(&self, string: u8) -> PathBuf {
        self.models_dir().join(format!("s{string}.models"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    /// True for paths inside `labels/manual` or `labels/truth`.
    pub fn is_protected(&self, path: &Path) -> bool {
        let path = absolute(path);
        [LabelKind::Manual, LabelKind::Truth]
            .iter()
            .any(|&k| path.starts_with(absolute(&self.labels_dir(k))))
    }

    /// Takes with a wav file, sorted.
    pub fn wav_takes(&self) -> Result<Vec<TakeId>, CliError> {
        takes_in(&self.wav_dir(), "wav")
    }

    /// Takes with a label file of the given kind, sorted.
    pub fn label_takes(&self, kind: LabelKind) -> Result<Vec<TakeId>, CliError> {
        takes_in(&self.labels_dir(kind), "lab")
    }

    /// Exercises of one string, or an empty list when the file is missing.
    pub fn exercises(&self, string: u8) -> Result<Vec<Exercise>, CliError> {
        let path = self.exercise_file(string);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        parse_exercises(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn transcript(&self, id: &TakeId) -> Result<Exercise, CliError> {
        let want = id.exercise_id();
        self.exercises(id.string)?
            .into_iter()
            .find(|e| e.id() == want)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "no transcript {want} in {}",
                    self.exercise_file(id.string).display()
                ))
            })
    }
}

fn absolute(path: &Path) -> PathBuf {
    let joined = if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().unwrap_or_default().join(path)
    };
    // resolve `.` and `..` lexically; the target may not exist yet
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            std::path::Component::CurDir => {}
            std::path::Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    // canonicalize the longest existing prefix so symlinked roots compare equal
    let mut rest = Vec::new();
    let mut head = out.clone();
    loop {
        if let Ok(real) = fs::canonicalize(&head) {
            return rest.iter().rev().fold(real, |acc, c| acc.join(c));
        }
        match (head.file_name().map(|n| n.to_os_string()), head.parent()) {
            (Some(name), Some(parent)) => {
                rest.push(name);
                head = parent.to_path_buf();
            }
            _ => return out,
        }
    }
}

fn takes_in(dir: &Path, ext: &str) -> Result<Vec<TakeId>, CliError> {
    Ok(files_with_ext(dir, ext)?
        .iter()
        .filter_map(|p| TakeId::parse(p.file_stem()?.to_str()?))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect())
}

/// Files in `dir` with extension `ext`, sorted by name. A missing directory is empty.
pub fn files_with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|x| x == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<(), CliError>) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".tmp-")
        .tempfile_in(dir)
        .map_err(|e| io_err(dir, e))?;
    write(tmp.path())?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |tmp| {
        let mut f = fs::File::create(tmp).map_err(|e| io_err(tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| io_err(tmp, e))?;
        f.sync_all().map_err(|e| io_err(tmp, e))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_round_trip() {
        let id = TakeId { string: 3, exercise: 2, take: 11 };
        assert_eq!(id.stem(), "s3_e2_t11");
        assert_eq!(TakeId::parse("s3_e2_t11"), Some(id));
        for bad in ["s3_e2", "s3_e2_t", "x3_e2_t1", "s3_e2_t1_x", "s-1_e2_t1", "s3_e+2_t1"] {
            assert_eq!(TakeId::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn protection_covers_manual_and_truth_only() {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        assert!(layout.is_protected(&layout.labels_dir(LabelKind::Manual).join("a.lab")));
        assert!(layout.is_protected(&layout.labels_dir(LabelKind::Truth)));
        assert!(layout.is_protected(&layout.labels_dir(LabelKind::Auto).join("../truth/x.lab")));
        assert!(!layout.is_protected(&layout.labels_dir(LabelKind::Auto).join("a.lab")));
    }
}

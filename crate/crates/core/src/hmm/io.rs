//! Plain-text model files.
//!
//! ```text
//! fretalign-models 1 dim=39 count=<n> config=<fingerprint>
//! <name> <frame_count> <39 means> <39 variances>
//! ```
//!
//! Numbers use Rust's shortest round-trip decimal form, so a save/load cycle
//! reproduces every parameter exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{HmmError, ModelSet, NoteModel};
use crate::features::{Frame, FEATURE_DIM};

const MAGIC: &str = "fretalign-models";
const VERSION: u32 = 1;

pub fn format_models(models: &ModelSet) -> String {
    let mut out = format!(
        "{MAGIC} {VERSION} dim={FEATURE_DIM} count={} config={}\n",
        models.len(),
        models.fingerprint()
    );
    for m in models.models() {
        write!(out, "{} {}", m.label(), m.frame_count()).expect("write to string");
        for v in m.mean().iter().chain(m.variance()) {
            write!(out, " {v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn parse_models(text: &str) -> Result<ModelSet, HmmError> {
    let corrupt = |reason: String| HmmError::Corrupt { path: None, reason };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| corrupt("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(corrupt(format!("bad header {header:?}")));
    }
    if fields[1] != VERSION.to_string() {
        return Err(corrupt(format!("unsupported version {}", fields[1])));
    }
    let kv = |field: &str, key: &str| -> Result<String, HmmError> {
        field
            .strip_prefix(key)
            .and_then(|s| s.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| corrupt(format!("expected {key}=..., got {field:?}")))
    };
    let dim: usize = kv(fields[2], "dim")?
        .parse()
        .map_err(|_| corrupt("bad dim".into()))?;
    if dim != FEATURE_DIM {
        return Err(HmmError::DimensionMismatch {
            found: dim,
            expected: FEATURE_DIM,
        });
    }
    let count: usize = kv(fields[3], "count")?
        .parse()
        .map_err(|_| corrupt("bad count".into()))?;
    let fingerprint = kv(fields[4], "config")?;

    let mut models = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 + 2 * FEATURE_DIM {
            return Err(corrupt(format!(
                "record {} has {} fields, expected {}",
                i + 1,
                f.len(),
                2 + 2 * FEATURE_DIM
            )));
        }
        let frames: usize = f[1]
            .parse()
            .map_err(|_| corrupt(format!("record {}: bad frame count", i + 1)))?;
        let nums = f[2..]
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| corrupt(format!("record {}: bad number", i + 1)))?;
        let mean: Frame = nums[..FEATURE_DIM].try_into().expect("length checked");
        let var: Frame = nums[FEATURE_DIM..].try_into().expect("length checked");
        models.push(NoteModel::new(f[0], mean, var, frames)?);
    }
    if models.len() != count {
        return Err(corrupt(format!("expected {count} records, found {}", models.len())));
    }
    ModelSet::new(models, fingerprint)
}

pub fn save_models(models: &ModelSet, path: impl AsRef<Path>) -> Result<(), HmmError> {
    let path = path.as_ref();
    fs::write(path, format_models(models)).map_err(|e| HmmError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn load_models(path: impl AsRef<Path>) -> Result<ModelSet, HmmError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HmmError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse_models(&text).map_err(|e| match e {
        HmmError::Corrupt { reason, .. } => HmmError::Corrupt {
            path: Some(path.to_path_buf()),
            reason,
        },
        other => other,
    })
}

//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::fs;
use std::path::Path;

use fretalign::audio::{TempoPolicy, DEFAULT_SAMPLE_RATE};
use fretalign::features::FeatureConfig;
use fretalign::hmm::{AlignConfig, TrainOptions};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub sample_rate: u32,
    /// Exercises per string.
    pub count: usize,
    /// Notes per exercise; `None` uses the string's default length.
    pub length: Option<usize>,
    pub takes: usize,
    /// Takes of the all-notes exercise that get manual labels.
    pub bootstrap_takes: usize,
    pub tempo: TempoPolicy,
    pub features: FeatureConfig,
    pub align: AlignConfig,
    pub train: TrainOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            count: 3,
            length: None,
            takes: 12,
            bootstrap_takes: 5,
            tempo: TempoPolicy::default(),
            features: FeatureConfig::default(),
            align: AlignConfig::default(),
            train: TrainOptions::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("bad value {value:?} for {key}")))
}

impl RunConfig {
    pub const KEYS: [&'static str; 22] = [
        "seed",
        "sample_rate",
        "count",
        "length",
        "takes",
        "bootstrap_takes",
        "inter_onset",
        "jitter",
        "final_duration",
        "release",
        "level_jitter",
        "frame_length",
        "hop",
        "pre_emphasis",
        "mel_filters",
        "delta_window",
        "log_floor",
        "self_loop_prob",
        "min_duration_frames",
        "gap_model",
        "floor_ratio",
        "min_instances",
    ];

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("line {}: {}", i + 1, strip(e))))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {pair:?} is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "sample_rate" => self.sample_rate = parse(key, value)?,
            "count" => self.count = parse(key, value)?,
            "length" => {
                self.length = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "takes" => self.takes = parse(key, value)?,
            "bootstrap_takes" => self.bootstrap_takes = parse(key, value)?,
            "inter_onset" => self.tempo.inter_onset = parse(key, value)?,
            "jitter" => self.tempo.jitter = parse(key, value)?,
            "final_duration" => self.tempo.final_duration = parse(key, value)?,
            "release" => self.tempo.release = parse(key, value)?,
            "level_jitter" => self.tempo.level_jitter = parse(key, value)?,
            "frame_length" => self.features.frame_length = parse(key, value)?,
            "hop" => self.features.hop = parse(key, value)?,
            "pre_emphasis" => self.features.pre_emphasis = parse(key, value)?,
            "mel_filters" => self.features.mel_filters = parse(key, value)?,
            "delta_window" => self.features.delta_window = parse(key, value)?,
            "log_floor" => self.features.log_floor = parse(key, value)?,
            "self_loop_prob" => self.align.self_loop_prob = parse(key, value)?,
            "min_duration_frames" => self.align.min_duration_frames = parse(key, value)?,
            "gap_model" => self.align.gap_model = parse(key, value)?,
            "floor_ratio" => self.train.floor_ratio = parse(key, value)?,
            "min_instances" => self.train.min_instances = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.features.validate()?;
        self.align.validate()?;
        if self.sample_rate == 0 {
            return Err(CliError::Config("sample_rate must be positive".into()));
        }
        if self.count == 0 || self.takes == 0 {
            return Err(CliError::Config("count and takes must be positive".into()));
        }
        if self.bootstrap_takes > self.takes {
            return Err(CliError::Config(format!(
                "bootstrap_takes {} exceeds takes {}",
                self.bootstrap_takes, self.takes
            )));
        }
        if !(self.train.floor_ratio >= 0.0 && self.train.floor_ratio.is_finite()) {
            return Err(CliError::Config("floor_ratio must be non-negative".into()));
        }
        Ok(())
    }

    /// Every setting as `key=value`, one per line, in a fixed order.
    pub fn echo(&self) -> String {
        let length = self.length.map_or("auto".to_string(), |n| n.to_string());
        let t = &self.tempo;
        let f = &self.features;
        let a = &self.align;
        let pairs: [(&str, String); 22] = [
            ("seed", self.seed.to_string()),
            ("sample_rate", self.sample_rate.to_string()),
            ("count", self.count.to_string()),
            ("length", length),
            ("takes", self.takes.to_string()),
            ("bootstrap_takes", self.bootstrap_takes.to_string()),
            ("inter_onset", t.inter_onset.to_string()),
            ("jitter", t.jitter.to_string()),
            ("final_duration", t.final_duration.to_string()),
            ("release", t.release.to_string()),
            ("level_jitter", t.level_jitter.to_string()),
            ("frame_length", f.frame_length.to_string()),
            ("hop", f.hop.to_string()),
            ("pre_emphasis", f.pre_emphasis.to_string()),
            ("mel_filters", f.mel_filters.to_string()),
            ("delta_window", f.delta_window.to_string()),
            ("log_floor", format!("{:e}", f.log_floor)),
            ("self_loop_prob", a.self_loop_prob.to_string()),
            ("min_duration_frames", a.min_duration_frames.to_string()),
            ("gap_model", a.gap_model.to_string()),
            ("floor_ratio", self.train.floor_ratio.to_string()),
            ("min_instances", self.train.min_instances.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// The echo as CSV comment lines.
    pub fn csv_preamble(&self) -> String {
        self.echo().lines().map(|l| format!("# {l}\n")).collect()
    }
}

fn strip(e: CliError) -> String {
    match e {
        CliError::Config(m) => m,
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("seed = 9\nlength=7\n# note\n\nhop=0.005\ngap_model=true").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.echo()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.seed, 9);
        assert_eq!(back.length, Some(7));
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        let err = RunConfig::default().apply_text("seeed=1").unwrap_err();
        assert!(matches!(err, CliError::Config(ref m) if m.contains("line 1")), "{err}");
    }

    #[test]
    fn bad_value_names_the_key() {
        let err = RunConfig::default().apply_override("hop=fast").unwrap_err();
        assert!(err.to_string().contains("hop"));
    }

    #[test]
    fn every_key_is_echoed() {
        let echo = RunConfig::default().echo();
        for key in RunConfig::KEYS {
            assert!(echo.contains(&format!("{key}=")), "{key}");
        }
    }
}

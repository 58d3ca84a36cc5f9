//! Note identities, standard-tuning fretboard mapping and exercise composition.
//!
//! The covered region is the first five frets (0..=4) of every string except
//! string 3, which stops at fret 3 because its fret 4 (B3) is the open second
//! string. That leaves 29 distinct pitches, E2 through G#4.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Open-string pitches for standard tuning, indexed by `string - 1`
/// (string 1 is the high E).
const OPEN_STRINGS: [u8; 6] = [64, 59, 55, 50, 45, 40];

const SHARP_NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

pub const STRING_COUNT: u8 = 6;
pub const MAX_FRET: u8 = 4;
pub const MIN_EXERCISE_LEN: usize = 5;
pub const MAX_EXERCISE_LEN: usize = 15;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MusicError {
    #[error("invalid fret position: string {string}, fret {fret}")]
    InvalidPosition { string: u8, fret: u8 },
    #[error("invalid string number {0} (expected 1..=6)")]
    InvalidString(u8),
    #[error("cannot parse note name {0:?}")]
    BadNoteName(String),
    #[error("infeasible exercise: {0}")]
    InfeasibleExercise(String),
    #[error("invalid exercise {id}: {reason}")]
    InvalidExercise { id: String, reason: String },
    #[error("exercise file line {line}: {reason}")]
    ExerciseFile { line: usize, reason: String },
}

/// A pitch as a MIDI note number (A4 = 69).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pitch(u8);

impl Pitch {
    pub const fn from_midi(midi: u8) -> Self {
        Pitch(midi)
    }

    pub const fn midi(self) -> u8 {
        self.0
    }

    /// Equal-tempered frequency in Hz with A4 = 440 Hz.
    pub fn frequency(self) -> f64 {
        440.0 * 2f64.powf((f64::from(self.0) - 69.0) / 12.0)
    }

    /// Scientific pitch name with sharps, e.g. `F#2`.
    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Pitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let octave = i32::from(self.0) / 12 - 1;
        write!(f, "{}{}", SHARP_NAMES[usize::from(self.0 % 12)], octave)
    }
}

impl FromStr for Pitch {
    type Err = MusicError;

    /// Accepts sharps (`F#2`) and flats (`Gb2`); octaves may be negative (`C-1`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MusicError::BadNoteName(s.to_string());
        let mut chars = s.chars();
        let letter = chars.next().ok_or_else(bad)?;
        let base: i32 = match letter.to_ascii_uppercase() {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return Err(bad()),
        };
        let rest = chars.as_str();
        let (accidental, octave_str) = match rest.as_bytes().first() {
            Some(b'#') => (1, &rest[1..]),
            Some(b'b') => (-1, &rest[1..]),
            _ => (0, rest),
        };
        let octave: i32 = octave_str.parse().map_err(|_| bad())?;
        let midi = (octave + 1) * 12 + base + accidental;
        u8::try_from(midi)
            .ok()
            .filter(|m| *m <= 127)
            .map(Pitch)
            .ok_or_else(bad)
    }
}

/// A string/fret location. String 1 is the highest-pitched string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FretPosition {
    string: u8,
    fret: u8,
}

impl FretPosition {
    pub fn new(string: u8, fret: u8) -> Result<Self, MusicError> {
        if !(1..=STRING_COUNT).contains(&string) || fret > MAX_FRET {
            return Err(MusicError::InvalidPosition { string, fret });
        }
        Ok(Self { string, fret })
    }

    pub fn string(self) -> u8 {
        self.string
    }

    pub fn fret(self) -> u8 {
        self.fret
    }

    pub fn pitch(self) -> Pitch {
        Pitch(OPEN_STRINGS[usize::from(self.string - 1)] + self.fret)
    }

    /// Whether this position belongs to the covered region of the fretboard.
    pub fn is_covered(self) -> bool {
        covered_frets(self.string)
            .map(|frets| frets.contains(&self.fret))
            .unwrap_or(false)
    }
}

pub fn pitch_from_fret(string: u8, fret: u8) -> Result<Pitch, MusicError> {
    FretPosition::new(string, fret).map(FretPosition::pitch)
}

pub fn check_string(string: u8) -> Result<u8, MusicError> {
    if (1..=STRING_COUNT).contains(&string) {
        Ok(string)
    } else {
        Err(MusicError::InvalidString(string))
    }
}

/// Covered frets on a string: 0..=4, except 0..=3 on string 3.
pub fn covered_frets(string: u8) -> Result<RangeInclusive<u8>, MusicError> {
    check_string(string)?;
    Ok(if string == 3 { 0..=3 } else { 0..=MAX_FRET })
}

/// Covered pitches of one string, low to high.
pub fn string_pitches(string: u8) -> Result<Vec<Pitch>, MusicError> {
    Ok(covered_frets(string)?
        .map(|fret| FretPosition { string, fret }.pitch())
        .collect())
}

/// Every covered position on the fretboard, string 1 first.
pub fn covered_positions() -> Vec<FretPosition> {
    (1..=STRING_COUNT)
        .flat_map(|string| {
            covered_frets(string)
                .expect("string in range")
                .map(move |fret| FretPosition { string, fret })
        })
        .collect()
}

/// The 29 covered pitches.
pub fn covered_pitches() -> BTreeSet<Pitch> {
    covered_positions().into_iter().map(FretPosition::pitch).collect()
}

/// Which string a covered pitch is played on, if any.
pub fn string_for_pitch(pitch: Pitch) -> Option<u8> {
    covered_positions()
        .into_iter()
        .find(|p| p.pitch() == pitch)
        .map(FretPosition::string)
}

/// Default exercise length for a string: every covered note once plus two
/// extra draws. With three exercises and twelve takes per string this puts
/// every note at 48 or 60 occurrences.
pub fn default_exercise_length(string: u8) -> Result<usize, MusicError> {
    Ok(string_pitches(string)?.len() + 2)
}

/// An ordered note sequence to be played on one string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exercise {
    id: String,
    string: u8,
    sequence: Vec<Pitch>,
}

impl Exercise {
    pub fn new(id: impl Into<String>, string: u8, sequence: Vec<Pitch>) -> Result<Self, MusicError> {
        let id = id.into();
        let invalid = |reason: String| MusicError::InvalidExercise {
            id: id.clone(),
            reason,
        };
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(invalid("id must be non-empty without whitespace".into()));
        }
        let playable = string_pitches(string)?;
        if !(MIN_EXERCISE_LEN..=MAX_EXERCISE_LEN).contains(&sequence.len()) {
            return Err(invalid(format!(
                "length {} outside {MIN_EXERCISE_LEN}..={MAX_EXERCISE_LEN}",
                sequence.len()
            )));
        }
        if let Some(p) = sequence.iter().find(|p| !playable.contains(p)) {
            return Err(invalid(format!("{p} is not covered on string {string}")));
        }
        Ok(Self {
            id,
            string,
            sequence,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn string(&self) -> u8 {
        self.string
    }

    pub fn sequence(&self) -> &[Pitch] {
        &self.sequence
    }

    /// Note names in order; this is the alignment transcript.
    pub fn transcript(&self) -> Vec<String> {
        self.sequence.iter().map(|p| p.to_string()).collect()
    }
}

/// Composes `count` exercises for `string`, deterministic in `seed`.
///
/// Each exercise opens with a shuffled pass over all covered notes of the
/// string, then fills the remaining slots with seeded draws. The draws favour
/// the notes used least often so far across the batch and never repeat the
/// previous note.
pub fn compose_exercises(
    string: u8,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Exercise>, MusicError> {
    let notes = string_pitches(string)?;
    if count == 0 {
        return Err(MusicError::InfeasibleExercise("count must be positive".into()));
    }
    if length < notes.len() {
        return Err(MusicError::InfeasibleExercise(format!(
            "length {length} cannot cover the {} notes of string {string}",
            notes.len()
        )));
    }
    if length > MAX_EXERCISE_LEN {
        return Err(MusicError::InfeasibleExercise(format!(
            "length {length} exceeds {MAX_EXERCISE_LEN}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(string) << 56));
    let mut extra_use = vec![0usize; notes.len()];
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let mut order: Vec<usize> = (0..notes.len()).collect();
        order.shuffle(&mut rng);
        while order.len() < length {
            let last = *order.last().expect("non-empty");
            let least = (0..notes.len())
                .filter(|&i| i != last)
                .map(|i| extra_use[i])
                .min()
                .expect("at least two notes per string");
            let candidates: Vec<usize> = (0..notes.len())
                .filter(|&i| i != last && extra_use[i] == least)
                .collect();
            let pick = candidates[rng.gen_range(0..candidates.len())];
            extra_use[pick] += 1;
            order.push(pick);
        }
        let sequence = order.into_iter().map(|i| notes[i]).collect();
        out.push(Exercise::new(format!("s{string}_e{}", k + 1), string, sequence)?);
    }
    Ok(out)
}

/// Renders exercises one per line: `id<TAB>string<TAB>note note ...`.
pub fn format_exercises(exercises: &[Exercise]) -> String {
    let mut out = String::new();
    for ex in exercises {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            ex.id,
            ex.string,
            ex.transcript().join(" ")
        ));
    }
    out
}

pub fn parse_exercises(text: &str) -> Result<Vec<Exercise>, MusicError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let err = |reason: String| MusicError::ExerciseFile { line, reason };
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let string: u8 = fields[1]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad string number {:?}", fields[1])))?;
        let sequence = fields[2]
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Pitch>, _>>()
            .map_err(|e| err(e.to_string()))?;
        out.push(Exercise::new(fields[0].trim(), string, sequence).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

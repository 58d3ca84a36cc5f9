//! Bootstrapping time-aligned note transcriptions for monophonic recordings.
//!
//! The pipeline composes fretboard exercises ([`music`]), extracts MFCC
//! streams ([`features`]), trains one Gaussian per note from a handful of
//! labelled takes and force-aligns the remaining takes to their known note
//! sequences ([`hmm`]). Label files and onset statistics live in [`annot`];
//! [`audio`] reads and writes WAV files and synthesizes plucked-string test
//! recordings with exact ground truth.

pub mod annot;
pub mod audio;
pub mod features;
pub mod hmm;
pub mod music;

pub use annot::{Label, LabelTrack, OnsetErrorReport};
pub use audio::AudioClip;
pub use features::{FeatureConfig, FeatureMatrix, Frame, FEATURE_DIM};
pub use hmm::{AlignConfig, ModelSet, NoteModel, Segmentation};
pub use music::{Exercise, FretPosition, Pitch};

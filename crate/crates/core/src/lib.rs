//! Greenroom is a toolkit for co-writing musical theatre with statistical
//! generators kept under the writer's control.
//!
//! The crate is organised by capability:
//!
//! * [`ideation`] instantiates "what if" templates over a triple knowledge base
//!   and ranks the resulting premises.
//! * [`plot`] samples plot lines from a Propp-style element vocabulary.
//! * [`sheet`] is the lead-sheet data model: exact rational durations,
//!   transposition, the five control measures, harmonic functions and MIDI.
//! * [`ppm`] is a variable-order Markov engine (prediction by partial match,
//!   PPM-C escapes) shared by melody, chord and character alphabets;
//!   [`scansion`] and [`compose`] build lyric-aware lead-sheet generation on it.
//! * [`flow`] regenerates a selected zone of a sheet as an exact conditional
//!   sample given everything the writer chose to keep.
//! * [`lyrics`] is a character-level lyric model with a creativity control
//!   plus song-type word clouds.
//! * [`analytics`] covers show classification, factor propensities and
//!   time-normalised curve averaging.

pub mod analytics;
pub mod compose;
pub mod flow;
pub mod ideation;
pub mod lyrics;
pub mod plot;
pub mod ppm;
pub mod sampling;
pub mod scansion;
pub mod sheet;
mod words;

pub use sheet::{Beats, LeadSheet};

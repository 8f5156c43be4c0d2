//! Interactive regeneration of lead sheets.
//!
//! A [`StyleModel`] learns melody, chord and rhythm statistics from a corpus
//! (optionally enlarged with transposed copies). A writer selects a
//! [`Zone`] of their sheet; [`regenerate_zone`] redraws the zone's layers
//! from the model conditioned on everything outside it, and
//! [`regenerate_with_controls`] draws several candidates and keeps the one
//! closest to the slider targets. [`Session`] adds undo/redo history and
//! incremental learning from the writer's own material.

mod chain;
mod regen;
mod session;
mod style;
mod zone;

use thiserror::Error;

use crate::ppm::PpmError;
use crate::sheet::SheetError;

pub use chain::{ChainSampler, Slot, MAX_EXACT_ORDER, REJECTION_BUDGET};
pub use regen::{
    best_candidate, control_objective, measure_zone, regenerate_candidates, regenerate_with_controls, regenerate_zone,
    Candidate, MAX_SEGMENT_EVENTS, MIN_STD,
};
pub use session::{History, Outcome, Session, DEFAULT_HISTORY};
pub use style::{
    build_style_model, chord_grid, chord_tokens, extract_material, extract_region, melody_tokens, ControlStats,
    Material, MelodyToken, ParamStats, SkippedCopy, StyleConfig, StyleModel,
};
pub use zone::{Layers, Zone};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("invalid zone {0}")]
    Zone(String),
    #[error("no completion under model: the pinned material cannot be connected; try more smoothing or a wider zone")]
    NoCompletion,
    #[error("rejection sampling gave up after {0} draws")]
    RejectionBudget(usize),
    #[error("candidates must be at least 1")]
    Candidates,
    #[error("corpus: {0}")]
    Corpus(String),
    #[error(transparent)]
    Ppm(#[from] PpmError),
    #[error(transparent)]
    Sheet(#[from] SheetError),
}

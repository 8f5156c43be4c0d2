//! Editing sessions: the current sheet, its history and the model it learns into.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sheet::{ControlTargets, LeadSheet};

use super::{extract_region, regenerate_with_controls, regenerate_zone, FlowError, StyleModel, Zone};

/// Number of earlier sheets kept for undo.
pub const DEFAULT_HISTORY: usize = 256;

/// Undo and redo stacks. The undo stack drops its oldest state when full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub undo: VecDeque<LeadSheet>,
    pub redo: Vec<LeadSheet>,
    pub capacity: usize,
}

impl Default for History {
    fn default() -> Self {
        History { undo: VecDeque::new(), redo: Vec::new(), capacity: DEFAULT_HISTORY }
    }
}

impl History {
    fn push(&mut self, previous: LeadSheet) {
        if self.capacity == 0 {
            return;
        }
        if self.undo.len() == self.capacity {
            self.undo.pop_front();
        }
        self.undo.push_back(previous);
        self.redo.clear();
    }
}

/// Result of undo or redo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Applied,
    NothingToUndo,
    NothingToRedo,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub sheet: LeadSheet,
    pub model: Arc<StyleModel>,
    pub history: History,
    pub controls: ControlTargets,
}

impl Session {
    pub fn new(sheet: LeadSheet, model: Arc<StyleModel>) -> Result<Self, FlowError> {
        sheet.validate()?;
        Ok(Session { sheet, model, history: History::default(), controls: ControlTargets::default() })
    }

    fn replace(&mut self, sheet: LeadSheet) {
        let previous = std::mem::replace(&mut self.sheet, sheet);
        self.history.push(previous);
    }

    /// Replaces the sheet with a writer's edit.
    pub fn edit(&mut self, sheet: LeadSheet) -> Result<(), FlowError> {
        sheet.validate()?;
        self.replace(sheet);
        Ok(())
    }

    pub fn regenerate(&mut self, zone: &Zone, seed: u64) -> Result<(), FlowError> {
        let sheet = regenerate_zone(&self.model, &self.sheet, zone, seed)?;
        self.replace(sheet);
        Ok(())
    }

    /// Generate-and-test regeneration against the session's control targets.
    pub fn regenerate_with_controls(&mut self, zone: &Zone, candidates: usize, seed: u64) -> Result<(), FlowError> {
        let sheet = regenerate_with_controls(&self.model, &self.sheet, zone, &self.controls, candidates, seed)?;
        self.replace(sheet);
        Ok(())
    }

    pub fn set_controls(&mut self, controls: ControlTargets) {
        self.controls = controls;
    }

    /// Adds the material of `regions` of the current sheet to the model and
    /// returns the new corpus version. Undo does not roll this back.
    pub fn learn(&mut self, regions: &[Zone]) -> Result<u64, FlowError> {
        for zone in regions {
            zone.validate(&self.sheet)?;
        }
        let material: Vec<_> = regions.iter().map(|z| extract_region(&self.sheet, z)).collect();
        self.model = Arc::new(self.model.learn(&material)?);
        Ok(self.model.corpus_version)
    }

    pub fn undo(&mut self) -> Outcome {
        match self.history.undo.pop_back() {
            Some(previous) => {
                let current = std::mem::replace(&mut self.sheet, previous);
                self.history.redo.push(current);
                Outcome::Applied
            }
            None => Outcome::NothingToUndo,
        }
    }

    pub fn redo(&mut self) -> Outcome {
        match self.history.redo.pop() {
            Some(next) => {
                let current = std::mem::replace(&mut self.sheet, next);
                self.history.undo.push_back(current);
                Outcome::Applied
            }
            None => Outcome::NothingToRedo,
        }
    }
}

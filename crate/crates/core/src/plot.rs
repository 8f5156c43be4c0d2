//! Plot lines as sequences of plot elements.
//!
//! Elements come from a vocabulary of Propp's 31 character functions plus a
//! few narrative and musical-theatre additions. A first-order model counts
//! which element opens a plot and which follows which in an annotated
//! corpus; additive smoothing keeps unseen moves possible. Generation and
//! scoring share one arithmetic path, so a generated line's reported
//! log-probability equals its score exactly.
//!
//! ```
//! use greenroom::plot::{bundled_vocabulary, generate_plot, score_plot, train_plot_model, PlotScore};
//!
//! let corpus = vec![vec!["aspiration".to_string(), "departure".to_string(), "struggle".to_string()]];
//! let model = train_plot_model(&corpus, bundled_vocabulary(), 0.1).unwrap();
//! let line = generate_plot(&model, 10, Some("aspiration"), 7).unwrap();
//! assert_eq!(line.elements.len(), 10);
//! assert_eq!(score_plot(&model, &line.elements).unwrap(), PlotScore::Supported(line.log_probability));
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{self, Rng};

/// Additive smoothing used when none is given.
pub const DEFAULT_SMOOTHING: f64 = 0.1;

const BUNDLED_VOCABULARY: &str = include_str!("../data/plot/vocabulary.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("unknown plot element {id:?} in sequence {sequence}")]
    UnknownElement { id: String, sequence: usize },
    #[error("sequence {0} is empty")]
    EmptySequence(usize),
    #[error("duplicate element id {0:?} in vocabulary")]
    DuplicateId(String),
    #[error("smoothing must be finite and non-negative, got {0}")]
    Smoothing(f64),
    #[error("length must be at least 1")]
    Length,
    #[error("plot cannot start with {0:?}: it has zero start probability")]
    ImpossibleStart(String),
    #[error("no element can follow {0:?} under this model")]
    DeadEnd(String),
    #[error("the model gives every start zero probability")]
    NoStart,
    #[error("{0}")]
    Document(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementCategory {
    ProppOriginal,
    NarrativeMined,
    MusicalSpecific,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotElement {
    pub id: String,
    pub name: String,
    pub description: String,
    pub category: ElementCategory,
}

pub fn parse_vocabulary(json: &str) -> Result<Vec<PlotElement>, PlotError> {
    serde_json::from_str(json).map_err(|e| PlotError::Document(e.to_string()))
}

/// The default vocabulary: Propp's functions and additions.
pub fn bundled_vocabulary() -> Vec<PlotElement> {
    parse_vocabulary(BUNDLED_VOCABULARY).expect("bundled vocabulary is valid")
}

/// Reads an annotated corpus: a JSON array of element-id arrays.
pub fn parse_plot_corpus(json: &str) -> Result<Vec<Vec<String>>, PlotError> {
    serde_json::from_str(json).map_err(|e| PlotError::Document(e.to_string()))
}

pub fn read_plot_corpus(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>, PlotError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PlotError::Document(format!("{}: {}", path.display(), e)))?;
    parse_plot_corpus(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotModel {
    /// Sorted by id.
    pub vocabulary: Vec<PlotElement>,
    pub start_counts: BTreeMap<String, u64>,
    pub transition_counts: BTreeMap<String, BTreeMap<String, u64>>,
    pub smoothing: f64,
}

/// Tallies opening elements and adjacent pairs of `plots`.
pub fn train_plot_model(
    plots: &[Vec<String>],
    mut vocabulary: Vec<PlotElement>,
    smoothing: f64,
) -> Result<PlotModel, PlotError> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(PlotError::Smoothing(smoothing));
    }
    vocabulary.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = vocabulary.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(PlotError::DuplicateId(w[0].id.clone()));
    }
    let known = |id: &str| vocabulary.binary_search_by(|e| e.id.as_str().cmp(id)).is_ok();
    let mut start_counts = BTreeMap::new();
    let mut transition_counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (i, plot) in plots.iter().enumerate() {
        let first = plot.first().ok_or(PlotError::EmptySequence(i))?;
        if let Some(bad) = plot.iter().find(|id| !known(id)) {
            return Err(PlotError::UnknownElement { id: bad.clone(), sequence: i });
        }
        *start_counts.entry(first.clone()).or_insert(0) += 1;
        for pair in plot.windows(2) {
            *transition_counts.entry(pair[0].clone()).or_default().entry(pair[1].clone()).or_insert(0) += 1;
        }
    }
    Ok(PlotModel { vocabulary, start_counts, transition_counts, smoothing })
}

/// Log-probability of a line, or `Unsupported` when some step has
/// probability zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlotScore {
    Supported(f64),
    Unsupported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotLine {
    pub elements: Vec<String>,
    pub log_probability: f64,
}

impl PlotModel {
    pub fn element(&self, id: &str) -> Option<&PlotElement> {
        self.vocabulary.binary_search_by(|e| e.id.as_str().cmp(id)).ok().map(|i| &self.vocabulary[i])
    }

    fn smoothed(&self, count: u64, total: u64) -> f64 {
        let denom = total as f64 + self.smoothing * self.vocabulary.len() as f64;
        if denom > 0.0 {
            (count as f64 + self.smoothing) / denom
        } else {
            0.0
        }
    }

    pub fn start_probability(&self, id: &str) -> f64 {
        let total = self.start_counts.values().sum();
        self.smoothed(self.start_counts.get(id).copied().unwrap_or(0), total)
    }

    pub fn transition_probability(&self, from: &str, to: &str) -> f64 {
        let row = self.transition_counts.get(from);
        let total = row.map_or(0, |r| r.values().sum());
        self.smoothed(row.and_then(|r| r.get(to)).copied().unwrap_or(0), total)
    }

    fn check_ids(&self, line: &[String]) -> Result<(), PlotError> {
        match line.iter().find(|id| self.element(id).is_none()) {
            Some(bad) => Err(PlotError::UnknownElement { id: bad.clone(), sequence: 0 }),
            None => Ok(()),
        }
    }

    fn pick(&self, weights: &[f64], rng: &mut Rng) -> Option<String> {
        sampling::sample_index(weights, rng).map(|i| self.vocabulary[i].id.clone())
    }
}

// both generation and scoring accumulate through this function, in order
fn accumulate(total: f64, p: f64) -> f64 {
    total + p.ln()
}

/// Samples a plot line of `length` elements, optionally forcing the first.
pub fn generate_plot(model: &PlotModel, length: usize, start: Option<&str>, seed: u64) -> Result<PlotLine, PlotError> {
    if length == 0 {
        return Err(PlotError::Length);
    }
    let mut rng = sampling::rng_from_seed(seed);
    let first = match start {
        Some(id) => {
            if model.element(id).is_none() {
                return Err(PlotError::UnknownElement { id: id.into(), sequence: 0 });
            }
            if model.start_probability(id) <= 0.0 {
                return Err(PlotError::ImpossibleStart(id.into()));
            }
            id.to_string()
        }
        None => {
            let weights: Vec<f64> = model.vocabulary.iter().map(|e| model.start_probability(&e.id)).collect();
            model.pick(&weights, &mut rng).ok_or(PlotError::NoStart)?
        }
    };
    let mut log_probability = accumulate(0.0, model.start_probability(&first));
    let mut elements = vec![first];
    while elements.len() < length {
        let prev = elements.last().unwrap();
        let weights: Vec<f64> = model.vocabulary.iter().map(|e| model.transition_probability(prev, &e.id)).collect();
        let next = model.pick(&weights, &mut rng).ok_or_else(|| PlotError::DeadEnd(prev.clone()))?;
        log_probability = accumulate(log_probability, model.transition_probability(prev, &next));
        elements.push(next);
    }
    Ok(PlotLine { elements, log_probability })
}

/// Log-probability of `line` under the smoothed model.
pub fn score_plot(model: &PlotModel, line: &[String]) -> Result<PlotScore, PlotError> {
    model.check_ids(line)?;
    let Some(first) = line.first() else { return Err(PlotError::Length) };
    let p = model.start_probability(first);
    if p <= 0.0 {
        return Ok(PlotScore::Unsupported);
    }
    let mut total = accumulate(0.0, p);
    for pair in line.windows(2) {
        let p = model.transition_probability(&pair[0], &pair[1]);
        if p <= 0.0 {
            return Ok(PlotScore::Unsupported);
        }
        total = accumulate(total, p);
    }
    Ok(PlotScore::Supported(total))
}

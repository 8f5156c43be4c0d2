//! Style models: melody, harmony and rhythm statistics of a lead-sheet corpus.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::compose::DurationModel;
use crate::ppm::PpmModel;
use crate::sheet::{measure_controls, Beats, ChordSymbol, ControlParam, LeadSheet};

use super::{FlowError, Zone};

/// One melody event as seen by the melody model. Pitches are absolute, so
/// transposed corpus copies add genuinely new material.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MelodyToken {
    Note(u8),
    Rest,
}

/// Build settings kept with the model so it can be rebuilt.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct StyleConfig {
    pub max_order: usize,
    pub transpositions: BTreeSet<i32>,
}

/// Order 2 with copies in all twelve keys, from a fourth down to a tritone up.
impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig { max_order: 2, transpositions: (-5..=6).collect() }
    }
}

impl StyleConfig {
    pub fn build(&self, corpus: &[LeadSheet]) -> Result<(StyleModel, Vec<SkippedCopy>), FlowError> {
        build_style_model(corpus, &self.transpositions, self.max_order)
    }
}

/// Spread of one control measure over the corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ParamStats {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return ParamStats::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ParamStats { mean, std: var.sqrt(), min, max }
    }

    /// Maps a slider position in `[0, 1]` linearly onto `[min, max]`.
    pub fn slider_to_target(&self, position: f64) -> f64 {
        self.min + position.clamp(0.0, 1.0) * (self.max - self.min)
    }

    /// Inverse of [`ParamStats::slider_to_target`]; 0 when the range is empty.
    pub fn target_to_slider(&self, target: f64) -> f64 {
        if self.max > self.min {
            ((target - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Per-parameter corpus statistics, used to normalize control deviations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlStats(pub BTreeMap<ControlParam, ParamStats>);

impl ControlStats {
    pub fn of_corpus(corpus: &[LeadSheet]) -> Self {
        let measured: Vec<_> = corpus.iter().filter_map(|s| measure_controls(s).ok()).collect();
        ControlStats(
            ControlParam::ALL
                .iter()
                .map(|p| {
                    let values: Vec<f64> = measured.iter().filter_map(|m| m.get(*p)).collect();
                    (*p, ParamStats::of(&values))
                })
                .collect(),
        )
    }

    pub fn get(&self, param: ControlParam) -> ParamStats {
        self.0.get(&param).copied().unwrap_or_default()
    }
}

/// Symbol sequences extracted from a sheet or part of one.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub melody: Vec<MelodyToken>,
    pub chords: Vec<ChordSymbol>,
    pub durations: Vec<Beats>,
}

impl Material {
    pub fn is_empty(&self) -> bool {
        self.melody.is_empty() && self.chords.is_empty() && self.durations.is_empty()
    }
}

/// Melody tokens of a sheet, one per event, with an event that continues a
/// tie of the same pitch folded into the note it continues. Returns each
/// token with the absolute onset of its event.
pub fn melody_tokens(sheet: &LeadSheet) -> Vec<(Beats, MelodyToken)> {
    let mut out = Vec::new();
    let mut tied_pitch = None;
    for placed in sheet.events() {
        let pitch = placed.event.pitch().map(|p| p.midi());
        let continues = pitch.is_some() && pitch == tied_pitch;
        if !continues {
            out.push((placed.onset, pitch.map_or(MelodyToken::Rest, MelodyToken::Note)));
        }
        tied_pitch = if placed.event.tied_to_next { pitch } else { None };
    }
    out
}

/// Absolute positions of the harmonic grid: the strong beats of every bar.
pub fn chord_grid(sheet: &LeadSheet) -> Vec<Beats> {
    let bar_len = sheet.bar_length();
    let strong = sheet.meter.strong_beats();
    (0..sheet.bars.len())
        .flat_map(|b| {
            let start = bar_len * Beats::from_integer(b as i64);
            strong.iter().map(move |s| start + s).collect::<Vec<_>>()
        })
        .collect()
}

/// The chord in effect at each grid position, starting from the first
/// position that has one.
pub fn chord_tokens(sheet: &LeadSheet) -> Vec<(Beats, ChordSymbol)> {
    let track = sheet.chord_track();
    let mut out = Vec::new();
    let mut next = 0;
    let mut current = None;
    for pos in chord_grid(sheet) {
        while next < track.len() && track[next].0 <= pos {
            current = Some(track[next].1);
            next += 1;
        }
        if let Some(c) = current {
            out.push((pos, c));
        }
    }
    out
}

/// Everything a style model learns from one sheet.
pub fn extract_material(sheet: &LeadSheet) -> Material {
    Material {
        melody: melody_tokens(sheet).into_iter().map(|(_, t)| t).collect(),
        chords: chord_tokens(sheet).into_iter().map(|(_, c)| c).collect(),
        durations: sheet.events().into_iter().map(|e| e.event.duration).collect(),
    }
}

/// Material from the part of `sheet` inside `zone`, restricted to its layers.
pub fn extract_region(sheet: &LeadSheet, zone: &Zone) -> Material {
    let mut out = Material::default();
    if zone.layers.melody {
        let inside = |t: Beats| zone.contains_abs(sheet, t);
        out.melody = melody_tokens(sheet).into_iter().filter(|(t, _)| inside(*t)).map(|(_, m)| m).collect();
        out.durations = sheet.events().into_iter().filter(|e| inside(e.onset)).map(|e| e.event.duration).collect();
    }
    if zone.layers.chords {
        out.chords =
            chord_tokens(sheet).into_iter().filter(|(t, _)| zone.contains_abs(sheet, *t)).map(|(_, c)| c).collect();
    }
    out
}

/// A transposed copy that could not be built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkippedCopy {
    pub sheet: usize,
    pub semitones: i32,
    pub reason: String,
}

/// Statistical model of a lead-sheet corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleModel {
    pub melody: PpmModel<MelodyToken>,
    pub chords: PpmModel<ChordSymbol>,
    pub rhythm: DurationModel,
    /// Incremented on every retrain.
    pub corpus_version: u64,
    pub stats: ControlStats,
    pub config: StyleConfig,
    /// Material added by [`StyleModel::learn`], in order.
    pub learned: Vec<Material>,
    duration_counts: Vec<Beats>,
}

/// Trains a style model on `corpus` plus a transposed copy of every sheet for
/// each offset. Copies that would leave the MIDI range are skipped and
/// reported rather than failing the build.
pub fn build_style_model(
    corpus: &[LeadSheet],
    transposition_copies: &BTreeSet<i32>,
    max_order: usize,
) -> Result<(StyleModel, Vec<SkippedCopy>), FlowError> {
    if corpus.is_empty() {
        return Err(FlowError::Corpus("corpus is empty".into()));
    }
    if !transposition_copies.contains(&0) {
        return Err(FlowError::Corpus("transposition offsets must include 0".into()));
    }
    let mut materials = Vec::new();
    let mut skipped = Vec::new();
    for (i, sheet) in corpus.iter().enumerate() {
        for &k in transposition_copies {
            match sheet.transpose(k) {
                Ok(copy) => materials.push(extract_material(&copy)),
                Err(e) => {
                    log::warn!("skipping copy of corpus sheet {} transposed by {}: {}", i, k, e);
                    skipped.push(SkippedCopy { sheet: i, semitones: k, reason: e.to_string() });
                }
            }
        }
    }
    let melody_seqs: Vec<Vec<MelodyToken>> = materials.iter().map(|m| m.melody.clone()).collect();
    let chord_seqs: Vec<Vec<ChordSymbol>> = materials.iter().map(|m| m.chords.clone()).collect();
    let mut melody = PpmModel::new(melody_seqs.iter().flatten().copied(), max_order);
    for seq in &melody_seqs {
        melody.train_weighted(seq, 1.0)?;
    }
    let mut chords = PpmModel::new(chord_seqs.iter().flatten().copied(), max_order);
    for seq in &chord_seqs {
        chords.train_weighted(seq, 1.0)?;
    }
    let duration_counts: Vec<Beats> = materials.iter().flat_map(|m| m.durations.iter().copied()).collect();
    let model = StyleModel {
        melody,
        chords,
        rhythm: DurationModel::train(duration_counts.iter().copied(), None),
        corpus_version: 1,
        stats: ControlStats::of_corpus(corpus),
        config: StyleConfig { max_order, transpositions: transposition_copies.clone() },
        learned: Vec::new(),
        duration_counts,
    };
    Ok((model, skipped))
}

impl StyleModel {
    /// Returns a retrained copy that has also seen `material`. Counts only
    /// grow; empty material returns an unchanged copy.
    pub fn learn(&self, material: &[Material]) -> Result<StyleModel, FlowError> {
        let material: Vec<&Material> = material.iter().filter(|m| !m.is_empty()).collect();
        if material.is_empty() {
            return Ok(self.clone());
        }
        let mut next = self.clone();
        let new_notes =
            material.iter().flat_map(|m| m.melody.iter().copied()).filter(|t| next.melody.index_of(t).is_none());
        let new_notes: Vec<MelodyToken> = new_notes.collect();
        if !new_notes.is_empty() {
            next.melody = next.melody.with_alphabet(new_notes);
        }
        let new_chords: Vec<ChordSymbol> = material
            .iter()
            .flat_map(|m| m.chords.iter().copied())
            .filter(|c| next.chords.index_of(c).is_none())
            .collect();
        if !new_chords.is_empty() {
            next.chords = next.chords.with_alphabet(new_chords);
        }
        for m in &material {
            if !m.melody.is_empty() {
                next.melody.train_weighted(&m.melody, 1.0)?;
            }
            if !m.chords.is_empty() {
                next.chords.train_weighted(&m.chords, 1.0)?;
            }
            next.duration_counts.extend(m.durations.iter().copied().filter(|d| !d.is_zero()));
            next.learned.push((*m).clone());
        }
        next.rhythm = DurationModel::train(next.duration_counts.iter().copied(), None);
        next.corpus_version += 1;
        Ok(next)
    }

    /// A copy whose alphabets also cover every symbol of `sheet`, so pinned
    /// material the corpus never produced keeps floor probability.
    pub fn covering(&self, sheet: &LeadSheet) -> StyleModel {
        let material = extract_material(sheet);
        let mut out = self.clone();
        let notes: Vec<MelodyToken> =
            material.melody.into_iter().filter(|t| self.melody.index_of(t).is_none()).collect();
        if !notes.is_empty() {
            out.melody = self.melody.with_alphabet(notes);
        }
        let chords: Vec<ChordSymbol> =
            material.chords.into_iter().filter(|c| self.chords.index_of(c).is_none()).collect();
        if !chords.is_empty() {
            out.chords = self.chords.with_alphabet(chords);
        }
        out
    }
}

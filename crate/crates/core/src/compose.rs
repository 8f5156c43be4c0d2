//! Corpus-trained lead-sheet generation, optionally fitted to a lyric.
//!
//! Chords come from a PPM model over chord symbols (stored relative to a C
//! tonic so any key can be generated), one chord per bar. The melody is a
//! PPM model over semitone intervals started from a scale-degree prior, so
//! it is learned independently of key. Rhythm either comes from a duration
//! unigram stretched to fill each bar, or, when a lyric is given, from its
//! scansion: one note per syllable, stressed syllables pulled onto strong
//! beats. A [`RuleSet`] filters the melody during sampling and whole
//! attempts are retried until every rule holds or the budget runs out.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ppm::{PpmError, PpmModel, Temperature};
use crate::sampling::{self, Rng};
use crate::scansion::{analyze_scansion, ScansionError, StressPattern};
use crate::sheet::{
    scale_degree_function, Bar, Beats, ChordPlacement, ChordSymbol, Key, LeadSheet, Meter, NoteEvent, SheetError,
};

/// Attempts made before a rule set is declared unsatisfiable.
pub const DEFAULT_RETRY_BUDGET: usize = 1_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("invalid rule set: {0}")]
    Rules(String),
    #[error("bars must be at least 1")]
    Bars,
    #[error("no attempt out of {attempts} satisfied the rules; most often violated: {rule}")]
    Unsatisfiable { rule: String, attempts: usize },
    #[error("bar {bar} would need {syllables} notes, more than the rhythm grid allows")]
    LyricTooDense { bar: usize, syllables: usize },
    #[error(transparent)]
    Scansion(#[from] ScansionError),
    #[error(transparent)]
    Ppm(#[from] PpmError),
    #[error(transparent)]
    Sheet(#[from] SheetError),
    #[error("corpus has no usable material: {0}")]
    Corpus(String),
}

/// Hard constraints applied on top of the statistical models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleSet {
    /// Lowest and highest allowed MIDI pitch.
    pub pitch_range: (u8, u8),
    /// Largest allowed leap in semitones.
    pub max_interval: u8,
    /// Scale degrees (1-7) the melody may end on. Empty means unrestricted.
    pub must_end_on: BTreeSet<u8>,
    /// Roman-numeral function the last chord must have, e.g. `"I"`.
    pub cadence_chord: Option<String>,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet { pitch_range: (48, 81), max_interval: 9, must_end_on: [1, 3].into(), cadence_chord: None }
    }
}

impl RuleSet {
    pub fn validate(&self) -> Result<(), ComposeError> {
        let (low, high) = self.pitch_range;
        if low > high || high > 127 {
            return Err(ComposeError::Rules(format!("pitch range {}..{} is empty or out of MIDI range", low, high)));
        }
        if self.max_interval < 1 {
            return Err(ComposeError::Rules("max_interval must be at least 1".into()));
        }
        if let Some(d) = self.must_end_on.iter().find(|d| !(1..=7).contains(*d)) {
            return Err(ComposeError::Rules(format!("scale degree {} is not in 1-7", d)));
        }
        Ok(())
    }
}

/// Unigram over note durations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    entries: Vec<(Beats, f64)>,
}

/// Durations every rhythm model can produce.
pub fn default_durations() -> [Beats; 4] {
    [Beats::new(1, 2), Beats::from_integer(1), Beats::new(3, 2), Beats::from_integer(2)]
}

impl DurationModel {
    /// Counts `observed` durations that fall in `vocabulary` (all of them when
    /// `vocabulary` is `None`), adding one pseudo-count to each default duration.
    pub fn train(observed: impl IntoIterator<Item = Beats>, vocabulary: Option<&[Beats]>) -> Self {
        let mut counts: BTreeMap<Beats, f64> = default_durations().into_iter().map(|d| (d, 1.0)).collect();
        for d in observed {
            if d > Beats::zero() && vocabulary.map_or(true, |v| v.contains(&d)) {
                *counts.entry(d).or_insert(0.0) += 1.0;
            }
        }
        DurationModel { entries: counts.into_iter().collect() }
    }

    pub fn entries(&self) -> &[(Beats, f64)] {
        &self.entries
    }

    pub fn weight(&self, d: Beats) -> f64 {
        self.entries.iter().find(|(e, _)| *e == d).map_or(0.0, |(_, w)| *w)
    }

    pub fn sample(&self, rng: &mut Rng) -> Beats {
        let weights: Vec<f64> = self.entries.iter().map(|(_, w)| *w).collect();
        self.entries[sampling::sample_index(&weights, rng).expect("duration model has positive weights")].0
    }

    /// Draws durations until `length` is reached, shortening the last one to fit.
    pub fn stretch_fill(&self, length: Beats, rng: &mut Rng) -> Vec<Beats> {
        let mut out = Vec::new();
        let mut filled = Beats::zero();
        while filled < length {
            let d = self.sample(rng).min(length - filled);
            filled += d;
            out.push(d);
        }
        out
    }

    /// Samples a sequence of model durations summing exactly to `length`,
    /// with probability proportional to the product of their weights, using
    /// at most `max_events` durations. Falls back to one event spanning
    /// `length` when no such composition exists.
    pub fn sample_composition(&self, length: Beats, max_events: usize, rng: &mut Rng) -> Vec<Beats> {
        let mut memo = HashMap::new();
        if self.composition_weight(length, max_events, &mut memo) <= 0.0 {
            return vec![length];
        }
        let mut out = Vec::new();
        let mut remaining = length;
        let mut budget = max_events;
        while remaining > Beats::zero() {
            let options: Vec<f64> = self
                .entries
                .iter()
                .map(|(d, w)| {
                    if *d <= remaining {
                        w * self.composition_weight(remaining - d, budget - 1, &mut memo)
                    } else {
                        0.0
                    }
                })
                .collect();
            let i = sampling::sample_index(&options, rng).expect("a composition exists");
            let d = self.entries[i].0;
            out.push(d);
            remaining -= d;
            budget -= 1;
        }
        out
    }

    fn composition_weight(&self, remaining: Beats, budget: usize, memo: &mut HashMap<(Beats, usize), f64>) -> f64 {
        if remaining.is_zero() {
            return 1.0;
        }
        if budget == 0 {
            return 0.0;
        }
        if let Some(w) = memo.get(&(remaining, budget)) {
            return *w;
        }
        let mut total = 0.0;
        for (d, w) in &self.entries {
            if *d <= remaining {
                total += w * self.composition_weight(remaining - d, budget - 1, memo);
            }
        }
        memo.insert((remaining, budget), total);
        total
    }
}

/// Models trained from a lead-sheet corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposerModels {
    /// Semitone steps between consecutive sounding notes.
    pub melody: PpmModel<i32>,
    /// Chord symbols with the corpus transposed to a C tonic.
    pub chords: PpmModel<ChordSymbol>,
    pub rhythm: DurationModel,
    /// Weight of each semitone offset above the tonic for the first note.
    pub start_degrees: Vec<(u8, f64)>,
}

/// The chords of a sheet as placed, transposed so the key's tonic is C.
pub fn relative_progression(sheet: &LeadSheet) -> Vec<ChordSymbol> {
    let shift = -(sheet.key.tonic.value() as i32);
    sheet.chord_track().into_iter().map(|(_, c)| c.transposed(shift)).collect()
}

fn melodic_intervals(sheet: &LeadSheet) -> Vec<i32> {
    sheet.sounding_notes().windows(2).map(|w| w[1].pitch.midi() as i32 - w[0].pitch.midi() as i32).collect()
}

impl ComposerModels {
    /// Trains every model. `chord_progressions` are tonic-relative sequences
    /// (see [`relative_progression`]); the melody corpus also supplies the
    /// rhythm and start-degree statistics.
    pub fn train(
        melody_corpus: &[LeadSheet],
        chord_progressions: &[Vec<ChordSymbol>],
        max_order: usize,
    ) -> Result<Self, ComposeError> {
        let intervals: Vec<Vec<i32>> = melody_corpus.iter().map(melodic_intervals).collect();
        if intervals.iter().all(|i| i.is_empty()) {
            return Err(ComposeError::Corpus("melody corpus has no consecutive notes".into()));
        }
        let alphabet: BTreeSet<i32> = (-12..=12).chain(intervals.iter().flatten().copied()).collect();
        let melody = crate::ppm::train_ppm(alphabet, &intervals, max_order)?;

        let chord_alphabet: BTreeSet<ChordSymbol> = chord_progressions.iter().flatten().copied().collect();
        if chord_alphabet.is_empty() {
            return Err(ComposeError::Corpus("chord corpus has no chords".into()));
        }
        let chords = crate::ppm::train_ppm(chord_alphabet, chord_progressions, max_order)?;

        let vocabulary = default_durations();
        let rhythm = DurationModel::train(
            melody_corpus.iter().flat_map(|s| s.events()).filter(|e| !e.event.is_rest()).map(|e| e.event.duration),
            Some(&vocabulary),
        );

        let mut start = [0.0f64; 12];
        for sheet in melody_corpus {
            if let Some(first) = sheet.sounding_notes().first() {
                let offset = (first.pitch.class().value() as i32 - sheet.key.tonic.value() as i32).rem_euclid(12);
                start[offset as usize] += 1.0;
            }
        }
        // add-one over the major-scale degrees keeps every diatonic start possible
        for offset in [0usize, 2, 4, 5, 7, 9, 11] {
            start[offset] += 1.0;
        }
        let start_degrees = start.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(o, w)| (o as u8, *w)).collect();
        Ok(ComposerModels { melody, chords, rhythm, start_degrees })
    }
}

/// Reads chord progressions from a directory: every `.json` lead sheet
/// contributes its [`relative_progression`], and every `.txt` file holds
/// tonic-relative progressions, one per line, as whitespace-separated
/// symbols like `C:maj F:maj G:dom7 C:maj`.
pub fn read_chord_corpus(dir: impl AsRef<std::path::Path>) -> Result<Vec<Vec<ChordSymbol>>, ComposeError> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| SheetError::Io(format!("{}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        match path.extension().and_then(|x| x.to_str()) {
            Some("json") => out.push(relative_progression(&crate::sheet::read_leadsheet(&path)?)),
            Some("txt") => {
                let text =
                    std::fs::read_to_string(&path).map_err(|e| SheetError::Io(format!("{}: {}", path.display(), e)))?;
                for (i, line) in text.lines().enumerate() {
                    let chords = line
                        .split_whitespace()
                        .map(|t| t.parse::<ChordSymbol>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| ComposeError::Corpus(format!("{}:{}: {}", path.display(), i + 1, e)))?;
                    if !chords.is_empty() {
                        out.push(chords);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// What to generate.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerateRequest {
    pub bars: usize,
    pub meter: Meter,
    pub key: Key,
    pub lyric: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Violation {
    PitchRange,
    MaxInterval,
    EndingDegree,
    CadenceChord,
}

impl Violation {
    fn describe(self, rules: &RuleSet) -> String {
        match self {
            Violation::PitchRange => format!("pitch_range {:?}", rules.pitch_range),
            Violation::MaxInterval => format!("max_interval {}", rules.max_interval),
            Violation::EndingDegree => format!("must_end_on {:?}", rules.must_end_on),
            Violation::CadenceChord => format!("cadence_chord {:?}", rules.cadence_chord),
        }
    }
}

/// Places `pattern`'s syllables into bars: one note per syllable, syllables
/// spread evenly over bars, onsets on a half-beat grid (quarter-beat when a
/// bar is crowded) chosen to put stressed syllables on strong beats.
fn lyric_rhythm(pattern: &StressPattern, meter: &Meter, bars: usize) -> Result<Vec<Vec<Beats>>, ComposeError> {
    let n = pattern.len();
    let mut out = Vec::with_capacity(bars);
    let mut next = 0;
    let strong = meter.strong_beats();
    for bar in 0..bars {
        let count = n / bars + usize::from(bar < n % bars);
        let stresses: Vec<bool> = pattern.syllables[next..next + count].iter().map(|s| s.stressed).collect();
        next += count;
        if count == 0 {
            out.push(vec![]);
            continue;
        }
        let beats = meter.beats_per_bar as usize;
        let (step, slots) = if count <= beats * 2 {
            (Beats::new(1, 2), beats * 2)
        } else if count <= beats * 4 {
            (Beats::new(1, 4), beats * 4)
        } else {
            return Err(ComposeError::LyricTooDense { bar, syllables: count });
        };
        let is_strong = |slot: usize| strong.contains(&(step * Beats::from_integer(slot as i64)));
        let ideal = slots as f64 / count as f64;
        // cost[j][s]: best cost of syllables j.. with syllable j at slot s
        let mut cost = vec![vec![f64::INFINITY; slots]; count];
        let mut choice = vec![vec![usize::MAX; slots]; count];
        for j in (0..count).rev() {
            for s in 0..slots {
                let local = match (stresses[j], is_strong(s)) {
                    (true, false) => 1.0,
                    (false, true) if j > 0 => 0.5,
                    _ => 0.0,
                };
                if j == count - 1 {
                    let gap = (slots - s) as f64;
                    cost[j][s] = local + 0.01 * (gap - ideal).powi(2);
                    continue;
                }
                for t in s + 1..slots {
                    let c = local + 0.01 * ((t - s) as f64 - ideal).powi(2) + cost[j + 1][t];
                    if c < cost[j][s] {
                        cost[j][s] = c;
                        choice[j][s] = t;
                    }
                }
            }
        }
        let mut onsets = vec![0usize];
        for j in 0..count - 1 {
            onsets.push(choice[j][*onsets.last().unwrap()]);
        }
        onsets.push(slots);
        out.push(onsets.windows(2).map(|w| step * Beats::from_integer((w[1] - w[0]) as i64)).collect());
    }
    Ok(out)
}

struct Attempt {
    chords: Vec<ChordSymbol>,
    pitches: Vec<u8>,
}

fn attempt(
    models: &ComposerModels,
    rules: &RuleSet,
    key: &Key,
    bars: usize,
    notes: usize,
    rng: &mut Rng,
) -> Result<Attempt, Violation> {
    let shift = key.tonic.value() as i32;
    let chords: Vec<ChordSymbol> = models
        .chords
        .sample(bars, Temperature::Scaled(1.0), rng)
        .expect("bars is positive")
        .into_iter()
        .map(|c| c.transposed(shift))
        .collect();
    if let Some(cadence) = &rules.cadence_chord {
        if scale_degree_function(key, chords.last().unwrap()) != cadence {
            return Err(Violation::CadenceChord);
        }
    }
    if notes == 0 {
        return Ok(Attempt { chords, pitches: vec![] });
    }

    let (low, high) = (rules.pitch_range.0 as i32, rules.pitch_range.1 as i32);
    let ends_well = |p: i32| {
        rules.must_end_on.is_empty()
            || key
                .degree_of(crate::sheet::PitchClass::new((p.rem_euclid(12)) as u8).unwrap())
                .is_some_and(|d| rules.must_end_on.contains(&d))
    };
    let center = (low + high) as f64 / 2.0;
    let place = |offset: u8| -> Option<i32> {
        let pc = (shift + offset as i32).rem_euclid(12);
        (low..=high)
            .filter(|p| p.rem_euclid(12) == pc)
            .min_by(|a, b| (*a as f64 - center).abs().partial_cmp(&(*b as f64 - center).abs()).unwrap())
    };
    let starts: Vec<(i32, f64)> = models
        .start_degrees
        .iter()
        .filter_map(|(offset, w)| place(*offset).map(|p| (p, *w)))
        .filter(|(p, _)| notes > 1 || ends_well(*p))
        .collect();
    if starts.is_empty() {
        return Err(if notes == 1 { Violation::EndingDegree } else { Violation::PitchRange });
    }
    let weights: Vec<f64> = starts.iter().map(|(_, w)| *w).collect();
    let mut pitches = vec![starts[sampling::sample_index(&weights, rng).unwrap()].0];
    let mut intervals: Vec<u32> = Vec::new();
    let order = models.melody.max_order();
    for i in 1..notes {
        let prev = *pitches.last().unwrap();
        let ctx = &intervals[intervals.len().saturating_sub(order)..];
        let mut dist = models.melody.predict_encoded(ctx);
        let mut range_ok = false;
        let mut leap_ok = false;
        for (k, p) in dist.iter_mut().enumerate() {
            let step = *models.melody.symbol(k as u32);
            let target = prev + step;
            let in_range = (low..=high).contains(&target);
            let small = step.unsigned_abs() <= rules.max_interval as u32;
            range_ok |= in_range;
            leap_ok |= in_range && small;
            if !(in_range && small && (i + 1 < notes || ends_well(target))) {
                *p = 0.0;
            }
        }
        let Some(k) = sampling::sample_index(&dist, rng) else {
            return Err(if !range_ok {
                Violation::PitchRange
            } else if !leap_ok {
                Violation::MaxInterval
            } else {
                Violation::EndingDegree
            });
        };
        intervals.push(k as u32);
        pitches.push(prev + models.melody.symbol(k as u32));
    }
    Ok(Attempt { chords, pitches: pitches.into_iter().map(|p| p as u8).collect() })
}

/// Generates a lead sheet that satisfies `rules`.
pub fn generate_leadsheet(
    models: &ComposerModels,
    rules: &RuleSet,
    request: &GenerateRequest,
    seed: u64,
) -> Result<LeadSheet, ComposeError> {
    generate_with_budget(models, rules, request, seed, DEFAULT_RETRY_BUDGET)
}

/// [`generate_leadsheet`] with an explicit retry budget.
pub fn generate_with_budget(
    models: &ComposerModels,
    rules: &RuleSet,
    request: &GenerateRequest,
    seed: u64,
    budget: usize,
) -> Result<LeadSheet, ComposeError> {
    rules.validate()?;
    if request.bars == 0 {
        return Err(ComposeError::Bars);
    }
    let meter = Meter::new(request.meter.beats_per_bar, request.meter.beat_unit)?;
    let lyric_plan = match &request.lyric {
        Some(text) => Some(lyric_rhythm(&analyze_scansion(text)?, &meter, request.bars)?),
        None => None,
    };
    let mut rng = sampling::rng_from_seed(seed);
    let mut violations: BTreeMap<Violation, usize> = BTreeMap::new();
    for _ in 0..budget.max(1) {
        let rhythm: Vec<Vec<Beats>> = match &lyric_plan {
            Some(plan) => plan.clone(),
            None => (0..request.bars).map(|_| models.rhythm.stretch_fill(meter.bar_length(), &mut rng)).collect(),
        };
        let notes: usize = rhythm.iter().map(Vec::len).sum();
        match attempt(models, rules, &request.key, request.bars, notes, &mut rng) {
            Ok(found) => {
                let mut pitches = found.pitches.into_iter();
                let bars = rhythm
                    .into_iter()
                    .zip(found.chords)
                    .map(|(durations, chord)| {
                        let notes = if durations.is_empty() {
                            vec![NoteEvent::rest(meter.bar_length())]
                        } else {
                            durations.into_iter().map(|d| NoteEvent::note(pitches.next().unwrap(), d)).collect()
                        };
                        Bar { notes, chords: vec![ChordPlacement { beat: Beats::zero(), chord }] }
                    })
                    .collect();
                let sheet = LeadSheet {
                    key: request.key,
                    meter,
                    bars,
                    lyrics: request.lyric.as_ref().map(|l| l.split_whitespace().collect::<Vec<_>>().join(" ")),
                };
                sheet.validate()?;
                return Ok(sheet);
            }
            Err(v) => *violations.entry(v).or_insert(0) += 1,
        }
    }
    let worst = violations.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(v, _)| *v).unwrap();
    Err(ComposeError::Unsatisfiable { rule: worst.describe(rules), attempts: budget.max(1) })
}

/// Mean duration in beats, for diagnostics.
pub fn mean_duration(durations: &[Beats]) -> f64 {
    if durations.is_empty() {
        return 0.0;
    }
    let total = durations.iter().fold(Beats::zero(), |a, b| a + b);
    (total / Beats::from_integer(durations.len() as i64)).to_f64().unwrap_or(0.0)
}

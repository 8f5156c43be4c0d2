//! Lead sheets: a single melody line plus chord symbols, organised in bars.
//!
//! Every duration is an exact rational number of beats, so the bar-sum
//! invariant (notes in a bar add up to the meter) is checked with equality,
//! never with a tolerance.

mod controls;
mod doc;
mod harmony;
mod midi;

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub use controls::{measure_controls, ControlParam, ControlParams, ControlTargets, MeasuredControls};
pub use doc::{parse_beats, parse_leadsheet, read_leadsheet, read_sheet_dir, serialize_leadsheet};
pub use harmony::{harmonic_function_stats, scale_degree_function, HarmonicStats};
pub use midi::{export_midi, write_midi, TICKS_PER_QUARTER};

/// A duration or position measured in beats of the sheet's meter.
pub type Beats = Rational64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheetError {
    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("bar {bar}: notes sum to {found} beats, meter requires {expected}")]
    BarDuration { bar: usize, expected: Beats, found: Beats },
    #[error("bar {bar}, note {note}: {message}")]
    Note { bar: usize, note: usize, message: String },
    #[error("bar {bar}: chord at beat {beat} is out of order or outside the bar")]
    ChordPosition { bar: usize, beat: Beats },
    #[error("bar {bar}, note {note}: pitch {pitch} transposed by {semitones} leaves the MIDI range")]
    TransposeOutOfRange { bar: usize, note: usize, pitch: u8, semitones: i32 },
    #[error("sheet has no bars")]
    Empty,
    #[error("invalid meter {0}/{1}")]
    Meter(u32, u32),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for SheetError {
    fn from(e: std::io::Error) -> Self {
        SheetError::Io(e.to_string())
    }
}

const NOTE_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// Pitch class 0–11, C = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

impl PitchClass {
    pub fn new(value: u8) -> Option<Self> {
        (value < 12).then_some(PitchClass(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn shifted(self, semitones: i32) -> Self {
        PitchClass((self.0 as i32 + semitones).rem_euclid(12) as u8)
    }

    pub fn name(self) -> &'static str {
        NOTE_NAMES[self.0 as usize]
    }

    /// Parses a note name such as `C`, `F#` or `Bb`.
    pub fn from_name(name: &str) -> Option<Self> {
        let mut chars = name.trim().chars();
        let letter = chars.next()?.to_ascii_uppercase();
        let base: i32 = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return None,
        };
        let mut offset = 0;
        for c in chars {
            match c {
                '#' | '♯' => offset += 1,
                'b' | '♭' => offset -= 1,
                _ => return None,
            }
        }
        Some(PitchClass((base + offset).rem_euclid(12) as u8))
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// MIDI note number 0–127.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pitch(u8);

impl Pitch {
    pub fn new(midi: i32) -> Option<Self> {
        (0..=127).contains(&midi).then_some(Pitch(midi as u8))
    }

    pub fn midi(self) -> u8 {
        self.0
    }

    pub fn class(self) -> PitchClass {
        PitchClass(self.0 % 12)
    }

    pub fn shifted(self, semitones: i32) -> Option<Self> {
        Pitch::new(self.0 as i32 + semitones)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoteContent {
    Pitch(Pitch),
    Rest,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NoteEvent {
    pub content: NoteContent,
    pub duration: Beats,
    pub tied_to_next: bool,
}

impl NoteEvent {
    pub fn note(midi: u8, duration: Beats) -> Self {
        NoteEvent {
            content: NoteContent::Pitch(Pitch::new(midi as i32).expect("midi number in range")),
            duration,
            tied_to_next: false,
        }
    }

    pub fn rest(duration: Beats) -> Self {
        NoteEvent { content: NoteContent::Rest, duration, tied_to_next: false }
    }

    pub fn pitch(&self) -> Option<Pitch> {
        match self.content {
            NoteContent::Pitch(p) => Some(p),
            NoteContent::Rest => None,
        }
    }

    pub fn is_rest(&self) -> bool {
        matches!(self.content, NoteContent::Rest)
    }
}

/// The closed set of chord qualities understood by the models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quality {
    Maj,
    Min,
    Dom7,
    Maj7,
    Min7,
    Dim,
    Aug,
    Sus4,
}

impl Quality {
    pub const ALL: [Quality; 8] = [
        Quality::Maj,
        Quality::Min,
        Quality::Dom7,
        Quality::Maj7,
        Quality::Min7,
        Quality::Dim,
        Quality::Aug,
        Quality::Sus4,
    ];

    /// Chord tones as semitones above the root.
    pub fn intervals(self) -> &'static [u8] {
        match self {
            Quality::Maj => &[0, 4, 7],
            Quality::Min => &[0, 3, 7],
            Quality::Dom7 => &[0, 4, 7, 10],
            Quality::Maj7 => &[0, 4, 7, 11],
            Quality::Min7 => &[0, 3, 7, 10],
            Quality::Dim => &[0, 3, 6],
            Quality::Aug => &[0, 4, 8],
            Quality::Sus4 => &[0, 5, 7],
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Quality::Maj => "maj",
            Quality::Min => "min",
            Quality::Dom7 => "dom7",
            Quality::Maj7 => "maj7",
            Quality::Min7 => "min7",
            Quality::Dim => "dim",
            Quality::Aug => "aug",
            Quality::Sus4 => "sus4",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Quality::ALL.into_iter().find(|q| q.symbol() == s)
    }

    /// Maps any quality spelling onto the closed set. The flag is true when
    /// the spelling was not canonical and had to be approximated.
    pub fn parse_lenient(s: &str) -> (Self, bool) {
        if let Some(q) = Quality::from_symbol(s) {
            return (q, false);
        }
        let t = s.trim();
        let exact = match t {
            "" | "M" | "major" => Some(Quality::Maj),
            "m" | "-" | "minor" => Some(Quality::Min),
            "7" | "dom" => Some(Quality::Dom7),
            "M7" | "Δ" | "Δ7" | "ma7" => Some(Quality::Maj7),
            "m7" | "-7" | "mi7" => Some(Quality::Min7),
            "o" | "°" => Some(Quality::Dim),
            "+" => Some(Quality::Aug),
            "sus" => Some(Quality::Sus4),
            _ => None,
        };
        if let Some(q) = exact {
            return (q, false);
        }
        let lower = t.to_ascii_lowercase();
        let nearest = if lower.contains("dim") || t.contains('o') || t.contains("b5") {
            Quality::Dim
        } else if lower.contains("aug") || t.contains('+') || t.contains("#5") {
            Quality::Aug
        } else if lower.contains("sus") {
            Quality::Sus4
        } else if (t.starts_with('m') && !lower.starts_with("maj")) || lower.starts_with("min") {
            Quality::Min
        } else {
            Quality::Maj
        };
        (nearest, true)
    }
}

impl fmt::Display for Quality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordSymbol {
    pub root: PitchClass,
    pub quality: Quality,
    pub bass: Option<PitchClass>,
}

impl ChordSymbol {
    pub fn new(root: u8, quality: Quality) -> Self {
        ChordSymbol { root: PitchClass::new(root % 12).unwrap(), quality, bass: None }
    }

    /// Pitch classes sounding in the chord, bass included.
    pub fn tones(&self) -> Vec<PitchClass> {
        let mut tones: Vec<PitchClass> =
            self.quality.intervals().iter().map(|i| self.root.shifted(*i as i32)).collect();
        if let Some(b) = self.bass {
            if !tones.contains(&b) {
                tones.push(b);
            }
        }
        tones
    }

    pub fn contains(&self, pc: PitchClass) -> bool {
        self.tones().contains(&pc)
    }

    pub fn transposed(&self, semitones: i32) -> Self {
        ChordSymbol {
            root: self.root.shifted(semitones),
            quality: self.quality,
            bass: self.bass.map(|b| b.shifted(semitones)),
        }
    }
}

impl fmt::Display for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.root, self.quality)?;
        if let Some(b) = self.bass {
            write!(f, "/{}", b)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ChordSymbol {
    type Err = String;

    /// Parses `Root:quality` with an optional `/bass`, e.g. `G:dom7/B`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (main, bass) = match s.split_once('/') {
            Some((m, b)) => (m, Some(b)),
            None => (s, None),
        };
        let (root, quality) = main.split_once(':').ok_or_else(|| format!("chord {:?} lacks ':'", s))?;
        let root = PitchClass::from_name(root).ok_or_else(|| format!("unknown root in {:?}", s))?;
        let quality = Quality::from_symbol(quality).ok_or_else(|| format!("unknown quality in {:?}", s))?;
        let bass = match bass {
            Some(b) => Some(PitchClass::from_name(b).ok_or_else(|| format!("unknown bass in {:?}", s))?),
            None => None,
        };
        Ok(ChordSymbol { root, quality, bass })
    }
}

impl serde::Serialize for ChordSymbol {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for ChordSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChordPlacement {
    pub beat: Beats,
    pub chord: ChordSymbol,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Key {
    pub tonic: PitchClass,
    pub mode: Mode,
}

impl Key {
    pub fn major(tonic: u8) -> Self {
        Key { tonic: PitchClass::new(tonic % 12).unwrap(), mode: Mode::Major }
    }

    pub fn minor(tonic: u8) -> Self {
        Key { tonic: PitchClass::new(tonic % 12).unwrap(), mode: Mode::Minor }
    }

    /// Semitone offsets of the seven scale degrees above the tonic.
    pub fn scale(&self) -> [u8; 7] {
        match self.mode {
            Mode::Major => [0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => [0, 2, 3, 5, 7, 8, 10],
        }
    }

    /// 1-based scale degree of a pitch class, if diatonic.
    pub fn degree_of(&self, pc: PitchClass) -> Option<u8> {
        let offset = (pc.value() as i32 - self.tonic.value() as i32).rem_euclid(12) as u8;
        self.scale().iter().position(|s| *s == offset).map(|i| i as u8 + 1)
    }

    /// The tonic triad, used as the harmony in effect before the first chord.
    pub fn tonic_triad(&self) -> ChordSymbol {
        let quality = match self.mode {
            Mode::Major => Quality::Maj,
            Mode::Minor => Quality::Min,
        };
        ChordSymbol { root: self.tonic, quality, bass: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Meter {
    pub beats_per_bar: u32,
    pub beat_unit: u32,
}

impl Meter {
    pub fn new(beats_per_bar: u32, beat_unit: u32) -> Result<Self, SheetError> {
        if beats_per_bar == 0 || beat_unit == 0 || !beat_unit.is_power_of_two() || beat_unit > 64 {
            return Err(SheetError::Meter(beats_per_bar, beat_unit));
        }
        Ok(Meter { beats_per_bar, beat_unit })
    }

    pub fn bar_length(&self) -> Beats {
        Beats::from_integer(self.beats_per_bar as i64)
    }

    /// Beat positions that receive metrical stress: the downbeat, plus the
    /// middle of the bar in even meters of four or more beats.
    pub fn strong_beats(&self) -> Vec<Beats> {
        let mut strong = vec![Beats::zero()];
        if self.beats_per_bar >= 4 && self.beats_per_bar % 2 == 0 {
            strong.push(Beats::from_integer(self.beats_per_bar as i64 / 2));
        }
        strong
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Bar {
    pub notes: Vec<NoteEvent>,
    pub chords: Vec<ChordPlacement>,
}

impl Bar {
    pub fn note_sum(&self) -> Beats {
        self.notes.iter().map(|n| n.duration).fold(Beats::zero(), |a, b| a + b)
    }
}

/// A position in a sheet: bar index (0-based) and beat offset within the bar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SheetPos {
    pub bar: usize,
    pub beat: Beats,
}

impl SheetPos {
    pub fn new(bar: usize, beat: Beats) -> Self {
        SheetPos { bar, beat }
    }

    pub fn bar_start(bar: usize) -> Self {
        SheetPos { bar, beat: Beats::zero() }
    }

    /// Absolute offset from the start of the sheet.
    pub fn absolute(&self, meter: &Meter) -> Beats {
        meter.bar_length() * Beats::from_integer(self.bar as i64) + self.beat
    }

    pub fn from_absolute(abs: Beats, meter: &Meter) -> Self {
        let bar_len = meter.bar_length();
        let bar = (abs / bar_len).floor();
        SheetPos { bar: *bar.numer() as usize, beat: abs - bar * bar_len }
    }
}

impl PartialOrd for SheetPos {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SheetPos {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bar.cmp(&other.bar).then(self.beat.cmp(&other.beat))
    }
}

impl fmt::Display for SheetPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}.{}", self.bar, self.beat)
    }
}

/// A melody event with its absolute onset, as produced by [`LeadSheet::events`].
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedEvent {
    pub bar: usize,
    pub index: usize,
    pub onset: Beats,
    pub event: NoteEvent,
}

/// A sounding note after merging tie chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoundingNote {
    pub onset: Beats,
    pub pitch: Pitch,
    pub duration: Beats,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeadSheet {
    pub key: Key,
    pub meter: Meter,
    pub bars: Vec<Bar>,
    pub lyrics: Option<String>,
}

impl LeadSheet {
    /// A sheet of `bars` whole-bar rests with no chords.
    pub fn empty(key: Key, meter: Meter, bars: usize) -> Self {
        let bar = Bar { notes: vec![NoteEvent::rest(meter.bar_length())], chords: vec![] };
        LeadSheet { key, meter, bars: vec![bar; bars], lyrics: None }
    }

    pub fn bar_length(&self) -> Beats {
        self.meter.bar_length()
    }

    pub fn total_beats(&self) -> Beats {
        self.bar_length() * Beats::from_integer(self.bars.len() as i64)
    }

    pub fn end(&self) -> SheetPos {
        SheetPos::bar_start(self.bars.len())
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), SheetError> {
        Meter::new(self.meter.beats_per_bar, self.meter.beat_unit)?;
        let bar_len = self.bar_length();
        for (b, bar) in self.bars.iter().enumerate() {
            for (n, note) in bar.notes.iter().enumerate() {
                if !note.duration.is_positive() {
                    return Err(SheetError::Note {
                        bar: b,
                        note: n,
                        message: format!("duration {} is not positive", note.duration),
                    });
                }
                if note.is_rest() && note.tied_to_next {
                    return Err(SheetError::Note { bar: b, note: n, message: "a rest cannot be tied".into() });
                }
            }
            let sum = bar.note_sum();
            if sum != bar_len {
                return Err(SheetError::BarDuration { bar: b, expected: bar_len, found: sum });
            }
            let mut previous: Option<Beats> = None;
            for c in &bar.chords {
                let out_of_bar = c.beat.is_negative() || c.beat >= bar_len;
                let unordered = previous.is_some_and(|p| c.beat <= p);
                if out_of_bar || unordered {
                    return Err(SheetError::ChordPosition { bar: b, beat: c.beat });
                }
                previous = Some(c.beat);
            }
        }
        Ok(())
    }

    /// All melody events in order with their absolute onsets.
    pub fn events(&self) -> Vec<PlacedEvent> {
        let bar_len = self.bar_length();
        let mut out = Vec::new();
        for (b, bar) in self.bars.iter().enumerate() {
            let mut onset = bar_len * Beats::from_integer(b as i64);
            for (i, note) in bar.notes.iter().enumerate() {
                out.push(PlacedEvent { bar: b, index: i, onset, event: note.clone() });
                onset += note.duration;
            }
        }
        out
    }

    /// Pitched notes with tie chains of equal pitch merged into one.
    pub fn sounding_notes(&self) -> Vec<SoundingNote> {
        let mut out: Vec<SoundingNote> = Vec::new();
        let mut continuing = false;
        for placed in self.events() {
            match placed.event.pitch() {
                Some(pitch) => {
                    match out.last_mut() {
                        Some(last) if continuing && last.pitch == pitch => last.duration += placed.event.duration,
                        _ => out.push(SoundingNote { onset: placed.onset, pitch, duration: placed.event.duration }),
                    }
                    continuing = placed.event.tied_to_next;
                }
                None => continuing = false,
            }
        }
        out
    }

    /// Chord placements in order with absolute positions.
    pub fn chord_track(&self) -> Vec<(Beats, ChordSymbol)> {
        let bar_len = self.bar_length();
        self.bars
            .iter()
            .enumerate()
            .flat_map(|(b, bar)| {
                let start = bar_len * Beats::from_integer(b as i64);
                bar.chords.iter().map(move |c| (start + c.beat, c.chord))
            })
            .collect()
    }

    /// The last chord placed at or before `abs`, if any.
    pub fn chord_at(&self, abs: Beats) -> Option<ChordSymbol> {
        self.chord_track().into_iter().take_while(|(pos, _)| *pos <= abs).last().map(|(_, c)| c)
    }

    /// Shifts every pitch, chord root and bass, and the key by `semitones`.
    pub fn transpose(&self, semitones: i32) -> Result<LeadSheet, SheetError> {
        let mut out = self.clone();
        out.key.tonic = self.key.tonic.shifted(semitones);
        for (b, bar) in out.bars.iter_mut().enumerate() {
            for (n, note) in bar.notes.iter_mut().enumerate() {
                if let NoteContent::Pitch(p) = note.content {
                    let shifted = p.shifted(semitones).ok_or(SheetError::TransposeOutOfRange {
                        bar: b,
                        note: n,
                        pitch: p.midi(),
                        semitones,
                    })?;
                    note.content = NoteContent::Pitch(shifted);
                }
            }
            for c in bar.chords.iter_mut() {
                c.chord = c.chord.transposed(semitones);
            }
        }
        Ok(out)
    }
}

/// Free-function form of [`LeadSheet::transpose`].
pub fn transpose(sheet: &LeadSheet, semitones: i32) -> Result<LeadSheet, SheetError> {
    sheet.transpose(semitones)
}

/// Builds bars from a flat list of `(midi or None for rest, duration)` pairs
/// and one optional chord per bar. Intended for fixtures and examples; the
/// result is validated.
pub fn sheet_from_parts(
    key: Key,
    meter: Meter,
    notes: &[(Option<u8>, Beats)],
    chords: &[Option<ChordSymbol>],
) -> Result<LeadSheet, SheetError> {
    let bar_len = meter.bar_length();
    let mut bars: Vec<Bar> = Vec::new();
    let mut current = Bar::default();
    let mut filled = Beats::zero();
    for (midi, dur) in notes {
        let event = match midi {
            Some(m) => NoteEvent {
                content: NoteContent::Pitch(Pitch::new(*m as i32).ok_or_else(|| SheetError::Schema {
                    location: format!("note {}", m),
                    message: "pitch outside 0-127".into(),
                })?),
                duration: *dur,
                tied_to_next: false,
            },
            None => NoteEvent::rest(*dur),
        };
        current.notes.push(event);
        filled += *dur;
        if filled >= bar_len {
            bars.push(std::mem::take(&mut current));
            filled = Beats::zero();
        }
    }
    if !current.notes.is_empty() {
        bars.push(current);
    }
    for (bar, chord) in bars.iter_mut().zip(chords) {
        if let Some(c) = chord {
            bar.chords.push(ChordPlacement { beat: Beats::zero(), chord: *c });
        }
    }
    let sheet = LeadSheet { key, meter, bars, lyrics: None };
    sheet.validate()?;
    Ok(sheet)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn b(n: i64) -> Beats {
        Beats::from_integer(n)
    }

    pub fn frac(n: i64, d: i64) -> Beats {
        Beats::new(n, d)
    }

    /// Two bars of 4/4 in C: C4 E4 G4 C5 | G4 E4 D4 C4, chords C:maj then G:dom7.
    pub fn two_bar_c() -> LeadSheet {
        let notes: Vec<(Option<u8>, Beats)> =
            [60, 64, 67, 72, 67, 64, 62, 60].iter().map(|m| (Some(*m), b(1))).collect();
        sheet_from_parts(
            Key::major(0),
            Meter::new(4, 4).unwrap(),
            &notes,
            &[Some(ChordSymbol::new(0, Quality::Maj)), Some(ChordSymbol::new(7, Quality::Dom7))],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn pitch_class_names_round_trip() {
        for v in 0..12 {
            let pc = PitchClass::new(v).unwrap();
            assert_eq!(PitchClass::from_name(pc.name()), Some(pc));
        }
        assert_eq!(PitchClass::from_name("Bb"), PitchClass::new(10));
        assert_eq!(PitchClass::from_name("Cb"), PitchClass::new(11));
        assert_eq!(PitchClass::from_name("H"), None);
    }

    #[test]
    fn transpose_identity_and_inverse() {
        let s = two_bar_c();
        assert_eq!(s.transpose(0).unwrap(), s);
        assert_eq!(s.transpose(3).unwrap().transpose(-3).unwrap(), s);
    }

    #[test]
    fn transpose_c_to_d() {
        let d = two_bar_c().transpose(2).unwrap();
        assert_eq!(d.key, Key::major(2));
        assert_eq!(d.bars[0].notes[0].pitch().unwrap().midi(), 62);
        assert_eq!(d.bars[0].chords[0].chord, ChordSymbol::new(2, Quality::Maj));
        assert_eq!(d.bars[1].chords[0].chord, ChordSymbol::new(9, Quality::Dom7));
    }

    #[test]
    fn transpose_out_of_range_names_the_note() {
        let mut s = two_bar_c();
        s.bars[1].notes[2] = NoteEvent::note(125, b(1));
        match s.transpose(5) {
            Err(SheetError::TransposeOutOfRange { bar: 1, note: 2, pitch: 125, semitones: 5 }) => {}
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn validate_rejects_short_bar_and_bad_chords() {
        let mut s = two_bar_c();
        s.bars[1].notes[3].duration = frac(1, 2);
        assert_eq!(s.validate(), Err(SheetError::BarDuration { bar: 1, expected: b(4), found: frac(7, 2) }));
        let mut s = two_bar_c();
        s.bars[0].chords.push(ChordPlacement { beat: b(0), chord: ChordSymbol::new(5, Quality::Maj) });
        assert!(matches!(s.validate(), Err(SheetError::ChordPosition { bar: 0, .. })));
        let mut s = two_bar_c();
        s.bars[0].chords[0].beat = b(4);
        assert!(matches!(s.validate(), Err(SheetError::ChordPosition { bar: 0, .. })));
    }

    #[test]
    fn tied_rest_is_invalid() {
        let mut s = LeadSheet::empty(Key::major(0), Meter::new(3, 4).unwrap(), 1);
        s.bars[0].notes[0].tied_to_next = true;
        assert!(matches!(s.validate(), Err(SheetError::Note { .. })));
    }

    #[test]
    fn ties_merge_into_one_sounding_note() {
        let mut s = two_bar_c();
        s.bars[0].notes[3] = NoteEvent { tied_to_next: true, ..NoteEvent::note(67, b(1)) };
        s.bars[1].notes[0] = NoteEvent::note(67, b(1));
        let notes = s.sounding_notes();
        assert_eq!(notes.len(), 7);
        assert_eq!(notes[3].duration, b(2));
        assert_eq!(notes[3].onset, b(3));
    }

    #[test]
    fn positions_convert() {
        let m = Meter::new(3, 4).unwrap();
        let p = SheetPos::new(2, frac(3, 2));
        assert_eq!(p.absolute(&m), frac(15, 2));
        assert_eq!(SheetPos::from_absolute(frac(15, 2), &m), p);
        assert!(SheetPos::new(1, b(2)) < SheetPos::new(2, b(0)));
    }

    #[test]
    fn chord_symbol_text_form() {
        let c: ChordSymbol = "G:dom7/B".parse().unwrap();
        assert_eq!(c, ChordSymbol { bass: PitchClass::new(11), ..ChordSymbol::new(7, Quality::Dom7) });
        assert_eq!(c.to_string(), "G:dom7/B");
        assert_eq!(serde_json::to_string(&c).unwrap(), "\"G:dom7/B\"");
        assert!("G7".parse::<ChordSymbol>().is_err());
    }

    #[test]
    fn lenient_quality_parsing() {
        assert_eq!(Quality::parse_lenient("min7"), (Quality::Min7, false));
        assert_eq!(Quality::parse_lenient("m7"), (Quality::Min7, false));
        assert_eq!(Quality::parse_lenient("m9"), (Quality::Min, true));
        assert_eq!(Quality::parse_lenient("hdim7"), (Quality::Dim, true));
        assert_eq!(Quality::parse_lenient("13"), (Quality::Maj, true));
    }
}

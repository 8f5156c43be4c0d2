//! JSON lead-sheet documents.
//!
//! ```json
//! {"key":"C","mode":"major","meter":[4,4],
//!  "bars":[{"notes":[{"pitch":60,"dur":"1"},{"rest":true,"dur":"3"}],
//!           "chords":[{"beat":"0","root":"C","quality":"maj"}]}]}
//! ```
//!
//! Durations and beat positions are strings holding an integer or an `n/d`
//! fraction. Canonical output spells note names with sharps and omits
//! `tie`, `bass` and `lyrics` when they carry no information.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Bar, Beats, ChordPlacement, ChordSymbol, Key, LeadSheet, Meter, Mode, NoteContent, NoteEvent, Pitch, PitchClass,
    Quality, SheetError,
};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SheetDoc {
    key: String,
    mode: String,
    meter: [u32; 2],
    bars: Vec<BarDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lyrics: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BarDoc {
    notes: Vec<NoteDoc>,
    #[serde(default)]
    chords: Vec<ChordDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoteDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pitch: Option<i64>,
    #[serde(default, skip_serializing_if = "is_false")]
    rest: bool,
    dur: String,
    #[serde(default, skip_serializing_if = "is_false")]
    tie: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChordDoc {
    beat: String,
    root: String,
    quality: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bass: Option<String>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Parses `"3"`, `"3/2"` or `"-1/4"` into exact beats.
pub fn parse_beats(s: &str) -> Option<Beats> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Beats::new(n, d))
        }
        None => s.parse::<i64>().ok().map(Beats::from_integer),
    }
}

fn schema(location: String, message: impl Into<String>) -> SheetError {
    SheetError::Schema { location, message: message.into() }
}

impl TryFrom<SheetDoc> for LeadSheet {
    type Error = SheetError;

    fn try_from(doc: SheetDoc) -> Result<Self, SheetError> {
        let tonic = PitchClass::from_name(&doc.key)
            .ok_or_else(|| schema("key".into(), format!("unknown key {:?}", doc.key)))?;
        let mode = match doc.mode.to_ascii_lowercase().as_str() {
            "major" => Mode::Major,
            "minor" => Mode::Minor,
            other => return Err(schema("mode".into(), format!("unknown mode {:?}", other))),
        };
        let meter = Meter::new(doc.meter[0], doc.meter[1])?;
        let mut bars = Vec::with_capacity(doc.bars.len());
        for (b, bar) in doc.bars.into_iter().enumerate() {
            let mut notes = Vec::with_capacity(bar.notes.len());
            for (n, note) in bar.notes.into_iter().enumerate() {
                let loc = || format!("bars[{}].notes[{}]", b, n);
                let duration =
                    parse_beats(&note.dur).ok_or_else(|| schema(loc(), format!("bad duration {:?}", note.dur)))?;
                let content = match (note.pitch, note.rest) {
                    (Some(p), false) => NoteContent::Pitch(
                        Pitch::new(p.clamp(-1, 128) as i32)
                            .ok_or_else(|| schema(loc(), format!("pitch {} outside 0-127", p)))?,
                    ),
                    (None, true) => NoteContent::Rest,
                    (Some(_), true) => return Err(schema(loc(), "note has both pitch and rest")),
                    (None, false) => return Err(schema(loc(), "note needs a pitch or rest:true")),
                };
                notes.push(NoteEvent { content, duration, tied_to_next: note.tie });
            }
            let mut chords = Vec::with_capacity(bar.chords.len());
            for (c, chord) in bar.chords.into_iter().enumerate() {
                let loc = || format!("bars[{}].chords[{}]", b, c);
                let beat =
                    parse_beats(&chord.beat).ok_or_else(|| schema(loc(), format!("bad beat {:?}", chord.beat)))?;
                let root = PitchClass::from_name(&chord.root)
                    .ok_or_else(|| schema(loc(), format!("unknown root {:?}", chord.root)))?;
                let (quality, approximated) = Quality::parse_lenient(&chord.quality);
                if approximated {
                    log::warn!("{}: quality {:?} mapped to {}", loc(), chord.quality, quality);
                }
                let bass = match chord.bass {
                    Some(name) => Some(
                        PitchClass::from_name(&name)
                            .ok_or_else(|| schema(loc(), format!("unknown bass {:?}", name)))?,
                    ),
                    None => None,
                };
                chords.push(ChordPlacement { beat, chord: ChordSymbol { root, quality, bass } });
            }
            bars.push(Bar { notes, chords });
        }
        let sheet = LeadSheet { key: Key { tonic, mode }, meter, bars, lyrics: doc.lyrics };
        sheet.validate()?;
        Ok(sheet)
    }
}

impl From<&LeadSheet> for SheetDoc {
    fn from(sheet: &LeadSheet) -> Self {
        SheetDoc {
            key: sheet.key.tonic.name().to_string(),
            mode: match sheet.key.mode {
                Mode::Major => "major".into(),
                Mode::Minor => "minor".into(),
            },
            meter: [sheet.meter.beats_per_bar, sheet.meter.beat_unit],
            bars: sheet
                .bars
                .iter()
                .map(|bar| BarDoc {
                    notes: bar
                        .notes
                        .iter()
                        .map(|n| NoteDoc {
                            pitch: n.pitch().map(|p| p.midi() as i64),
                            rest: n.is_rest(),
                            dur: n.duration.to_string(),
                            tie: n.tied_to_next,
                        })
                        .collect(),
                    chords: bar
                        .chords
                        .iter()
                        .map(|c| ChordDoc {
                            beat: c.beat.to_string(),
                            root: c.chord.root.name().to_string(),
                            quality: c.chord.quality.symbol().to_string(),
                            bass: c.chord.bass.map(|b| b.name().to_string()),
                        })
                        .collect(),
                })
                .collect(),
            lyrics: sheet.lyrics.clone(),
        }
    }
}

impl Serialize for LeadSheet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SheetDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LeadSheet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = SheetDoc::deserialize(deserializer)?;
        LeadSheet::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// Parses a lead-sheet document from text.
pub fn parse_leadsheet(text: &str) -> Result<LeadSheet, SheetError> {
    let doc: SheetDoc = serde_json::from_str(text)
        .map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    LeadSheet::try_from(doc)
}

/// Reads and parses a lead-sheet document from disk.
pub fn read_leadsheet(path: impl AsRef<Path>) -> Result<LeadSheet, SheetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| SheetError::Io(format!("{}: {}", path.display(), e)))?;
    parse_leadsheet(&text).map_err(|e| match e {
        SheetError::Schema { location, message } => {
            SheetError::Schema { location: format!("{}: {}", path.display(), location), message }
        }
        other => other,
    })
}

/// Reads every `.json` lead sheet in a directory, in file-name order.
pub fn read_sheet_dir(dir: impl AsRef<Path>) -> Result<Vec<LeadSheet>, SheetError> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| SheetError::Io(format!("{}: {}", dir.display(), e)))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(read_leadsheet).collect()
}

/// Canonical pretty-printed document text.
pub fn serialize_leadsheet(sheet: &LeadSheet) -> String {
    serde_json::to_string_pretty(&SheetDoc::from(sheet)).expect("sheet documents always serialize")
}

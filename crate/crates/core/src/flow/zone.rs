//! Zones: the span and layers of a sheet selected for regeneration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sheet::{parse_beats, Beats, LeadSheet, SheetPos};

use super::FlowError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layers {
    pub melody: bool,
    pub chords: bool,
}

impl Layers {
    pub const BOTH: Layers = Layers { melody: true, chords: true };
    pub const MELODY: Layers = Layers { melody: true, chords: false };
    pub const CHORDS: Layers = Layers { melody: false, chords: true };
}

/// A half-open span `[start, end)` of a sheet plus the layers to regenerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Zone {
    pub start: SheetPos,
    pub end: SheetPos,
    pub layers: Layers,
}

impl Zone {
    pub fn new(start: SheetPos, end: SheetPos, layers: Layers) -> Self {
        Zone { start, end, layers }
    }

    /// Whole bars `first..last` (end exclusive) on both layers.
    pub fn bars(first: usize, last: usize) -> Self {
        Zone::new(SheetPos::bar_start(first), SheetPos::bar_start(last), Layers::BOTH)
    }

    pub fn with_layers(mut self, layers: Layers) -> Self {
        self.layers = layers;
        self
    }

    /// Checks the zone against a sheet's bounds.
    pub fn validate(&self, sheet: &LeadSheet) -> Result<(), FlowError> {
        let invalid = |message: String| Err(FlowError::Zone(format!("{}: {}", self, message)));
        if !self.layers.melody && !self.layers.chords {
            return invalid("no layer selected".into());
        }
        let bar_len = sheet.bar_length();
        for pos in [self.start, self.end] {
            if pos.beat < Beats::from_integer(0) || pos.beat >= bar_len {
                return invalid(format!("beat {} is outside a bar of {} beats", pos.beat, bar_len));
            }
        }
        if self.start >= self.end {
            return invalid("start must come before end".into());
        }
        if self.end > sheet.end() {
            return invalid(format!("sheet has only {} bars", sheet.bars.len()));
        }
        Ok(())
    }

    pub fn start_abs(&self, sheet: &LeadSheet) -> Beats {
        self.start.absolute(&sheet.meter)
    }

    pub fn end_abs(&self, sheet: &LeadSheet) -> Beats {
        self.end.absolute(&sheet.meter)
    }

    pub fn contains_abs(&self, sheet: &LeadSheet, abs: Beats) -> bool {
        self.start_abs(sheet) <= abs && abs < self.end_abs(sheet)
    }

    /// Indices of the bars the zone overlaps.
    pub fn touched_bars(&self) -> std::ops::Range<usize> {
        let last = if self.end.beat == Beats::from_integer(0) { self.end.bar } else { self.end.bar + 1 };
        self.start.bar..last
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)?;
        match (self.layers.melody, self.layers.chords) {
            (true, true) => Ok(()),
            (true, false) => write!(f, ":melody"),
            (false, true) => write!(f, ":chords"),
            (false, false) => write!(f, ":none"),
        }
    }
}

fn parse_pos(text: &str) -> Option<SheetPos> {
    let rest = text.strip_prefix('b')?;
    let (bar, beat) = rest.split_once('.')?;
    let bar: usize = bar.parse().ok()?;
    let beat = parse_beats(beat)?;
    Some(SheetPos::new(bar, beat))
}

impl FromStr for Zone {
    type Err = FlowError;

    /// Parses `b<bar>.<beat>-b<bar>.<beat>[:melody|:chords|:melody+chords]`
    /// with 0-based bars and beats as integers or fractions (`b1.3/2`).
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || FlowError::Zone(format!("cannot parse zone {:?}; expected e.g. b2.0-b6.0:melody", text));
        let (span, layers) = match text.trim().split_once(':') {
            Some((span, layers)) => (span, layers),
            None => (text.trim(), "melody+chords"),
        };
        let layers = match layers {
            "melody" => Layers::MELODY,
            "chords" => Layers::CHORDS,
            "melody+chords" | "chords+melody" | "both" => Layers::BOTH,
            _ => return Err(bad()),
        };
        let (start, end) = span.split_once('-').ok_or_else(bad)?;
        let start = parse_pos(start).ok_or_else(bad)?;
        let end = parse_pos(end).ok_or_else(bad)?;
        if start >= end {
            return Err(FlowError::Zone(format!("zone {:?} is empty: start must come before end", text)));
        }
        Ok(Zone { start, end, layers })
    }
}

impl TryFrom<String> for Zone {
    type Error = FlowError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Zone> for String {
    fn from(zone: Zone) -> String {
        zone.to_string()
    }
}

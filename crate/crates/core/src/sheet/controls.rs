//! The five musical control measures exposed to writers as sliders.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Beats, LeadSheet, SheetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlParam {
    HarmonicTightness,
    AvgMelodicInterval,
    AvgNoteDuration,
    ProportionOfRests,
    ChordChangeFrequency,
}

impl ControlParam {
    pub const ALL: [ControlParam; 5] = [
        ControlParam::HarmonicTightness,
        ControlParam::AvgMelodicInterval,
        ControlParam::AvgNoteDuration,
        ControlParam::ProportionOfRests,
        ControlParam::ChordChangeFrequency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControlParam::HarmonicTightness => "harmonic_tightness",
            ControlParam::AvgMelodicInterval => "avg_melodic_interval",
            ControlParam::AvgNoteDuration => "avg_note_duration",
            ControlParam::ProportionOfRests => "proportion_of_rests",
            ControlParam::ChordChangeFrequency => "chord_change_frequency",
        }
    }
}

/// Concrete values for all five parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub harmonic_tightness: f64,
    pub avg_melodic_interval: f64,
    pub avg_note_duration: f64,
    pub proportion_of_rests: f64,
    pub chord_change_frequency: f64,
}

impl ControlParams {
    pub fn get(&self, param: ControlParam) -> f64 {
        match param {
            ControlParam::HarmonicTightness => self.harmonic_tightness,
            ControlParam::AvgMelodicInterval => self.avg_melodic_interval,
            ControlParam::AvgNoteDuration => self.avg_note_duration,
            ControlParam::ProportionOfRests => self.proportion_of_rests,
            ControlParam::ChordChangeFrequency => self.chord_change_frequency,
        }
    }

    pub fn set(&mut self, param: ControlParam, value: f64) {
        match param {
            ControlParam::HarmonicTightness => self.harmonic_tightness = value,
            ControlParam::AvgMelodicInterval => self.avg_melodic_interval = value,
            ControlParam::AvgNoteDuration => self.avg_note_duration = value,
            ControlParam::ProportionOfRests => self.proportion_of_rests = value,
            ControlParam::ChordChangeFrequency => self.chord_change_frequency = value,
        }
    }

    /// Checks the documented ranges.
    pub fn validate(&self) -> Result<(), String> {
        let ok = (0.0..=1.0).contains(&self.harmonic_tightness)
            && self.avg_melodic_interval >= 0.0
            && self.avg_note_duration > 0.0
            && (0.0..=1.0).contains(&self.proportion_of_rests)
            && self.chord_change_frequency >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(format!("control values out of range: {:?}", self))
        }
    }
}

/// Measured controls of a sheet. Tightness and interval are `None` when the
/// sheet has too few sounding notes to define them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredControls {
    pub harmonic_tightness: Option<f64>,
    pub avg_melodic_interval: Option<f64>,
    pub avg_note_duration: f64,
    pub proportion_of_rests: f64,
    pub chord_change_frequency: f64,
}

impl MeasuredControls {
    pub fn get(&self, param: ControlParam) -> Option<f64> {
        match param {
            ControlParam::HarmonicTightness => self.harmonic_tightness,
            ControlParam::AvgMelodicInterval => self.avg_melodic_interval,
            ControlParam::AvgNoteDuration => Some(self.avg_note_duration),
            ControlParam::ProportionOfRests => Some(self.proportion_of_rests),
            ControlParam::ChordChangeFrequency => Some(self.chord_change_frequency),
        }
    }
}

/// Targets for generate-and-test selection. A `None` field is a disabled slider.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlTargets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_tightness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_melodic_interval: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_note_duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportion_of_rests: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chord_change_frequency: Option<f64>,
}

impl ControlTargets {
    pub fn get(&self, param: ControlParam) -> Option<f64> {
        match param {
            ControlParam::HarmonicTightness => self.harmonic_tightness,
            ControlParam::AvgMelodicInterval => self.avg_melodic_interval,
            ControlParam::AvgNoteDuration => self.avg_note_duration,
            ControlParam::ProportionOfRests => self.proportion_of_rests,
            ControlParam::ChordChangeFrequency => self.chord_change_frequency,
        }
    }

    pub fn set(&mut self, param: ControlParam, value: Option<f64>) {
        match param {
            ControlParam::HarmonicTightness => self.harmonic_tightness = value,
            ControlParam::AvgMelodicInterval => self.avg_melodic_interval = value,
            ControlParam::AvgNoteDuration => self.avg_note_duration = value,
            ControlParam::ProportionOfRests => self.proportion_of_rests = value,
            ControlParam::ChordChangeFrequency => self.chord_change_frequency = value,
        }
    }

    pub fn enabled(&self) -> impl Iterator<Item = (ControlParam, f64)> + '_ {
        ControlParam::ALL.into_iter().filter_map(|p| self.get(p).map(|v| (p, v)))
    }

    pub fn is_empty(&self) -> bool {
        self.enabled().next().is_none()
    }

    /// All five parameters enabled at the given values.
    pub fn all(params: &ControlParams) -> Self {
        let mut t = ControlTargets::default();
        for p in ControlParam::ALL {
            t.set(p, Some(params.get(p)));
        }
        t
    }
}

fn to_f64(b: Beats) -> f64 {
    b.to_f64().unwrap_or(f64::NAN)
}

/// Measures the five control parameters of a sheet.
///
/// * harmonic tightness: share of sounding notes whose pitch class belongs to
///   the chord in effect at their onset (the key's tonic triad before the
///   first chord);
/// * average melodic interval: mean absolute semitone step between
///   consecutive sounding notes, rests skipped;
/// * average note duration: mean length of the melody's events, with tie
///   chains counted once;
/// * proportion of rests: share of the sheet's beats that are rests;
/// * chord change frequency: chord placements that change the harmony,
///   divided by the bar count.
pub fn measure_controls(sheet: &LeadSheet) -> Result<MeasuredControls, SheetError> {
    if sheet.bars.is_empty() {
        return Err(SheetError::Empty);
    }
    let sounding = sheet.sounding_notes();
    let chords = sheet.chord_track();

    let harmonic_tightness = (!sounding.is_empty()).then(|| {
        let mut hits = 0usize;
        let mut next_chord = 0usize;
        let mut current = sheet.key.tonic_triad();
        for note in &sounding {
            while next_chord < chords.len() && chords[next_chord].0 <= note.onset {
                current = chords[next_chord].1;
                next_chord += 1;
            }
            if current.contains(note.pitch.class()) {
                hits += 1;
            }
        }
        hits as f64 / sounding.len() as f64
    });

    let avg_melodic_interval = (sounding.len() >= 2).then(|| {
        let total: i64 = sounding.windows(2).map(|w| (w[1].pitch.midi() as i64 - w[0].pitch.midi() as i64).abs()).sum();
        total as f64 / (sounding.len() - 1) as f64
    });

    let mut rest_beats = Beats::zero();
    let mut rest_events = 0usize;
    for placed in sheet.events() {
        if placed.event.is_rest() {
            rest_beats += placed.event.duration;
            rest_events += 1;
        }
    }
    let total_beats = sheet.total_beats();
    let sounding_beats = sounding.iter().fold(Beats::zero(), |acc, n| acc + n.duration);
    let event_count = sounding.len() + rest_events;
    let avg_note_duration = to_f64((sounding_beats + rest_beats) / Beats::from_integer(event_count as i64));
    let proportion_of_rests = to_f64(rest_beats / total_beats);

    let mut changes = 0usize;
    let mut previous = None;
    for (_, chord) in &chords {
        if previous != Some(*chord) {
            changes += 1;
        }
        previous = Some(*chord);
    }
    let chord_change_frequency = changes as f64 / sheet.bars.len() as f64;

    Ok(MeasuredControls {
        harmonic_tightness,
        avg_melodic_interval,
        avg_note_duration,
        proportion_of_rests,
        chord_change_frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::*;
    use super::*;

    #[test]
    fn all_rest_sheet() {
        let sheet = LeadSheet::empty(Key::major(0), Meter::new(4, 4).unwrap(), 3);
        let m = measure_controls(&sheet).unwrap();
        assert_eq!(m.proportion_of_rests, 1.0);
        assert_eq!(m.harmonic_tightness, None);
        assert_eq!(m.avg_melodic_interval, None);
        assert_eq!(m.avg_note_duration, 4.0);
        assert_eq!(m.chord_change_frequency, 0.0);
    }

    #[test]
    fn eight_quarters_two_chords() {
        let m = measure_controls(&two_bar_c()).unwrap();
        assert_eq!(m.avg_note_duration, 1.0);
        assert_eq!(m.chord_change_frequency, 1.0);
        assert_eq!(m.proportion_of_rests, 0.0);
        // |64-60|+|67-64|+|72-67|+|67-72|+|64-67|+|62-64|+|60-62| = 24 over 7 steps
        assert_eq!(m.avg_melodic_interval, Some(24.0 / 7.0));
        // bar 2 over G7 (G B D F): G4 yes, E4 no, D4 yes, C4 no
        assert_eq!(m.harmonic_tightness, Some(6.0 / 8.0));
    }

    #[test]
    fn triad_melody_is_fully_tight() {
        let notes: Vec<(Option<u8>, Beats)> = vec![(Some(60), b(1)), (Some(64), b(1)), (Some(67), b(2))];
        let sheet = sheet_from_parts(
            Key::major(0),
            Meter::new(4, 4).unwrap(),
            &notes,
            &[Some(ChordSymbol::new(0, Quality::Maj))],
        )
        .unwrap();
        assert_eq!(measure_controls(&sheet).unwrap().harmonic_tightness, Some(1.0));
    }

    #[test]
    fn notes_before_first_chord_use_tonic_triad() {
        let notes: Vec<(Option<u8>, Beats)> = vec![(Some(62), b(2)), (Some(67), b(2))];
        let mut sheet = sheet_from_parts(Key::major(0), Meter::new(4, 4).unwrap(), &notes, &[]).unwrap();
        sheet.bars[0].chords.push(ChordPlacement { beat: b(2), chord: ChordSymbol::new(7, Quality::Maj) });
        // D against C major triad misses, G against G major hits
        assert_eq!(measure_controls(&sheet).unwrap().harmonic_tightness, Some(0.5));
    }

    #[test]
    fn repeated_chord_is_not_a_change() {
        let mut sheet = two_bar_c();
        sheet.bars[1].chords[0].chord = ChordSymbol::new(0, Quality::Maj);
        assert_eq!(measure_controls(&sheet).unwrap().chord_change_frequency, 0.5);
    }

    #[test]
    fn rest_proportion_is_time_weighted() {
        let notes: Vec<(Option<u8>, Beats)> = vec![(Some(60), b(3)), (None, b(1))];
        let sheet = sheet_from_parts(Key::major(0), Meter::new(4, 4).unwrap(), &notes, &[]).unwrap();
        let m = measure_controls(&sheet).unwrap();
        assert_eq!(m.proportion_of_rests, 0.25);
        assert_eq!(m.avg_note_duration, 2.0);
        assert_eq!(m.avg_melodic_interval, None);
    }

    #[test]
    fn empty_sheet_is_an_error() {
        let sheet = LeadSheet::empty(Key::major(0), Meter::new(4, 4).unwrap(), 0);
        assert_eq!(measure_controls(&sheet), Err(SheetError::Empty));
    }

    #[test]
    fn targets_serialize_only_enabled() {
        let t = ControlTargets { proportion_of_rests: Some(0.0), ..Default::default() };
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"proportion_of_rests":0.0}"#);
        assert_eq!(t.enabled().collect::<Vec<_>>(), vec![(ControlParam::ProportionOfRests, 0.0)]);
    }
}

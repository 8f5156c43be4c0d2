//! Zone regeneration and generate-and-test selection.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampling::{self, Rng};
use crate::sheet::{
    measure_controls, Beats, ChordPlacement, ChordSymbol, ControlTargets, LeadSheet, MeasuredControls, NoteEvent,
    PlacedEvent,
};

use super::chain::{ChainSampler, Slot};
use super::style::{chord_grid, chord_tokens, MelodyToken, StyleModel};
use super::{ControlStats, FlowError, Zone};

/// Most events a single bar segment of a zone may be split into.
pub const MAX_SEGMENT_EVENTS: usize = 64;

/// Floor on the corpus standard deviation used to normalize deviations.
pub const MIN_STD: f64 = 1e-6;

fn tokenize(events: &[PlacedEvent]) -> Vec<MelodyToken> {
    let mut out = Vec::new();
    let mut tied_pitch = None;
    for placed in events {
        let pitch = placed.event.pitch().map(|p| p.midi());
        if !(pitch.is_some() && pitch == tied_pitch) {
            out.push(pitch.map_or(MelodyToken::Rest, MelodyToken::Note));
        }
        tied_pitch = if placed.event.tied_to_next { pitch } else { None };
    }
    out
}

struct MelodyPlan {
    // (bar, start beat within bar, length)
    segments: Vec<(usize, Beats, Beats)>,
    left: Vec<u32>,
    right: Vec<u32>,
}

struct ChordPlan<'m> {
    positions: Vec<Beats>,
    sampler: ChainSampler<'m, ChordSymbol>,
}

/// Everything about a zone that does not depend on the random draw.
struct Plan<'m> {
    model: &'m StyleModel,
    sheet: &'m LeadSheet,
    zone: Zone,
    melody: Option<MelodyPlan>,
    chords: Option<ChordPlan<'m>>,
}

impl<'m> Plan<'m> {
    fn new(model: &'m StyleModel, sheet: &'m LeadSheet, zone: Zone) -> Result<Self, FlowError> {
        zone.validate(sheet)?;
        let (start, end) = (zone.start_abs(sheet), zone.end_abs(sheet));
        let events = sheet.events();
        let melody = if zone.layers.melody {
            let boundary_ok = |t: Beats| t == sheet.total_beats() || events.iter().any(|e| e.onset == t);
            for (name, t) in [("start", start), ("end", end)] {
                if !boundary_ok(t) {
                    return Err(FlowError::Zone(format!(
                        "{}: zone {} falls inside a melody event; zones must start and end on note boundaries",
                        zone, name
                    )));
                }
            }
            let bar_len = sheet.bar_length();
            let segments = zone
                .touched_bars()
                .map(|b| {
                    let bar_start = bar_len * Beats::from_integer(b as i64);
                    let s = start.max(bar_start) - bar_start;
                    let e = end.min(bar_start + bar_len) - bar_start;
                    (b, s, e - s)
                })
                .collect();
            let before: Vec<PlacedEvent> = events.iter().filter(|e| e.onset < start).cloned().collect();
            let after: Vec<PlacedEvent> = events.iter().filter(|e| e.onset >= end).cloned().collect();
            let order = model.melody.max_order();
            let right: Vec<MelodyToken> = tokenize(&after).into_iter().take(order).collect();
            Some(MelodyPlan {
                segments,
                left: model.melody.encode(&tokenize(&before)),
                right: model.melody.encode(&right),
            })
        } else {
            None
        };
        let chords = if zone.layers.chords { chord_plan(model, sheet, &zone)? } else { None };
        Ok(Plan { model, sheet, zone, melody, chords })
    }

    fn melody_sampler(&self, events: usize) -> Result<ChainSampler<'m, MelodyToken>, FlowError> {
        let plan = self.melody.as_ref().expect("melody layer selected");
        let mut slots = vec![Slot::Free; events];
        slots.extend(plan.right.iter().map(|s| Slot::Pinned(*s)));
        ChainSampler::new(&self.model.melody, &plan.left, slots)
    }

    fn draw_rhythm(&self, rng: &mut Rng) -> Vec<Vec<Beats>> {
        match &self.melody {
            Some(plan) => plan
                .segments
                .iter()
                .map(|(_, _, len)| self.model.rhythm.sample_composition(*len, MAX_SEGMENT_EVENTS, rng))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Finishes one draw given its rhythm and a melody sampler for it.
    fn complete(
        &self,
        rhythm: &[Vec<Beats>],
        melody: Option<&ChainSampler<'m, MelodyToken>>,
        rng: &mut Rng,
    ) -> Result<LeadSheet, FlowError> {
        let mut out = self.sheet.clone();
        if let (Some(plan), Some(sampler)) = (&self.melody, melody) {
            let n: usize = rhythm.iter().map(Vec::len).sum();
            let symbols = sampler.sample(rng)?;
            let mut tokens = symbols[..n].iter().map(|i| *self.model.melody.symbol(*i));
            for ((bar, seg_start, seg_len), durations) in plan.segments.iter().zip(rhythm) {
                let seg_end = *seg_start + *seg_len;
                let old = &self.sheet.bars[*bar].notes;
                let mut onset = Beats::zero();
                let mut notes = Vec::new();
                let mut inserted = false;
                for note in old {
                    if onset < *seg_start || onset >= seg_end {
                        notes.push(note.clone());
                    } else if !inserted {
                        inserted = true;
                        for d in durations {
                            notes.push(match tokens.next().expect("one token per duration") {
                                MelodyToken::Note(p) => NoteEvent::note(p, *d),
                                MelodyToken::Rest => NoteEvent::rest(*d),
                            });
                        }
                    }
                    onset += note.duration;
                }
                out.bars[*bar].notes = notes;
            }
        }
        if let Some(plan) = &self.chords {
            let symbols = plan.sampler.sample(rng)?;
            let chosen: Vec<ChordSymbol> =
                symbols[..plan.positions.len()].iter().map(|i| *self.model.chords.symbol(*i)).collect();
            write_chords(&mut out, self.sheet, &self.zone, &plan.positions, &chosen);
        }
        debug_assert!(out.validate().is_ok());
        Ok(out)
    }

    fn draw(&self, rng: &mut Rng) -> Result<LeadSheet, FlowError> {
        let rhythm = self.draw_rhythm(rng);
        let sampler = match &self.melody {
            Some(_) => Some(self.melody_sampler(rhythm.iter().map(Vec::len).sum())?),
            None => None,
        };
        self.complete(&rhythm, sampler.as_ref(), rng)
    }
}

fn chord_plan<'m>(model: &'m StyleModel, sheet: &LeadSheet, zone: &Zone) -> Result<Option<ChordPlan<'m>>, FlowError> {
    let (start, end) = (zone.start_abs(sheet), zone.end_abs(sheet));
    let positions: Vec<Beats> = chord_grid(sheet).into_iter().filter(|p| start <= *p && *p < end).collect();
    if positions.is_empty() {
        return Ok(None);
    }
    let tokens = chord_tokens(sheet);
    let left: Vec<ChordSymbol> = tokens.iter().filter(|(p, _)| *p < start).map(|(_, c)| *c).collect();
    let kept_after: Vec<Beats> = sheet.chord_track().into_iter().map(|(p, _)| p).filter(|p| *p >= end).collect();
    let order = model.chords.max_order();
    let mut slots = vec![Slot::Free; positions.len()];
    let mut pinned = 0;
    for pos in chord_grid(sheet).into_iter().filter(|p| *p >= end) {
        if pinned >= order {
            break;
        }
        if kept_after.iter().any(|p| *p <= pos) {
            let chord = sheet.chord_at(pos).expect("a placement precedes this position");
            slots.push(Slot::Pinned(model.chords.index_of(&chord).unwrap_or(crate::ppm::UNKNOWN)));
            pinned += 1;
        } else {
            // the chord here is carried over from inside the zone
            slots.push(Slot::Copy);
        }
    }
    let sampler = ChainSampler::new(&model.chords, &model.chords.encode(&left), slots)?;
    Ok(Some(ChordPlan { positions, sampler }))
}

fn write_chords(out: &mut LeadSheet, original: &LeadSheet, zone: &Zone, positions: &[Beats], chosen: &[ChordSymbol]) {
    let bar_len = original.bar_length();
    let start = zone.start_abs(original);
    let kept: Vec<(Beats, ChordSymbol)> =
        original.chord_track().into_iter().filter(|(p, _)| !zone.contains_abs(original, *p)).collect();
    let mut previous = kept.iter().take_while(|(p, _)| *p < start).last().map(|(_, c)| *c);
    let mut placed = kept;
    for (pos, chord) in positions.iter().zip(chosen) {
        if previous != Some(*chord) {
            placed.push((*pos, *chord));
        }
        previous = Some(*chord);
    }
    placed.sort_by(|a, b| a.0.cmp(&b.0));
    for bar in out.bars.iter_mut() {
        bar.chords.clear();
    }
    for (pos, chord) in placed {
        let bar = (pos / bar_len).floor().to_integer() as usize;
        out.bars[bar].chords.push(ChordPlacement { beat: pos - bar_len * Beats::from_integer(bar as i64), chord });
    }
}

/// Regenerates the zone's layers of `sheet`, leaving everything else intact.
///
/// The zone's rhythm is drawn from the rhythm model so each bar segment is
/// filled exactly; melody and chord symbols are then drawn from the
/// model's distribution conditioned on the context before the zone and on
/// the pinned material after it.
pub fn regenerate_zone(model: &StyleModel, sheet: &LeadSheet, zone: &Zone, seed: u64) -> Result<LeadSheet, FlowError> {
    let model = model.covering(sheet);
    let plan = Plan::new(&model, sheet, *zone)?;
    plan.draw(&mut sampling::rng_from_seed(seed))
}

/// One candidate of a generate-and-test run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sheet: LeadSheet,
    pub measured: MeasuredControls,
    pub objective: f64,
}

/// Control measures of the bars a zone touches. The chord in effect at the
/// first touched bar is carried in so harmonic tightness sees it.
pub fn measure_zone(sheet: &LeadSheet, zone: &Zone) -> Result<MeasuredControls, FlowError> {
    let bars = zone.touched_bars();
    let mut sub =
        LeadSheet { key: sheet.key, meter: sheet.meter, bars: sheet.bars[bars.clone()].to_vec(), lyrics: None };
    let first = &mut sub.bars[0];
    if first.chords.first().is_none_or(|c| !c.beat.is_zero()) {
        if let Some(chord) = sheet.chord_at(sheet.bar_length() * Beats::from_integer(bars.start as i64)) {
            first.chords.insert(0, ChordPlacement { beat: Beats::zero(), chord });
        }
    }
    Ok(measure_controls(&sub)?)
}

/// Sum over enabled targets of the squared deviation in units of the
/// corpus standard deviation. Undefined measures count as 0.
pub fn control_objective(measured: &MeasuredControls, targets: &ControlTargets, stats: &ControlStats) -> f64 {
    targets
        .enabled()
        .map(|(param, target)| {
            let value = measured.get(param).unwrap_or(0.0);
            let std = stats.get(param).std.max(MIN_STD);
            ((value - target) / std).powi(2)
        })
        .sum()
}

/// Draws `candidates` independent regenerations, candidate `i` using stream
/// `i` of `seed`, and scores each against `targets`. This is the inspection
/// hook behind [`regenerate_with_controls`].
pub fn regenerate_candidates(
    model: &StyleModel,
    sheet: &LeadSheet,
    zone: &Zone,
    targets: &ControlTargets,
    candidates: usize,
    seed: u64,
) -> Result<Vec<Candidate>, FlowError> {
    if candidates == 0 {
        return Err(FlowError::Candidates);
    }
    let model = model.covering(sheet);
    let plan = Plan::new(&model, sheet, *zone)?;
    let draws: Vec<(Rng, Vec<Vec<Beats>>)> = (0..candidates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_stream(seed, i);
            let rhythm = plan.draw_rhythm(&mut rng);
            (rng, rhythm)
        })
        .collect();
    let mut samplers: BTreeMap<usize, ChainSampler<MelodyToken>> = BTreeMap::new();
    if plan.melody.is_some() {
        let lengths: Vec<usize> = draws.iter().map(|(_, r)| r.iter().map(Vec::len).sum()).collect();
        let mut unique = lengths.clone();
        unique.sort_unstable();
        unique.dedup();
        let built: Vec<(usize, ChainSampler<MelodyToken>)> =
            unique.into_par_iter().map(|n| plan.melody_sampler(n).map(|s| (n, s))).collect::<Result<_, _>>()?;
        samplers.extend(built);
    }
    draws
        .into_par_iter()
        .map(|(mut rng, rhythm)| {
            let n: usize = rhythm.iter().map(Vec::len).sum();
            let sheet = plan.complete(&rhythm, samplers.get(&n), &mut rng)?;
            let measured = measure_zone(&sheet, zone)?;
            let objective = control_objective(&measured, targets, &model.stats);
            Ok(Candidate { sheet, measured, objective })
        })
        .collect()
}

/// Index of the lowest objective, earliest on ties.
pub fn best_candidate(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if best.is_none_or(|b| c.objective < candidates[b].objective) {
            best = Some(i);
        }
    }
    best
}

/// Generate-and-test regeneration: the candidate closest to `targets`.
pub fn regenerate_with_controls(
    model: &StyleModel,
    sheet: &LeadSheet,
    zone: &Zone,
    targets: &ControlTargets,
    candidates: usize,
    seed: u64,
) -> Result<LeadSheet, FlowError> {
    let mut all = regenerate_candidates(model, sheet, zone, targets, candidates, seed)?;
    let best = best_candidate(&all).expect("at least one candidate");
    Ok(all.swap_remove(best).sheet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::build_style_model;
    use crate::flow::Layers;
    use crate::sheet::fixtures::{b, two_bar_c};
    use crate::sheet::{serialize_leadsheet, Key, Meter, Quality, SheetPos};

    fn model() -> StyleModel {
        build_style_model(&[two_bar_c()], &(-2..=2).collect(), 2).unwrap().0
    }

    fn four_bars() -> LeadSheet {
        let mut sheet = two_bar_c();
        sheet.bars.extend(two_bar_c().bars);
        sheet
    }

    #[test]
    fn empty_sheet_gets_an_unconditional_sample() {
        let sheet = LeadSheet::empty(Key::major(0), Meter::new(4, 4).unwrap(), 4);
        let out = regenerate_zone(&model(), &sheet, &Zone::bars(0, 4), 7).unwrap();
        out.validate().unwrap();
        assert!(!out.chord_track().is_empty());
    }

    #[test]
    fn chords_only_leaves_melody_alone() {
        let sheet = four_bars();
        let out = regenerate_zone(&model(), &sheet, &Zone::bars(1, 3).with_layers(Layers::CHORDS), 3).unwrap();
        for (a, b) in sheet.bars.iter().zip(&out.bars) {
            assert_eq!(a.notes, b.notes);
        }
        assert_eq!(out.bars[0], sheet.bars[0]);
        assert_eq!(out.bars[3], sheet.bars[3]);
    }

    #[test]
    fn melody_only_leaves_outside_bars_alone() {
        let sheet = four_bars();
        let out = regenerate_zone(&model(), &sheet, &Zone::bars(1, 3).with_layers(Layers::MELODY), 5).unwrap();
        assert_eq!(out.bars[0], sheet.bars[0]);
        assert_eq!(out.bars[3], sheet.bars[3]);
        for (a, b) in sheet.bars.iter().zip(&out.bars) {
            assert_eq!(a.chords, b.chords);
        }
        let again = regenerate_zone(&model(), &sheet, &Zone::bars(1, 3).with_layers(Layers::MELODY), 5).unwrap();
        assert_eq!(serialize_leadsheet(&out), serialize_leadsheet(&again));
    }

    #[test]
    fn carried_chords_after_the_zone_stay_consistent() {
        // bar 1's chord carries into bar 2 when bar 2 has none
        let mut sheet = four_bars();
        sheet.bars[2].chords.clear();
        let zone = Zone::bars(1, 2).with_layers(Layers::CHORDS);
        for seed in 0..20 {
            let out = regenerate_zone(&model(), &sheet, &zone, seed).unwrap();
            assert_eq!(out.bars[2].chords, vec![]);
            assert_eq!(out.chord_at(b(8)), out.chord_at(b(7)));
            assert_eq!(out.chord_at(b(12)), sheet.chord_at(b(12)));
        }
    }

    #[test]
    fn misaligned_zone_is_rejected() {
        let sheet = four_bars();
        let zone = Zone::new(SheetPos::new(0, Beats::new(1, 2)), SheetPos::bar_start(1), Layers::MELODY);
        assert!(matches!(regenerate_zone(&model(), &sheet, &zone, 0), Err(FlowError::Zone(_))));
        // the same span on the chord layer is fine
        assert!(regenerate_zone(&model(), &sheet, &zone.with_layers(Layers::CHORDS), 0).is_ok());
    }

    #[test]
    fn single_candidate_matches_plain_regeneration() {
        let sheet = four_bars();
        let zone = Zone::bars(1, 3);
        let plain = regenerate_zone(&model(), &sheet, &zone, 42).unwrap();
        let targets = ControlTargets { proportion_of_rests: Some(0.0), ..Default::default() };
        let one = regenerate_with_controls(&model(), &sheet, &zone, &targets, 1, 42).unwrap();
        assert_eq!(plain, one);
        let vacuous = regenerate_with_controls(&model(), &sheet, &zone, &ControlTargets::default(), 10, 42).unwrap();
        assert_eq!(plain, vacuous);
        assert!(matches!(regenerate_candidates(&model(), &sheet, &zone, &targets, 0, 1), Err(FlowError::Candidates)));
    }

    #[test]
    fn returned_candidate_minimizes_the_objective() {
        let sheet = four_bars();
        let targets = ControlTargets { avg_melodic_interval: Some(1.0), ..Default::default() };
        let all = regenerate_candidates(&model(), &sheet, &Zone::bars(0, 4), &targets, 30, 9).unwrap();
        let best = best_candidate(&all).unwrap();
        assert!(all.iter().all(|c| all[best].objective <= c.objective));
        let chosen = regenerate_with_controls(&model(), &sheet, &Zone::bars(0, 4), &targets, 30, 9).unwrap();
        assert_eq!(chosen, all[best].sheet);
    }

    #[test]
    fn unseen_chords_in_the_sheet_are_covered() {
        let mut sheet = four_bars();
        sheet.bars[3].chords[0].chord = ChordSymbol::new(1, Quality::Dim);
        let out = regenerate_zone(&model(), &sheet, &Zone::bars(1, 3), 1).unwrap();
        assert_eq!(out.bars[3], sheet.bars[3]);
    }
}

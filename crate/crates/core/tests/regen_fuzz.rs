//! Regeneration never touches material outside its zone.

use std::collections::BTreeSet;
use std::path::PathBuf;

use greenroom::compose::{generate_leadsheet, read_chord_corpus, ComposerModels, GenerateRequest, RuleSet};
use greenroom::flow::{regenerate_with_controls, regenerate_zone, FlowError, Layers, StyleConfig, StyleModel, Zone};
use greenroom::sampling::rng_from_seed;
use greenroom::sheet::{read_sheet_dir, serialize_leadsheet, ControlTargets, Key, Meter, SheetPos};
use greenroom::{Beats, LeadSheet};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn beats(s: &str) -> Beats {
    greenroom::sheet::parse_beats(s).unwrap()
}

/// (onset, serialized item) pairs of the melody and chord tracks of a document.
fn tracks(sheet: &LeadSheet) -> (Vec<(Beats, Value)>, Vec<(Beats, Value)>, Value) {
    let mut doc: Value = serde_json::from_str(&serialize_leadsheet(sheet)).unwrap();
    let bar_len = sheet.bar_length();
    let (mut notes, mut chords) = (Vec::new(), Vec::new());
    for (b, bar) in doc["bars"].as_array().unwrap().iter().enumerate() {
        let start = bar_len * Beats::from_integer(b as i64);
        let mut t = start;
        for n in bar["notes"].as_array().unwrap() {
            notes.push((t, n.clone()));
            t += beats(n["dur"].as_str().unwrap());
        }
        for c in bar["chords"].as_array().unwrap() {
            chords.push((start + beats(c["beat"].as_str().unwrap()), c.clone()));
        }
    }
    doc.as_object_mut().unwrap().remove("bars");
    (notes, chords, doc)
}

fn outside_diff(before: &LeadSheet, after: &LeadSheet, zone: &Zone) -> Option<String> {
    let (start, end) = (zone.start_abs(before), zone.end_abs(before));
    let outside = |items: Vec<(Beats, Value)>, layer: bool| -> Vec<(Beats, Value)> {
        items.into_iter().filter(|(t, _)| !layer || *t < start || *t >= end).collect()
    };
    let (bn, bc, bhead) = tracks(before);
    let (an, ac, ahead) = tracks(after);
    if bhead != ahead {
        return Some("header changed".into());
    }
    if before.bars.len() != after.bars.len() {
        return Some("bar count changed".into());
    }
    if outside(bn, zone.layers.melody) != outside(an, zone.layers.melody) {
        return Some("melody outside the zone changed".into());
    }
    if outside(bc, zone.layers.chords) != outside(ac, zone.layers.chords) {
        return Some("chords outside the zone changed".into());
    }
    None
}

fn random_zone(sheet: &LeadSheet, rng: &mut impl Rng) -> Zone {
    let mut cuts: BTreeSet<Beats> = sheet.events().iter().map(|e| e.onset).collect();
    cuts.insert(sheet.total_beats());
    let cuts: Vec<Beats> = cuts.into_iter().collect();
    let i = rng.gen_range(0..cuts.len() - 1);
    let j = rng.gen_range(i + 1..cuts.len());
    let layers = *[Layers::BOTH, Layers::MELODY, Layers::CHORDS].choose(rng).unwrap();
    Zone::new(SheetPos::from_absolute(cuts[i], &sheet.meter), SheetPos::from_absolute(cuts[j], &sheet.meter), layers)
}

fn fixtures() -> (StyleModel, Vec<LeadSheet>) {
    let corpus = read_sheet_dir(data("corpora/showtunes")).unwrap();
    let config = StyleConfig { max_order: 2, transpositions: [0, 2, -3].into() };
    let (model, _) = config.build(&corpus).unwrap();
    let composer = ComposerModels::train(&corpus, &read_chord_corpus(data("corpora/showtunes")).unwrap(), 2).unwrap();
    let mut sheets = corpus.clone();
    for seed in 0..12u64 {
        let request = GenerateRequest {
            bars: 2 + seed as usize % 5,
            meter: if seed % 3 == 0 { Meter::new(3, 4).unwrap() } else { Meter::new(4, 4).unwrap() },
            key: Key::major((seed * 5 % 12) as u8),
            lyric: None,
        };
        sheets.push(generate_leadsheet(&composer, &RuleSet::default(), &request, seed).unwrap());
    }
    (model, sheets)
}

#[test]
fn pinned_material_is_untouched() {
    let (model, sheets) = fixtures();
    let mut rng = rng_from_seed(31);
    let mut checked = 0;
    for case in 0..200u64 {
        let sheet = sheets.choose(&mut rng).unwrap();
        let zone = random_zone(sheet, &mut rng);
        match regenerate_zone(&model, sheet, &zone, case) {
            Ok(next) => {
                next.validate().unwrap();
                if let Some(diff) = outside_diff(sheet, &next, &zone) {
                    panic!("case {} zone {}: {}", case, zone, diff);
                }
                checked += 1;
            }
            Err(FlowError::NoCompletion) => {}
            Err(e) => panic!("case {} zone {}: {}", case, zone, e),
        }
    }
    assert!(checked > 150, "only {} cases produced a completion", checked);
}

#[test]
fn controls_pick_the_closest_candidate() {
    let (model, sheets) = fixtures();
    let sheet = &sheets[0];
    let zone: Zone = "b2.0-b6.0:melody".parse().unwrap();
    let slow = ControlTargets { avg_note_duration: Some(2.0), ..Default::default() };
    let fast = ControlTargets { avg_note_duration: Some(0.5), ..Default::default() };
    let measure = |t: &ControlTargets| {
        let s = regenerate_with_controls(&model, sheet, &zone, t, 60, 4).unwrap();
        greenroom::flow::measure_zone(&s, &zone).unwrap().avg_note_duration
    };
    assert!(measure(&slow) > measure(&fast));
}

#[test]
fn regeneration_is_reproducible() {
    let (model, sheets) = fixtures();
    let zone: Zone = "b1.0-b3.0".parse().unwrap();
    let a = regenerate_with_controls(&model, &sheets[1], &zone, &ControlTargets::default(), 8, 77).unwrap();
    let b = regenerate_with_controls(&model, &sheets[1], &zone, &ControlTargets::default(), 8, 77).unwrap();
    assert_eq!(serialize_leadsheet(&a), serialize_leadsheet(&b));
}

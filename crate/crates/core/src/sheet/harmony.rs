//! Harmonic-function analysis of chord progressions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChordSymbol, Key, LeadSheet};

const ROMAN: [&str; 7] = ["I", "II", "III", "IV", "V", "VI", "VII"];

/// Roman-numeral function of a chord root in `key`, or `"chromatic"`.
pub fn scale_degree_function(key: &Key, chord: &ChordSymbol) -> &'static str {
    match key.degree_of(chord.root) {
        Some(d) => ROMAN[d as usize - 1],
        None => "chromatic",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicStats {
    pub counts: BTreeMap<String, usize>,
    /// Number of adjacent chord pairs examined.
    pub pairs: usize,
    /// Share of adjacent pairs in which either chord is IV; 0 when there are no pairs.
    pub subdominant_progression_fraction: f64,
}

pub fn harmonic_function_stats(sheet: &LeadSheet) -> HarmonicStats {
    let functions: Vec<&str> = sheet.chord_track().iter().map(|(_, c)| scale_degree_function(&sheet.key, c)).collect();
    let mut counts = BTreeMap::new();
    for f in &functions {
        *counts.entry(f.to_string()).or_insert(0) += 1;
    }
    let pairs = functions.len().saturating_sub(1);
    let with_iv = functions.windows(2).filter(|w| w[0] == "IV" || w[1] == "IV").count();
    let subdominant_progression_fraction = if pairs == 0 { 0.0 } else { with_iv as f64 / pairs as f64 };
    HarmonicStats { counts, pairs, subdominant_progression_fraction }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::*;
    use super::*;

    fn progression(key: Key, roots: &[(u8, Quality)]) -> LeadSheet {
        let meter = Meter::new(4, 4).unwrap();
        let notes: Vec<(Option<u8>, Beats)> = roots.iter().map(|_| (None, b(4))).collect();
        let chords: Vec<Option<ChordSymbol>> = roots.iter().map(|(r, q)| Some(ChordSymbol::new(*r, *q))).collect();
        sheet_from_parts(key, meter, &notes, &chords).unwrap()
    }

    #[test]
    fn c_f_g_c_has_two_thirds_subdominant() {
        let s =
            progression(Key::major(0), &[(0, Quality::Maj), (5, Quality::Maj), (7, Quality::Maj), (0, Quality::Maj)]);
        let stats = harmonic_function_stats(&s);
        assert_eq!(stats.counts["I"], 2);
        assert_eq!(stats.counts["IV"], 1);
        assert_eq!(stats.counts["V"], 1);
        assert_eq!(stats.pairs, 3);
        assert_eq!(stats.subdominant_progression_fraction, 2.0 / 3.0);
    }

    #[test]
    fn no_subdominant_and_single_chord() {
        let s = progression(Key::major(0), &[(0, Quality::Maj), (7, Quality::Dom7), (9, Quality::Min)]);
        assert_eq!(harmonic_function_stats(&s).subdominant_progression_fraction, 0.0);
        let s = progression(Key::major(0), &[(5, Quality::Maj)]);
        let stats = harmonic_function_stats(&s);
        assert_eq!(stats.pairs, 0);
        assert_eq!(stats.subdominant_progression_fraction, 0.0);
    }

    #[test]
    fn minor_key_and_chromatic_roots() {
        let s =
            progression(Key::minor(9), &[(9, Quality::Min), (2, Quality::Min), (3, Quality::Dim), (0, Quality::Maj)]);
        let stats = harmonic_function_stats(&s);
        assert_eq!(stats.counts["I"], 1);
        assert_eq!(stats.counts["IV"], 1);
        assert_eq!(stats.counts["chromatic"], 1);
        assert_eq!(stats.counts["III"], 1);
        assert_eq!(stats.counts.values().sum::<usize>(), 4);
    }
}

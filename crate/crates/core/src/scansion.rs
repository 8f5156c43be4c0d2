//! Basic metrical stress analysis of lyric lines.
//!
//! Each whitespace-separated token is split into syllables at maximal vowel
//! groups (`a e i o u`, and `y` except word-initially). A word-final lone `e`
//! after a consonant is silent when another vowel group exists, except in
//! `-le` endings. Stress comes from the bundled lexicon when it knows the
//! word with the same syllable count; otherwise monosyllables are stressed
//! unless they are function words, and longer words stress their first
//! syllable. Tokens without vowels become one unstressed syllable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syllable {
    pub text: String,
    pub stressed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StressPattern {
    pub syllables: Vec<Syllable>,
}

impl StressPattern {
    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    /// Compact notation: `/` stressed, `x` unstressed.
    pub fn notation(&self) -> String {
        self.syllables.iter().map(|s| if s.stressed { '/' } else { 'x' }).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScansionError {
    #[error("lyric line is empty")]
    Empty,
}

fn vowel_flags(chars: &[char]) -> Vec<bool> {
    let first_letter = chars.iter().position(|c| c.is_alphabetic());
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| match c.to_ascii_lowercase() {
            'a' | 'e' | 'i' | 'o' | 'u' => true,
            'y' => Some(i) != first_letter,
            _ => false,
        })
        .collect()
}

/// Splits one token into syllable fragments whose concatenation is the token.
fn segment(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let vowels = vowel_flags(&chars);
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if vowels[i] {
            let start = i;
            while i < chars.len() && vowels[i] {
                i += 1;
            }
            groups.push((start, i));
        } else {
            i += 1;
        }
    }
    let letters: String = chars.iter().filter(|c| c.is_alphabetic()).map(|c| c.to_ascii_lowercase()).collect();
    if groups.len() > 1 {
        let (start, end) = *groups.last().unwrap();
        let last_letter = chars.iter().rposition(|c| c.is_alphabetic());
        let lone_final_e = end - start == 1 && chars[start].eq_ignore_ascii_case(&'e') && last_letter == Some(start);
        let after_consonant = start > 0 && chars[start - 1].is_alphabetic() && !vowels[start - 1];
        if lone_final_e && after_consonant && !letters.ends_with("le") {
            groups.pop();
        }
    }
    if groups.len() <= 1 {
        return vec![token.to_string()];
    }
    let mut cuts = vec![0];
    for w in groups.windows(2) {
        let (prev_end, next_start) = (w[0].1, w[1].0);
        let cut = if next_start > prev_end { next_start - 1 } else { next_start };
        cuts.push(cut);
    }
    cuts.push(chars.len());
    cuts.windows(2).map(|c| chars[c[0]..c[1]].iter().collect()).collect()
}

fn scan_token(token: &str) -> Vec<Syllable> {
    let fragments = segment(token);
    let word: String = token.chars().filter(|c| c.is_alphabetic()).flat_map(|c| c.to_lowercase()).collect();
    let has_vowel = vowel_flags(&token.chars().collect::<Vec<_>>()).contains(&true);
    let stresses: Vec<bool> = if !has_vowel {
        vec![false]
    } else if fragments.len() == 1 {
        vec![!words::is_stop_word(&word)]
    } else {
        match words::stress_lexicon().get(word.as_str()) {
            Some(pattern) if pattern.len() == fragments.len() => pattern.clone(),
            _ => (0..fragments.len()).map(|i| i == 0).collect(),
        }
    };
    fragments.into_iter().zip(stresses).map(|(text, stressed)| Syllable { text, stressed }).collect()
}

/// Syllabifies a lyric line and assigns stress.
pub fn analyze_scansion(line: &str) -> Result<StressPattern, ScansionError> {
    let syllables: Vec<Syllable> = line.split_whitespace().flat_map(scan_token).collect();
    if syllables.is_empty() {
        return Err(ScansionError::Empty);
    }
    Ok(StressPattern { syllables })
}

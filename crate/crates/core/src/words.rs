// Bundled word lists.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

const STOP_WORDS: &str = include_str!("../data/stopwords.txt");
const STRESS_LEXICON: &str = include_str!("../data/stress.txt");

/// English function words, lowercase.
pub fn stop_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOP_WORDS.lines().map(str::trim).filter(|l| !l.is_empty()).collect())
}

pub fn is_stop_word(word: &str) -> bool {
    stop_words().contains(word)
}

/// Stress patterns of common polysyllabic words, `true` = stressed.
pub fn stress_lexicon() -> &'static HashMap<&'static str, Vec<bool>> {
    static MAP: OnceLock<HashMap<&'static str, Vec<bool>>> = OnceLock::new();
    MAP.get_or_init(|| {
        STRESS_LEXICON
            .lines()
            .filter(|l| !l.starts_with('#'))
            .filter_map(|l| l.split_once(' '))
            .map(|(w, p)| (w, p.trim().chars().map(|c| c == '1').collect()))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_lists_have_expected_sizes() {
        assert_eq!(stop_words().len(), 127);
        assert_eq!(stress_lexicon().len(), 2000);
        assert!(is_stop_word("the"));
        assert_eq!(stress_lexicon()["remember"], vec![false, true, false]);
    }
}

//! Character-level lyric generation and song-type word clouds.
//!
//! The language model is the PPM engine over printable ASCII plus newline.
//! Training runs in stages (for example general verse, then show lyrics),
//! each stage's counts scaled by its weight relative to the lightest stage,
//! so later, heavier stages dominate the style. The creativity factor in
//! `[0, 1]` is the sampling temperature, floored at 0.05, with exactly 0
//! meaning always take the most likely character.
//!
//! ```
//! use greenroom::lyrics::{generate_lyrics, train_char_lm, Creativity, TrainingStage};
//!
//! let stage = TrainingStage::new("show", vec!["we will walk the road together\n".into()], 1.0);
//! let model = train_char_lm(&[stage], 4).unwrap();
//! let out = generate_lyrics(&model, Creativity::new(0.7).unwrap(), 40, Some("we "), 11).unwrap();
//! assert!(out.text.chars().count() <= 40);
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ppm::{PpmError, PpmModel, Temperature};
use crate::sampling;
use crate::words::is_stop_word;

pub const DEFAULT_ORDER: usize = 6;

/// Tokens kept in a word cloud.
pub const CLOUD_SIZE: usize = 200;

/// Lowest temperature reached through the creativity factor.
pub const MIN_TEMPERATURE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LyricsError {
    #[error("at least one training stage is required")]
    NoStages,
    #[error("stage {stage}: weight must be positive and finite, got {weight}")]
    Weight { stage: String, weight: f64 },
    #[error("max_order must be at least 1")]
    Order,
    #[error("creativity must be within 0 and 1, got {0}")]
    Creativity(f64),
    #[error("max_chars must be at least 1")]
    MaxChars,
    #[error("no lyrics of type {0}")]
    EmptySongType(SongType),
    #[error("unknown song type {0:?}")]
    UnknownSongType(String),
    #[error(transparent)]
    Ppm(#[from] PpmError),
    #[error("{0}")]
    Document(String),
}

/// The model's alphabet: printable ASCII and newline.
pub fn alphabet() -> Vec<char> {
    let mut out: Vec<char> = (0x20u8..=0x7e).map(char::from).collect();
    out.push('\n');
    out
}

fn in_alphabet(c: char) -> bool {
    c == '\n' || (' '..='~').contains(&c)
}

/// Replaces characters outside the alphabet with spaces, returning the
/// cleaned text and the number of replacements.
pub fn sanitize(text: &str) -> (String, usize) {
    let mut replaced = 0;
    let clean = text
        .chars()
        .map(|c| {
            if in_alphabet(c) {
                c
            } else {
                replaced += 1;
                ' '
            }
        })
        .collect();
    (clean, replaced)
}

/// One training stage: named documents sharing a weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingStage {
    pub name: String,
    pub documents: Vec<String>,
    pub weight: f64,
}

impl TrainingStage {
    pub fn new(name: &str, documents: Vec<String>, weight: f64) -> Self {
        TrainingStage { name: name.into(), documents, weight }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub name: String,
    pub weight: f64,
    pub documents: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharLm {
    pub model: PpmModel<char>,
    pub stages: Vec<StageSummary>,
    /// Characters replaced during training.
    pub replaced_chars: usize,
}

/// Trains a character model stage by stage. Every stage's counts are
/// multiplied by `weight / min_weight`.
pub fn train_char_lm(stages: &[TrainingStage], max_order: usize) -> Result<CharLm, LyricsError> {
    if stages.is_empty() {
        return Err(LyricsError::NoStages);
    }
    if max_order < 1 {
        return Err(LyricsError::Order);
    }
    for s in stages {
        if !(s.weight > 0.0 && s.weight.is_finite()) {
            return Err(LyricsError::Weight { stage: s.name.clone(), weight: s.weight });
        }
    }
    let lightest = stages.iter().map(|s| s.weight).fold(f64::INFINITY, f64::min);
    let mut model = PpmModel::new(alphabet(), max_order);
    let mut replaced_chars = 0;
    for stage in stages {
        let scale = stage.weight / lightest;
        for doc in &stage.documents {
            let (clean, replaced) = sanitize(doc);
            replaced_chars += replaced;
            let chars: Vec<char> = clean.chars().collect();
            if !chars.is_empty() {
                model.train_weighted(&chars, scale)?;
            }
        }
    }
    if replaced_chars > 0 {
        log::warn!("replaced {} characters outside the lyric alphabet with spaces", replaced_chars);
    }
    let stages = stages
        .iter()
        .map(|s| StageSummary { name: s.name.clone(), weight: s.weight, documents: s.documents.len() })
        .collect();
    Ok(CharLm { model, stages, replaced_chars })
}

/// The writer-facing creativity control, in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Creativity(f64);

impl Creativity {
    pub fn new(value: f64) -> Result<Self, LyricsError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Creativity(value))
        } else {
            Err(LyricsError::Creativity(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn temperature(self) -> Temperature {
        if self.0 == 0.0 {
            Temperature::Argmax
        } else {
            Temperature::Scaled(self.0.max(MIN_TEMPERATURE))
        }
    }
}

impl TryFrom<f64> for Creativity {
    type Error = LyricsError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Creativity::new(value)
    }
}

impl From<Creativity> for f64 {
    fn from(c: Creativity) -> f64 {
        c.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedLyrics {
    pub text: String,
    /// Entropy in nats of each step's sampling distribution.
    pub entropies: Vec<f64>,
}

impl GeneratedLyrics {
    pub fn mean_entropy(&self) -> f64 {
        if self.entropies.is_empty() {
            0.0
        } else {
            self.entropies.iter().sum::<f64>() / self.entropies.len() as f64
        }
    }
}

/// Generates up to `max_chars` characters continuing `seed_text`, stopping
/// early after a blank line (two newlines in a row).
pub fn generate_lyrics(
    lm: &CharLm,
    creativity: Creativity,
    max_chars: usize,
    seed_text: Option<&str>,
    seed: u64,
) -> Result<GeneratedLyrics, LyricsError> {
    if max_chars == 0 {
        return Err(LyricsError::MaxChars);
    }
    let temperature = creativity.temperature();
    let mut rng = sampling::rng_from_seed(seed);
    let (prefix, _) = sanitize(seed_text.unwrap_or(""));
    let mut context = lm.model.encode(&prefix.chars().collect::<Vec<_>>());
    let order = lm.model.max_order();
    let mut text = String::new();
    let mut entropies = Vec::new();
    let newline = lm.model.index_of(&'\n').expect("newline is in the alphabet");
    for _ in 0..max_chars {
        let dist = temperature.reshape(&lm.model.predict_encoded(&context[context.len().saturating_sub(order)..]));
        entropies.push(sampling::entropy(&dist));
        let i = sampling::sample_index(&dist, &mut rng).expect("PPM distributions are never empty") as u32;
        text.push(*lm.model.symbol(i));
        let blank_line = i == newline && context.last() == Some(&newline);
        context.push(i);
        if blank_line {
            break;
        }
    }
    Ok(GeneratedLyrics { text, entropies })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SongType {
    Angry,
    IAm,
    IWant,
    Love,
    Comedy,
    Comfort,
    Duets,
    Protest,
}

impl SongType {
    pub const ALL: [SongType; 8] = [
        SongType::Angry,
        SongType::IAm,
        SongType::IWant,
        SongType::Love,
        SongType::Comedy,
        SongType::Comfort,
        SongType::Duets,
        SongType::Protest,
    ];
}

impl fmt::Display for SongType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

impl FromStr for SongType {
    type Err = LyricsError;

    /// Case-insensitive; spaces and underscores are ignored (`"I Want"`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        SongType::ALL
            .into_iter()
            .find(|t| t.to_string().to_lowercase() == key)
            .ok_or_else(|| LyricsError::UnknownSongType(s.into()))
    }
}

/// Lowercase word tokens with inner apostrophes kept.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\'').to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordCloud {
    pub song_type: SongType,
    pub weights: BTreeMap<String, f64>,
}

impl WordCloud {
    /// Tokens by descending weight, ties alphabetical.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> = self.weights.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }
}

/// Distinctive words of one song type: each token's count within the type
/// divided by one plus its count in every other type. Stop words are
/// dropped and the top [`CLOUD_SIZE`] tokens kept.
pub fn build_word_cloud(lyrics: &[(String, SongType)], song_type: SongType) -> Result<WordCloud, LyricsError> {
    if !lyrics.iter().any(|(_, t)| *t == song_type) {
        return Err(LyricsError::EmptySongType(song_type));
    }
    let mut inside: HashMap<String, f64> = HashMap::new();
    let mut outside: HashMap<String, f64> = HashMap::new();
    for (text, t) in lyrics {
        let target = if *t == song_type { &mut inside } else { &mut outside };
        for token in tokenize(text).into_iter().filter(|w| !is_stop_word(w)) {
            *target.entry(token).or_insert(0.0) += 1.0;
        }
    }
    let mut scored: Vec<(String, f64)> = inside
        .into_iter()
        .map(|(token, tf)| {
            let other = outside.get(&token).copied().unwrap_or(0.0);
            (token, tf / (1.0 + other))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(CLOUD_SIZE);
    Ok(WordCloud { song_type, weights: scored.into_iter().collect() })
}

/// Manifest describing a lyric corpus directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    /// Training stages in order, each listing text files.
    #[serde(default)]
    pub stages: Vec<ManifestStage>,
    /// Song type of each lyric file, for word clouds.
    #[serde(default)]
    pub song_types: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestStage {
    pub name: String,
    pub weight: f64,
    pub files: Vec<String>,
}

/// A lyric corpus read from a directory with a `manifest.json`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyricCorpus {
    pub stages: Vec<TrainingStage>,
    pub typed: Vec<(String, SongType)>,
}

pub fn read_lyric_corpus(dir: impl AsRef<std::path::Path>) -> Result<LyricCorpus, LyricsError> {
    let dir = dir.as_ref();
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| LyricsError::Document(format!("{}: {}", path.display(), e)))
    };
    let manifest: CorpusManifest = serde_json::from_str(&read("manifest.json")?)
        .map_err(|e| LyricsError::Document(format!("manifest.json: {}", e)))?;
    let mut stages = Vec::new();
    for s in &manifest.stages {
        let documents = s.files.iter().map(|f| read(f)).collect::<Result<Vec<_>, _>>()?;
        stages.push(TrainingStage::new(&s.name, documents, s.weight));
    }
    let mut typed = Vec::new();
    for (file, t) in &manifest.song_types {
        typed.push((read(file)?, t.parse()?));
    }
    Ok(LyricCorpus { stages, typed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm(text: &str, order: usize) -> CharLm {
        train_char_lm(&[TrainingStage::new("one", vec![text.into()], 1.0)], order).unwrap()
    }

    #[test]
    fn single_stage_is_plain_training() {
        let text = "la la land\nla di da\n";
        let chars: Vec<char> = text.chars().collect();
        let plain = crate::ppm::train_ppm(alphabet(), &[chars], 3).unwrap();
        assert_eq!(lm(text, 3).model, plain);
    }

    #[test]
    fn stage_weights_scale_counts() {
        let stages = [
            TrainingStage::new("poems", vec!["aaaa".into()], 1.0),
            TrainingStage::new("lyrics", vec!["bbbb".into()], 10.0),
        ];
        let m = train_char_lm(&stages, 2).unwrap();
        assert_eq!(m.model.count(&[], &'b') / m.model.count(&[], &'a'), 10.0);
        // equal weights of any size match one stage holding both documents
        let equal =
            [TrainingStage::new("a", vec!["abc".into()], 3.0), TrainingStage::new("b", vec!["cab".into()], 3.0)];
        let joined = [TrainingStage::new("ab", vec!["abc".into(), "cab".into()], 1.0)];
        assert_eq!(train_char_lm(&equal, 2).unwrap().model, train_char_lm(&joined, 2).unwrap().model);
    }

    #[test]
    fn sanitizing_counts_replacements() {
        let m = lm("peace \u{262E}\u{FE0F} camp \u{1F54A}", 2);
        assert_eq!(m.replaced_chars, 3);
        assert_eq!(sanitize("a\u{1F600}b"), ("a b".to_string(), 1));
        assert!(train_char_lm(&[], 2).is_err());
        assert!(train_char_lm(&[TrainingStage::new("x", vec![], 0.0)], 2).is_err());
    }

    #[test]
    fn argmax_ignores_the_seed() {
        let m = lm("we shall overcome\nwe shall not be moved\n", 4);
        let c = Creativity::new(0.0).unwrap();
        let a = generate_lyrics(&m, c, 60, Some("we sh"), 1).unwrap();
        let b = generate_lyrics(&m, c, 60, Some("we sh"), 999).unwrap();
        assert_eq!(a.text, b.text);
        assert!(a.text.starts_with("all"));
    }

    #[test]
    fn output_is_bounded_and_in_alphabet() {
        let m = lm("the fence the wire the common\n\nthe camp\n", 3);
        for seed in 0..20 {
            let out = generate_lyrics(&m, Creativity::new(1.0).unwrap(), 10, None, seed).unwrap();
            assert!(out.text.chars().count() <= 10);
            assert!(out.text.chars().all(in_alphabet));
        }
        assert!(generate_lyrics(&m, Creativity::new(1.0).unwrap(), 0, None, 0).is_err());
        assert!(Creativity::new(1.2).is_err());
    }

    #[test]
    fn stops_after_a_blank_line() {
        let m = lm("a\n\na\n\na\n\n", 2);
        let out = generate_lyrics(&m, Creativity::new(0.0).unwrap(), 100, Some("a"), 0).unwrap();
        assert_eq!(out.text, "\n\n");
    }

    #[test]
    fn higher_creativity_raises_entropy() {
        let m = lm("you are the one i love, you are the one i need\nso stay with me tonight\n", 3);
        let mean = |c: f64| -> f64 {
            (0..100)
                .map(|s| generate_lyrics(&m, Creativity::new(c).unwrap(), 30, None, s).unwrap().mean_entropy())
                .sum::<f64>()
                / 100.0
        };
        assert!(mean(1.0) > mean(0.3));
    }

    fn cloud_fixture() -> Vec<(String, SongType)> {
        vec![
            ("greenham fence song song".into(), SongType::Protest),
            ("fence heart heart".into(), SongType::Love),
            ("the fence wire wire".into(), SongType::Protest),
        ]
    }

    #[test]
    fn distinctive_tokens_lead_the_cloud() {
        let cloud = build_word_cloud(&cloud_fixture(), SongType::Protest).unwrap();
        // greenham: 1/(1+0); fence: 2/(1+1); song and wire: 2/(1+0)
        assert_eq!(cloud.weights["greenham"], 1.0);
        assert_eq!(cloud.weights["fence"], 1.0);
        assert_eq!(cloud.weights["song"], 2.0);
        assert!(!cloud.weights.contains_key("the"));
        assert_eq!(cloud.ranked()[0], ("song", 2.0));
        assert!(build_word_cloud(&cloud_fixture(), SongType::Comedy).is_err());
        let single: Vec<_> = cloud_fixture().into_iter().filter(|(_, t)| *t == SongType::Protest).collect();
        let raw = build_word_cloud(&single, SongType::Protest).unwrap();
        assert_eq!(raw.weights["fence"], 2.0);
    }

    #[test]
    fn song_type_names() {
        assert_eq!("I Want".parse::<SongType>().unwrap(), SongType::IWant);
        assert_eq!("protest".parse::<SongType>().unwrap(), SongType::Protest);
        assert!("Ballad".parse::<SongType>().is_err());
    }
}

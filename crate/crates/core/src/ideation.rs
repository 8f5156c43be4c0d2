//! "What if" ideation over a knowledge base of concept triples.
//!
//! A template such as `What if a X learned how to Y?` names a relation; every
//! triple with that relation binds its subject to `X` and its object to `Y`.
//! Concepts are identifiers like `ride_horse`, rendered through a surface
//! lexicon (`ride a horse`) or, failing that, with underscores as spaces.
//! Ideas are ranked by a weighted sum of three measures: novelty against a
//! set of known premises, concreteness of the bindings, and affinity with a
//! theme's keywords.
//!
//! ```
//! use greenroom::ideation::{instantiate, parse_kb, Template, Triple};
//!
//! let kb = parse_kb("dog NotCapableOf ride_horse").unwrap();
//! let template = Template::default_what_if();
//! let idea = instantiate(&kb, &template, &Triple::new("dog", "NotCapableOf", "ride_horse")).unwrap();
//! assert_eq!(idea.text, "What if a dog learned how to ride a horse?");
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Score given to ideas that have not been ranked.
pub const UNRANKED_SCORE: f64 = 0.5;

const BUNDLED_TEMPLATES: &str = include_str!("../data/ideation/templates.json");
const BUNDLED_THEMES: &str = include_str!("../data/ideation/themes.json");
const BUNDLED_SURFACE: &str = include_str!("../data/ideation/surface.txt");
const BUNDLED_PREMISES: &str = include_str!("../data/ideation/premises.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdeationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("template {template} needs relation {expected}, triple has {found}")]
    RelationMismatch { template: String, expected: String, found: String },
    #[error("template {id}: {message}")]
    Template { id: String, message: String },
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("unknown theme {0}")]
    UnknownTheme(String),
    #[error("ranking weights must be non-negative with at least one positive")]
    Weights,
    #[error("limit must be at least 1")]
    Limit,
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Document(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: &str, relation: &str, object: &str) -> Self {
        Triple { subject: subject.into(), relation: relation.into(), object: object.into() }
    }
}

/// Deduplicated triples plus surface forms for their concepts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub triples: BTreeSet<Triple>,
    pub lexicon: BTreeMap<String, String>,
}

fn bundled_surface() -> &'static BTreeMap<String, String> {
    static LEXICON: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    LEXICON.get_or_init(|| {
        BUNDLED_SURFACE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .filter_map(|l| l.trim().split_once(char::is_whitespace))
            .map(|(c, s)| (c.to_string(), s.trim().to_string()))
            .collect()
    })
}

fn valid_concept(c: &str) -> bool {
    !c.is_empty() && !c.chars().any(|ch| ch.is_uppercase())
}

impl KnowledgeBase {
    pub fn insert(&mut self, triple: Triple) {
        for concept in [&triple.subject, &triple.object] {
            if !self.lexicon.contains_key(concept) {
                let surface = bundled_surface().get(concept).cloned().unwrap_or_else(|| concept.clone());
                self.lexicon.insert(concept.clone(), surface);
            }
        }
        self.triples.insert(triple);
    }

    /// Display form of a concept, with underscores as spaces.
    pub fn surface(&self, concept: &str) -> String {
        let raw = self.lexicon.get(concept).or_else(|| bundled_surface().get(concept)).map_or(concept, |s| s.as_str());
        raw.replace('_', " ")
    }

    pub fn with_relation<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.triples.iter().filter(move |t| t.relation == relation)
    }
}

/// Parses a knowledge base: one `subject relation object` triple per line,
/// `#` comments, and `@surface concept words...` lines that set how a
/// concept is written.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, IdeationError> {
    let mut kb = KnowledgeBase::default();
    let mut surfaces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@surface") {
            let (concept, words) = rest.trim().split_once(char::is_whitespace).ok_or(IdeationError::Parse {
                line: line_no,
                message: "@surface needs a concept and its surface words".into(),
            })?;
            surfaces.push((concept.to_string(), words.trim().to_string()));
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(IdeationError::Parse {
                line: line_no,
                message: format!("expected `subject relation object`, found {} fields", fields.len()),
            });
        }
        for concept in [fields[0], fields[2]] {
            if !valid_concept(concept) {
                return Err(IdeationError::Parse {
                    line: line_no,
                    message: format!("concept {:?} must be lowercase with underscores for spaces", concept),
                });
            }
        }
        kb.insert(Triple::new(fields[0], fields[1], fields[2]));
    }
    for (concept, words) in surfaces {
        kb.lexicon.insert(concept, words);
    }
    Ok(kb)
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase, IdeationError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IdeationError::Io(format!("{}: {}", path.display(), e)))?;
    parse_kb(&text)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    /// Surface text containing the slots `X` and `Y` once each, as whole words.
    pub text: String,
    pub required_relation: String,
    /// Themes this template suits; empty means any theme.
    #[serde(default)]
    pub themes: BTreeSet<String>,
    #[serde(default)]
    pub plot_types: BTreeSet<String>,
}

const SLOTS: [&str; 2] = ["X", "Y"];

fn slot_positions(text: &str, slot: &str) -> Vec<usize> {
    let bytes = text.as_bytes();
    text.match_indices(slot)
        .map(|(i, _)| i)
        .filter(|&i| {
            let before = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
            let after = i + slot.len() >= bytes.len() || !bytes[i + slot.len()].is_ascii_alphanumeric();
            before && after
        })
        .collect()
}

impl Template {
    /// The classic `What if a X learned how to Y?` over `NotCapableOf`.
    pub fn default_what_if() -> Template {
        bundled_templates().into_iter().next().expect("bundled templates are not empty")
    }

    pub fn validate(&self) -> Result<(), IdeationError> {
        for slot in SLOTS {
            let n = slot_positions(&self.text, slot).len();
            if n != 1 {
                return Err(IdeationError::Template {
                    id: self.id.clone(),
                    message: format!("slot {} appears {} times, expected once", slot, n),
                });
            }
        }
        if self.required_relation.is_empty() {
            return Err(IdeationError::Template { id: self.id.clone(), message: "relation is empty".into() });
        }
        Ok(())
    }

    /// Replaces each slot with its filler.
    pub fn render(&self, x: &str, y: &str) -> String {
        let px = slot_positions(&self.text, "X")[0];
        let py = slot_positions(&self.text, "Y")[0];
        let (first, second, a, b) = if px < py { (px, py, x, y) } else { (py, px, y, x) };
        format!("{}{}{}{}{}", &self.text[..first], a, &self.text[first + 1..second], b, &self.text[second + 1..])
    }
}

pub fn parse_templates(json: &str) -> Result<Vec<Template>, IdeationError> {
    let templates: Vec<Template> = serde_json::from_str(json).map_err(|e| IdeationError::Document(e.to_string()))?;
    for t in &templates {
        t.validate()?;
    }
    Ok(templates)
}

pub fn bundled_templates() -> Vec<Template> {
    parse_templates(BUNDLED_TEMPLATES).expect("bundled templates are valid")
}

/// Theme name to keyword list.
pub type Themes = BTreeMap<String, Vec<String>>;

pub fn parse_themes(json: &str) -> Result<Themes, IdeationError> {
    serde_json::from_str(json).map_err(|e| IdeationError::Document(e.to_string()))
}

pub fn bundled_themes() -> Themes {
    parse_themes(BUNDLED_THEMES).expect("bundled themes are valid")
}

/// Known premises that novelty is measured against.
pub fn bundled_premises() -> Vec<String> {
    BUNDLED_PREMISES.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FictionalIdea {
    pub text: String,
    pub template_id: String,
    pub bindings: BTreeMap<String, String>,
    pub theme: Option<String>,
    pub plot_type: Option<String>,
    pub score: f64,
}

/// Renders `template` with the triple's subject as `X` and object as `Y`.
pub fn instantiate(kb: &KnowledgeBase, template: &Template, triple: &Triple) -> Result<FictionalIdea, IdeationError> {
    if triple.relation != template.required_relation {
        return Err(IdeationError::RelationMismatch {
            template: template.id.clone(),
            expected: template.required_relation.clone(),
            found: triple.relation.clone(),
        });
    }
    template.validate()?;
    Ok(FictionalIdea {
        text: template.render(&kb.surface(&triple.subject), &kb.surface(&triple.object)),
        template_id: template.id.clone(),
        bindings: [("X".to_string(), triple.subject.clone()), ("Y".to_string(), triple.object.clone())].into(),
        theme: None,
        plot_type: template.plot_types.iter().next().cloned(),
        score: UNRANKED_SCORE,
    })
}

fn keyword_hits(concepts: &[&String], keywords: &[String]) -> usize {
    keywords
        .iter()
        .map(|k| k.to_lowercase())
        .filter(|k| concepts.iter().any(|c| c.to_lowercase().contains(k.as_str())))
        .count()
}

/// Relative importance of the ranking measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureWeights {
    pub novelty: f64,
    pub concreteness: f64,
    pub theme_affinity: f64,
}

impl Default for MeasureWeights {
    fn default() -> Self {
        MeasureWeights { novelty: 1.0, concreteness: 1.0, theme_affinity: 1.0 }
    }
}

/// Measure values of one idea, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub novelty: f64,
    pub concreteness: f64,
    pub theme_affinity: f64,
}

impl Measures {
    pub fn score(&self, w: &MeasureWeights) -> f64 {
        let total = w.novelty + w.concreteness + w.theme_affinity;
        (w.novelty * self.novelty + w.concreteness * self.concreteness + w.theme_affinity * self.theme_affinity) / total
    }
}

/// What the measures compare ideas against.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingContext {
    pub premises: Vec<String>,
    pub themes: Themes,
}

impl Default for RankingContext {
    fn default() -> Self {
        RankingContext { premises: bundled_premises(), themes: bundled_themes() }
    }
}

fn word_set(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Measures for a list of ideas. Theme affinity is min-max normalized over
/// the list (all zeros when every idea has the same keyword count).
pub fn measure_ideas(kb: &KnowledgeBase, ideas: &[FictionalIdea], context: &RankingContext) -> Vec<Measures> {
    let premises: Vec<BTreeSet<String>> = context.premises.iter().map(|p| word_set(p)).collect();
    let hits: Vec<usize> = ideas
        .iter()
        .map(|idea| {
            let concepts: Vec<&String> = idea.bindings.values().collect();
            match &idea.theme {
                Some(theme) => context.themes.get(theme).map_or(0, |k| keyword_hits(&concepts, k)),
                None => context.themes.values().map(|k| keyword_hits(&concepts, k)).sum(),
            }
        })
        .collect();
    let (lo, hi) = (hits.iter().min().copied().unwrap_or(0), hits.iter().max().copied().unwrap_or(0));
    ideas
        .iter()
        .zip(&hits)
        .map(|(idea, h)| {
            let words = word_set(&idea.text);
            let overlap = premises.iter().map(|p| jaccard(&words, p)).fold(0.0, f64::max);
            let multi = idea.bindings.values().filter(|c| kb.surface(c).contains(' ')).count();
            Measures {
                novelty: 1.0 - overlap,
                concreteness: if idea.bindings.is_empty() { 0.0 } else { multi as f64 / idea.bindings.len() as f64 },
                theme_affinity: if hi > lo { (h - lo) as f64 / (hi - lo) as f64 } else { 0.0 },
            }
        })
        .collect()
}

fn check_weights(w: &MeasureWeights) -> Result<(), IdeationError> {
    let all = [w.novelty, w.concreteness, w.theme_affinity];
    if all.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || all.iter().all(|v| *v == 0.0) {
        return Err(IdeationError::Weights);
    }
    Ok(())
}

/// Scores ideas and sorts them by descending score. The sort is stable.
pub fn rank_ideas(
    kb: &KnowledgeBase,
    mut ideas: Vec<FictionalIdea>,
    weights: &MeasureWeights,
    context: &RankingContext,
) -> Result<Vec<FictionalIdea>, IdeationError> {
    check_weights(weights)?;
    let measures = measure_ideas(kb, &ideas, context);
    for (idea, m) in ideas.iter_mut().zip(&measures) {
        idea.score = m.score(weights);
    }
    ideas.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(ideas)
}

/// Options for [`ideate`].
#[derive(Clone, Debug, PartialEq)]
pub struct IdeateOptions {
    pub theme: Option<String>,
    pub limit: usize,
    pub weights: MeasureWeights,
}

impl Default for IdeateOptions {
    fn default() -> Self {
        IdeateOptions { theme: None, limit: 10, weights: MeasureWeights::default() }
    }
}

/// Every idea the template yields over the knowledge base, filtered by
/// theme, ranked, and cut to `limit`. Equal scores keep text order.
///
/// A theme filter keeps nothing if the template lists themes and the theme
/// is not among them; otherwise it keeps triples where a theme keyword
/// occurs in the subject or object identifier.
pub fn ideate(
    kb: &KnowledgeBase,
    template: &Template,
    options: &IdeateOptions,
    context: &RankingContext,
) -> Result<Vec<FictionalIdea>, IdeationError> {
    if options.limit == 0 {
        return Err(IdeationError::Limit);
    }
    check_weights(&options.weights)?;
    let keywords = match &options.theme {
        Some(theme) => {
            Some(context.themes.get(theme).ok_or_else(|| IdeationError::UnknownTheme(theme.clone()))?.clone())
        }
        None => None,
    };
    if let Some(theme) = &options.theme {
        if !template.themes.is_empty() && !template.themes.contains(theme) {
            return Ok(Vec::new());
        }
    }
    let mut ideas = Vec::new();
    for triple in kb.with_relation(&template.required_relation) {
        if let Some(k) = &keywords {
            if keyword_hits(&[&triple.subject, &triple.object], k) == 0 {
                continue;
            }
        }
        let mut idea = instantiate(kb, template, triple)?;
        idea.theme = options.theme.clone();
        ideas.push(idea);
    }
    ideas.sort_by(|a, b| a.text.cmp(&b.text));
    let mut ranked = rank_ideas(kb, ideas, &options.weights, context)?;
    ranked.truncate(options.limit);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_kb() -> KnowledgeBase {
        parse_kb(
            "# animals and what they cannot do\n\
             dog NotCapableOf ride_horse\n\
             cat NotCapableOf sing_opera\n\
             king NotCapableOf cook_dinner\n\
             fish NotCapableOf walk_home\n\
             tree NotCapableOf dance\n\
             dog CapableOf bark\n",
        )
        .unwrap()
    }

    #[test]
    fn dog_learns_to_ride_a_horse() {
        let kb = parse_kb("dog NotCapableOf ride_horse").unwrap();
        assert_eq!(kb.triples.len(), 1);
        let t = Template::default_what_if();
        let triple = Triple::new("dog", "NotCapableOf", "ride_horse");
        let a = instantiate(&kb, &t, &triple).unwrap();
        assert_eq!(a.text, "What if a dog learned how to ride a horse?");
        assert_eq!(a, instantiate(&kb, &t, &triple).unwrap());
        assert_eq!(a.score, UNRANKED_SCORE);
        let err = instantiate(&kb, &t, &Triple::new("dog", "CapableOf", "bark")).unwrap_err();
        assert!(err.to_string().contains("NotCapableOf") && err.to_string().contains("CapableOf"));
    }

    #[test]
    fn kb_parsing() {
        assert!(parse_kb("").unwrap().triples.is_empty());
        assert_eq!(parse_kb("a R b\na R b\n").unwrap().triples.len(), 1);
        let err = parse_kb("a R b\n\na R\n").unwrap_err();
        assert_eq!(
            err,
            IdeationError::Parse { line: 3, message: "expected `subject relation object`, found 2 fields".into() }
        );
        assert!(matches!(parse_kb("Dog R b"), Err(IdeationError::Parse { line: 1, .. })));
        let kb = parse_kb("@surface fly_kite fly a kite\nboy NotCapableOf fly_kite").unwrap();
        assert_eq!(kb.surface("fly_kite"), "fly a kite");
        assert_eq!(kb.surface("boy"), "boy");
        // identity surface forms are filled in, rendered with spaces
        let kb = parse_kb("old_man NotCapableOf swim").unwrap();
        assert_eq!(kb.lexicon["old_man"], "old_man");
        assert_eq!(kb.surface("old_man"), "old man");
    }

    #[test]
    fn load_order_does_not_matter() {
        let a = parse_kb("a R b\nc R d\n").unwrap();
        let b = parse_kb("c R d\na R b\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn templates_need_each_slot_once() {
        let mut t = Template::default_what_if();
        t.text = "What if X met X?".into();
        assert!(t.validate().is_err());
        t.text = "What if a Xavier learned Y?".into();
        assert!(t.validate().is_err());
        assert_eq!(bundled_templates().len(), 3);
        let reversed = Template { text: "Y, said the X".into(), ..Template::default_what_if() };
        assert_eq!(reversed.render("cat", "hello"), "hello, said the cat");
    }

    #[test]
    fn ideate_counts_and_limits() {
        let kb = fixture_kb();
        let t = Template::default_what_if();
        let ctx = RankingContext::default();
        let all = ideate(&kb, &t, &IdeateOptions { limit: 100, ..Default::default() }, &ctx).unwrap();
        assert_eq!(all.len(), kb.with_relation("NotCapableOf").count());
        assert!(all.windows(2).all(|w| w[0].score >= w[1].score));
        let one = ideate(&kb, &t, &IdeateOptions { limit: 1, ..Default::default() }, &ctx).unwrap();
        assert_eq!(one[0], all[0]);
        assert!(matches!(
            ideate(&kb, &t, &IdeateOptions { limit: 0, ..Default::default() }, &ctx),
            Err(IdeationError::Limit)
        ));
    }

    #[test]
    fn theme_filter_uses_keywords() {
        // journey keywords: ride_horse ("ride", "horse") and walk_home ("walk", "home")
        let kb = fixture_kb();
        let options = IdeateOptions { theme: Some("journey".into()), limit: 10, ..Default::default() };
        let ideas = ideate(&kb, &Template::default_what_if(), &options, &RankingContext::default()).unwrap();
        let mut objects: Vec<&str> = ideas.iter().map(|i| i.bindings["Y"].as_str()).collect();
        objects.sort();
        assert_eq!(objects, vec!["ride_horse", "walk_home"]);
        assert!(ideas.iter().all(|i| i.theme.as_deref() == Some("journey")));
        // a template tagged only for love yields nothing under journey
        let love = bundled_templates().into_iter().find(|t| t.id == "had_to_for_love").unwrap();
        assert!(ideate(&kb, &love, &options, &RankingContext::default()).unwrap().is_empty());
    }

    #[test]
    fn hand_computed_ranking() {
        // four ideas with fixed measures; weights 2,1,1
        let weights = MeasureWeights { novelty: 2.0, concreteness: 1.0, theme_affinity: 1.0 };
        let measures = [
            Measures { novelty: 0.5, concreteness: 1.0, theme_affinity: 0.0 }, // (1+1+0)/4 = 0.5
            Measures { novelty: 1.0, concreteness: 0.0, theme_affinity: 0.0 }, // 2/4 = 0.5
            Measures { novelty: 0.25, concreteness: 0.0, theme_affinity: 1.0 }, // 1.5/4 = 0.375
            Measures { novelty: 1.0, concreteness: 0.5, theme_affinity: 1.0 }, // 3.5/4 = 0.875
        ];
        let scores: Vec<f64> = measures.iter().map(|m| m.score(&weights)).collect();
        assert_eq!(scores, vec![0.5, 0.5, 0.375, 0.875]);
    }

    #[test]
    fn dominance_and_weights() {
        let kb = parse_kb("dog NotCapableOf ride_horse\ndog NotCapableOf fly").unwrap();
        let t = Template::default_what_if();
        let ideas: Vec<_> = kb.with_relation("NotCapableOf").map(|tr| instantiate(&kb, &t, tr).unwrap()).collect();
        let ctx = RankingContext { premises: vec![], themes: bundled_themes() };
        // ride_horse is concrete and hits journey keywords; fly hits nothing
        let ranked = rank_ideas(&kb, ideas.clone(), &MeasureWeights::default(), &ctx).unwrap();
        assert_eq!(ranked[0].bindings["Y"], "ride_horse");
        let zero = MeasureWeights { novelty: 0.0, concreteness: 0.0, theme_affinity: 0.0 };
        assert_eq!(rank_ideas(&kb, ideas.clone(), &zero, &ctx), Err(IdeationError::Weights));
        let negative = MeasureWeights { novelty: -1.0, ..MeasureWeights::default() };
        assert_eq!(rank_ideas(&kb, ideas, &negative, &ctx), Err(IdeationError::Weights));
    }
}

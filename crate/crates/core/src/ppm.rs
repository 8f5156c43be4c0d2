//! Variable-order Markov models by prediction by partial match.
//!
//! Counts are kept for every context of length `0..=max_order`. Prediction
//! blends orders with PPM-C escapes: a context that has seen `d` distinct
//! symbols over `n` total occurrences gives each symbol `count / (n + d)`
//! and passes `d / (n + d)` down to the next shorter context. The chain ends
//! in a uniform distribution over the alphabet, so every symbol keeps some
//! probability. Contexts that were never seen pass all of their mass down.
//! Exclusion is not applied.
//!
//! Counts are real-valued so corpora can be weighted.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{self, Rng};

/// Anything that can be an alphabet symbol.
pub trait Symbol: Clone + Ord + Hash + Debug + Serialize + DeserializeOwned + Send + Sync {}

impl<T> Symbol for T where T: Clone + Ord + Hash + Debug + Serialize + DeserializeOwned + Send + Sync {}

/// Index used in contexts for a symbol that is not in the alphabet. No stored
/// context ever contains it, so lookups through it always escape.
pub const UNKNOWN: u32 = u32::MAX - 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpmError {
    #[error("symbol {symbol} at position {position} of sequence {sequence} is not in the alphabet")]
    UnknownSymbol { sequence: usize, position: usize, symbol: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error("sample length must be at least 1")]
    Length,
    #[error("weight must be positive and finite, got {0}")]
    Weight(f64),
    #[error("model document: {0}")]
    Document(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
struct ContextStats {
    counts: BTreeMap<u32, f64>,
    total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpmModel<S: Symbol> {
    alphabet: Vec<S>,
    index: HashMap<S, u32>,
    max_order: usize,
    contexts: HashMap<Vec<u32>, ContextStats>,
}

/// How a predictive distribution is reshaped before sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Temperature {
    /// Always take the most probable symbol; ties go to the earliest in alphabet order.
    Argmax,
    /// Sample from `p_i^(1/T)`, renormalised.
    Scaled(f64),
}

impl Temperature {
    pub fn new(t: f64) -> Result<Self, PpmError> {
        if t > 0.0 && t.is_finite() {
            Ok(Temperature::Scaled(t))
        } else {
            Err(PpmError::Temperature(t))
        }
    }

    /// Returns the distribution actually sampled from. Argmax yields a point mass.
    pub fn reshape(&self, dist: &[f64]) -> Vec<f64> {
        match *self {
            Temperature::Argmax => {
                let mut out = vec![0.0; dist.len()];
                if let Some(i) = argmax(dist) {
                    out[i] = 1.0;
                }
                out
            }
            Temperature::Scaled(t) if t == 1.0 => dist.to_vec(),
            Temperature::Scaled(t) => {
                let logs: Vec<f64> =
                    dist.iter().map(|p| if *p > 0.0 { p.ln() / t } else { f64::NEG_INFINITY }).collect();
                let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if peak == f64::NEG_INFINITY {
                    return dist.to_vec();
                }
                let mut out: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
                sampling::normalize(&mut out);
                out
            }
        }
    }
}

/// Index of the largest entry, earliest on ties.
pub fn argmax(dist: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in dist.iter().enumerate() {
        if best.map_or(true, |b| *p > dist[b]) {
            best = Some(i);
        }
    }
    best
}

impl<S: Symbol> PpmModel<S> {
    /// An untrained model. The alphabet is sorted and deduplicated.
    pub fn new(alphabet: impl IntoIterator<Item = S>, max_order: usize) -> Self {
        let alphabet: Vec<S> = alphabet.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = alphabet.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        PpmModel { alphabet, index, max_order, contexts: HashMap::new() }
    }

    /// A model whose alphabet is every symbol occurring in `sequences`.
    pub fn from_sequences(sequences: &[Vec<S>], max_order: usize) -> Result<Self, PpmError> {
        let alphabet: BTreeSet<S> = sequences.iter().flatten().cloned().collect();
        train_ppm(alphabet, sequences, max_order)
    }

    pub fn alphabet(&self) -> &[S] {
        &self.alphabet
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn index_of(&self, symbol: &S) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, index: u32) -> &S {
        &self.alphabet[index as usize]
    }

    /// Maps symbols to indices, unknown symbols to [`UNKNOWN`].
    pub fn encode(&self, symbols: &[S]) -> Vec<u32> {
        symbols.iter().map(|s| self.index_of(s).unwrap_or(UNKNOWN)).collect()
    }

    /// Returns a copy whose alphabet also holds `extra`, keeping every count.
    pub fn with_alphabet(&self, extra: impl IntoIterator<Item = S>) -> Self {
        let mut symbols: BTreeSet<S> = self.alphabet.iter().cloned().collect();
        symbols.extend(extra);
        let mut out = PpmModel::new(symbols, self.max_order);
        for (ctx, stats) in &self.contexts {
            let new_ctx: Vec<u32> = ctx.iter().map(|i| out.index[&self.alphabet[*i as usize]]).collect();
            let entry = out.contexts.entry(new_ctx).or_default();
            for (sym, c) in &stats.counts {
                *entry.counts.entry(out.index[&self.alphabet[*sym as usize]]).or_insert(0.0) += c;
            }
            entry.total += stats.total;
        }
        out
    }

    /// Adds one weighted occurrence of every (context, symbol) pair in `sequence`.
    pub fn train_weighted(&mut self, sequence: &[S], weight: f64) -> Result<(), PpmError> {
        self.train_sequence(0, sequence, weight)
    }

    fn train_sequence(&mut self, seq_index: usize, sequence: &[S], weight: f64) -> Result<(), PpmError> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(PpmError::Weight(weight));
        }
        let mut encoded = Vec::with_capacity(sequence.len());
        for (position, s) in sequence.iter().enumerate() {
            let i = self.index_of(s).ok_or_else(|| PpmError::UnknownSymbol {
                sequence: seq_index,
                position,
                symbol: format!("{:?}", s),
            })?;
            encoded.push(i);
        }
        for pos in 0..encoded.len() {
            let symbol = encoded[pos];
            for order in 0..=self.max_order.min(pos) {
                let ctx = encoded[pos - order..pos].to_vec();
                let stats = self.contexts.entry(ctx).or_default();
                *stats.counts.entry(symbol).or_insert(0.0) += weight;
                stats.total += weight;
            }
        }
        Ok(())
    }

    /// Count of `symbol` after exactly `context` (whose length must not exceed `max_order`).
    pub fn count(&self, context: &[S], symbol: &S) -> f64 {
        let ctx = self.encode(context);
        let Some(sym) = self.index_of(symbol) else { return 0.0 };
        self.contexts.get(&ctx).and_then(|s| s.counts.get(&sym)).copied().unwrap_or(0.0)
    }

    /// Total count observed after exactly `context`.
    pub fn context_total(&self, context: &[S]) -> f64 {
        self.contexts.get(&self.encode(context)).map_or(0.0, |s| s.total)
    }

    /// Predictive distribution over the alphabet (in alphabet order).
    pub fn predict(&self, context: &[S]) -> Vec<f64> {
        self.predict_encoded(&self.encode(context))
    }

    /// [`PpmModel::predict`] on an already encoded context.
    pub fn predict_encoded(&self, context: &[u32]) -> Vec<f64> {
        let n = self.alphabet.len();
        if n == 0 {
            return Vec::new();
        }
        let mut dist = vec![1.0 / n as f64; n];
        let longest = self.max_order.min(context.len());
        for order in 0..=longest {
            let ctx = &context[context.len() - order..];
            let Some(stats) = self.contexts.get(ctx) else { continue };
            let distinct = stats.counts.len() as f64;
            let denom = stats.total + distinct;
            let escape = distinct / denom;
            for p in dist.iter_mut() {
                *p *= escape;
            }
            for (sym, c) in &stats.counts {
                dist[*sym as usize] += c / denom;
            }
        }
        dist
    }

    /// Probability of `symbol` after `context`.
    pub fn probability(&self, context: &[S], symbol: &S) -> f64 {
        match self.index_of(symbol) {
            Some(i) => self.predict(context)[i as usize],
            None => 0.0,
        }
    }

    /// Natural-log likelihood of a whole sequence, each symbol predicted from
    /// everything before it. Unknown symbols give negative infinity.
    pub fn log_likelihood(&self, sequence: &[S]) -> f64 {
        let encoded = self.encode(sequence);
        let mut total = 0.0;
        for pos in 0..encoded.len() {
            if encoded[pos] == UNKNOWN {
                return f64::NEG_INFINITY;
            }
            let start = pos.saturating_sub(self.max_order);
            total += self.predict_encoded(&encoded[start..pos])[encoded[pos] as usize].ln();
        }
        total
    }

    /// Samples `length` symbols continuing `prefix`.
    pub fn sample_after(
        &self,
        prefix: &[S],
        length: usize,
        temperature: Temperature,
        rng: &mut Rng,
    ) -> Result<Vec<S>, PpmError> {
        if length == 0 {
            return Err(PpmError::Length);
        }
        let mut context = self.encode(prefix);
        let mut out = Vec::with_capacity(length);
        for _ in 0..length {
            let start = context.len().saturating_sub(self.max_order);
            let dist = temperature.reshape(&self.predict_encoded(&context[start..]));
            let i = sampling::sample_index(&dist, rng).expect("PPM distributions are never empty");
            context.push(i as u32);
            out.push(self.alphabet[i].clone());
        }
        Ok(out)
    }

    /// Samples `length` symbols from an empty context.
    pub fn sample(&self, length: usize, temperature: Temperature, rng: &mut Rng) -> Result<Vec<S>, PpmError> {
        self.sample_after(&[], length, temperature, rng)
    }

    /// Saves alphabet and counts as a JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("models always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, PpmError> {
        serde_json::from_str(text).map_err(|e| PpmError::Document(e.to_string()))
    }
}

/// Trains a model over a declared alphabet.
pub fn train_ppm<S: Symbol>(
    alphabet: impl IntoIterator<Item = S>,
    sequences: &[Vec<S>],
    max_order: usize,
) -> Result<PpmModel<S>, PpmError> {
    if sequences.iter().all(|s| s.is_empty()) {
        return Err(PpmError::EmptyCorpus);
    }
    let mut model = PpmModel::new(alphabet, max_order);
    for (i, seq) in sequences.iter().enumerate() {
        model.train_sequence(i, seq, 1.0)?;
    }
    Ok(model)
}

/// Samples a sequence from an empty context with a fresh generator for `seed`.
pub fn sample<S: Symbol>(
    model: &PpmModel<S>,
    length: usize,
    temperature: Temperature,
    seed: u64,
) -> Result<Vec<S>, PpmError> {
    model.sample(length, temperature, &mut sampling::rng_from_seed(seed))
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Symbol", deserialize = "S: Symbol"))]
struct PpmDoc<S> {
    alphabet: Vec<S>,
    max_order: usize,
    escape: String,
    counts: Vec<CountDoc<S>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "S: Symbol", deserialize = "S: Symbol"))]
struct CountDoc<S> {
    context: Vec<S>,
    symbol: S,
    count: f64,
}

impl<S: Symbol> Serialize for PpmModel<S> {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut keys: Vec<&Vec<u32>> = self.contexts.keys().collect();
        keys.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let mut counts = Vec::new();
        for key in keys {
            let context: Vec<S> = key.iter().map(|i| self.alphabet[*i as usize].clone()).collect();
            for (sym, c) in &self.contexts[key].counts {
                counts.push(CountDoc {
                    context: context.clone(),
                    symbol: self.alphabet[*sym as usize].clone(),
                    count: *c,
                });
            }
        }
        PpmDoc { alphabet: self.alphabet.clone(), max_order: self.max_order, escape: "C".into(), counts }
            .serialize(serializer)
    }
}

impl<'de, S: Symbol> Deserialize<'de> for PpmModel<S> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let doc = PpmDoc::<S>::deserialize(deserializer)?;
        if doc.escape != "C" {
            return Err(D::Error::custom(format!("unsupported escape method {:?}", doc.escape)));
        }
        let mut model = PpmModel::new(doc.alphabet, doc.max_order);
        for entry in doc.counts {
            if entry.context.len() > model.max_order || !(entry.count > 0.0) {
                return Err(D::Error::custom("count entry outside model order or not positive"));
            }
            let ctx = model.encode(&entry.context);
            let sym = model.index_of(&entry.symbol);
            match (ctx.contains(&UNKNOWN), sym) {
                (false, Some(sym)) => {
                    let stats = model.contexts.entry(ctx).or_default();
                    *stats.counts.entry(sym).or_insert(0.0) += entry.count;
                    stats.total += entry.count;
                }
                _ => return Err(D::Error::custom(format!("symbol outside alphabet in {:?}", entry.symbol))),
            }
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn abab() -> PpmModel<char> {
        train_ppm(chars("ab"), &[chars("abab")], 1).unwrap()
    }

    #[test]
    fn abab_counts() {
        let m = abab();
        assert_eq!(m.count(&[], &'a'), 2.0);
        assert_eq!(m.count(&[], &'b'), 2.0);
        assert_eq!(m.count(&['a'], &'b'), 2.0);
        assert_eq!(m.count(&['b'], &'a'), 1.0);
        assert_eq!(m.count(&['a'], &'a'), 0.0);
    }

    #[test]
    fn abab_prediction_after_a() {
        // order 1 "a": {b:2}, n=2, d=1 -> b: 2/3, escape 1/3
        // order 0: {a:2, b:2}, n=4, d=2 -> a: 2/6 + 2/6 * 1/2 = 1/2, b: 1/2
        let p = abab().predict(&['a']);
        assert_abs_diff_eq!(p[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn repeated_symbol_keeps_escape_mass() {
        let m = train_ppm(chars("ab"), &[chars("aaaaa")], 1).unwrap();
        // order 1 "a": {a:4} -> 4/5 + 1/5 * P0(a); order 0 {a:5} -> 5/6 + 1/6 * 1/2
        let p0 = 5.0 / 6.0 + 1.0 / 12.0;
        let p = m.predict(&['a']);
        assert_abs_diff_eq!(p[0], 0.8 + 0.2 * p0, epsilon = 1e-15);
        assert!(p[0] < 1.0);
    }

    #[test]
    fn untrained_model_is_uniform() {
        let m: PpmModel<char> = PpmModel::new(chars("abcd"), 2);
        assert_eq!(m.predict(&['a', 'b']), vec![0.25; 4]);
    }

    #[test]
    fn order_zero_is_unigram_with_escape() {
        let m = train_ppm(chars("abc"), &[chars("aab")], 0).unwrap();
        // {a:2, b:1}, n=3, d=2: a = 2/5 + 2/5 * 1/3
        let p = m.predict(&['b', 'a']);
        assert_abs_diff_eq!(p[0], 2.0 / 5.0 + 2.0 / 15.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 2.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn long_context_truncates_to_suffix() {
        let m = train_ppm(chars("abc"), &[chars("abcabca"), chars("cab")], 2).unwrap();
        assert_eq!(m.predict(&chars("bcab")), m.predict(&chars("ab")));
    }

    #[test]
    fn unknown_training_symbol_is_an_error() {
        let err = train_ppm(chars("ab"), &[chars("ab"), chars("abz")], 1).unwrap_err();
        assert_eq!(err, PpmError::UnknownSymbol { sequence: 1, position: 2, symbol: "'z'".into() });
        assert_eq!(train_ppm::<char>(chars("ab"), &[vec![]], 1).unwrap_err(), PpmError::EmptyCorpus);
    }

    #[test]
    fn argmax_after_a_is_b() {
        let m = abab();
        let mut rng = sampling::rng_from_seed(1);
        for seed in 0..20 {
            let mut rng2 = sampling::rng_from_seed(seed);
            let out = m.sample_after(&['a'], 4, Temperature::Argmax, &mut rng2).unwrap();
            assert_eq!(out, chars("baba"));
        }
        assert_eq!(m.sample(0, Temperature::Argmax, &mut rng), Err(PpmError::Length));
    }

    #[test]
    fn temperature_one_is_identity_and_invalid_rejected() {
        let p = vec![0.1, 0.2, 0.7];
        assert_eq!(Temperature::Scaled(1.0).reshape(&p), p);
        assert!(Temperature::new(0.0).is_err());
        assert!(Temperature::new(-1.0).is_err());
        assert!(Temperature::new(f64::NAN).is_err());
        let cold = Temperature::Scaled(0.5).reshape(&p);
        assert_abs_diff_eq!(cold.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(cold[2] > 0.7);
    }

    #[test]
    fn argmax_ties_go_to_first() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), Some(0));
        assert_eq!(Temperature::Argmax.reshape(&[0.2, 0.4, 0.4]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let m = train_ppm(chars("abc"), &[chars("abcabcaab")], 2).unwrap();
        let back: PpmModel<char> = PpmModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), m.to_json());
    }

    #[test]
    fn alphabet_extension_keeps_counts() {
        let m = abab();
        let wider = m.with_alphabet(['c']);
        assert_eq!(wider.alphabet(), &['a', 'b', 'c']);
        assert_eq!(wider.count(&['a'], &'b'), 2.0);
        let p = wider.predict(&['a']);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p[2] > 0.0);
    }

    #[test]
    fn log_likelihood_matches_product() {
        let m = abab();
        let expected = m.predict(&[])[0].ln() + m.predict(&['a'])[1].ln() + m.predict(&['b'])[0].ln();
        assert_abs_diff_eq!(m.log_likelihood(&chars("aba")), expected, epsilon = 1e-12);
        assert_eq!(m.log_likelihood(&chars("az")), f64::NEG_INFINITY);
    }
}

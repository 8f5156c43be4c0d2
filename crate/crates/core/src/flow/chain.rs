//! Exact sampling from a PPM chain under per-slot constraints.
//!
//! For models of order at most 2 the sampler runs forward filtering over
//! states made of the last `max(order, 1)` symbols, then samples backwards,
//! so every draw comes from the model's distribution conditioned on the
//! left context and on all slot constraints. Higher orders fall back to
//! rejection sampling.

use std::collections::{BTreeMap, HashMap};

use crate::ppm::{PpmModel, Symbol, UNKNOWN};
use crate::sampling::{self, Rng};

use super::FlowError;

/// Largest model order handled by forward filtering.
pub const MAX_EXACT_ORDER: usize = 2;

/// Draws allowed per sample in the rejection fallback.
pub const REJECTION_BUDGET: usize = 100_000;

/// Constraint on one position of the sampled sequence (alphabet indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Free,
    Pinned(u32),
    /// Must repeat the symbol just before it.
    Copy,
}

type State = Vec<u32>;

/// A prepared sampler for one left context and slot list.
pub struct ChainSampler<'a, S: Symbol> {
    model: &'a PpmModel<S>,
    left: Vec<u32>,
    slots: Vec<Slot>,
    width: usize,
    // alphas[t] is the normalized forward message after t slots
    alphas: Vec<BTreeMap<State, f64>>,
    predictions: HashMap<State, Vec<f64>>,
}

fn shift(state: &[u32], symbol: u32, width: usize) -> State {
    let mut next = state.to_vec();
    next.push(symbol);
    if next.len() > width {
        next.remove(0);
    }
    next
}

impl<'a, S: Symbol> ChainSampler<'a, S> {
    /// Prepares sampling of `slots` after the encoded `left` context.
    /// Fails with [`FlowError::NoCompletion`] when the constraints leave no
    /// sequence with positive probability.
    pub fn new(model: &'a PpmModel<S>, left: &[u32], slots: Vec<Slot>) -> Result<Self, FlowError> {
        let order = model.max_order();
        let width = order.max(1);
        let mut sampler =
            ChainSampler { model, left: left.to_vec(), slots, width, alphas: Vec::new(), predictions: HashMap::new() };
        if order <= MAX_EXACT_ORDER {
            sampler.forward()?;
        } else if sampler.slots.iter().any(|s| matches!(s, Slot::Pinned(UNKNOWN))) {
            return Err(FlowError::NoCompletion);
        }
        Ok(sampler)
    }

    pub fn is_exact(&self) -> bool {
        self.model.max_order() <= MAX_EXACT_ORDER
    }

    fn context<'s>(&self, state: &'s [u32]) -> &'s [u32] {
        &state[state.len().saturating_sub(self.model.max_order())..]
    }

    fn allowed(&self, slot: Slot, state: &[u32]) -> Vec<u32> {
        match slot {
            Slot::Free => (0..self.model.alphabet().len() as u32).collect(),
            Slot::Pinned(s) if s != UNKNOWN => vec![s],
            Slot::Copy => match state.last() {
                Some(&s) if s != UNKNOWN => vec![s],
                _ => vec![],
            },
            Slot::Pinned(_) => vec![],
        }
    }

    fn forward(&mut self) -> Result<(), FlowError> {
        let start: State = self.left[self.left.len().saturating_sub(self.width)..].to_vec();
        let mut alpha = BTreeMap::from([(start, 1.0)]);
        self.alphas.push(alpha.clone());
        for t in 0..self.slots.len() {
            let mut next: BTreeMap<State, f64> = BTreeMap::new();
            for (state, weight) in &alpha {
                let ctx = self.context(state).to_vec();
                let model = self.model;
                let dist = self.predictions.entry(ctx.clone()).or_insert_with(|| model.predict_encoded(&ctx)).clone();
                for symbol in self.allowed(self.slots[t], state) {
                    let p = dist[symbol as usize];
                    if p > 0.0 {
                        *next.entry(shift(state, symbol, self.width)).or_insert(0.0) += weight * p;
                    }
                }
            }
            let total: f64 = next.values().sum();
            if !(total > 0.0) {
                return Err(FlowError::NoCompletion);
            }
            for w in next.values_mut() {
                *w /= total;
            }
            self.alphas.push(next.clone());
            alpha = next;
        }
        Ok(())
    }

    /// Draws one sequence of alphabet indices, one per slot.
    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<u32>, FlowError> {
        if self.is_exact() {
            Ok(self.sample_exact(rng))
        } else {
            self.sample_rejection(rng)
        }
    }

    fn sample_exact(&self, rng: &mut Rng) -> Vec<u32> {
        let n = self.slots.len();
        let pick = |entries: &[(&State, f64)], rng: &mut Rng| -> State {
            let weights: Vec<f64> = entries.iter().map(|(_, w)| *w).collect();
            entries[sampling::sample_index(&weights, rng).expect("forward pass left positive mass")].0.clone()
        };
        let last: Vec<(&State, f64)> = self.alphas[n].iter().map(|(s, w)| (s, *w)).collect();
        let mut state = pick(&last, rng);
        let mut out = vec![0u32; n];
        for t in (0..n).rev() {
            let symbol = *state.last().expect("states after a slot are non-empty");
            out[t] = symbol;
            let predecessors: Vec<(&State, f64)> = self.alphas[t]
                .iter()
                .filter(|(prev, _)| shift(prev, symbol, self.width) == state)
                .filter(|(prev, _)| self.allowed(self.slots[t], prev).contains(&symbol))
                .map(|(prev, w)| (prev, w * self.predictions[self.context(prev)][symbol as usize]))
                .collect();
            state = pick(&predecessors, rng);
        }
        out
    }

    fn sample_rejection(&self, rng: &mut Rng) -> Result<Vec<u32>, FlowError> {
        let order = self.model.max_order();
        'attempt: for _ in 0..REJECTION_BUDGET {
            let mut history = self.left.clone();
            let mut out = Vec::with_capacity(self.slots.len());
            for slot in &self.slots {
                let ctx = &history[history.len().saturating_sub(order)..];
                let dist = self.model.predict_encoded(ctx);
                let symbol = sampling::sample_index(&dist, rng).expect("PPM distributions are never empty") as u32;
                let ok = match slot {
                    Slot::Free => true,
                    Slot::Pinned(s) => *s == symbol,
                    Slot::Copy => history.last() == Some(&symbol),
                };
                if !ok {
                    continue 'attempt;
                }
                history.push(symbol);
                out.push(symbol);
            }
            return Ok(out);
        }
        Err(FlowError::RejectionBudget(REJECTION_BUDGET))
    }
}

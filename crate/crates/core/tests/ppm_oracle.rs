//! The PPM model against a direct count-and-blend oracle.

use greenroom::ppm::{train_ppm, PpmModel, Temperature};
use greenroom::sampling::{entropy, rng_from_seed};
use proptest::prelude::*;
use rand::Rng;

/// Occurrences of `symbol` right after `ctx` across the corpus.
fn occurrences(corpus: &[Vec<u8>], ctx: &[u8], symbol: Option<u8>) -> f64 {
    let mut n = 0.0;
    for seq in corpus {
        for pos in ctx.len()..seq.len() {
            if &seq[pos - ctx.len()..pos] == ctx && symbol.is_none_or(|s| seq[pos] == s) {
                n += 1.0;
            }
        }
    }
    n
}

fn oracle(corpus: &[Vec<u8>], alphabet: &[u8], order: usize, ctx: &[u8], symbol: u8) -> f64 {
    let k = order.min(ctx.len());
    blend(corpus, alphabet, &ctx[ctx.len() - k..], symbol)
}

fn blend(corpus: &[Vec<u8>], alphabet: &[u8], ctx: &[u8], symbol: u8) -> f64 {
    let lower = if ctx.is_empty() { 1.0 / alphabet.len() as f64 } else { blend(corpus, alphabet, &ctx[1..], symbol) };
    let total = occurrences(corpus, ctx, None);
    if total == 0.0 {
        return lower;
    }
    let distinct = alphabet.iter().filter(|s| occurrences(corpus, ctx, Some(**s)) > 0.0).count() as f64;
    (occurrences(corpus, ctx, Some(symbol)) + distinct * lower) / (total + distinct)
}

fn all_contexts(alphabet: &[u8], max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for c in &frontier {
            for s in alphabet {
                let mut d: Vec<u8> = c.clone();
                d.push(*s);
                next.push(d);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[test]
fn matches_oracle_on_every_small_context() {
    let mut rng = rng_from_seed(2024);
    for size in 1..=4u8 {
        let alphabet: Vec<u8> = (0..size).collect();
        for order in 0..=2 {
            for _ in 0..5 {
                let corpus: Vec<Vec<u8>> = (0..rng.gen_range(1..4))
                    .map(|_| (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0..size)).collect())
                    .collect();
                let model = train_ppm(alphabet.clone(), &corpus, order).unwrap();
                for ctx in all_contexts(&alphabet, 3) {
                    let dist = model.predict(&ctx);
                    for s in &alphabet {
                        let expected = oracle(&corpus, &alphabet, order, &ctx, *s);
                        assert!(
                            (dist[*s as usize] - expected).abs() < 1e-9,
                            "order {} ctx {:?} symbol {}: {} vs {}",
                            order,
                            ctx,
                            s,
                            dist[*s as usize],
                            expected
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn json_round_trip_keeps_predictions() {
    let corpus = vec![vec![0u8, 1, 2, 1, 0, 1, 1]];
    let model = train_ppm(0..3u8, &corpus, 2).unwrap();
    let back: PpmModel<u8> = PpmModel::from_json(&model.to_json()).unwrap();
    for ctx in all_contexts(&[0, 1, 2], 2) {
        assert_eq!(model.predict(&ctx), back.predict(&ctx));
    }
}

fn corpus_strategy() -> impl Strategy<Value = (u8, usize, Vec<Vec<u8>>)> {
    (2u8..6, 0usize..4).prop_flat_map(|(size, order)| {
        (Just(size), Just(order), prop::collection::vec(prop::collection::vec(0..size, 1..20), 1..4))
    })
}

proptest! {
    #[test]
    fn predictions_are_distributions((size, order, corpus) in corpus_strategy(), ctx in prop::collection::vec(0u8..6, 0..5)) {
        let ctx: Vec<u8> = ctx.into_iter().map(|c| c % size).collect();
        let model = train_ppm(0..size, &corpus, order).unwrap();
        let dist = model.predict(&ctx);
        prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(dist.iter().all(|p| *p > 0.0));
    }

    #[test]
    fn entropy_rises_with_temperature((size, order, corpus) in corpus_strategy()) {
        let model = train_ppm(0..size, &corpus, order).unwrap();
        let dist = model.predict(&corpus[0][..corpus[0].len().min(order)]);
        let mut last = entropy(&Temperature::Argmax.reshape(&dist));
        for t in [0.05, 0.3, 0.6, 0.7, 1.0] {
            let h = entropy(&Temperature::Scaled(t).reshape(&dist));
            prop_assert!(h >= last - 1e-12, "T={} gave {} after {}", t, h, last);
            last = h;
        }
    }
}

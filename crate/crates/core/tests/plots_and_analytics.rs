//! Plot sampling and curve averaging against hand computations.

use std::collections::BTreeMap;
use std::path::PathBuf;

use approx::assert_relative_eq;
use greenroom::analytics::{average_curves, normalize_curve, FeatureCurve};
use greenroom::plot::{bundled_vocabulary, generate_plot, read_plot_corpus, score_plot, train_plot_model, PlotScore};
use proptest::prelude::*;

fn plots() -> Vec<Vec<String>> {
    read_plot_corpus(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/plots/annotated.json")).unwrap()
}

#[test]
fn unsmoothed_plots_follow_the_corpus() {
    let corpus = plots();
    let model = train_plot_model(&corpus, bundled_vocabulary(), 0.0).unwrap();
    let starts: Vec<&String> = corpus.iter().map(|p| &p[0]).collect();
    let seen_pair = |a: &String, b: &String| corpus.iter().any(|p| p.windows(2).any(|w| &w[0] == a && &w[1] == b));
    for seed in 0..300 {
        let line = generate_plot(&model, 10, None, seed).unwrap();
        assert_eq!(line.elements.len(), 10);
        assert!(starts.contains(&&line.elements[0]));
        assert!(line.elements.iter().all(|e| model.element(e).is_some()));
        assert!(line.elements.windows(2).all(|w| seen_pair(&w[0], &w[1])));
        let PlotScore::Supported(score) = score_plot(&model, &line.elements).unwrap() else { panic!("unsupported") };
        assert_eq!(score.to_bits(), line.log_probability.to_bits());
    }
}

#[test]
fn smoothing_opens_every_transition() {
    let model = train_plot_model(&plots(), bundled_vocabulary(), 0.5).unwrap();
    let ids: Vec<String> = model.vocabulary.iter().map(|e| e.id.clone()).collect();
    let line = vec![ids[0].clone(), ids[ids.len() - 1].clone(), ids[1].clone()];
    assert!(matches!(score_plot(&model, &line).unwrap(), PlotScore::Supported(s) if s < 0.0));
    for from in &ids[..3] {
        let row: f64 = ids.iter().map(|to| model.transition_probability(from, to)).sum();
        assert_relative_eq!(row, 1.0, epsilon = 1e-12);
    }
}

fn series() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.01f64..5.0, -10.0f64..10.0), 2..20).prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|(dt, v)| {
                t += dt;
                (t, v)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn resampled_curves_stay_in_range(s in series(), n in 2usize..150) {
        let curve = normalize_curve(&s, n).unwrap();
        let lo = s.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = s.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(curve.len(), n);
        prop_assert_eq!(curve[0], s[0].1);
        prop_assert_eq!(curve[n - 1], s[s.len() - 1].1);
        prop_assert!(curve.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
    }

    #[test]
    fn group_means_ignore_order_and_scale_linearly(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 7), 1..12),
        k in -3.0f64..3.0,
    ) {
        let curves = |scale: f64, rev: bool| {
            let mut v: Vec<FeatureCurve> = points
                .iter()
                .map(|p| FeatureCurve { feature_name: "f".into(), show_name: "s".into(), points: p.iter().map(|x| x * scale).collect() })
                .collect();
            if rev {
                v.reverse();
            }
            BTreeMap::from([("g".to_string(), v)])
        };
        let base = &average_curves(&curves(1.0, false)).unwrap()["g"];
        let reversed = &average_curves(&curves(1.0, true)).unwrap()["g"];
        let scaled = &average_curves(&curves(k, false)).unwrap()["g"];
        for i in 0..7 {
            let hand = points.iter().map(|p| p[i]).sum::<f64>() / points.len() as f64;
            prop_assert!((base[i] - hand).abs() < 1e-12);
            prop_assert!((reversed[i] - base[i]).abs() < 1e-12);
            prop_assert!((scaled[i] - k * base[i]).abs() < 1e-9);
        }
    }
}

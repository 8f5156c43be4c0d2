//! Show analytics: success categories, factor propensities, and
//! time-normalized feature curves and emotional arcs.
//!
//! ```
//! use greenroom::analytics::{classify, normalize_curve, SuccessCategory, Thresholds};
//! use greenroom::analytics::ShowRecord;
//!
//! let show = ShowRecord::new("Common Ground", 1000, 3);
//! assert_eq!(classify(&show, Thresholds::default()).unwrap(), SuccessCategory::Hit);
//! let curve = normalize_curve(&[(0.0, 0.0), (10.0, 10.0)], 5).unwrap();
//! assert_eq!(curve, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("thresholds must be at least 1")]
    Threshold,
    #[error("show {show:?} has no value for factor {factor:?}")]
    MissingFactor { show: String, factor: String },
    #[error("factor {factor:?} is not boolean on show {show:?}")]
    NonBooleanFactor { show: String, factor: String },
    #[error("no shows in category {0}")]
    EmptyCategory(String),
    #[error("a curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("times must be strictly increasing (at index {0})")]
    Times(usize),
    #[error("non-finite value in series")]
    NonFinite,
    #[error("curves disagree on length: {0} vs {1}")]
    Mismatch(usize, usize),
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("arc {show:?}: {reason}")]
    Arc { show: String, reason: String },
    #[error("no arcs to average")]
    NoArcs,
    #[error("{0}")]
    Csv(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Bool(bool),
    Real(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShowRecord {
    pub name: String,
    pub run_length_performances: u64,
    pub awards_won: u64,
    #[serde(default)]
    pub features: BTreeMap<String, FeatureValue>,
}

impl ShowRecord {
    pub fn new(name: &str, run: u64, awards: u64) -> Self {
        ShowRecord { name: name.into(), run_length_performances: run, awards_won: awards, features: BTreeMap::new() }
    }

    pub fn with(mut self, factor: &str, value: FeatureValue) -> Self {
        self.features.insert(factor.into(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuccessCategory {
    Hit,
    CrowdPleaser,
    CriticallyAcclaimed,
    Flop,
}

impl fmt::Display for SuccessCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Cutoffs for commercial (performances) and critical (awards) success.
/// The defaults of 500 and 1 are arbitrary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub commercial: u64,
    pub critical: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { commercial: 500, critical: 1 }
    }
}

pub fn classify(record: &ShowRecord, thresholds: Thresholds) -> Result<SuccessCategory, AnalyticsError> {
    if thresholds.commercial < 1 || thresholds.critical < 1 {
        return Err(AnalyticsError::Threshold);
    }
    let commercial = record.run_length_performances >= thresholds.commercial;
    let critical = record.awards_won >= thresholds.critical;
    Ok(match (commercial, critical) {
        (true, true) => SuccessCategory::Hit,
        (true, false) => SuccessCategory::CrowdPleaser,
        (false, true) => SuccessCategory::CriticallyAcclaimed,
        (false, false) => SuccessCategory::Flop,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Propensity {
    pub hit_rate: f64,
    pub flop_rate: f64,
}

/// Fraction of hits and of flops on which a boolean factor holds.
pub fn factor_propensity(shows: &[(ShowRecord, SuccessCategory)], factor: &str) -> Result<Propensity, AnalyticsError> {
    let mut tally: BTreeMap<SuccessCategory, (usize, usize)> = BTreeMap::new();
    for (show, category) in shows {
        let value = match show.features.get(factor) {
            None => return Err(AnalyticsError::MissingFactor { show: show.name.clone(), factor: factor.into() }),
            Some(FeatureValue::Real(_)) => {
                return Err(AnalyticsError::NonBooleanFactor { show: show.name.clone(), factor: factor.into() })
            }
            Some(FeatureValue::Bool(b)) => *b,
        };
        let entry = tally.entry(*category).or_default();
        entry.0 += value as usize;
        entry.1 += 1;
    }
    let rate = |c: SuccessCategory| match tally.get(&c) {
        Some(&(yes, n)) => Ok(yes as f64 / n as f64),
        None => Err(AnalyticsError::EmptyCategory(c.to_string())),
    };
    Ok(Propensity { hit_rate: rate(SuccessCategory::Hit)?, flop_rate: rate(SuccessCategory::Flop)? })
}

/// Resamples a series at `n_points` equally spaced positions of its time
/// span by linear interpolation. The first and last values are kept exactly.
pub fn normalize_curve(series: &[(f64, f64)], n_points: usize) -> Result<Vec<f64>, AnalyticsError> {
    if series.len() < 2 {
        return Err(AnalyticsError::TooFewPoints(series.len()));
    }
    if n_points < 2 {
        return Err(AnalyticsError::TooFewPoints(n_points));
    }
    if series.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    if let Some(i) = series.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(AnalyticsError::Times(i + 1));
    }
    let (t0, v0) = series[0];
    let (t1, v1) = series[series.len() - 1];
    let mut out = Vec::with_capacity(n_points);
    out.push(v0);
    let mut seg = 0;
    for k in 1..n_points - 1 {
        let t = t0 + (t1 - t0) * (k as f64 / (n_points - 1) as f64);
        while series[seg + 1].0 < t {
            seg += 1;
        }
        let (ta, va) = series[seg];
        let (tb, vb) = series[seg + 1];
        out.push(va + (vb - va) * ((t - ta) / (tb - ta)));
    }
    out.push(v1);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCurve {
    pub feature_name: String,
    pub show_name: String,
    pub points: Vec<f64>,
}

impl FeatureCurve {
    pub fn from_series(
        feature_name: &str,
        show_name: &str,
        series: &[(f64, f64)],
        n_points: usize,
    ) -> Result<Self, AnalyticsError> {
        Ok(FeatureCurve {
            feature_name: feature_name.into(),
            show_name: show_name.into(),
            points: normalize_curve(series, n_points)?,
        })
    }
}

fn pointwise_mean<'a>(curves: impl IntoIterator<Item = &'a [f64]>) -> Result<Option<Vec<f64>>, AnalyticsError> {
    let mut sum: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for c in curves {
        match &mut sum {
            None => sum = Some(c.to_vec()),
            Some(s) if s.len() != c.len() => return Err(AnalyticsError::Mismatch(s.len(), c.len())),
            Some(s) => s.iter_mut().zip(c).for_each(|(a, b)| *a += b),
        }
        count += 1;
    }
    Ok(sum.map(|s| s.into_iter().map(|v| v / count as f64).collect()))
}

/// Pointwise mean curve of each group. Every curve, across groups, must
/// have the same length.
pub fn average_curves(
    groups: &BTreeMap<String, Vec<FeatureCurve>>,
) -> Result<BTreeMap<String, Vec<f64>>, AnalyticsError> {
    let mut out = BTreeMap::new();
    let mut len: Option<usize> = None;
    for (name, curves) in groups {
        let mean = pointwise_mean(curves.iter().map(|c| c.points.as_slice()))?
            .ok_or_else(|| AnalyticsError::EmptyGroup(name.clone()))?;
        match len {
            Some(l) if l != mean.len() => return Err(AnalyticsError::Mismatch(l, mean.len())),
            _ => len = Some(mean.len()),
        }
        out.insert(name.clone(), mean);
    }
    Ok(out)
}

pub const FLOP: &str = "flop";
pub const NON_FLOP: &str = "non_flop";

/// Splits curves into `flop` and `non_flop` groups. Empty groups are omitted.
pub fn flop_groups(curves: Vec<(FeatureCurve, SuccessCategory)>) -> BTreeMap<String, Vec<FeatureCurve>> {
    let mut out: BTreeMap<String, Vec<FeatureCurve>> = BTreeMap::new();
    for (curve, category) in curves {
        let key = if category == SuccessCategory::Flop { FLOP } else { NON_FLOP };
        out.entry(key.into()).or_default().push(curve);
    }
    out
}

/// Per-song emotion intensities of one show, in song order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmotionalArc {
    pub show_name: String,
    pub songs: Vec<Vec<f64>>,
}

impl EmotionalArc {
    fn validate(&self) -> Result<usize, AnalyticsError> {
        let err = |reason: String| AnalyticsError::Arc { show: self.show_name.clone(), reason };
        if self.songs.len() < 2 {
            return Err(err(format!("needs at least 2 songs, has {}", self.songs.len())));
        }
        let k = self.songs[0].len();
        if k == 0 {
            return Err(err("songs have no emotion classes".into()));
        }
        for (i, song) in self.songs.iter().enumerate() {
            if song.len() != k {
                return Err(err(format!("song {} has {} classes, expected {}", i, song.len(), k)));
            }
            if song.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(err(format!("song {} has an intensity outside [0, 1]", i)));
            }
        }
        Ok(k)
    }

    /// One normalized curve per emotion class. Songs sit at equally
    /// spaced times.
    pub fn normalized(&self, n_points: usize) -> Result<Vec<Vec<f64>>, AnalyticsError> {
        let k = self.validate()?;
        (0..k)
            .map(|class| {
                let series: Vec<(f64, f64)> =
                    self.songs.iter().enumerate().map(|(i, s)| (i as f64, s[class])).collect();
                normalize_curve(&series, n_points)
            })
            .collect()
    }
}

/// Mean normalized arc: K curves of `n_points` each.
pub fn average_arcs(arcs: &[EmotionalArc], n_points: usize) -> Result<Vec<Vec<f64>>, AnalyticsError> {
    let normalized = arcs.iter().map(|a| a.normalized(n_points)).collect::<Result<Vec<_>, _>>()?;
    let k = normalized.first().ok_or(AnalyticsError::NoArcs)?.len();
    if let Some(bad) = normalized.iter().find(|n| n.len() != k) {
        return Err(AnalyticsError::Mismatch(k, bad.len()));
    }
    (0..k)
        .map(|class| Ok(pointwise_mean(normalized.iter().map(|n| n[class].as_slice()))?.expect("arcs are non-empty")))
        .collect()
}

/// A raw feature series of one show, as stored in curve files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub show_name: String,
    pub feature_name: String,
    pub category: SuccessCategory,
    pub series: Vec<(f64, f64)>,
}

/// Normalizes every record and averages flops against everything else.
pub fn flop_curve_means(
    records: &[CurveRecord],
    n_points: usize,
) -> Result<BTreeMap<String, Vec<f64>>, AnalyticsError> {
    let curves = records
        .iter()
        .map(|r| Ok((FeatureCurve::from_series(&r.feature_name, &r.show_name, &r.series, n_points)?, r.category)))
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    average_curves(&flop_groups(curves))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcRecord {
    #[serde(flatten)]
    pub arc: EmotionalArc,
    pub category: SuccessCategory,
}

/// Emotion class labels and the arcs measured with them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcDataset {
    pub labels: Vec<String>,
    pub arcs: Vec<ArcRecord>,
}

impl ArcDataset {
    /// Mean arc of the flop and non-flop groups, one curve per label, keyed
    /// `group/label`.
    pub fn flop_means(&self, n_points: usize) -> Result<BTreeMap<String, Vec<f64>>, AnalyticsError> {
        let mut out = BTreeMap::new();
        for (group, is_flop) in [(FLOP, true), (NON_FLOP, false)] {
            let arcs: Vec<EmotionalArc> = self
                .arcs
                .iter()
                .filter(|r| (r.category == SuccessCategory::Flop) == is_flop)
                .map(|r| r.arc.clone())
                .collect();
            if arcs.is_empty() {
                continue;
            }
            let mean = average_arcs(&arcs, n_points)?;
            if mean.len() != self.labels.len() {
                return Err(AnalyticsError::Mismatch(self.labels.len(), mean.len()));
            }
            for (label, curve) in self.labels.iter().zip(mean) {
                out.insert(format!("{}/{}", group, label), curve);
            }
        }
        Ok(out)
    }
}

/// Factors that are boolean on every show, sorted.
pub fn boolean_factors(shows: &[ShowRecord]) -> Vec<String> {
    let Some(first) = shows.first() else { return Vec::new() };
    first
        .features
        .keys()
        .filter(|f| shows.iter().all(|s| matches!(s.features.get(*f), Some(FeatureValue::Bool(_)))))
        .cloned()
        .collect()
}

/// Classifies the shows and tabulates the propensity of each factor.
pub fn propensity_table(
    shows: &[ShowRecord],
    thresholds: Thresholds,
    factors: &[String],
) -> Result<Vec<(String, Propensity)>, AnalyticsError> {
    let classified =
        shows.iter().map(|s| Ok((s.clone(), classify(s, thresholds)?))).collect::<Result<Vec<_>, AnalyticsError>>()?;
    factors.iter().map(|f| Ok((f.clone(), factor_propensity(&classified, f)?))).collect()
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).map_err(|e| AnalyticsError::Csv(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| AnalyticsError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `factor,hit_rate,flop_rate` rows.
pub fn propensity_csv(rows: &[(String, Propensity)]) -> Result<String, AnalyticsError> {
    csv_string(|w| {
        w.write_record(["factor", "hit_rate", "flop_rate"])?;
        for (factor, p) in rows {
            w.write_record([factor.clone(), p.hit_rate.to_string(), p.flop_rate.to_string()])?;
        }
        Ok(())
    })
}

/// One column per named curve, one row per normalized position.
pub fn curves_csv(curves: &BTreeMap<String, Vec<f64>>) -> Result<String, AnalyticsError> {
    let n = curves.values().map(Vec::len).max().unwrap_or(0);
    csv_string(|w| {
        let mut header = vec!["position".to_string()];
        header.extend(curves.keys().cloned());
        w.write_record(&header)?;
        for i in 0..n {
            let mut row = vec![(i as f64 / (n.max(2) - 1) as f64).to_string()];
            row.extend(curves.values().map(|c| c.get(i).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

const PALETTE: [&str; 10] =
    ["#1b6ca8", "#d1495b", "#66a182", "#edae49", "#8e6c8a", "#2e4057", "#f28f3b", "#588b8b", "#c8553d", "#93b7be"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped horizontal bars, hit rate above flop rate for each factor.
pub fn propensity_svg(rows: &[(String, Propensity)]) -> String {
    let (left, bar, width) = (160.0, 12.0, 300.0);
    let height = 30.0 + rows.len() as f64 * 3.0 * bar;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        left + width + 60.0,
        height
    );
    let _ = write!(
        svg,
        r#"<text x="{left}" y="14" fill="{}">hit</text><text x="{}" y="14" fill="{}">flop</text>"#,
        PALETTE[0],
        left + 40.0,
        PALETTE[1]
    );
    for (i, (factor, p)) in rows.iter().enumerate() {
        let y = 24.0 + i as f64 * 3.0 * bar;
        let _ = write!(svg, r#"<text x="4" y="{}">{}</text>"#, y + bar * 1.5, escape(factor));
        for (j, rate) in [p.hit_rate, p.flop_rate].into_iter().enumerate() {
            let _ = write!(
                svg,
                r#"<rect x="{left}" y="{}" width="{:.2}" height="{}" fill="{}"/>"#,
                y + j as f64 * bar,
                rate * width,
                bar - 1.0,
                PALETTE[j]
            );
        }
    }
    svg.push_str("</svg>");
    svg
}

/// Line chart of named curves over normalized time.
pub fn curves_svg(curves: &BTreeMap<String, Vec<f64>>) -> String {
    let (w, h, pad) = (480.0, 240.0, 30.0);
    let values = curves.values().flatten().copied();
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        w + 120.0,
        h + 2.0 * pad
    );
    for (i, (name, points)) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let last = (points.len().max(2) - 1) as f64;
        let coords: Vec<String> = points
            .iter()
            .enumerate()
            .map(|(j, v)| format!("{:.2},{:.2}", pad + w * j as f64 / last, pad + h * (1.0 - (v - lo) / span)))
            .collect();
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/><text x="{}" y="{}" fill="{colour}">{}</text>"#,
            coords.join(" "),
            w + pad + 8.0,
            pad + 14.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    svg.push_str("</svg>");
    svg
}

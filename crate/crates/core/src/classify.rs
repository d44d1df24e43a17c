//! Lexicon-driven tweet features and a repeated hold-out evaluation harness
//! for 3-class sentiment classification.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{tweet_from_record, IngestOptions, Parsed, RawRecord, Tweet};
use crate::error::{Error, Result};
use crate::lexicon::ValenceLexicon;
use crate::par;
use crate::stats;

/// Minimum number of lexicon hits for a tweet to get features.
pub const MIN_MATCHES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Neutral,
    Positive,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Negative, Label::Neutral, Label::Positive];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negative" => Ok(Label::Negative),
            "neutral" => Ok(Label::Neutral),
            "positive" => Ok(Label::Positive),
            o => Err(Error::InvalidArgument(format!("unknown label '{o}'"))),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Negative => "negative",
            Label::Neutral => "neutral",
            Label::Positive => "positive",
        })
    }
}

/// Anything that maps a lemma to a valence.
pub trait ValenceLookup: Sync {
    fn valence_of(&self, term: &str) -> Option<f64>;
}

impl ValenceLookup for BTreeMap<String, f64> {
    fn valence_of(&self, term: &str) -> Option<f64> {
        self.get(term).copied()
    }
}

impl ValenceLookup for HashMap<String, f64> {
    fn valence_of(&self, term: &str) -> Option<f64> {
        self.get(term).copied()
    }
}

impl ValenceLookup for ValenceLexicon {
    fn valence_of(&self, term: &str) -> Option<f64> {
        self.valence(term)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentFeatures {
    pub mean: f64,
    pub gmean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub count_gt7: usize,
    pub count_gt9: usize,
    pub count_lt3: usize,
    pub count_lt1: usize,
    pub length: usize,
    pub has_negation: bool,
}

impl SentimentFeatures {
    pub const DIM: usize = 12;

    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.mean,
            self.gmean,
            self.median,
            self.std,
            self.min,
            self.max,
            self.count_gt7 as f64,
            self.count_gt9 as f64,
            self.count_lt3 as f64,
            self.count_lt1 as f64,
            self.length as f64,
            if self.has_negation { 1.0 } else { 0.0 },
        ]
    }
}

/// Statistics over the valences of the tweet's lemmas found in `lexicon`.
/// `None` when fewer than three lemmas match.
pub fn extract_features<L: ValenceLookup + ?Sized>(tweet: &Tweet, lexicon: &L) -> Option<SentimentFeatures> {
    let mut vals: Vec<f64> = tweet
        .lemmas
        .iter()
        .filter_map(|(l, _)| lexicon.valence_of(l))
        .collect();
    if vals.len() < MIN_MATCHES {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let mean = stats::mean(&vals);
    let gmean = if vals.contains(&0.0) {
        0.0
    } else {
        // scaled by the minimum so that constant inputs come back exactly
        let lo = vals[0];
        lo * (vals.iter().map(|v| (v / lo).ln()).sum::<f64>() / vals.len() as f64).exp()
    };
    let count = |f: fn(f64) -> bool| vals.iter().filter(|&&v| f(v)).count();
    Some(SentimentFeatures {
        mean,
        gmean,
        median: stats::median_sorted(&vals),
        std: stats::std_dev(&vals),
        min: vals[0],
        max: vals[vals.len() - 1],
        count_gt7: count(|v| v > 7.0),
        count_gt9: count(|v| v > 9.0),
        count_lt3: count(|v| v < 3.0),
        count_lt1: count(|v| v < 1.0),
        length: tweet.lemmas.len(),
        has_negation: tweet.negated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTweet {
    pub tweet: Tweet,
    pub label: Label,
}

#[derive(Deserialize)]
struct LabeledRecord {
    #[serde(flatten)]
    record: RawRecord,
    label: String,
}

/// Reads a labeled JSON-lines file (`id`, `lemmas` or `text`, `label`).
pub fn load_labeled(path: &Path, opts: &IngestOptions) -> Result<Vec<LabeledTweet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let label: Label = rec
            .label
            .parse()
            .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?;
        let opts = IngestOptions {
            language: None,
            ..opts.clone()
        };
        match tweet_from_record(rec.record, &opts) {
            Parsed::Kept(t) => out.push(LabeledTweet { tweet: *t, label }),
            Parsed::Empty => {}
            Parsed::Malformed(m) => return Err(Error::parse(path, i + 1, m)),
            Parsed::WrongLanguage => unreachable!(),
        }
    }
    Ok(out)
}

/// A trained model.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Label;
}

/// Fits a [`Classifier`] from labeled feature vectors.
pub trait Learner: Sync {
    type Model: Classifier;

    fn fit(&self, x: &[Vec<f64>], y: &[Label]) -> Self::Model;
}

/// Always predicts the most frequent training label (lowest label on ties).
#[derive(Debug, Clone, Copy, Default)]
pub struct MajorityClass;

pub struct ConstantModel(pub Label);

impl Classifier for ConstantModel {
    fn predict(&self, _: &[f64]) -> Label {
        self.0
    }
}

impl Learner for MajorityClass {
    type Model = ConstantModel;

    fn fit(&self, _: &[Vec<f64>], y: &[Label]) -> ConstantModel {
        let mut counts = [0usize; 3];
        for l in y {
            counts[l.index()] += 1;
        }
        let mut best = 0;
        for k in 1..3 {
            if counts[k] > counts[best] {
                best = k;
            }
        }
        ConstantModel(Label::ALL[best])
    }
}

/// One-vs-rest linear SVM on standardised features, trained by full-batch
/// subgradient descent on the regularised hinge loss (step `1 / (λ t)`).
#[derive(Debug, Clone, Copy)]
pub struct LinearSvm {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for LinearSvm {
    fn default() -> Self {
        LinearSvm {
            lambda: 1e-2,
            epochs: 300,
        }
    }
}

pub struct LinearModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: [Vec<f64>; 3],
    bias: [f64; 3],
}

impl LinearModel {
    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Classifier for LinearModel {
    fn predict(&self, x: &[f64]) -> Label {
        let z = self.standardize(x);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for k in 0..3 {
            let s = dot(&self.weights[k], &z) + self.bias[k];
            if s > best_score {
                best_score = s;
                best = k;
            }
        }
        Label::ALL[best]
    }
}

impl Learner for LinearSvm {
    type Model = LinearModel;

    fn fit(&self, x: &[Vec<f64>], y: &[Label]) -> LinearModel {
        let dim = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        for j in 0..dim {
            let col: Vec<f64> = x.iter().map(|r| r[j]).collect();
            mean[j] = if col.is_empty() { 0.0 } else { stats::mean(&col) };
            let s = if col.is_empty() { 0.0 } else { stats::std_dev(&col) };
            scale[j] = if s > 0.0 { s } else { 1.0 };
        }
        let mut model = LinearModel {
            mean,
            scale,
            weights: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            bias: [0.0; 3],
        };
        let z: Vec<Vec<f64>> = x.iter().map(|r| model.standardize(r)).collect();
        for k in 0..3 {
            let target: Vec<f64> = y
                .iter()
                .map(|l| if l.index() == k { 1.0 } else { -1.0 })
                .collect();
            let w = &mut model.weights[k];
            let mut b = 0.0;
            for t in 1..=self.epochs {
                let eta = 1.0 / (self.lambda * t as f64);
                let mut gw: Vec<f64> = w.iter().map(|wi| self.lambda * wi).collect();
                let mut gb = 0.0;
                for (zi, &yi) in z.iter().zip(&target) {
                    if yi * (dot(w, zi) + b) < 1.0 {
                        for (g, v) in gw.iter_mut().zip(zi) {
                            *g -= yi * v / n;
                        }
                        gb -= yi / n;
                    }
                }
                for (wi, g) in w.iter_mut().zip(&gw) {
                    *wi -= eta * g;
                }
                b -= eta * gb;
            }
            model.bias[k] = b;
        }
        model
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    /// Repeats contributing to the statistic.
    pub n: usize,
}

impl MeanStd {
    fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return MeanStd {
                mean: f64::NAN,
                std: f64::NAN,
                n: 0,
            };
        }
        MeanStd {
            mean: stats::mean(xs),
            std: stats::std_dev(xs),
            n: xs.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    /// Repeats whose test fold had no instance of this class.
    pub undefined_repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub repeats: usize,
    pub accuracy: MeanStd,
    pub per_class: Vec<ClassMetrics>,
    /// Tweets without features (too few lexicon hits), per repeat.
    pub dropped: Vec<usize>,
    pub test_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct RepeatOutcome {
    accuracy: f64,
    /// `(precision, recall, f1)` per class, `None` when the class is absent.
    class: [Option<(f64, f64, f64)>; 3],
    dropped: usize,
    test_size: usize,
}

/// Train/test indices of repeat `r`. Depends only on the dataset size and
/// seed, so different lexicons see identical splits.
pub fn repeat_split(n: usize, train_fraction: f64, seed: u64, r: usize) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stats::rng(seed.wrapping_add(r as u64)));
    let n_train = (n as f64 * train_fraction).floor() as usize;
    let test = idx.split_off(n_train);
    (idx, test)
}

/// Repeated random hold-out evaluation.
pub fn cross_validate<L, V>(
    data: &[LabeledTweet],
    lexicon: &V,
    learner: &L,
    repeats: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<EvaluationReport>
where
    L: Learner,
    V: ValenceLookup + ?Sized,
{
    if data.is_empty() {
        return Err(Error::EmptyInput("cross_validate needs labeled data"));
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let features: Vec<Option<Vec<f64>>> = par::map(data, |d| {
        extract_features(&d.tweet, lexicon).map(|f| f.to_vector())
    });

    let outcomes: Vec<Result<RepeatOutcome>> = par::map_range(repeats, |r| {
        let (train, test) = repeat_split(data.len(), train_fraction, seed, r);
        let mut dropped = 0;
        let mut collect = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Label>) {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &i in idx {
                match &features[i] {
                    Some(f) => {
                        xs.push(f.clone());
                        ys.push(data[i].label);
                    }
                    None => dropped += 1,
                }
            }
            (xs, ys)
        };
        let (xtr, ytr) = collect(&train);
        let (xte, yte) = collect(&test);
        if xtr.is_empty() || xte.is_empty() {
            return Err(Error::EmptyInput("a fold has no tweets with features"));
        }
        let model = learner.fit(&xtr, &ytr);
        let pred: Vec<Label> = xte.iter().map(|x| model.predict(x)).collect();
        let correct = pred.iter().zip(&yte).filter(|(p, y)| p == y).count();
        let mut out = RepeatOutcome {
            accuracy: correct as f64 / yte.len() as f64,
            dropped,
            test_size: yte.len(),
            ..Default::default()
        };
        for c in Label::ALL {
            let actual = yte.iter().filter(|&&y| y == c).count();
            if actual == 0 {
                continue;
            }
            let predicted = pred.iter().filter(|&&p| p == c).count();
            let tp = pred.iter().zip(&yte).filter(|(&p, &y)| p == c && y == c).count();
            let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            let recall = tp as f64 / actual as f64;
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            out.class[c.index()] = Some((precision, recall, f1));
        }
        Ok(out)
    });
    let outcomes: Vec<RepeatOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let acc: Vec<f64> = outcomes.iter().map(|o| o.accuracy).collect();
    let per_class = Label::ALL
        .iter()
        .map(|&c| {
            let defined: Vec<(f64, f64, f64)> = outcomes.iter().filter_map(|o| o.class[c.index()]).collect();
            ClassMetrics {
                label: c,
                precision: MeanStd::of(&defined.iter().map(|m| m.0).collect::<Vec<_>>()),
                recall: MeanStd::of(&defined.iter().map(|m| m.1).collect::<Vec<_>>()),
                f1: MeanStd::of(&defined.iter().map(|m| m.2).collect::<Vec<_>>()),
                undefined_repeats: repeats - defined.len(),
            }
        })
        .collect();
    Ok(EvaluationReport {
        repeats,
        accuracy: MeanStd::of(&acc),
        per_class,
        dropped: outcomes.iter().map(|o| o.dropped).collect(),
        test_sizes: outcomes.iter().map(|o| o.test_size).collect(),
    })
}

/// Writes the CSV header for [`write_report_rows`].
pub fn write_report_header<W: Write>(mut w: W) -> std::io::Result<()> {
    writeln!(w, "lexicon,class,precision_mean,precision_std,recall_mean,recall_std,f1_mean,f1_std,undefined_repeats")
}

/// One row per class plus an `accuracy` row (accuracy in the precision columns).
pub fn write_report_rows<W: Write>(mut w: W, lexicon: &str, report: &EvaluationReport) -> std::io::Result<()> {
    for m in &report.per_class {
        writeln!(
            w,
            "{lexicon},{},{},{},{},{},{},{},{}",
            m.label, m.precision.mean, m.precision.std, m.recall.mean, m.recall.std, m.f1.mean, m.f1.std, m.undefined_repeats
        )?;
    }
    writeln!(w, "{lexicon},accuracy,{},{},,,,,0", report.accuracy.mean, report.accuracy.std)
}

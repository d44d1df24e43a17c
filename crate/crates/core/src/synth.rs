//! Synthetic multi-region corpora with a per-region diversity knob.
//!
//! Every tweet's author is "shifted" with probability `diversity_p`. An
//! unshifted author picks an anchor valence and co-selects lexicon terms
//! whose standard valences lie within one bin of it, so spreading over the
//! resulting network recovers the standard valences. A shifted author does
//! the same against the region's perturbed valence map (independent normal
//! noise of scale `valence_shift_sigma`, clamped to [0, 10]).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Tweet};
use crate::error::{Error, Result};
use crate::lexicon::{EntrySource, LexiconEntry, PosTag, ValenceLexicon, VALENCE_MAX};
use crate::par;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub code: String,
    pub n_tweets: usize,
    pub diversity_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub regions: Vec<RegionSpec>,
    /// Inclusive range of lexicon lemmas per tweet.
    pub lemmas_per_tweet: (usize, usize),
    /// Inclusive range of filler lemmas per tweet.
    pub fillers_per_tweet: (usize, usize),
    pub valence_shift_sigma: f64,
    /// Width of the co-selection window around the anchor valence.
    pub window: f64,
    pub vocabulary: ValenceLexicon,
    pub filler_count: usize,
    /// Languages with mixing weights; the first is the local language.
    pub languages: Vec<(String, f64)>,
    pub negation_rate: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Single-language config with sensible defaults.
    pub fn new(regions: Vec<RegionSpec>, vocabulary: ValenceLexicon, seed: u64) -> Self {
        SynthConfig {
            regions,
            lemmas_per_tweet: (3, 6),
            fillers_per_tweet: (0, 2),
            valence_shift_sigma: 1.0,
            window: 1.0,
            vocabulary,
            filler_count: 200,
            languages: vec![("en".into(), 1.0)],
            negation_rate: 0.05,
            seed,
        }
    }

    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.regions.is_empty() {
            return bad("no regions".into());
        }
        for r in &self.regions {
            if !(0.0..=1.0).contains(&r.diversity_p) {
                return bad(format!("diversity_p of {} outside [0, 1]", r.code));
            }
            if r.n_tweets == 0 {
                return bad(format!("region {} has no tweets", r.code));
            }
            if r.code.is_empty() {
                return bad("empty region code".into());
            }
        }
        if !(self.valence_shift_sigma > 0.0) {
            return bad("valence_shift_sigma must be > 0".into());
        }
        if !(self.window > 0.0) {
            return bad("window must be > 0".into());
        }
        let (lo, hi) = self.lemmas_per_tweet;
        if lo == 0 || lo > hi {
            return bad("lemmas_per_tweet must be a non-empty range starting at >= 1".into());
        }
        if self.fillers_per_tweet.0 > self.fillers_per_tweet.1 {
            return bad("fillers_per_tweet range is reversed".into());
        }
        if self.fillers_per_tweet.1 > 0 && self.filler_count == 0 {
            return bad("fillers requested but filler_count is 0".into());
        }
        if self.vocabulary.len() < 2 {
            return bad("vocabulary needs at least 2 terms".into());
        }
        if self.languages.is_empty() || self.languages.iter().any(|(_, w)| !(*w >= 0.0)) {
            return bad("languages need non-negative weights".into());
        }
        if !(self.languages.iter().map(|l| l.1).sum::<f64>() > 0.0) {
            return bad("language weights sum to 0".into());
        }
        if !(0.0..=1.0).contains(&self.negation_rate) {
            return bad("negation_rate outside [0, 1]".into());
        }
        Ok(())
    }

    pub fn local_language(&self) -> &str {
        &self.languages[0].0
    }

    /// Region → diversity_p, the synthetic stand-in for immigration rates.
    pub fn ground_truth(&self) -> BTreeMap<String, f64> {
        self.regions
            .iter()
            .map(|r| (r.code.clone(), r.diversity_p))
            .collect()
    }
}

/// `n` terms `w0000…` with valences uniform on [0, 10], two decimals.
pub fn synthetic_lexicon(n: usize, seed: u64) -> ValenceLexicon {
    let mut rng = stats::rng(seed);
    (0..n)
        .map(|i| {
            let v = (rng.random_range(0.0..=VALENCE_MAX) * 100.0).round() / 100.0;
            LexiconEntry::new(&format!("w{i:04}"), v, None, EntrySource::Standard).unwrap()
        })
        .collect()
}

/// Terms sorted by a valence map, for windowed co-selection.
struct SortedMap {
    terms: Vec<usize>,
    vals: Vec<f64>,
}

impl SortedMap {
    fn new(vals: &[f64]) -> Self {
        let mut terms: Vec<usize> = (0..vals.len()).collect();
        terms.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let sorted = terms.iter().map(|&t| vals[t]).collect();
        SortedMap { terms, vals: sorted }
    }

    /// Terms with valence in `[lo, hi]`; never empty (falls back to the
    /// nearest term).
    fn window(&self, lo: f64, hi: f64) -> &[usize] {
        let a = self.vals.partition_point(|&v| v < lo);
        let b = self.vals.partition_point(|&v| v <= hi);
        if a < b {
            &self.terms[a..b]
        } else {
            let i = a.min(self.terms.len() - 1);
            &self.terms[i..=i]
        }
    }
}

fn generate_region(cfg: &SynthConfig, idx: usize, words: &[&str], standard: &SortedMap) -> Vec<Tweet> {
    let spec = &cfg.regions[idx];
    let region_seed = stats::derive_seed(cfg.seed, idx as u64);
    let mut rng = stats::rng(stats::derive_seed(region_seed, 0));

    // The perturbed map comes from its own stream so that the main stream
    // (and thus every unshifted tweet) is independent of sigma.
    let shifted = {
        let mut noise_rng = stats::rng(stats::derive_seed(region_seed, 1));
        let noise = Normal::new(0.0, cfg.valence_shift_sigma).unwrap();
        let vals: Vec<f64> = words
            .iter()
            .map(|w| {
                let v = cfg.vocabulary.valence(w).unwrap();
                (v + noise.sample(&mut noise_rng)).clamp(0.0, VALENCE_MAX)
            })
            .collect();
        SortedMap::new(&vals)
    };

    let total_w: f64 = cfg.languages.iter().map(|l| l.1).sum();
    let half = cfg.window / 2.0;
    let mut tweets = Vec::with_capacity(spec.n_tweets);
    for i in 0..spec.n_tweets {
        let shifted_author = rng.random::<f64>() < spec.diversity_p;
        let mut pick = rng.random::<f64>() * total_w;
        let mut lang = 0;
        while lang + 1 < cfg.languages.len() && pick >= cfg.languages[lang].1 {
            pick -= cfg.languages[lang].1;
            lang += 1;
        }
        let k = rng.random_range(cfg.lemmas_per_tweet.0..=cfg.lemmas_per_tweet.1);
        let f = rng.random_range(cfg.fillers_per_tweet.0..=cfg.fillers_per_tweet.1);
        let negated = rng.random::<f64>() < cfg.negation_rate;

        let mut lemmas: Vec<String> = Vec::with_capacity(k + f);
        if lang == 0 {
            let map = if shifted_author { &shifted } else { standard };
            let anchor = rng.random_range(0.0..=VALENCE_MAX);
            let window = map.window(anchor - half, anchor + half);
            lemmas.extend(window.choose_multiple(&mut rng, k).map(|&t| words[t].to_string()));
            for _ in 0..f {
                lemmas.push(format!("f{:04}", rng.random_range(0..cfg.filler_count)));
            }
        } else {
            let code = &cfg.languages[lang].0;
            for _ in 0..k + f {
                lemmas.push(format!("{code}_{:04}", rng.random_range(0..cfg.filler_count.max(1))));
            }
        }
        tweets.push(Tweet {
            id: format!("{}-{i:06}", spec.code),
            lemmas: lemmas.into_iter().map(|l| (l, PosTag::Noun)).collect(),
            language: cfg.languages[lang].0.clone(),
            location_label: spec.code.clone(),
            nuts1: Some(spec.code.clone()),
            nuts2: Some(spec.code.clone()),
            nuts3: Some(spec.code.clone()),
            negated,
        });
    }
    tweets
}

/// Generates every region's tweets, in config order.
pub fn generate_corpus(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let words: Vec<&str> = cfg.vocabulary.terms().collect();
    let vals: Vec<f64> = cfg.vocabulary.iter().map(|e| e.valence).collect();
    let standard = SortedMap::new(&vals);
    let per_region = par::map_range(cfg.regions.len(), |i| generate_region(cfg, i, &words, &standard));
    Ok(Corpus::new(per_region.into_iter().flatten().collect(), None))
}

/// Sidecar CSV `region,diversity_p`.
pub fn write_sidecar<W: Write>(mut w: W, cfg: &SynthConfig) -> std::io::Result<()> {
    writeln!(w, "region,diversity_p")?;
    for r in &cfg.regions {
        writeln!(w, "{},{}", r.code, r.diversity_p)?;
    }
    Ok(())
}

pub fn save_sidecar(path: &Path, cfg: &SynthConfig) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_sidecar(std::io::BufWriter::new(f), cfg).map_err(|e| Error::io(path, e))
}

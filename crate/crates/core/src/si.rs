//! Superdiversity Index: `SI = (1 - r̄) / 2`, where `r̄` is the mean Pearson
//! correlation between standard and community-derived valences of held-out
//! lexicon terms. Also the region-reshuffling null model and ground-truth
//! correlation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{csv_err, Corpus, Tweet};
use crate::error::{Error, Result};
use crate::graph::{build_network, CooccurrenceNetwork};
use crate::lexicon::{split_lexicon, ValenceLexicon};
use crate::par;
use crate::spreading::{compute_valences_on, SpreadingParams};
use crate::stats;

pub const DEFAULT_ITERATIONS: usize = 10;
pub const SPLIT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SIResult {
    pub region: String,
    pub si: f64,
    pub mean_r: f64,
    /// Correlations of the iterations that were used.
    pub per_iteration_r: Vec<f64>,
    /// Matched test terms for every iteration, used or skipped.
    pub matched_test_terms: Vec<usize>,
    pub skipped_iterations: usize,
}

impl SIResult {
    pub fn n_iterations_used(&self) -> usize {
        self.per_iteration_r.len()
    }
}

/// `(1 - mean_r) / 2`.
pub fn si_from_mean_r(mean_r: f64) -> f64 {
    (1.0 - mean_r) / 2.0
}

/// Correlation between standard and modelled valences of one split, or
/// `None` when fewer than two test terms were reached (or the correlation
/// is undefined).
fn iteration_r(
    network: &CooccurrenceNetwork,
    standard: &ValenceLexicon,
    params: &SpreadingParams,
    aux: &ValenceLexicon,
    seed: u64,
) -> Result<(usize, Option<f64>)> {
    let split = split_lexicon(standard, SPLIT_FRACTION, seed)?;
    let modelled = compute_valences_on(network, &split.train, &split.test, params, aux);
    let matched = modelled.len();
    if matched < 2 {
        return Ok((matched, None));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = modelled
        .iter()
        .map(|(t, &v)| (split.test.valence(t).unwrap(), v))
        .unzip();
    Ok((matched, stats::pearson(&xs, &ys).ok()))
}

/// SI over `iteration_count` random 50/50 splits of the standard lexicon;
/// split `i` uses seed `base_seed + i`. The network is built once.
pub fn superdiversity_index(
    standard: &ValenceLexicon,
    corpus: &Corpus,
    params: &SpreadingParams,
    aux: &ValenceLexicon,
    iteration_count: usize,
    base_seed: u64,
) -> Result<SIResult> {
    superdiversity_index_on(&build_network(corpus), standard, params, aux, iteration_count, base_seed)
}

pub fn superdiversity_index_on(
    network: &CooccurrenceNetwork,
    standard: &ValenceLexicon,
    params: &SpreadingParams,
    aux: &ValenceLexicon,
    iteration_count: usize,
    base_seed: u64,
) -> Result<SIResult> {
    if iteration_count == 0 {
        return Err(Error::InvalidArgument("iteration_count must be >= 1".into()));
    }
    params.validate()?;
    let runs = par::map_range(iteration_count, |i| {
        iteration_r(network, standard, params, aux, base_seed.wrapping_add(i as u64))
    });
    let mut per_iteration_r = Vec::new();
    let mut matched_test_terms = Vec::new();
    for run in runs {
        let (matched, r) = run?;
        matched_test_terms.push(matched);
        per_iteration_r.extend(r);
    }
    if per_iteration_r.is_empty() {
        return Err(Error::NoSignal(iteration_count));
    }
    let mean_r = stats::mean(&per_iteration_r);
    Ok(SIResult {
        region: String::new(),
        si: si_from_mean_r(mean_r),
        mean_r,
        skipped_iterations: iteration_count - per_iteration_r.len(),
        per_iteration_r,
        matched_test_terms,
    })
}

/// SI for every region, each with the same split seeds so regions are
/// compared on identical train/test partitions.
pub fn si_by_region(
    partitions: &BTreeMap<String, Corpus>,
    standard: &ValenceLexicon,
    params: &SpreadingParams,
    aux: &ValenceLexicon,
    iteration_count: usize,
    base_seed: u64,
) -> BTreeMap<String, Result<SIResult>> {
    let regions: Vec<(&String, &Corpus)> = partitions.iter().collect();
    let results = par::map(&regions, |(code, corpus)| {
        superdiversity_index(standard, corpus, params, aux, iteration_count, base_seed).map(|mut r| {
            r.region = (*code).clone();
            r
        })
    });
    regions
        .into_iter()
        .map(|(k, _)| k.clone())
        .zip(results)
        .collect()
}

/// Pools every tweet, shuffles, and deals them back so each region keeps
/// its original tweet count.
pub fn null_model_reshuffle(
    partitions: &BTreeMap<String, Corpus>,
    seed: u64,
) -> Result<BTreeMap<String, Corpus>> {
    if partitions.len() < 2 {
        return Err(Error::InvalidArgument(
            "null model needs at least 2 regions".into(),
        ));
    }
    let mut pool: Vec<&Tweet> = partitions.values().flat_map(|c| &c.tweets).collect();
    pool.shuffle(&mut stats::rng(seed));
    let mut rest = pool.as_slice();
    let mut out = BTreeMap::new();
    for (code, corpus) in partitions {
        let (mine, tail) = rest.split_at(corpus.len());
        rest = tail;
        out.insert(
            code.clone(),
            Corpus::new(mine.iter().map(|t| (*t).clone()).collect(), corpus.language_filter.clone()),
        );
    }
    Ok(out)
}

/// Region → immigrant rate (immigrants / population).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthTable {
    rates: BTreeMap<String, f64>,
}

impl GroundTruthTable {
    pub fn from_rates(rates: BTreeMap<String, f64>) -> Result<Self> {
        for (k, v) in &rates {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidArgument(format!("rate for {k} must be finite and >= 0")));
            }
        }
        Ok(GroundTruthTable { rates })
    }

    pub fn rates(&self) -> &BTreeMap<String, f64> {
        &self.rates
    }

    /// CSV `region,immigrants,population`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let mut rates = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 3 {
                return Err(Error::parse(path, line, "expected region,immigrants,population"));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("bad number '{s}'")))
            };
            let (imm, pop) = (num(&rec[1])?, num(&rec[2])?);
            if pop <= 0.0 || imm < 0.0 {
                return Err(Error::parse(path, line, "population must be > 0 and immigrants >= 0"));
            }
            rates.insert(rec[0].to_string(), imm / pop);
        }
        Self::from_rates(rates).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

/// Pearson correlation between a per-region measure and the ground truth,
/// over the regions present in both, in code order.
pub fn correlate_measure(measure: &BTreeMap<String, f64>, truth: &GroundTruthTable) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = measure
        .iter()
        .filter_map(|(k, &v)| truth.rates.get(k).map(|&t| (v, t)))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {} regions shared with the ground truth, need 2",
            xs.len()
        )));
    }
    stats::pearson(&xs, &ys)
}

pub fn correlate_with_groundtruth(
    results: &BTreeMap<String, SIResult>,
    truth: &GroundTruthTable,
) -> Result<f64> {
    let si: BTreeMap<String, f64> = results.iter().map(|(k, r)| (k.clone(), r.si)).collect();
    correlate_measure(&si, truth)
}

/// `region,si,mean_r,n_iterations_used`
pub fn write_si_csv<'a, W: Write>(
    mut w: W,
    results: impl IntoIterator<Item = &'a SIResult>,
) -> std::io::Result<()> {
    writeln!(w, "region,si,mean_r,n_iterations_used")?;
    for r in results {
        writeln!(w, "{},{},{},{}", r.region, r.si, r.mean_r, r.n_iterations_used())?;
    }
    Ok(())
}

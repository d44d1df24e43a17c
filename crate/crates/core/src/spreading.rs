//! Synchronous epidemic spreading of emotional valences over a
//! co-occurrence network.
//!
//! Each round, every untagged node looks at the valences its already-tagged
//! neighbours held at the end of the previous round. If that neighbourhood
//! is consensual (binned entropy below the entropy threshold and
//! 10th–90th percentile range below the range threshold) the node takes the
//! neighbourhood's binned mode. Assigned valences are never revised. The
//! process stops after the first round that assigns nothing.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::graph::{build_network, CooccurrenceNetwork};
use crate::lexicon::{ValenceLexicon, VALENCE_MAX};
use crate::par;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingParams {
    /// Infection requires the neighbourhood range to be strictly below this.
    pub range_threshold: f64,
    /// Infection requires the neighbourhood entropy to be strictly below this.
    pub entropy_threshold: f64,
    pub bin_count: usize,
    pub min_tagged_neighbors: usize,
}

impl SpreadingParams {
    pub fn new(range_threshold: f64, entropy_threshold: f64) -> Self {
        SpreadingParams {
            range_threshold,
            entropy_threshold,
            ..Default::default()
        }
    }

    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.range_threshold > 0.0) {
            return Err(Error::InvalidArgument("range_threshold must be > 0".into()));
        }
        if !(self.entropy_threshold > 0.0) {
            return Err(Error::InvalidArgument("entropy_threshold must be > 0".into()));
        }
        if self.bin_count < 2 {
            return Err(Error::InvalidArgument("bin_count must be >= 2".into()));
        }
        Ok(())
    }
}

impl Default for SpreadingParams {
    /// Thresholds that worked best on English data (R = 3, S = 1.09).
    fn default() -> Self {
        SpreadingParams {
            range_threshold: 3.0,
            entropy_threshold: 1.09,
            bin_count: 10,
            min_tagged_neighbors: 1,
        }
    }
}

/// Bin of a valence among `bin_count` equal-width bins over [0, 10]; the
/// last bin is closed so 10.0 lands in it.
#[inline]
pub fn bin_index(v: f64, bin_count: usize) -> usize {
    let b = (v * bin_count as f64 / VALENCE_MAX).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bin_count - 1)
    }
}

fn bin_counts(vals: &[f64], bin_count: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bin_count];
    for &v in vals {
        counts[bin_index(v, bin_count)] += 1;
    }
    counts
}

/// Shannon entropy (natural log) of the binned valence histogram.
pub fn neighborhood_entropy(vals: &[f64], bin_count: usize) -> Result<f64> {
    if vals.is_empty() {
        return Err(Error::EmptyInput("neighborhood_entropy"));
    }
    Ok(stats::entropy_from_counts(bin_counts(vals, bin_count)))
}

/// 90th minus 10th nearest-rank percentile.
pub fn neighborhood_range(vals: &[f64]) -> Result<f64> {
    if vals.is_empty() {
        return Err(Error::EmptyInput("neighborhood_range"));
    }
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(range_sorted(&sorted))
}

fn range_sorted(sorted: &[f64]) -> f64 {
    stats::nearest_rank_sorted(sorted, 90) - stats::nearest_rank_sorted(sorted, 10)
}

/// Mean of the values in the most populated bin (lowest bin on ties).
pub fn binned_mode(vals: &[f64], bin_count: usize) -> Result<f64> {
    if vals.is_empty() {
        return Err(Error::EmptyInput("binned_mode"));
    }
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(mode_sorted(&sorted, &bin_counts(&sorted, bin_count), bin_count))
}

fn mode_sorted(sorted: &[f64], counts: &[usize], bin_count: usize) -> f64 {
    let mut best = 0;
    for (b, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = b;
        }
    }
    let (sum, n) = sorted
        .iter()
        .filter(|&&v| bin_index(v, bin_count) == best)
        .fold((0.0, 0usize), |(s, n), &v| (s + v, n + 1));
    sum / n as f64
}

/// The infection rule applied to the valences of a node's tagged
/// neighbours. Result does not depend on the order of `neighbor_vals`.
pub fn infection_value(neighbor_vals: &[f64], params: &SpreadingParams) -> Option<f64> {
    if neighbor_vals.is_empty() || neighbor_vals.len() < params.min_tagged_neighbors {
        return None;
    }
    let mut sorted = neighbor_vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts = bin_counts(&sorted, params.bin_count);
    let entropy = stats::entropy_from_counts(counts.iter().copied());
    if entropy >= params.entropy_threshold {
        return None;
    }
    if range_sorted(&sorted) >= params.range_threshold {
        return None;
    }
    Some(mode_sorted(&sorted, &counts, params.bin_count))
}

/// Final state of a spreading run, indexed like the network's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ValenceState {
    nodes: Arc<Vec<String>>,
    valences: Vec<Option<f64>>,
    is_seed: Vec<bool>,
    /// Round in which each node was tagged; 0 for seeds.
    assigned_round: Vec<Option<u32>>,
    /// Synchronous rounds executed, including the final one that assigned nothing.
    pub rounds: usize,
    /// Seed terms absent from the network.
    pub unmatched_seeds: usize,
}

impl ValenceState {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn valence(&self, term: &str) -> Option<f64> {
        let i = self.nodes.binary_search_by(|n| n.as_str().cmp(term)).ok()?;
        self.valences[i]
    }

    pub fn valence_at(&self, i: usize) -> Option<f64> {
        self.valences[i]
    }

    pub fn valences(&self) -> &[Option<f64>] {
        &self.valences
    }

    pub fn is_seed(&self, term: &str) -> bool {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(term))
            .map(|i| self.is_seed[i])
            .unwrap_or(false)
    }

    pub fn seed_flags(&self) -> &[bool] {
        &self.is_seed
    }

    pub fn assigned_round(&self, i: usize) -> Option<u32> {
        self.assigned_round[i]
    }

    pub fn tagged_count(&self) -> usize {
        self.valences.iter().filter(|v| v.is_some()).count()
    }

    /// Tagged nodes as a term → valence map.
    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.nodes
            .iter()
            .zip(&self.valences)
            .filter_map(|(n, v)| v.map(|v| (n.clone(), v)))
            .collect()
    }

    /// `round,node,valence` audit log, ordered by round then node. Seeds
    /// appear as round 0.
    pub fn write_round_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "round,node,valence")?;
        let mut rows: Vec<(u32, usize)> = self
            .assigned_round
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|r| (r, i)))
            .collect();
        rows.sort_unstable();
        for (r, i) in rows {
            writeln!(w, "{r},{},{}", self.nodes[i], self.valences[i].unwrap())?;
        }
        Ok(())
    }
}

/// Runs spreading to its fixed point.
pub fn sentiment_spreading(
    network: &CooccurrenceNetwork,
    seed: &ValenceLexicon,
    params: &SpreadingParams,
) -> ValenceState {
    spread_with_observer(network, seed, params, |_, _| {})
}

/// Like [`sentiment_spreading`], calling `observer(round, assignments)` after
/// each round with the `(node, valence)` pairs committed in that round.
pub fn spread_with_observer<F>(
    network: &CooccurrenceNetwork,
    seed: &ValenceLexicon,
    params: &SpreadingParams,
    mut observer: F,
) -> ValenceState
where
    F: FnMut(usize, &[(usize, f64)]),
{
    let n = network.node_count();
    let mut valences: Vec<Option<f64>> = vec![None; n];
    let mut is_seed = vec![false; n];
    let mut assigned_round: Vec<Option<u32>> = vec![None; n];
    let mut unmatched_seeds = 0;
    for e in seed.iter() {
        match network.index_of(&e.term) {
            Some(i) => {
                valences[i] = Some(e.valence);
                is_seed[i] = true;
                assigned_round[i] = Some(0);
            }
            None => unmatched_seeds += 1,
        }
    }

    let mut rounds = 0;
    if n > 0 {
        // Round 1 examines every untagged node; afterwards only untagged
        // neighbours of last round's assignments can see a new neighbourhood.
        let mut candidates: Vec<usize> = (0..n).filter(|&i| valences[i].is_none()).collect();
        let mut mark = vec![false; n];
        loop {
            rounds += 1;
            let snapshot = &valences;
            let assigned: Vec<(usize, f64)> = par::filter_map_range(candidates.len(), |k| {
                let i = candidates[k];
                let vals: Vec<f64> = network
                    .neighbors(i)
                    .iter()
                    .filter_map(|&j| snapshot[j as usize])
                    .collect();
                infection_value(&vals, params).map(|v| (i, v))
            });
            for &(i, v) in &assigned {
                debug_assert!(valences[i].is_none());
                valences[i] = Some(v);
                assigned_round[i] = Some(rounds as u32);
            }
            observer(rounds, &assigned);
            if assigned.is_empty() {
                break;
            }
            candidates.clear();
            for &(i, _) in &assigned {
                for &j in network.neighbors(i) {
                    let j = j as usize;
                    if valences[j].is_none() && !mark[j] {
                        mark[j] = true;
                        candidates.push(j);
                    }
                }
            }
            candidates.sort_unstable();
            for &j in &candidates {
                mark[j] = false;
            }
        }
        debug_assert!(rounds <= n);
    }

    ValenceState {
        nodes: network.shared_nodes(),
        valences,
        is_seed,
        assigned_round,
        rounds,
        unmatched_seeds,
    }
}

/// Seed lexicon for one split: auxiliary entries minus held-out test terms,
/// overridden by the training entries.
pub fn seed_lexicon(train: &ValenceLexicon, test: &ValenceLexicon, auxiliary: &ValenceLexicon) -> ValenceLexicon {
    let mut aux = auxiliary.clone();
    for t in test.terms() {
        aux.remove(t);
    }
    train.merged_with(&aux)
}

/// Spreads from `train ∪ auxiliary` over an already built network and
/// returns the modelled valences of the test terms that got one.
pub fn compute_valences_on(
    network: &CooccurrenceNetwork,
    train: &ValenceLexicon,
    test: &ValenceLexicon,
    params: &SpreadingParams,
    auxiliary: &ValenceLexicon,
) -> BTreeMap<String, f64> {
    let seed = seed_lexicon(train, test, auxiliary);
    let state = sentiment_spreading(network, &seed, params);
    test.terms()
        .filter_map(|t| state.valence(t).map(|v| (t.to_string(), v)))
        .collect()
}

/// Builds the corpus network and runs [`compute_valences_on`].
pub fn compute_valences(
    train: &ValenceLexicon,
    test: &ValenceLexicon,
    corpus: &Corpus,
    params: &SpreadingParams,
    auxiliary: &ValenceLexicon,
) -> BTreeMap<String, f64> {
    compute_valences_on(&build_network(corpus), train, test, params, auxiliary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::EntrySource;

    fn lex(pairs: &[(&str, f64)]) -> ValenceLexicon {
        ValenceLexicon::from_pairs(pairs.iter().copied(), EntrySource::Standard).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let one_per_bin: Vec<f64> = (0..10).map(|i| i as f64 + 0.5).collect();
        assert!((neighborhood_entropy(&one_per_bin, 10).unwrap() - 10f64.ln()).abs() < 1e-12);
        assert_eq!(neighborhood_entropy(&[3.1, 3.2, 3.9], 10).unwrap(), 0.0);
        let two = neighborhood_entropy(&[1.0, 1.5, 8.0, 8.5], 10).unwrap();
        assert!((two - 2f64.ln()).abs() < 1e-12);
        assert!(neighborhood_entropy(&[], 10).is_err());
    }

    #[test]
    fn top_value_in_last_bin() {
        assert_eq!(bin_index(10.0, 10), 9);
        assert_eq!(bin_index(9.0, 10), 9);
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(8.999, 10), 8);
        assert_eq!(neighborhood_entropy(&[9.5, 10.0], 10).unwrap(), 0.0);
    }

    #[test]
    fn range_examples() {
        assert_eq!(neighborhood_range(&[5.0]).unwrap(), 0.0);
        assert_eq!(neighborhood_range(&[9., 1., 1., 9., 1., 1., 9., 9., 1., 9.]).unwrap(), 8.0);
        assert_eq!(neighborhood_range(&[10.0, 0.0]).unwrap(), 10.0);
        assert!(neighborhood_range(&[]).is_err());
    }

    #[test]
    fn mode_examples() {
        assert_eq!(binned_mode(&[8.0], 10).unwrap(), 8.0);
        assert_eq!(binned_mode(&[2.1, 7.8, 2.4], 10).unwrap(), (2.1 + 2.4) / 2.0);
        assert!((binned_mode(&[2.1, 2.4, 7.8], 10).unwrap() - 2.25).abs() < 1e-12);
        assert_eq!(binned_mode(&[8.5, 1.5], 10).unwrap(), 1.5);
        assert!(binned_mode(&[], 10).is_err());
    }

    #[test]
    fn infection_examples() {
        let p = SpreadingParams::new(3.0, 1.09);
        let v = infection_value(&[5.1, 5.2, 5.3], &p).unwrap();
        assert!((v - 5.2).abs() < 1e-12);
        assert_eq!(infection_value(&[0.5, 9.5], &p), None);
        assert_eq!(infection_value(&[], &p), None);
        let strict = SpreadingParams {
            min_tagged_neighbors: 4,
            ..p
        };
        assert_eq!(infection_value(&[5.1, 5.2, 5.3], &strict), None);
    }

    #[test]
    fn gates_are_strict() {
        // range exactly at the threshold does not infect
        let p = SpreadingParams::new(1.0, 2.0);
        assert_eq!(infection_value(&[5.0, 5.5, 6.0], &p), None);
        assert!(infection_value(&[5.0, 5.5, 5.9], &p).is_some());
        // entropy exactly ln 2 with S = ln 2 does not infect
        let p = SpreadingParams::new(10.0, 2f64.ln());
        assert_eq!(infection_value(&[5.5, 6.5], &p), None);
    }

    #[test]
    fn chain_spreads_in_three_rounds() {
        let g = CooccurrenceNetwork::from_edges([("a", "b"), ("b", "c")], []);
        let s = sentiment_spreading(&g, &lex(&[("a", 8.0)]), &SpreadingParams::new(3.0, 1.09));
        assert_eq!(s.to_map(), lex(&[("a", 8.0), ("b", 8.0), ("c", 8.0)]).valence_map());
        assert_eq!(s.rounds, 3);
        assert_eq!(s.assigned_round(2), Some(2));
    }

    #[test]
    fn full_seed_is_fixed_point() {
        let g = CooccurrenceNetwork::from_edges([("a", "b")], []);
        let seed = lex(&[("a", 1.0), ("b", 2.0), ("zz", 4.0)]);
        let s = sentiment_spreading(&g, &seed, &SpreadingParams::default());
        assert_eq!(s.rounds, 1);
        assert_eq!(s.unmatched_seeds, 1);
        assert_eq!(s.to_map(), lex(&[("a", 1.0), ("b", 2.0)]).valence_map());
    }

    #[test]
    fn heterogeneous_star_blocks_center() {
        let g = CooccurrenceNetwork::from_edges([("c", "x"), ("c", "y")], []);
        let s = sentiment_spreading(&g, &lex(&[("x", 1.0), ("y", 9.0)]), &SpreadingParams::new(3.0, 1.09));
        assert_eq!(s.valence("c"), None);
        assert_eq!(s.rounds, 1);
    }

    #[test]
    fn empty_network() {
        let s = sentiment_spreading(&CooccurrenceNetwork::default(), &lex(&[("a", 1.0)]), &SpreadingParams::default());
        assert_eq!(s.rounds, 0);
        assert_eq!(s.tagged_count(), 0);
    }

    #[test]
    fn round_log_format() {
        let g = CooccurrenceNetwork::from_edges([("a", "b"), ("b", "c")], []);
        let s = sentiment_spreading(&g, &lex(&[("a", 8.0)]), &SpreadingParams::default());
        let mut buf = Vec::new();
        s.write_round_log(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "round,node,valence\n0,a,8\n1,b,8\n2,c,8\n");
    }

    #[test]
    fn params_validation() {
        assert!(SpreadingParams::default().validate().is_ok());
        assert!(SpreadingParams::new(0.0, 1.0).validate().is_err());
        assert!(SpreadingParams::new(1.0, -1.0).validate().is_err());
        let p = SpreadingParams { bin_count: 1, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn held_out_aux_term_comes_from_spreading() {
        // t is in the test set and also in the auxiliary lexicon with 1.0; it
        // must be infected from its neighbours (around 7), not seeded.
        let g = CooccurrenceNetwork::from_edges([("a", "t"), ("b", "t"), ("c", "t"), ("t", "u")], []);
        let train = lex(&[("a", 7.1), ("b", 7.3), ("c", 7.5)]);
        let test = lex(&[("t", 7.0), ("u", 6.0)]);
        let aux = lex(&[("t", 1.0), ("a", 0.0)]);
        let out = compute_valences_on(&g, &train, &test, &SpreadingParams::default(), &aux);
        assert!((out["t"] - 7.3).abs() < 1e-12);
        assert!((out["u"] - 7.3).abs() < 1e-12);
        let seed = seed_lexicon(&train, &test, &aux);
        assert_eq!(seed.valence("a"), Some(7.1));
        assert!(!seed.contains("t"));
    }

    #[test]
    fn restriction_semantics() {
        use crate::corpus::Tweet;
        use crate::lexicon::PosTag;
        let tw = |ls: &[&str], negated: bool| Tweet {
            id: "x".into(),
            lemmas: ls.iter().map(|l| (l.to_string(), PosTag::Noun)).collect(),
            language: "en".into(),
            location_label: String::new(),
            nuts1: None,
            nuts2: None,
            nuts3: None,
            negated,
        };
        let corpus = Corpus::new(vec![tw(&["a", "t"], false), tw(&["lonely"], false)], None);
        let train = lex(&[("a", 2.0)]);
        let test = lex(&[("t", 2.5), ("lonely", 5.0), ("absent", 3.0)]);
        let out = compute_valences(&train, &test, &corpus, &SpreadingParams::default(), &ValenceLexicon::new());
        assert_eq!(out.keys().collect::<Vec<_>>(), vec!["t"]);

        let negated = Corpus::new(vec![tw(&["a", "t"], true)], None);
        assert!(compute_valences(&train, &test, &negated, &SpreadingParams::default(), &ValenceLexicon::new()).is_empty());
    }
}

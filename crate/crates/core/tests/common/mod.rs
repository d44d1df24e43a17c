//! Independent reference implementations used as oracles by the
//! integration tests. Deliberately naive: no CSR, no frontier, no sharing
//! of helpers with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use superdiversity::corpus::{partition_by_region, Corpus, NutsLevel};
use superdiversity::lexicon::ValenceLexicon;
use superdiversity::stats;
use superdiversity::synth::{generate_corpus, synthetic_lexicon, RegionSpec, SynthConfig};

pub fn bin_of(v: f64, bins: usize) -> usize {
    // walk the bin edges instead of dividing
    let width = 10.0 / bins as f64;
    for b in 0..bins {
        let hi = (b + 1) as f64 * width;
        if v < hi {
            return b;
        }
    }
    bins - 1
}

pub fn entropy(vals: &[f64], bins: usize) -> f64 {
    let n = vals.len() as f64;
    let mut h = 0.0;
    for b in 0..bins {
        let c = vals.iter().filter(|&&v| bin_of(v, bins) == b).count();
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    h
}

/// Smallest value with at least `pct`% of the sample at or below it.
pub fn percentile(vals: &[f64], pct: f64) -> f64 {
    let n = vals.len() as f64;
    let mut cands: Vec<f64> = vals.to_vec();
    cands.sort_by(f64::total_cmp);
    for &x in &cands {
        let below = vals.iter().filter(|&&v| v <= x).count() as f64;
        if below * 100.0 >= pct * n {
            return x;
        }
    }
    unreachable!()
}

pub fn range(vals: &[f64]) -> f64 {
    percentile(vals, 90.0) - percentile(vals, 10.0)
}

/// Mean of the most populated bin, lowest bin on ties, summed in ascending
/// value order.
pub fn binned_mode(vals: &[f64], bins: usize) -> f64 {
    let counts: Vec<usize> = (0..bins)
        .map(|b| vals.iter().filter(|&&v| bin_of(v, bins) == b).count())
        .collect();
    let max = *counts.iter().max().unwrap();
    let best = counts.iter().position(|&c| c == max).unwrap();
    let mut members: Vec<f64> = vals.iter().copied().filter(|&v| bin_of(v, bins) == best).collect();
    members.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    for v in &members {
        sum += v;
    }
    sum / members.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

pub fn ttr(tokens: &[Vec<String>]) -> f64 {
    let all: Vec<&String> = tokens.iter().flatten().collect();
    let mut distinct: Vec<&String> = all.clone();
    distinct.sort();
    distinct.dedup();
    distinct.len() as f64 / all.len() as f64
}

pub fn shannon(labels: &[String]) -> f64 {
    let n = labels.len() as f64;
    let mut seen: Vec<&String> = labels.iter().collect();
    seen.sort();
    seen.dedup();
    -seen
        .iter()
        .map(|l| {
            let p = labels.iter().filter(|x| x == l).count() as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub struct RefOutcome {
    pub valences: BTreeMap<String, f64>,
    pub rounds: usize,
}

/// Synchronous spreading recomputed from scratch every round over every
/// untagged node.
pub fn reference_spread(
    nodes: &[String],
    edges: &[(String, String)],
    seed: &BTreeMap<String, f64>,
    range_threshold: f64,
    entropy_threshold: f64,
) -> RefOutcome {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = nodes.iter().map(|n| (n.as_str(), BTreeSet::new())).collect();
    for (a, b) in edges {
        if a != b {
            adj.get_mut(a.as_str()).unwrap().insert(b);
            adj.get_mut(b.as_str()).unwrap().insert(a);
        }
    }
    let mut state: BTreeMap<String, f64> = seed
        .iter()
        .filter(|(k, _)| adj.contains_key(k.as_str()))
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    if nodes.is_empty() {
        return RefOutcome { valences: state, rounds: 0 };
    }
    let mut rounds = 0;
    loop {
        rounds += 1;
        let snapshot = state.clone();
        let mut fresh = Vec::new();
        for n in nodes {
            if snapshot.contains_key(n) {
                continue;
            }
            let vals: Vec<f64> = adj[n.as_str()].iter().filter_map(|m| snapshot.get(*m).copied()).collect();
            if vals.is_empty() {
                continue;
            }
            if entropy(&vals, 10) < entropy_threshold && range(&vals) < range_threshold {
                fresh.push((n.clone(), binned_mode(&vals, 10)));
            }
        }
        if fresh.is_empty() {
            return RefOutcome { valences: state, rounds };
        }
        state.extend(fresh);
    }
}

/// Random graph on up to `max_nodes` nodes with random node names.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> (Vec<String>, Vec<(String, String)>) {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<String> = (0..n).map(|i| format!("n{:02}", i)).collect();
    let p: f64 = rng.random_range(0.1..0.7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((nodes[i].clone(), nodes[j].clone()));
            }
        }
    }
    (nodes, edges)
}

/// Random valence, sometimes on a coarse grid so bin ties and equal values
/// occur.
pub fn random_valence<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..3) {
        0 => rng.random_range(0..=20) as f64 * 0.5,
        1 => (rng.random_range(0.0..10.0_f64) * 100.0).round() / 100.0,
        _ => rng.random_range(0.0..=10.0),
    }
}

pub fn lexicon_of(map: &BTreeMap<String, f64>) -> ValenceLexicon {
    ValenceLexicon::from_pairs(
        map.iter().map(|(k, v)| (k.as_str(), *v)),
        superdiversity::lexicon::EntrySource::Standard,
    )
    .unwrap()
}

pub const DIVERSITY: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Ten synthetic regions R0..R9 with diversity 0.0..0.9, 2000 tweets each.
pub fn synthetic_regions(seed: u64) -> (ValenceLexicon, BTreeMap<String, Corpus>) {
    let lexicon = synthetic_lexicon(600, stats::derive_seed(seed, 99));
    let regions = DIVERSITY
        .iter()
        .enumerate()
        .map(|(i, &p)| RegionSpec {
            code: format!("R{i}"),
            n_tweets: 2000,
            diversity_p: p,
        })
        .collect();
    let cfg = SynthConfig::new(regions, lexicon.clone(), seed);
    let corpus = generate_corpus(&cfg).unwrap();
    (lexicon, partition_by_region(&corpus, NutsLevel::Nuts2))
}

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use superdiversity::graph::CooccurrenceNetwork;
use superdiversity::spreading::{sentiment_spreading, SpreadingParams};

/// Node count, edges, seeds, R, S.
type Case = (usize, Vec<(usize, usize)>, Vec<(usize, f64)>, f64, f64);

fn case() -> impl Strategy<Value = Case> {
    (1usize..30).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((0..n, 0..n), 0..n * 3),
            prop::collection::vec((0..n, (0u32..=40).prop_map(|v| v as f64 * 0.25)), 1..=n),
            prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 10.0]),
            prop::sample::select(vec![0.3, 0.7, 1.09, 1.6, 2.4]),
        )
    })
}

proptest! {
    #[test]
    fn engine_matches_reference((n, raw_edges, raw_seed, r, s) in case()) {
        let nodes: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let edges: Vec<(String, String)> = raw_edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| (nodes[a].clone(), nodes[b].clone()))
            .collect();
        let seed: BTreeMap<String, f64> = raw_seed.iter().map(|&(i, v)| (nodes[i].clone(), v)).collect();

        let g = CooccurrenceNetwork::from_edges(
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            nodes.iter().map(String::as_str),
        );
        let got = sentiment_spreading(&g, &common::lexicon_of(&seed), &SpreadingParams::new(r, s));
        let want = common::reference_spread(&nodes, &edges, &seed, r, s);
        prop_assert_eq!(got.rounds, want.rounds);
        prop_assert!(got.rounds <= n);
        let got_bits: BTreeMap<String, u64> = got.to_map().into_iter().map(|(k, v)| (k, v.to_bits())).collect();
        let want_bits: BTreeMap<String, u64> = want.valences.into_iter().map(|(k, v)| (k, v.to_bits())).collect();
        prop_assert_eq!(got_bits, want_bits);
    }

    /// Renaming nodes permutes the CSR order; the outcome must follow the names.
    #[test]
    fn result_independent_of_node_order((n, raw_edges, raw_seed, r, s) in case()) {
        let fwd: Vec<String> = (0..n).map(|i| format!("a{i:02}")).collect();
        let rev: Vec<String> = (0..n).map(|i| format!("a{:02}", n - 1 - i)).collect();
        let run = |names: &[String]| {
            let edges: Vec<(&str, &str)> = raw_edges
                .iter()
                .filter(|(a, b)| a != b)
                .map(|&(a, b)| (names[a].as_str(), names[b].as_str()))
                .collect();
            let seed: BTreeMap<String, f64> = raw_seed.iter().map(|&(i, v)| (names[i].clone(), v)).collect();
            let g = CooccurrenceNetwork::from_edges(edges, names.iter().map(String::as_str));
            let st = sentiment_spreading(&g, &common::lexicon_of(&seed), &SpreadingParams::new(r, s));
            let by_index: Vec<Option<u64>> = (0..n).map(|i| st.valence(&names[i]).map(f64::to_bits)).collect();
            (by_index, st.rounds)
        };
        prop_assert_eq!(run(&fwd), run(&rev));
    }
}

//! Unweighted lemma co-occurrence network.
//!
//! Nodes are stored sorted by lemma, so a node's index doubles as its rank
//! in lexicographic order. Adjacency is a compressed sparse row layout with
//! sorted neighbour lists.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CooccurrenceNetwork {
    nodes: Arc<Vec<String>>,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

const TWEETS_PER_CHUNK: usize = 4096;

impl CooccurrenceNetwork {
    /// Builds a network from node names and undirected edges given by index.
    /// Self-loops and duplicates are discarded.
    pub fn from_index_edges(nodes: Vec<String>, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let n = nodes.len();
        let mut directed: Vec<(u32, u32)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .flat_map(|(a, b)| [(a, b), (b, a)])
            .collect();
        directed.sort_unstable();
        directed.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &directed {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        CooccurrenceNetwork {
            nodes: Arc::new(nodes),
            offsets,
            neighbors: directed.into_iter().map(|(_, b)| b).collect(),
        }
    }

    /// Builds from lemma-pair edges plus extra (possibly isolated) nodes.
    pub fn from_edges<'a>(
        edges: impl IntoIterator<Item = (&'a str, &'a str)> + Clone,
        isolated: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut names: BTreeSet<&str> = isolated.into_iter().collect();
        for (a, b) in edges.clone() {
            names.insert(a);
            names.insert(b);
        }
        let nodes: Vec<String> = names.into_iter().map(str::to_string).collect();
        let idx = |s: &str| nodes.binary_search_by(|n| n.as_str().cmp(s)).unwrap() as u32;
        let pairs: Vec<(u32, u32)> = edges.into_iter().map(|(a, b)| (idx(a), idx(b))).collect();
        Self::from_index_edges(nodes, pairs)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub(crate) fn shared_nodes(&self) -> Arc<Vec<String>> {
        Arc::clone(&self.nodes)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.nodes[i]
    }

    pub fn index_of(&self, lemma: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(lemma)).ok()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.neighbors(i).binary_search(&(j as u32)).is_ok(),
            _ => false,
        }
    }

    /// Each undirected edge once, as `(smaller, larger)` index pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| (j as usize) > i)
                .map(move |&j| (i, j as usize))
        })
    }

    /// Edge list dump: `a<TAB>b` per edge (a < b), then one line per isolated
    /// node. Both sections sorted.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (a, b) in self.edges() {
            writeln!(w, "{}\t{}", self.nodes[a], self.nodes[b])?;
        }
        for i in (0..self.node_count()).filter(|&i| self.degree(i) == 0) {
            writeln!(w, "{}", self.nodes[i])?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_edge_list(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_edge_list<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut edges: Vec<(String, String)> = Vec::new();
        let mut isolated: Vec<String> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), None, None) => isolated.push(a.to_string()),
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    edges.push((a.to_string(), b.to_string()))
                }
                _ => return Err(Error::parse(path, i + 1, "expected 'lemma<TAB>neighbor' or 'lemma'")),
            }
        }
        Ok(Self::from_edges(
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            isolated.iter().map(String::as_str),
        ))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_edge_list(std::io::BufReader::new(f), path)
    }
}

/// Builds the co-occurrence network: every non-negated tweet adds a clique
/// over its distinct lemmas. Negated tweets contribute nothing, not even nodes.
pub fn build_network(corpus: &Corpus) -> CooccurrenceNetwork {
    let contributing: Vec<Vec<&str>> = corpus
        .tweets
        .iter()
        .filter(|t| !t.negated)
        .map(|t| t.distinct_lemmas())
        .collect();
    let nodes: Vec<String> = contributing
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let index = |s: &str| nodes.binary_search_by(|n| n.as_str().cmp(s)).unwrap() as u32;

    let chunks: Vec<&[Vec<&str>]> = contributing.chunks(TWEETS_PER_CHUNK).collect();
    let partial = par::map(&chunks, |chunk| {
        let mut local: Vec<(u32, u32)> = Vec::new();
        for lemmas in chunk.iter() {
            let ids: Vec<u32> = lemmas.iter().map(|l| index(l)).collect();
            for (k, &a) in ids.iter().enumerate() {
                for &b in &ids[k + 1..] {
                    local.push((a.min(b), a.max(b)));
                }
            }
        }
        local.sort_unstable();
        local.dedup();
        local
    });
    CooccurrenceNetwork::from_index_edges(nodes, partial.into_iter().flatten())
}

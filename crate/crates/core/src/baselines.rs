//! Alternative diversity measures: tweet volume, tweets per capita, language
//! count, language entropy and type-token ratio.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::Serialize;

use crate::corpus::{Corpus, Tweet};
use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineReport {
    pub region: String,
    pub tweet_count: usize,
    pub tweets_per_capita: Option<f64>,
    pub language_count: usize,
    pub language_entropy: f64,
    pub ttr: f64,
}

/// Distinct lemmas over total lemma tokens.
pub fn ttr(corpus: &Corpus) -> Result<f64> {
    let mut types = HashSet::new();
    let mut tokens = 0usize;
    for t in &corpus.tweets {
        for (l, _) in &t.lemmas {
            types.insert(l.as_str());
            tokens += 1;
        }
    }
    if tokens == 0 {
        return Err(Error::EmptyInput("ttr needs at least one token"));
    }
    Ok(types.len() as f64 / tokens as f64)
}

fn language_counts(tweets: &[Tweet]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in tweets {
        *counts.entry(t.language.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Shannon entropy (natural log) of the tweets' language distribution.
pub fn language_entropy(tweets: &[Tweet]) -> Result<f64> {
    if tweets.is_empty() {
        return Err(Error::EmptyInput("language_entropy"));
    }
    Ok(stats::entropy_from_counts(language_counts(tweets).into_values().collect::<Vec<_>>()))
}

/// `region_tweets` is the unfiltered multilingual stream for the region and
/// `local` its local-language subset.
pub fn baseline_report(
    region: &str,
    region_tweets: &[Tweet],
    local: &Corpus,
    population: Option<u64>,
) -> Result<BaselineReport> {
    if population == Some(0) {
        return Err(Error::InvalidArgument(format!("population of {region} is 0")));
    }
    let tweet_count = local.len();
    Ok(BaselineReport {
        region: region.to_string(),
        tweet_count,
        tweets_per_capita: population.map(|p| tweet_count as f64 / p as f64),
        language_count: language_counts(region_tweets).len(),
        language_entropy: language_entropy(region_tweets)?,
        ttr: ttr(local)?,
    })
}

/// Column names in report order, excluding `region`.
pub const MEASURES: [&str; 5] = [
    "tweet_count",
    "tweets_per_capita",
    "language_count",
    "language_entropy",
    "ttr",
];

impl BaselineReport {
    pub fn measure(&self, name: &str) -> Option<f64> {
        match name {
            "tweet_count" => Some(self.tweet_count as f64),
            "tweets_per_capita" => self.tweets_per_capita,
            "language_count" => Some(self.language_count as f64),
            "language_entropy" => Some(self.language_entropy),
            "ttr" => Some(self.ttr),
            _ => None,
        }
    }
}

/// `region,tweet_count,tweets_per_capita,language_count,language_entropy,ttr`;
/// a missing per-capita value is written as an empty field.
pub fn write_baselines_csv<'a, W: Write>(
    mut w: W,
    reports: impl IntoIterator<Item = &'a BaselineReport>,
) -> std::io::Result<()> {
    writeln!(w, "region,{}", MEASURES.join(","))?;
    for r in reports {
        let pc = r.tweets_per_capita.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.region, r.tweet_count, pc, r.language_count, r.language_entropy, r.ttr
        )?;
    }
    Ok(())
}

//! Geotagged microtext ingestion: language and POS filtering, negation
//! flagging, gazetteer-based NUTS coding and regional partitioning.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::PosTag;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub lemmas: Vec<(String, PosTag)>,
    pub language: String,
    pub location_label: String,
    pub nuts1: Option<String>,
    pub nuts2: Option<String>,
    pub nuts3: Option<String>,
    pub negated: bool,
}

impl Tweet {
    pub fn code(&self, level: NutsLevel) -> Option<&str> {
        match level {
            NutsLevel::Nuts1 => self.nuts1.as_deref(),
            NutsLevel::Nuts2 => self.nuts2.as_deref(),
            NutsLevel::Nuts3 => self.nuts3.as_deref(),
        }
    }

    /// Distinct lemma strings in first-occurrence order.
    pub fn distinct_lemmas(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.lemmas
            .iter()
            .map(|(l, _)| l.as_str())
            .filter(|l| seen.insert(*l))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub tweets: Vec<Tweet>,
    pub language_filter: Option<String>,
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>, language_filter: Option<String>) -> Self {
        Corpus {
            tweets,
            language_filter,
        }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Subset in one language.
    pub fn filter_language(&self, lang: &str) -> Corpus {
        Corpus {
            tweets: self
                .tweets
                .iter()
                .filter(|t| t.language == lang)
                .cloned()
                .collect(),
            language_filter: Some(lang.to_string()),
        }
    }

    /// JSON-lines serialisation in the ingest format.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in &self.tweets {
            let rec = RawRecord::from(t);
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NutsLevel {
    Nuts1,
    Nuts2,
    Nuts3,
}

impl FromStr for NutsLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nuts1" | "1" => Ok(NutsLevel::Nuts1),
            "nuts2" | "2" => Ok(NutsLevel::Nuts2),
            "nuts3" | "3" => Ok(NutsLevel::Nuts3),
            o => Err(Error::Config(format!("unknown NUTS level '{o}'"))),
        }
    }
}

impl fmt::Display for NutsLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NutsLevel::Nuts1 => "nuts1",
            NutsLevel::Nuts2 => "nuts2",
            NutsLevel::Nuts3 => "nuts3",
        })
    }
}

/// One line of a corpus file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    #[serde(default)]
    pub lang: String,
    #[serde(default)]
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemmas: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Raw surface tokens, used only for negation detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuts1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuts2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuts3: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

impl From<&Tweet> for RawRecord {
    fn from(t: &Tweet) -> Self {
        RawRecord {
            id: t.id.clone(),
            lang: t.language.clone(),
            location: t.location_label.clone(),
            lemmas: Some(
                t.lemmas
                    .iter()
                    .map(|(l, p)| (l.clone(), p.to_string()))
                    .collect(),
            ),
            text: None,
            tokens: None,
            nuts1: t.nuts1.clone(),
            nuts2: t.nuts2.clone(),
            nuts3: t.nuts3.clone(),
            negated: t.negated,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Keep only this language; `None` keeps all.
    pub language: Option<String>,
    pub negation_terms: BTreeSet<String>,
    pub keep_pos: BTreeSet<PosTag>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            language: None,
            negation_terms: default_negation_terms("en"),
            keep_pos: [PosTag::Noun, PosTag::Verb, PosTag::Adjective]
                .into_iter()
                .collect(),
        }
    }
}

/// Built-in negation lists. Only examples; callers normally configure their own.
pub fn default_negation_terms(lang: &str) -> BTreeSet<String> {
    let words: &[&str] = match lang {
        "it" => &["non", "mai", "niente", "nessuno", "né"],
        _ => &[
            "not", "no", "never", "don't", "dont", "doesn't", "didn't", "isn't", "aren't",
            "wasn't", "won't", "can't", "cannot", "nobody", "nothing", "neither", "nor",
            "n't",
        ],
    };
    words.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestStats {
    pub records: usize,
    pub kept: usize,
    pub malformed: Vec<(usize, String)>,
    pub language_dropped: usize,
    pub empty_dropped: usize,
}

/// Lowercases and splits on anything that is not alphanumeric or an inner
/// apostrophe. Degraded fallback used when records carry raw `text`: every
/// token is tagged as a noun.
pub fn trivial_tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '’'))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '’').replace('’', "'"))
        .filter(|t| !t.is_empty())
        .collect()
}

pub(crate) enum Parsed {
    Kept(Box<Tweet>),
    WrongLanguage,
    Empty,
    Malformed(String),
}

fn parse_line(line: &str, opts: &IngestOptions) -> Parsed {
    let rec: RawRecord = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return Parsed::Malformed(e.to_string()),
    };
    tweet_from_record(rec, opts)
}

pub(crate) fn tweet_from_record(rec: RawRecord, opts: &IngestOptions) -> Parsed {
    if rec.id.is_empty() {
        return Parsed::Malformed("missing id".into());
    }
    if let Some(lang) = &opts.language {
        if &rec.lang != lang {
            return Parsed::WrongLanguage;
        }
    }
    let (all_lemmas, mut raw_tokens): (Vec<(String, PosTag)>, Vec<String>) =
        match (rec.lemmas, rec.text) {
            (Some(lemmas), _) => {
                let tagged: Vec<(String, PosTag)> = lemmas
                    .into_iter()
                    .map(|(l, p)| (l.trim().to_lowercase(), p.parse().unwrap()))
                    .filter(|(l, _)| !l.is_empty())
                    .collect();
                let raw = tagged.iter().map(|(l, _)| l.clone()).collect();
                (tagged, raw)
            }
            (None, Some(text)) => {
                let toks = trivial_tokenize(&text);
                (
                    toks.iter().map(|t| (t.clone(), PosTag::Noun)).collect(),
                    toks,
                )
            }
            (None, None) => return Parsed::Malformed("record has neither lemmas nor text".into()),
        };
    if let Some(toks) = rec.tokens {
        raw_tokens.extend(toks.into_iter().map(|t| t.to_lowercase()));
    }
    let negated = rec.negated
        || raw_tokens
            .iter()
            .any(|t| opts.negation_terms.contains(t.as_str()));
    let lemmas: Vec<(String, PosTag)> = all_lemmas
        .into_iter()
        .filter(|(l, p)| {
            opts.keep_pos.contains(p)
                && !opts.negation_terms.contains(l.as_str())
                && !l.chars().any(char::is_whitespace)
        })
        .collect();
    if lemmas.is_empty() {
        return Parsed::Empty;
    }
    let non_empty = |c: Option<String>| c.filter(|s| !s.is_empty());
    Parsed::Kept(Box::new(Tweet {
        id: rec.id,
        lemmas,
        language: rec.lang,
        location_label: rec.location,
        nuts1: non_empty(rec.nuts1),
        nuts2: non_empty(rec.nuts2),
        nuts3: non_empty(rec.nuts3),
        negated,
    }))
}

/// Reads a line-delimited corpus file. Malformed lines are skipped and
/// reported in the stats with their line number.
pub fn ingest_corpus(path: &Path, opts: &IngestOptions) -> Result<(Corpus, IngestStats)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(ingest_str(&text, opts))
}

pub fn ingest_str(text: &str, opts: &IngestOptions) -> (Corpus, IngestStats) {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed = par::map(&lines, |(_, l)| parse_line(l, opts));

    let mut stats = IngestStats {
        records: lines.len(),
        ..Default::default()
    };
    let mut tweets = Vec::with_capacity(parsed.len());
    for ((line, _), p) in lines.iter().zip(parsed) {
        match p {
            Parsed::Kept(t) => tweets.push(*t),
            Parsed::WrongLanguage => stats.language_dropped += 1,
            Parsed::Empty => stats.empty_dropped += 1,
            Parsed::Malformed(m) => {
                warn!("line {line}: skipping malformed record: {m}");
                stats.malformed.push((*line, m));
            }
        }
    }
    stats.kept = tweets.len();
    (Corpus::new(tweets, opts.language.clone()), stats)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NutsCodes {
    pub nuts1: String,
    pub nuts2: String,
    pub nuts3: String,
}

/// Location label → NUTS codes. Labels match case-insensitively after trimming.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<String, NutsCodes>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, location: &str, nuts1: &str, nuts2: &str, nuts3: &str) -> Result<()> {
        if !nuts2.starts_with(nuts1) || !nuts3.starts_with(nuts2) {
            return Err(Error::Nesting {
                location: location.to_string(),
                detail: format!("{nuts1} > {nuts2} > {nuts3}"),
            });
        }
        self.entries.insert(
            normalize_label(location),
            NutsCodes {
                nuts1: nuts1.to_string(),
                nuts2: nuts2.to_string(),
                nuts3: nuts3.to_string(),
            },
        );
        Ok(())
    }

    pub fn lookup(&self, location: &str) -> Option<&NutsCodes> {
        self.entries.get(&normalize_label(location))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV `location,nuts1,nuts2,nuts3` with header.
    pub fn load(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let mut gaz = Gazetteer::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 4 {
                return Err(Error::parse(path, line, "expected location,nuts1,nuts2,nuts3"));
            }
            gaz.insert(&rec[0], &rec[1], &rec[2], &rec[3])
                .map_err(|e| Error::parse(path, line, e.to_string()))?;
        }
        Ok(gaz)
    }
}

fn normalize_label(s: &str) -> String {
    s.trim().to_lowercase()
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, line, format!("{other:?}")),
    }
}

/// Codes every tweet whose location label is in the gazetteer. Returns the
/// coded corpus and the fraction of tweets matched.
pub fn assign_regions(corpus: &Corpus, gaz: &Gazetteer) -> (Corpus, f64) {
    let mut matched = 0usize;
    let tweets = corpus
        .tweets
        .iter()
        .map(|t| {
            let mut t = t.clone();
            if let Some(c) = gaz.lookup(&t.location_label) {
                matched += 1;
                t.nuts1 = Some(c.nuts1.clone());
                t.nuts2 = Some(c.nuts2.clone());
                t.nuts3 = Some(c.nuts3.clone());
            }
            t
        })
        .collect();
    let rate = if corpus.is_empty() {
        0.0
    } else {
        matched as f64 / corpus.len() as f64
    };
    (Corpus::new(tweets, corpus.language_filter.clone()), rate)
}

/// Groups coded tweets by their code at `level`; uncoded tweets are dropped.
pub fn partition_by_region(corpus: &Corpus, level: NutsLevel) -> BTreeMap<String, Corpus> {
    let mut out: BTreeMap<String, Corpus> = BTreeMap::new();
    for t in &corpus.tweets {
        if let Some(code) = t.code(level) {
            out.entry(code.to_string())
                .or_insert_with(|| Corpus::new(Vec::new(), corpus.language_filter.clone()))
                .tweets
                .push(t.clone());
        }
    }
    out
}

/// Keeps the `k` regions with most tweets; ties go to the smaller code.
pub fn top_regions(partitions: &BTreeMap<String, Corpus>, k: usize) -> BTreeMap<String, Corpus> {
    let mut ranked: Vec<(&String, &Corpus)> = partitions.iter().collect();
    // BTreeMap order already sorts codes, so a stable sort keeps the tie rule
    ranked.sort_by_key(|r| std::cmp::Reverse(r.1.len()));
    ranked
        .into_iter()
        .take(k.max(1))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

/// CSV `region,population`.
pub fn load_population(path: &Path) -> Result<BTreeMap<String, u64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(Error::parse(path, line, "expected region,population"));
        }
        let pop: u64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, line, format!("bad population '{}'", &rec[1])))?;
        out.insert(rec[0].to_string(), pop);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(lang: &str) -> IngestOptions {
        IngestOptions {
            language: Some(lang.into()),
            negation_terms: ["don't", "not", "never"].iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn pos_filter() {
        let (c, s) = ingest_str(
            r#"{"id":"1","lang":"en","location":"x","lemmas":[["rain","noun"],["the","det"]]}"#,
            &opts("en"),
        );
        assert_eq!(s.kept, 1);
        assert_eq!(c.tweets[0].lemmas, vec![("rain".to_string(), PosTag::Noun)]);
        assert!(!c.tweets[0].negated);
    }

    #[test]
    fn negation_detected_from_raw_token() {
        let (c, _) = ingest_str(
            r#"{"id":"1","lang":"en","lemmas":[["i","pron"],["don't","aux"],["like","verb"],["rain","noun"]]}"#,
            &opts("en"),
        );
        assert!(c.tweets[0].negated);
        let (c, _) = ingest_str(r#"{"id":"2","lang":"en","text":"I don't like rain!"}"#, &opts("en"));
        assert!(c.tweets[0].negated);
        assert!(c.tweets[0].lemmas.iter().any(|(l, _)| l == "rain"));
    }

    #[test]
    fn language_filter_and_counts() {
        let text = [
            r#"{"id":"1","lang":"fr","lemmas":[["pluie","noun"]]}"#,
            r#"{"id":"2","lang":"en","lemmas":[["the","det"]]}"#,
            r#"not json"#,
            r#"{"id":"3","lang":"en"}"#,
            r#"{"id":"4","lang":"en","lemmas":[["sun","noun"]],"nuts1":"UKI"}"#,
        ]
        .join("\n");
        let (c, s) = ingest_str(&text, &opts("en"));
        assert_eq!(c.len(), 1);
        assert_eq!(s.language_dropped, 1);
        assert_eq!(s.empty_dropped, 1);
        assert_eq!(s.malformed.iter().map(|m| m.0).collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(c.tweets[0].nuts1.as_deref(), Some("UKI"));
        assert!(c.tweets.iter().all(|t| t.language == "en"));
    }

    #[test]
    fn tokenizer_keeps_inner_apostrophes() {
        assert_eq!(
            trivial_tokenize("Don't STOP, 'quoted' rain…now"),
            vec!["don't", "stop", "quoted", "rain", "now"]
        );
    }

    fn tweet(id: &str, label: &str) -> Tweet {
        Tweet {
            id: id.into(),
            lemmas: vec![("w".into(), PosTag::Noun)],
            language: "it".into(),
            location_label: label.into(),
            nuts1: None,
            nuts2: None,
            nuts3: None,
            negated: false,
        }
    }

    #[test]
    fn gazetteer_assignment() {
        let mut gaz = Gazetteer::new();
        gaz.insert("Pisa", "ITI", "ITI1", "ITI17").unwrap();
        let c = Corpus::new(vec![tweet("1", "pisa "), tweet("2", "Atlantis")], None);
        let (coded, rate) = assign_regions(&c, &gaz);
        assert_eq!(rate, 0.5);
        assert_eq!(coded.tweets[0].nuts3.as_deref(), Some("ITI17"));
        assert_eq!(coded.tweets[0].nuts1.as_deref(), Some("ITI"));
        assert_eq!(coded.tweets[1].nuts1, None);
        let (_, rate) = assign_regions(&c, &Gazetteer::new());
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn gazetteer_rejects_bad_nesting() {
        assert!(Gazetteer::new().insert("x", "ITI", "UKC1", "UKC11").is_err());
    }

    #[test]
    fn partition_and_top() {
        let mut ts = vec![tweet("1", ""), tweet("2", ""), tweet("3", "")];
        ts[0].nuts1 = Some("ITI".into());
        ts[1].nuts1 = Some("ITI".into());
        ts[2].nuts1 = Some("ITF".into());
        ts[2].nuts3 = None;
        let c = Corpus::new(ts, None);
        let p = partition_by_region(&c, NutsLevel::Nuts1);
        assert_eq!(p["ITI"].len(), 2);
        assert_eq!(p["ITF"].len(), 1);
        assert!(partition_by_region(&c, NutsLevel::Nuts3).is_empty());
        assert!(partition_by_region(&Corpus::default(), NutsLevel::Nuts1).is_empty());

        let top = top_regions(&p, 1);
        assert_eq!(top.keys().collect::<Vec<_>>(), vec!["ITI"]);
        assert_eq!(top_regions(&p, 10), p);
    }

    #[test]
    fn top_tie_rule() {
        let mut p = BTreeMap::new();
        p.insert("B".to_string(), Corpus::new(vec![tweet("1", ""); 5], None));
        p.insert("A".to_string(), Corpus::new(vec![tweet("2", ""); 5], None));
        assert_eq!(top_regions(&p, 1).keys().collect::<Vec<_>>(), vec!["A"]);
    }

    #[test]
    fn top_k_of_174() {
        let p: BTreeMap<String, Corpus> = (0..174)
            .map(|i| (format!("UK{i:03}"), Corpus::new(vec![tweet("t", ""); 1 + i % 7], None)))
            .collect();
        let top = top_regions(&p, 40);
        assert_eq!(top.len(), 40);
        let min_kept = top.values().map(Corpus::len).min().unwrap();
        let max_dropped = p.iter().filter(|(k, _)| !top.contains_key(*k)).map(|(_, v)| v.len()).max().unwrap();
        assert!(min_kept >= max_dropped);
    }

    #[test]
    fn jsonl_roundtrip_is_stable() {
        let mut t = tweet("1", "Pisa");
        t.nuts1 = Some("ITI".into());
        t.negated = true;
        let c = Corpus::new(vec![t], Some("it".into()));
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let (back, _) = ingest_str(
            std::str::from_utf8(&buf).unwrap(),
            &IngestOptions {
                language: Some("it".into()),
                ..Default::default()
            },
        );
        assert_eq!(back, c);
    }
}

//! Valence lexicons: loading, SentiWordNet-style rescaling, class balancing
//! and seeded train/test splitting.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

pub const VALENCE_MIN: f64 = 0.0;
pub const VALENCE_MAX: f64 = 10.0;
pub const VALENCE_MID: f64 = 5.0;

/// Coarse part-of-speech tag. Anything that is not a noun, verb or
/// adjective collapses to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Other,
}

impl FromStr for PosTag {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "noun" | "n" | "nn" | "nns" | "nom" => PosTag::Noun,
            "verb" | "v" | "vb" | "ver" => PosTag::Verb,
            "adjective" | "adj" | "a" | "jj" => PosTag::Adjective,
            _ => PosTag::Other,
        })
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PosTag::Noun => "noun",
            PosTag::Verb => "verb",
            PosTag::Adjective => "adjective",
            PosTag::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntrySource {
    Standard,
    Auxiliary,
    Badwords,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub term: String,
    pub valence: f64,
    pub pos: Option<PosTag>,
    pub source: EntrySource,
}

impl LexiconEntry {
    /// Validates and lowercases the term.
    pub fn new(term: &str, valence: f64, pos: Option<PosTag>, source: EntrySource) -> Result<Self> {
        let term = term.trim().to_lowercase();
        if term.is_empty() || term.chars().any(char::is_whitespace) {
            return Err(Error::InvalidEntry(format!(
                "term '{term}' must be non-empty without whitespace"
            )));
        }
        if !(VALENCE_MIN..=VALENCE_MAX).contains(&valence) {
            return Err(Error::ValenceOutOfRange { term, value: valence });
        }
        Ok(LexiconEntry {
            term,
            valence,
            pos,
            source,
        })
    }
}

/// Term → entry map with unique terms, iterated in lexicographic order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValenceLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconFormat {
    /// `term,valence[,pos]`
    SimpleCsv,
    /// `term,pos_score,neg_score[,pos]`
    SwnCsv,
    /// One term per line, `#` comments; every term gets valence 0.0.
    Wordlist,
}

impl FromStr for LexiconFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple-csv" => Ok(LexiconFormat::SimpleCsv),
            "swn-csv" => Ok(LexiconFormat::SwnCsv),
            "wordlist" => Ok(LexiconFormat::Wordlist),
            other => Err(Error::Config(format!("unknown lexicon format '{other}'"))),
        }
    }
}

impl ValenceLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an entry, rejecting duplicates.
    pub fn insert(&mut self, entry: LexiconEntry) -> Result<()> {
        if self.entries.contains_key(&entry.term) {
            return Err(Error::DuplicateTerm(entry.term));
        }
        self.entries.insert(entry.term.clone(), entry);
        Ok(())
    }

    /// Builds a lexicon from `(term, valence)` pairs.
    pub fn from_pairs<'a, I>(pairs: I, source: EntrySource) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut lex = Self::new();
        for (t, v) in pairs {
            lex.insert(LexiconEntry::new(t, v, None, source)?)?;
        }
        Ok(lex)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&LexiconEntry> {
        self.entries.get(term)
    }

    pub fn valence(&self, term: &str) -> Option<f64> {
        self.entries.get(term).map(|e| e.valence)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    /// Looks up a term, optionally requiring the entry's POS (when it has
    /// one) to agree with `pos`.
    pub fn lookup(&self, term: &str, pos: Option<PosTag>, strict_pos: bool) -> Option<f64> {
        let e = self.entries.get(term)?;
        if strict_pos {
            if let (Some(want), Some(have)) = (pos, e.pos) {
                if want != have {
                    return None;
                }
            }
        }
        Some(e.valence)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LexiconEntry> {
        self.entries.values()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Plain term → valence view.
    pub fn valence_map(&self) -> BTreeMap<String, f64> {
        self.entries
            .iter()
            .map(|(k, e)| (k.clone(), e.valence))
            .collect()
    }

    pub fn remove(&mut self, term: &str) -> Option<LexiconEntry> {
        self.entries.remove(term)
    }

    /// Union where entries already in `self` win on collision.
    pub fn merged_with(&self, other: &ValenceLexicon) -> ValenceLexicon {
        let mut out = self.clone();
        for e in other.iter() {
            out.entries.entry(e.term.clone()).or_insert_with(|| e.clone());
        }
        out
    }

    fn from_entries(entries: impl IntoIterator<Item = LexiconEntry>) -> Self {
        ValenceLexicon {
            entries: entries.into_iter().map(|e| (e.term.clone(), e)).collect(),
        }
    }
}

impl FromIterator<LexiconEntry> for ValenceLexicon {
    fn from_iter<T: IntoIterator<Item = LexiconEntry>>(iter: T) -> Self {
        Self::from_entries(iter)
    }
}

/// Loads a lexicon file. `source` tags every entry; wordlists always load as
/// [`EntrySource::Badwords`].
pub fn load_lexicon(path: &Path, format: LexiconFormat, source: EntrySource) -> Result<ValenceLexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lexicon(&text, path, format, source)
}

pub fn parse_lexicon(
    text: &str,
    path: &Path,
    format: LexiconFormat,
    source: EntrySource,
) -> Result<ValenceLexicon> {
    match format {
        LexiconFormat::Wordlist => parse_wordlist(text, path),
        LexiconFormat::SimpleCsv => parse_csv(text, path, &["term", "valence"], source, |rec| {
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad valence '{}'", &rec[1]))?;
            Ok((v, rec.get(2)))
        }),
        LexiconFormat::SwnCsv => {
            parse_csv(text, path, &["term", "pos_score", "neg_score"], source, |rec| {
                let p: f64 = rec[1]
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad pos_score '{}'", &rec[1]))?;
                let n: f64 = rec[2]
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad neg_score '{}'", &rec[2]))?;
                let v = rescale_swn(p, n).map_err(|e| e.to_string())?;
                Ok((v, rec.get(3)))
            })
        }
    }
}

fn parse_wordlist(text: &str, path: &Path) -> Result<ValenceLexicon> {
    let mut lex = ValenceLexicon::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry = LexiconEntry::new(line, 0.0, None, EntrySource::Badwords)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        lex.insert(entry).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    Ok(lex)
}

fn parse_csv<F>(
    text: &str,
    path: &Path,
    header: &[&str],
    source: EntrySource,
    row: F,
) -> Result<ValenceLexicon>
where
    F: Fn(&csv::StringRecord) -> std::result::Result<(f64, Option<&str>), String>,
{
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let head = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    let ok = head.len() >= header.len()
        && header.iter().zip(head.iter()).all(|(a, b)| b.eq_ignore_ascii_case(a))
        && (head.len() == header.len() || (head.len() == header.len() + 1 && head[header.len()].eq_ignore_ascii_case("pos")));
    if !ok {
        return Err(Error::parse(
            path,
            1,
            format!("expected header '{}[,pos]'", header.join(",")),
        ));
    }

    let mut lex = ValenceLexicon::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() < header.len() || rec.len() > header.len() + 1 {
            return Err(Error::parse(path, line, format!("expected {} or {} fields", header.len(), header.len() + 1)));
        }
        let (valence, pos) = row(&rec).map_err(|m| Error::parse(path, line, m))?;
        let pos = pos.filter(|p| !p.is_empty()).map(|p| p.parse::<PosTag>().unwrap());
        let entry = LexiconEntry::new(&rec[0], valence, pos, source).map_err(|e| match e {
            Error::ValenceOutOfRange { .. } => e,
            other => Error::parse(path, line, other.to_string()),
        })?;
        lex.insert(entry).map_err(|e| Error::parse(path, line, e.to_string()))?;
    }
    Ok(lex)
}

/// Maps a SentiWordNet positive/negative score pair onto [0, 10]:
/// `(pos - neg + 1) * 5`.
pub fn rescale_swn(pos_score: f64, neg_score: f64) -> Result<f64> {
    for s in [pos_score, neg_score] {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "SentiWordNet score {s} outside [0, 1]"
            )));
        }
    }
    Ok((pos_score - neg_score + 1.0) * 5.0)
}

/// Bounds separating negative / neutral / positive entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBounds {
    pub low: f64,
    pub high: f64,
}

impl Default for ClassBounds {
    fn default() -> Self {
        ClassBounds { low: 4.0, high: 6.0 }
    }
}

/// Keeps `n` entries per polarity class, where `n` is the size of the
/// smallest class. Larger classes keep their most polarised entries
/// (largest `|valence - 5|`, ties by term).
pub fn balance_lexicon(lex: &ValenceLexicon, bounds: ClassBounds) -> Result<ValenceLexicon> {
    let ClassBounds { low, high } = bounds;
    if !(0.0 <= low && low < high && high <= VALENCE_MAX) {
        return Err(Error::InvalidArgument(format!(
            "class bounds need 0 <= low < high <= 10, got ({low}, {high})"
        )));
    }
    let mut classes: [Vec<&LexiconEntry>; 3] = Default::default();
    for e in lex.iter() {
        let c = if e.valence < low {
            0
        } else if e.valence <= high {
            1
        } else {
            2
        };
        classes[c].push(e);
    }
    for (c, name) in classes.iter().zip(["negative", "neutral", "positive"]) {
        if c.is_empty() {
            return Err(Error::EmptyClass(name));
        }
    }
    let n = classes.iter().map(Vec::len).min().unwrap();
    let mut out = Vec::with_capacity(3 * n);
    for mut class in classes {
        // entries arrive in term order, so a stable sort keeps the tie rule
        class.sort_by(|a, b| {
            let pa = (a.valence - VALENCE_MID).abs();
            let pb = (b.valence - VALENCE_MID).abs();
            pb.total_cmp(&pa)
        });
        out.extend(class.into_iter().take(n).cloned());
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconSplit {
    pub train: ValenceLexicon,
    pub test: ValenceLexicon,
    pub seed: u64,
}

/// Uniform random partition with `floor(len * fraction)` training entries.
pub fn split_lexicon(lex: &ValenceLexicon, fraction: f64, seed: u64) -> Result<LexiconSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if lex.len() < 2 {
        return Err(Error::EmptyInput("lexicon needs at least 2 entries to split"));
    }
    let mut entries: Vec<&LexiconEntry> = lex.iter().collect();
    entries.shuffle(&mut stats::rng(seed));
    let n_train = (lex.len() as f64 * fraction).floor() as usize;
    let test = entries.split_off(n_train);
    Ok(LexiconSplit {
        train: entries.into_iter().cloned().collect(),
        test: test.into_iter().cloned().collect(),
        seed,
    })
}

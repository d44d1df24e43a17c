//! Run configuration: a sectioned TOML file whose every key can be
//! overridden by a command-line flag of the same name.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::NutsLevel;
use crate::error::{Error, Result};
use crate::lexicon::{ClassBounds, LexiconFormat};
use crate::spreading::SpreadingParams;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub swn_lexicon: Option<PathBuf>,
    pub badwords: Option<PathBuf>,
    pub cd_lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpreadingSection {
    pub range_threshold: f64,
    pub entropy_threshold: f64,
    pub bin_count: usize,
    pub min_tagged_neighbors: usize,
}

impl Default for SpreadingSection {
    fn default() -> Self {
        let p = SpreadingParams::default();
        SpreadingSection {
            range_threshold: p.range_threshold,
            entropy_threshold: p.entropy_threshold,
            bin_count: p.bin_count,
            min_tagged_neighbors: p.min_tagged_neighbors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub language: String,
    /// Empty means the built-in list for `language`.
    pub negation_terms: Vec<String>,
    pub keep_pos: Vec<String>,
    pub level: String,
    pub top_k: usize,
    pub exclude_regions: Vec<String>,
    /// Restrict `spread` / `sweep-params` to one region code at `level`.
    pub region: String,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            language: "en".into(),
            negation_terms: Vec::new(),
            keep_pos: vec!["noun".into(), "verb".into(), "adjective".into()],
            level: "nuts2".into(),
            top_k: 40,
            exclude_regions: Vec::new(),
            region: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconSection {
    pub lexicon_format: String,
    pub balance: bool,
    pub balance_low: f64,
    pub balance_high: f64,
    pub strict_pos: bool,
}

impl Default for LexiconSection {
    fn default() -> Self {
        let b = ClassBounds::default();
        LexiconSection {
            lexicon_format: "simple-csv".into(),
            balance: false,
            balance_low: b.low,
            balance_high: b.high,
            strict_pos: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiSection {
    pub iterations: usize,
}

impl Default for SiSection {
    fn default() -> Self {
        SiSection { iterations: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub repeats: usize,
    pub train_fraction: f64,
    pub learner: String,
}

impl Default for ClassifySection {
    fn default() -> Self {
        ClassifySection {
            repeats: 10,
            train_fraction: 0.8,
            learner: "svm".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub range_grid: Vec<f64>,
    pub entropy_grid: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            range_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            entropy_grid: vec![0.5, 0.8, 1.09, 1.4, 1.7, 2.0, 2.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// `CODE:n_tweets:diversity_p` per region.
    pub synth_regions: Vec<String>,
    pub vocabulary_size: usize,
    pub filler_count: usize,
    pub shift_sigma: f64,
    pub lemmas_min: usize,
    pub lemmas_max: usize,
    pub fillers_max: usize,
    /// `code:weight`; the first is the local language.
    pub languages: Vec<String>,
    pub negation_rate: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            synth_regions: (0..10)
                .map(|i| format!("R{i}:2000:{}", i as f64 / 10.0))
                .collect(),
            vocabulary_size: 600,
            filler_count: 200,
            shift_sigma: 1.0,
            lemmas_min: 3,
            lemmas_max: 6,
            fillers_max: 2,
            languages: vec!["en:1.0".into()],
            negation_rate: 0.05,
        }
    }
}

#[derive(Default, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Root of every random stream.
    pub seed: u64,
    /// Worker cap; 0 lets the pool decide.
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub paths: Paths,
    pub spreading: SpreadingSection,
    pub corpus: CorpusSection,
    pub lexicon: LexiconSection,
    pub si: SiSection,
    pub classify: ClassifySection,
    pub sweep: SweepSection,
    pub synth: SynthSection,
}

/// Every configuration key with its section. Key names are unique across
/// sections, which is what lets flags drop the section prefix.
pub const KEYS: &[(&str, &str)] = &[
    ("run", "seed"),
    ("run", "jobs"),
    ("paths", "corpus"),
    ("paths", "lexicon"),
    ("paths", "swn_lexicon"),
    ("paths", "badwords"),
    ("paths", "cd_lexicon"),
    ("paths", "gazetteer"),
    ("paths", "ground_truth"),
    ("paths", "population"),
    ("paths", "labeled"),
    ("paths", "output_dir"),
    ("spreading", "range_threshold"),
    ("spreading", "entropy_threshold"),
    ("spreading", "bin_count"),
    ("spreading", "min_tagged_neighbors"),
    ("corpus", "language"),
    ("corpus", "negation_terms"),
    ("corpus", "keep_pos"),
    ("corpus", "level"),
    ("corpus", "top_k"),
    ("corpus", "exclude_regions"),
    ("corpus", "region"),
    ("lexicon", "lexicon_format"),
    ("lexicon", "balance"),
    ("lexicon", "balance_low"),
    ("lexicon", "balance_high"),
    ("lexicon", "strict_pos"),
    ("si", "iterations"),
    ("classify", "repeats"),
    ("classify", "train_fraction"),
    ("classify", "learner"),
    ("sweep", "range_grid"),
    ("sweep", "entropy_grid"),
    ("synth", "synth_regions"),
    ("synth", "vocabulary_size"),
    ("synth", "filler_count"),
    ("synth", "shift_sigma"),
    ("synth", "lemmas_min"),
    ("synth", "lemmas_max"),
    ("synth", "fillers_max"),
    ("synth", "languages"),
    ("synth", "negation_rate"),
];

pub fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k)| *k == key).map(|(s, _)| *s)
}

/// Interprets a flag value the way the same text would read in the file:
/// TOML scalar if it parses, bare string otherwise; comma-separated for
/// list-valued keys.
fn flag_value(raw: &str, list: bool) -> toml::Value {
    if list {
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| flag_value(s, false))
            .collect();
        return toml::Value::Array(items);
    }
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    /// Reads an optional config file, then applies `key → value` overrides.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let defaults = toml::Table::try_from(RunConfig::default()).unwrap();
        for (key, raw) in overrides {
            let section = section_of(key).ok_or_else(|| Error::Config(format!("unknown key '{key}'")))?;
            let is_list = defaults
                .get(section)
                .and_then(|s| s.get(key.as_str()))
                .is_some_and(toml::Value::is_array);
            let mut value = flag_value(raw, is_list);
            // integers are accepted where floats are expected
            if let Some(toml::Value::Float(_)) = defaults.get(section).and_then(|s| s.get(key.as_str())) {
                if let toml::Value::Integer(i) = value {
                    value = toml::Value::Float(i as f64);
                }
            }
            table
                .entry(section)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("'{section}' must be a section")))?
                .insert(key.clone(), value);
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that don't depend on which command runs.
    pub fn validate(&self) -> Result<()> {
        self.spreading_params().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.level()?;
        self.lexicon_format()?;
        if self.si.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.corpus.top_k == 0 {
            return Err(Error::Config("top_k must be >= 1".into()));
        }
        let b = self.class_bounds();
        if !(0.0 <= b.low && b.low < b.high && b.high <= 10.0) {
            return Err(Error::Config("balance bounds need 0 <= low < high <= 10".into()));
        }
        if !(self.classify.train_fraction > 0.0 && self.classify.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if self.classify.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        Ok(())
    }

    /// Fails with a config error unless `path` is set and exists.
    pub fn require<'a>(&self, name: &str, path: &'a Option<PathBuf>) -> Result<&'a Path> {
        let p = path
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing required path '{name}'")))?;
        if !p.exists() {
            return Err(Error::Config(format!("{name} '{}' does not exist", p.display())));
        }
        Ok(p)
    }

    /// Like [`require`](Self::require) for optional inputs: unset is fine,
    /// set-but-missing is not.
    pub fn optional<'a>(&self, name: &str, path: &'a Option<PathBuf>) -> Result<Option<&'a Path>> {
        match path {
            None => Ok(None),
            Some(_) => self.require(name, path).map(Some),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn spreading_params(&self) -> SpreadingParams {
        SpreadingParams {
            range_threshold: self.spreading.range_threshold,
            entropy_threshold: self.spreading.entropy_threshold,
            bin_count: self.spreading.bin_count,
            min_tagged_neighbors: self.spreading.min_tagged_neighbors,
        }
    }

    pub fn level(&self) -> Result<NutsLevel> {
        self.corpus.level.parse()
    }

    pub fn lexicon_format(&self) -> Result<LexiconFormat> {
        self.lexicon.lexicon_format.parse()
    }

    pub fn class_bounds(&self) -> ClassBounds {
        ClassBounds {
            low: self.lexicon.balance_low,
            high: self.lexicon.balance_high,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap()
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn every_default_key_is_registered() {
        let t = toml::Table::try_from(RunConfig::default()).unwrap();
        for (section, body) in &t {
            for key in body.as_table().unwrap().keys() {
                assert_eq!(section_of(key), Some(section.as_str()), "{key}");
            }
        }
        let mut names: Vec<&str> = KEYS.iter().map(|k| k.1).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), KEYS.len());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(
            &p,
            "[spreading]\nrange_threshold = 2.0\n[corpus]\nlevel = \"nuts3\"\nexclude_regions = [\"UKI\"]\n",
        )
        .unwrap();
        let cfg = RunConfig::resolve(Some(&p), &ov(&[("range_threshold", "3"), ("iterations", "7")])).unwrap();
        assert_eq!(cfg.spreading.range_threshold, 3.0);
        assert_eq!(cfg.si.iterations, 7);
        assert_eq!(cfg.corpus.level, "nuts3");
        assert_eq!(cfg.corpus.exclude_regions, vec!["UKI"]);

        let cfg = RunConfig::resolve(Some(&p), &ov(&[("exclude_regions", "UKI,UKC"), ("corpus", "/tmp/x y.jsonl")])).unwrap();
        assert_eq!(cfg.corpus.exclude_regions, vec!["UKI", "UKC"]);
        assert_eq!(cfg.paths.corpus, Some(PathBuf::from("/tmp/x y.jsonl")));
        let cfg = RunConfig::resolve(None, &ov(&[("range_grid", "1,2.5")])).unwrap();
        assert_eq!(cfg.sweep.range_grid, vec![1.0, 2.5]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::resolve(None, &ov(&[("nope", "1")])), Err(Error::Config(_))));
        assert!(matches!(RunConfig::resolve(None, &ov(&[("iterations", "0")])), Err(Error::Config(_))));
        assert!(matches!(RunConfig::resolve(None, &ov(&[("level", "nuts9")])), Err(Error::Config(_))));
        assert!(matches!(RunConfig::resolve(None, &ov(&[("iterations", "ten")])), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.run.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}

//! Command-line front end. Every command reads a [`RunConfig`], writes its
//! outputs plus a `manifest.json` into the output directory, and maps
//! failures onto exit codes: 2 configuration, 3 data, 4 invariant.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use crate::baselines::{baseline_report, write_baselines_csv, BaselineReport, MEASURES};
use crate::classify::{cross_validate, load_labeled, write_report_header, write_report_rows, LinearSvm, MajorityClass};
use crate::config::RunConfig;
use crate::corpus::{
    assign_regions, default_negation_terms, ingest_corpus, load_population, partition_by_region, top_regions,
    Corpus, Gazetteer, IngestOptions,
};
use crate::error::{Category, Error, Result};
use crate::graph::build_network;
use crate::lexicon::{
    balance_lexicon, load_lexicon, EntrySource, LexiconFormat, PosTag, ValenceLexicon,
};
use crate::par;
use crate::si::{
    correlate_measure, correlate_with_groundtruth, null_model_reshuffle, si_by_region, superdiversity_index_on,
    write_si_csv, GroundTruthTable, SIResult,
};
use crate::spreading::{sentiment_spreading, SpreadingParams};
use crate::stats;
use crate::synth::{generate_corpus, save_sidecar, synthetic_lexicon, RegionSpec, SynthConfig};

macro_rules! overrides {
    ($($key:ident),* $(,)?) => {
        /// One optional flag per configuration key.
        #[derive(Args, Debug, Default, Clone)]
        pub struct Overrides {
            $(
                #[arg(long = stringify!($key), global = true, value_name = "VALUE", help_heading = "Config overrides")]
                pub $key: Option<String>,
            )*
        }

        impl Overrides {
            pub fn pairs(&self) -> Vec<(String, String)> {
                let mut v = Vec::new();
                $(
                    if let Some(x) = &self.$key {
                        v.push((stringify!($key).to_string(), x.clone()));
                    }
                )*
                v
            }
        }
    };
}

overrides!(
    seed, jobs, corpus, lexicon, swn_lexicon, badwords, cd_lexicon, gazetteer, ground_truth, population,
    labeled, output_dir, range_threshold, entropy_threshold, bin_count, min_tagged_neighbors, language,
    negation_terms, keep_pos, level, top_k, exclude_regions, region, lexicon_format, balance, balance_low,
    balance_high, strict_pos, iterations, repeats, train_fraction, learner, range_grid, entropy_grid,
    synth_regions, vocabulary_size, filler_count, shift_sigma, lemmas_min, lemmas_max, fillers_max,
    languages, negation_rate,
);

#[derive(Parser, Debug)]
#[command(name = "superdiversity", version, about = "Community emotional lexicons and the Superdiversity Index")]
pub struct Cli {
    /// TOML config file; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Build the co-occurrence network and dump it as an edge list.
    BuildNetwork,
    /// Spread the full seed lexicon and write the community lexicon.
    Spread,
    /// Superdiversity Index per region.
    Si,
    /// SI after reshuffling tweets across regions.
    NullModel,
    /// Alternative diversity measures per region.
    Baselines,
    /// Evaluate lexicon features on labeled tweets.
    ClassifyEval,
    /// Generate a synthetic multi-region corpus.
    SynthGen,
    /// Mean correlation over a grid of range/entropy thresholds.
    SweepParams,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::BuildNetwork => "build-network",
            Command::Spread => "spread",
            Command::Si => "si",
            Command::NullModel => "null-model",
            Command::Baselines => "baselines",
            Command::ClassifyEval => "classify-eval",
            Command::SynthGen => "synth-gen",
            Command::SweepParams => "sweep-params",
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        Category::Config => 2,
        Category::Data => 3,
        Category::Invariant => 4,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(outputs) => {
            for o in outputs {
                println!("{}", o.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one command, returning the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::resolve(cli.config.as_deref(), &cli.overrides.pairs())?;
    if cfg.run.jobs > 0 {
        par::set_jobs(cfg.run.jobs);
    }
    // validate inputs before touching the output directory
    let mut ctx = Context::new(cli.command, cfg)?;
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::io(&ctx.out, e))?;
    let summary = match cli.command {
        Command::BuildNetwork => ctx.build_network()?,
        Command::Spread => ctx.spread()?,
        Command::Si => ctx.si(false)?,
        Command::NullModel => ctx.si(true)?,
        Command::Baselines => ctx.baselines()?,
        Command::ClassifyEval => ctx.classify_eval()?,
        Command::SynthGen => ctx.synth_gen()?,
        Command::SweepParams => ctx.sweep()?,
    };
    ctx.write_manifest(summary)?;
    Ok(ctx.outputs)
}

struct Context {
    command: Command,
    cfg: RunConfig,
    out: PathBuf,
    outputs: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

impl Context {
    fn new(command: Command, cfg: RunConfig) -> Result<Self> {
        let p = &cfg.paths;
        match command {
            Command::BuildNetwork => {
                cfg.require("corpus", &p.corpus)?;
            }
            Command::Spread | Command::SweepParams => {
                cfg.require("corpus", &p.corpus)?;
                cfg.require("lexicon", &p.lexicon)?;
                if !cfg.corpus.region.is_empty() {
                    cfg.require("gazetteer", &p.gazetteer)?;
                }
            }
            Command::Si | Command::NullModel => {
                cfg.require("corpus", &p.corpus)?;
                cfg.require("lexicon", &p.lexicon)?;
                cfg.require("gazetteer", &p.gazetteer)?;
                cfg.optional("ground_truth", &p.ground_truth)?;
            }
            Command::Baselines => {
                cfg.require("corpus", &p.corpus)?;
                cfg.require("gazetteer", &p.gazetteer)?;
                cfg.optional("population", &p.population)?;
                cfg.optional("ground_truth", &p.ground_truth)?;
            }
            Command::ClassifyEval => {
                cfg.require("labeled", &p.labeled)?;
                cfg.require("lexicon", &p.lexicon)?;
                cfg.optional("cd_lexicon", &p.cd_lexicon)?;
                if !matches!(cfg.classify.learner.as_str(), "svm" | "majority") {
                    return Err(Error::Config(format!("unknown learner '{}'", cfg.classify.learner)));
                }
            }
            Command::SynthGen => {
                cfg.optional("lexicon", &p.lexicon)?;
            }
        }
        if !matches!(command, Command::SynthGen | Command::ClassifyEval | Command::BuildNetwork) {
            cfg.optional("swn_lexicon", &p.swn_lexicon)?;
            cfg.optional("badwords", &p.badwords)?;
        }
        let out = cfg.output_dir();
        Ok(Context {
            command,
            cfg,
            out,
            outputs: Vec::new(),
        })
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn write_manifest(&mut self, summary: serde_json::Value) -> Result<()> {
        let files: Vec<String> = self
            .outputs
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        let manifest = json!({
            "command": self.command.name(),
            "version": env!("CARGO_PKG_VERSION"),
            "parallel": par::is_parallel(),
            "config_sha256": self.cfg.hash(),
            "config": self.cfg.to_toml(),
            "seeds": {
                "base_seed": self.cfg.run.seed,
                "split_seed": "base_seed + iteration",
                "null_model_seed": stats::derive_seed(self.cfg.run.seed, 1),
                "synth_region_seed": "derive_seed(base_seed, region_index)",
                "classify_repeat_seed": "base_seed + repeat",
            },
            "outputs": files,
            "summary": summary,
        });
        let path = self.output("manifest.json");
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &manifest)
            .map_err(std::io::Error::from)
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))
    }

    fn params(&self) -> SpreadingParams {
        self.cfg.spreading_params()
    }

    fn ingest_options(&self, language: Option<String>) -> Result<IngestOptions> {
        let c = &self.cfg.corpus;
        let negation_terms = if c.negation_terms.is_empty() {
            default_negation_terms(&c.language)
        } else {
            c.negation_terms.iter().map(|s| s.to_lowercase()).collect()
        };
        Ok(IngestOptions {
            language,
            negation_terms,
            keep_pos: c.keep_pos.iter().map(|p| p.parse::<PosTag>().unwrap()).collect(),
        })
    }

    fn ingest(&self, language: Option<String>) -> Result<(Corpus, serde_json::Value)> {
        let path = self.cfg.paths.corpus.as_deref().unwrap();
        let (corpus, stats) = ingest_corpus(path, &self.ingest_options(language)?)?;
        info!("ingested {} of {} records", stats.kept, stats.records);
        Ok((corpus, serde_json::to_value(&stats).unwrap()))
    }

    fn local_corpus(&self) -> Result<(Corpus, serde_json::Value)> {
        self.ingest(Some(self.cfg.corpus.language.clone()))
    }

    fn standard_lexicon(&self) -> Result<ValenceLexicon> {
        let path = self.cfg.paths.lexicon.as_deref().unwrap();
        let lex = load_lexicon(path, self.cfg.lexicon_format()?, EntrySource::Standard)?;
        if self.cfg.lexicon.balance {
            balance_lexicon(&lex, self.cfg.class_bounds())
        } else {
            Ok(lex)
        }
    }

    fn auxiliary_lexicon(&self) -> Result<ValenceLexicon> {
        let mut aux = ValenceLexicon::new();
        if let Some(p) = &self.cfg.paths.swn_lexicon {
            aux = load_lexicon(p, LexiconFormat::SwnCsv, EntrySource::Auxiliary)?;
        }
        if let Some(p) = &self.cfg.paths.badwords {
            aux = aux.merged_with(&load_lexicon(p, LexiconFormat::Wordlist, EntrySource::Badwords)?);
        }
        Ok(aux)
    }

    /// Gazetteer-coded partitions at the configured level, minus excluded
    /// regions, cut to the top-k.
    fn partitions(&self, corpus: &Corpus) -> Result<(BTreeMap<String, Corpus>, f64)> {
        let gaz = Gazetteer::load(self.cfg.paths.gazetteer.as_deref().unwrap())?;
        let (coded, rate) = assign_regions(corpus, &gaz);
        let mut parts = partition_by_region(&coded, self.cfg.level()?);
        for r in &self.cfg.corpus.exclude_regions {
            parts.remove(r);
        }
        Ok((top_regions(&parts, self.cfg.corpus.top_k), rate))
    }

    /// The local corpus, or one region of it when `region` is set.
    fn target_corpus(&self) -> Result<(Corpus, serde_json::Value)> {
        let (corpus, stats) = self.local_corpus()?;
        if self.cfg.corpus.region.is_empty() {
            return Ok((corpus, stats));
        }
        let gaz = Gazetteer::load(self.cfg.paths.gazetteer.as_deref().unwrap())?;
        let (coded, _) = assign_regions(&corpus, &gaz);
        let region = &self.cfg.corpus.region;
        let part = partition_by_region(&coded, self.cfg.level()?)
            .remove(region)
            .ok_or_else(|| Error::Config(format!("region '{region}' has no tweets")))?;
        Ok((part, stats))
    }

    fn build_network(&mut self) -> Result<serde_json::Value> {
        let (corpus, stats) = self.local_corpus()?;
        let g = build_network(&corpus);
        let path = self.output("network.tsv");
        g.save(&path)?;
        Ok(json!({ "ingest": stats, "nodes": g.node_count(), "edges": g.edge_count() }))
    }

    fn spread(&mut self) -> Result<serde_json::Value> {
        let (corpus, stats) = self.target_corpus()?;
        let seed = self.standard_lexicon()?.merged_with(&self.auxiliary_lexicon()?);
        let g = build_network(&corpus);
        let state = sentiment_spreading(&g, &seed, &self.params());
        if g.node_count() > 0 && state.rounds > g.node_count() {
            return Err(Error::Invariant(format!(
                "{} rounds on {} nodes",
                state.rounds,
                g.node_count()
            )));
        }
        for (i, name) in g.nodes().iter().enumerate() {
            if state.seed_flags()[i] && state.valence_at(i) != seed.valence(name) {
                return Err(Error::Invariant(format!("seed '{name}' changed valence")));
            }
        }

        let lex_path = self.output("cd_lexicon.csv");
        let mut w = create(&lex_path)?;
        let write = |w: &mut std::io::BufWriter<std::fs::File>| -> std::io::Result<()> {
            writeln!(w, "term,valence")?;
            for (t, v) in state.to_map() {
                writeln!(w, "{t},{v}")?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(&lex_path, e))?;
        let log_path = self.output("round_log.csv");
        let mut w = create(&log_path)?;
        state
            .write_round_log(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&log_path, e))?;
        let seeded = state.seed_flags().iter().filter(|s| **s).count();
        Ok(json!({
            "ingest": stats,
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "seeded": seeded,
            "unmatched_seeds": state.unmatched_seeds,
            "tagged": state.tagged_count(),
            "rounds": state.rounds,
        }))
    }

    fn si(&mut self, null_model: bool) -> Result<serde_json::Value> {
        let (corpus, stats) = self.local_corpus()?;
        let (mut parts, match_rate) = self.partitions(&corpus)?;
        let null_seed = stats::derive_seed(self.cfg.run.seed, 1);
        if null_model {
            parts = null_model_reshuffle(&parts, null_seed).map_err(|e| Error::Config(e.to_string()))?;
        }
        let standard = self.standard_lexicon()?;
        let aux = self.auxiliary_lexicon()?;
        let results = si_by_region(
            &parts,
            &standard,
            &self.params(),
            &aux,
            self.cfg.si.iterations,
            self.cfg.run.seed,
        );

        let mut ok: BTreeMap<String, SIResult> = BTreeMap::new();
        let mut skipped = BTreeMap::new();
        for (region, r) in results {
            match r {
                Ok(r) => {
                    if !(0.0..=1.0).contains(&r.si) {
                        return Err(Error::Invariant(format!("SI {} for {region} outside [0, 1]", r.si)));
                    }
                    ok.insert(region, r);
                }
                Err(e) => {
                    skipped.insert(region, e.to_string());
                }
            }
        }
        let correlation = match self.cfg.paths.ground_truth.as_deref() {
            Some(p) => {
                let truth = GroundTruthTable::load(p)?;
                correlate_with_groundtruth(&ok, &truth).ok()
            }
            None => None,
        };

        let stem = if null_model { "null_si" } else { "si" };
        let csv_path = self.output(&format!("{stem}.csv"));
        let mut w = create(&csv_path)?;
        write_si_csv(&mut w, ok.values())
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&csv_path, e))?;
        let detail = json!({
            "level": self.cfg.corpus.level,
            "iterations": self.cfg.si.iterations,
            "null_model": null_model,
            "regions": ok,
            "skipped_regions": skipped,
            "groundtruth_pearson": correlation,
        });
        let detail_path = self.output(&format!("{stem}_detail.json"));
        let mut w = create(&detail_path)?;
        serde_json::to_writer_pretty(&mut w, &detail)
            .map_err(std::io::Error::from)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&detail_path, e))?;
        Ok(json!({
            "ingest": stats,
            "gazetteer_match_rate": match_rate,
            "regions": ok.len(),
            "skipped_regions": skipped.len(),
            "groundtruth_pearson": correlation,
            "null_model_seed": if null_model { Some(null_seed) } else { None },
        }))
    }

    fn baselines(&mut self) -> Result<serde_json::Value> {
        let (all, stats) = self.ingest(None)?;
        let (parts, match_rate) = self.partitions(&all)?;
        let population = match self.cfg.paths.population.as_deref() {
            Some(p) => load_population(p)?,
            None => BTreeMap::new(),
        };
        let lang = self.cfg.corpus.language.clone();
        let mut reports: Vec<BaselineReport> = Vec::new();
        let mut skipped = BTreeMap::new();
        for (region, corpus) in &parts {
            let local = corpus.filter_language(&lang);
            match baseline_report(region, &corpus.tweets, &local, population.get(region).copied()) {
                Ok(r) => reports.push(r),
                Err(e @ Error::InvalidArgument(_)) => return Err(Error::parse(
                    self.cfg.paths.population.clone().unwrap_or_default(),
                    0,
                    e.to_string(),
                )),
                Err(e) => {
                    skipped.insert(region.clone(), e.to_string());
                }
            }
        }
        let path = self.output("baselines.csv");
        let mut w = create(&path)?;
        write_baselines_csv(&mut w, &reports)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;

        let mut correlations = BTreeMap::new();
        if let Some(p) = self.cfg.paths.ground_truth.as_deref() {
            let truth = GroundTruthTable::load(p)?;
            for m in MEASURES {
                let measure: BTreeMap<String, f64> = reports
                    .iter()
                    .filter_map(|r| r.measure(m).map(|v| (r.region.clone(), v)))
                    .collect();
                correlations.insert(m, correlate_measure(&measure, &truth).ok());
            }
        }
        Ok(json!({
            "ingest": stats,
            "gazetteer_match_rate": match_rate,
            "regions": reports.len(),
            "skipped_regions": skipped,
            "groundtruth_pearson": correlations,
        }))
    }

    fn classify_eval(&mut self) -> Result<serde_json::Value> {
        let data = load_labeled(self.cfg.paths.labeled.as_deref().unwrap(), &self.ingest_options(None)?)?;
        let mut lexicons: Vec<(String, BTreeMap<String, f64>)> =
            vec![("standard".into(), self.standard_lexicon()?.valence_map())];
        if let Some(p) = &self.cfg.paths.cd_lexicon {
            lexicons.push((
                "community".into(),
                load_lexicon(p, LexiconFormat::SimpleCsv, EntrySource::Standard)?.valence_map(),
            ));
        }
        let c = &self.cfg.classify;
        let mut reports = BTreeMap::new();
        for (name, lex) in &lexicons {
            let report = if c.learner == "majority" {
                cross_validate(&data, lex, &MajorityClass, c.repeats, c.train_fraction, self.cfg.run.seed)?
            } else {
                cross_validate(&data, lex, &LinearSvm::default(), c.repeats, c.train_fraction, self.cfg.run.seed)?
            };
            reports.insert(name.clone(), report);
        }
        let path = self.output("classify_report.csv");
        let mut w = create(&path)?;
        let res = write_report_header(&mut w).and_then(|_| {
            for (name, _) in &lexicons {
                write_report_rows(&mut w, name, &reports[name])?;
            }
            w.flush()
        });
        res.map_err(|e| Error::io(&path, e))?;
        Ok(json!({ "records": data.len(), "reports": reports }))
    }

    fn synth_config(&self) -> Result<SynthConfig> {
        let s = &self.cfg.synth;
        let bad = |m: String| Error::Config(m);
        let regions = s
            .synth_regions
            .iter()
            .map(|spec| {
                let parts: Vec<&str> = spec.split(':').collect();
                match parts.as_slice() {
                    [code, n, p] => Ok(RegionSpec {
                        code: code.to_string(),
                        n_tweets: n.parse().map_err(|_| bad(format!("bad tweet count in '{spec}'")))?,
                        diversity_p: p.parse().map_err(|_| bad(format!("bad diversity in '{spec}'")))?,
                    }),
                    _ => Err(bad(format!("region spec '{spec}' is not CODE:n:p"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let languages = s
            .languages
            .iter()
            .map(|spec| match spec.split_once(':') {
                Some((code, w)) => w
                    .parse::<f64>()
                    .map(|w| (code.to_string(), w))
                    .map_err(|_| bad(format!("bad language weight in '{spec}'"))),
                None => Ok((spec.clone(), 1.0)),
            })
            .collect::<Result<Vec<_>>>()?;
        let vocabulary = match &self.cfg.paths.lexicon {
            Some(p) => load_lexicon(p, self.cfg.lexicon_format()?, EntrySource::Standard)?,
            None => synthetic_lexicon(s.vocabulary_size, stats::derive_seed(self.cfg.run.seed, u64::MAX)),
        };
        let mut cfg = SynthConfig::new(regions, vocabulary, self.cfg.run.seed);
        cfg.valence_shift_sigma = s.shift_sigma;
        cfg.lemmas_per_tweet = (s.lemmas_min, s.lemmas_max);
        cfg.fillers_per_tweet = (0, s.fillers_max);
        cfg.filler_count = s.filler_count;
        cfg.languages = languages;
        cfg.negation_rate = s.negation_rate;
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    fn synth_gen(&mut self) -> Result<serde_json::Value> {
        let cfg = self.synth_config()?;
        let corpus = generate_corpus(&cfg)?;

        let path = self.output("corpus.jsonl");
        corpus.save(&path)?;
        let path = self.output("lexicon.csv");
        let mut w = create(&path)?;
        let res = writeln!(w, "term,valence").and_then(|_| {
            for e in cfg.vocabulary.iter() {
                writeln!(w, "{},{}", e.term, e.valence)?;
            }
            w.flush()
        });
        res.map_err(|e| Error::io(&path, e))?;
        let path = self.output("diversity.csv");
        save_sidecar(&path, &cfg)?;
        let path = self.output("gazetteer.csv");
        let mut w = create(&path)?;
        let res = writeln!(w, "location,nuts1,nuts2,nuts3").and_then(|_| {
            for r in &cfg.regions {
                writeln!(w, "{0},{0},{0},{0}", r.code)?;
            }
            w.flush()
        });
        res.map_err(|e| Error::io(&path, e))?;
        // diversity_p as an immigrant rate over a nominal population
        let path = self.output("ground_truth.csv");
        let mut w = create(&path)?;
        let res = writeln!(w, "region,immigrants,population").and_then(|_| {
            for r in &cfg.regions {
                writeln!(w, "{},{},1000000", r.code, (r.diversity_p * 1e6).round())?;
            }
            w.flush()
        });
        res.map_err(|e| Error::io(&path, e))?;
        Ok(json!({
            "tweets": corpus.len(),
            "regions": cfg.regions.len(),
            "vocabulary": cfg.vocabulary.len(),
        }))
    }

    fn sweep(&mut self) -> Result<serde_json::Value> {
        let (corpus, stats) = self.target_corpus()?;
        let standard = self.standard_lexicon()?;
        let aux = self.auxiliary_lexicon()?;
        let g = build_network(&corpus);
        let base = self.params();
        let grid: Vec<(f64, f64)> = self
            .cfg
            .sweep
            .range_grid
            .iter()
            .flat_map(|&r| self.cfg.sweep.entropy_grid.iter().map(move |&s| (r, s)))
            .collect();
        if grid.is_empty() {
            return Err(Error::Config("empty sweep grid".into()));
        }
        let iterations = self.cfg.si.iterations;
        let seed = self.cfg.run.seed;
        let rows = par::map(&grid, |&(r, s)| {
            let params = SpreadingParams {
                range_threshold: r,
                entropy_threshold: s,
                ..base
            };
            match superdiversity_index_on(&g, &standard, &params, &aux, iterations, seed) {
                Ok(res) => Ok((r, s, Some(res.mean_r), res.n_iterations_used())),
                Err(Error::NoSignal(_)) => Ok((r, s, None, 0)),
                Err(e) => Err(e),
            }
        });
        let rows: Vec<(f64, f64, Option<f64>, usize)> =
            rows.into_iter().collect::<Result<_>>().map_err(|e| Error::Config(e.to_string()))?;

        let path = self.output("sweep.csv");
        let mut w = create(&path)?;
        let res = writeln!(w, "range_threshold,entropy_threshold,mean_r,n_iterations_used").and_then(|_| {
            for (r, s, m, n) in &rows {
                let m = m.map(|v| v.to_string()).unwrap_or_default();
                writeln!(w, "{r},{s},{m},{n}")?;
            }
            w.flush()
        });
        res.map_err(|e| Error::io(&path, e))?;
        let best = rows
            .iter()
            .filter_map(|(r, s, m, _)| m.map(|m| (r, s, m)))
            .max_by(|a, b| a.2.total_cmp(&b.2));
        Ok(json!({
            "ingest": stats,
            "rows": rows.len(),
            "best": best.map(|(r, s, m)| json!({"range_threshold": r, "entropy_threshold": s, "mean_r": m})),
        }))
    }
}

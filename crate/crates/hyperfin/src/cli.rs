//! Command-line orchestration.
//!
//! One TOML config file names every resource and hyperparameter; command
//! line flags override individual values. All runs are hermetic unless
//! `--allow-network` (or the config flag) is set, and every output file is
//! written atomically so reruns on identical inputs are byte-identical.
//!
//! Exit codes: 0 success, 1 usage error, 2 missing or unreadable resource,
//! 3 numeric failure.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, Dataset, Format, CLASS_COUNT};
use crate::embeddings::EmbeddingStore;
use crate::error::{Error, Result};
use crate::eval::{
    ablation, cross_validate, write_ablation_csv, write_report_csv, write_weight_matrix_csv,
    CvOptions,
};
use crate::features::{
    extract_matrix, FeatureContext, FeatureGroup, SignalVector, SIGNAL_LEN,
};
use crate::kgstore::{Graph, KgSnapshot};
use crate::linking::LinkerConfig;
use crate::model::{smote_upsample, train, DenseModel, TrainConfig};
use crate::sparql::{fetch_and_cache, SparqlCache};
use crate::util::write_atomic;

#[derive(Parser)]
#[command(name = "hyperfin", version, about = "Hypernym classification from knowledge-graph features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the signal matrix CSV from the configured resources
    Extract(ExtractArgs),
    /// Train the classifier and write the model file
    Train(TrainArgs),
    /// Rank all ten classes for the given terms
    Predict(PredictArgs),
    /// Stratified cross validation with the configured protocol
    Evaluate(EvalArgs),
    /// Evaluate the full model, a no-SMOTE variant, and each left-out group
    Ablate(EvalArgs),
    /// Run a SPARQL query through the persistent cache
    FetchCache(FetchCacheArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Permit network access for cache misses
    #[arg(long)]
    allow_network: bool,
    /// Override the training seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of training epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the mini-batch size
    #[arg(long)]
    batch_size: Option<usize>,
    /// Override the learning rate
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Disable SMOTE upsampling
    #[arg(long)]
    no_smote: bool,
    /// Override the dataset path
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output CSV path (default: the configured signals path)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Signal matrix CSV to train on (default: the configured signals
    /// path when it exists, otherwise signals are extracted)
    #[arg(long)]
    signals: Option<PathBuf>,
    /// Output model path (default: the configured model path)
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model file (default: the configured model path)
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON array of terms to classify
    #[arg(long)]
    terms_file: Option<PathBuf>,
    /// Terms given directly on the command line
    terms: Vec<String>,
    /// Output JSON path (default: stdout)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Signal matrix CSV (default: configured signals path, else extracted)
    #[arg(long)]
    signals: Option<PathBuf>,
    /// Directory for the report CSVs
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Override the fold count
    #[arg(long)]
    folds: Option<usize>,
    /// Override the repeat count
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Args)]
struct FetchCacheArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cache key for this query
    #[arg(long)]
    key: String,
    /// SPARQL query text
    #[arg(long, conflicts_with = "query_file")]
    query: Option<String>,
    /// File containing the SPARQL query
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Endpoint URL (default: the configured endpoint)
    #[arg(long)]
    endpoint: Option<String>,
}

/// Entry point used by the binary.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args, false),
        Command::Ablate(args) => cmd_evaluate(args, true),
        Command::FetchCache(args) => cmd_fetch_cache(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::UnknownLabel(_)
        | Error::Validation(_)
        | Error::ConceptNotFound(_)
        | Error::Fetch { .. }
        | Error::Cache { .. } => 2,
        Error::Training { .. } | Error::ZeroNormVector => 3,
    }
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    paths: PathsSection,
    train: TrainConfig,
    eval: EvalSection,
    sparql: SparqlSection,
    flags: FlagsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PathsSection {
    dataset: Option<PathBuf>,
    wordnet_triples: Option<PathBuf>,
    wordnet_labels: Option<PathBuf>,
    wikidata_triples: Option<PathBuf>,
    wikidata_labels: Option<PathBuf>,
    webisalod_triples: Option<PathBuf>,
    webisalod_labels: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    model: Option<PathBuf>,
    signals: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalSection {
    folds: usize,
    repeats: usize,
}

impl Default for EvalSection {
    fn default() -> EvalSection {
        EvalSection {
            folds: 5,
            repeats: 10,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SparqlSection {
    endpoint: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlagsSection {
    allow_network: bool,
    confidence_threshold: f64,
}

/// A fully resolved run configuration: the config file with relative paths
/// anchored at the file's directory and flag overrides applied.
struct RunConfig {
    paths: PathsSection,
    train: TrainConfig,
    cv: CvOptions,
    endpoint: Option<String>,
    allow_network: bool,
    confidence_threshold: f64,
}

impl RunConfig {
    fn load(common: &CommonArgs) -> Result<RunConfig> {
        let path = &common.config;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let anchor = |p: Option<PathBuf>| p.map(|p| if p.is_relative() { base.join(p) } else { p });

        let mut train = file.train;
        if let Some(seed) = common.seed {
            train.seed = seed;
        }
        if let Some(epochs) = common.epochs {
            train.epochs = epochs;
        }
        if let Some(batch_size) = common.batch_size {
            train.batch_size = batch_size;
        }
        if let Some(learning_rate) = common.learning_rate {
            train.learning_rate = learning_rate;
        }
        if common.no_smote {
            train.smote_enabled = false;
        }
        train.validate()?;

        Ok(RunConfig {
            paths: PathsSection {
                dataset: anchor(common.dataset.clone().or(file.paths.dataset)),
                wordnet_triples: anchor(file.paths.wordnet_triples),
                wordnet_labels: anchor(file.paths.wordnet_labels),
                wikidata_triples: anchor(file.paths.wikidata_triples),
                wikidata_labels: anchor(file.paths.wikidata_labels),
                webisalod_triples: anchor(file.paths.webisalod_triples),
                webisalod_labels: anchor(file.paths.webisalod_labels),
                embeddings: anchor(file.paths.embeddings),
                stopwords: anchor(file.paths.stopwords),
                cache_dir: anchor(file.paths.cache_dir),
                model: anchor(file.paths.model),
                signals: anchor(file.paths.signals),
            },
            train,
            cv: CvOptions {
                k: file.eval.folds,
                repeats: file.eval.repeats,
            },
            endpoint: file.sparql.endpoint,
            allow_network: common.allow_network || file.flags.allow_network,
            confidence_threshold: file.flags.confidence_threshold,
        })
    }

    fn dataset(&self) -> Result<Dataset> {
        let path = self.paths.dataset.as_deref().ok_or_else(|| {
            Error::Validation("no dataset configured (set paths.dataset or --dataset)".into())
        })?;
        require_file(path)?;
        Dataset::load(path, Format::from_path(path))
    }

    fn linker(&self) -> Result<LinkerConfig> {
        match self.paths.stopwords.as_deref() {
            Some(path) => {
                require_file(path)?;
                LinkerConfig::from_stopword_file(path)
            }
            None => Ok(LinkerConfig::default()),
        }
    }

    fn snapshot(&self, graph: Graph) -> Result<Option<KgSnapshot>> {
        let (triples, labels) = match graph {
            Graph::Wordnet => (&self.paths.wordnet_triples, &self.paths.wordnet_labels),
            Graph::Wikidata => (&self.paths.wikidata_triples, &self.paths.wikidata_labels),
            Graph::Webisalod => (&self.paths.webisalod_triples, &self.paths.webisalod_labels),
        };
        match (triples, labels) {
            (None, None) => Ok(None),
            (Some(t), Some(l)) => {
                require_file(t)?;
                require_file(l)?;
                KgSnapshot::import(t, l, graph, self.confidence_threshold).map(Some)
            }
            _ => Err(Error::Validation(format!(
                "{graph} snapshot needs both a triples and a labels path"
            ))),
        }
    }

    fn embeddings(&self) -> Result<Option<EmbeddingStore>> {
        match self.paths.embeddings.as_deref() {
            Some(path) => {
                require_file(path)?;
                EmbeddingStore::load_text(path, Graph::Webisalod).map(Some)
            }
            None => Ok(None),
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing resource"),
        ))
    }
}

/// Owns the loaded resources so a [`FeatureContext`] can borrow them.
struct Resources {
    wordnet: Option<KgSnapshot>,
    wikidata: Option<KgSnapshot>,
    webisalod: Option<KgSnapshot>,
    embeddings: Option<EmbeddingStore>,
    linker: LinkerConfig,
}

impl Resources {
    fn load(config: &RunConfig) -> Result<Resources> {
        Ok(Resources {
            wordnet: config.snapshot(Graph::Wordnet)?,
            wikidata: config.snapshot(Graph::Wikidata)?,
            webisalod: config.snapshot(Graph::Webisalod)?,
            embeddings: config.embeddings()?,
            linker: config.linker()?,
        })
    }

    fn context(&self) -> FeatureContext<'_> {
        FeatureContext::new(
            self.wordnet.as_ref(),
            self.wikidata.as_ref(),
            self.webisalod.as_ref(),
            self.embeddings.as_ref(),
            self.linker.clone(),
        )
    }
}

// ---------------------------------------------------------------------------
// signal matrix CSV

fn signal_csv_header() -> Vec<String> {
    let mut header = vec!["term".to_string()];
    for group in FeatureGroup::all() {
        for class in 0..CLASS_COUNT {
            header.push(format!("g{}_{}", group.index(), class));
        }
    }
    header
}

fn write_signals_csv(terms: &[&str], signals: &[SignalVector], path: &Path) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(signal_csv_header())
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    for (term, signal) in terms.iter().zip(signals) {
        let mut record = vec![term.to_string()];
        record.extend(signal.values().iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    write_atomic(path, &bytes)
}

fn read_signals_csv(path: &Path) -> Result<(Vec<String>, Vec<SignalVector>)> {
    require_file(path)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if headers.len() != SIGNAL_LEN + 1 || &headers[0] != "term" {
        return Err(Error::parse(
            path,
            1,
            format!("expected `term` plus {SIGNAL_LEN} feature columns"),
        ));
    }
    let mut terms = Vec::new();
    let mut signals = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        if row.len() != SIGNAL_LEN + 1 {
            return Err(Error::parse(path, i + 2, "wrong column count"));
        }
        let mut values = [0.0; SIGNAL_LEN];
        for (c, v) in values.iter_mut().enumerate() {
            *v = row[c + 1].parse::<f64>().map_err(|e| {
                Error::parse(path, i + 2, format!("bad value {:?}: {e}", &row[c + 1]))
            })?;
        }
        terms.push(row[0].to_string());
        signals.push(SignalVector::from_values(values));
    }
    Ok((terms, signals))
}

/// Signals for a dataset: read the given CSV when present, extract
/// otherwise. Terms in a CSV must match the dataset record for record.
fn signals_for(
    config: &RunConfig,
    dataset: &Dataset,
    explicit: Option<&Path>,
) -> Result<Vec<SignalVector>> {
    let candidate = explicit.or(config.paths.signals.as_deref());
    if let Some(path) = candidate {
        if explicit.is_some() || path.is_file() {
            let (terms, signals) = read_signals_csv(path)?;
            if terms.len() != dataset.len() {
                return Err(Error::Validation(format!(
                    "signal matrix has {} rows but the dataset has {} records",
                    terms.len(),
                    dataset.len()
                )));
            }
            for (term, record) in terms.iter().zip(dataset.records()) {
                if term != &record.term {
                    return Err(Error::Validation(format!(
                        "signal matrix is out of step with the dataset at term {term:?}"
                    )));
                }
            }
            return Ok(signals);
        }
    }
    let resources = Resources::load(config)?;
    let ctx = resources.context();
    let (signals, _) = extract_matrix(dataset, &ctx);
    Ok(signals)
}

fn labeled_records(
    dataset: &Dataset,
    signals: &[SignalVector],
) -> Result<Vec<(SignalVector, ClassLabel)>> {
    let records: Vec<(SignalVector, ClassLabel)> = dataset
        .records()
        .iter()
        .zip(signals)
        .filter_map(|(r, s)| r.gold.map(|g| (*s, g)))
        .collect();
    if records.is_empty() {
        return Err(Error::Validation(
            "no gold-labeled records to work with".into(),
        ));
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// commands

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let config = RunConfig::load(&args.common)?;
    let dataset = config.dataset()?;
    let resources = Resources::load(&config)?;
    let ctx = resources.context();
    let (signals, diagnostics) = extract_matrix(&dataset, &ctx);
    let out = args
        .out
        .or(config.paths.signals.clone())
        .unwrap_or_else(|| PathBuf::from("signals.csv"));
    let terms: Vec<&str> = dataset.records().iter().map(|r| r.term.as_str()).collect();
    write_signals_csv(&terms, &signals, &out)?;
    print!("{diagnostics}");
    println!("signal matrix written to {}", out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = RunConfig::load(&args.common)?;
    let dataset = config.dataset()?;
    let signals = signals_for(&config, &dataset, args.signals.as_deref())?;
    let mut records = labeled_records(&dataset, &signals)?;
    let unlabeled = dataset.len() - records.len();
    if unlabeled > 0 {
        println!("skipping {unlabeled} record(s) without a gold label");
    }

    let originals = records.len();
    let mut synthetic = 0usize;
    if config.train.smote_enabled {
        let upsampled = smote_upsample(&records, &config.train, config.train.seed);
        synthetic = upsampled.records.len() - originals;
        if upsampled.singleton_duplicates > 0 {
            println!(
                "warning: {} synthetic record(s) are plain duplicates of singleton classes",
                upsampled.singleton_duplicates
            );
        }
        records = upsampled.records;
    }

    let outcome = train(&records, &config.train)?;
    let out = args
        .model_out
        .or(config.paths.model.clone())
        .unwrap_or_else(|| PathBuf::from("model.json"));
    outcome.model.save(&config.train, &out)?;

    println!("trained on {} records ({synthetic} synthetic)", records.len());
    println!("final training loss: {}", outcome.final_loss);
    let sums = outcome.model.group_weight_sums();
    println!(
        "group weight sums: {} {} {} {} {}",
        sums[0], sums[1], sums[2], sums[3], sums[4]
    );
    println!("model written to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow {
    term: String,
    ranked_labels: Vec<&'static str>,
    scores: Vec<f64>,
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let config = RunConfig::load(&args.common)?;
    let model_path = args
        .model
        .or(config.paths.model.clone())
        .ok_or_else(|| Error::Validation("no model path configured".into()))?;
    require_file(&model_path)?;
    let (model, _) = DenseModel::load(&model_path)?;

    let mut terms: Vec<String> = Vec::new();
    if let Some(path) = &args.terms_file {
        require_file(path)?;
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let from_file: Vec<String> = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        terms.extend(from_file);
    }
    terms.extend(args.terms);

    let resources = Resources::load(&config)?;
    let ctx = resources.context();
    let mut diagnostics = crate::features::Diagnostics::default();
    let rows: Vec<PredictionRow> = terms
        .iter()
        .map(|term| {
            let signal = crate::features::build_signal(term, &ctx, &mut diagnostics);
            let ranked = model.predict_ranked(&signal);
            PredictionRow {
                term: term.clone(),
                ranked_labels: ranked
                    .entries()
                    .iter()
                    .map(|(c, _)| c.canonical_name())
                    .collect(),
                scores: ranked.entries().iter().map(|(_, s)| *s).collect(),
            }
        })
        .collect();

    let json = serde_json::to_string_pretty(&rows)
        .map_err(|e| Error::Validation(e.to_string()))?;
    match &args.out {
        Some(path) => write_atomic(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_evaluate(args: EvalArgs, ablate: bool) -> Result<()> {
    let config = RunConfig::load(&args.common)?;
    let dataset = config.dataset()?;
    let signals = signals_for(&config, &dataset, args.signals.as_deref())?;
    let records = labeled_records(&dataset, &signals)?;

    let options = CvOptions {
        k: args.folds.unwrap_or(config.cv.k),
        repeats: args.repeats.unwrap_or(config.cv.repeats),
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    if ablate {
        let rows = ablation(&records, &config.train, &options)?;
        let path = args.out_dir.join("ablation.csv");
        write_ablation_csv(&rows, &path)?;
        for (row, report) in &rows {
            println!(
                "{:<20} accuracy {:.4} mean rank {:.4}",
                row.display_name(),
                report.accuracy,
                report.mean_rank
            );
        }
        println!("ablation table written to {}", path.display());
    } else {
        let report = cross_validate(&records, &config.train, &options)?;
        let path = args.out_dir.join("eval_report.csv");
        write_report_csv(&report, &path)?;
        println!(
            "accuracy {:.4} mean rank {:.4} over {} records, {} folds, {} repeats",
            report.accuracy,
            report.mean_rank,
            report.records_evaluated,
            options.k,
            options.repeats
        );
        println!("report written to {}", path.display());
    }

    // the weight matrix comes from a model trained on the full data
    let mut full = records;
    if config.train.smote_enabled {
        full = smote_upsample(&full, &config.train, config.train.seed).records;
    }
    let outcome = train(&full, &config.train)?;
    let weights_path = args.out_dir.join("weight_matrix.csv");
    write_weight_matrix_csv(&outcome.model, &weights_path)?;
    println!("weight matrix written to {}", weights_path.display());
    Ok(())
}

fn cmd_fetch_cache(args: FetchCacheArgs) -> Result<()> {
    let config = RunConfig::load(&args.common)?;
    let endpoint = args
        .endpoint
        .or(config.endpoint.clone())
        .ok_or_else(|| Error::Validation("no SPARQL endpoint configured".into()))?;
    let query = match (&args.query, &args.query_file) {
        (Some(q), _) => q.clone(),
        (None, Some(path)) => {
            require_file(path)?;
            std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?
        }
        (None, None) => {
            return Err(Error::Validation(
                "either --query or --query-file is required".into(),
            ))
        }
    };
    let cache_dir = config
        .paths
        .cache_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("cache"));
    let cache = SparqlCache::new(cache_dir)?;
    let triples = fetch_and_cache(&endpoint, &query, &args.key, &cache, config.allow_network)?;
    println!(
        "{} triple(s) for key {:?} at {}",
        triples.len(),
        args.key,
        cache.path_for(&args.key).display()
    );
    Ok(())
}

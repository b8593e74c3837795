//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 data error,
//! 4 internal error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::ablation::{ablation_run, default_masks, mask_base, mask_has_no_effect, mask_queries, AttributeMask};
use crate::ensemble::{EnsembleStrategy, Prediction};
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_k_grid, predict_all, EvalReport, Method};
use crate::retrieval::RetrievalStrategy;
use crate::store::{self, KnowledgeBase, ProfileNormalizer};
use crate::synthetic::{self, SynthConfig};
use crate::types::{ProfileLayout, QueryRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

pub const DEFAULT_K_GRID: [usize; 6] = [5, 10, 20, 50, 100, 200];

#[derive(Debug, Parser)]
#[command(name = "rakb", version, about = "Retrieval-augmented deepfake detection over a labeled knowledge base")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a JSONL knowledge set and write a binary knowledge base.
    Build(BuildArgs),
    /// Score a labeled query set and write a report plus per-query predictions.
    Evaluate(EvalArgs),
    /// Write predictions for queries that need not carry labels.
    Predict(EvalArgs),
    /// Evaluate over a grid of k values.
    Sweep(SweepArgs),
    /// Re-evaluate with profile attributes removed.
    Ablate(AblateArgs),
    /// Generate a seeded synthetic knowledge set and query set.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Profile layout as name:width pairs.
    #[arg(long, default_value = "age:1,gender:2,emotion:257,voice_quality:25")]
    pub layout: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Cm,
    Prof,
    Hybrid,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleArg {
    Mv,
    Ratio,
    Avg,
}

impl From<EnsembleArg> for EnsembleStrategy {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Mv => EnsembleStrategy::MajorityVote,
            EnsembleArg::Ratio => EnsembleStrategy::Ratio,
            EnsembleArg::Avg => EnsembleStrategy::Average,
        }
    }
}

impl StrategyArg {
    fn retrieval(self) -> Option<RetrievalStrategy> {
        match self {
            StrategyArg::Cm => Some(RetrievalStrategy::CmOnly),
            StrategyArg::Prof => Some(RetrievalStrategy::ProfileOnly),
            StrategyArg::Hybrid => Some(RetrievalStrategy::Hybrid),
            StrategyArg::None => None,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum)]
    pub ensemble: Option<EnsembleArg>,
    /// Z-score profile dimensions with knowledge-base statistics.
    #[arg(long)]
    pub normalize_profile: bool,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub k: Option<usize>,
    /// Attributes to drop from profiles, comma separated.
    #[arg(long)]
    pub mask: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    /// Development split used to choose k.
    #[arg(long)]
    pub dev_queries: Option<PathBuf>,
    #[arg(long)]
    pub mask: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct AblateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub k: Option<usize>,
    /// One mask per flag, attributes comma separated; `none` keeps everything.
    #[arg(long)]
    pub mask: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn exit_code(err: &Error) -> i32 {
    if matches!(err, Error::AtLine { .. }) {
        return EXIT_INPUT;
    }
    match err.root() {
        Error::Io { .. }
        | Error::Parse(_)
        | Error::ScoreOutOfRange(_)
        | Error::LabelInvalid(_)
        | Error::InvalidLayout(_)
        | Error::InvalidConfig(_)
        | Error::UnknownAttribute(_)
        | Error::AllAttributesExcluded
        | Error::InvalidK
        | Error::HybridKTooSmall(_)
        | Error::InvalidParallelism
        | Error::EmptyInput
        | Error::DuplicateId(_)
        | Error::NonFiniteValue { .. } => EXIT_INPUT,
        Error::BadMagic
        | Error::UnsupportedVersion(_)
        | Error::ChecksumMismatch { .. }
        | Error::TruncatedFile { .. }
        | Error::CorruptFile(_)
        | Error::DimensionMismatch { .. }
        | Error::EmptyBase
        | Error::UnlabeledQuery(_)
        | Error::MissingClass(_) => EXIT_DATA,
        Error::EmptyNeighborSet | Error::IndexOutOfRange { .. } | Error::EmptySamples => EXIT_INTERNAL,
        Error::AtLine { .. } | Error::Query { .. } => EXIT_INTERNAL,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Build(a) => cmd_build(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn file_crc64(path: &Path) -> Result<(u64, u64)> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut digest = store::CRC64.digest();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        digest.update(&buf[..n]);
        total += n as u64;
    }
    Ok((digest.finalize(), total))
}

fn write_manifest(path: &Path, command: &str, args: &impl Serialize, inputs: &[&Path]) -> Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| {
            let (crc, bytes) = file_crc64(p)?;
            Ok(json!({ "path": p, "crc64": format!("{crc:016x}"), "bytes": bytes }))
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "tool": "rakb",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": args,
        "inputs": inputs,
    });
    write_json(path, &manifest)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "query_id\tscore\tensemble\tneighbor_count").map_err(io)?;
    for p in predictions {
        writeln!(w, "{}", p.tsv_row()).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `real 39.0% / fake 61.0%`.
pub fn label_balance(n_real: usize, n_fake: usize) -> String {
    let total = (n_real + n_fake).max(1) as f64;
    format!("real {:.1}% / fake {:.1}%", 100.0 * n_real as f64 / total, 100.0 * n_fake as f64 / total)
}

pub fn cmd_build(a: &BuildArgs) -> Result<()> {
    let layout: ProfileLayout = a.layout.parse()?;
    let ingested = store::ingest_jsonl(&a.input, &layout)?;
    let base = KnowledgeBase::build(&ingested.records, layout)?;
    store::save(&base, &a.out)?;
    let n_fake = base.fake_count();
    println!("n={} d_cm={} d_prof={}", base.len(), base.d_cm(), base.d_prof());
    println!("{}", label_balance(base.len() - n_fake, n_fake));
    if ingested.zero_vector_rows > 0 {
        eprintln!("warning: {} rows carry an all-zero CM or profile vector", ingested.zero_vector_rows);
    }
    let mut manifest = a.out.clone().into_os_string();
    manifest.push(".manifest.json");
    write_manifest(Path::new(&manifest), "build", a, &[&a.input])
}

/// Loaded, optionally normalized and masked inputs shared by the scoring
/// commands.
struct Prepared {
    base: KnowledgeBase,
    queries: Vec<QueryRecord>,
    normalizer: Option<ProfileNormalizer>,
    parallelism: usize,
}

impl Prepared {
    fn load(c: &Common) -> Result<Self> {
        let mut base = store::load(&c.base)?;
        let mut queries = store::ingest_queries_jsonl(&c.queries, base.layout())?.records;
        let normalizer = c.normalize_profile.then(|| ProfileNormalizer::fit(&base));
        if let Some(n) = &normalizer {
            base = n.apply_base(&base)?;
            queries = queries.iter().map(|q| n.apply_query(q)).collect::<Result<_>>()?;
        }
        let parallelism = match c.parallelism {
            Some(p) => p,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(Self { base, queries, normalizer, parallelism })
    }

    fn extra_queries(&self, path: &Path, layout: &ProfileLayout) -> Result<Vec<QueryRecord>> {
        let queries = store::ingest_queries_jsonl(path, layout)?.records;
        match &self.normalizer {
            Some(n) => queries.iter().map(|q| n.apply_query(q)).collect(),
            None => Ok(queries),
        }
    }

    fn masked(&self, mask: &AttributeMask) -> Result<(KnowledgeBase, Vec<QueryRecord>)> {
        Ok((mask_base(&self.base, mask)?, mask_queries(&self.queries, self.base.layout(), mask)?))
    }
}

fn method_from(c: &Common, k: Option<usize>) -> Result<Method> {
    let Some(retrieval) = c.strategy.retrieval() else {
        return Ok(Method::Baseline);
    };
    let ensemble =
        c.ensemble.ok_or_else(|| Error::InvalidConfig("--ensemble is required unless --strategy none".into()))?;
    let k = k.ok_or_else(|| Error::InvalidConfig("--k is required for retrieval strategies".into()))?;
    let method = Method::augmented(retrieval, ensemble.into(), k);
    method.validate()?;
    Ok(method)
}

fn warn_no_effect(method: &Method) {
    if mask_has_no_effect(method) {
        eprintln!("warning: mask has no effect for strategy {}", method.retrieval_name());
    }
}

pub fn cmd_evaluate(a: &EvalArgs) -> Result<()> {
    let method = method_from(&a.common, a.k)?;
    let prep = Prepared::load(&a.common)?;
    let mask = a.mask.as_deref().map(AttributeMask::parse).unwrap_or_default();
    if !mask.is_empty() {
        warn_no_effect(&method);
    }
    let (base, queries) = prep.masked(&mask)?;
    let (report, predictions) = evaluate(&base, &queries, &method, prep.parallelism)?;

    let out = &a.common.out;
    create_dir(out)?;
    write_json(&out.join("report.json"), &json!({ "method": method, "mask": mask, "report": report }))?;
    write_predictions(&out.join("predictions.tsv"), &predictions)?;
    write_manifest(&out.join("manifest.json"), "evaluate", a, &[&a.common.base, &a.common.queries])?;
    println!("{}", EvalReport::table_header());
    println!("{}", report.table_row());
    if let Some(reason) = &report.eer_unavailable {
        eprintln!("warning: {reason}");
    }
    Ok(())
}

pub fn cmd_predict(a: &EvalArgs) -> Result<()> {
    let method = method_from(&a.common, a.k)?;
    let prep = Prepared::load(&a.common)?;
    let mask = a.mask.as_deref().map(AttributeMask::parse).unwrap_or_default();
    let (base, queries) = prep.masked(&mask)?;
    let predictions = predict_all(&base, &queries, &method, prep.parallelism)?;
    let out = &a.common.out;
    create_dir(out)?;
    write_predictions(&out.join("predictions.tsv"), &predictions)?;
    write_manifest(&out.join("manifest.json"), "predict", a, &[&a.common.base, &a.common.queries])?;
    println!("wrote {} predictions", predictions.len());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    retrieval: &'a str,
    ensemble: &'a str,
    eval: Vec<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dev: Option<Vec<EvalReport>>,
    best_k: Option<usize>,
    selected_on: &'a str,
}

/// Lowest EER wins; ties go to the smaller k. Rows without an EER are
/// skipped.
fn best_k(ks: &[usize], reports: &[EvalReport]) -> Option<usize> {
    ks.iter()
        .zip(reports)
        .filter_map(|(k, r)| r.eer.map(|e| (*k, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let c = &a.common;
    let Some(retrieval) = c.strategy.retrieval() else {
        return Err(Error::InvalidConfig("sweep needs a retrieval strategy".into()));
    };
    let ensemble: EnsembleStrategy =
        c.ensemble.ok_or_else(|| Error::InvalidConfig("--ensemble is required".into()))?.into();
    let ks = a.k_grid.clone().unwrap_or_else(|| DEFAULT_K_GRID.to_vec());
    if ks.is_empty() {
        return Err(Error::InvalidConfig("empty k grid".into()));
    }
    for &k in &ks {
        Method::augmented(retrieval, ensemble, k).validate()?;
    }
    let prep = Prepared::load(c)?;
    let mask = a.mask.as_deref().map(AttributeMask::parse).unwrap_or_default();
    let (base, queries) = prep.masked(&mask)?;
    let eval = evaluate_k_grid(&base, &queries, retrieval, ensemble, &ks, prep.parallelism)?;
    let dev = match &a.dev_queries {
        Some(path) => {
            let dev = prep.extra_queries(path, prep.base.layout())?;
            let dev = mask_queries(&dev, prep.base.layout(), &mask)?;
            Some(evaluate_k_grid(&base, &dev, retrieval, ensemble, &ks, prep.parallelism)?)
        }
        None => None,
    };
    let (best, selected_on) = match &dev {
        Some(dev) => (best_k(&ks, dev), "dev"),
        None => (best_k(&ks, &eval), "eval"),
    };

    let mut table = String::new();
    table.push_str(&EvalReport::table_header());
    table.push('\n');
    for r in &eval {
        table.push_str(&r.table_row());
        table.push('\n');
    }
    match best.and_then(|k| ks.iter().position(|x| *x == k).map(|i| (k, &eval[i]))) {
        Some((k, r)) => {
            let eer = r.eer_percent().map_or("n/a".to_string(), |e| format!("{e:.2}"));
            table.push_str(&format!(
                "best k = {k} (selected on {selected_on} EER); eval EER% {eer} Acc% {:.2}\n",
                r.accuracy * 100.0
            ));
        }
        None => table.push_str("best k = n/a (no EER available)\n"),
    }
    print!("{table}");

    let out = &c.out;
    create_dir(out)?;
    write_text(&out.join("sweep.txt"), &table)?;
    write_json(
        &out.join("sweep.json"),
        &SweepOutput { retrieval: retrieval.name(), ensemble: ensemble.name(), eval, dev, best_k: best, selected_on },
    )?;
    let mut inputs: Vec<&Path> = vec![&c.base, &c.queries];
    if let Some(dev) = &a.dev_queries {
        inputs.push(dev);
    }
    write_manifest(&out.join("manifest.json"), "sweep", a, &inputs)
}

pub fn cmd_ablate(a: &AblateArgs) -> Result<()> {
    let method = method_from(&a.common, a.k)?;
    let masks: Vec<AttributeMask> =
        if a.mask.is_empty() { default_masks() } else { a.mask.iter().map(|m| AttributeMask::parse(m)).collect() };
    let prep = Prepared::load(&a.common)?;
    for m in &masks {
        m.reduced_layout(prep.base.layout())?;
    }
    warn_no_effect(&method);
    let rows = masks
        .iter()
        .map(|m| ablation_run(&prep.base, &prep.queries, m, &method, prep.parallelism))
        .collect::<Result<Vec<_>>>()?;

    let mut table = format!("{:<28}{:>9}{:>9}\n", format!("config ({method})"), "EER%", "Acc%");
    for r in &rows {
        table.push_str(&r.table_row());
        table.push('\n');
    }
    print!("{table}");
    let out = &a.common.out;
    create_dir(out)?;
    write_text(&out.join("ablation.txt"), &table)?;
    write_json(&out.join("ablation.json"), &json!({ "method": method, "rows": rows }))?;
    write_manifest(&out.join("manifest.json"), "ablate", a, &[&a.common.base, &a.common.queries])
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let mut cfg: SynthConfig =
        serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let data = synthetic::generate(&cfg)?;
    synthetic::write_dataset(&cfg, &data, &a.out)?;
    println!(
        "wrote {} knowledge rows and {} queries to {} (seed {})",
        data.knowledge.len(),
        data.queries.len(),
        a.out.display(),
        cfg.seed
    );
    write_manifest(&a.out.join("manifest.json"), "synth", a, &[&a.config])
}

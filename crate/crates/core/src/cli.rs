//! The `regard-audit` command line.
//!
//! Outputs are machine-readable (JSON / TSV / CSV) unless `--pretty` is given.
//! Every file written gets a `<file>.meta.json` sidecar recording the config
//! digest and seed; JSON artifacts embed the digest directly as well.
//!
//! Exit status: 0 success, 1 usage error, 2 data error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{self, render_stacked_chart, to_csv, AuditReport, Provenance};
use crate::annotation::{build_gold_dataset, load_raw, select_batch};
use crate::corpus::{
    apply_split_assignment, ingest_str, load_archive, load_gold_dataset, parse_split_assignment, split_dataset,
    to_generation_str, write_archive, write_gold, write_split_assignment, IngestOptions, LabeledSample, Sample, Splits,
};
use crate::digest::sha256_hex;
use crate::error::{read_to_string, write_file};
use crate::regard::eval::{evaluate, evaluate_trained, RunSetReport};
use crate::regard::linear::{train_with_log, LinearRegardModel, TrainConfig};
use crate::regard::remote::RemoteScorer;
use crate::regard::{RegardScorer, SentimentBaseline};
use crate::sentiment::{
    load_lexicon, parse_boosters, parse_negators, SentimentAnalyzer, SentimentConfig, SentimentLexicon,
};
use crate::service::http::serve;
use crate::service::AnnotationStore;
use crate::stats::{agreement_rows, correlation_rows, parse_predictions, render_table, Predictions, Restriction, StatRow};
use crate::templates::TemplateSet;
use crate::Error;

pub const REMOTE_ENV: &str = "REGARD_AUDIT_REMOTE_URL";

#[derive(Debug, Parser, Serialize)]
#[command(name = "regard-audit", version, about = "Audit generated text for demographic bias")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Template file replacing the built-in templates.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    /// Worker threads for audit scoring.
    #[arg(long, global = true, default_value_t = 1)]
    #[serde(skip)]
    pub jobs: usize,
    /// Remote regard scorer base URL.
    #[arg(long, global = true, env = REMOTE_ENV)]
    pub remote: Option<String>,
    /// Sentiment lexicon TSV (`token<TAB>valence`).
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Negator list, one token per line.
    #[arg(long, global = true)]
    pub negators: Option<PathBuf>,
    /// Booster list, `token[<TAB>increment]` per line.
    #[arg(long, global = true)]
    pub boosters: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    SentimentBaseline,
    Trained,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictionArg {
    DropItems,
    DropRatings,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print the 60 generation prompts.
    Templates {
        /// Also write the template set as a JSON data file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Parse generation files into a corpus archive.
    Ingest {
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Keep full texts instead of cutting at the first sentence.
        #[arg(long)]
        no_truncate: bool,
    },
    /// Cut every text in a generation file to its first sentence.
    Truncate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick the annotation batch (3 positive + 3 negative per template).
    SelectBatch {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the annotation service.
    Serve {
        /// Batch archive written by `select-batch`.
        #[arg(long)]
        batch: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Event log for persistence.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Comma-separated annotator ids; any id is accepted when omitted.
        #[arg(long, value_delimiter = ',')]
        annotators: Vec<String>,
        #[arg(long, default_value_t = 1800)]
        claim_timeout_secs: u64,
    },
    /// Majority-vote raw annotations into a gold dataset.
    Gold {
        #[arg(long)]
        raw: PathBuf,
        /// Archive holding the masked texts of the annotated samples.
        #[arg(long)]
        batch: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Agreement and correlation table.
    Stats {
        #[arg(long)]
        raw: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Sentiment predictions TSV; computed with the analyzer when omitted.
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = RestrictionArg::DropItems)]
        restriction: RestrictionArg,
    },
    /// Train the linear regard classifier.
    Train {
        #[arg(long)]
        gold: PathBuf,
        /// Split assignment TSV; a seeded random split is drawn when omitted.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the split assignment used.
        #[arg(long)]
        split_out: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Test-split accuracy of a scorer.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_enum)]
        scorer: ScorerKind,
        /// Saved model; with `--scorer trained` and no model, one model is
        /// trained per run with seeds seed, seed+1, ...
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        runs: usize,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Score a corpus and write distributions, gaps and charts.
    Audit {
        /// Corpus archive(s) from `ingest`.
        #[arg(long = "archive")]
        archives: Vec<PathBuf>,
        /// Generation file(s), ingested with truncation on the fly.
        #[arg(long = "generations")]
        generations: Vec<PathBuf>,
        #[arg(long, value_enum)]
        scorer: ScorerKind,
        /// Second scorer whose gaps are compared against the first.
        #[arg(long, value_enum)]
        compare: Option<ScorerKind>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Score the unmasked text (ablation).
        #[arg(long)]
        unmasked: bool,
    },
    /// Summarize an audit report and re-render its tables and charts.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct HyperArgs {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().l2)]
    pub l2: f64,
}

impl HyperArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            l2: self.l2,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
            CliError::Io(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parse `argv` (including the program name) and run it.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

/// Digest of everything that determines the outputs (not `--jobs`).
pub fn config_digest(cli: &Cli) -> String {
    sha256_hex(serde_json::to_vec(cli).expect("cli args serialize"))
}

struct Ctx<'a> {
    global: &'a GlobalArgs,
    digest: String,
}

impl Ctx<'_> {
    fn templates(&self) -> CliResult<TemplateSet> {
        Ok(match &self.global.templates {
            Some(p) => TemplateSet::load(p)?,
            None => TemplateSet::builtin(),
        })
    }

    fn analyzer(&self, err: &mut dyn Write) -> CliResult<SentimentAnalyzer> {
        let g = self.global;
        if g.lexicon.is_none() && g.negators.is_none() && g.boosters.is_none() {
            return Ok(SentimentAnalyzer::bundled());
        }
        let bundled = SentimentLexicon::bundled();
        let entries = match &g.lexicon {
            Some(p) => {
                let (entries, dups) = load_lexicon(p)?;
                for d in dups {
                    writeln!(err, "warning: {}:{}: duplicate entry {:?}, last one wins", p.display(), d.line, d.token)?;
                }
                entries
            }
            None => bundled.entries,
        };
        let negators = match &g.negators {
            Some(p) => parse_negators(&read_to_string(p)?),
            None => bundled.negators,
        };
        let boosters = match &g.boosters {
            Some(p) => parse_boosters(&read_to_string(p)?, &p.display().to_string())?,
            None => bundled.boosters,
        };
        Ok(SentimentAnalyzer::new(
            SentimentLexicon::new(entries, negators, boosters)?,
            SentimentConfig::default(),
        )?)
    }

    fn scorer(&self, kind: ScorerKind, model: Option<&Path>, err: &mut dyn Write) -> CliResult<Box<dyn RegardScorer>> {
        Ok(match kind {
            ScorerKind::SentimentBaseline => Box::new(SentimentBaseline::new(self.analyzer(err)?)),
            ScorerKind::Trained => {
                let path = model.ok_or_else(|| CliError::Usage("--scorer trained needs --model".into()))?;
                Box::new(LinearRegardModel::load(path)?)
            }
            ScorerKind::Remote => {
                let url = self
                    .global
                    .remote
                    .as_deref()
                    .ok_or_else(|| CliError::Usage(format!("--scorer remote needs --remote or {REMOTE_ENV}")))?;
                Box::new(RemoteScorer::new(url))
            }
        })
    }

    /// Write `contents` and its provenance sidecar.
    fn write_artifact(&self, path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
        let contents = contents.as_ref();
        write_file(path, contents)?;
        let meta = json!({
            "file": path.file_name().map(|n| n.to_string_lossy().into_owned()),
            "sha256": sha256_hex(contents),
            "config_digest": self.digest,
            "seed": self.global.seed,
        });
        let mut meta_path = path.as_os_str().to_owned();
        meta_path.push(".meta.json");
        write_file(Path::new(&meta_path), pretty_json(&meta))?;
        Ok(())
    }

    /// Print a JSON value with the config digest attached.
    fn emit(&self, out: &mut dyn Write, value: serde_json::Value) -> CliResult {
        let mut value = value;
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_digest".into(), json!(self.digest));
            obj.insert("seed".into(), json!(self.global.seed));
        }
        if self.global.pretty {
            writeln!(out, "{}", pretty_json(&value))?;
        } else {
            writeln!(out, "{value}")?;
        }
        Ok(())
    }
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let ctx = Ctx {
        global: &cli.global,
        digest: config_digest(cli),
    };
    match &cli.command {
        Command::Templates { export } => cmd_templates(&ctx, export.as_deref(), out),
        Command::Ingest { inputs, out: path, no_truncate } => cmd_ingest(&ctx, inputs, path, !no_truncate, out, err),
        Command::Truncate { input, out: path } => cmd_truncate(&ctx, input, path.as_deref(), out, err),
        Command::SelectBatch { archive, out: path } => cmd_select_batch(&ctx, archive, path, out, err),
        Command::Serve {
            batch,
            addr,
            log,
            annotators,
            claim_timeout_secs,
        } => cmd_serve(batch, *addr, log.as_deref(), annotators, *claim_timeout_secs, err),
        Command::Gold { raw, batch, out: path } => cmd_gold(&ctx, raw, batch, path, out),
        Command::Stats {
            raw,
            gold,
            predictions,
            restriction,
        } => cmd_stats(&ctx, raw.as_deref(), gold.as_deref(), predictions.as_deref(), *restriction, out, err),
        Command::Train {
            gold,
            split,
            out: path,
            split_out,
            hyper,
        } => cmd_train(&ctx, gold, split.as_deref(), path, split_out.as_deref(), hyper, out),
        Command::Eval {
            gold,
            split,
            scorer,
            model,
            runs,
            hyper,
        } => cmd_eval(&ctx, gold, split.as_deref(), *scorer, model.as_deref(), *runs, hyper, out, err),
        Command::Audit {
            archives,
            generations,
            scorer,
            compare,
            model,
            out_dir,
            unmasked,
        } => {
            let samples = load_corpus(&ctx, archives, generations, err)?;
            let mut kinds = vec![*scorer];
            kinds.extend(*compare);
            cmd_audit(&ctx, &samples, &kinds, model.as_deref(), out_dir, *unmasked, out, err)
        }
        Command::Report { input, out_dir } => cmd_report(&ctx, input, out_dir.as_deref(), out),
    }
}

fn cmd_templates(ctx: &Ctx, export: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let set = ctx.templates()?;
    for t in set.expand() {
        if ctx.global.pretty {
            writeln!(out, "{:<22} {}", t.id(), t.prompt)?;
        } else {
            writeln!(out, "{}\t{}", t.id(), t.prompt)?;
        }
    }
    if let Some(path) = export {
        ctx.write_artifact(path, set.to_json())?;
    }
    Ok(())
}

fn ingest_files(
    templates: &TemplateSet,
    inputs: &[PathBuf],
    truncate: bool,
    err: &mut dyn Write,
) -> CliResult<Vec<Sample>> {
    // Ingest all files as one stream so sample numbering continues across files.
    let mut joined = String::new();
    let mut origins = Vec::new();
    for path in inputs {
        let text = read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            joined.push_str(line);
            joined.push('\n');
            origins.push((path, i + 1));
        }
    }
    let report = ingest_str(&joined, templates, IngestOptions { truncate });
    for d in &report.diagnostics {
        let (path, line) = origins[d.line - 1];
        writeln!(err, "warning: {}:{line}: {}", path.display(), d.message)?;
    }
    if report.samples.is_empty() {
        return Err(CliError::Data(Error::Invalid("no usable generation records".into())));
    }
    Ok(report.samples)
}

fn cmd_ingest(
    ctx: &Ctx,
    inputs: &[PathBuf],
    path: &Path,
    truncate: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let samples = ingest_files(&ctx.templates()?, inputs, truncate, err)?;
    ctx.write_artifact(path, write_archive(&samples))?;
    ctx.emit(out, json!({ "samples": samples.len(), "archive": path }))
}

fn cmd_truncate(ctx: &Ctx, input: &Path, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let samples = ingest_files(&ctx.templates()?, &[input.to_path_buf()], true, err)?;
    let text = to_generation_str(&samples);
    match path {
        Some(p) => ctx.write_artifact(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn cmd_select_batch(ctx: &Ctx, archive: &Path, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let samples = load_archive(archive)?;
    let analyzer = ctx.analyzer(err)?;
    let selection = select_batch(&samples, |s| analyzer.analyze(&s.masked_text).label, ctx.global.seed);
    for s in &selection.shortfalls {
        writeln!(
            err,
            "warning: template {} has only {} positive / {} negative samples",
            s.template_id, s.positives, s.negatives
        )?;
    }
    let by_id: HashMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let batch: Vec<Sample> = selection.batch.members.iter().map(|id| by_id[id.as_str()].clone()).collect();
    ctx.write_artifact(path, write_archive(&batch))?;
    ctx.emit(
        out,
        json!({
            "members": batch.len(),
            "complete": selection.is_complete(),
            "shortfalls": selection.shortfalls,
        }),
    )
}

fn cmd_serve(
    batch: &Path,
    addr: SocketAddr,
    log: Option<&Path>,
    annotators: &[String],
    claim_timeout_secs: u64,
    err: &mut dyn Write,
) -> CliResult {
    let samples = load_archive(batch)?;
    let mut store = AnnotationStore::from_samples(&samples).with_claim_timeout(Duration::from_secs(claim_timeout_secs));
    if !annotators.is_empty() {
        store = store.with_annotators(annotators.iter().cloned());
    }
    if let Some(p) = log {
        store = store.with_log(p).map_err(|e| CliError::Data(Error::Invalid(e.to_string())))?;
    }
    writeln!(err, "serving {} samples on http://{addr}", samples.len())?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(Arc::new(Mutex::new(store)), addr))?;
    Ok(())
}

fn cmd_gold(ctx: &Ctx, raw: &Path, batch: &Path, path: &Path, out: &mut dyn Write) -> CliResult {
    let records = load_raw(raw)?;
    let texts: HashMap<String, String> = load_archive(batch)?
        .into_iter()
        .map(|s| (s.id, s.masked_text))
        .collect();
    let build = build_gold_dataset(&records, &texts)?;
    ctx.write_artifact(path, write_gold(&build.gold))?;
    let mut counts = [0usize; 3];
    for s in &build.gold {
        counts[s.gold_regard.index()] += 1;
    }
    ctx.emit(
        out,
        json!({
            "gold": build.gold.len(),
            "regard_counts": { "negative": counts[0], "neutral": counts[1], "positive": counts[2] },
            "excluded": build.exclusions,
        }),
    )
}

fn sentiment_predictions(analyzer: &SentimentAnalyzer, gold: &[LabeledSample]) -> Predictions {
    gold.iter()
        .map(|s| (s.id.clone(), analyzer.analyze(&s.masked_text).label))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_stats(
    ctx: &Ctx,
    raw: Option<&Path>,
    gold: Option<&Path>,
    predictions: Option<&Path>,
    restriction: RestrictionArg,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    if raw.is_none() && gold.is_none() {
        return Err(CliError::Usage("stats needs --raw and/or --gold".into()));
    }
    let restriction = match restriction {
        RestrictionArg::DropItems => Restriction::DropItems,
        RestrictionArg::DropRatings => Restriction::DropRatings,
    };
    let mut rows: Vec<StatRow> = Vec::new();
    if let Some(p) = raw {
        rows.extend(agreement_rows(&load_raw(p)?, restriction)?);
    }
    if let Some(p) = gold {
        let gold = load_gold_dataset(p)?;
        let preds = match predictions {
            Some(pp) => parse_predictions(&read_to_string(pp)?, &pp.display().to_string())?,
            None => sentiment_predictions(&ctx.analyzer(err)?, &gold),
        };
        rows.extend(correlation_rows(&gold, &ctx.templates()?, Some(&preds))?);
    }
    if ctx.global.pretty {
        write!(out, "{}", render_table(&rows))?;
        writeln!(out, "config digest: {}", ctx.digest)?;
        Ok(())
    } else {
        ctx.emit(out, json!({ "rows": rows }))
    }
}

fn load_splits(ctx: &Ctx, gold: &[LabeledSample], split: Option<&Path>) -> CliResult<Splits> {
    Ok(match split {
        Some(p) => apply_split_assignment(gold, &parse_split_assignment(&read_to_string(p)?, &p.display().to_string())?)?,
        None => split_dataset(gold, ctx.global.seed)?,
    })
}

fn cmd_train(
    ctx: &Ctx,
    gold: &Path,
    split: Option<&Path>,
    path: &Path,
    split_out: Option<&Path>,
    hyper: &HyperArgs,
    out: &mut dyn Write,
) -> CliResult {
    let gold = load_gold_dataset(gold)?;
    let splits = load_splits(ctx, &gold, split)?;
    let (model, log) = train_with_log(&splits.train.members, &splits.dev.members, &hyper.config(ctx.global.seed))?;
    ctx.write_artifact(path, model.to_json())?;
    if let Some(p) = split_out {
        ctx.write_artifact(p, write_split_assignment(&splits))?;
    }
    ctx.emit(
        out,
        json!({
            "model": path,
            "vocabulary": model.vocabulary.len(),
            "best_epoch": log.best_epoch,
            "best_dev_accuracy": log.dev_accuracies.get(log.best_epoch),
            "final_loss": log.losses.last(),
            "split_sizes": [splits.train.members.len(), splits.dev.members.len(), splits.test.members.len()],
        }),
    )
}

fn render_runs(report: &RunSetReport) -> String {
    let mut s = format!("scorer: {}\n", report.scorer);
    for (i, r) in report.runs.iter().enumerate() {
        s.push_str(&format!("run {i}: accuracy {:.4} (n={})\n", r.accuracy, r.n));
    }
    s.push_str(&format!("mean accuracy: {:.4}\n", report.mean_accuracy));
    for (ctx, acc) in &report.mean_per_context {
        s.push_str(&format!("  {ctx}: {acc:.4}\n"));
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    ctx: &Ctx,
    gold: &Path,
    split: Option<&Path>,
    kind: ScorerKind,
    model: Option<&Path>,
    runs: usize,
    hyper: &HyperArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let gold = load_gold_dataset(gold)?;
    let splits = load_splits(ctx, &gold, split)?;
    let templates = ctx.templates()?;
    let report = if kind == ScorerKind::Trained && model.is_none() {
        let seeds: Vec<u64> = (0..runs.max(1) as u64).map(|i| ctx.global.seed.wrapping_add(i)).collect();
        evaluate_trained(
            &splits.train.members,
            &splits.dev.members,
            &splits.test.members,
            &hyper.config(ctx.global.seed),
            &seeds,
            &templates,
        )?
    } else {
        let scorer = ctx.scorer(kind, model, err)?;
        evaluate(scorer.as_ref(), &splits.test.members, runs, &templates)?
    };
    if ctx.global.pretty {
        write!(out, "{}", render_runs(&report))?;
        writeln!(out, "config digest: {}", ctx.digest)?;
        Ok(())
    } else {
        ctx.emit(out, serde_json::to_value(&report).map_err(Error::from)?)
    }
}

fn load_corpus(ctx: &Ctx, archives: &[PathBuf], generations: &[PathBuf], err: &mut dyn Write) -> CliResult<Vec<Sample>> {
    if archives.is_empty() && generations.is_empty() {
        return Err(CliError::Usage("audit needs --archive or --generations".into()));
    }
    let mut samples = Vec::new();
    for p in archives {
        samples.extend(load_archive(p)?);
    }
    if !generations.is_empty() {
        samples.extend(ingest_files(&ctx.templates()?, generations, true, err)?);
    }
    Ok(samples)
}

fn svg_with_digest(svg: &str, digest: &str) -> String {
    match svg.find('>') {
        Some(i) => format!("{}\n<metadata>config_digest={digest}</metadata>{}", &svg[..=i], &svg[i + 1..]),
        None => svg.to_string(),
    }
}

/// Write `report.json`, `distributions.csv` and one chart per scorer and context.
fn write_report_files(ctx: &Ctx, report: &AuditReport, dir: &Path) -> CliResult<Vec<String>> {
    let mut files = Vec::new();
    let mut put = |name: String, contents: String| -> CliResult {
        ctx.write_artifact(&dir.join(&name), contents)?;
        files.push(name);
        Ok(())
    };
    put("report.json".into(), pretty_json(report))?;
    put("distributions.csv".into(), to_csv(&report.distributions))?;
    for d in &report.distributions {
        let svg = render_stacked_chart(std::slice::from_ref(d));
        put(
            format!("chart-{}-{}.svg", d.scorer_name, d.context),
            svg_with_digest(&svg, &ctx.digest),
        )?;
    }
    Ok(files)
}

#[allow(clippy::too_many_arguments)]
fn cmd_audit(
    ctx: &Ctx,
    samples: &[Sample],
    kinds: &[ScorerKind],
    model: Option<&Path>,
    out_dir: &Path,
    unmasked: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let scorers = kinds
        .iter()
        .map(|&k| ctx.scorer(k, model, err))
        .collect::<CliResult<Vec<_>>>()?;
    let refs: Vec<&dyn RegardScorer> = scorers.iter().map(|s| s.as_ref()).collect();
    let provenance = Provenance {
        scorer: refs.iter().map(|s| s.name()).collect::<Vec<_>>().join("+"),
        corpus_digest: sha256_hex(write_archive(samples)),
        seed: ctx.global.seed,
        config_digest: ctx.digest.clone(),
    };
    let report = analysis::audit(samples, &refs, provenance, ctx.global.jobs, unmasked)?;
    for d in &report.distributions {
        for n in &d.notices {
            writeln!(err, "notice: {n}")?;
        }
    }
    let files = write_report_files(ctx, &report, out_dir)?;
    if ctx.global.pretty {
        write!(out, "{}", render_summary(&report))?;
        Ok(())
    } else {
        ctx.emit(out, json!({ "out_dir": out_dir, "files": files, "samples": samples.len() }))
    }
}

fn render_summary(report: &AuditReport) -> String {
    let mut s = format!(
        "scorer: {}\ncorpus: {}\nseed: {}\nconfig digest: {}\n",
        report.provenance.scorer, report.provenance.corpus_digest, report.provenance.seed, report.provenance.config_digest
    );
    for d in &report.distributions {
        s.push_str(&format!("\n[{} / {}]\n{:<10} {:>8} {:>8} {:>8} {:>6}\n", d.scorer_name, d.context, "group", "neg", "neu", "pos", "n"));
        for (g, dist) in &d.per_demographic {
            s.push_str(&format!(
                "{:<10} {:>8.3} {:>8.3} {:>8.3} {:>6}\n",
                g.display_name(),
                dist.negative,
                dist.neutral,
                dist.positive,
                dist.n
            ));
        }
    }
    for g in &report.gaps {
        s.push_str(&format!("\ngaps [{} / {}]\n", g.scorer_name, g.context));
        for p in &g.pairs {
            s.push_str(&format!(
                "{}-{}: neg {:+.3} neu {:+.3} pos {:+.3}\n",
                p.group_a.display_name(),
                p.group_b.display_name(),
                p.gap_negative,
                p.gap_neutral,
                p.gap_positive
            ));
        }
    }
    for c in &report.comparisons {
        s.push_str(&format!("\n{} vs {} [{}]\n", c.first, c.second, c.context));
        for d in &c.deltas {
            s.push_str(&format!(
                "{}-{}: negative gap wider under {}\n",
                d.group_a.display_name(),
                d.group_b.display_name(),
                if d.negative_gap_wider_in_first { &c.first } else { &c.second }
            ));
        }
    }
    s
}

fn cmd_report(ctx: &Ctx, input: &Path, out_dir: Option<&Path>, out: &mut dyn Write) -> CliResult {
    let report: AuditReport = serde_json::from_str(&read_to_string(input)?).map_err(Error::from)?;
    if let Some(dir) = out_dir {
        write_report_files(ctx, &report, dir)?;
    }
    if ctx.global.pretty {
        write!(out, "{}", render_summary(&report))?;
        Ok(())
    } else {
        ctx.emit(
            out,
            json!({
                "provenance": report.provenance,
                "gaps": report.gaps,
                "comparisons": report.comparisons,
            }),
        )
    }
}

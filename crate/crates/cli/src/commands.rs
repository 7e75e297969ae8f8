//! Subcommand bodies.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ecpe_core::corpus::{
    corpus_stats, make_splits, parse_raw_corpus, read_splits, select, sniff_format, validate_splits, write_jsonl,
    write_splits, CorpusStats, Document, Format, ParseMode, SplitSet,
};
use ecpe_core::metrics::{aggregate_splits, evaluate, render_table, AggregateReport, EvalReport, Scope};
use ecpe_core::pipeline::{predict, read_predictions, write_predictions, InferenceConfig, PairPrediction, Variant};
use ecpe_core::qa_task::QAExampleRecord;
use ecpe_core::Error;
use rayon::prelude::*;

use crate::config::{RunConfig, CONFIG_FILE};
use crate::CliError;

pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const SPLITS_FILE: &str = "splits.jsonl";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const RESULTS_FILE: &str = "results.txt";
pub const ENVIRONMENT_FILE: &str = "environment.txt";

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::failure(format!("{}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

/// Reads a corpus file. `format = None` sniffs the first non-blank line.
pub fn load_corpus(path: &Path, format: Option<Format>, mode: ParseMode) -> Result<Vec<Document>, CliError> {
    let body = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    let Some(first) = body.lines().find(|l| !l.trim().is_empty()) else {
        return Err(data_err(path, "file contains no documents"));
    };
    let format = format.unwrap_or_else(|| sniff_format(first));
    let docs = parse_raw_corpus(body.as_bytes(), format, mode).map_err(|e| data_err(path, e))?;
    if docs.is_empty() {
        return Err(data_err(path, "file contains no documents"));
    }
    Ok(docs)
}

/// Normalizes a raw corpus to jsonl and returns its statistics.
pub fn cmd_ingest(raw: &Path, out: &Path, format: Option<Format>, mode: ParseMode) -> Result<CorpusStats, CliError> {
    let docs = load_corpus(raw, format, mode)?;
    let mut w = create(out)?;
    write_jsonl(&mut w, &docs).map_err(CliError::failure)?;
    w.flush().map_err(|e| CliError::failure(format!("{}: {e}", out.display())))?;
    Ok(corpus_stats(&docs))
}

pub fn cmd_stats(path: &Path, format: Option<Format>, mode: ParseMode) -> Result<CorpusStats, CliError> {
    Ok(corpus_stats(&load_corpus(path, format, mode)?))
}

pub fn cmd_split(corpus: &Path, format: Option<Format>, k: usize, seed: u64, out: &Path) -> Result<Vec<SplitSet>, CliError> {
    let docs = load_corpus(corpus, format, ParseMode::Annotated)?;
    let splits = make_splits(&docs, k, seed).map_err(CliError::usage)?;
    let mut w = create(out)?;
    write_splits(&mut w, &splits).map_err(CliError::failure)?;
    w.flush().map_err(|e| CliError::failure(format!("{}: {e}", out.display())))?;
    Ok(splits)
}

/// Outcome of one (split, variant) job.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub split_id: usize,
    pub variant: Variant,
    pub result: Result<EvalReport, String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub jobs: Vec<JobOutcome>,
    pub aggregates: BTreeMap<String, AggregateReport>,
}

impl RunSummary {
    pub fn failures(&self) -> usize {
        self.jobs.iter().filter(|j| j.result.is_err()).count()
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for job in &self.jobs {
            let status = match &job.result {
                Ok(r) => format!("ok pair_f1={:.3}", r.pair.f1),
                Err(e) => format!("FAILED {e}"),
            };
            let _ = writeln!(out, "split {:02} {}: {status}", job.split_id, job.variant);
        }
        let _ = writeln!(out, "{} of {} jobs failed", self.failures(), self.jobs.len());
        out
    }
}

fn split_dir(root: &Path, split_id: usize, variant: Variant) -> PathBuf {
    root.join(format!("split_{split_id:02}")).join(variant.as_str())
}

fn run_job(cfg: &RunConfig, docs: &[Document], split: &SplitSet, variant: Variant) -> Result<EvalReport, Error> {
    let dir = split_dir(&cfg.output, split.split_id, variant);
    let train = select(docs, &split.train)?;
    let test = select(docs, &split.test)?;
    let mut hp = cfg.hyperparams.clone();
    hp.seed = cfg.seed.wrapping_add(split.split_id as u64);

    log::info!("split {} {variant}: training on {} documents", split.split_id, train.len());
    let trained = cfg.encoder.train_variant(variant, &train, &test, &hp, &cfg.questions)?;

    let io = |path: &Path, e: std::io::Error| Error::io(path, e);
    fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let path = dir.join("train_examples.jsonl");
    let mut w = BufWriter::new(File::create(&path).map_err(|e| io(&path, e))?);
    for ex in &trained.examples {
        serde_json::to_writer(&mut w, &QAExampleRecord::from(ex))?;
        w.write_all(b"\n").map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))?;
    let reports: BTreeMap<&str, _> = trained.reports.iter().map(|(t, r)| (t.as_str(), r)).collect();
    let path = dir.join("train_report.json");
    fs::write(&path, serde_json::to_string_pretty(&reports)?).map_err(|e| io(&path, e))?;

    let infer = InferenceConfig {
        questions: cfg.questions.clone(),
        max_span_tokens: hp.max_span_tokens,
    };
    let preds: Vec<PairPrediction> = test
        .iter()
        .map(|d| predict(d, variant, &trained.models, &infer))
        .collect::<Result<_, _>>()?;
    let path = dir.join("predictions.jsonl");
    let mut w = BufWriter::new(File::create(&path).map_err(|e| io(&path, e))?);
    write_predictions(&mut w, &preds)?;
    w.flush().map_err(|e| io(&path, e))?;

    let test_docs: Vec<Document> = test.into_iter().cloned().collect();
    let report = evaluate(&test_docs, &preds, Scope::Corpus)?;
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| io(&path, e))?;
    log::info!("split {} {variant}: pair F1 {:.3}", split.split_id, report.pair.f1);
    Ok(report)
}

fn environment_manifest(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "package = {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "os = {}", std::env::consts::OS);
    let _ = writeln!(out, "arch = {}", std::env::consts::ARCH);
    let _ = writeln!(out, "debug_build = {}", cfg!(debug_assertions));
    let _ = writeln!(out, "threads = {}", rayon::current_num_threads());
    let _ = writeln!(out, "encoder = {}", cfg.encoder);
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let _ = writeln!(out, "started_unix = {started}");
    out
}

/// Trains, predicts and evaluates every (split, variant) pair.
///
/// A failing job is logged and marked in `summary.txt`; the remaining jobs
/// still run. The caller decides the exit status from
/// [`RunSummary::failures`].
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let docs = load_corpus(&cfg.corpus, cfg.format, ParseMode::Annotated)?;
    let splits = match &cfg.splits {
        Some(path) => {
            let f = File::open(path).map_err(|e| data_err(path, e))?;
            read_splits(BufReader::new(f)).map_err(|e| data_err(path, e))?
        }
        None => make_splits(&docs, cfg.k, cfg.seed).map_err(CliError::usage)?,
    };
    validate_splits(&docs, &splits).map_err(CliError::data)?;

    let root = &cfg.output;
    write_file(&root.join(CONFIG_FILE), &cfg.to_text())?;
    write_file(&root.join(ENVIRONMENT_FILE), &environment_manifest(cfg))?;
    let mut w = create(&root.join(SPLITS_FILE))?;
    write_splits(&mut w, &splits).map_err(CliError::failure)?;
    w.flush().map_err(|e| CliError::failure(e.to_string()))?;

    let jobs: Vec<(&SplitSet, Variant)> = splits
        .iter()
        .flat_map(|s| cfg.variants.iter().map(move |&v| (s, v)))
        .collect();
    let run = |&(split, variant): &(&SplitSet, Variant)| {
        let result = run_job(cfg, &docs, split, variant).map_err(|e| {
            log::error!("split {} {variant} failed: {e}", split.split_id);
            e.to_string()
        });
        JobOutcome {
            split_id: split.split_id,
            variant,
            result,
        }
    };
    let outcomes: Vec<JobOutcome> = if cfg.parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };

    let mut aggregates = BTreeMap::new();
    for &variant in &cfg.variants {
        let ok: Vec<EvalReport> = outcomes
            .iter()
            .filter(|j| j.variant == variant)
            .filter_map(|j| j.result.as_ref().ok().cloned())
            .collect();
        if !ok.is_empty() {
            aggregates.insert(variant.as_str().to_string(), aggregate_splits(&ok).map_err(CliError::failure)?);
        }
    }
    let summary = RunSummary {
        output: root.clone(),
        jobs: outcomes,
        aggregates,
    };
    if !summary.aggregates.is_empty() {
        let json = serde_json::to_string_pretty(&summary.aggregates).map_err(CliError::failure)?;
        write_file(&root.join(AGGREGATE_FILE), &json)?;
        let rows: Vec<(String, Option<EvalReport>)> = summary
            .aggregates
            .iter()
            .map(|(v, a)| (v.clone(), Some(a.mean)))
            .collect();
        write_file(&root.join(RESULTS_FILE), &render_table(&rows))?;
    }
    write_file(&root.join(SUMMARY_FILE), &summary.render())?;
    Ok(summary)
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Reads `aggregate.json` of each run. Unreadable runs yield `None`.
pub fn load_aggregates(dir: &Path) -> Option<BTreeMap<String, AggregateReport>> {
    let body = fs::read_to_string(dir.join(AGGREGATE_FILE)).ok()?;
    serde_json::from_str(&body).ok()
}

/// One row per (run, variant), ordered by run name then variant. A run
/// without a readable aggregate report gets a single `n/a` row.
pub fn cmd_report(dirs: &[PathBuf]) -> String {
    let mut runs: Vec<(String, &PathBuf)> = dirs.iter().map(|d| (run_name(d), d)).collect();
    runs.sort();
    let mut rows = Vec::new();
    for (name, dir) in runs {
        match load_aggregates(dir) {
            Some(aggs) if !aggs.is_empty() => {
                for (variant, agg) in aggs {
                    rows.push((format!("{name}/{variant}"), Some(agg.mean)));
                }
            }
            _ => {
                log::warn!("{}: no readable {AGGREGATE_FILE}", dir.display());
                rows.push((name, None));
            }
        }
    }
    render_table(&rows)
}

/// Reads a prediction file back, for inspection tools and tests.
pub fn read_prediction_file(path: &Path) -> Result<Vec<PairPrediction>, CliError> {
    let f = File::open(path).map_err(|e| data_err(path, e))?;
    read_predictions(BufReader::new(f)).map_err(|e| data_err(path, e))
}

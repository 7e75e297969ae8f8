//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ecpe_core::corpus::Format;
use ecpe_core::encoder::Hyperparams;
use ecpe_core::pipeline::Variant;
use ecpe_core::qa_task::FixedQuestions;

use crate::registry::EncoderSpec;
use crate::CliError;

pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: PathBuf,
    /// Externally published split file; when absent, `k` splits are drawn
    /// with `seed`.
    pub splits: Option<PathBuf>,
    pub k: usize,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub encoder: EncoderSpec,
    pub hyperparams: Hyperparams,
    pub questions: FixedQuestions,
    pub format: Option<Format>,
    pub output: PathBuf,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: PathBuf::new(),
            splits: None,
            k: 10,
            seed: 42,
            variants: vec![Variant::GuidedEmotionFirst],
            encoder: EncoderSpec::Toy,
            hyperparams: Hyperparams::default(),
            questions: FixedQuestions::default(),
            format: None,
            output: PathBuf::new(),
            parallel: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::usage(format!("invalid value `{value}` for `{key}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::usage(format!("invalid value `{value}` for `{key}`: expected true or false"))),
    }
}

/// Reads `key = value` lines. `#` starts a comment line.
pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let body = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    parse_key_values(&body).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn parse_key_values(body: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let hp = &mut self.hyperparams;
        match key {
            "corpus" => self.corpus = PathBuf::from(value),
            "splits" => self.splits = (!value.is_empty()).then(|| PathBuf::from(value)),
            "k" => self.k = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "variant" | "variants" => {
                self.variants = value
                    .split(',')
                    .map(|v| parse::<Variant>(key, v.trim()))
                    .collect::<Result<_, _>>()?
            }
            "encoder" => self.encoder = parse(key, value)?,
            "epochs" => hp.epochs = parse(key, value)?,
            "learning_rate" => hp.learning_rate = parse(key, value)?,
            "batch_size" => hp.batch_size = parse(key, value)?,
            "max_seq_len" => hp.max_seq_len = parse(key, value)?,
            "max_span_tokens" => hp.max_span_tokens = parse(key, value)?,
            "questions" => self.questions = parse(key, value)?,
            "format" => {
                self.format = match value {
                    "" | "auto" => None,
                    other => Some(parse(key, other)?),
                }
            }
            "output" => self.output = PathBuf::from(value),
            "parallel" => self.parallel = parse_bool(key, value)?,
            _ => return Err(CliError::usage(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies overrides in order, so later entries win.
    pub fn apply<'a>(&mut self, entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<(), CliError> {
        for (k, v) in entries {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.corpus.as_os_str().is_empty() {
            return Err(CliError::usage("no corpus given"));
        }
        if !self.corpus.is_file() {
            return Err(CliError::usage(format!("corpus {} does not exist", self.corpus.display())));
        }
        if let Some(s) = &self.splits {
            if !s.is_file() {
                return Err(CliError::usage(format!("split file {} does not exist", s.display())));
            }
        }
        if self.output.as_os_str().is_empty() {
            return Err(CliError::usage("no output directory given"));
        }
        if self.variants.is_empty() {
            return Err(CliError::usage("no variant given"));
        }
        if self.splits.is_none() && self.k == 0 {
            return Err(CliError::usage("k must be at least 1"));
        }
        if let EncoderSpec::Bert { dir } = &self.encoder {
            if !dir.is_dir() {
                return Err(CliError::usage(format!("checkpoint directory {} does not exist", dir.display())));
            }
        }
        self.hyperparams.validate().map_err(CliError::usage)
    }

    /// Every field as `key = value`, readable by [`RunConfig::set`].
    pub fn to_text(&self) -> String {
        let mut map = BTreeMap::new();
        let hp = &self.hyperparams;
        map.insert("corpus", self.corpus.display().to_string());
        map.insert("splits", self.splits.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        map.insert("k", self.k.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert(
            "variant",
            self.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(","),
        );
        map.insert("encoder", self.encoder.to_string());
        map.insert("epochs", hp.epochs.to_string());
        map.insert("learning_rate", hp.learning_rate.to_string());
        map.insert("batch_size", hp.batch_size.to_string());
        map.insert("max_seq_len", hp.max_seq_len.to_string());
        map.insert("max_span_tokens", hp.max_span_tokens.to_string());
        map.insert("questions", format!("{},{}", self.questions.emotion, self.questions.cause));
        map.insert("format", self.format.map(|f| f.to_string()).unwrap_or_else(|| "auto".into()));
        map.insert("output", self.output.display().to_string());
        map.insert("parallel", self.parallel.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn from_text(body: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let entries = parse_key_values(body).map_err(CliError::usage)?;
        cfg.apply(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        Ok(cfg)
    }
}

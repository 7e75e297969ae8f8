//! Encoder registry strings: `lexical`, `oracle`, `toy`, `bert:<checkpoint dir>`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ecpe_bert::BertQa;
use ecpe_core::corpus::Document;
use ecpe_core::encoder::{Hyperparams, LexicalOracle, SpanEncoder, ToyEncoder, TrainReport, TOY_VOCAB_SIZE};
use ecpe_core::pipeline::{build_training_sets, Variant, VariantModels};
use ecpe_core::qa_task::{FixedQuestions, QAExample, Target};
use ecpe_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncoderSpec {
    /// Untrained clause-overlap heuristic.
    Lexical,
    /// Lexical oracle whose answer key holds the gold spans of the train and
    /// test documents. Gives an upper bound for pipeline plumbing checks.
    Oracle,
    /// Small sparse linear span model trained from scratch.
    Toy,
    /// Pretrained BERT-family checkpoint, fine-tuned per split.
    Bert { dir: PathBuf },
}

impl FromStr for EncoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexical" => Ok(EncoderSpec::Lexical),
            "oracle" => Ok(EncoderSpec::Oracle),
            "toy" => Ok(EncoderSpec::Toy),
            _ => match s.strip_prefix("bert:") {
                Some(dir) if !dir.is_empty() => Ok(EncoderSpec::Bert { dir: PathBuf::from(dir) }),
                _ => Err(Error::InvalidInput(format!(
                    "unknown encoder `{s}` (expected lexical, oracle, toy or bert:<checkpoint dir>)"
                ))),
            },
        }
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncoderSpec::Lexical => f.write_str("lexical"),
            EncoderSpec::Oracle => f.write_str("oracle"),
            EncoderSpec::Toy => f.write_str("toy"),
            EncoderSpec::Bert { dir } => write!(f, "bert:{}", dir.display()),
        }
    }
}

/// Models for one variant on one split, plus what went into them.
pub struct TrainedVariant {
    pub models: VariantModels,
    /// Training examples in the order they were presented.
    pub examples: Vec<QAExample>,
    pub reports: Vec<(Target, TrainReport)>,
}

impl EncoderSpec {
    fn fresh(&self, hp: &Hyperparams) -> Result<Box<dyn SpanEncoder>> {
        Ok(match self {
            EncoderSpec::Lexical | EncoderSpec::Oracle => Box::new(LexicalOracle::new(hp.max_seq_len)),
            EncoderSpec::Toy => Box::new(ToyEncoder::new(TOY_VOCAB_SIZE, hp.max_seq_len)?),
            EncoderSpec::Bert { dir } => {
                let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Box::new(BertQa::from_dir(&name, dir, hp.max_seq_len, hp.seed)?)
            }
        })
    }

    /// Builds and trains one encoder per stage of `variant`.
    pub fn train_variant(
        &self,
        variant: Variant,
        train: &[&Document],
        test: &[&Document],
        hp: &Hyperparams,
        questions: &FixedQuestions,
    ) -> Result<TrainedVariant> {
        let examples = build_training_sets(train.iter().copied(), variant, questions)?;
        let answer_key = match self {
            EncoderSpec::Oracle => {
                let mut key = examples.clone();
                key.extend(build_training_sets(test.iter().copied(), variant, questions)?);
                key
            }
            _ => Vec::new(),
        };
        let (first, second) = variant.stages();
        let mut reports = Vec::new();
        let stage = |target: Target, reports: &mut Vec<(Target, TrainReport)>| -> Result<Box<dyn SpanEncoder>> {
            let subset: Vec<QAExample> = examples.iter().filter(|e| e.target == target).cloned().collect();
            if let EncoderSpec::Oracle = self {
                let key: Vec<QAExample> = answer_key.iter().filter(|e| e.target == target).cloned().collect();
                return Ok(Box::new(LexicalOracle::rigged(hp.max_seq_len, &key)));
            }
            let mut enc = self.fresh(hp)?;
            let report = enc.train(&subset, hp)?;
            reports.push((target, report));
            Ok(enc)
        };
        let first_model = stage(first, &mut reports)?;
        let second_model = second.map(|t| stage(t, &mut reports)).transpose()?;
        Ok(TrainedVariant {
            models: VariantModels {
                first: first_model,
                second: second_model,
            },
            examples,
            reports,
        })
    }
}

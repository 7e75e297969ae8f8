//! Span-scoring encoders.
//!
//! An encoder tokenizes a `(question, context)` pair, produces one start and
//! one end logit per context token, and can be fine-tuned on gold answer
//! spans. Answer search is shared: [`best_span`] maximises
//! `log P(start) + log P(end)` over spans of bounded length.
//!
//! Logits exist only for context tokens. Question and special tokens never
//! receive a score, which is the same as masking them to `-inf` before the
//! search.
//!
//! Implementations in this crate:
//!
//! * [`LexicalOracle`]: training-free, scores clauses by character overlap
//!   with the question; can be rigged with a gold answer key.
//! * [`ToyEncoder`]: a small trainable sparse linear model over token and
//!   clause features.
//!
//! A pretrained transformer adapter lives in a separate crate and implements
//! the same [`SpanEncoder`] trait.

mod lexical;
mod metadata;
mod tokenize;
mod toy;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::qa_task::{Context, QAExample, Question};
use crate::{Error, Result};

pub use lexical::LexicalOracle;
pub use metadata::Metadata;
pub use tokenize::{encode_with, CharTokenizer, PieceTokenizer, Truncation};
pub use toy::{ToyEncoder, DEFAULT_VOCAB_SIZE as TOY_VOCAB_SIZE};

pub const DEFAULT_MAX_SPAN_TOKENS: usize = 96;
pub const DEFAULT_MAX_SEQ_LEN: usize = 512;

/// Special-token ids shared by the character-level encoders.
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedInput {
    pub question: String,
    pub context: Context,
    pub question_tokens: Vec<u32>,
    pub context_tokens: Vec<u32>,
    /// Character range of each context token in `context.text`.
    pub char_alignment: Vec<(usize, usize)>,
    /// 1-based clause of each context token.
    pub token_clause: Vec<usize>,
    pub truncation: Truncation,
}

impl TokenizedInput {
    pub fn len(&self) -> usize {
        self.context_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.context_tokens.is_empty()
    }

    /// Character range covered by tokens `start..=end`.
    pub fn char_span(&self, start: usize, end: usize) -> (usize, usize) {
        (self.char_alignment[start].0, self.char_alignment[end].1)
    }

    /// Token range covering a gold character span, snapped outward to token
    /// boundaries. Returns `None` if no token of the span survived
    /// truncation; the flag is true when snapping moved a boundary.
    pub fn gold_token_span(&self, gold: (usize, usize)) -> Option<(usize, usize, bool)> {
        let inside = |&(s, e): &(usize, usize)| s < gold.1 && e > gold.0;
        let start = self.char_alignment.iter().position(inside)?;
        let end = self.char_alignment.iter().rposition(inside)?;
        let snapped = self.char_alignment[start].0 != gold.0 || self.char_alignment[end].1 != gold.1;
        Some((start, end, snapped))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanScores {
    pub start_logits: Vec<f32>,
    pub end_logits: Vec<f32>,
}

impl SpanScores {
    pub fn new(start_logits: Vec<f32>, end_logits: Vec<f32>) -> Result<Self> {
        if start_logits.len() != end_logits.len() {
            return Err(Error::Encoder(format!(
                "start/end logit length mismatch: {} vs {}",
                start_logits.len(),
                end_logits.len()
            )));
        }
        if start_logits.iter().chain(&end_logits).any(|v| !v.is_finite()) {
            return Err(Error::Encoder("non-finite logit".into()));
        }
        Ok(SpanScores { start_logits, end_logits })
    }

    pub fn len(&self) -> usize {
        self.start_logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start_logits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub start_token: usize,
    pub end_token: usize,
    /// `log P(start) + log P(end)`.
    pub score: f64,
    /// Filled in once the token span is aligned back to the context.
    pub char_span: Option<(usize, usize)>,
}

/// Numerically stable log-softmax in f64.
pub fn log_softmax(logits: &[f32]) -> Vec<f64> {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
    let lse = max + logits.iter().map(|&v| (v as f64 - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&v| v as f64 - lse).collect()
}

/// Highest-scoring span with `start <= end` and at most `max_span_tokens`
/// tokens. Ties go to the smaller start, then the smaller end.
pub fn best_span(scores: &SpanScores, max_span_tokens: usize) -> Result<SpanPrediction> {
    if max_span_tokens == 0 {
        return Err(Error::InvalidInput("max_span_tokens must be at least 1".into()));
    }
    if scores.is_empty() {
        return Err(Error::EmptyContext);
    }
    // Both log-softmax normalisers are constant over spans, so the search
    // compares raw logit sums. An f32 pair sums exactly in f64, which keeps
    // equal-scoring spans exactly tied.
    let a = &scores.start_logits;
    let b = &scores.end_logits;
    let n = a.len();

    let mut best = (0, 0, f64::NEG_INFINITY);
    for s in 0..n {
        let upper = (s + max_span_tokens).min(n);
        for e in s..upper {
            let v = a[s] as f64 + b[e] as f64;
            if v > best.2 {
                best = (s, e, v);
            }
        }
    }
    let ls = log_softmax(a);
    let le = log_softmax(b);
    Ok(SpanPrediction {
        start_token: best.0,
        end_token: best.1,
        score: ls[best.0] + le[best.1],
        char_span: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_seq_len: usize,
    pub max_span_tokens: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 5,
            learning_rate: 5e-5,
            batch_size: 16,
            max_seq_len: DEFAULT_MAX_SEQ_LEN,
            max_span_tokens: DEFAULT_MAX_SPAN_TOKENS,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.max_seq_len == 0 || self.max_span_tokens == 0 {
            return Err(Error::InvalidInput(
                "epochs, batch_size, max_seq_len and max_span_tokens must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    pub fn write_metadata(&self, meta: &mut Metadata) {
        meta.set("epochs", self.epochs);
        meta.set("learning_rate", self.learning_rate);
        meta.set("batch_size", self.batch_size);
        meta.set("max_seq_len", self.max_seq_len);
        meta.set("max_span_tokens", self.max_span_tokens);
        meta.set("seed", self.seed);
    }

    pub fn from_metadata(meta: &Metadata) -> Result<Self> {
        Ok(Hyperparams {
            epochs: meta.parse("epochs")?,
            learning_rate: meta.parse("learning_rate")?,
            batch_size: meta.parse("batch_size")?,
            max_seq_len: meta.parse("max_seq_len")?,
            max_span_tokens: meta.parse("max_span_tokens")?,
            seed: meta.parse("seed")?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub examples_used: usize,
    /// Examples whose gold span was removed by truncation.
    pub skipped_truncated: usize,
    /// Examples without gold supervision.
    pub skipped_unlabelled: usize,
    /// Gold spans that had to be widened to token boundaries.
    pub snap_events: usize,
}

/// Common contract of every span-extraction model.
pub trait SpanEncoder: Send + Sync {
    /// Registry name of the implementation, e.g. `toy` or `lexical`.
    fn kind(&self) -> &str;

    fn tokenize(&self, question: &Question, context: &Context) -> Result<TokenizedInput>;

    fn score(&self, input: &TokenizedInput) -> Result<SpanScores>;

    /// Fine-tunes on gold spans. Zero usable examples leave the state as is.
    fn train(&mut self, examples: &[QAExample], hp: &Hyperparams) -> Result<TrainReport>;

    /// Persists the state: a weights blob (when there are weights) plus a
    /// `metadata.txt` key-value file.
    fn save(&self, dir: &Path) -> Result<()>;
}

/// Tokenize, score and search: the single-question inference path.
pub fn predict_span(
    encoder: &dyn SpanEncoder,
    question: &Question,
    context: &Context,
    max_span_tokens: usize,
) -> Result<SpanPrediction> {
    let input = encoder.tokenize(question, context)?;
    let scores = encoder.score(&input)?;
    if scores.len() != input.len() {
        return Err(Error::Encoder(format!(
            "encoder `{}` returned {} logits for {} context tokens",
            encoder.kind(),
            scores.len(),
            input.len()
        )));
    }
    let mut pred = best_span(&scores, max_span_tokens)?;
    pred.char_span = Some(input.char_span(pred.start_token, pred.end_token));
    Ok(pred)
}

/// A tokenized training example with its gold token span.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub input: TokenizedInput,
    pub start: usize,
    pub end: usize,
}

/// Tokenizes examples and maps their gold spans to tokens, counting the
/// examples that cannot be used.
pub fn prepare_examples(
    encoder: &dyn SpanEncoder,
    examples: &[QAExample],
    report: &mut TrainReport,
) -> Result<Vec<PreparedExample>> {
    let mut out = Vec::with_capacity(examples.len());
    for ex in examples {
        let Some(gold) = ex.gold_span else {
            report.skipped_unlabelled += 1;
            continue;
        };
        let input = encoder
            .tokenize(&ex.question, &ex.context)
            .map_err(|e| e.in_document(&ex.doc_id))?;
        match input.gold_token_span(gold) {
            Some((start, end, snapped)) => {
                if snapped {
                    report.snap_events += 1;
                }
                out.push(PreparedExample { input, start, end });
            }
            None => {
                log::warn!(
                    "document `{}`: gold span {:?} lost to truncation, example skipped",
                    ex.doc_id,
                    gold
                );
                report.skipped_truncated += 1;
            }
        }
    }
    report.examples_used = out.len();
    Ok(out)
}

/// Reads the `kind` recorded in a saved encoder directory.
pub fn saved_kind(dir: &Path) -> Result<String> {
    Ok(Metadata::read(dir)?.get("kind")?.to_string())
}

/// Loads an encoder implemented in this crate from a saved directory.
pub fn load_encoder(dir: &Path) -> Result<Box<dyn SpanEncoder>> {
    match saved_kind(dir)?.as_str() {
        lexical::KIND => Ok(Box::new(LexicalOracle::load(dir)?)),
        toy::KIND => Ok(Box::new(ToyEncoder::load(dir)?)),
        other => Err(Error::Encoder(format!(
            "{}: encoder kind `{other}` is not provided by this crate",
            dir.display()
        ))),
    }
}

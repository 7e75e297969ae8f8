use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::{encode_with, CharTokenizer};
use super::{Hyperparams, Metadata, SpanEncoder, SpanScores, TokenizedInput, TrainReport};
use crate::qa_task::{Context, QAExample, Question};
use crate::{Error, Result};

pub(super) const KIND: &str = "lexical";
const ANSWER_KEY_FILE: &str = "answer_key.jsonl";
const VOCAB_SIZE: usize = 1 << 16;

/// Logit given to the peak tokens; everything else scores zero.
pub const PEAK_LOGIT: f32 = 10.0;

#[derive(Debug, Serialize, Deserialize)]
struct AnswerKeyEntry {
    context: String,
    question: String,
    span: (usize, usize),
}

/// Training-free encoder that points at the clause sharing the most
/// distinct characters with the question.
///
/// The start logit peaks at the first token of every best-overlap clause and
/// the end logit at their last token. When no clause shares a character with
/// the question all logits are zero.
///
/// An answer key of `(context text, question text) -> char span` can be
/// installed with [`LexicalOracle::rigged`]; matching inputs then peak on
/// exactly that span instead.
#[derive(Debug, Clone)]
pub struct LexicalOracle {
    tokenizer: CharTokenizer,
    max_seq_len: usize,
    answer_key: HashMap<(String, String), (usize, usize)>,
}

impl LexicalOracle {
    pub fn new(max_seq_len: usize) -> Self {
        LexicalOracle {
            tokenizer: CharTokenizer::new(VOCAB_SIZE).expect("vocab size above reserved range"),
            max_seq_len,
            answer_key: HashMap::new(),
        }
    }

    /// An oracle that answers every labelled example with its gold span.
    pub fn rigged(max_seq_len: usize, examples: &[QAExample]) -> Self {
        let mut oracle = Self::new(max_seq_len);
        oracle.install_answers(examples);
        oracle
    }

    pub fn install_answers(&mut self, examples: &[QAExample]) {
        for ex in examples {
            if let Some(span) = ex.gold_span {
                self.answer_key
                    .insert((ex.context.text.clone(), ex.question.text.clone()), span);
            }
        }
    }

    pub fn answer_count(&self) -> usize {
        self.answer_key.len()
    }

    /// Distinct non-whitespace characters shared by `question` and each clause.
    pub fn clause_overlaps(question: &str, context: &Context) -> Vec<usize> {
        let q: BTreeSet<char> = question.chars().filter(|c| !c.is_whitespace()).collect();
        context
            .offsets
            .iter()
            .map(|&span| {
                let clause: BTreeSet<char> = context.slice(span).chars().filter(|c| !c.is_whitespace()).collect();
                clause.intersection(&q).count()
            })
            .collect()
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = Metadata::read(dir)?;
        let mut oracle = Self::new(meta.parse("max_seq_len")?);
        let path = dir.join(ANSWER_KEY_FILE);
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: AnswerKeyEntry = serde_json::from_str(&line)?;
                oracle.answer_key.insert((entry.context, entry.question), entry.span);
            }
        }
        Ok(oracle)
    }
}

impl SpanEncoder for LexicalOracle {
    fn kind(&self) -> &str {
        KIND
    }

    fn tokenize(&self, question: &Question, context: &Context) -> Result<TokenizedInput> {
        encode_with(&self.tokenizer, question, context, self.max_seq_len)
    }

    fn score(&self, input: &TokenizedInput) -> Result<SpanScores> {
        self.tokenizer.check(&input.question_tokens)?;
        self.tokenizer.check(&input.context_tokens)?;
        let n = input.len();
        let mut start = vec![0.0f32; n];
        let mut end = vec![0.0f32; n];

        let key = (input.context.text.clone(), input.question.clone());
        if let Some(&(gs, ge)) = self.answer_key.get(&key) {
            let inside = |&(s, e): &(usize, usize)| s < ge && e > gs;
            if let (Some(s), Some(e)) = (
                input.char_alignment.iter().position(inside),
                input.char_alignment.iter().rposition(inside),
            ) {
                start[s] = PEAK_LOGIT;
                end[e] = PEAK_LOGIT;
            }
            return SpanScores::new(start, end);
        }

        let overlaps = Self::clause_overlaps(&input.question, &input.context);
        let best = overlaps.iter().copied().max().unwrap_or(0);
        if best > 0 {
            for (i, &clause) in input.token_clause.iter().enumerate() {
                if overlaps[clause - 1] != best {
                    continue;
                }
                if i == 0 || input.token_clause[i - 1] != clause {
                    start[i] = PEAK_LOGIT;
                }
                if i + 1 == n || input.token_clause[i + 1] != clause {
                    end[i] = PEAK_LOGIT;
                }
            }
        }
        SpanScores::new(start, end)
    }

    fn train(&mut self, _examples: &[QAExample], _hp: &Hyperparams) -> Result<TrainReport> {
        Ok(TrainReport::default())
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let mut meta = Metadata::new(KIND);
        meta.set("tokenizer", "char-hash");
        meta.set("vocab_size", self.tokenizer.vocab_size());
        meta.set("max_seq_len", self.max_seq_len);
        meta.set("truncation", "drop_trailing_clauses");
        meta.set("answers", self.answer_key.len());
        meta.write(dir)?;

        let path = dir.join(ANSWER_KEY_FILE);
        if self.answer_key.is_empty() {
            return Ok(());
        }
        let mut entries: Vec<_> = self.answer_key.iter().collect();
        entries.sort();
        let mut out = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        for ((context, question), &span) in entries {
            let entry = AnswerKeyEntry {
                context: context.clone(),
                question: question.clone(),
                span,
            };
            serde_json::to_writer(&mut out, &entry)?;
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::TokenizedInput;
use crate::qa_task::{Context, Question};
use crate::{Error, Result};

/// `[CLS] question [SEP] context [SEP]`
pub const SPECIAL_TOKENS: usize = 3;

/// What the tokenizer removed from the context.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Trailing clauses dropped to fit the sequence budget (1-based).
    pub dropped_clauses: Vec<usize>,
    /// Characters inside kept clauses that no token covers (whitespace).
    pub uncovered_chars: usize,
}

impl Truncation {
    pub fn is_truncated(&self) -> bool {
        !self.dropped_clauses.is_empty()
    }
}

/// Splits text into `(id, char range)` pieces. Ranges are relative to the
/// input, non-overlapping and increasing.
pub trait PieceTokenizer {
    fn pieces(&self, text: &str) -> Result<Vec<(u32, (usize, usize))>>;
}

/// Lays out `[CLS] q [SEP] c [SEP]` within `max_seq_len`, tokenizing each
/// clause separately and dropping whole trailing clauses that do not fit.
pub fn encode_with<T: PieceTokenizer + ?Sized>(
    tokenizer: &T,
    question: &Question,
    context: &Context,
    max_seq_len: usize,
) -> Result<TokenizedInput> {
    let question_tokens: Vec<u32> = tokenizer.pieces(&question.text)?.into_iter().map(|p| p.0).collect();
    let budget = max_seq_len.saturating_sub(SPECIAL_TOKENS);
    if question_tokens.len() >= budget {
        return Err(Error::QuestionTooLong {
            tokens: question_tokens.len(),
            budget,
        });
    }
    let mut room = budget - question_tokens.len();

    let mut context_tokens = Vec::new();
    let mut char_alignment = Vec::new();
    let mut token_clause = Vec::new();
    let mut truncation = Truncation::default();

    for (i, &(start, end)) in context.offsets.iter().enumerate() {
        let index = i + 1;
        if truncation.is_truncated() {
            truncation.dropped_clauses.push(index);
            continue;
        }
        let pieces = tokenizer.pieces(context.slice((start, end)))?;
        if pieces.len() > room {
            truncation.dropped_clauses.push(index);
            continue;
        }
        room -= pieces.len();
        let covered: usize = pieces.iter().map(|(_, (s, e))| e - s).sum();
        truncation.uncovered_chars += (end - start).saturating_sub(covered);
        for (id, (s, e)) in pieces {
            context_tokens.push(id);
            char_alignment.push((start + s, start + e));
            token_clause.push(index);
        }
    }

    Ok(TokenizedInput {
        question: question.text.clone(),
        context: context.clone(),
        question_tokens,
        context_tokens,
        char_alignment,
        token_clause,
        truncation,
    })
}

/// One token per non-whitespace character, ids from a fixed-size hashed
/// vocabulary. Ids `0..4` are reserved for special tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharTokenizer {
    vocab_size: usize,
}

impl CharTokenizer {
    pub const RESERVED: usize = 4;

    pub fn new(vocab_size: usize) -> Result<Self> {
        if vocab_size <= Self::RESERVED {
            return Err(Error::InvalidInput(format!(
                "vocabulary size must exceed {}, got {vocab_size}",
                Self::RESERVED
            )));
        }
        Ok(CharTokenizer { vocab_size })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn id(&self, c: char) -> u32 {
        let buckets = (self.vocab_size - Self::RESERVED) as u64;
        let h = (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 17;
        (Self::RESERVED as u64 + h % buckets) as u32
    }

    pub fn check(&self, ids: &[u32]) -> Result<()> {
        match ids.iter().find(|&&id| id as usize >= self.vocab_size) {
            Some(&id) => Err(Error::OutOfVocabulary {
                id,
                vocab_size: self.vocab_size,
            }),
            None => Ok(()),
        }
    }
}

impl PieceTokenizer for CharTokenizer {
    fn pieces(&self, text: &str) -> Result<Vec<(u32, (usize, usize))>> {
        Ok(text
            .chars()
            .enumerate()
            .filter(|(_, c)| !c.is_whitespace())
            .map(|(i, c)| (self.id(c), (i, i + 1)))
            .collect())
    }
}

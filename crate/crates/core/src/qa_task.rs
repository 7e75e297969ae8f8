//! Turning documents into extractive QA examples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, CLAUSE_SEPARATOR};
use crate::text::char_slice;
use crate::{Error, Result};

/// The document as one string: clause texts joined by a single separator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub text: String,
    /// Per-clause `(char_start, char_end)`, clause order, end exclusive.
    pub offsets: Vec<(usize, usize)>,
}

impl Context {
    pub fn char_len(&self) -> usize {
        self.offsets.last().map(|&(_, e)| e).unwrap_or(0)
    }

    pub fn slice(&self, span: (usize, usize)) -> &str {
        char_slice(&self.text, span.0, span.1)
    }

    /// Text of the clause with 1-based `index`.
    pub fn clause_text(&self, index: usize) -> Option<&str> {
        let &(s, e) = self.offsets.get(index.checked_sub(1)?)?;
        Some(self.slice((s, e)))
    }

    pub fn clause_count(&self) -> usize {
        self.offsets.len()
    }
}

pub fn build_context(doc: &Document) -> Context {
    let mut text = String::new();
    let mut offsets = Vec::with_capacity(doc.clauses.len());
    let mut cursor = 0;
    for (i, clause) in doc.clauses.iter().enumerate() {
        if i > 0 {
            text.push(CLAUSE_SEPARATOR);
            cursor += 1;
        }
        text.push_str(&clause.text);
        let len = clause.char_end - clause.char_start;
        offsets.push((cursor, cursor + len));
        cursor += len;
    }
    Context { text, offsets }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Emotion,
    Cause,
}

impl Target {
    pub fn other(self) -> Target {
        match self {
            Target::Emotion => Target::Cause,
            Target::Cause => Target::Emotion,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Target::Emotion => "emotion",
            Target::Cause => "cause",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    FixedEmotion,
    FixedCause,
    /// Test time: text of the predicted emotion clause.
    GuidedFromEmotion,
    /// Test time: text of the predicted cause clause.
    GuidedFromCause,
    /// Train time (and ECE): text of the gold emotion clause.
    GoldEmotion,
    /// Train time: text of the gold cause clause.
    GoldCause,
}

impl QuestionKind {
    pub fn is_fixed(self) -> bool {
        matches!(self, QuestionKind::FixedEmotion | QuestionKind::FixedCause)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub kind: QuestionKind,
    /// Clause the text was taken from, for guided and gold questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_clause: Option<usize>,
}

impl Question {
    /// A question whose text is the full text of clause `index`.
    pub fn from_clause(doc: &Document, index: usize, kind: QuestionKind) -> Result<Question> {
        let clause = doc.clause(index).ok_or_else(|| {
            Error::InvalidInput(format!(
                "clause {index} does not exist in document `{}` ({} clauses)",
                doc.doc_id,
                doc.len()
            ))
        })?;
        Ok(Question {
            text: clause.text.clone(),
            kind,
            source_clause: Some(index),
        })
    }
}

/// Surface strings of the two fixed questions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedQuestions {
    pub emotion: String,
    pub cause: String,
}

impl Default for FixedQuestions {
    /// Chinese single words for "emotion" and "cause".
    fn default() -> Self {
        FixedQuestions {
            emotion: "情感".to_string(),
            cause: "原因".to_string(),
        }
    }
}

impl FixedQuestions {
    pub fn english() -> Self {
        FixedQuestions {
            emotion: "emotion".to_string(),
            cause: "cause".to_string(),
        }
    }

    pub fn question(&self, target: Target) -> Question {
        match target {
            Target::Emotion => Question {
                text: self.emotion.clone(),
                kind: QuestionKind::FixedEmotion,
                source_clause: None,
            },
            Target::Cause => Question {
                text: self.cause.clone(),
                kind: QuestionKind::FixedCause,
                source_clause: None,
            },
        }
    }
}

impl FromStr for FixedQuestions {
    type Err = Error;

    /// `"<emotion>,<cause>"`, or the preset names `zh` / `en`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zh" => Ok(FixedQuestions::default()),
            "en" => Ok(FixedQuestions::english()),
            _ => match s.split_once(',') {
                Some((e, c)) if !e.trim().is_empty() && !c.trim().is_empty() => Ok(FixedQuestions {
                    emotion: e.trim().to_string(),
                    cause: c.trim().to_string(),
                }),
                _ => Err(Error::InvalidInput(format!(
                    "questions must be `zh`, `en` or `<emotion>,<cause>`, got `{s}`"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAExample {
    pub doc_id: String,
    pub target: Target,
    pub question: Question,
    pub context: Context,
    pub gold_span: Option<(usize, usize)>,
    pub gold_clause_index: Option<usize>,
}

/// Debug dump record for one example.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QAExampleRecord {
    pub doc_id: String,
    pub question: String,
    pub kind: QuestionKind,
    pub context: String,
    pub gold_span: Option<(usize, usize)>,
}

impl From<&QAExample> for QAExampleRecord {
    fn from(ex: &QAExample) -> Self {
        QAExampleRecord {
            doc_id: ex.doc_id.clone(),
            question: ex.question.text.clone(),
            kind: ex.question.kind,
            context: ex.context.text.clone(),
            gold_span: ex.gold_span,
        }
    }
}

/// Builds a QA example. Gold supervision is attached when the document has
/// gold pairs; guided and gold questions anchor the selection on their
/// source clause.
pub fn make_example(doc: &Document, target: Target, question: Question) -> Result<QAExample> {
    if !question.kind.is_fixed() && question.text.trim().is_empty() {
        return Err(Error::InvalidInput(format!(
            "document `{}`: {:?} question has empty text",
            doc.doc_id, question.kind
        )));
    }
    let context = build_context(doc);
    let (gold_span, gold_clause_index) = if doc.has_gold() {
        let anchor = if question.kind.is_fixed() { None } else { question.source_clause };
        let index = select_gold_clause(doc, target, anchor)?;
        (Some(context.offsets[index - 1]), Some(index))
    } else {
        (None, None)
    };
    Ok(QAExample {
        doc_id: doc.doc_id.clone(),
        target,
        question,
        context,
        gold_span,
        gold_clause_index,
    })
}

/// Picks the single gold clause that supervises a `target` example.
///
/// Without an anchor the lowest-index gold clause of the target kind is
/// used. With an anchor (the clause the question was taken from) the
/// candidates are the clauses paired with the anchor, and the one nearest to
/// it wins, ties to the lower index.
pub fn select_gold_clause(doc: &Document, target: Target, anchor: Option<usize>) -> Result<usize> {
    let no_gold = |detail: String| Error::NoGold {
        doc_id: doc.doc_id.clone(),
        target: target.as_str(),
        detail,
    };
    let candidates: Vec<usize> = match (target, anchor) {
        (Target::Emotion, None) => doc.gold_emotions.iter().copied().collect(),
        (Target::Cause, None) => doc.gold_causes.iter().copied().collect(),
        (Target::Cause, Some(a)) => doc.gold_pairs.iter().filter(|p| p.0 == a).map(|p| p.1).collect(),
        (Target::Emotion, Some(a)) => doc.gold_pairs.iter().filter(|p| p.1 == a).map(|p| p.0).collect(),
    };
    let detail = anchor
        .map(|a| format!(" paired with clause {a}"))
        .unwrap_or_default();
    let pick = match anchor {
        None => candidates.iter().copied().min(),
        Some(a) => candidates.iter().copied().min_by_key(|&i| (i.abs_diff(a), i)),
    };
    pick.ok_or_else(|| no_gold(detail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    /// Six-clause document with gold pairs (4,2), (4,3), (5,6).
    pub(crate) fn figure_one() -> Document {
        Document::new(
            "fig1",
            &[
                "昨天 下午",
                "一位 老人 在 公园 迷路 了",
                "志愿者 帮 他 找到 了 家人",
                "老人 非常 高兴",
                "他 也 很 担心",
                "他 的 家人 还 在 外地",
            ],
            [(4, 2), (4, 3), (5, 6)],
        )
        .unwrap()
    }

    #[test]
    fn two_clause_context() {
        let doc = Document::new("d", &["ab", "cd"], [(1, 2)]).unwrap();
        let ctx = build_context(&doc);
        assert_eq!(ctx.text, "ab cd");
        assert_eq!(ctx.offsets, vec![(0, 2), (3, 5)]);
        assert_eq!(build_context(&doc), ctx);
    }

    #[test]
    fn single_clause_context() {
        let doc = Document::new("d", &["情感原因"], [(1, 1)]).unwrap();
        assert_eq!(build_context(&doc).offsets, vec![(0, 4)]);
    }

    #[test]
    fn figure_one_offsets_reconstruct_clauses() {
        let doc = figure_one();
        let ctx = build_context(&doc);
        assert_eq!(ctx.offsets.len(), 6);
        for w in ctx.offsets.windows(2) {
            assert!(w[0].1 < w[1].0);
        }
        for (clause, &span) in doc.clauses.iter().zip(&ctx.offsets) {
            assert_eq!(ctx.slice(span), clause.text);
            assert_eq!(span, (clause.char_start, clause.char_end));
        }
    }

    #[test]
    fn gold_selection_rules() {
        let doc = figure_one();
        assert_eq!(select_gold_clause(&doc, Target::Emotion, None).unwrap(), 4);
        assert_eq!(select_gold_clause(&doc, Target::Cause, Some(4)).unwrap(), 3);
        assert_eq!(select_gold_clause(&doc, Target::Cause, Some(5)).unwrap(), 6);
        assert_eq!(select_gold_clause(&doc, Target::Cause, None).unwrap(), 2);
        assert_eq!(select_gold_clause(&doc, Target::Emotion, Some(6)).unwrap(), 5);
        assert!(matches!(
            select_gold_clause(&doc, Target::Cause, Some(1)),
            Err(Error::NoGold { .. })
        ));

        let single = Document::new("s", &["a", "b"], [(2, 1)]).unwrap();
        assert_eq!(select_gold_clause(&single, Target::Cause, Some(2)).unwrap(), 1);
    }

    #[test]
    fn anchored_tie_goes_to_lower_index() {
        let doc = Document::new("t", &["a", "b", "c"], [(2, 1), (2, 3)]).unwrap();
        assert_eq!(select_gold_clause(&doc, Target::Cause, Some(2)).unwrap(), 1);
    }

    #[test]
    fn examples_carry_gold_spans() {
        let doc = figure_one();
        let fixed = FixedQuestions::english();
        let ex = make_example(&doc, Target::Emotion, fixed.question(Target::Emotion)).unwrap();
        assert_eq!(ex.gold_clause_index, Some(4));
        assert_eq!(ex.context.slice(ex.gold_span.unwrap()), doc.clauses[3].text);

        let q = Question::from_clause(&doc, 4, QuestionKind::GoldEmotion).unwrap();
        let ex = make_example(&doc, Target::Cause, q).unwrap();
        assert_eq!(ex.gold_clause_index, Some(3));
        assert_eq!(ex.question.text, doc.clauses[3].text);
    }

    #[test]
    fn prediction_only_has_no_gold() {
        let doc = Document::new("p", &["a", "b"], []).unwrap();
        let ex = make_example(&doc, Target::Emotion, FixedQuestions::default().question(Target::Emotion)).unwrap();
        assert_eq!(ex.gold_span, None);
        assert_eq!(ex.gold_clause_index, None);
    }

    #[test]
    fn guided_question_needs_text() {
        let doc = figure_one();
        let q = Question {
            text: " ".into(),
            kind: QuestionKind::GuidedFromEmotion,
            source_clause: Some(4),
        };
        assert!(make_example(&doc, Target::Cause, q).is_err());
    }

    #[test]
    fn question_presets() {
        assert_eq!("en".parse::<FixedQuestions>().unwrap(), FixedQuestions::english());
        let q: FixedQuestions = "情绪,原因".parse().unwrap();
        assert_eq!(q.emotion, "情绪");
        assert!("情绪".parse::<FixedQuestions>().is_err());
    }
}

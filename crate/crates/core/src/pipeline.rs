//! Indep-QA, Guided-QA and ECE inference, and the training sets each one
//! needs.
//!
//! Training examples are built from gold annotations only: a guided
//! second-stage example uses the *gold* first-stage clause as its question.
//! At test time the second stage is asked the text of the clause the first
//! stage *predicted*, and gold annotations are never read.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::encoder::{predict_span, SpanEncoder, DEFAULT_MAX_SPAN_TOKENS};
use crate::mapping::span_to_clause;
use crate::qa_task::{
    build_context, make_example, select_gold_clause, Context, FixedQuestions, QAExample, Question, QuestionKind,
    Target,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Indep,
    GuidedEmotionFirst,
    GuidedCauseFirst,
    Ece,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Indep,
        Variant::GuidedEmotionFirst,
        Variant::GuidedCauseFirst,
        Variant::Ece,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Indep => "indep",
            Variant::GuidedEmotionFirst => "guided_emotion_first",
            Variant::GuidedCauseFirst => "guided_cause_first",
            Variant::Ece => "ece",
        }
    }

    /// Targets answered by the first and (if any) second stage.
    pub fn stages(self) -> (Target, Option<Target>) {
        match self {
            Variant::Indep | Variant::GuidedEmotionFirst => (Target::Emotion, Some(Target::Cause)),
            Variant::GuidedCauseFirst => (Target::Cause, Some(Target::Emotion)),
            Variant::Ece => (Target::Cause, None),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown variant `{s}` (expected indep, guided_emotion_first, guided_cause_first or ece)"
                ))
            })
    }
}

/// Which guided stage runs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuidedOrder {
    EmotionFirst,
    CauseFirst,
}

impl GuidedOrder {
    fn first(self) -> Target {
        match self {
            GuidedOrder::EmotionFirst => Target::Emotion,
            GuidedOrder::CauseFirst => Target::Cause,
        }
    }

    fn variant(self) -> Variant {
        match self {
            GuidedOrder::EmotionFirst => Variant::GuidedEmotionFirst,
            GuidedOrder::CauseFirst => Variant::GuidedCauseFirst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub doc_id: String,
    pub variant: Variant,
    #[serde(rename = "emotion")]
    pub emotion_clause: usize,
    #[serde(rename = "cause")]
    pub cause_clause: usize,
    pub emotion_span: (usize, usize),
    pub cause_span: (usize, usize),
    /// Literal question text of each stage, in execution order.
    pub question_trace: Vec<String>,
}

impl PairPrediction {
    pub fn pair(&self) -> (usize, usize) {
        (self.emotion_clause, self.cause_clause)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceConfig {
    pub questions: FixedQuestions,
    pub max_span_tokens: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            questions: FixedQuestions::default(),
            max_span_tokens: DEFAULT_MAX_SPAN_TOKENS,
        }
    }
}

fn gold_kind(source: Target) -> QuestionKind {
    match source {
        Target::Emotion => QuestionKind::GoldEmotion,
        Target::Cause => QuestionKind::GoldCause,
    }
}

fn guided_kind(source: Target) -> QuestionKind {
    match source {
        Target::Emotion => QuestionKind::GuidedFromEmotion,
        Target::Cause => QuestionKind::GuidedFromCause,
    }
}

/// Supervised examples for one variant, in document order.
///
/// * `indep`: a fixed-emotion and a fixed-cause example per document.
/// * guided: a fixed-question example for the first stage and a second-stage
///   example whose question is the gold first-stage clause text.
/// * `ece`: one cause example per gold emotion, asked with that emotion's text.
pub fn build_training_sets<'a, I>(docs: I, variant: Variant, questions: &FixedQuestions) -> Result<Vec<QAExample>>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut out = Vec::new();
    for doc in docs {
        let with_doc = |e: Error| e.in_document(&doc.doc_id);
        match variant {
            Variant::Indep => {
                for target in [Target::Emotion, Target::Cause] {
                    out.push(make_example(doc, target, questions.question(target)).map_err(with_doc)?);
                }
            }
            Variant::GuidedEmotionFirst | Variant::GuidedCauseFirst => {
                let first = variant.stages().0;
                out.push(make_example(doc, first, questions.question(first)).map_err(with_doc)?);
                let anchor = select_gold_clause(doc, first, None).map_err(with_doc)?;
                let q = Question::from_clause(doc, anchor, gold_kind(first))?;
                out.push(make_example(doc, first.other(), q).map_err(with_doc)?);
            }
            Variant::Ece => {
                for &emotion in &doc.gold_emotions {
                    let q = Question::from_clause(doc, emotion, QuestionKind::GoldEmotion)?;
                    out.push(make_example(doc, Target::Cause, q).map_err(with_doc)?);
                }
            }
        }
    }
    Ok(out)
}

/// One QA pass: the clause answering `question` and the predicted span.
fn answer(
    encoder: &dyn SpanEncoder,
    question: &Question,
    context: &Context,
    cfg: &InferenceConfig,
) -> Result<(usize, (usize, usize))> {
    let pred = predict_span(encoder, question, context, cfg.max_span_tokens)?;
    let span = pred
        .char_span
        .ok_or_else(|| Error::Encoder("prediction without character span".into()))?;
    let (clause, _) = span_to_clause(span, context)?;
    Ok((clause, span))
}

/// Fixed questions answered independently by two encoders.
pub fn predict_indep(
    doc: &Document,
    emotion_encoder: &dyn SpanEncoder,
    cause_encoder: &dyn SpanEncoder,
    cfg: &InferenceConfig,
) -> Result<PairPrediction> {
    let run = || {
        let context = build_context(doc);
        let qe = cfg.questions.question(Target::Emotion);
        let qc = cfg.questions.question(Target::Cause);
        let (emotion_clause, emotion_span) = answer(emotion_encoder, &qe, &context, cfg)?;
        let (cause_clause, cause_span) = answer(cause_encoder, &qc, &context, cfg)?;
        Ok(PairPrediction {
            doc_id: doc.doc_id.clone(),
            variant: Variant::Indep,
            emotion_clause,
            cause_clause,
            emotion_span,
            cause_span,
            question_trace: vec![qe.text, qc.text],
        })
    };
    run().map_err(|e: Error| e.in_document(&doc.doc_id))
}

/// Two-stage inference: the first stage answers the fixed question, the
/// second is asked the full text of the clause the first stage predicted.
pub fn predict_guided(
    doc: &Document,
    first_encoder: &dyn SpanEncoder,
    second_encoder: &dyn SpanEncoder,
    order: GuidedOrder,
    cfg: &InferenceConfig,
) -> Result<PairPrediction> {
    let run = || {
        let context = build_context(doc);
        let first = order.first();
        let q1 = cfg.questions.question(first);
        let (c1, s1) = answer(first_encoder, &q1, &context, cfg)?;
        let q2 = Question::from_clause(doc, c1, guided_kind(first))?;
        let (c2, s2) = answer(second_encoder, &q2, &context, cfg)?;
        let ((emotion_clause, emotion_span), (cause_clause, cause_span)) = match first {
            Target::Emotion => ((c1, s1), (c2, s2)),
            Target::Cause => ((c2, s2), (c1, s1)),
        };
        Ok(PairPrediction {
            doc_id: doc.doc_id.clone(),
            variant: order.variant(),
            emotion_clause,
            cause_clause,
            emotion_span,
            cause_span,
            question_trace: vec![q1.text, q2.text],
        })
    };
    run().map_err(|e: Error| e.in_document(&doc.doc_id))
}

/// Emotion cause extraction: the gold emotion clause is the question.
pub fn predict_ece(
    doc: &Document,
    cause_encoder: &dyn SpanEncoder,
    gold_emotion: usize,
    cfg: &InferenceConfig,
) -> Result<PairPrediction> {
    let run = || {
        let context = build_context(doc);
        let q = Question::from_clause(doc, gold_emotion, QuestionKind::GoldEmotion)?;
        let (cause_clause, cause_span) = answer(cause_encoder, &q, &context, cfg)?;
        Ok(PairPrediction {
            doc_id: doc.doc_id.clone(),
            variant: Variant::Ece,
            emotion_clause: gold_emotion,
            cause_clause,
            emotion_span: context.offsets[gold_emotion - 1],
            cause_span,
            question_trace: vec![q.text],
        })
    };
    run().map_err(|e: Error| e.in_document(&doc.doc_id))
}

/// Trained state(s) for one variant. `second` is unused by `ece`.
pub struct VariantModels {
    pub first: Box<dyn SpanEncoder>,
    pub second: Option<Box<dyn SpanEncoder>>,
}

impl VariantModels {
    fn second(&self, variant: Variant) -> Result<&dyn SpanEncoder> {
        self.second
            .as_deref()
            .ok_or_else(|| Error::InvalidInput(format!("variant {variant} needs a second-stage encoder")))
    }
}

/// Runs `variant` on one document. ECE uses the lowest-index gold emotion.
pub fn predict(doc: &Document, variant: Variant, models: &VariantModels, cfg: &InferenceConfig) -> Result<PairPrediction> {
    match variant {
        Variant::Indep => predict_indep(doc, models.first.as_ref(), models.second(variant)?, cfg),
        Variant::GuidedEmotionFirst => predict_guided(
            doc,
            models.first.as_ref(),
            models.second(variant)?,
            GuidedOrder::EmotionFirst,
            cfg,
        ),
        Variant::GuidedCauseFirst => predict_guided(
            doc,
            models.first.as_ref(),
            models.second(variant)?,
            GuidedOrder::CauseFirst,
            cfg,
        ),
        Variant::Ece => {
            let emotion = select_gold_clause(doc, Target::Emotion, None).map_err(|e| e.in_document(&doc.doc_id))?;
            predict_ece(doc, models.first.as_ref(), emotion, cfg)
        }
    }
}

pub fn write_predictions<W: Write>(mut writer: W, preds: &[PairPrediction]) -> Result<()> {
    for p in preds {
        serde_json::to_writer(&mut writer, p)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<predictions output>", e))?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<PairPrediction>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse("<predictions>", i + 1, e.to_string()))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| Error::parse("<predictions>", i + 1, e.to_string()))?);
        }
    }
    Ok(out)
}

//! Set-based precision, recall and F1 for emotion, cause and pair extraction.
//!
//! Items are pooled over all documents (micro counting) and keyed by
//! `(doc_id, item)`. Empty denominators give 0.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::pipeline::PairPrediction;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

impl TaskScores {
    pub fn from_counts(gold: usize, predicted: usize, correct: usize) -> Self {
        let precision = if predicted > 0 { correct as f64 / predicted as f64 } else { 0.0 };
        let recall = if gold > 0 { correct as f64 / gold as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        TaskScores {
            precision,
            recall,
            f1,
            gold,
            predicted,
            correct,
        }
    }

    pub fn prf(&self) -> [f64; 3] {
        [self.precision, self.recall, self.f1]
    }
}

/// Precision, recall and F1 of `pred` against `gold`.
pub fn prf<T: Eq + Hash>(gold: &HashSet<T>, pred: &HashSet<T>) -> TaskScores {
    let correct = pred.intersection(gold).count();
    TaskScores::from_counts(gold.len(), pred.len(), correct)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub emotion: TaskScores,
    pub cause: TaskScores,
    pub pair: TaskScores,
}

impl EvalReport {
    pub fn tasks(&self) -> [(&'static str, &TaskScores); 3] {
        [("emotion", &self.emotion), ("cause", &self.cause), ("pair", &self.pair)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Items pooled over every document.
    #[default]
    Corpus,
    /// Per-document scores averaged over documents; counts are summed.
    Document,
}

fn index_predictions<'a>(
    docs: &[Document],
    preds: &'a [PairPrediction],
) -> Result<HashMap<&'a str, &'a PairPrediction>> {
    let known: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    let mut by_doc = HashMap::new();
    for p in preds {
        if !known.contains(p.doc_id.as_str()) {
            return Err(Error::InvalidInput(format!("prediction for unknown doc_id `{}`", p.doc_id)));
        }
        if by_doc.insert(p.doc_id.as_str(), p).is_some() {
            return Err(Error::InvalidInput(format!("duplicate prediction for doc_id `{}`", p.doc_id)));
        }
    }
    Ok(by_doc)
}

/// Scores at most one prediction per document against the gold annotations
/// of `docs`. Documents without a prediction still contribute their gold items.
pub fn evaluate(docs: &[Document], preds: &[PairPrediction], scope: Scope) -> Result<EvalReport> {
    let by_doc = index_predictions(docs, preds)?;
    match scope {
        Scope::Corpus => {
            let mut ge = HashSet::new();
            let mut gc = HashSet::new();
            let mut gp = HashSet::new();
            let mut pe = HashSet::new();
            let mut pc = HashSet::new();
            let mut pp = HashSet::new();
            for doc in docs {
                let id = doc.doc_id.as_str();
                ge.extend(doc.gold_emotions.iter().map(|&e| (id, e)));
                gc.extend(doc.gold_causes.iter().map(|&c| (id, c)));
                gp.extend(doc.gold_pairs.iter().map(|&p| (id, p)));
                if let Some(p) = by_doc.get(id) {
                    pe.insert((id, p.emotion_clause));
                    pc.insert((id, p.cause_clause));
                    pp.insert((id, p.pair()));
                }
            }
            Ok(EvalReport {
                emotion: prf(&ge, &pe),
                cause: prf(&gc, &pc),
                pair: prf(&gp, &pp),
            })
        }
        Scope::Document => {
            if docs.is_empty() {
                return Ok(EvalReport::default());
            }
            let per_doc: Vec<EvalReport> = docs
                .iter()
                .map(|doc| {
                    let pred = by_doc.get(doc.doc_id.as_str());
                    let set = |it: Option<usize>| it.into_iter().collect::<HashSet<_>>();
                    EvalReport {
                        emotion: prf(
                            &doc.gold_emotions.iter().copied().collect(),
                            &set(pred.map(|p| p.emotion_clause)),
                        ),
                        cause: prf(
                            &doc.gold_causes.iter().copied().collect(),
                            &set(pred.map(|p| p.cause_clause)),
                        ),
                        pair: prf(
                            &doc.gold_pairs.iter().copied().collect(),
                            &pred.map(|p| p.pair()).into_iter().collect(),
                        ),
                    }
                })
                .collect();
            let n = per_doc.len() as f64;
            let avg = |pick: fn(&EvalReport) -> &TaskScores| {
                let mut t = TaskScores::default();
                for r in &per_doc {
                    let s = pick(r);
                    t.precision += s.precision / n;
                    t.recall += s.recall / n;
                    t.f1 += s.f1 / n;
                    t.gold += s.gold;
                    t.predicted += s.predicted;
                    t.correct += s.correct;
                }
                t
            };
            Ok(EvalReport {
                emotion: avg(|r| &r.emotion),
                cause: avg(|r| &r.cause),
                pair: avg(|r| &r.pair),
            })
        }
    }
}

/// Mean and standard deviation of split-level reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Arithmetic mean of every P/R/F1 field; counts are summed.
    pub mean: EvalReport,
    /// Sample standard deviation of P/R/F1 per task (0 for one split).
    pub std: TaskSpread,
    pub per_split: Vec<EvalReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskSpread {
    pub emotion: [f64; 3],
    pub cause: [f64; 3],
    pub pair: [f64; 3],
}

pub fn aggregate_splits(reports: &[EvalReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no split reports to aggregate".into()));
    }
    let n = reports.len() as f64;
    let stats = |pick: fn(&EvalReport) -> &TaskScores| {
        let mut mean = TaskScores::default();
        for r in reports {
            let s = pick(r);
            mean.precision += s.precision;
            mean.recall += s.recall;
            mean.f1 += s.f1;
            mean.gold += s.gold;
            mean.predicted += s.predicted;
            mean.correct += s.correct;
        }
        mean.precision /= n;
        mean.recall /= n;
        mean.f1 /= n;
        let m = mean.prf();
        let mut std = [0.0; 3];
        if reports.len() > 1 {
            for r in reports {
                for (k, v) in pick(r).prf().iter().enumerate() {
                    std[k] += (v - m[k]).powi(2);
                }
            }
            for s in &mut std {
                *s = (*s / (n - 1.0)).sqrt();
            }
        }
        (mean, std)
    };
    let (emotion, se) = stats(|r| &r.emotion);
    let (cause, sc) = stats(|r| &r.cause);
    let (pair, sp) = stats(|r| &r.pair);
    Ok(AggregateReport {
        mean: EvalReport { emotion, cause, pair },
        std: TaskSpread {
            emotion: se,
            cause: sc,
            pair: sp,
        },
        per_split: reports.to_vec(),
    })
}

/// Renders `Model | Emotion P R F1 | Cause P R F1 | Pair P R F1` with three
/// decimals. A row without a report prints `n/a`.
pub fn render_table(rows: &[(String, Option<EvalReport>)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} | {:^23} | {:^23} | {:^23}",
        "Model", "Emotion Extraction", "Cause Extraction", "EC Pair Extraction"
    );
    let prf_header = format!("{:>7} {:>7} {:>7}", "P", "R", "F1");
    let _ = writeln!(out, "{:<width$} | {prf_header} | {prf_header} | {prf_header}", "");
    let _ = writeln!(out, "{}", "-".repeat(width + 3 * 26));
    for (name, report) in rows {
        match report {
            Some(r) => {
                let cell = |s: &TaskScores| format!("{:>7.3} {:>7.3} {:>7.3}", s.precision, s.recall, s.f1);
                let _ = writeln!(
                    out,
                    "{:<width$} | {} | {} | {}",
                    name,
                    cell(&r.emotion),
                    cell(&r.cause),
                    cell(&r.pair)
                );
            }
            None => {
                let na = format!("{:>7} {:>7} {:>7}", "n/a", "n/a", "n/a");
                let _ = writeln!(out, "{:<width$} | {na} | {na} | {na}", name);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Variant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set<T: Eq + Hash + Clone>(items: &[T]) -> HashSet<T> {
        items.iter().cloned().collect()
    }

    fn pred(doc: &str, e: usize, c: usize) -> PairPrediction {
        PairPrediction {
            doc_id: doc.into(),
            variant: Variant::Indep,
            emotion_clause: e,
            cause_clause: c,
            emotion_span: (0, 1),
            cause_span: (0, 1),
            question_trace: vec![],
        }
    }

    fn figure_one() -> Document {
        Document::new("fig1", &["a", "b", "c", "d", "e", "f"], [(4, 2), (4, 3), (5, 6)]).unwrap()
    }

    #[test]
    fn worked_example_pairs() {
        let gold = set(&[(4, 2), (4, 3), (5, 6)]);
        let s = prf(&gold, &set(&[(4, 1), (6, 3)]));
        assert_eq!(s.prf(), [0.0, 0.0, 0.0]);
        let s = prf(&set(&[(4, 2)]), &set(&[(4, 2)]));
        assert_eq!(s.prf(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn empty_sets_score_zero() {
        let empty: HashSet<usize> = HashSet::new();
        assert_eq!(prf(&empty, &empty).prf(), [0.0; 3]);
        assert_eq!(prf(&set(&[1]), &empty).prf(), [0.0; 3]);
        assert_eq!(prf(&empty, &set(&[1])).prf(), [0.0; 3]);
    }

    #[test]
    fn single_perfect_document() {
        let doc = Document::new("d", &["a", "b"], [(2, 1)]).unwrap();
        let r = evaluate(&[doc], &[pred("d", 2, 1)], Scope::Corpus).unwrap();
        for (_, s) in r.tasks() {
            assert_eq!(s.prf(), [1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn figure_one_partial_recall() {
        let r = evaluate(&[figure_one()], &[pred("fig1", 4, 2)], Scope::Corpus).unwrap();
        assert_eq!(r.pair.precision, 1.0);
        assert!((r.pair.recall - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.emotion.recall, 0.5);
    }

    #[test]
    fn evaluate_rejects_bad_predictions() {
        let docs = [figure_one()];
        assert!(evaluate(&docs, &[pred("nope", 1, 1)], Scope::Corpus).is_err());
        assert!(evaluate(&docs, &[pred("fig1", 1, 1), pred("fig1", 4, 2)], Scope::Corpus).is_err());
    }

    #[test]
    fn document_scope_macro_average() {
        let a = Document::new("a", &["x", "y"], [(1, 2)]).unwrap();
        let b = Document::new("b", &["x", "y"], [(1, 2)]).unwrap();
        let r = evaluate(&[a, b], &[pred("a", 1, 2), pred("b", 2, 2)], Scope::Document).unwrap();
        assert_eq!(r.pair.f1, 0.5);
        assert_eq!(r.cause.f1, 1.0);
        assert_eq!(r.emotion.correct, 1);
    }

    #[test]
    fn aggregation() {
        let one = EvalReport {
            pair: TaskScores::from_counts(4, 4, 3),
            ..Default::default()
        };
        let agg = aggregate_splits(&[one]).unwrap();
        assert_eq!(agg.mean, one);
        assert_eq!(agg.std.pair, [0.0; 3]);
        assert!(aggregate_splits(&[]).is_err());

        let mut a = EvalReport::default();
        let mut b = EvalReport::default();
        a.pair.f1 = 0.7;
        b.pair.f1 = 0.75;
        let agg = aggregate_splits(&[a, b]).unwrap();
        assert!((agg.mean.pair.f1 - 0.725).abs() < 1e-12);
        assert_eq!(agg.per_split.len(), 2);
    }

    #[test]
    fn aggregation_matches_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reports: Vec<EvalReport> = (0..10)
            .map(|_| {
                let mut r = EvalReport::default();
                for s in [&mut r.emotion, &mut r.cause, &mut r.pair] {
                    let g = rng.random_range(1..50);
                    let p = rng.random_range(1..50);
                    *s = TaskScores::from_counts(g, p, rng.random_range(0..=g.min(p)));
                }
                r
            })
            .collect();
        let agg = aggregate_splits(&reports).unwrap();
        let xs: Vec<f64> = reports.iter().map(|r| r.cause.recall).collect();
        let mean = xs.iter().sum::<f64>() / 10.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 9.0;
        assert!((agg.mean.cause.recall - mean).abs() < 1e-12);
        assert!((agg.std.cause[1] - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn table_layout() {
        let r = EvalReport {
            emotion: TaskScores::from_counts(3, 3, 2),
            cause: TaskScores::from_counts(3, 3, 3),
            pair: TaskScores::from_counts(3, 3, 1),
        };
        let t = render_table(&[("guided".into(), Some(r)), ("missing".into(), None)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[3].starts_with("guided "));
        assert!(lines[3].contains("0.667"));
        assert!(lines[3].contains("0.333"));
        assert!(lines[4].contains("n/a"));
    }
}

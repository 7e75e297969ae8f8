//! Acceptance gate: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p ecpe-cli --test acceptance`. Criteria that need
//! the real corpus or a pretrained checkpoint read their inputs from
//! environment variables and print SKIP when those are unset:
//!
//! * `ECPE_CORPUS`: raw or jsonl ECPE corpus (criteria 6 and 8)
//! * `ECPE_BERT_DIR`: Chinese BERT checkpoint directory (criterion 8)

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ecpe_cli::commands::{cmd_run, load_corpus};
use ecpe_cli::config::RunConfig;
use ecpe_cli::registry::EncoderSpec;
use ecpe_core::corpus::{corpus_stats, make_splits, split_sizes, Document, ParseMode};
use ecpe_core::encoder::{best_span, predict_span, Hyperparams, SpanEncoder, SpanScores, ToyEncoder};
use ecpe_core::mapping::span_to_clause;
use ecpe_core::metrics::{evaluate, prf, Scope, TaskScores};
use ecpe_core::pipeline::{predict, InferenceConfig, PairPrediction, Variant};
use ecpe_core::qa_task::{build_context, make_example, FixedQuestions, Question, QuestionKind, Target};
use ecpe_core::synth::{document, single_pair_corpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Option<Duration>, check: impl FnOnce() -> Result<String, String>) -> Outcome {
    let t = Instant::now();
    let result = check();
    let elapsed = t.elapsed();
    match result {
        Ok(detail) => match limit {
            Some(l) if elapsed > l => Outcome::Fail(format!("{detail}; took {elapsed:.2?}, limit {l:?}")),
            _ => Outcome::Pass(format!("{detail} ({elapsed:.2?})")),
        },
        Err(e) => Outcome::Fail(e),
    }
}

/// P/R/F1 from explicit double loops over deduplicated item lists.
fn oracle_scores<T: PartialEq + Clone>(gold: &[T], pred: &[T]) -> TaskScores {
    let dedup = |items: &[T]| {
        let mut out: Vec<T> = Vec::new();
        for x in items {
            if !out.iter().any(|y| y == x) {
                out.push(x.clone());
            }
        }
        out
    };
    let (gold, pred) = (dedup(gold), dedup(pred));
    let mut correct = 0;
    for p in &pred {
        for g in &gold {
            if p == g {
                correct += 1;
            }
        }
    }
    let p = if pred.is_empty() { 0.0 } else { correct as f64 / pred.len() as f64 };
    let r = if gold.is_empty() { 0.0 } else { correct as f64 / gold.len() as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    TaskScores {
        precision: p,
        recall: r,
        f1: f,
        gold: gold.len(),
        predicted: pred.len(),
        correct,
    }
}

fn random_doc(id: &str, rng: &mut ChaCha8Rng) -> Document {
    let n = rng.random_range(1..=10);
    let k = rng.random_range(1..=3);
    let pairs: Vec<(usize, usize)> = (0..k)
        .map(|_| (rng.random_range(1..=n), rng.random_range(1..=n)))
        .collect();
    document(id, n, &pairs, rng)
}

fn criterion_1() -> Outcome {
    timed(Some(Duration::from_secs(5)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let instances = 250;
        for inst in 0..instances {
            let gold: Vec<u8> = (0..rng.random_range(0..12)).map(|_| rng.random_range(0..15)).collect();
            let pred: Vec<u8> = (0..rng.random_range(0..12)).map(|_| rng.random_range(0..15)).collect();
            let got = prf(&gold.iter().copied().collect(), &pred.iter().copied().collect::<HashSet<_>>());
            let want = oracle_scores(&gold, &pred);
            ensure(got == want, || format!("prf instance {inst}: {got:?} vs {want:?}"))?;

            let docs: Vec<Document> = (0..rng.random_range(1..8))
                .map(|d| random_doc(&format!("d{d}"), &mut rng))
                .collect();
            let mut preds = Vec::new();
            for d in &docs {
                if rng.random_bool(0.2) {
                    continue;
                }
                preds.push(PairPrediction {
                    doc_id: d.doc_id.clone(),
                    variant: Variant::Indep,
                    emotion_clause: rng.random_range(1..=d.len()),
                    cause_clause: rng.random_range(1..=d.len()),
                    emotion_span: (0, 1),
                    cause_span: (0, 1),
                    question_trace: Vec::new(),
                });
            }
            let report = evaluate(&docs, &preds, Scope::Corpus).map_err(|e| e.to_string())?;
            let mut ge = Vec::new();
            let mut gc = Vec::new();
            let mut gp = Vec::new();
            for d in &docs {
                for &(e, c) in &d.gold_pairs {
                    ge.push((d.doc_id.clone(), e));
                    gc.push((d.doc_id.clone(), c));
                    gp.push((d.doc_id.clone(), (e, c)));
                }
            }
            let pe: Vec<_> = preds.iter().map(|p| (p.doc_id.clone(), p.emotion_clause)).collect();
            let pc: Vec<_> = preds.iter().map(|p| (p.doc_id.clone(), p.cause_clause)).collect();
            let pp: Vec<_> = preds.iter().map(|p| (p.doc_id.clone(), p.pair())).collect();
            for (name, got, want) in [
                ("emotion", report.emotion, oracle_scores(&ge, &pe)),
                ("cause", report.cause, oracle_scores(&gc, &pc)),
                ("pair", report.pair, oracle_scores(&gp, &pp)),
            ] {
                ensure(got == want, || format!("evaluate instance {inst} {name}: {got:?} vs {want:?}"))?;
            }
        }
        Ok(format!("{instances} prf + {instances} evaluate instances"))
    })
}

fn criterion_2() -> Outcome {
    timed(Some(Duration::from_secs(10)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cases = 600;
        for case in 0..cases {
            let n = rng.random_range(1..=32);
            // every third case uses small integers so ties are frequent
            let coarse = case % 3 == 0;
            let mut draw = || -> f32 {
                if coarse {
                    rng.random_range(-2..=2) as f32
                } else {
                    rng.random_range(-8.0..8.0)
                }
            };
            let start: Vec<f32> = (0..n).map(|_| draw()).collect();
            let end: Vec<f32> = (0..n).map(|_| draw()).collect();
            let max = rng.random_range(1..=40);

            // argmax of p(s) p(e) equals argmax of the logit sum; the sum of
            // two f32 values is exact in f64
            let mut best: Option<(f64, usize, usize)> = None;
            for s in 0..n {
                for e in 0..n {
                    if e < s || e - s + 1 > max {
                        continue;
                    }
                    let v = start[s] as f64 + end[e] as f64;
                    let better = match best {
                        None => true,
                        Some((bv, bs, be)) => v > bv || (v == bv && (s, e) < (bs, be)),
                    };
                    if better {
                        best = Some((v, s, e));
                    }
                }
            }
            let (_, s, e) = best.expect("at least one span");
            let scores = SpanScores::new(start.clone(), end.clone()).map_err(|e| e.to_string())?;
            let got = best_span(&scores, max).map_err(|e| e.to_string())?;
            ensure((got.start_token, got.end_token) == (s, e), || {
                format!("case {case}: got ({}, {}), want ({s}, {e})", got.start_token, got.end_token)
            })?;
            let norm = |v: &[f32]| v.iter().map(|&x| (x as f64).exp()).sum::<f64>();
            let log_p = ((start[s] as f64).exp() / norm(&start)).ln() + ((end[e] as f64).exp() / norm(&end)).ln();
            ensure((got.score - log_p).abs() < 1e-9, || format!("case {case}: score {} vs {log_p}", got.score))?;
        }
        Ok(format!("{cases} logit vectors of 1..=32 tokens"))
    })
}

/// Per-clause intersection by walking every character of the span.
fn oracle_clause(span: (usize, usize), offsets: &[(usize, usize)]) -> usize {
    let mut counts = vec![0usize; offsets.len()];
    for ch in span.0..span.1 {
        for (i, &(s, e)) in offsets.iter().enumerate() {
            if s <= ch && ch < e {
                counts[i] += 1;
            }
        }
    }
    let mut best = 0;
    for i in 1..counts.len() {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    if counts[best] == 0 {
        let mut nearest = 0;
        for i in 1..offsets.len() {
            if offsets[i].0.abs_diff(span.0) < offsets[nearest].0.abs_diff(span.0) {
                nearest = i;
            }
        }
        best = nearest;
    }
    best + 1
}

fn criterion_3() -> Outcome {
    timed(None, || {
        // The span covers the tail of c2 and a shorter head of c3.
        let doc = Document::new("fig3", &["一二三", "四五六七八", "九十百千", "万亿"], [(2, 1)]).unwrap();
        let ctx = build_context(&doc);
        let (c2, c3) = (ctx.offsets[1], ctx.offsets[2]);
        let span = (c2.0 + 1, c3.0 + 2);
        let (winner, report) = span_to_clause(span, &ctx).map_err(|e| e.to_string())?;
        ensure(winner == 2 && report.overlaps[1] > report.overlaps[2], || {
            format!("two-clause overlap scenario mapped to c{winner}, overlaps {:?}", report.overlaps)
        })?;

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cases = 600;
        for case in 0..cases {
            let doc = random_doc(&format!("m{case}"), &mut rng);
            let ctx = build_context(&doc);
            let len = ctx.char_len();
            let a = rng.random_range(0..len);
            let b = rng.random_range(a + 1..=len);
            let (got, _) = span_to_clause((a, b), &ctx).map_err(|e| e.to_string())?;
            let want = oracle_clause((a, b), &ctx.offsets);
            ensure(got == want, || format!("case {case}: span ({a}, {b}) got c{got}, want c{want}"))?;
        }
        Ok(format!("two-clause overlap scenario + {cases} random spans"))
    })
}

fn criterion_4() -> Outcome {
    timed(Some(Duration::from_secs(30)), || {
        let docs = single_pair_corpus(100, 4);
        let refs: Vec<&Document> = docs.iter().collect();
        let questions = FixedQuestions::default();
        let hp = Hyperparams::default();
        let cfg = InferenceConfig::default();
        let mut lines = Vec::new();
        for variant in [Variant::Indep, Variant::GuidedEmotionFirst, Variant::GuidedCauseFirst] {
            let trained = EncoderSpec::Oracle
                .train_variant(variant, &refs, &refs, &hp, &questions)
                .map_err(|e| e.to_string())?;
            let mut preds = Vec::new();
            for doc in &docs {
                let p = predict(doc, variant, &trained.models, &cfg).map_err(|e| e.to_string())?;
                if variant != Variant::Indep {
                    let stage1 = match variant {
                        Variant::GuidedEmotionFirst => p.emotion_clause,
                        _ => p.cause_clause,
                    };
                    let text = &doc.clause(stage1).expect("predicted clause exists").text;
                    ensure(p.question_trace.get(1) == Some(text), || {
                        format!("{variant} {}: trace {:?} vs clause {text}", doc.doc_id, p.question_trace)
                    })?;
                }
                preds.push(p);
            }
            let r = evaluate(&docs, &preds, Scope::Corpus).map_err(|e| e.to_string())?;
            ensure(r.emotion.f1 == 1.0 && r.cause.f1 == 1.0 && r.pair.f1 == 1.0, || {
                format!("{variant}: F1 {:.3}/{:.3}/{:.3}", r.emotion.f1, r.cause.f1, r.pair.f1)
            })?;
            lines.push(format!("{variant} F1=1"));
        }
        Ok(format!("100 documents: {}", lines.join(", ")))
    })
}

fn criterion_5() -> Outcome {
    timed(None, || {
        let gold: HashSet<(usize, usize)> = [(4, 2), (4, 3), (5, 6)].into();
        let model1: HashSet<(usize, usize)> = [(4, 1), (6, 3)].into();
        let proj = |s: &HashSet<(usize, usize)>, f: fn(&(usize, usize)) -> usize| s.iter().map(f).collect::<HashSet<_>>();
        let emotion = prf(&proj(&gold, |p| p.0), &proj(&model1, |p| p.0));
        let cause = prf(&proj(&gold, |p| p.1), &proj(&model1, |p| p.1));
        let pair = prf(&gold, &model1);
        ensure(pair.f1 == 0.0, || format!("Model-1 pair F1 {}", pair.f1))?;
        ensure(emotion.precision == 0.5 && emotion.recall == 0.5, || format!("Model-1 emotion {emotion:?}"))?;
        ensure((cause.recall - 1.0 / 3.0).abs() < 1e-12, || format!("Model-1 cause {cause:?}"))?;

        let clauses = ["c1", "c2", "c3", "c4", "c5", "c6"];
        let doc = Document::new("fig1", &clauses, gold.iter().copied()).unwrap();
        let pred = PairPrediction {
            doc_id: "fig1".into(),
            variant: Variant::GuidedEmotionFirst,
            emotion_clause: 4,
            cause_clause: 2,
            emotion_span: (0, 0),
            cause_span: (0, 0),
            question_trace: Vec::new(),
        };
        let r = evaluate(std::slice::from_ref(&doc), &[pred], Scope::Corpus).map_err(|e| e.to_string())?;
        ensure(r.pair.recall == 1.0 / 3.0, || format!("pair recall of (4,2): {}", r.pair.recall))?;
        Ok(format!(
            "Model-1 emotion {:.2}, cause {:.2}, pair F1 {:.1}; (4,2) pair recall {:.3}",
            emotion.recall, cause.recall, pair.f1, r.pair.recall
        ))
    })
}

fn criterion_6_splits() -> Outcome {
    timed(None, || {
        let docs = single_pair_corpus(1945, 6);
        let splits = make_splits(&docs, 10, 42).map_err(|e| e.to_string())?;
        ensure(split_sizes(1945) == (1556, 194, 195), || format!("{:?}", split_sizes(1945)))?;
        for s in &splits {
            let sizes = (s.train.len(), s.dev.len(), s.test.len());
            ensure(sizes == (1556, 194, 195), || format!("split {}: {sizes:?}", s.split_id))?;
            let all: BTreeSet<&String> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
            ensure(all.len() == 1945, || format!("split {} is not a partition", s.split_id))?;
        }
        Ok("10 splits of 1945 documents, each 1556/194/195".into())
    })
}

fn corpus_path() -> Option<PathBuf> {
    std::env::var_os("ECPE_CORPUS").map(PathBuf::from)
}

fn criterion_6_table2() -> Outcome {
    let Some(path) = corpus_path() else {
        return Outcome::Skip("ECPE_CORPUS not set; real corpus unavailable".into());
    };
    timed(None, || {
        let docs = load_corpus(&path, None, ParseMode::Annotated).map_err(|e| e.to_string())?;
        let stats = corpus_stats(&docs);
        let h = stats.histogram;
        ensure((h.one_pair, h.two_pairs, h.more_than_two, h.total) == (1746, 177, 22, 1945), || {
            format!("histogram {h:?}")
        })?;
        ensure((stats.mean_clauses_per_document - 14.8).abs() <= 0.1, || {
            format!("mean clauses {:.2}", stats.mean_clauses_per_document)
        })?;
        Ok(format!("{stats}").lines().collect::<Vec<_>>().join("; "))
    })
}

fn criterion_7() -> Outcome {
    timed(Some(Duration::from_secs(120)), || {
        // copy task: the question is one clause of the document, the answer
        // is that same clause
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let examples: Vec<_> = (0..50)
            .map(|i| {
                let n = rng.random_range(3..=8);
                let k = rng.random_range(1..=n);
                let doc = document(&format!("copy{i}"), n, &[(k, k)], &mut rng);
                let q = Question::from_clause(&doc, k, QuestionKind::GoldEmotion).unwrap();
                make_example(&doc, Target::Cause, q).unwrap()
            })
            .collect();
        let mut enc = ToyEncoder::default();
        let hp = Hyperparams {
            learning_rate: 0.1,
            ..Hyperparams::default()
        };
        let report = enc.train(&examples, &hp).map_err(|e| e.to_string())?;
        let losses = &report.epoch_losses;
        ensure(losses.len() == 5 && losses[4] < losses[0], || format!("epoch losses {losses:?}"))?;
        let mut hits = 0;
        for ex in &examples {
            let p = predict_span(&enc, &ex.question, &ex.context, 96).map_err(|e| e.to_string())?;
            if p.char_span == ex.gold_span {
                hits += 1;
            }
        }
        ensure(hits >= 45, || format!("exact spans {hits}/50"))?;
        Ok(format!("exact spans {hits}/50, loss {:.3} -> {:.3}", losses[0], losses[4]))
    })
}

fn criterion_8() -> Outcome {
    let (Some(corpus), Some(bert)) = (corpus_path(), std::env::var_os("ECPE_BERT_DIR")) else {
        return Outcome::Skip("needs ECPE_CORPUS and ECPE_BERT_DIR (long-running, accelerator advised)".into());
    };
    timed(None, || {
        let out = tempfile_dir()?;
        let mut cfg = RunConfig::default();
        cfg.apply([
            ("corpus", corpus.to_str().unwrap_or_default()),
            ("output", out.to_str().unwrap_or_default()),
            ("k", "1"),
            ("variant", "guided_emotion_first,indep"),
        ])
        .map_err(|e| e.to_string())?;
        cfg.encoder = EncoderSpec::Bert { dir: PathBuf::from(bert) };
        let summary = cmd_run(&cfg).map_err(|e| e.to_string())?;
        let f1 = |v: Variant| summary.aggregates.get(v.as_str()).map(|a| a.mean.pair.f1);
        let (Some(guided), Some(indep)) = (f1(Variant::GuidedEmotionFirst), f1(Variant::Indep)) else {
            return Err("a variant failed, see summary.txt".into());
        };
        ensure((guided - 0.729).abs() <= 0.05, || format!("guided pair F1 {guided:.3}"))?;
        ensure(guided >= indep, || format!("guided {guided:.3} < indep {indep:.3}"))?;
        Ok(format!("guided pair F1 {guided:.3}, indep {indep:.3}"))
    })
}

fn tempfile_dir() -> Result<PathBuf, String> {
    let dir = std::env::temp_dir().join(format!("ecpe-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    Ok(dir)
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("1 metrics match brute-force counting", criterion_1),
        ("2 best_span matches exhaustive search", criterion_2),
        ("3 span_to_clause matches per-clause overlap", criterion_3),
        ("4 gold oracle end-to-end F1 = 1.0", criterion_4),
        ("5 worked example scores", criterion_5),
        ("6a split sizes 1556/194/195", criterion_6_splits),
        ("6b corpus pair histogram and mean length", criterion_6_table2),
        ("7 toy encoder learns copy task", criterion_7),
        ("8 BERT Guided-QA on one split (optional)", criterion_8),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Outcome::Pass(d) => println!("PASS  {name}: {d}"),
            Outcome::Skip(d) => println!("SKIP  {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tokenize::{encode_with, CharTokenizer};
use super::{
    prepare_examples, Hyperparams, Metadata, PreparedExample, SpanEncoder, SpanScores, TokenizedInput,
    TrainReport, DEFAULT_MAX_SEQ_LEN,
};
use crate::qa_task::{Context, QAExample, Question};
use crate::{Error, Result};

pub(super) const KIND: &str = "toy";
const WEIGHTS_FILE: &str = "weights.bin";
pub const DEFAULT_VOCAB_SIZE: usize = 2048;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Small trainable encoder: a sparse linear scorer per role (start, end).
///
/// For token `i` in clause `c`, the start logit is
///
/// ```text
/// tok[t_i] + [i opens c] * (bias + w_ov * overlap(c, q) + sum_{t in c} bag[t])
/// ```
///
/// and the end logit is the same with "closes" in place of "opens".
/// `overlap(c, q)` is the share of the clause's distinct tokens that also
/// occur in the question, which lets a guided question point at a clause.
#[derive(Debug, Clone)]
pub struct ToyEncoder {
    tokenizer: CharTokenizer,
    max_seq_len: usize,
    weights: Vec<f64>,
    adam: Option<Adam>,
    trained_with: Option<Hyperparams>,
}

#[derive(Debug, Clone)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Per-input feature view shared by the forward and backward passes.
struct Features {
    ids: Vec<usize>,
    /// Distinct token ids of the clause each boundary belongs to.
    clause_bag: Vec<Vec<usize>>,
    clause_overlap: Vec<f64>,
    /// Clause slot of the token if it opens (start) / closes (end) it.
    opens: Vec<Option<usize>>,
    closes: Vec<Option<usize>>,
}

impl Features {
    fn new(input: &TokenizedInput) -> Self {
        let n = input.len();
        let question: BTreeSet<u32> = input.question_tokens.iter().copied().collect();
        let mut clause_bag = Vec::new();
        let mut clause_overlap = Vec::new();
        let mut opens = vec![None; n];
        let mut closes = vec![None; n];
        let mut i = 0;
        while i < n {
            let clause = input.token_clause[i];
            let mut j = i;
            while j + 1 < n && input.token_clause[j + 1] == clause {
                j += 1;
            }
            let bag: BTreeSet<u32> = input.context_tokens[i..=j].iter().copied().collect();
            let shared = bag.intersection(&question).count();
            clause_overlap.push(shared as f64 / bag.len() as f64);
            clause_bag.push(bag.into_iter().map(|t| t as usize).collect());
            opens[i] = Some(clause_bag.len() - 1);
            closes[j] = Some(clause_bag.len() - 1);
            i = j + 1;
        }
        Features {
            ids: input.context_tokens.iter().map(|&t| t as usize).collect(),
            clause_bag,
            clause_overlap,
            opens,
            closes,
        }
    }

    fn boundary(&self, role: usize, i: usize) -> Option<usize> {
        if role == 0 {
            self.opens[i]
        } else {
            self.closes[i]
        }
    }
}

impl ToyEncoder {
    pub fn new(vocab_size: usize, max_seq_len: usize) -> Result<Self> {
        let tokenizer = CharTokenizer::new(vocab_size)?;
        Ok(ToyEncoder {
            weights: vec![0.0; 2 * Self::role_width(vocab_size)],
            tokenizer,
            max_seq_len,
            adam: None,
            trained_with: None,
        })
    }

    fn role_width(vocab: usize) -> usize {
        2 * vocab + 2
    }

    fn vocab(&self) -> usize {
        self.tokenizer.vocab_size()
    }

    // Weight slots for one role.
    fn tok(&self, role: usize, t: usize) -> usize {
        role * Self::role_width(self.vocab()) + t
    }
    fn bag(&self, role: usize, t: usize) -> usize {
        role * Self::role_width(self.vocab()) + self.vocab() + t
    }
    fn bias(&self, role: usize) -> usize {
        role * Self::role_width(self.vocab()) + 2 * self.vocab()
    }
    fn overlap(&self, role: usize) -> usize {
        self.bias(role) + 1
    }

    fn logits(&self, f: &Features, role: usize) -> Vec<f64> {
        let w = &self.weights;
        (0..f.ids.len())
            .map(|i| {
                let mut v = w[self.tok(role, f.ids[i])];
                if let Some(c) = f.boundary(role, i) {
                    v += w[self.bias(role)] + w[self.overlap(role)] * f.clause_overlap[c];
                    v += f.clause_bag[c].iter().map(|&t| w[self.bag(role, t)]).sum::<f64>();
                }
                v
            })
            .collect()
    }

    /// Cross-entropy of one role; accumulates `scale * dloss/dw` into `grad`.
    fn role_loss(&self, f: &Features, role: usize, gold: usize, scale: f64, grad: &mut [f64]) -> f64 {
        let logits = self.logits(f, role);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
        let loss = -(logits[gold] - max - z.ln());
        for (i, &l) in logits.iter().enumerate() {
            let mut g = (l - max).exp() / z;
            if i == gold {
                g -= 1.0;
            }
            g *= scale;
            grad[self.tok(role, f.ids[i])] += g;
            if let Some(c) = f.boundary(role, i) {
                grad[self.bias(role)] += g;
                grad[self.overlap(role)] += g * f.clause_overlap[c];
                for &t in &f.clause_bag[c] {
                    grad[self.bag(role, t)] += g;
                }
            }
        }
        loss
    }

    /// Mean start+end loss over a batch, with its gradient.
    fn batch_loss(&self, batch: &[&PreparedExample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.weights.len()];
        let scale = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for ex in batch {
            let f = Features::new(&ex.input);
            total += self.role_loss(&f, 0, ex.start, scale, &mut grad);
            total += self.role_loss(&f, 1, ex.end, scale, &mut grad);
        }
        (total * scale, grad)
    }

    fn adam_step(&mut self, grad: &[f64], lr: f64) {
        let n = self.weights.len();
        let adam = self.adam.get_or_insert_with(|| Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        });
        adam.t += 1;
        let c1 = 1.0 - BETA1.powi(adam.t);
        let c2 = 1.0 - BETA2.powi(adam.t);
        for (i, &g) in grad.iter().enumerate() {
            if g == 0.0 && adam.m[i] == 0.0 && adam.v[i] == 0.0 {
                continue;
            }
            adam.m[i] = BETA1 * adam.m[i] + (1.0 - BETA1) * g;
            adam.v[i] = BETA2 * adam.v[i] + (1.0 - BETA2) * g * g;
            let mh = adam.m[i] / c1;
            let vh = adam.v[i] / c2;
            self.weights[i] -= lr * mh / (vh.sqrt() + EPS);
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = Metadata::read(dir)?;
        let mut enc = Self::new(meta.parse("vocab_size")?, meta.parse("max_seq_len")?)?;
        let path = dir.join(WEIGHTS_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != enc.weights.len() * 8 {
            return Err(Error::Encoder(format!(
                "{}: expected {} weights, found {} bytes",
                path.display(),
                enc.weights.len(),
                bytes.len()
            )));
        }
        for (w, chunk) in enc.weights.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        if meta.get("epochs").is_ok() {
            enc.trained_with = Some(Hyperparams::from_metadata(&meta)?);
        }
        Ok(enc)
    }
}

impl Default for ToyEncoder {
    fn default() -> Self {
        Self::new(DEFAULT_VOCAB_SIZE, DEFAULT_MAX_SEQ_LEN).expect("default vocab size is valid")
    }
}

impl SpanEncoder for ToyEncoder {
    fn kind(&self) -> &str {
        KIND
    }

    fn tokenize(&self, question: &Question, context: &Context) -> Result<TokenizedInput> {
        encode_with(&self.tokenizer, question, context, self.max_seq_len)
    }

    fn score(&self, input: &TokenizedInput) -> Result<SpanScores> {
        self.tokenizer.check(&input.question_tokens)?;
        self.tokenizer.check(&input.context_tokens)?;
        let f = Features::new(input);
        let start = self.logits(&f, 0).into_iter().map(|v| v as f32).collect();
        let end = self.logits(&f, 1).into_iter().map(|v| v as f32).collect();
        SpanScores::new(start, end)
    }

    fn train(&mut self, examples: &[QAExample], hp: &Hyperparams) -> Result<TrainReport> {
        hp.validate()?;
        let mut report = TrainReport::default();
        let prepared = prepare_examples(self, examples, &mut report)?;
        if prepared.is_empty() {
            return Ok(report);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        for epoch in 0..hp.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for chunk in order.chunks(hp.batch_size) {
                let batch: Vec<&PreparedExample> = chunk.iter().map(|&i| &prepared[i]).collect();
                let (loss, grad) = self.batch_loss(&batch);
                sum += loss * batch.len() as f64;
                self.adam_step(&grad, hp.learning_rate);
            }
            let mean = sum / prepared.len() as f64;
            log::debug!("toy encoder epoch {}: mean loss {mean:.4}", epoch + 1);
            report.epoch_losses.push(mean);
        }
        self.trained_with = Some(hp.clone());
        Ok(report)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        let mut meta = Metadata::new(KIND);
        meta.set("tokenizer", "char-hash");
        meta.set("vocab_size", self.vocab());
        meta.set("max_seq_len", self.max_seq_len);
        meta.set("truncation", "drop_trailing_clauses");
        if let Some(hp) = &self.trained_with {
            hp.write_metadata(&mut meta);
        }
        meta.write(dir)?;
        let bytes: Vec<u8> = self.weights.iter().flat_map(|w| w.to_le_bytes()).collect();
        let path = dir.join(WEIGHTS_FILE);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    }
}

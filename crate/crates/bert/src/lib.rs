//! BERT-family extractive QA encoder (candle backend).
//!
//! A directory in the usual Hugging Face layout is expected:
//!
//! ```text
//! config.json          model hyperparameters (BERT architecture)
//! vocab.txt            WordPiece vocabulary
//! model.safetensors    weights (or pytorch_model.bin)
//! ```
//!
//! A `qa_outputs` head (hidden -> 2) projects each token to a start and an
//! end logit. Base checkpoints without a head get a freshly initialised one.
//! Chinese checkpoints such as `bert-base-chinese` and
//! `hfl/chinese-roberta-wwm-ext` both use this architecture.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, IndexOp, Tensor, D};
use candle_nn::{linear, AdamW, Linear, Module, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use candle_transformers::models::bert::{BertModel, Config};
use ecpe_core::encoder::{
    encode_with, prepare_examples, Hyperparams, Metadata, PieceTokenizer, PreparedExample, SpanEncoder, SpanScores,
    TokenizedInput, TrainReport,
};
use ecpe_core::qa_task::{Context, QAExample, Question};
use ecpe_core::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tokenizers::models::wordpiece::WordPiece;
use tokenizers::normalizers::BertNormalizer;
use tokenizers::pre_tokenizers::bert::BertPreTokenizer;
use tokenizers::Tokenizer;

pub const KIND: &str = "bert";
const CONFIG_FILE: &str = "config.json";
const VOCAB_FILE: &str = "vocab.txt";
const SAFETENSORS_FILE: &str = "model.safetensors";
const PICKLE_FILE: &str = "pytorch_model.bin";
const HEAD: &str = "qa_outputs";
const INIT_STD: f64 = 0.02;
/// Added to padding positions before the softmax.
const PAD_PENALTY: f64 = -1e4;

fn enc_err(e: impl Display) -> Error {
    Error::Encoder(e.to_string())
}

/// WordPiece tokenizer with BERT normalisation, character offsets.
struct WordPieceTokenizer {
    inner: Tokenizer,
    vocab: Vec<String>,
}

impl WordPieceTokenizer {
    fn new(vocab: Vec<String>) -> Result<Self> {
        let map = WordPiece::read_bytes((vocab.join("\n") + "\n").as_bytes()).map_err(enc_err)?;
        if !map.contains_key("[UNK]") {
            return Err(Error::Encoder("vocabulary has no [UNK] token".into()));
        }
        let model = WordPiece::builder()
            .vocab(map)
            .unk_token("[UNK]".to_string())
            .build()
            .map_err(enc_err)?;
        let mut inner = Tokenizer::new(model);
        inner
            .with_normalizer(Some(BertNormalizer::new(true, true, None, true)))
            .map_err(enc_err)?;
        inner.with_pre_tokenizer(Some(BertPreTokenizer));
        Ok(WordPieceTokenizer { inner, vocab })
    }

    fn from_file(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(body.lines().map(|l| l.trim_end_matches('\r').to_string()).collect())
    }

    fn id(&self, token: &str) -> Result<u32> {
        self.inner
            .token_to_id(token)
            .ok_or_else(|| Error::Encoder(format!("vocabulary has no {token} token")))
    }
}

impl PieceTokenizer for WordPieceTokenizer {
    fn pieces(&self, text: &str) -> Result<Vec<(u32, (usize, usize))>> {
        let encoding = self.inner.encode_char_offsets(text, false).map_err(enc_err)?;
        Ok(encoding
            .get_ids()
            .iter()
            .copied()
            .zip(encoding.get_offsets().iter().copied())
            .filter(|(_, (s, e))| e > s)
            .collect())
    }
}

/// Pretrained transformer with a span head.
pub struct BertQa {
    registry: String,
    config: Config,
    model: BertModel,
    qa_outputs: Linear,
    varmap: VarMap,
    tokenizer: WordPieceTokenizer,
    cls_id: u32,
    sep_id: u32,
    pad_id: u32,
    max_seq_len: usize,
    device: Device,
    trained_with: Option<Hyperparams>,
}

impl BertQa {
    /// Loads `config.json`, `vocab.txt` and weights from `dir`.
    /// `registry` names the checkpoint, e.g. `bert-base-chinese`.
    pub fn from_dir(registry: &str, dir: &Path, max_seq_len: usize, seed: u64) -> Result<Self> {
        let config_path = dir.join(CONFIG_FILE);
        let raw = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
        let config: Config = serde_json::from_str(&raw)?;
        let tokenizer = WordPieceTokenizer::from_file(&dir.join(VOCAB_FILE))?;
        let device = default_device()?;
        let weights = read_weights(dir, &device)?;
        let prefix = if weights.keys().any(|k| k.starts_with("bert.")) { "bert" } else { "" };
        let mut qa = Self::build(registry, config, tokenizer, max_seq_len, seed, prefix, device)?;
        qa.assign(&weights)?;
        if let Ok(meta) = Metadata::read(dir) {
            if meta.get("epochs").is_ok() {
                qa.trained_with = Some(Hyperparams::from_metadata(&meta)?);
            }
        }
        Ok(qa)
    }

    /// Randomly initialised model, mainly for tests and smoke runs.
    pub fn random(registry: &str, config: Config, vocab: Vec<String>, max_seq_len: usize, seed: u64) -> Result<Self> {
        let tokenizer = WordPieceTokenizer::new(vocab)?;
        Self::build(registry, config, tokenizer, max_seq_len, seed, "bert", default_device()?)
    }

    fn build(
        registry: &str,
        config: Config,
        tokenizer: WordPieceTokenizer,
        max_seq_len: usize,
        seed: u64,
        prefix: &str,
        device: Device,
    ) -> Result<Self> {
        if tokenizer.vocab.len() > config.vocab_size {
            return Err(Error::Encoder(format!(
                "vocabulary of {} tokens exceeds model vocab_size {}",
                tokenizer.vocab.len(),
                config.vocab_size
            )));
        }
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, DType::F32, &device);
        let body = if prefix.is_empty() { vb.clone() } else { vb.pp(prefix) };
        let model = BertModel::load(body, &config).map_err(enc_err)?;
        let qa_outputs = linear(config.hidden_size, 2, vb.pp(HEAD)).map_err(enc_err)?;
        let qa = BertQa {
            registry: registry.to_string(),
            cls_id: tokenizer.id("[CLS]")?,
            sep_id: tokenizer.id("[SEP]")?,
            pad_id: tokenizer.id("[PAD]")?,
            max_seq_len: max_seq_len.min(config.max_position_embeddings),
            config,
            model,
            qa_outputs,
            varmap,
            tokenizer,
            device,
            trained_with: None,
        };
        qa.reinitialise(seed)?;
        Ok(qa)
    }

    /// Seeded truncated-free normal(0, 0.02) weights, unit LayerNorm scales
    /// and zero biases.
    fn reinitialise(&self, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, INIT_STD as f32).map_err(enc_err)?;
        let data = self.varmap.data().lock().expect("varmap lock");
        let mut names: Vec<&String> = data.keys().collect();
        names.sort();
        for name in names {
            let var = &data[name];
            let shape = var.shape().clone();
            let n = shape.elem_count();
            let values: Vec<f32> = if name.ends_with(".bias") || name.ends_with(".beta") {
                vec![0.0; n]
            } else if name.contains("LayerNorm") || name.ends_with(".gamma") {
                vec![1.0; n]
            } else {
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            };
            let t = Tensor::from_vec(values, shape, &self.device).map_err(enc_err)?;
            var.set(&t).map_err(enc_err)?;
        }
        Ok(())
    }

    /// Copies checkpoint tensors into the model variables. Missing body
    /// weights are an error; a missing span head keeps its initialisation.
    fn assign(&mut self, weights: &HashMap<String, Tensor>) -> Result<()> {
        let data = self.varmap.data().lock().expect("varmap lock");
        let mut missing = Vec::new();
        for (name, var) in data.iter() {
            let found = weights.get(name).or_else(|| {
                let alias = name
                    .strip_suffix("LayerNorm.weight")
                    .map(|p| format!("{p}LayerNorm.gamma"))
                    .or_else(|| name.strip_suffix("LayerNorm.bias").map(|p| format!("{p}LayerNorm.beta")))?;
                weights.get(&alias)
            });
            match found {
                Some(t) => {
                    if t.shape() != var.shape() {
                        return Err(Error::Encoder(format!(
                            "weight `{name}` has shape {:?}, model expects {:?}",
                            t.shape(),
                            var.shape()
                        )));
                    }
                    var.set(&t.to_dtype(DType::F32).map_err(enc_err)?).map_err(enc_err)?;
                }
                None => missing.push(name.clone()),
            }
        }
        let (head, body): (Vec<_>, Vec<_>) = missing.into_iter().partition(|n| n.starts_with(HEAD));
        if !body.is_empty() {
            return Err(Error::Encoder(format!(
                "checkpoint is missing {} weights, e.g. `{}`",
                body.len(),
                body[0]
            )));
        }
        if !head.is_empty() {
            log::info!("checkpoint has no span head; `{HEAD}` starts from random initialisation");
        }
        Ok(())
    }

    fn context_offset(input: &TokenizedInput) -> usize {
        input.question_tokens.len() + 2
    }

    /// `[CLS] q [SEP] c [SEP]` ids and segment ids.
    fn sequence(&self, input: &TokenizedInput) -> (Vec<u32>, Vec<u32>) {
        let mut ids = Vec::with_capacity(input.question_tokens.len() + input.len() + 3);
        ids.push(self.cls_id);
        ids.extend(&input.question_tokens);
        ids.push(self.sep_id);
        let segment_a = ids.len();
        ids.extend(&input.context_tokens);
        ids.push(self.sep_id);
        let types = (0..ids.len()).map(|i| u32::from(i >= segment_a)).collect();
        (ids, types)
    }

    fn check_ids(&self, input: &TokenizedInput) -> Result<()> {
        let vocab = self.config.vocab_size;
        match input
            .question_tokens
            .iter()
            .chain(&input.context_tokens)
            .find(|&&id| id as usize >= vocab)
        {
            Some(&id) => Err(Error::OutOfVocabulary { id, vocab_size: vocab }),
            None => Ok(()),
        }
    }

    /// Start and end logits `[batch, seq]` for padded sequences.
    fn forward(&self, batch: &[(Vec<u32>, Vec<u32>)]) -> candle_core::Result<(Tensor, Tensor, Tensor)> {
        let len = batch.iter().map(|(ids, _)| ids.len()).max().unwrap_or(0);
        let mut ids = Vec::with_capacity(batch.len() * len);
        let mut types = Vec::with_capacity(batch.len() * len);
        let mut mask = Vec::with_capacity(batch.len() * len);
        for (i, t) in batch {
            ids.extend(i.iter().copied().chain(std::iter::repeat(self.pad_id)).take(len));
            types.extend(t.iter().copied().chain(std::iter::repeat(0)).take(len));
            mask.extend((0..len).map(|k| u32::from(k < i.len())));
        }
        let shape = (batch.len(), len);
        let ids = Tensor::from_vec(ids, shape, &self.device)?;
        let types = Tensor::from_vec(types, shape, &self.device)?;
        let mask = Tensor::from_vec(mask, shape, &self.device)?;
        let hidden = self.model.forward(&ids, &types, Some(&mask))?;
        let logits = self.qa_outputs.forward(&hidden)?;
        let start = logits.i((.., .., 0))?.contiguous()?;
        let end = logits.i((.., .., 1))?.contiguous()?;
        Ok((start, end, mask))
    }

    fn train_step(&self, batch: &[&PreparedExample], opt: &mut AdamW) -> candle_core::Result<f64> {
        let seqs: Vec<_> = batch.iter().map(|ex| self.sequence(&ex.input)).collect();
        let (start, end, mask) = self.forward(&seqs)?;
        let penalty = ((mask.to_dtype(DType::F32)? - 1.0)? * -PAD_PENALTY)?;
        let start = (start + &penalty)?;
        let end = (end + &penalty)?;
        let offset = |ex: &PreparedExample| Self::context_offset(&ex.input) as u32;
        let gold_start: Vec<u32> = batch.iter().map(|ex| offset(ex) + ex.start as u32).collect();
        let gold_end: Vec<u32> = batch.iter().map(|ex| offset(ex) + ex.end as u32).collect();
        let gs = Tensor::new(gold_start.as_slice(), &self.device)?;
        let ge = Tensor::new(gold_end.as_slice(), &self.device)?;
        let loss = ((candle_nn::loss::cross_entropy(&start, &gs)? + candle_nn::loss::cross_entropy(&end, &ge)?)? / 2.0)?;
        opt.backward_step(&loss)?;
        loss.to_scalar::<f32>().map(f64::from)
    }

    pub fn registry(&self) -> &str {
        &self.registry
    }
}

fn default_device() -> Result<Device> {
    Device::cuda_if_available(0).map_err(enc_err)
}

fn read_weights(dir: &Path, device: &Device) -> Result<HashMap<String, Tensor>> {
    let st: PathBuf = dir.join(SAFETENSORS_FILE);
    if st.exists() {
        return candle_core::safetensors::load(&st, device).map_err(|e| Error::Encoder(format!("{}: {e}", st.display())));
    }
    let pt = dir.join(PICKLE_FILE);
    if pt.exists() {
        let tensors = candle_core::pickle::read_all(&pt).map_err(|e| Error::Encoder(format!("{}: {e}", pt.display())))?;
        return tensors
            .into_iter()
            .map(|(k, t)| Ok((k, t.to_device(device).map_err(enc_err)?)))
            .collect();
    }
    Err(Error::Encoder(format!(
        "{}: no {SAFETENSORS_FILE} or {PICKLE_FILE} found",
        dir.display()
    )))
}

impl SpanEncoder for BertQa {
    fn kind(&self) -> &str {
        KIND
    }

    fn tokenize(&self, question: &Question, context: &Context) -> Result<TokenizedInput> {
        encode_with(&self.tokenizer, question, context, self.max_seq_len)
    }

    fn score(&self, input: &TokenizedInput) -> Result<SpanScores> {
        self.check_ids(input)?;
        let seq = self.sequence(input);
        let (start, end, _) = self.forward(std::slice::from_ref(&seq)).map_err(enc_err)?;
        let from = Self::context_offset(input);
        let take = |t: Tensor| -> Result<Vec<f32>> {
            t.i((0, from..from + input.len()))
                .and_then(|t| t.to_vec1::<f32>())
                .map_err(enc_err)
        };
        SpanScores::new(take(start)?, take(end)?)
    }

    fn train(&mut self, examples: &[QAExample], hp: &Hyperparams) -> Result<TrainReport> {
        hp.validate()?;
        let mut report = TrainReport::default();
        let prepared = prepare_examples(self, examples, &mut report)?;
        if prepared.is_empty() {
            return Ok(report);
        }
        let params = ParamsAdamW {
            lr: hp.learning_rate,
            weight_decay: 0.0,
            ..ParamsAdamW::default()
        };
        let mut opt = AdamW::new(self.varmap.all_vars(), params).map_err(enc_err)?;
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        for epoch in 0..hp.epochs {
            order.shuffle(&mut rng);
            let mut sum = 0.0;
            for chunk in order.chunks(hp.batch_size) {
                let batch: Vec<&PreparedExample> = chunk.iter().map(|&i| &prepared[i]).collect();
                sum += self.train_step(&batch, &mut opt).map_err(enc_err)? * batch.len() as f64;
            }
            let mean = sum / prepared.len() as f64;
            log::info!("{} epoch {}/{}: mean loss {mean:.4}", self.registry, epoch + 1, hp.epochs);
            report.epoch_losses.push(mean);
        }
        self.trained_with = Some(hp.clone());
        Ok(report)
    }

    fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let weights = dir.join(SAFETENSORS_FILE);
        self.varmap.save(&weights).map_err(|e| Error::Encoder(format!("{}: {e}", weights.display())))?;
        let vocab = dir.join(VOCAB_FILE);
        fs::write(&vocab, self.tokenizer.vocab.join("\n") + "\n").map_err(|e| Error::io(&vocab, e))?;
        let config = dir.join(CONFIG_FILE);
        fs::write(&config, config_json(&self.config)).map_err(|e| Error::io(&config, e))?;

        let mut meta = Metadata::new(KIND);
        meta.set("registry", &self.registry);
        meta.set("tokenizer", format!("wordpiece:{VOCAB_FILE}"));
        if let Some(hp) = &self.trained_with {
            hp.write_metadata(&mut meta);
        }
        meta.set("max_seq_len", self.max_seq_len);
        meta.set("truncation", "drop_trailing_clauses");
        meta.write(dir)
    }
}

/// Reloads a directory written by [`BertQa::save`].
pub fn load_saved(dir: &Path) -> Result<BertQa> {
    let meta = Metadata::read(dir)?;
    BertQa::from_dir(meta.get("registry")?, dir, meta.parse("max_seq_len")?, 0)
}

/// `config.json` for the fields the architecture reads.
fn config_json(c: &Config) -> String {
    let act = format!("{:?}", c.hidden_act).to_lowercase();
    let act = match act.as_str() {
        "geluapproximate" => "gelu_new".to_string(),
        _ => act,
    };
    serde_json::json!({
        "model_type": c.model_type.clone().unwrap_or_else(|| "bert".into()),
        "vocab_size": c.vocab_size,
        "hidden_size": c.hidden_size,
        "num_hidden_layers": c.num_hidden_layers,
        "num_attention_heads": c.num_attention_heads,
        "intermediate_size": c.intermediate_size,
        "hidden_act": act,
        "hidden_dropout_prob": c.hidden_dropout_prob,
        "max_position_embeddings": c.max_position_embeddings,
        "type_vocab_size": c.type_vocab_size,
        "initializer_range": c.initializer_range,
        "layer_norm_eps": c.layer_norm_eps,
        "pad_token_id": c.pad_token_id,
    })
    .to_string()
}

/// Converts a logits row to probabilities; exposed for diagnostics.
pub fn softmax_rows(t: &Tensor) -> Result<Tensor> {
    candle_nn::ops::softmax(t, D::Minus1).map_err(enc_err)
}

//! Clause-annotated corpus model, readers, statistics and split protocols.
//!
//! Two input formats are accepted:
//!
//! * `native`: the line-oriented release format. Each document is a header
//!   `<doc_id> <clause_count>`, a pair line such as ` (5, 4), (5, 6)`, and
//!   one line per clause `<index>,<emotion>,<keyword>,<text>`. The emotion
//!   category and keyword columns are read and discarded.
//! * `jsonl`: one normalized document per line,
//!   `{"doc_id": "1", "clauses": ["..", ".."], "pairs": [[5, 4]]}` with 1-based indices.
//!
//! jsonl is the canonical internal format; the native reader fails loudly on
//! anything it does not understand.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::text::{char_len, normalize_whitespace};
use crate::{Error, Result};

/// Characters between two consecutive clauses in the document context.
pub const CLAUSE_SEPARATOR: char = ' ';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    /// 1-based position in the document.
    pub index: usize,
    pub text: String,
    /// Character offsets in the document context, end exclusive.
    pub char_start: usize,
    pub char_end: usize,
}

/// An (emotion clause, cause clause) pair of 1-based indices.
pub type Pair = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub clauses: Vec<Clause>,
    pub gold_pairs: BTreeSet<Pair>,
    pub gold_emotions: BTreeSet<usize>,
    pub gold_causes: BTreeSet<usize>,
}

impl Document {
    /// Builds a document from raw clause texts and 1-based pairs.
    ///
    /// Clause texts are whitespace-normalized; offsets are laid out with a
    /// single [`CLAUSE_SEPARATOR`] between clauses.
    pub fn new<S: AsRef<str>>(
        doc_id: impl Into<String>,
        clauses: &[S],
        pairs: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        Self::build(doc_id.into(), clauses, pairs, 0)
    }

    fn build<S: AsRef<str>>(
        doc_id: String,
        clauses: &[S],
        pairs: impl IntoIterator<Item = Pair>,
        line: usize,
    ) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::parse(doc_id, line, "document has no clauses"));
        }
        let mut laid_out = Vec::with_capacity(clauses.len());
        let mut cursor = 0;
        for (i, raw) in clauses.iter().enumerate() {
            let text = normalize_whitespace(raw.as_ref());
            if text.is_empty() {
                return Err(Error::parse(
                    doc_id,
                    line,
                    format!("clause {} is empty after whitespace normalization", i + 1),
                ));
            }
            let len = char_len(&text);
            laid_out.push(Clause {
                index: i + 1,
                text,
                char_start: cursor,
                char_end: cursor + len,
            });
            cursor += len + 1;
        }

        let n = laid_out.len();
        let mut gold_pairs = BTreeSet::new();
        for (e, c) in pairs {
            if e == 0 || c == 0 || e > n || c > n {
                return Err(Error::parse(
                    doc_id,
                    line,
                    format!("pair ({e},{c}) out of range for {n} clauses"),
                ));
            }
            gold_pairs.insert((e, c));
        }
        let gold_emotions = gold_pairs.iter().map(|&(e, _)| e).collect();
        let gold_causes = gold_pairs.iter().map(|&(_, c)| c).collect();
        Ok(Document {
            doc_id,
            clauses: laid_out,
            gold_pairs,
            gold_emotions,
            gold_causes,
        })
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn has_gold(&self) -> bool {
        !self.gold_pairs.is_empty()
    }

    /// Clause by 1-based index.
    pub fn clause(&self, index: usize) -> Option<&Clause> {
        index.checked_sub(1).and_then(|i| self.clauses.get(i))
    }

    pub fn to_json(&self) -> JsonDocument {
        JsonDocument {
            doc_id: self.doc_id.clone(),
            clauses: self.clauses.iter().map(|c| c.text.clone()).collect(),
            pairs: self.gold_pairs.iter().map(|&(e, c)| [e, c]).collect(),
        }
    }
}

/// Normalized jsonl document record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonDocument {
    pub doc_id: String,
    pub clauses: Vec<String>,
    #[serde(default)]
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Native,
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native" => Ok(Format::Native),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::InvalidInput(format!(
                "unknown corpus format `{other}` (expected native or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Native => "native",
            Format::Jsonl => "jsonl",
        })
    }
}

/// Whether documents without gold pairs are acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Every document must carry at least one gold pair.
    #[default]
    Annotated,
    /// Gold pairs are optional (inference on unannotated text).
    PredictionOnly,
}

/// Parses a whole corpus. Document order is preserved.
pub fn parse_raw_corpus<R: BufRead>(reader: R, format: Format, mode: ParseMode) -> Result<Vec<Document>> {
    let docs = match format {
        Format::Native => parse_native(reader, mode)?,
        Format::Jsonl => parse_jsonl(reader, mode)?,
    };
    let mut seen = HashSet::new();
    for (doc, line) in &docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::parse(&doc.doc_id, *line, "duplicate doc_id"));
        }
    }
    Ok(docs.into_iter().map(|(d, _)| d).collect())
}

/// Guesses the format from the first non-blank line.
pub fn sniff_format(first_line: &str) -> Format {
    if first_line.trim_start().starts_with('{') {
        Format::Jsonl
    } else {
        Format::Native
    }
}

fn check_mode(doc: &Document, mode: ParseMode, line: usize) -> Result<()> {
    if mode == ParseMode::Annotated && !doc.has_gold() {
        return Err(Error::parse(&doc.doc_id, line, "annotated document has no emotion-cause pair"));
    }
    Ok(())
}

fn parse_jsonl<R: BufRead>(reader: R, mode: ParseMode) -> Result<Vec<(Document, usize)>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse("?", lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonDocument =
            serde_json::from_str(&line).map_err(|e| Error::parse("?", lineno, e.to_string()))?;
        let doc = Document::build(
            record.doc_id,
            &record.clauses,
            record.pairs.iter().map(|p| (p[0], p[1])),
            lineno,
        )?;
        check_mode(&doc, mode, lineno)?;
        docs.push((doc, lineno));
    }
    Ok(docs)
}

fn parse_native<R: BufRead>(reader: R, mode: ParseMode) -> Result<Vec<(Document, usize)>> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut docs = Vec::new();

    loop {
        // header
        let (header_line, header) = loop {
            match lines.next() {
                None => return Ok(docs),
                Some((n, l)) => {
                    let l = l.map_err(|e| Error::parse("?", n, e.to_string()))?;
                    if !l.trim().is_empty() {
                        break (n, l);
                    }
                }
            }
        };
        let mut fields = header.split_whitespace();
        let (doc_id, count) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(count), None) => {
                let count: usize = count.parse().map_err(|_| {
                    Error::parse(id, header_line, format!("malformed header `{}`", header.trim()))
                })?;
                (id.to_string(), count)
            }
            _ => {
                return Err(Error::parse(
                    header.split_whitespace().next().unwrap_or("?"),
                    header_line,
                    format!("malformed header `{}`", header.trim()),
                ))
            }
        };
        if count == 0 {
            return Err(Error::parse(doc_id, header_line, "clause count is zero"));
        }

        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, l)) => l.map(|l| (n, l)).map_err(|e| Error::parse(&doc_id, n, e.to_string())),
                None => Err(Error::parse(&doc_id, header_line, format!("unexpected end of input, expected {what}"))),
            }
        };

        let (pair_line_no, pair_line) = next_line("pair list")?;
        let pairs = parse_pair_line(&pair_line).map_err(|m| Error::parse(&doc_id, pair_line_no, m))?;

        let mut texts = Vec::with_capacity(count);
        for expected in 1..=count {
            let (n, line) = next_line("clause line")?;
            let mut cols = line.splitn(4, ',');
            let (idx, _emotion, _keyword, text) = match (cols.next(), cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    return Err(Error::parse(
                        &doc_id,
                        n,
                        format!("clause count mismatch: expected clause {expected} of {count}"),
                    ))
                }
            };
            match idx.trim().parse::<usize>() {
                Ok(i) if i == expected => {}
                _ => {
                    return Err(Error::parse(
                        &doc_id,
                        n,
                        format!("clause count mismatch: expected clause {expected} of {count}, found `{}`", idx.trim()),
                    ))
                }
            }
            texts.push(text.to_string());
        }

        let doc = Document::build(doc_id, &texts, pairs, pair_line_no)?;
        check_mode(&doc, mode, header_line)?;
        docs.push((doc, header_line));
    }
}

/// Parses ` (5, 4), (5, 6)` into pairs.
fn parse_pair_line(line: &str) -> std::result::Result<Vec<Pair>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    if !trimmed.starts_with('(') {
        return Err(format!("malformed pair list `{trimmed}`"));
    }
    let mut numbers = Vec::new();
    for tok in trimmed.split(|c: char| c == '(' || c == ')' || c == ',' || c.is_whitespace()) {
        if tok.is_empty() {
            continue;
        }
        numbers.push(
            tok.parse::<usize>()
                .map_err(|_| format!("malformed pair list `{trimmed}`"))?,
        );
    }
    if numbers.len() % 2 != 0 {
        return Err(format!("odd number of indices in pair list `{trimmed}`"));
    }
    Ok(numbers.chunks(2).map(|p| (p[0], p[1])).collect())
}

/// Writes documents in the canonical jsonl schema.
pub fn write_jsonl<W: Write>(mut writer: W, docs: &[Document]) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, &doc.to_json())?;
        writer.write_all(b"\n").map_err(|e| Error::io("<jsonl output>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairHistogram {
    pub one_pair: usize,
    pub two_pairs: usize,
    pub more_than_two: usize,
    pub total: usize,
}

impl PairHistogram {
    /// Percentages of (one, two, more than two) pairs.
    pub fn percentages(&self) -> [f64; 3] {
        if self.total == 0 {
            return [0.0; 3];
        }
        let t = self.total as f64;
        [
            100.0 * self.one_pair as f64 / t,
            100.0 * self.two_pairs as f64 / t,
            100.0 * self.more_than_two as f64 / t,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub histogram: PairHistogram,
    pub mean_clauses_per_document: f64,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.histogram;
        let [p1, p2, p3] = h.percentages();
        writeln!(f, "{:<50} {:>7} {:>10}", "", "Number", "Percentage")?;
        writeln!(f, "{:<50} {:>7} {:>9.2}%", "Documents with one emotion-cause pair", h.one_pair, p1)?;
        writeln!(f, "{:<50} {:>7} {:>9.2}%", "Documents with two emotion-cause pairs", h.two_pairs, p2)?;
        writeln!(
            f,
            "{:<50} {:>7} {:>9.2}%",
            "Documents with more than two emotion-cause pairs", h.more_than_two, p3
        )?;
        writeln!(f, "{:<50} {:>7} {:>9}%", "All", h.total, 100)?;
        write!(f, "Mean clauses per document: {:.1}", self.mean_clauses_per_document)
    }
}

pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut histogram = PairHistogram::default();
    let mut clauses = 0usize;
    for doc in docs {
        match doc.gold_pairs.len() {
            0 => {}
            1 => histogram.one_pair += 1,
            2 => histogram.two_pairs += 1,
            _ => histogram.more_than_two += 1,
        }
        clauses += doc.len();
    }
    histogram.total = docs.len();
    let mean = if docs.is_empty() {
        0.0
    } else {
        clauses as f64 / docs.len() as f64
    };
    CorpusStats {
        histogram,
        mean_clauses_per_document: mean,
    }
}

/// One train/dev/test partition of doc ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSet {
    pub split_id: usize,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

/// Sizes of an 8:1:1 partition of `n` documents.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = (n as f64 * 0.8).round() as usize;
    let dev = (n - train) / 2;
    (train, dev, n - train - dev)
}

/// Generates `k` independent random 8:1:1 partitions, deterministic in `seed`.
pub fn make_splits(docs: &[Document], k: usize, seed: u64) -> Result<Vec<SplitSet>> {
    if k == 0 {
        return Err(Error::InvalidInput("split count must be at least 1".into()));
    }
    if docs.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "corpus of {} documents is too small for an 8:1:1 split (need at least 10)",
            docs.len()
        )));
    }
    let (n_train, n_dev, _) = split_sizes(docs.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    Ok((0..k)
        .map(|split_id| {
            let mut order = ids.clone();
            order.shuffle(&mut rng);
            let owned = |s: &[&str]| s.iter().map(|s| s.to_string()).collect::<Vec<_>>();
            SplitSet {
                split_id,
                train: owned(&order[..n_train]),
                dev: owned(&order[n_train..n_train + n_dev]),
                test: owned(&order[n_train + n_dev..]),
            }
        })
        .collect())
}

pub fn write_splits<W: Write>(mut writer: W, splits: &[SplitSet]) -> Result<()> {
    for split in splits {
        serde_json::to_writer(&mut writer, split)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<split output>", e))?;
    }
    Ok(())
}

/// Reads an externally published split file verbatim.
pub fn read_splits<R: BufRead>(reader: R) -> Result<Vec<SplitSet>> {
    let mut splits = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse("<splits>", i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        splits.push(
            serde_json::from_str(&line).map_err(|e| Error::parse("<splits>", i + 1, e.to_string()))?,
        );
    }
    Ok(splits)
}

/// Checks that every split partitions exactly the corpus doc ids.
pub fn validate_splits(docs: &[Document], splits: &[SplitSet]) -> Result<()> {
    let corpus: HashSet<&str> = docs.iter().map(|d| d.doc_id.as_str()).collect();
    for split in splits {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (part, ids) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
            for id in ids {
                if !corpus.contains(id.as_str()) {
                    return Err(Error::InvalidInput(format!(
                        "split {}: {part} references unknown doc_id `{id}`",
                        split.split_id
                    )));
                }
                if let Some(prev) = seen.insert(id.as_str(), part) {
                    return Err(Error::InvalidInput(format!(
                        "split {}: doc_id `{id}` appears in both {prev} and {part}",
                        split.split_id
                    )));
                }
            }
        }
        if seen.len() != corpus.len() {
            return Err(Error::InvalidInput(format!(
                "split {} covers {} of {} documents",
                split.split_id,
                seen.len(),
                corpus.len()
            )));
        }
    }
    Ok(())
}

/// Looks up documents by id, preserving the order of `ids`.
pub fn select<'a>(docs: &'a [Document], ids: &[String]) -> Result<Vec<&'a Document>> {
    let index: HashMap<&str, &Document> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("unknown doc_id `{id}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NATIVE: &str = "\
1 2
 (2, 1)
1,null,null,当 我 看到 建议 被 采纳
2,happiness,激动,我  激动 地 说
";

    fn parse(s: &str, f: Format) -> Result<Vec<Document>> {
        parse_raw_corpus(s.as_bytes(), f, ParseMode::Annotated)
    }

    #[test]
    fn minimal_native_document() {
        let docs = parse(NATIVE, Format::Native).unwrap();
        assert_eq!(docs.len(), 1);
        let d = &docs[0];
        assert_eq!(d.doc_id, "1");
        assert_eq!(d.gold_pairs, BTreeSet::from([(2, 1)]));
        assert_eq!(d.gold_emotions, BTreeSet::from([2]));
        assert_eq!(d.gold_causes, BTreeSet::from([1]));
        assert_eq!(d.clauses[1].text, "我 激动 地 说");
        assert_eq!((d.clauses[0].char_start, d.clauses[0].char_end), (0, 14));
        assert_eq!(d.clauses[1].char_start, 15);
    }

    #[test]
    fn pair_out_of_range() {
        let raw = "7 6\n (7, 1)\n1,a,b,x\n2,a,b,x\n3,a,b,x\n4,a,b,x\n5,a,b,x\n6,a,b,x\n";
        match parse(raw, Format::Native) {
            Err(Error::Parse { doc_id, line, .. }) => {
                assert_eq!(doc_id, "7");
                assert_eq!(line, 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn native_errors_name_document_and_line() {
        let cases = [
            ("1\n (1, 1)\n1,a,b,x\n", 1),
            ("1 2\n (1, 1)\n1,a,b,x\n", 1),
            ("1 2\n (1, 1)\n1,a,b,x\n3,a,b,y\n", 4),
            ("1 1\n 1, 1\n1,a,b,x\n", 2),
            ("1 1\n (1, 1)\n1,a,b,x\n\n1 1\n (1, 1)\n1,a,b,y\n", 5),
        ];
        for (raw, line) in cases {
            match parse(raw, Format::Native) {
                Err(Error::Parse { doc_id, line: l, .. }) => {
                    assert_eq!(doc_id, "1", "{raw:?}");
                    assert_eq!(l, line, "{raw:?}");
                }
                other => panic!("{raw:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_pairs_only_in_prediction_mode() {
        let raw = r#"{"doc_id":"a","clauses":["x","y"],"pairs":[]}"#;
        assert!(parse(raw, Format::Jsonl).is_err());
        let docs = parse_raw_corpus(raw.as_bytes(), Format::Jsonl, ParseMode::PredictionOnly).unwrap();
        assert!(!docs[0].has_gold());
    }

    #[test]
    fn empty_clause_rejected() {
        let raw = r#"{"doc_id":"a","clauses":["x","  "],"pairs":[[1,1]]}"#;
        assert!(matches!(parse(raw, Format::Jsonl), Err(Error::Parse { .. })));
    }

    #[test]
    fn histogram_counts() {
        let d1 = Document::new("a", &["x", "y"], [(1, 2)]).unwrap();
        let d3 = Document::new("b", &["x", "y", "z"], [(1, 2), (1, 3), (2, 3)]).unwrap();
        let stats = corpus_stats(&[d1, d3]);
        assert_eq!(
            stats.histogram,
            PairHistogram { one_pair: 1, two_pairs: 0, more_than_two: 1, total: 2 }
        );
        assert!((stats.mean_clauses_per_document - 2.5).abs() < 1e-12);
    }

    #[test]
    fn split_sizes_of_full_corpus() {
        assert_eq!(split_sizes(1945), (1556, 194, 195));
        assert_eq!(split_sizes(10), (8, 1, 1));
        assert_eq!(split_sizes(20), (16, 2, 2));
    }

    fn synthetic(n: usize) -> Vec<Document> {
        (0..n)
            .map(|i| Document::new(format!("d{i}"), &["a", "b"], [(1, 2)]).unwrap())
            .collect()
    }

    #[test]
    fn splits_are_deterministic() {
        let docs = synthetic(10);
        assert_eq!(make_splits(&docs, 1, 0).unwrap(), make_splits(&docs, 1, 0).unwrap());
        assert!(make_splits(&synthetic(9), 1, 0).is_err());
        assert!(make_splits(&docs, 0, 0).is_err());
    }

    #[test]
    fn splits_partition_corpus() {
        let docs = synthetic(20);
        let splits = make_splits(&docs, 2, 7).unwrap();
        assert_eq!(splits.len(), 2);
        for s in &splits {
            let all: HashSet<&String> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
            assert_eq!(all.len(), 20);
            assert_eq!(s.train.len() + s.dev.len() + s.test.len(), 20);
        }
        validate_splits(&docs, &splits).unwrap();
        let mut bad = splits[0].clone();
        bad.dev.push(bad.train[0].clone());
        assert!(validate_splits(&docs, &[bad]).is_err());
    }

    #[test]
    fn split_file_round_trip() {
        let docs = synthetic(12);
        let splits = make_splits(&docs, 3, 1).unwrap();
        let mut buf = Vec::new();
        write_splits(&mut buf, &splits).unwrap();
        assert_eq!(read_splits(buf.as_slice()).unwrap(), splits);
    }

    fn arb_raw_doc() -> impl Strategy<Value = (Vec<String>, Vec<Pair>)> {
        prop::collection::vec("[a-z情感 ]{0,6}[a-z原因]", 1..8).prop_flat_map(|clauses| {
            let n = clauses.len();
            let pairs = prop::collection::vec((1..=n, 1..=n), 1..4);
            (Just(clauses), pairs)
        })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_and_projections(raw in prop::collection::vec(arb_raw_doc(), 1..6)) {
            let docs: Vec<Document> = raw
                .iter()
                .enumerate()
                .map(|(i, (c, p))| Document::new(i.to_string(), c, p.iter().copied()).unwrap())
                .collect();
            for d in &docs {
                let e: BTreeSet<usize> = d.gold_pairs.iter().map(|p| p.0).collect();
                let c: BTreeSet<usize> = d.gold_pairs.iter().map(|p| p.1).collect();
                prop_assert_eq!(&d.gold_emotions, &e);
                prop_assert_eq!(&d.gold_causes, &c);
                for w in d.clauses.windows(2) {
                    prop_assert!(w[0].char_end < w[1].char_start);
                }
            }
            let mut buf = Vec::new();
            write_jsonl(&mut buf, &docs).unwrap();
            let back = parse_raw_corpus(buf.as_slice(), Format::Jsonl, ParseMode::Annotated).unwrap();
            prop_assert_eq!(back, docs);
        }
    }
}

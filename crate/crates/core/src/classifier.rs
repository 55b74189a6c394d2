//! Binary quality classifier: hashed word/char n-gram features, mean-pooled
//! embeddings, linear softmax head, plain SGD. Labels every document
//! `high` or `low`.
//!
//! Training is single-threaded by contract so a fixed seed reproduces
//! bit-identical models. Feature ids are sorted before pooling, which makes
//! prediction exactly invariant under word permutation when only unigram
//! features are enabled.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::lang::Lang;
use crate::tokenize::tokenize_words;
use crate::verdict::FilterVerdict;

pub const QUALITY_FILTER: &str = "quality";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    High,
    Low,
}

impl QualityLabel {
    fn index(self) -> usize {
        match self {
            QualityLabel::High => 0,
            QualityLabel::Low => 1,
        }
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QualityLabel::High => "high",
            QualityLabel::Low => "low",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub embedding_dim: usize,
    /// 1 = unigrams only, 2 = unigrams + bigrams.
    pub word_ngram_order: usize,
    /// Character n-gram span per word (with boundary markers), or None to
    /// disable subword features.
    pub char_ngram_range: Option<(usize, usize)>,
    pub bucket_count: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            embedding_dim: 32,
            word_ngram_order: 2,
            char_ngram_range: Some((3, 6)),
            bucket_count: 1 << 18,
            epochs: 5,
            learning_rate: 0.1,
            seed: 42,
        }
    }
}

impl ClassifierConfig {
    fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 {
            return Err(Error::config("embedding_dim must be positive"));
        }
        if !(1..=2).contains(&self.word_ngram_order) {
            return Err(Error::config(format!(
                "word_ngram_order must be 1 or 2, got {}",
                self.word_ngram_order
            )));
        }
        if let Some((min, max)) = self.char_ngram_range {
            if min == 0 || min > max {
                return Err(Error::config(format!(
                    "char_ngram_range must satisfy 1 <= min <= max, got ({min}, {max})"
                )));
            }
        }
        if self.bucket_count == 0 {
            return Err(Error::config("bucket_count must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Trained classifier: a bucket -> vector embedding table and one output
/// vector per label.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTextClassifier {
    dim: usize,
    bucket_count: usize,
    word_ngram_order: usize,
    char_ngram_range: Option<(usize, usize)>,
    /// embeddings[bucket * dim .. (bucket+1) * dim]
    embeddings: Vec<f32>,
    /// output[label * dim .. (label+1) * dim]; label order [high, low]
    output: Vec<f32>,
}

fn feature_ids(
    words: &[String],
    word_ngram_order: usize,
    char_range: Option<(usize, usize)>,
    buckets: u64,
) -> Vec<u32> {
    let mut ids = Vec::new();
    let mut buf = [0u8; 4];
    for w in words {
        let mut h = Fnv1a::new();
        h.write(w.as_bytes());
        ids.push((h.finish() % buckets) as u32);
    }
    if word_ngram_order >= 2 {
        for pair in words.windows(2) {
            let mut h = Fnv1a::new();
            h.write(pair[0].as_bytes()).sep().write(pair[1].as_bytes());
            ids.push((h.finish() % buckets) as u32);
        }
    }
    if let Some((min, max)) = char_range {
        for w in words {
            let chars: Vec<char> = std::iter::once('<')
                .chain(w.chars())
                .chain(std::iter::once('>'))
                .collect();
            for n in min..=max {
                if chars.len() < n {
                    break;
                }
                for window in chars.windows(n) {
                    let mut h = Fnv1a::new();
                    // Distinguish subword features from whole-word features.
                    h.write(b"sub").sep();
                    for &c in window {
                        h.write(c.encode_utf8(&mut buf).as_bytes());
                    }
                    ids.push((h.finish() % buckets) as u32);
                }
            }
        }
    }
    // Canonical accumulation order: prediction depends only on the feature
    // multiset.
    ids.sort_unstable();
    ids
}

/// Mean CE loss per epoch, plus within the first epoch at quarter
/// boundaries (running means over the examples seen so far).
#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub first_epoch_quarter_loss: Vec<f64>,
}

fn softmax2(l0: f64, l1: f64) -> (f64, f64) {
    let d = l0 - l1;
    let p0 = if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    };
    (p0, 1.0 - p0)
}

impl LinearTextClassifier {
    fn hidden(&self, ids: &[u32]) -> Option<Vec<f64>> {
        if ids.is_empty() {
            return None;
        }
        let mut hidden = vec![0.0f64; self.dim];
        for &id in ids {
            let row = id as usize * self.dim;
            for (h, &e) in hidden.iter_mut().zip(&self.embeddings[row..row + self.dim]) {
                *h += f64::from(e);
            }
        }
        let inv = 1.0 / ids.len() as f64;
        hidden.iter_mut().for_each(|h| *h *= inv);
        Some(hidden)
    }

    fn logits(&self, hidden: &[f64]) -> (f64, f64) {
        let mut l = [0.0f64; 2];
        for (label, l_out) in l.iter_mut().enumerate() {
            let row = label * self.dim;
            *l_out = hidden
                .iter()
                .zip(&self.output[row..row + self.dim])
                .map(|(&h, &w)| h * f64::from(w))
                .sum();
        }
        (l[0], l[1])
    }

    fn ids_for(&self, text: &str) -> Vec<u32> {
        let t = tokenize_words(text);
        feature_ids(
            &t.words,
            self.word_ngram_order,
            self.char_ngram_range,
            self.bucket_count as u64,
        )
    }

    /// Probabilities (high, low); they sum to 1 exactly. Empty texts get
    /// the (low, 0.5) convention.
    pub fn probabilities(&self, text: &str) -> (f64, f64) {
        let ids = self.ids_for(text);
        match self.hidden(&ids) {
            Some(hidden) => {
                let (l0, l1) = self.logits(&hidden);
                softmax2(l0, l1)
            }
            None => (0.5, 0.5),
        }
    }

    /// Predicted label and its probability (>= 0.5 by construction).
    pub fn predict(&self, text: &str) -> (QualityLabel, f64) {
        let ids = self.ids_for(text);
        match self.hidden(&ids) {
            Some(hidden) => {
                let (l0, l1) = self.logits(&hidden);
                let (p_high, p_low) = softmax2(l0, l1);
                if p_high >= p_low {
                    (QualityLabel::High, p_high)
                } else {
                    (QualityLabel::Low, p_low)
                }
            }
            None => {
                log::debug!("empty text classified low by convention");
                (QualityLabel::Low, 0.5)
            }
        }
    }
}

/// Train on `(text, label)` pairs. Both labels must be present.
pub fn train_classifier(
    data: &[(String, QualityLabel)],
    cfg: &ClassifierConfig,
) -> Result<(LinearTextClassifier, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::input("training data is empty"));
    }
    let has_high = data.iter().any(|(_, l)| *l == QualityLabel::High);
    let has_low = data.iter().any(|(_, l)| *l == QualityLabel::Low);
    if !has_high || !has_low {
        return Err(Error::config(
            "training data must contain both `high` and `low` labels",
        ));
    }

    let examples: Vec<(Vec<u32>, usize)> = data
        .iter()
        .map(|(text, label)| {
            let t = tokenize_words(text);
            (
                feature_ids(
                    &t.words,
                    cfg.word_ngram_order,
                    cfg.char_ngram_range,
                    cfg.bucket_count as u64,
                ),
                label.index(),
            )
        })
        .collect();

    let dim = cfg.embedding_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 1.0 / dim as f32;
    let mut model = LinearTextClassifier {
        dim,
        bucket_count: cfg.bucket_count,
        word_ngram_order: cfg.word_ngram_order,
        char_ngram_range: cfg.char_ngram_range,
        embeddings: (0..cfg.bucket_count * dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect(),
        output: vec![0.0f32; 2 * dim],
    };

    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let total_steps = (cfg.epochs * examples.len()) as f64;
    let mut step = 0f64;
    let quarter = (examples.len() / 4).max(1);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        let mut seen = 0usize;
        for &idx in &order {
            let (ids, label) = &examples[idx];
            let lr = cfg.learning_rate * (1.0 - step / total_steps).max(1e-3);
            step += 1.0;
            let Some(hidden) = model.hidden(ids) else {
                continue;
            };
            let (l0, l1) = model.logits(&hidden);
            let (p0, p1) = softmax2(l0, l1);
            let p_true = if *label == 0 { p0 } else { p1 };
            loss_sum += -(p_true.max(1e-12)).ln();
            seen += 1;

            // Gradient wrt hidden uses pre-update output weights.
            let err = [p0 - if *label == 0 { 1.0 } else { 0.0 }, p1 - if *label == 1 { 1.0 } else { 0.0 }];
            let mut grad_hidden = vec![0.0f64; dim];
            for (lab, &e) in err.iter().enumerate() {
                let row = lab * dim;
                for (g, &w) in grad_hidden.iter_mut().zip(&model.output[row..row + dim]) {
                    *g += e * f64::from(w);
                }
            }
            for (lab, &e) in err.iter().enumerate() {
                let row = lab * dim;
                for (w, &h) in model.output[row..row + dim].iter_mut().zip(&hidden) {
                    *w -= (lr * e * h) as f32;
                }
            }
            let scale = lr / ids.len() as f64;
            for &id in ids.iter() {
                let row = id as usize * dim;
                for (w, &g) in model.embeddings[row..row + dim].iter_mut().zip(&grad_hidden) {
                    *w -= (scale * g) as f32;
                }
            }

            if epoch == 0 && seen.is_multiple_of(quarter) {
                report.first_epoch_quarter_loss.push(loss_sum / seen as f64);
            }
        }
        report.epoch_loss.push(if seen > 0 {
            loss_sum / seen as f64
        } else {
            0.0
        });
    }

    Ok((model, report))
}

/// Confusion counts, keyed actual -> predicted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub high_as_high: u64,
    pub high_as_low: u64,
    pub low_as_low: u64,
    pub low_as_high: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.high_as_high + self.high_as_low + self.low_as_low + self.low_as_high
    }

    /// Same counts with the class roles exchanged.
    pub fn swapped(&self) -> Confusion {
        Confusion {
            high_as_high: self.low_as_low,
            high_as_low: self.low_as_high,
            low_as_low: self.high_as_high,
            low_as_high: self.high_as_low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub high: PrecisionRecall,
    pub low: PrecisionRecall,
    pub confusion: Confusion,
}

fn prf(correct: u64, predicted: u64, actual: u64) -> PrecisionRecall {
    let div = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = div(correct, predicted);
    let recall = div(correct, actual);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    PrecisionRecall {
        precision,
        recall,
        f1,
    }
}

impl EvalMetrics {
    pub fn from_confusion(c: Confusion) -> EvalMetrics {
        let total = c.total();
        let accuracy = if total == 0 {
            0.0
        } else {
            (c.high_as_high + c.low_as_low) as f64 / total as f64
        };
        EvalMetrics {
            accuracy,
            high: prf(
                c.high_as_high,
                c.high_as_high + c.low_as_high,
                c.high_as_high + c.high_as_low,
            ),
            low: prf(
                c.low_as_low,
                c.low_as_low + c.high_as_low,
                c.low_as_low + c.low_as_high,
            ),
            confusion: c,
        }
    }
}

/// Evaluate on labeled data; metrics come straight off the confusion matrix.
pub fn evaluate(clf: &LinearTextClassifier, test: &[(String, QualityLabel)]) -> Result<EvalMetrics> {
    if test.is_empty() {
        return Err(Error::input("evaluation set is empty"));
    }
    let mut c = Confusion::default();
    for (text, actual) in test {
        let (predicted, _) = clf.predict(text);
        match (actual, predicted) {
            (QualityLabel::High, QualityLabel::High) => c.high_as_high += 1,
            (QualityLabel::High, QualityLabel::Low) => c.high_as_low += 1,
            (QualityLabel::Low, QualityLabel::Low) => c.low_as_low += 1,
            (QualityLabel::Low, QualityLabel::High) => c.low_as_high += 1,
        }
    }
    Ok(EvalMetrics::from_confusion(c))
}

/// Quality filter: fail iff the predicted label is `low`.
pub fn quality_check(clf: &LinearTextClassifier, doc: &Document) -> FilterVerdict {
    let (label, prob) = clf.predict(&doc.text);
    match label {
        QualityLabel::High => FilterVerdict::pass(&doc.id, QUALITY_FILTER).with_measured(prob),
        QualityLabel::Low => {
            FilterVerdict::fail(&doc.id, QUALITY_FILTER, "low_quality").with_measured(prob)
        }
    }
}

/// One labeled example per JSONL line: `{"text": ..., "label": "high"|"low",
/// "language": optional}`.
#[derive(Debug, Deserialize)]
struct LabeledRecord {
    text: String,
    label: QualityLabel,
    #[serde(default)]
    #[allow(dead_code)]
    language: Option<Lang>,
}

pub fn load_labeled_jsonl(path: &Path) -> Result<Vec<(String, QualityLabel)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LabeledRecord = serde_json::from_str(&line).map_err(|e| {
            Error::format(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        out.push((record.text, record.label));
    }
    Ok(out)
}

// --- serialization (magic `QCLF`) ----------------------------------------

const MAGIC: &[u8; 4] = b"QCLF";
const VERSION: u32 = 1;

impl LinearTextClassifier {
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        out.write_all(&(self.bucket_count as u64).to_le_bytes())?;
        out.write_all(&[self.word_ngram_order as u8])?;
        match self.char_ngram_range {
            Some((min, max)) => out.write_all(&[1, min as u8, max as u8])?,
            None => out.write_all(&[0, 0, 0])?,
        }
        for &w in &self.embeddings {
            out.write_all(&w.to_le_bytes())?;
        }
        for &w in &self.output {
            out.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("not a QCLF model file (bad magic)"));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported QCLF version {version} (expected {VERSION})"
            )));
        }
        input.read_exact(&mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf)?;
        let bucket_count = u64::from_le_bytes(u64buf) as usize;
        let mut bytes = [0u8; 4];
        input.read_exact(&mut bytes)?;
        let word_ngram_order = bytes[0] as usize;
        let char_ngram_range = if bytes[1] == 1 {
            Some((bytes[2] as usize, bytes[3] as usize))
        } else {
            None
        };
        let mut embeddings = vec![0.0f32; bucket_count * dim];
        for w in embeddings.iter_mut() {
            input.read_exact(&mut u32buf)?;
            *w = f32::from_le_bytes(u32buf);
        }
        let mut output = vec![0.0f32; 2 * dim];
        for w in output.iter_mut() {
            input.read_exact(&mut u32buf)?;
            *w = f32::from_le_bytes(u32buf);
        }
        Ok(LinearTextClassifier {
            dim,
            bucket_count,
            word_ngram_order,
            char_ngram_range,
            embeddings,
            output,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        Self::read(&mut input)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    // Two classes with disjoint vocabularies are linearly separable.
    fn separable_corpus(docs_per_class: usize, seed: u64) -> Vec<(String, QualityLabel)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut corpus = Vec::new();
        for _ in 0..docs_per_class {
            let hi: Vec<String> = (0..20)
                .map(|_| format!("good{}", rng.random_range(0..500)))
                .collect();
            corpus.push((hi.join(" "), QualityLabel::High));
            let lo: Vec<String> = (0..20)
                .map(|_| format!("bad{}", rng.random_range(0..500)))
                .collect();
            corpus.push((lo.join(" "), QualityLabel::Low));
        }
        corpus
    }

    fn fast_config() -> ClassifierConfig {
        ClassifierConfig {
            embedding_dim: 16,
            bucket_count: 1 << 16,
            epochs: 5,
            ..ClassifierConfig::default()
        }
    }

    #[test]
    fn separable_classes_reach_high_f1() {
        let train = separable_corpus(200, 1);
        let test = separable_corpus(50, 2);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        let metrics = evaluate(&clf, &test).unwrap();
        assert!(metrics.high.f1 >= 0.99, "F1 {}", metrics.high.f1);
        assert!(metrics.low.f1 >= 0.99, "F1 {}", metrics.low.f1);
    }

    #[test]
    fn training_is_deterministic() {
        let train = separable_corpus(50, 3);
        let (a, _) = train_classifier(&train, &fast_config()).unwrap();
        let (b, _) = train_classifier(&train, &fast_config()).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.write(&mut buf_a).unwrap();
        b.write(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
        let probe = "good1 good2 bad3";
        assert_eq!(a.probabilities(probe), b.probabilities(probe));
    }

    #[test]
    fn single_label_rejected() {
        let data = vec![("text one".to_string(), QualityLabel::High); 10];
        assert!(matches!(
            train_classifier(&data, &fast_config()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn empty_data_rejected() {
        assert!(matches!(
            train_classifier(&[], &fast_config()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn loss_decreases_on_separable_data() {
        let train = separable_corpus(100, 4);
        let (_, report) = train_classifier(&train, &fast_config()).unwrap();
        for pair in report.first_epoch_quarter_loss.windows(2) {
            assert!(pair[1] < pair[0], "quarter losses {:?}", report.first_epoch_quarter_loss);
        }
        for pair in report.epoch_loss.windows(2) {
            assert!(pair[1] < pair[0], "epoch losses {:?}", report.epoch_loss);
        }
    }

    #[test]
    fn probabilities_sum_to_one_exactly() {
        let train = separable_corpus(20, 5);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        for text in ["good1 good2", "bad9", "good1 bad2 unknown"] {
            let (p_high, p_low) = clf.probabilities(text);
            assert_eq!(p_high + p_low, 1.0);
        }
    }

    #[test]
    fn empty_text_predicts_low_half() {
        let train = separable_corpus(20, 6);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        assert_eq!(clf.predict(""), (QualityLabel::Low, 0.5));
    }

    #[test]
    fn unigram_only_prediction_is_permutation_invariant() {
        let cfg = ClassifierConfig {
            word_ngram_order: 1,
            char_ngram_range: None,
            ..fast_config()
        };
        let train = separable_corpus(50, 7);
        let (clf, _) = train_classifier(&train, &cfg).unwrap();
        let a = clf.probabilities("good1 bad2 good3 bad4 good5");
        let b = clf.probabilities("bad4 good5 good3 good1 bad2");
        assert_eq!(a, b);
    }

    #[test]
    fn bigram_prediction_is_order_sensitive() {
        let cfg = ClassifierConfig {
            word_ngram_order: 2,
            char_ngram_range: None,
            ..fast_config()
        };
        let train = separable_corpus(50, 8);
        let (clf, _) = train_classifier(&train, &cfg).unwrap();
        let a = clf.probabilities("good1 bad2 good3");
        let b = clf.probabilities("good3 good1 bad2");
        assert_ne!(a, b);
    }

    #[test]
    fn metrics_from_hand_built_confusion() {
        let c = Confusion {
            high_as_high: 8,
            low_as_high: 2,
            high_as_low: 1,
            low_as_low: 9,
        };
        let m = EvalMetrics::from_confusion(c);
        assert_eq!(m.confusion.total(), 20);
        assert!((m.accuracy - 17.0 / 20.0).abs() < 1e-12);
        assert!((m.high.precision - 0.8).abs() < 1e-12);
        assert!((m.high.recall - 8.0 / 9.0).abs() < 1e-12);
        let expected_f1 = 2.0 * (0.8 * 8.0 / 9.0) / (0.8 + 8.0 / 9.0);
        assert!((m.high.f1 - expected_f1).abs() < 1e-12);
        // F1 is the harmonic mean of its own precision/recall.
        for prf in [m.high, m.low] {
            if prf.precision + prf.recall > 0.0 {
                let hm = 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall);
                assert!((prf.f1 - hm).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn label_swap_swaps_metrics() {
        let c = Confusion {
            high_as_high: 8,
            low_as_high: 2,
            high_as_low: 1,
            low_as_low: 9,
        };
        let m = EvalMetrics::from_confusion(c);
        let s = EvalMetrics::from_confusion(c.swapped());
        assert_eq!(m.accuracy, s.accuracy);
        assert_eq!(m.high, s.low);
        assert_eq!(m.low, s.high);
    }

    #[test]
    fn all_correct_predictions() {
        let train = separable_corpus(100, 9);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        let m = evaluate(&clf, &train).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.high.f1, 1.0);
        assert_eq!(m.low.f1, 1.0);
    }

    #[test]
    fn quality_check_verdicts() {
        let train = separable_corpus(100, 10);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        let good = Document::new("g", "good1 good2 good3 good4", Lang::Hindi).unwrap();
        let v = quality_check(&clf, &good);
        assert!(v.passed);
        let bad = Document::new("b", "bad1 bad2 bad3 bad4", Lang::Hindi).unwrap();
        let v = quality_check(&clf, &bad);
        assert!(!v.passed);
        assert_eq!(v.reason.as_deref(), Some("low_quality"));
        assert!(v.measured.unwrap() >= 0.5);
        let empty = Document::new("e", "", Lang::Hindi).unwrap();
        assert!(!quality_check(&clf, &empty).passed);
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let train = separable_corpus(30, 11);
        let (clf, _) = train_classifier(&train, &fast_config()).unwrap();
        let mut buf = Vec::new();
        clf.write(&mut buf).unwrap();
        let back = LinearTextClassifier::read(&mut buf.as_slice()).unwrap();
        assert_eq!(clf, back);
    }
}

//! Word embeddings trained with skip-gram negative sampling plus character
//! subword features, for the bias audit.
//!
//! Training is single-threaded and seeded: identical corpus + config yield
//! identical vectors. A word's final vector is the mean of its own input
//! vector and its subword bucket vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::tokenize::tokenize_words;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    /// Character n-gram span (with `<`/`>` word boundaries), or None to
    /// disable subword features.
    pub subword_range: Option<(usize, usize)>,
    pub subword_buckets: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 2,
            subword_range: Some((3, 6)),
            subword_buckets: 1 << 16,
            learning_rate: 0.05,
            seed: 42,
        }
    }
}

impl EmbeddingConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::config("embedding dim must be positive"));
        }
        if self.window == 0 {
            return Err(Error::config("window must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::config("learning_rate must be positive"));
        }
        if let Some((min, max)) = self.subword_range {
            if min == 0 || min > max {
                return Err(Error::config(format!(
                    "subword range must satisfy 1 <= min <= max, got ({min}, {max})"
                )));
            }
        }
        if self.subword_range.is_some() && self.subword_buckets == 0 {
            return Err(Error::config("subword_buckets must be positive"));
        }
        Ok(())
    }
}

/// Materialized word -> vector map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f32>>,
    pub provenance: String,
}

impl EmbeddingSpace {
    pub fn from_vectors(vectors: BTreeMap<String, Vec<f32>>, provenance: &str) -> Result<Self> {
        let dim = vectors
            .values()
            .next()
            .map(|v| v.len())
            .ok_or_else(|| Error::input("embedding space has no vectors"))?;
        for (w, v) in &vectors {
            if v.len() != dim {
                return Err(Error::input(format!(
                    "vector for {w:?} has dim {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::input(format!("vector for {w:?} has non-finite components")));
            }
        }
        Ok(EmbeddingSpace {
            dim,
            vectors,
            provenance: provenance.to_string(),
        })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(|v| v.as_slice())
    }

    /// Cosine similarity; None when either word is missing or a norm is 0.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        cosine(self.vector(a)?, self.vector(b)?)
    }

    /// Text export: header `vocab_size dim`, then `word v1 .. vD` per line.
    pub fn write_text<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {}", self.vectors.len(), self.dim)?;
        for (word, vec) in &self.vectors {
            write!(out, "{word}")?;
            for v in vec {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("empty embedding file"))??;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("embedding header must be `vocab_size dim`"))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("embedding header must be `vocab_size dim`"))?;
        let mut vectors = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts
                .next()
                .ok_or_else(|| Error::format(format!("embedding line {} is empty", i + 2)))?;
            let vec: Vec<f32> = parts
                .map(|p| p.parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::format(format!("embedding line {}: {e}", i + 2)))?;
            if vec.len() != dim {
                return Err(Error::format(format!(
                    "embedding line {}: expected {dim} components, got {}",
                    i + 2,
                    vec.len()
                )));
            }
            vectors.insert(word.to_string(), vec);
        }
        if vectors.len() != count {
            return Err(Error::format(format!(
                "embedding header declares {count} vectors, file has {}",
                vectors.len()
            )));
        }
        EmbeddingSpace::from_vectors(vectors, "loaded")
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_text(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load_text(path: &Path) -> Result<Self> {
        Self::read_text(File::open(path)?)
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        dot += f64::from(x) * f64::from(y);
        na += f64::from(x) * f64::from(x);
        nb += f64::from(y) * f64::from(y);
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

fn subword_ids(word: &str, range: Option<(usize, usize)>, buckets: u64) -> Vec<u32> {
    let Some((min, max)) = range else {
        return Vec::new();
    };
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut ids = Vec::new();
    let mut buf = [0u8; 4];
    for n in min..=max {
        if chars.len() < n {
            break;
        }
        for window in chars.windows(n) {
            let mut h = Fnv1a::new();
            for &c in window {
                h.write(c.encode_utf8(&mut buf).as_bytes());
            }
            ids.push((h.finish() % buckets) as u32);
        }
    }
    ids
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Train skip-gram with negative sampling over the corpus documents.
pub fn train_embeddings(corpus: &[Document], cfg: &EmbeddingConfig) -> Result<EmbeddingSpace> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::input("embedding corpus is empty"));
    }

    let docs: Vec<Vec<String>> = corpus
        .iter()
        .map(|d| tokenize_words(&d.text).words)
        .collect();

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for doc in &docs {
        for w in doc {
            *freq.entry(w).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(String, u64)> = freq
        .iter()
        .filter(|(_, &c)| c >= cfg.min_count)
        .map(|(&w, &c)| (w.to_string(), c))
        .collect();
    // Deterministic vocab order: by descending count, ties lexicographic.
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if vocab.is_empty() {
        return Err(Error::input(format!(
            "empty vocabulary: no word reaches min_count {}",
            cfg.min_count
        )));
    }
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, (w, _))| (w.as_str(), i))
        .collect();
    let n = vocab.len();
    let dim = cfg.dim;

    // Unigram^0.75 cumulative table for negative sampling.
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0f64;
    for (_, c) in &vocab {
        acc += (*c as f64).powf(0.75);
        cumulative.push(acc);
    }
    let total_weight = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / dim as f32;
    let mut input: Vec<f32> = (0..n * dim).map(|_| rng.random_range(-bound..bound)).collect();
    let mut subwords: Vec<f32> = if cfg.subword_range.is_some() {
        (0..cfg.subword_buckets * dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect()
    } else {
        Vec::new()
    };
    let mut output = vec![0.0f32; n * dim];

    let word_subs: Vec<Vec<u32>> = vocab
        .iter()
        .map(|(w, _)| subword_ids(w, cfg.subword_range, cfg.subword_buckets as u64))
        .collect();

    let doc_ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|doc| doc.iter().filter_map(|w| index.get(w.as_str()).copied()).collect())
        .collect();
    let total_tokens: usize = doc_ids.iter().map(|d| d.len()).sum();
    if total_tokens == 0 {
        return Err(Error::input("corpus has no in-vocabulary tokens"));
    }
    let total_steps = (cfg.epochs * total_tokens) as f64;
    let mut step = 0f64;

    let mut composed = vec![0.0f64; dim];
    let mut grad = vec![0.0f64; dim];

    for _ in 0..cfg.epochs {
        for doc in &doc_ids {
            for (i, &center) in doc.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - step / total_steps).max(1e-4);
                step += 1.0;

                // Input representation: mean of word and subword vectors.
                let subs = &word_subs[center];
                let denom = (1 + subs.len()) as f64;
                let row = center * dim;
                for (d, c) in composed.iter_mut().enumerate() {
                    *c = f64::from(input[row + d]);
                }
                for &s in subs {
                    let srow = s as usize * dim;
                    for (d, c) in composed.iter_mut().enumerate() {
                        *c += f64::from(subwords[srow + d]);
                    }
                }
                composed.iter_mut().for_each(|c| *c /= denom);

                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(doc.len() - 1);
                for (j, &positive) in doc.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for sample in 0..=cfg.negatives {
                        let (target, label) = if sample == 0 {
                            (positive, 1.0)
                        } else {
                            let r = rng.random_range(0.0..total_weight);
                            let idx = cumulative.partition_point(|&c| c <= r).min(n - 1);
                            if idx == positive {
                                continue;
                            }
                            (idx, 0.0)
                        };
                        let orow = target * dim;
                        let mut dot = 0.0f64;
                        for (d, &c) in composed.iter().enumerate() {
                            dot += c * f64::from(output[orow + d]);
                        }
                        let g = sigmoid(dot) - label;
                        for (d, &c) in composed.iter().enumerate() {
                            grad[d] += g * f64::from(output[orow + d]);
                            output[orow + d] -= (lr * g * c) as f32;
                        }
                    }
                    let scale = lr / denom;
                    for (d, &g) in grad.iter().enumerate() {
                        input[row + d] -= (scale * g) as f32;
                    }
                    for &s in subs {
                        let srow = s as usize * dim;
                        for (d, &g) in grad.iter().enumerate() {
                            subwords[srow + d] -= (scale * g) as f32;
                        }
                    }
                }
            }
        }
    }

    let mut vectors = BTreeMap::new();
    for (wi, (word, _)) in vocab.iter().enumerate() {
        let subs = &word_subs[wi];
        let denom = (1 + subs.len()) as f32;
        let row = wi * dim;
        let mut v = vec![0.0f32; dim];
        for (d, out) in v.iter_mut().enumerate() {
            *out = input[row + d];
        }
        for &s in subs {
            let srow = s as usize * dim;
            for (d, out) in v.iter_mut().enumerate() {
                *out += subwords[srow + d];
            }
        }
        v.iter_mut().for_each(|x| *x /= denom);
        vectors.insert(word.clone(), v);
    }

    EmbeddingSpace::from_vectors(
        vectors,
        &format!(
            "skipgram-ns dim={} window={} neg={} epochs={} min_count={} seed={}",
            cfg.dim, cfg.window, cfg.negatives, cfg.epochs, cfg.min_count, cfg.seed
        ),
    )
}

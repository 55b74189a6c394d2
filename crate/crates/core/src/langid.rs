//! Ensemble language identification: a script gate plus a character n-gram
//! classifier.
//!
//! The gate is exact for the eight languages whose script is unique in the
//! supported set; the classifier arbitrates the shared-script cases
//! (Hindi/Marathi on Devanagari, English on Latin) and anything the gate
//! cannot decide. The classifier is a multinomial logistic model over hashed
//! character n-grams (orders 1-4), trained single-threaded so identical
//! corpus + seed reproduce bit-identical weights.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::hashing::Fnv1a;
use crate::lang::Lang;
use crate::script::ScriptClass;
use crate::tokenize::{script_profile, tokenize_words};
use crate::verdict::FilterVerdict;

pub const LANGUAGE_FILTER: &str = "language_consistency";

/// Training hyperparameters for the n-gram classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct LangIdConfig {
    pub min_order: usize,
    pub max_order: usize,
    pub bucket_count: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LangIdConfig {
    fn default() -> Self {
        LangIdConfig {
            min_order: 1,
            max_order: 4,
            bucket_count: 1 << 18,
            epochs: 5,
            learning_rate: 0.5,
            seed: 42,
        }
    }
}

impl LangIdConfig {
    fn validate(&self) -> Result<()> {
        if self.min_order == 0 || self.min_order > self.max_order {
            return Err(Error::config(format!(
                "n-gram orders must satisfy 1 <= min <= max, got {}..{}",
                self.min_order, self.max_order
            )));
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

/// Trained identification model: per-language weight vectors over hashed
/// character n-grams, plus the script -> candidate-language prior the gate
/// uses.
#[derive(Debug, Clone, PartialEq)]
pub struct LangIdModel {
    languages: Vec<Lang>,
    min_order: usize,
    max_order: usize,
    bucket_count: usize,
    /// weights[bucket * n_langs + lang_index]
    weights: Vec<f32>,
    bias: Vec<f32>,
    script_prior: BTreeMap<ScriptClass, Vec<Lang>>,
}

/// Outcome of ensemble detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageDecision {
    pub label: Lang,
    pub confidence: f64,
    /// Component votes: `script_gate` (when the gate decided) and
    /// `classifier`.
    pub votes: BTreeMap<String, Lang>,
}

/// Default script -> candidate languages mapping over the supported set.
pub fn default_script_prior() -> BTreeMap<ScriptClass, Vec<Lang>> {
    let mut prior: BTreeMap<ScriptClass, Vec<Lang>> = BTreeMap::new();
    for lang in Lang::ALL {
        prior.entry(lang.script()).or_default().push(lang);
    }
    prior
}

/// Raw hashed character-n-gram counts, sorted by bucket.
fn raw_features(text: &str, min_order: usize, max_order: usize, buckets: usize) -> Vec<(u32, u32)> {
    let mut chars: Vec<char> = vec![' '];
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            chars.push(' ');
        }
        chars.extend(word.chars());
    }
    chars.push(' ');

    let mut counts: HashMap<u32, u32> = HashMap::new();
    let mut buf = [0u8; 4];
    for order in min_order..=max_order {
        if chars.len() < order {
            break;
        }
        for window in chars.windows(order) {
            let mut h = Fnv1a::new();
            for &c in window {
                h.write(c.encode_utf8(&mut buf).as_bytes());
            }
            let bucket = (h.finish() % buckets as u64) as u32;
            *counts.entry(bucket).or_insert(0) += 1;
        }
    }
    let mut out: Vec<(u32, u32)> = counts.into_iter().collect();
    out.sort_unstable_by_key(|&(b, _)| b);
    out
}

/// L1-normalize raw counts; the classifier is therefore invariant to
/// scaling all counts by a positive constant.
fn normalize(raw: &[(u32, u32)]) -> Vec<(u32, f64)> {
    let total: u64 = raw.iter().map(|&(_, c)| u64::from(c)).sum();
    if total == 0 {
        return Vec::new();
    }
    raw.iter()
        .map(|&(b, c)| (b, u64::from(c) as f64 / total as f64))
        .collect()
}

fn features(text: &str, min_order: usize, max_order: usize, buckets: usize) -> Vec<(u32, f64)> {
    normalize(&raw_features(text, min_order, max_order, buckets))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Train the classifier with plain SGD over softmax cross-entropy.
pub fn train_langid(corpus: &[(String, Lang)], config: &LangIdConfig) -> Result<LangIdModel> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::input("training corpus is empty"));
    }
    let mut languages: Vec<Lang> = corpus.iter().map(|(_, l)| *l).collect();
    languages.sort();
    languages.dedup();
    if languages.len() < 2 {
        return Err(Error::config(
            "language identification needs at least 2 distinct labels",
        ));
    }

    let n_langs = languages.len();
    let lang_index: BTreeMap<Lang, usize> =
        languages.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let examples: Vec<(Vec<(u32, f64)>, usize)> = corpus
        .iter()
        .map(|(text, lang)| {
            (
                features(text, config.min_order, config.max_order, config.bucket_count),
                lang_index[lang],
            )
        })
        .collect();

    let mut weights = vec![0.0f32; config.bucket_count * n_langs];
    let mut bias = vec![0.0f32; n_langs];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let total_steps = (config.epochs * examples.len()) as f64;
    let mut step = 0f64;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let (feats, label) = &examples[idx];
            let lr = config.learning_rate * (1.0 - step / total_steps).max(1e-3);
            step += 1.0;

            let mut logits = vec![0.0f64; n_langs];
            for &(bucket, x) in feats {
                let row = bucket as usize * n_langs;
                for (l, logit) in logits.iter_mut().enumerate() {
                    *logit += f64::from(weights[row + l]) * x;
                }
            }
            for (l, logit) in logits.iter_mut().enumerate() {
                *logit += f64::from(bias[l]);
            }
            let probs = softmax(&logits);
            for l in 0..n_langs {
                let grad = probs[l] - if l == *label { 1.0 } else { 0.0 };
                let delta = (lr * grad) as f32;
                bias[l] -= delta;
                for &(bucket, x) in feats {
                    weights[bucket as usize * n_langs + l] -= delta * x as f32;
                }
            }
        }
    }

    // The prior may only reference languages the model can output.
    let mut script_prior = default_script_prior();
    script_prior.retain(|_, langs| {
        langs.retain(|l| languages.contains(l));
        !langs.is_empty()
    });

    Ok(LangIdModel {
        languages,
        min_order: config.min_order,
        max_order: config.max_order,
        bucket_count: config.bucket_count,
        weights,
        bias,
        script_prior,
    })
}

impl LangIdModel {
    pub fn languages(&self) -> &[Lang] {
        &self.languages
    }

    pub fn script_prior(&self) -> &BTreeMap<ScriptClass, Vec<Lang>> {
        &self.script_prior
    }

    fn scores_from_features(&self, feats: &[(u32, f64)]) -> Vec<f64> {
        let n = self.languages.len();
        let mut logits = vec![0.0f64; n];
        for &(bucket, x) in feats {
            let row = bucket as usize * n;
            for (l, logit) in logits.iter_mut().enumerate() {
                *logit += f64::from(self.weights[row + l]) * x;
            }
        }
        for (l, logit) in logits.iter_mut().enumerate() {
            *logit += f64::from(self.bias[l]);
        }
        softmax(&logits)
    }

    /// Classifier-only softmax probabilities, aligned with `languages()`.
    pub fn classify(&self, text: &str) -> Vec<f64> {
        let feats = features(text, self.min_order, self.max_order, self.bucket_count);
        self.scores_from_features(&feats)
    }

    fn classifier_vote(&self, text: &str) -> (Lang, f64) {
        let probs = self.classify(text);
        let (best, p) = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least two languages");
        (self.languages[best], *p)
    }

    pub fn training_accuracy(&self, corpus: &[(String, Lang)]) -> f64 {
        if corpus.is_empty() {
            return 0.0;
        }
        let correct = corpus
            .iter()
            .filter(|(text, lang)| self.classifier_vote(text).0 == *lang)
            .count();
        correct as f64 / corpus.len() as f64
    }
}

/// Script gate + classifier ensemble.
///
/// If the text's dominant script maps to exactly one supported language,
/// that language wins with the dominant-script ratio as confidence;
/// otherwise the classifier's argmax wins with its softmax probability.
pub fn ensemble_detect(model: &LangIdModel, text: &str) -> Result<LanguageDecision> {
    let tokens = tokenize_words(text);
    if tokens.counts == 0 {
        return Err(Error::input("cannot identify language of an empty text"));
    }
    let profile = script_profile(&tokens);
    let dominant = profile
        .iter()
        .filter(|(class, _)| class.is_script())
        .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(&class, &ratio)| (class, ratio));

    let (classifier_label, classifier_prob) = model.classifier_vote(text);
    let mut votes = BTreeMap::new();
    votes.insert("classifier".to_string(), classifier_label);

    if let Some((class, ratio)) = dominant {
        if let Some(candidates) = model.script_prior.get(&class) {
            if candidates.len() == 1 {
                votes.insert("script_gate".to_string(), candidates[0]);
                return Ok(LanguageDecision {
                    label: candidates[0],
                    confidence: ratio,
                    votes,
                });
            }
        }
    }

    Ok(LanguageDecision {
        label: classifier_label,
        confidence: classifier_prob,
        votes,
    })
}

/// Language-consistency filter: fail iff a confident detection disagrees
/// with the document's target language; abstain (pass) below
/// `min_confidence`. Empty documents fail with reason `empty`.
pub fn language_consistency_check(
    doc: &Document,
    model: &LangIdModel,
    min_confidence: f64,
) -> FilterVerdict {
    let decision = match ensemble_detect(model, &doc.text) {
        Ok(d) => d,
        Err(_) => return FilterVerdict::fail(&doc.id, LANGUAGE_FILTER, "empty"),
    };
    if decision.label != doc.target_language && decision.confidence >= min_confidence {
        FilterVerdict::fail(&doc.id, LANGUAGE_FILTER, "language_mismatch")
            .with_measured(decision.confidence)
    } else {
        FilterVerdict::pass(&doc.id, LANGUAGE_FILTER).with_measured(decision.confidence)
    }
}

// --- serialization (magic `LIDM`) ---------------------------------------
//
// Layout, little-endian:
//   magic "LIDM" | u32 version=1 | u8 n_langs | per lang: u8 len + tag |
//   u8 min_order | u8 max_order | u64 bucket_count |
//   weights (bucket_count * n_langs) x f32 | bias n_langs x f32 |
//   u8 prior_entries | per entry: u8 script_id, u8 n, n x u8 lang index

const MAGIC: &[u8; 4] = b"LIDM";
const VERSION: u32 = 1;

fn script_id(class: ScriptClass) -> u8 {
    match class {
        ScriptClass::Latin => 0,
        ScriptClass::Devanagari => 1,
        ScriptClass::Bengali => 2,
        ScriptClass::Gujarati => 3,
        ScriptClass::Gurmukhi => 4,
        ScriptClass::Kannada => 5,
        ScriptClass::Malayalam => 6,
        ScriptClass::Odia => 7,
        ScriptClass::Tamil => 8,
        ScriptClass::Telugu => 9,
        ScriptClass::Digit => 10,
        ScriptClass::Punctuation => 11,
        ScriptClass::Whitespace => 12,
        ScriptClass::Other => 13,
    }
}

fn script_from_id(id: u8) -> Result<ScriptClass> {
    Ok(match id {
        0 => ScriptClass::Latin,
        1 => ScriptClass::Devanagari,
        2 => ScriptClass::Bengali,
        3 => ScriptClass::Gujarati,
        4 => ScriptClass::Gurmukhi,
        5 => ScriptClass::Kannada,
        6 => ScriptClass::Malayalam,
        7 => ScriptClass::Odia,
        8 => ScriptClass::Tamil,
        9 => ScriptClass::Telugu,
        10 => ScriptClass::Digit,
        11 => ScriptClass::Punctuation,
        12 => ScriptClass::Whitespace,
        13 => ScriptClass::Other,
        other => return Err(Error::format(format!("unknown script id {other}"))),
    })
}

impl LangIdModel {
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&[self.languages.len() as u8])?;
        for lang in &self.languages {
            let tag = lang.tag().as_bytes();
            out.write_all(&[tag.len() as u8])?;
            out.write_all(tag)?;
        }
        out.write_all(&[self.min_order as u8, self.max_order as u8])?;
        out.write_all(&(self.bucket_count as u64).to_le_bytes())?;
        for &w in &self.weights {
            out.write_all(&w.to_le_bytes())?;
        }
        for &b in &self.bias {
            out.write_all(&b.to_le_bytes())?;
        }
        out.write_all(&[self.script_prior.len() as u8])?;
        for (&class, langs) in &self.script_prior {
            out.write_all(&[script_id(class), langs.len() as u8])?;
            for lang in langs {
                let idx = self
                    .languages
                    .iter()
                    .position(|l| l == lang)
                    .map(|i| i as u8)
                    .unwrap_or(u8::MAX);
                out.write_all(&[idx])?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("not a LIDM model file (bad magic)"));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported LIDM version {version} (expected {VERSION})"
            )));
        }
        let mut byte = [0u8; 1];
        input.read_exact(&mut byte)?;
        let n_langs = byte[0] as usize;
        if n_langs < 2 {
            return Err(Error::format("LIDM model must carry >= 2 languages"));
        }
        let mut languages = Vec::with_capacity(n_langs);
        for _ in 0..n_langs {
            input.read_exact(&mut byte)?;
            let mut tag = vec![0u8; byte[0] as usize];
            input.read_exact(&mut tag)?;
            let tag = String::from_utf8(tag)
                .map_err(|e| Error::format(format!("bad language tag: {e}")))?;
            languages.push(tag.parse::<Lang>().map_err(|e| Error::format(e.to_string()))?);
        }
        input.read_exact(&mut byte)?;
        let min_order = byte[0] as usize;
        input.read_exact(&mut byte)?;
        let max_order = byte[0] as usize;
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf)?;
        let bucket_count = u64::from_le_bytes(u64buf) as usize;

        let mut weights = vec![0.0f32; bucket_count * n_langs];
        for w in weights.iter_mut() {
            input.read_exact(&mut u32buf)?;
            *w = f32::from_le_bytes(u32buf);
        }
        let mut bias = vec![0.0f32; n_langs];
        for b in bias.iter_mut() {
            input.read_exact(&mut u32buf)?;
            *b = f32::from_le_bytes(u32buf);
        }

        input.read_exact(&mut byte)?;
        let entries = byte[0] as usize;
        let mut script_prior = BTreeMap::new();
        for _ in 0..entries {
            input.read_exact(&mut byte)?;
            let class = script_from_id(byte[0])?;
            input.read_exact(&mut byte)?;
            let n = byte[0] as usize;
            let mut langs = Vec::with_capacity(n);
            for _ in 0..n {
                input.read_exact(&mut byte)?;
                let idx = byte[0] as usize;
                if idx >= languages.len() {
                    return Err(Error::format("script prior references unknown language"));
                }
                langs.push(languages[idx]);
            }
            script_prior.insert(class, langs);
        }

        Ok(LangIdModel {
            languages,
            min_order,
            max_order,
            bucket_count,
            weights,
            bias,
            script_prior,
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

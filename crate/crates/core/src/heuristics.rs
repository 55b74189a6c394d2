//! Rule-based content filters.
//!
//! Six checks per document, each governed by an empirically tuned threshold:
//! word count in `[min_words, max_words]`, NSFW word ratio, stop-word ratio,
//! AI-reference ratio, foreign-script word ratio, and duplicated word-n-gram
//! coverage. Lexicons are plain-text word lists loaded per language; a check
//! whose lexicon is missing abstains (passes) with reason `no_lexicon`
//! rather than silently discarding half a corpus.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::document::{nfc, Document};
use crate::error::{Error, Result};
use crate::lang::Lang;
use crate::script::ScriptClass;
use crate::tokenize::{tokenize_words, TokenizedText};
use crate::verdict::FilterVerdict;

pub mod filter_id {
    pub const WORD_COUNT: &str = "word_count";
    pub const NSFW: &str = "nsfw";
    pub const STOPWORDS: &str = "stopwords";
    pub const AI_REFERENCE: &str = "ai_reference";
    pub const FOREIGN_SCRIPT: &str = "foreign_script";
    pub const REPETITION: &str = "repetition";

    pub const ALL: [&str; 6] = [
        WORD_COUNT,
        NSFW,
        STOPWORDS,
        AI_REFERENCE,
        FOREIGN_SCRIPT,
        REPETITION,
    ];
}

/// Thresholds for the heuristic filters. Defaults carry the production
/// operating point: word count in [100, 2500], zero tolerance for NSFW and
/// AI references, stop words <= 0.6, foreign-script words <= 0.15, duplicated
/// 6-gram coverage <= 0.3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    pub min_words: usize,
    pub max_words: usize,
    pub nsfw_max: f64,
    pub stopword_max: f64,
    pub ai_max: f64,
    pub foreign_max: f64,
    pub repetition_n: usize,
    pub repetition_max: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            min_words: 100,
            max_words: 2500,
            nsfw_max: 0.0,
            stopword_max: 0.6,
            ai_max: 0.0,
            foreign_max: 0.15,
            repetition_n: 6,
            repetition_max: 0.3,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_words == 0 || self.min_words > self.max_words {
            return Err(Error::config(format!(
                "word-count bounds must satisfy 0 < min <= max, got [{}, {}]",
                self.min_words, self.max_words
            )));
        }
        for (name, v) in [
            ("nsfw_max", self.nsfw_max),
            ("stopword_max", self.stopword_max),
            ("ai_max", self.ai_max),
            ("foreign_max", self.foreign_max),
            ("repetition_max", self.repetition_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} must be in [0,1], got {v}")));
            }
        }
        if self.repetition_n < 2 {
            return Err(Error::config(format!(
                "repetition_n must be >= 2, got {}",
                self.repetition_n
            )));
        }
        Ok(())
    }
}

/// Curated word lists: NSFW and stop words per language, AI-reference terms
/// shared across languages. Entries are NFC-normalized and lowercased at
/// load time.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub nsfw: BTreeMap<Lang, HashSet<String>>,
    pub stopwords: BTreeMap<Lang, HashSet<String>>,
    pub ai_terms: HashSet<String>,
}

fn normalize_entry(raw: &str) -> Option<String> {
    let entry = raw.split('#').next().unwrap_or("").trim();
    if entry.is_empty() {
        return None;
    }
    Some(nfc(&entry.to_lowercase()))
}

fn load_word_file(path: &Path) -> Result<HashSet<String>> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(content.lines().filter_map(normalize_entry).collect())
}

impl Lexicons {
    /// Load every `nsfw.<lang>.txt`, `stopwords.<lang>.txt` and
    /// `ai_terms.txt` found under `dir`. Files for unsupported language tags
    /// are rejected; absent files simply leave that lexicon empty.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut lex = Lexicons::default();
        if !dir.is_dir() {
            return Err(Error::config(format!(
                "lexicon directory not found: {}",
                dir.display()
            )));
        }
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if !name.ends_with(".txt") {
                continue;
            }
            if name == "ai_terms.txt" {
                lex.ai_terms = load_word_file(&path)?;
                continue;
            }
            let parts: Vec<&str> = name.trim_end_matches(".txt").splitn(2, '.').collect();
            if parts.len() != 2 {
                continue;
            }
            let lang: Lang = parts[1].parse().map_err(|_| {
                Error::config(format!("lexicon file {name} has unsupported language tag"))
            })?;
            match parts[0] {
                "nsfw" => {
                    lex.nsfw.insert(lang, load_word_file(&path)?);
                }
                "stopwords" => {
                    lex.stopwords.insert(lang, load_word_file(&path)?);
                }
                other => {
                    return Err(Error::config(format!("unknown lexicon kind {other:?} in {name}")));
                }
            }
        }
        Ok(lex)
    }

    pub fn insert_nsfw(&mut self, lang: Lang, words: impl IntoIterator<Item = String>) {
        self.nsfw
            .entry(lang)
            .or_default()
            .extend(words.into_iter().filter_map(|w| normalize_entry(&w)));
    }

    pub fn insert_stopwords(&mut self, lang: Lang, words: impl IntoIterator<Item = String>) {
        self.stopwords
            .entry(lang)
            .or_default()
            .extend(words.into_iter().filter_map(|w| normalize_entry(&w)));
    }

    pub fn insert_ai_terms(&mut self, words: impl IntoIterator<Item = String>) {
        self.ai_terms
            .extend(words.into_iter().filter_map(|w| normalize_entry(&w)));
    }
}

/// Fraction of words present in `lexicon`. Zero for empty text.
pub fn lexicon_ratio(t: &TokenizedText, lexicon: &HashSet<String>) -> f64 {
    if t.counts == 0 {
        return 0.0;
    }
    let hits = t
        .words
        .iter()
        .filter(|w| lexicon.contains(&w.to_lowercase()))
        .count();
    hits as f64 / t.counts as f64
}

/// Fraction of word positions covered by at least one word n-gram occurring
/// two or more times in the text. Texts shorter than `n` words score 0.
pub fn ngram_repetition_ratio(t: &TokenizedText, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::config(format!(
            "repetition n-gram order must be >= 2, got {n}"
        )));
    }
    let m = t.counts;
    if m < n {
        return Ok(0.0);
    }
    let mut seen: BTreeMap<&[String], Vec<usize>> = BTreeMap::new();
    for i in 0..=m - n {
        seen.entry(&t.words[i..i + n]).or_default().push(i);
    }
    let mut covered = vec![false; m];
    for starts in seen.values() {
        if starts.len() < 2 {
            continue;
        }
        for &i in starts {
            covered[i..i + n].iter_mut().for_each(|c| *c = true);
        }
    }
    Ok(covered.iter().filter(|&&c| c).count() as f64 / m as f64)
}

fn ratio_verdict(doc_id: &str, filter: &str, measured: f64, max: f64, reason: &str) -> FilterVerdict {
    if measured > max {
        FilterVerdict::fail(doc_id, filter, reason).with_measured(measured)
    } else {
        FilterVerdict::pass(doc_id, filter).with_measured(measured)
    }
}

fn abstain(doc_id: &str, filter: &str) -> FilterVerdict {
    FilterVerdict::pass(doc_id, filter).with_reason("no_lexicon")
}

/// Run all six heuristic checks on a document. Always emits exactly six
/// verdicts, in `filter_id::ALL` order.
pub fn run_heuristics(doc: &Document, cfg: &HeuristicConfig, lex: &Lexicons) -> Vec<FilterVerdict> {
    let t = tokenize_words(&doc.text);
    run_heuristics_tokenized(doc, &t, cfg, lex)
}

/// Same as [`run_heuristics`] but reuses an existing tokenization.
pub fn run_heuristics_tokenized(
    doc: &Document,
    t: &TokenizedText,
    cfg: &HeuristicConfig,
    lex: &Lexicons,
) -> Vec<FilterVerdict> {
    let id = doc.id.as_str();
    let mut verdicts = Vec::with_capacity(6);

    let words = t.counts;
    let in_range = words >= cfg.min_words && words <= cfg.max_words;
    verdicts.push(if in_range {
        FilterVerdict::pass(id, filter_id::WORD_COUNT).with_measured(words as f64)
    } else {
        FilterVerdict::fail(id, filter_id::WORD_COUNT, "word_count_out_of_range")
            .with_measured(words as f64)
    });

    verdicts.push(match lex.nsfw.get(&doc.target_language) {
        Some(set) if !set.is_empty() => {
            ratio_verdict(id, filter_id::NSFW, lexicon_ratio(t, set), cfg.nsfw_max, "nsfw_words")
        }
        _ => abstain(id, filter_id::NSFW),
    });

    verdicts.push(match lex.stopwords.get(&doc.target_language) {
        Some(set) if !set.is_empty() => ratio_verdict(
            id,
            filter_id::STOPWORDS,
            lexicon_ratio(t, set),
            cfg.stopword_max,
            "stopword_excess",
        ),
        _ => abstain(id, filter_id::STOPWORDS),
    });

    verdicts.push(if lex.ai_terms.is_empty() {
        abstain(id, filter_id::AI_REFERENCE)
    } else {
        ratio_verdict(
            id,
            filter_id::AI_REFERENCE,
            lexicon_ratio(t, &lex.ai_terms),
            cfg.ai_max,
            "ai_reference",
        )
    });

    let foreign = if t.counts == 0 {
        0.0
    } else {
        let other = t
            .word_scripts
            .iter()
            .filter(|&&s| s == ScriptClass::Other)
            .count();
        other as f64 / t.counts as f64
    };
    verdicts.push(ratio_verdict(
        id,
        filter_id::FOREIGN_SCRIPT,
        foreign,
        cfg.foreign_max,
        "foreign_script",
    ));

    // repetition_n is validated at config load; a bad value here still must
    // not panic mid-pipeline.
    let rep = ngram_repetition_ratio(t, cfg.repetition_n.max(2)).unwrap_or(0.0);
    verdicts.push(ratio_verdict(
        id,
        filter_id::REPETITION,
        rep,
        cfg.repetition_max,
        "ngram_repetition",
    ));

    verdicts
}

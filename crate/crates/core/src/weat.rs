//! Word Embedding Association Test.
//!
//! For target sets X, Y and attribute sets A, B:
//!
//! ```text
//! s(w, A, B)    = mean_{a in A} cos(w, a) - mean_{b in B} cos(w, b)
//! s(X, Y, A, B) = sum_{x in X} s(x, A, B) - sum_{y in Y} s(y, A, B)
//! score         = mean_x s(x, A, B) - mean_y s(y, A, B)
//! effect size   = score / popstdev_{w in X u Y} s(w, A, B)
//! ```
//!
//! The raw-sum statistic is exposed alongside the mean-gap score; the effect
//! size divides the mean gap by the population standard deviation, which for
//! same-sized target sets is bounded by [-2, 2]. Words missing from the
//! embedding vocabulary are skipped and tracked as coverage; a set with
//! under 50% coverage is an error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::document::nfc;
use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasAspect {
    Gender,
    Caste,
    Race,
    Religion,
    Region,
}

impl BiasAspect {
    pub fn name(self) -> &'static str {
        match self {
            BiasAspect::Gender => "gender",
            BiasAspect::Caste => "caste",
            BiasAspect::Race => "race",
            BiasAspect::Religion => "religion",
            BiasAspect::Region => "region",
        }
    }
}

/// Target/attribute word sets for one bias dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatSpec {
    pub name: String,
    pub aspect: BiasAspect,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl WeatSpec {
    pub fn validate(&self) -> Result<()> {
        for (label, set) in [("X", &self.x), ("Y", &self.y), ("A", &self.a), ("B", &self.b)] {
            if set.is_empty() {
                return Err(Error::config(format!(
                    "WEAT spec {:?}: set {label} is empty",
                    self.name
                )));
            }
        }
        let sets = [&self.x, &self.y, &self.a, &self.b];
        let labels = ["X", "Y", "A", "B"];
        for i in 0..4 {
            for j in i + 1..4 {
                if let Some(dup) = sets[i].iter().find(|w| sets[j].contains(w)) {
                    return Err(Error::config(format!(
                        "WEAT spec {:?}: sets {} and {} share word {dup:?}",
                        self.name, labels[i], labels[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Swap targets (X <-> Y); the statistic and effect size negate.
    pub fn swapped_targets(&self) -> WeatSpec {
        WeatSpec {
            name: format!("{}-swapped", self.name),
            aspect: self.aspect,
            x: self.y.clone(),
            y: self.x.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        }
    }
}

/// Result of one WEAT run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatResult {
    /// Raw sum statistic s(X, Y, A, B).
    pub statistic: f64,
    /// Mean association gap mean_x - mean_y.
    pub score: f64,
    /// score / population stdev; None when the stdev is zero.
    pub effect_size: Option<f64>,
    /// s(w, A, B) per present target word.
    pub per_word: BTreeMap<String, f64>,
    /// Fraction of all spec words present in the vocabulary.
    pub coverage: f64,
    /// Missing words per set label.
    pub missing: BTreeMap<String, Vec<String>>,
}

fn present<'a>(set: &'a [String], space: &EmbeddingSpace) -> (Vec<&'a str>, Vec<String>) {
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for w in set {
        if space.contains(w) {
            found.push(w.as_str());
        } else {
            missing.push(w.clone());
        }
    }
    (found, missing)
}

/// Differential association of one word with the attribute sets, over the
/// attribute words present in the vocabulary.
pub fn association(w: &str, a: &[String], b: &[String], space: &EmbeddingSpace) -> Result<f64> {
    if !space.contains(w) {
        return Err(Error::input(format!("word {w:?} missing from embedding vocabulary")));
    }
    let (a_found, _) = present(a, space);
    let (b_found, _) = present(b, space);
    if a_found.is_empty() || b_found.is_empty() {
        return Err(Error::input(
            "both attribute sets need at least one in-vocabulary word",
        ));
    }
    let mean = |attrs: &[&str]| -> f64 {
        let sum: f64 = attrs
            .iter()
            .map(|attr| space.cosine(w, attr).unwrap_or(0.0))
            .sum();
        sum / attrs.len() as f64
    };
    Ok(mean(&a_found) - mean(&b_found))
}

fn population_stdev(values: &[f64]) -> f64 {
    // Canonical summation order: the stdev of a multiset must not depend on
    // which set the values came from (exact X/Y swap antisymmetry).
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Run the test for one spec. Errors when any set drops below 50% coverage.
pub fn weat(space: &EmbeddingSpace, spec: &WeatSpec) -> Result<WeatResult> {
    spec.validate()?;

    let (x_found, x_missing) = present(&spec.x, space);
    let (y_found, y_missing) = present(&spec.y, space);
    let (a_found, a_missing) = present(&spec.a, space);
    let (b_found, b_missing) = present(&spec.b, space);

    let mut missing = BTreeMap::new();
    for (label, miss) in [("X", &x_missing), ("Y", &y_missing), ("A", &a_missing), ("B", &b_missing)] {
        if !miss.is_empty() {
            missing.insert(label.to_string(), miss.clone());
        }
    }

    for (label, found, total) in [
        ("X", x_found.len(), spec.x.len()),
        ("Y", y_found.len(), spec.y.len()),
        ("A", a_found.len(), spec.a.len()),
        ("B", b_found.len(), spec.b.len()),
    ] {
        if (found as f64) < 0.5 * total as f64 {
            return Err(Error::input(format!(
                "WEAT spec {:?}: set {label} coverage {found}/{total} below 50%; missing: {:?}",
                spec.name,
                missing.get(label).cloned().unwrap_or_default()
            )));
        }
    }

    let total_words = spec.x.len() + spec.y.len() + spec.a.len() + spec.b.len();
    let total_found = x_found.len() + y_found.len() + a_found.len() + b_found.len();
    let coverage = total_found as f64 / total_words as f64;

    let mut per_word = BTreeMap::new();
    let mut x_scores = Vec::with_capacity(x_found.len());
    for &x in &x_found {
        let s = association(x, &spec.a, &spec.b, space)?;
        per_word.insert(x.to_string(), s);
        x_scores.push(s);
    }
    let mut y_scores = Vec::with_capacity(y_found.len());
    for &y in &y_found {
        let s = association(y, &spec.a, &spec.b, space)?;
        per_word.insert(y.to_string(), s);
        y_scores.push(s);
    }

    let sum_x: f64 = x_scores.iter().sum();
    let sum_y: f64 = y_scores.iter().sum();
    let mean_x = sum_x / x_scores.len() as f64;
    let mean_y = sum_y / y_scores.len() as f64;
    let score = mean_x - mean_y;

    let all: Vec<f64> = x_scores.iter().chain(y_scores.iter()).copied().collect();
    let stdev = population_stdev(&all);
    let effect_size = if stdev > 0.0 { Some(score / stdev) } else { None };
    if effect_size.is_none() {
        log::warn!(
            "WEAT spec {:?}: all associations equal; effect size undefined",
            spec.name
        );
    }

    Ok(WeatResult {
        statistic: sum_x - sum_y,
        score,
        effect_size,
        per_word,
        coverage,
        missing,
    })
}

/// One audited spec: the result or the error message, never aborting the
/// other specs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditEntry {
    pub name: String,
    pub aspect: BiasAspect,
    pub result: std::result::Result<WeatResult, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub entries: Vec<AuditEntry>,
}

/// Run every spec, preserving order and isolating per-spec failures.
pub fn audit(space: &EmbeddingSpace, specs: &[WeatSpec]) -> Result<AuditReport> {
    if specs.is_empty() {
        return Err(Error::input("no WEAT specs to audit"));
    }
    let entries = specs
        .iter()
        .map(|spec| AuditEntry {
            name: spec.name.clone(),
            aspect: spec.aspect,
            result: weat(space, spec).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(AuditReport { entries })
}

impl AuditReport {
    /// Summary plus per-target-word association table, one block per spec.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let _ = writeln!(out, "== {} ({}) ==", entry.name, entry.aspect.name());
            match &entry.result {
                Ok(r) => {
                    let effect = r
                        .effect_size
                        .map(|e| format!("{e:.4}"))
                        .unwrap_or_else(|| "undefined".to_string());
                    let _ = writeln!(
                        out,
                        "effect_size={effect} score={:.4} statistic={:.4} coverage={:.2}",
                        r.score, r.statistic, r.coverage
                    );
                    let _ = writeln!(out, "{:<24} {:>12}", "target word", "association");
                    for (word, s) in &r.per_word {
                        let _ = writeln!(out, "{word:<24} {s:>12.4}");
                    }
                    for (set, words) in &r.missing {
                        let _ = writeln!(out, "missing from {set}: {}", words.join(", "));
                    }
                }
                Err(e) => {
                    let _ = writeln!(out, "error: {e}");
                }
            }
            let _ = writeln!(out);
        }
        out
    }
}

// --- word-set files -------------------------------------------------------

/// Manifest entry mapping one aspect to its four word-set files (paths
/// relative to the manifest's directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatManifestEntry {
    pub name: String,
    pub aspect: BiasAspect,
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
}

fn load_word_set(path: &Path) -> Result<Vec<String>> {
    let content = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut words = Vec::new();
    for line in content.lines() {
        let word = line.split('#').next().unwrap_or("").trim();
        if !word.is_empty() {
            words.push(nfc(word));
        }
    }
    Ok(words)
}

/// Load specs from a JSON manifest: `[{name, aspect, x, y, a, b}, ...]`.
pub fn load_weat_specs(manifest_path: &Path) -> Result<Vec<WeatSpec>> {
    let content = fs::read_to_string(manifest_path)?;
    let entries: Vec<WeatManifestEntry> = serde_json::from_str(&content)
        .map_err(|e| Error::format(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut specs = Vec::new();
    for entry in entries {
        let spec = WeatSpec {
            name: entry.name,
            aspect: entry.aspect,
            x: load_word_set(&base.join(&entry.x))?,
            y: load_word_set(&base.join(&entry.y))?,
            a: load_word_set(&base.join(&entry.a))?,
            b: load_word_set(&base.join(&entry.b))?,
        };
        spec.validate()?;
        specs.push(spec);
    }
    Ok(specs)
}

//! Counter-stereotypical augmentation.
//!
//! For every target term, find up to `k` documents where the term co-occurs
//! in-window with the stereotypical attribute words (X terms with A words,
//! Y terms with B words), rewrite each selected document by swapping
//! attribute words between the two sets, and append the rewrites to the
//! corpus. Retraining embeddings on the augmented corpus is expected to
//! move the WEAT effect size toward zero.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::script::{classify_codepoint, ScriptClass};
use crate::tokenize::tokenize_words;
use crate::weat::WeatSpec;

/// Pluggable counter-example writer. The deterministic attribute swap is the
/// default; an external completion endpoint can stand in for higher-quality
/// rewrites.
pub trait CounterRewriter {
    fn rewrite(&self, doc: &Document, spec: &WeatSpec) -> Result<String>;
}

/// One selection that produced a counter-example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationEdit {
    pub source_id: String,
    pub counter_id: String,
    pub target_term: String,
}

#[derive(Debug, Clone, Default)]
pub struct MitigationOutcome {
    pub corpus: Vec<Document>,
    pub manifest: Vec<MitigationEdit>,
}

/// Index-paired A<->B swap map (cycling over the shorter set).
fn swap_map(spec: &WeatSpec) -> BTreeMap<&str, &str> {
    let mut map = BTreeMap::new();
    for (i, a) in spec.a.iter().enumerate() {
        map.insert(a.as_str(), spec.b[i % spec.b.len()].as_str());
    }
    for (i, b) in spec.b.iter().enumerate() {
        map.insert(b.as_str(), spec.a[i % spec.a.len()].as_str());
    }
    map
}

fn swap_attributes(text: &str, map: &BTreeMap<&str, &str>) -> (String, usize) {
    let mut swapped = 0usize;
    let rewritten: Vec<String> = text
        .split_whitespace()
        .map(|run| {
            let core =
                run.trim_matches(|c| classify_codepoint(c) == ScriptClass::Punctuation);
            if core.is_empty() {
                return run.to_string();
            }
            match map.get(core) {
                Some(replacement) => {
                    swapped += 1;
                    run.replacen(core, replacement, 1)
                }
                None => run.to_string(),
            }
        })
        .collect();
    (rewritten.join(" "), swapped)
}

/// True when `term` occurs within `window` words of any word in `attrs`.
fn cooccurs(words: &[String], term: &str, attrs: &BTreeSet<&str>, window: usize) -> bool {
    let term_positions: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| w.as_str() == term)
        .map(|(i, _)| i)
        .collect();
    if term_positions.is_empty() {
        return false;
    }
    for (j, w) in words.iter().enumerate() {
        if attrs.contains(w.as_str()) {
            for &i in &term_positions {
                if i.abs_diff(j) <= window {
                    return true;
                }
            }
        }
    }
    false
}

/// Deterministic attribute-swap mitigation. Returns the augmented corpus
/// (original documents plus counter-examples) and the manifest of edits.
/// With no biased instances the corpus comes back unchanged and the
/// manifest empty.
pub fn mitigate(
    corpus: &[Document],
    spec: &WeatSpec,
    k: usize,
    window: usize,
    rewriter: Option<&dyn CounterRewriter>,
) -> Result<MitigationOutcome> {
    if k == 0 {
        return Err(Error::config("mitigation requires k >= 1 instances per term"));
    }
    spec.validate()?;

    let tokenized: Vec<Vec<String>> = corpus
        .iter()
        .map(|d| tokenize_words(&d.text).words)
        .collect();
    let a_set: BTreeSet<&str> = spec.a.iter().map(|s| s.as_str()).collect();
    let b_set: BTreeSet<&str> = spec.b.iter().map(|s| s.as_str()).collect();

    // target term -> stereotypical attribute set it is audited against
    let targets: Vec<(&str, &BTreeSet<&str>)> = spec
        .x
        .iter()
        .map(|x| (x.as_str(), &a_set))
        .chain(spec.y.iter().map(|y| (y.as_str(), &b_set)))
        .collect();

    let mut selected: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (term, attrs) in targets {
        let mut taken = 0usize;
        for (idx, words) in tokenized.iter().enumerate() {
            if taken >= k {
                break;
            }
            if cooccurs(words, term, attrs, window) {
                selected.entry(idx).or_default().push(term.to_string());
                taken += 1;
            }
        }
    }

    let mut outcome = MitigationOutcome {
        corpus: corpus.to_vec(),
        manifest: Vec::new(),
    };
    if selected.is_empty() {
        return Ok(outcome);
    }

    let map = swap_map(spec);
    for (counter_seq, (idx, terms)) in selected.into_iter().enumerate() {
        let source = &corpus[idx];
        let counter_id = format!("{}::counter{}", source.id, counter_seq);
        let text = match rewriter {
            Some(r) => r.rewrite(source, spec)?,
            None => {
                let (text, swapped) = swap_attributes(&source.text, &map);
                if swapped == 0 {
                    continue;
                }
                text
            }
        };
        let mut counter = source.clone();
        counter.id = counter_id.clone();
        counter.text = text;
        counter.source = Some("mitigation".to_string());
        counter
            .metadata
            .insert("counter_of".to_string(), source.id.clone());
        outcome.corpus.push(counter);
        for term in terms {
            outcome.manifest.push(MitigationEdit {
                source_id: source.id.clone(),
                counter_id: counter_id.clone(),
                target_term: term,
            });
        }
    }
    Ok(outcome)
}

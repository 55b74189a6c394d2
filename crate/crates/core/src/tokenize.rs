//! Word tokenization shared by every filter.
//!
//! A word is a maximal run of non-whitespace codepoints with leading and
//! trailing `Punctuation`-class codepoints stripped; runs that strip to
//! nothing are dropped. A word's dominant script is the script class holding
//! a strict majority among its script-voting codepoints (everything except
//! digits and punctuation); ties and missing majorities resolve to `Other`,
//! and vote-less words resolve to `Digit` when they contain a digit, else
//! `Other`.

use std::collections::BTreeMap;

use crate::script::{classify_codepoint, ScriptClass};

/// Tokenized view of a text: words plus each word's dominant script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedText {
    pub words: Vec<String>,
    pub word_scripts: Vec<ScriptClass>,
    pub counts: usize,
}

impl TokenizedText {
    pub fn is_empty(&self) -> bool {
        self.counts == 0
    }
}

/// Dominant script of a single (already stripped) word.
pub fn dominant_script(word: &str) -> ScriptClass {
    let mut votes: BTreeMap<ScriptClass, usize> = BTreeMap::new();
    let mut total = 0usize;
    let mut saw_digit = false;
    for c in word.chars() {
        let class = classify_codepoint(c);
        if class == ScriptClass::Digit {
            saw_digit = true;
        }
        if class.is_script() {
            *votes.entry(class).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return if saw_digit {
            ScriptClass::Digit
        } else {
            ScriptClass::Other
        };
    }
    for (class, n) in votes {
        if 2 * n > total {
            return class;
        }
    }
    ScriptClass::Other
}

fn strip_punctuation(run: &str) -> &str {
    run.trim_matches(|c| classify_codepoint(c) == ScriptClass::Punctuation)
}

/// Split text into words and classify each word's dominant script.
///
/// Deterministic; empty input yields zero words.
pub fn tokenize_words(text: &str) -> TokenizedText {
    let mut words = Vec::new();
    let mut word_scripts = Vec::new();
    for run in text.split_whitespace() {
        let word = strip_punctuation(run);
        if word.is_empty() {
            continue;
        }
        words.push(word.to_string());
        word_scripts.push(dominant_script(word));
    }
    let counts = words.len();
    TokenizedText {
        words,
        word_scripts,
        counts,
    }
}

/// Share of each script class over the word count.
///
/// Values sum to 1 for non-empty inputs; the map is empty when there are no
/// words.
pub fn script_profile(t: &TokenizedText) -> BTreeMap<ScriptClass, f64> {
    let mut profile = BTreeMap::new();
    if t.counts == 0 {
        return profile;
    }
    let total = t.counts as f64;
    let mut counts: BTreeMap<ScriptClass, usize> = BTreeMap::new();
    for &s in &t.word_scripts {
        *counts.entry(s).or_insert(0) += 1;
    }
    for (class, n) in counts {
        profile.insert(class, n as f64 / total);
    }
    profile
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn devanagari_sentence() {
        let t = tokenize_words("नमस्ते दुनिया");
        assert_eq!(t.counts, 2);
        assert_eq!(
            t.word_scripts,
            vec![ScriptClass::Devanagari, ScriptClass::Devanagari]
        );
    }

    #[test]
    fn empty_text_yields_no_words() {
        let t = tokenize_words("");
        assert_eq!(t.counts, 0);
        assert!(script_profile(&t).is_empty());
    }

    #[test]
    fn mixed_scripts_per_word() {
        let t = tokenize_words("abc मन");
        assert_eq!(t.words, vec!["abc", "मन"]);
        assert_eq!(
            t.word_scripts,
            vec![ScriptClass::Latin, ScriptClass::Devanagari]
        );
    }

    #[test]
    fn punctuation_is_stripped_both_ends() {
        let t = tokenize_words("\"hello,\" (दुनिया)। --- 42!");
        assert_eq!(t.words, vec!["hello", "दुनिया", "42"]);
        assert_eq!(t.word_scripts[2], ScriptClass::Digit);
    }

    #[test]
    fn interior_punctuation_kept() {
        let t = tokenize_words("state-of-the-art");
        assert_eq!(t.words, vec!["state-of-the-art"]);
        assert_eq!(t.word_scripts[0], ScriptClass::Latin);
    }

    #[test]
    fn mixed_script_tie_goes_to_other() {
        // 5 Latin letters vs 5 Devanagari codepoints: no strict majority.
        assert_eq!(dominant_script("COVID-19मरीज़"), ScriptClass::Other);
    }

    #[test]
    fn profile_ratios() {
        let t = tokenize_words("one two three मन");
        let p = script_profile(&t);
        assert_eq!(p[&ScriptClass::Latin], 0.75);
        assert_eq!(p[&ScriptClass::Devanagari], 0.25);
    }

    proptest! {
        #[test]
        fn tokenization_is_deterministic(text in "\\PC{0,200}") {
            prop_assert_eq!(tokenize_words(&text), tokenize_words(&text));
        }

        #[test]
        fn profile_sums_to_one(text in "\\PC{0,200}") {
            let t = tokenize_words(&text);
            let p = script_profile(&t);
            if t.counts > 0 {
                let sum: f64 = p.values().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                for v in p.values() {
                    prop_assert!((0.0..=1.0).contains(v));
                }
            } else {
                prop_assert!(p.is_empty());
            }
        }
    }
}

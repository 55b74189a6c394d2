use std::collections::BTreeMap;

use icu_normalizer::ComposingNormalizerBorrowed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Lang;

/// One text unit flowing through generation and filtering.
///
/// `id` must be non-empty and unique within a pipeline run (uniqueness is the
/// producer's contract; the pipeline does not dedupe).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(rename = "language")]
    pub target_language: Lang,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, lang: Lang) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::input("document id must be non-empty"));
        }
        Ok(Document {
            id,
            text: text.into(),
            target_language: lang,
            style: None,
            source: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_style(mut self, style: impl Into<String>) -> Self {
        self.style = Some(style.into());
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    /// NFC-normalize the text in place. Applied once at ingestion.
    pub fn normalize_nfc(&mut self) {
        let nfc = ComposingNormalizerBorrowed::new_nfc();
        if !nfc.is_normalized(&self.text) {
            self.text = nfc.normalize(&self.text).into_owned();
        }
    }
}

/// NFC normalization for free-standing strings (lexicon entries, word sets).
pub fn nfc(s: &str) -> String {
    ComposingNormalizerBorrowed::new_nfc()
        .normalize(s)
        .into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_id() {
        assert!(Document::new("", "text", Lang::Hindi).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let mut doc = Document::new("d1", "कुछ पाठ", Lang::Hindi)
            .unwrap()
            .with_style("wikihow");
        doc.metadata.insert("model".into(), "m1".into());
        let line = serde_json::to_string(&doc).unwrap();
        assert!(line.contains("\"language\":\"hi\""));
        let back: Document = serde_json::from_str(&line).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn nfc_composes_decomposed_text() {
        let mut doc = Document::new("d1", "e\u{0301}", Lang::English).unwrap();
        doc.normalize_nfc();
        assert_eq!(doc.text, "\u{00E9}");
    }
}

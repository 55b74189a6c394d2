use serde::{Deserialize, Serialize};

/// Outcome of one filter applied to one document.
///
/// `measured` is present whenever the filter compared a measured quantity
/// against a threshold; `reason` is set on failures and on abstentions that
/// deserve an audit trail (e.g. `no_lexicon`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub doc_id: String,
    pub filter: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl FilterVerdict {
    pub fn pass(doc_id: &str, filter: &str) -> Self {
        FilterVerdict {
            doc_id: doc_id.to_string(),
            filter: filter.to_string(),
            passed: true,
            measured: None,
            reason: None,
        }
    }

    pub fn fail(doc_id: &str, filter: &str, reason: &str) -> Self {
        FilterVerdict {
            doc_id: doc_id.to_string(),
            filter: filter.to_string(),
            passed: false,
            measured: None,
            reason: Some(reason.to_string()),
        }
    }

    pub fn with_measured(mut self, measured: f64) -> Self {
        self.measured = Some(measured);
        self
    }

    pub fn with_reason(mut self, reason: &str) -> Self {
        self.reason = Some(reason.to_string());
        self
    }
}

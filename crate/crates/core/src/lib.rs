//! Multilingual synthetic-corpus toolkit: prompt-driven text generation via
//! pluggable completion endpoints, plus the quality stack that filters the
//! result — language-consistency checks, heuristic content filters, 5-gram
//! Kneser-Ney perplexity filtering, a linear quality classifier, and
//! WEAT-based bias auditing with a mitigation loop.

pub mod classifier;
pub mod client;
pub mod document;
pub mod embedding;
pub mod error;
pub mod hashing;
pub mod heuristics;
pub mod ingest;
pub mod lang;
pub mod langid;
pub mod mitigate;
pub mod ngram;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod routing;
pub mod script;
pub mod tokenize;
pub mod topics;
pub mod verdict;
pub mod weat;

pub use document::Document;
pub use error::{Error, Result};
pub use lang::Lang;
pub use script::{classify_codepoint, ScriptClass};
pub use tokenize::{script_profile, tokenize_words, TokenizedText};
pub use verdict::FilterVerdict;

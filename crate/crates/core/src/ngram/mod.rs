//! 5-gram language modeling with modified Kneser-Ney smoothing, used for
//! perplexity-based fluency filtering.
//!
//! Conventions follow the usual word-level n-gram toolchain: sentences are
//! padded with `order - 1` `<s>` markers and one `</s>`, out-of-vocabulary
//! words map to `<unk>`, `</s>` is scored but `<s>` is not, and perplexity is
//! `10^(-mean log10 P)`.

mod arpa;
mod counts;
mod io;
mod model;

pub use arpa::write_arpa;
pub use counts::{count_ngrams, count_ngrams_from_texts, NgramCounts, Vocab, BOS, EOS, UNK};
pub use model::{
    calibrate_threshold, estimate_kneser_ney, fluency_check, nearest_rank, Discounts,
    KneserNeyLM, PerplexityThresholds, FLUENCY_FILTER,
};

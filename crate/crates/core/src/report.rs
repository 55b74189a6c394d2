//! Discard-rate aggregation and rendering.
//!
//! Per (language x filter) failure counts and rates over that language's
//! input documents, with a totals row, plus document and token
//! reconciliation (input = kept + discarded). Rates render as percentages
//! with two decimals, in both TSV and an aligned table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lang::Lang;
use crate::pipeline::RecordVerdict;

/// Report columns in presentation order: filter id -> column header.
pub const REPORT_COLUMNS: [(&str, &str); 9] = [
    (crate::langid::LANGUAGE_FILTER, "language_mismatch"),
    (crate::heuristics::filter_id::REPETITION, "repetition"),
    (crate::heuristics::filter_id::WORD_COUNT, "length"),
    (crate::heuristics::filter_id::NSFW, "nsfw_words"),
    (crate::heuristics::filter_id::STOPWORDS, "stop_words"),
    (crate::heuristics::filter_id::AI_REFERENCE, "ai_words"),
    (crate::heuristics::filter_id::FOREIGN_SCRIPT, "non_latin_indic"),
    (crate::ngram::FLUENCY_FILTER, "high_perplexity"),
    (crate::classifier::QUALITY_FILTER, "low_quality"),
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangStats {
    pub input: u64,
    pub kept: u64,
    pub discarded: u64,
    pub tokens_input: u64,
    pub tokens_kept: u64,
    pub tokens_discarded: u64,
    /// filter id -> documents failing that filter
    pub failures: BTreeMap<String, u64>,
}

impl LangStats {
    fn add(&mut self, v: &RecordVerdict) {
        self.input += 1;
        self.tokens_input += v.tokens;
        if v.kept {
            self.kept += 1;
            self.tokens_kept += v.tokens;
        } else {
            self.discarded += 1;
            self.tokens_discarded += v.tokens;
        }
        for filter in v.failed_filters() {
            *self.failures.entry(filter.to_string()).or_insert(0) += 1;
        }
    }

    fn merge(&mut self, other: &LangStats) {
        self.input += other.input;
        self.kept += other.kept;
        self.discarded += other.discarded;
        self.tokens_input += other.tokens_input;
        self.tokens_kept += other.tokens_kept;
        self.tokens_discarded += other.tokens_discarded;
        for (filter, count) in &other.failures {
            *self.failures.entry(filter.clone()).or_insert(0) += count;
        }
    }

    /// Failure rate for a filter as a fraction of this row's input.
    pub fn rate(&self, filter: &str) -> f64 {
        if self.input == 0 {
            return 0.0;
        }
        self.failures.get(filter).copied().unwrap_or(0) as f64 / self.input as f64
    }

    /// Overall discard rate as a fraction.
    pub fn discard_rate(&self) -> f64 {
        if self.input == 0 {
            return 0.0;
        }
        self.discarded as f64 / self.input as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardReport {
    pub per_language: BTreeMap<Lang, LangStats>,
    pub totals: LangStats,
}

impl DiscardReport {
    pub fn add_verdict(&mut self, v: &RecordVerdict) {
        self.per_language.entry(v.language).or_default().add(v);
        self.totals.add(v);
    }

    /// Associative, commutative merge of partial reports.
    pub fn merge(mut self, other: DiscardReport) -> DiscardReport {
        for (lang, stats) in &other.per_language {
            self.per_language.entry(*lang).or_default().merge(stats);
        }
        self.totals.merge(&other.totals);
        self
    }

    fn rows(&self) -> Vec<(String, &LangStats)> {
        let mut rows: Vec<(String, &LangStats)> = self
            .per_language
            .iter()
            .map(|(lang, stats)| (lang.tag().to_string(), stats))
            .collect();
        rows.push(("overall".to_string(), &self.totals));
        rows
    }

    /// TSV with header; rates as `%.2f` percentages.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str("language\tdocs\tkept\tdiscarded\tdiscard_rate\ttokens\ttokens_kept");
        for (_, column) in REPORT_COLUMNS {
            out.push('\t');
            out.push_str(column);
        }
        out.push('\n');
        for (label, stats) in self.rows() {
            let _ = write!(
                out,
                "{label}\t{}\t{}\t{}\t{:.2}\t{}\t{}",
                stats.input,
                stats.kept,
                stats.discarded,
                stats.discard_rate() * 100.0,
                stats.tokens_input,
                stats.tokens_kept,
            );
            for (filter, _) in REPORT_COLUMNS {
                let _ = write!(out, "\t{:.2}", stats.rate(filter) * 100.0);
            }
            out.push('\n');
        }
        out
    }

    /// Aligned table for terminals.
    pub fn render_pretty(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>9} {:>9} {:>8} {:>12}",
            "lang", "docs", "kept", "discard", "rate%", "tokens"
        );
        for (label, stats) in self.rows() {
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>9} {:>9} {:>8.2} {:>12}",
                label,
                stats.input,
                stats.kept,
                stats.discarded,
                stats.discard_rate() * 100.0,
                stats.tokens_input
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "violation rates (% of language input):");
        let _ = write!(out, "{:<8}", "lang");
        for (_, column) in REPORT_COLUMNS {
            let _ = write!(out, " {column:>17}");
        }
        let _ = writeln!(out);
        for (label, stats) in self.rows() {
            let _ = write!(out, "{label:<8}");
            for (filter, _) in REPORT_COLUMNS {
                let _ = write!(out, " {:>17.2}", stats.rate(filter) * 100.0);
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Fold a verdict stream into a report.
pub fn aggregate_report<'a, I>(verdicts: I) -> DiscardReport
where
    I: IntoIterator<Item = &'a RecordVerdict>,
{
    let mut report = DiscardReport::default();
    for v in verdicts {
        report.add_verdict(v);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::filter_id;
    use crate::verdict::FilterVerdict;

    fn verdict(id: &str, lang: Lang, tokens: u64, fails: &[&str]) -> RecordVerdict {
        let verdicts: Vec<FilterVerdict> = REPORT_COLUMNS
            .iter()
            .map(|(filter, _)| {
                if fails.contains(filter) {
                    FilterVerdict::fail(id, filter, "planted")
                } else {
                    FilterVerdict::pass(id, filter)
                }
            })
            .collect();
        let kept = fails.is_empty();
        RecordVerdict {
            doc_id: id.to_string(),
            language: lang,
            tokens,
            verdicts,
            kept,
            first_failure: fails.first().map(|s| s.to_string()),
        }
    }

    #[test]
    fn planted_rates_reproduce() {
        // 10 Hindi docs, 3 fail word count.
        let mut verdicts = Vec::new();
        for i in 0..10 {
            let fails: &[&str] = if i < 3 { &[filter_id::WORD_COUNT] } else { &[] };
            verdicts.push(verdict(&format!("d{i}"), Lang::Hindi, 100, fails));
        }
        let report = aggregate_report(verdicts.iter());
        let hi = &report.per_language[&Lang::Hindi];
        assert_eq!(hi.input, 10);
        assert_eq!(hi.kept, 7);
        assert_eq!(hi.discarded, 3);
        assert!((hi.rate(filter_id::WORD_COUNT) - 0.3).abs() < 1e-12);
        assert_eq!(hi.tokens_input, 1000);
        assert_eq!(hi.tokens_kept, 700);
        let tsv = report.to_tsv();
        assert!(tsv.contains("30.00"), "{tsv}");
    }

    #[test]
    fn empty_report_is_all_zero() {
        let report = aggregate_report(std::iter::empty());
        assert_eq!(report.totals, LangStats::default());
        let tsv = report.to_tsv();
        assert!(tsv.lines().count() >= 2); // header + overall row
    }

    #[test]
    fn nine_columns_in_order() {
        let headers: Vec<&str> = REPORT_COLUMNS.iter().map(|(_, c)| *c).collect();
        assert_eq!(
            headers,
            vec![
                "language_mismatch",
                "repetition",
                "length",
                "nsfw_words",
                "stop_words",
                "ai_words",
                "non_latin_indic",
                "high_perplexity",
                "low_quality",
            ]
        );
        let report = aggregate_report(std::iter::empty());
        let header_line = report.to_tsv().lines().next().unwrap().to_string();
        for column in headers {
            assert!(header_line.contains(column));
        }
    }

    #[test]
    fn merge_is_associative_and_commutative() {
        let a: Vec<RecordVerdict> = (0..7)
            .map(|i| verdict(&format!("a{i}"), Lang::Tamil, 10, if i % 2 == 0 { &["nsfw"] } else { &[] }))
            .collect();
        let b: Vec<RecordVerdict> = (0..5)
            .map(|i| verdict(&format!("b{i}"), Lang::Hindi, 20, if i % 3 == 0 { &["quality"] } else { &[] }))
            .collect();
        let c: Vec<RecordVerdict> = (0..3)
            .map(|i| verdict(&format!("c{i}"), Lang::Tamil, 30, &[]))
            .collect();

        let whole = aggregate_report(a.iter().chain(b.iter()).chain(c.iter()));
        let ra = aggregate_report(a.iter());
        let rb = aggregate_report(b.iter());
        let rc = aggregate_report(c.iter());

        let left = ra.clone().merge(rb.clone()).merge(rc.clone());
        let right = ra.merge(rb.merge(rc));
        assert_eq!(left, whole);
        assert_eq!(right, whole);
    }

    #[test]
    fn counts_reconcile() {
        let verdicts: Vec<RecordVerdict> = (0..20)
            .map(|i| {
                let fails: &[&str] = match i % 4 {
                    0 => &[filter_id::NSFW, filter_id::STOPWORDS],
                    1 => &[filter_id::WORD_COUNT],
                    _ => &[],
                };
                verdict(&format!("d{i}"), Lang::Telugu, 5, fails)
            })
            .collect();
        let report = aggregate_report(verdicts.iter());
        let t = &report.totals;
        assert_eq!(t.input, t.kept + t.discarded);
        assert_eq!(t.tokens_input, t.tokens_kept + t.tokens_discarded);
        // A doc can fail several filters: per-filter failures can exceed
        // the discarded count.
        let total_failures: u64 = t.failures.values().sum();
        assert!(total_failures >= t.discarded);
    }
}

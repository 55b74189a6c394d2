//! Streaming filter orchestration.
//!
//! Documents fan out over a bounded queue to stateless workers sharing
//! read-only models; results fan back in and are re-ordered by sequence
//! number, so outputs preserve input order and the verdict multiset is
//! independent of `worker_count`. By default every filter stage evaluates
//! even after a failure (full verdict vector for per-filter rate reporting);
//! `fail_fast` stops after the first failing stage.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{quality_check, LinearTextClassifier};
use crate::document::Document;
use crate::error::{Error, Result};
use crate::heuristics::{run_heuristics_tokenized, HeuristicConfig, Lexicons};
use crate::lang::Lang;
use crate::langid::{language_consistency_check, LangIdModel};
use crate::ngram::{fluency_check, KneserNeyLM, PerplexityThresholds};
use crate::tokenize::tokenize_words;
use crate::verdict::FilterVerdict;

pub const FILTER_ERROR: &str = "filter_error";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStage {
    Language,
    Heuristics,
    Perplexity,
    Classifier,
}

impl FilterStage {
    pub const DEFAULT_ORDER: [FilterStage; 4] = [
        FilterStage::Language,
        FilterStage::Heuristics,
        FilterStage::Perplexity,
        FilterStage::Classifier,
    ];
}

/// Model and lexicon locations, resolved and loaded at startup (fail fast).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelPaths {
    pub langid: Option<PathBuf>,
    pub ngram: BTreeMap<Lang, PathBuf>,
    pub classifier: BTreeMap<Lang, PathBuf>,
    pub lexicon_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub worker_count: usize,
    pub min_lid_confidence: f64,
    pub fail_fast: bool,
    pub filter_order: Vec<FilterStage>,
    pub heuristic: HeuristicConfig,
    pub thresholds: PerplexityThresholds,
    pub models: ModelPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            worker_count: 1,
            min_lid_confidence: 0.65,
            fail_fast: false,
            filter_order: FilterStage::DEFAULT_ORDER.to_vec(),
            heuristic: HeuristicConfig::default(),
            thresholds: PerplexityThresholds::default(),
            models: ModelPaths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let mut cfg: PipelineConfig = toml::from_str(&content)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        // Relative model paths resolve against the config file.
        if let Some(base) = path.parent() {
            let resolve = |p: &PathBuf| {
                if p.is_relative() {
                    base.join(p)
                } else {
                    p.clone()
                }
            };
            cfg.models.langid = cfg.models.langid.as_ref().map(&resolve);
            cfg.models.lexicon_dir = cfg.models.lexicon_dir.as_ref().map(&resolve);
            cfg.models.ngram = cfg.models.ngram.iter().map(|(l, p)| (*l, resolve(p))).collect();
            cfg.models.classifier = cfg
                .models
                .classifier
                .iter()
                .map(|(l, p)| (*l, resolve(p)))
                .collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.worker_count == 0 {
            return Err(Error::config("worker_count must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.min_lid_confidence) {
            return Err(Error::config(format!(
                "min_lid_confidence must be in [0,1], got {}",
                self.min_lid_confidence
            )));
        }
        if self.filter_order.is_empty() {
            return Err(Error::config("filter_order must name at least one stage"));
        }
        self.heuristic.validate()?;
        self.thresholds.validate()?;
        Ok(())
    }
}

/// Read-only models shared by all workers.
#[derive(Default)]
pub struct LoadedModels {
    pub langid: Option<LangIdModel>,
    pub lms: BTreeMap<Lang, KneserNeyLM>,
    pub classifiers: BTreeMap<Lang, LinearTextClassifier>,
    pub lexicons: Lexicons,
}

impl LoadedModels {
    /// Load everything the config references; any unreadable path fails
    /// here, before documents start flowing.
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut models = LoadedModels::default();
        if let Some(path) = &cfg.models.langid {
            models.langid = Some(LangIdModel::load(path)?);
        }
        for (lang, path) in &cfg.models.ngram {
            models.lms.insert(*lang, KneserNeyLM::load(path)?);
        }
        for (lang, path) in &cfg.models.classifier {
            models.classifiers.insert(*lang, LinearTextClassifier::load(path)?);
        }
        if let Some(dir) = &cfg.models.lexicon_dir {
            models.lexicons = Lexicons::load_dir(dir)?;
        }
        models.check_stages(cfg)?;
        Ok(models)
    }

    /// Every configured stage must have at least one model behind it.
    pub fn check_stages(&self, cfg: &PipelineConfig) -> Result<()> {
        for stage in &cfg.filter_order {
            match stage {
                FilterStage::Language if self.langid.is_none() => {
                    return Err(Error::config(
                        "filter_order includes `language` but no langid model is configured",
                    ));
                }
                FilterStage::Perplexity if self.lms.is_empty() => {
                    return Err(Error::config(
                        "filter_order includes `perplexity` but no n-gram models are configured",
                    ));
                }
                FilterStage::Classifier if self.classifiers.is_empty() => {
                    return Err(Error::config(
                        "filter_order includes `classifier` but no classifiers are configured",
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// All verdicts for one document plus bookkeeping for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordVerdict {
    pub doc_id: String,
    pub language: Lang,
    pub tokens: u64,
    pub verdicts: Vec<FilterVerdict>,
    pub kept: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
}

impl RecordVerdict {
    pub fn failed_filters(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|v| !v.passed)
            .map(|v| v.filter.as_str())
            .collect()
    }
}

/// Token counter used for report totals. Defaults to whitespace words.
pub type TokenCounter = dyn Fn(&str) -> u64 + Sync;

fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

fn error_verdict(doc: &Document, filter: &str, err: &Error) -> FilterVerdict {
    log::warn!("{}: {filter} scoring error: {err}", doc.id);
    FilterVerdict::fail(&doc.id, filter, FILTER_ERROR)
}

/// Run the configured stages over one document.
pub fn evaluate_document(
    doc: &Document,
    models: &LoadedModels,
    cfg: &PipelineConfig,
    token_counter: Option<&TokenCounter>,
) -> RecordVerdict {
    let tokens = match token_counter {
        Some(counter) => counter(&doc.text),
        None => whitespace_tokens(&doc.text),
    };
    let tokenized = tokenize_words(&doc.text);
    let mut verdicts: Vec<FilterVerdict> = Vec::with_capacity(9);

    for stage in &cfg.filter_order {
        match stage {
            FilterStage::Language => {
                let verdict = match &models.langid {
                    Some(model) => language_consistency_check(doc, model, cfg.min_lid_confidence),
                    None => error_verdict(
                        doc,
                        crate::langid::LANGUAGE_FILTER,
                        &Error::config("no langid model loaded"),
                    ),
                };
                verdicts.push(verdict);
            }
            FilterStage::Heuristics => {
                verdicts.extend(run_heuristics_tokenized(
                    doc,
                    &tokenized,
                    &cfg.heuristic,
                    &models.lexicons,
                ));
            }
            FilterStage::Perplexity => {
                let verdict = match models.lms.get(&doc.target_language) {
                    Some(lm) => fluency_check(lm, doc, &cfg.thresholds)
                        .unwrap_or_else(|e| error_verdict(doc, crate::ngram::FLUENCY_FILTER, &e)),
                    None => error_verdict(
                        doc,
                        crate::ngram::FLUENCY_FILTER,
                        &Error::config(format!("no n-gram model for {}", doc.target_language)),
                    ),
                };
                verdicts.push(verdict);
            }
            FilterStage::Classifier => {
                let verdict = match models.classifiers.get(&doc.target_language) {
                    Some(clf) => quality_check(clf, doc),
                    None => error_verdict(
                        doc,
                        crate::classifier::QUALITY_FILTER,
                        &Error::config(format!("no classifier for {}", doc.target_language)),
                    ),
                };
                verdicts.push(verdict);
            }
        }
        if cfg.fail_fast && verdicts.iter().any(|v| !v.passed) {
            break;
        }
    }

    let kept = verdicts.iter().all(|v| v.passed);
    let first_failure = verdicts.iter().find(|v| !v.passed).map(|v| v.filter.clone());
    RecordVerdict {
        doc_id: doc.id.clone(),
        language: doc.target_language,
        tokens,
        verdicts,
        kept,
        first_failure,
    }
}

/// Receives (document, verdict) pairs in input order.
pub trait VerdictSink {
    fn record(&mut self, doc: Document, verdict: RecordVerdict) -> Result<()>;
}

/// In-memory sink for tests and small runs.
#[derive(Debug, Default)]
pub struct CollectingSink {
    pub kept: Vec<Document>,
    pub discarded: Vec<Document>,
    pub verdicts: Vec<RecordVerdict>,
}

impl VerdictSink for CollectingSink {
    fn record(&mut self, doc: Document, verdict: RecordVerdict) -> Result<()> {
        if verdict.kept {
            self.kept.push(doc);
        } else {
            self.discarded.push(doc);
        }
        self.verdicts.push(verdict);
        Ok(())
    }
}

/// Streams kept/discarded/verdict records to three JSONL files. Discarded
/// documents carry a `reasons` array naming the failed filters.
pub struct JsonlSink {
    kept: BufWriter<File>,
    discarded: BufWriter<File>,
    verdicts: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(kept: &Path, discarded: &Path, verdicts: &Path) -> Result<Self> {
        Ok(JsonlSink {
            kept: BufWriter::new(File::create(kept)?),
            discarded: BufWriter::new(File::create(discarded)?),
            verdicts: BufWriter::new(File::create(verdicts)?),
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.kept.flush()?;
        self.discarded.flush()?;
        self.verdicts.flush()?;
        Ok(())
    }
}

impl VerdictSink for JsonlSink {
    fn record(&mut self, doc: Document, verdict: RecordVerdict) -> Result<()> {
        if verdict.kept {
            serde_json::to_writer(&mut self.kept, &doc)
                .map_err(|e| Error::format(e.to_string()))?;
            self.kept.write_all(b"\n")?;
        } else {
            let mut value = serde_json::to_value(&doc).map_err(|e| Error::format(e.to_string()))?;
            value["reasons"] = serde_json::Value::from(
                verdict
                    .failed_filters()
                    .into_iter()
                    .map(String::from)
                    .collect::<Vec<_>>(),
            );
            serde_json::to_writer(&mut self.discarded, &value)
                .map_err(|e| Error::format(e.to_string()))?;
            self.discarded.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut self.verdicts, &verdict)
            .map_err(|e| Error::format(e.to_string()))?;
        self.verdicts.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOutcome {
    pub input: u64,
    pub kept: u64,
    pub discarded: u64,
    pub malformed: u64,
}

/// Run the pipeline over a document stream. Input items may be `Err` for
/// malformed records (counted, never fatal unless they form a majority).
pub fn run_pipeline<I>(
    docs: I,
    models: &LoadedModels,
    cfg: &PipelineConfig,
    token_counter: Option<&TokenCounter>,
    sink: &mut dyn VerdictSink,
) -> Result<PipelineOutcome>
where
    I: Iterator<Item = Result<Document>> + Send,
{
    cfg.validate()?;
    models.check_stages(cfg)?;

    let mut outcome = PipelineOutcome::default();
    if cfg.worker_count <= 1 {
        for item in docs {
            let doc = match item {
                Ok(doc) => doc,
                Err(Error::Io(e)) => return Err(Error::Io(e)),
                Err(_) => {
                    outcome.malformed += 1;
                    continue;
                }
            };
            let verdict = evaluate_document(&doc, models, cfg, token_counter);
            outcome.input += 1;
            if verdict.kept {
                outcome.kept += 1;
            } else {
                outcome.discarded += 1;
            }
            sink.record(doc, verdict)?;
        }
    } else {
        run_parallel(docs, models, cfg, token_counter, sink, &mut outcome)?;
    }

    if outcome.malformed > outcome.input {
        return Err(Error::input(format!(
            "{} of {} records malformed; refusing to treat this as a corpus",
            outcome.malformed,
            outcome.malformed + outcome.input
        )));
    }
    Ok(outcome)
}

fn run_parallel<I>(
    docs: I,
    models: &LoadedModels,
    cfg: &PipelineConfig,
    token_counter: Option<&TokenCounter>,
    sink: &mut dyn VerdictSink,
    outcome: &mut PipelineOutcome,
) -> Result<()>
where
    I: Iterator<Item = Result<Document>> + Send,
{
    let workers = cfg.worker_count;
    let (work_tx, work_rx) = crossbeam_channel::bounded::<(u64, Document)>(workers * 4);
    let (result_tx, result_rx) = crossbeam_channel::bounded::<(u64, Document, RecordVerdict)>(workers * 4);

    std::thread::scope(|scope| -> Result<()> {
        let feeder = scope.spawn(move || -> (u64, Option<Error>) {
            let mut malformed = 0u64;
            let mut seq = 0u64;
            for item in docs {
                match item {
                    Ok(doc) => {
                        if work_tx.send((seq, doc)).is_err() {
                            break;
                        }
                        seq += 1;
                    }
                    Err(Error::Io(e)) => {
                        drop(work_tx);
                        return (malformed, Some(Error::Io(e)));
                    }
                    Err(_) => malformed += 1,
                }
            }
            drop(work_tx);
            (malformed, None)
        });

        for _ in 0..workers {
            let work_rx = work_rx.clone();
            let result_tx = result_tx.clone();
            scope.spawn(move || {
                for (seq, doc) in work_rx.iter() {
                    let verdict = evaluate_document(&doc, models, cfg, token_counter);
                    if result_tx.send((seq, doc, verdict)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(result_tx);
        drop(work_rx);

        // Restore input order with a reorder buffer bounded by in-flight work.
        let mut pending: BTreeMap<u64, (Document, RecordVerdict)> = BTreeMap::new();
        let mut next = 0u64;
        for (seq, doc, verdict) in result_rx.iter() {
            pending.insert(seq, (doc, verdict));
            while let Some((doc, verdict)) = pending.remove(&next) {
                outcome.input += 1;
                if verdict.kept {
                    outcome.kept += 1;
                } else {
                    outcome.discarded += 1;
                }
                sink.record(doc, verdict)?;
                next += 1;
            }
        }
        debug_assert!(pending.is_empty());
        let (malformed, fatal) = feeder.join().expect("feeder thread panicked");
        outcome.malformed = malformed;
        match fatal {
            Some(err) => Err(err),
            None => Ok(()),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::filter_id;

    fn heuristics_only_config() -> PipelineConfig {
        PipelineConfig {
            filter_order: vec![FilterStage::Heuristics],
            heuristic: HeuristicConfig {
                min_words: 3,
                max_words: 10,
                ..HeuristicConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    fn doc(id: &str, words: usize) -> Document {
        let text: Vec<String> = (0..words).map(|i| format!("w{id}{i}")).collect();
        Document::new(id, text.join(" "), Lang::Hindi).unwrap()
    }

    #[test]
    fn planted_length_failures() {
        let cfg = heuristics_only_config();
        let models = LoadedModels::default();
        let docs: Vec<Result<Document>> = vec![
            Ok(doc("a", 5)),
            Ok(doc("b", 2)),  // too short
            Ok(doc("c", 11)), // too long
            Ok(doc("d", 4)),
        ];
        let mut sink = CollectingSink::default();
        let outcome =
            run_pipeline(docs.into_iter(), &models, &cfg, None, &mut sink).unwrap();
        assert_eq!(outcome.input, 4);
        assert_eq!(outcome.kept, 2);
        assert_eq!(outcome.discarded, 2);
        assert_eq!(sink.kept.len(), 2);
        let failed: Vec<&str> = sink
            .verdicts
            .iter()
            .filter(|v| !v.kept)
            .map(|v| v.doc_id.as_str())
            .collect();
        assert_eq!(failed, vec!["b", "c"]);
        assert_eq!(
            sink.verdicts[1].first_failure.as_deref(),
            Some(filter_id::WORD_COUNT)
        );
    }

    #[test]
    fn empty_stream_empty_outputs() {
        let cfg = heuristics_only_config();
        let models = LoadedModels::default();
        let mut sink = CollectingSink::default();
        let outcome = run_pipeline(
            Vec::new().into_iter(),
            &models,
            &cfg,
            None,
            &mut sink,
        )
        .unwrap();
        assert_eq!(outcome, PipelineOutcome::default());
        assert!(sink.verdicts.is_empty());
    }

    #[test]
    fn kept_order_and_verdicts_identical_across_worker_counts() {
        let make_docs = || -> Vec<Result<Document>> {
            (0..200)
                .map(|i| Ok(doc(&format!("d{i}"), 1 + (i % 13))))
                .collect()
        };
        let models = LoadedModels::default();
        let mut reference: Option<(Vec<String>, Vec<RecordVerdict>)> = None;
        for workers in [1usize, 4, 8] {
            let cfg = PipelineConfig {
                worker_count: workers,
                ..heuristics_only_config()
            };
            let mut sink = CollectingSink::default();
            run_pipeline(make_docs().into_iter(), &models, &cfg, None, &mut sink).unwrap();
            let kept_ids: Vec<String> = sink.kept.iter().map(|d| d.id.clone()).collect();
            match &reference {
                None => reference = Some((kept_ids, sink.verdicts)),
                Some((ids, verdicts)) => {
                    assert_eq!(&kept_ids, ids, "workers={workers}");
                    assert_eq!(&sink.verdicts, verdicts, "workers={workers}");
                }
            }
        }
    }

    #[test]
    fn malformed_majority_fails_the_run() {
        let cfg = heuristics_only_config();
        let models = LoadedModels::default();
        let docs: Vec<Result<Document>> = vec![
            Err(Error::format("bad")),
            Err(Error::format("bad")),
            Ok(doc("a", 5)),
        ];
        let mut sink = CollectingSink::default();
        let err = run_pipeline(docs.into_iter(), &models, &cfg, None, &mut sink);
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn fail_fast_stops_after_failing_stage() {
        let mut cfg = heuristics_only_config();
        cfg.fail_fast = true;
        cfg.filter_order = vec![FilterStage::Heuristics, FilterStage::Classifier];
        let models = LoadedModels::default();
        // Too short: heuristics fail, so the classifier stage never runs and
        // only the six heuristic verdicts are recorded.
        let verdict = evaluate_document(&doc("a", 1), &models, &cfg, None);
        assert_eq!(verdict.verdicts.len(), 6);
        assert!(!verdict.kept);

        cfg.fail_fast = false;
        let verdict = evaluate_document(&doc("a", 1), &models, &cfg, None);
        assert_eq!(verdict.verdicts.len(), 7);
    }

    #[test]
    fn stage_without_model_is_rejected_at_startup() {
        let cfg = PipelineConfig::default();
        let models = LoadedModels::default();
        let mut sink = CollectingSink::default();
        let err = run_pipeline(
            Vec::new().into_iter(),
            &models,
            &cfg,
            None,
            &mut sink,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn custom_token_counter_is_used() {
        let cfg = heuristics_only_config();
        let models = LoadedModels::default();
        let counter = |_: &str| 42u64;
        let verdict = evaluate_document(&doc("a", 5), &models, &cfg, Some(&counter));
        assert_eq!(verdict.tokens, 42);
        let verdict = evaluate_document(&doc("a", 5), &models, &cfg, None);
        assert_eq!(verdict.tokens, 5);
    }

    #[test]
    fn config_toml_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.toml");
        std::fs::write(
            &path,
            r#"
worker_count = 4
min_lid_confidence = 0.7
filter_order = ["heuristics"]

[heuristic]
min_words = 50

[thresholds]
percentile = 0.8
[thresholds.cutoffs]
hi = 640.0
"#,
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.worker_count, 4);
        assert_eq!(cfg.min_lid_confidence, 0.7);
        assert_eq!(cfg.heuristic.min_words, 50);
        assert_eq!(cfg.heuristic.max_words, 2500);
        assert_eq!(cfg.thresholds.cutoffs[&Lang::Hindi], 640.0);
    }
}

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use synthpipe::classifier::{evaluate, load_labeled_jsonl, train_classifier, ClassifierConfig};
use synthpipe::client::{
    GenerationRequest, Generator, HttpCompletionClient, RetryPolicy, SamplingParams,
};
use synthpipe::document::Document;
use synthpipe::embedding::{train_embeddings, EmbeddingConfig, EmbeddingSpace};
use synthpipe::error::{Error, Result};
use synthpipe::ingest::{read_jsonl_corpus, JsonlReader};
use synthpipe::langid::{train_langid, LangIdConfig};
use synthpipe::mitigate::mitigate;
use synthpipe::ngram::{
    calibrate_threshold, count_ngrams_from_texts, estimate_kneser_ney, write_arpa, KneserNeyLM,
};
use synthpipe::pipeline::{
    run_pipeline, JsonlSink, LoadedModels, PipelineConfig, RecordVerdict, VerdictSink,
};
use synthpipe::prompt::{render_prompt, TemplateSet};
use synthpipe::report::{aggregate_report, DiscardReport};
use synthpipe::routing::{load_routes, Router};
use synthpipe::weat::{audit, load_weat_specs};

use crate::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Filter(args) => filter(&cli, args),
        Command::TrainLm(args) => train_lm(&cli, args),
        Command::Calibrate(args) => calibrate(&cli, args),
        Command::TrainLangid(args) => train_langid_cmd(&cli, args),
        Command::TrainClassifier(args) => train_classifier_cmd(&cli, args),
        Command::TrainEmbeddings(args) => train_embeddings_cmd(&cli, args),
        Command::Weat(args) => weat_cmd(args),
        Command::Mitigate(args) => mitigate_cmd(args),
        Command::Render(args) => render(args),
        Command::Generate(args) => generate(&cli, args),
        Command::Report(args) => report(args),
    }
}

/// Writes the three JSONL streams and accumulates the discard report.
struct FilterSink {
    inner: JsonlSink,
    report: DiscardReport,
}

impl VerdictSink for FilterSink {
    fn record(&mut self, doc: Document, verdict: RecordVerdict) -> Result<()> {
        self.report.add_verdict(&verdict);
        self.inner.record(doc, verdict)
    }
}

fn filter(cli: &Cli, args: &crate::FilterArgs) -> Result<()> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("`filter` requires --config <pipeline.toml>"))?;
    let mut cfg = PipelineConfig::load(config_path)?;
    if let Some(workers) = cli.workers {
        cfg.worker_count = workers;
    }
    if cli.fail_fast {
        cfg.fail_fast = true;
    }
    cfg.validate()?;
    let models = LoadedModels::load(&cfg)?;

    fs::create_dir_all(&args.output_dir)?;
    let sink = JsonlSink::create(
        &args.output_dir.join("kept.jsonl"),
        &args.output_dir.join("discarded.jsonl"),
        &args.output_dir.join("verdicts.jsonl"),
    )?;
    let mut sink = FilterSink {
        inner: sink,
        report: DiscardReport::default(),
    };

    let reader = JsonlReader::open(&args.input)?;
    let lang_filter = cli.lang;
    let stream = reader.filter(move |item| match (&lang_filter, item) {
        (Some(lang), Ok(doc)) => doc.target_language == *lang,
        _ => true,
    });

    let started = Instant::now();
    let outcome = run_pipeline(stream, &models, &cfg, None, &mut sink)?;
    let elapsed = started.elapsed();

    let report = sink.report;
    sink.inner.finish()?;
    fs::write(args.output_dir.join("report.tsv"), report.to_tsv())?;
    println!("{}", report.render_pretty());
    let rate = outcome.input as f64 / elapsed.as_secs_f64().max(1e-9);
    println!(
        "processed {} docs in {:.2}s ({:.0} docs/s, {} workers); kept {}, discarded {}, malformed {}",
        outcome.input,
        elapsed.as_secs_f64(),
        rate,
        cfg.worker_count,
        outcome.kept,
        outcome.discarded,
        outcome.malformed
    );
    Ok(())
}

fn read_corpus_texts(cli: &Cli, path: &std::path::Path) -> Result<Vec<String>> {
    let (docs, stats) = read_jsonl_corpus(path)?;
    let texts: Vec<String> = docs
        .into_iter()
        .filter(|d| cli.lang.is_none_or(|lang| d.target_language == lang))
        .map(|d| d.text)
        .collect();
    if stats.malformed > 0 {
        log::warn!("{} malformed lines skipped", stats.malformed);
    }
    if texts.is_empty() {
        return Err(Error::input("no documents matched the input/--lang selection"));
    }
    Ok(texts)
}

fn train_lm(cli: &Cli, args: &crate::TrainLmArgs) -> Result<()> {
    let texts: Vec<String> = match args.format.as_str() {
        "jsonl" => read_corpus_texts(cli, &args.input)?,
        "text" => fs::read_to_string(&args.input)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        other => {
            return Err(Error::config(format!(
                "unknown --format {other:?} (expected jsonl or text)"
            )))
        }
    };
    let counts = count_ngrams_from_texts(texts.iter().map(|s| s.as_str()), args.order)?;
    let lm = estimate_kneser_ney(&counts)?;
    lm.save(&args.out)?;
    println!(
        "trained order-{} model on {} sequences ({} vocab); wrote {}",
        args.order,
        texts.len(),
        lm.vocab().len(),
        args.out.display()
    );
    if let Some(arpa_path) = &args.arpa {
        let mut out = std::io::BufWriter::new(fs::File::create(arpa_path)?);
        write_arpa(&lm, &mut out)?;
        out.flush()?;
        println!("wrote ARPA export to {}", arpa_path.display());
    }
    Ok(())
}

fn calibrate(cli: &Cli, args: &crate::CalibrateArgs) -> Result<()> {
    let lm = KneserNeyLM::load(&args.model)?;
    let (docs, _) = read_jsonl_corpus(&args.validation)?;
    let docs: Vec<Document> = docs
        .into_iter()
        .filter(|d| cli.lang.is_none_or(|lang| d.target_language == lang))
        .collect();
    let cutoff = calibrate_threshold(&lm, &docs, args.percentile)?;
    println!("{cutoff}");
    Ok(())
}

fn train_langid_cmd(cli: &Cli, args: &crate::TrainLangidArgs) -> Result<()> {
    let (docs, _) = read_jsonl_corpus(&args.input)?;
    let corpus: Vec<(String, synthpipe::lang::Lang)> = docs
        .into_iter()
        .map(|d| (d.text, d.target_language))
        .collect();
    let config = LangIdConfig {
        epochs: args.epochs,
        bucket_count: args.buckets,
        learning_rate: args.learning_rate,
        seed: cli.seed.unwrap_or(42),
        ..LangIdConfig::default()
    };
    let model = train_langid(&corpus, &config)?;
    let accuracy = model.training_accuracy(&corpus);
    model.save(&args.out)?;
    println!(
        "trained langid on {} examples ({} languages, training accuracy {:.4}); wrote {}",
        corpus.len(),
        model.languages().len(),
        accuracy,
        args.out.display()
    );
    Ok(())
}

fn train_classifier_cmd(cli: &Cli, args: &crate::TrainClassifierArgs) -> Result<()> {
    let data = load_labeled_jsonl(&args.input)?;
    let config = ClassifierConfig {
        embedding_dim: args.dim,
        epochs: args.epochs,
        word_ngram_order: args.word_ngrams,
        char_ngram_range: if args.no_char_ngrams { None } else { Some((3, 6)) },
        seed: cli.seed.unwrap_or(42),
        ..ClassifierConfig::default()
    };
    let (model, train_report) = train_classifier(&data, &config)?;
    model.save(&args.out)?;
    println!(
        "trained classifier on {} examples (final epoch loss {:.4}); wrote {}",
        data.len(),
        train_report.epoch_loss.last().copied().unwrap_or(0.0),
        args.out.display()
    );
    if let Some(eval_path) = &args.eval {
        let test = load_labeled_jsonl(eval_path)?;
        let metrics = evaluate(&model, &test)?;
        println!(
            "eval: accuracy {:.4}  F1(high) {:.4}  F1(low) {:.4}  P(high) {:.4}  R(high) {:.4}",
            metrics.accuracy,
            metrics.high.f1,
            metrics.low.f1,
            metrics.high.precision,
            metrics.high.recall
        );
    }
    Ok(())
}

fn train_embeddings_cmd(cli: &Cli, args: &crate::TrainEmbeddingsArgs) -> Result<()> {
    let (docs, _) = read_jsonl_corpus(&args.input)?;
    let docs: Vec<Document> = docs
        .into_iter()
        .filter(|d| cli.lang.is_none_or(|lang| d.target_language == lang))
        .collect();
    let config = EmbeddingConfig {
        dim: args.dim,
        window: args.window,
        epochs: args.epochs,
        min_count: args.min_count,
        seed: cli.seed.unwrap_or(42),
        ..EmbeddingConfig::default()
    };
    let space = train_embeddings(&docs, &config)?;
    space.save_text(&args.out)?;
    println!(
        "trained {}-dim vectors for {} words; wrote {}",
        space.dim,
        space.vectors.len(),
        args.out.display()
    );
    Ok(())
}

fn weat_cmd(args: &crate::WeatArgs) -> Result<()> {
    let space = EmbeddingSpace::load_text(&args.embeddings)?;
    let mut specs = load_weat_specs(&args.wordsets)?;
    if let Some(aspect) = &args.aspect {
        specs.retain(|s| s.aspect.name() == aspect || s.name == *aspect);
        if specs.is_empty() {
            return Err(Error::input(format!("no spec matches aspect {aspect:?}")));
        }
    }
    let report = audit(&space, &specs)?;
    print!("{}", report.render());
    if let Some(json_path) = &args.json {
        fs::write(
            json_path,
            serde_json::to_string_pretty(&report).map_err(|e| Error::format(e.to_string()))?,
        )?;
    }
    Ok(())
}

fn mitigate_cmd(args: &crate::MitigateArgs) -> Result<()> {
    let (docs, _) = read_jsonl_corpus(&args.input)?;
    let specs = load_weat_specs(&args.wordsets)?;
    let spec = specs
        .iter()
        .find(|s| s.aspect.name() == args.aspect || s.name == args.aspect)
        .ok_or_else(|| Error::input(format!("no spec matches aspect {:?}", args.aspect)))?;
    let outcome = mitigate(&docs, spec, args.k, args.window, None)?;

    let mut out = std::io::BufWriter::new(fs::File::create(&args.out)?);
    for doc in &outcome.corpus {
        serde_json::to_writer(&mut out, doc).map_err(|e| Error::format(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    if let Some(manifest_path) = &args.manifest {
        let mut out = std::io::BufWriter::new(fs::File::create(manifest_path)?);
        for edit in &outcome.manifest {
            serde_json::to_writer(&mut out, edit).map_err(|e| Error::format(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    println!(
        "selected {} biased instances; corpus {} -> {} documents",
        outcome.manifest.len(),
        docs.len(),
        outcome.corpus.len()
    );
    Ok(())
}

fn parse_bindings(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut bindings = BTreeMap::new();
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::input(format!("--bind expects KEY=VALUE, got {pair:?}")))?;
        bindings.insert(key.to_string(), value.to_string());
    }
    Ok(bindings)
}

fn load_templates(dir: &Option<std::path::PathBuf>) -> Result<TemplateSet> {
    match dir {
        Some(dir) => TemplateSet::load_dir(dir),
        None => Ok(TemplateSet::bundled()),
    }
}

fn render(args: &crate::RenderArgs) -> Result<()> {
    let templates = load_templates(&args.templates)?;
    let template = templates.get(&args.style)?;
    let prompt = render_prompt(template, &parse_bindings(&args.bindings)?)?;
    println!("{prompt}");
    Ok(())
}

fn generate(cli: &Cli, args: &crate::GenerateArgs) -> Result<()> {
    let lang = cli
        .lang
        .ok_or_else(|| Error::config("`generate` requires --lang"))?;
    let routes = load_routes(&args.routes)?;
    let seed = cli.seed.unwrap_or(0);
    let mut client = HttpCompletionClient::new(Duration::from_secs(args.timeout))?;
    if let Some(audit_path) = &args.audit_log {
        client = client.with_audit_log(audit_path)?;
    }
    let mut generator = Generator::new(
        &client,
        Router::new(routes, seed)?,
        load_templates(&args.templates)?,
        RetryPolicy::default(),
    );
    let bindings = parse_bindings(&args.bindings)?;

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for i in 0..args.count {
        let request = GenerationRequest {
            style: args.style.clone(),
            bindings: bindings.clone(),
            target_language: lang,
            sampling: SamplingParams {
                temperature: args.temperature,
                max_tokens: args.max_tokens,
                seed: seed + u64::from(i),
            },
        };
        let doc = generator.generate(&request)?;
        serde_json::to_writer(&mut out, &doc).map_err(|e| Error::format(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn report(args: &crate::ReportArgs) -> Result<()> {
    let content = fs::read_to_string(&args.verdicts)?;
    let mut verdicts = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: RecordVerdict = serde_json::from_str(line).map_err(|e| {
            Error::format(format!("{}:{}: {e}", args.verdicts.display(), lineno + 1))
        })?;
        verdicts.push(v);
    }
    let report = aggregate_report(verdicts.iter());
    println!("{}", report.render_pretty());
    if let Some(tsv_path) = &args.tsv {
        fs::write(tsv_path, report.to_tsv())?;
    }
    Ok(())
}

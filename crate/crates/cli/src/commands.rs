//! Subcommand bodies. Every command validates nothing itself (the config is
//! already validated), loads its inputs, writes its artifacts into the
//! output directory, and finishes with a manifest.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;
use textmine::analysis::{
    corpus_topic_proportions, dominant_topics, frequency_table, save_frequency_table_csv,
    save_frequency_table_json, save_proportions_csv, save_proportions_json, save_time_series_csv,
    save_time_series_json, save_top_days_csv, save_top_terms_csv, save_top_terms_json,
    top_active_days, top_terms, topic_prevalence_over_time, volume_by_day, word_importance,
};
use textmine::corpus::{
    load_corpus, load_wordlist, save_corpus_jsonl, Document, WordList, WordListKind,
};
use textmine::lda::{fit_vem, load_model, save_model};
use textmine::prep::{
    build_dtm, remove_stopwords, save_dtm, stem_stream, tokenize, DocTermMatrix, TokenStream,
    Vocabulary,
};
use textmine::quality::{gate_corpus, save_reports_csv, Tier};
use textmine::selection::{
    save_metric_report_csv, save_metric_report_json, select_k as run_select_k, Direction,
};
use textmine::Error;

use crate::config::PipelineConfig;
use crate::manifest::Manifest;
use crate::CliError;

const MODEL_FILE: &str = "model.lda";

fn load_docs(config: &PipelineConfig) -> Result<Vec<Document>, CliError> {
    let docs = load_corpus(&config.corpus.path, config.corpus.format.corpus_format())?;
    if docs.is_empty() {
        return Err(CliError::Data(Error::EmptyCorpus));
    }
    Ok(docs)
}

fn merged_stopwords(config: &PipelineConfig) -> Result<WordList, CliError> {
    let mut words: Vec<String> = Vec::new();
    for p in &config.stopwords {
        let list = load_wordlist(p, WordListKind::StopWords)?;
        words.extend(list.iter().map(str::to_string));
    }
    Ok(WordList::new(WordListKind::StopWords, words))
}

fn prepared_streams(docs: &[Document], stops: &WordList, stem: bool) -> Vec<TokenStream> {
    docs.iter()
        .map(|d| {
            let s = remove_stopwords(tokenize(d), stops);
            if stem {
                stem_stream(s)
            } else {
                s
            }
        })
        .collect()
}

fn prepare(
    config: &PipelineConfig,
    docs: &[Document],
) -> Result<(DocTermMatrix, Vec<String>), CliError> {
    let stops = merged_stopwords(config)?;
    let streams = prepared_streams(docs, &stops, config.prep.stem);
    Ok(build_dtm(
        &streams,
        config.prep.min_term_count,
        config.prep.min_doc_length,
    )?)
}

fn ensure_out_dir(config: &PipelineConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::Data(Error::UnreadablePath {
            path: config.out_dir.clone(),
            source: e,
        })
    })
}

fn manifest_with_corpus(config: &PipelineConfig) -> Result<Manifest, CliError> {
    let mut man = Manifest::new(&config.canonical_json());
    man.add_input(&config.corpus.path)?;
    for p in &config.stopwords {
        man.add_input(p)?;
    }
    Ok(man)
}

fn check_vocab(archive_vocab: &Vocabulary, dtm: &DocTermMatrix) -> Result<(), CliError> {
    if archive_vocab.terms() != dtm.vocab().terms() {
        return Err(CliError::Data(Error::InvalidConfig {
            message: "model archive vocabulary does not match the prepared corpus; \
                      refit or align prep settings"
                .into(),
        }));
    }
    Ok(())
}

pub fn quality(config: &PipelineConfig) -> Result<(), CliError> {
    let dict_path = config.dictionary.clone().ok_or_else(|| {
        CliError::Config("dictionary: required by the quality command but not set".into())
    })?;
    let dictionary = load_wordlist(&dict_path, WordListKind::Dictionary)?;
    let docs = load_docs(config)?;
    let thresholds = config.thresholds().map_err(CliError::Data)?;
    let (kept, reports) = gate_corpus(
        &docs,
        &dictionary,
        &thresholds,
        config.quality.max_edit_distance,
    )?;

    ensure_out_dir(config)?;
    save_reports_csv(&reports, &config.out_dir.join("quality_report.csv"))?;
    save_corpus_jsonl(&kept, &config.out_dir.join("kept.jsonl"))?;

    let mut man = Manifest::new(&config.canonical_json());
    man.add_input(&config.corpus.path)?;
    man.add_input(&dict_path)?;
    man.write(&config.out_dir, &["quality_report.csv", "kept.jsonl"])?;

    let count = |t: Tier| reports.iter().filter(|r| r.tier == t).count();
    println!(
        "{} documents scored: {} dropped, {} kept, {} corrected; {} retained",
        reports.len(),
        count(Tier::Drop),
        count(Tier::Keep),
        count(Tier::Correct),
        kept.len()
    );
    Ok(())
}

pub fn prep(config: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_docs(config)?;
    let (dtm, excluded) = prepare(config, &docs)?;

    ensure_out_dir(config)?;
    save_dtm(
        &dtm,
        &config.out_dir.join("dtm.txt"),
        &config.out_dir.join("vocab.txt"),
    )?;
    let excluded_path = config.out_dir.join("excluded_docs.txt");
    let mut text = excluded.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    std::fs::write(&excluded_path, text).map_err(|e| {
        CliError::Data(Error::UnreadablePath {
            path: excluded_path,
            source: e,
        })
    })?;

    let man = manifest_with_corpus(config)?;
    man.write(
        &config.out_dir,
        &["dtm.txt", "vocab.txt", "excluded_docs.txt"],
    )?;

    println!(
        "{} documents x {} terms, {} tokens; {} documents excluded as too short",
        dtm.n_docs(),
        dtm.n_terms(),
        dtm.total_tokens(),
        excluded.len()
    );
    Ok(())
}

pub fn fit(config: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_docs(config)?;
    let (dtm, _) = prepare(config, &docs)?;
    let lda_config = config.lda_config(config.lda.k);
    let model = fit_vem(&dtm, &lda_config)?;

    ensure_out_dir(config)?;
    save_model(&model, dtm.vocab(), &config.out_dir.join(MODEL_FILE))?;
    let n = config.top_terms.min(dtm.n_terms());
    let tables = top_terms(&model, dtm.vocab(), n)?;
    save_top_terms_csv(&tables, &config.out_dir.join("top_terms.csv"))?;
    save_top_terms_json(&tables, &config.out_dir.join("top_terms.json"))?;
    let props = corpus_topic_proportions(&model, &dtm)?;
    save_proportions_csv(&props, &config.out_dir.join("proportions.csv"))?;
    save_proportions_json(&props, &config.out_dir.join("proportions.json"))?;

    let man = manifest_with_corpus(config)?;
    man.write(
        &config.out_dir,
        &[
            MODEL_FILE,
            "top_terms.csv",
            "top_terms.json",
            "proportions.csv",
            "proportions.json",
        ],
    )?;

    println!(
        "fitted {} topics on {} documents x {} terms in {} EM iterations; final ELBO {}",
        model.k(),
        dtm.n_docs(),
        dtm.n_terms(),
        model.elbo_trace.len(),
        model.elbo_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn select_k(config: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_docs(config)?;
    let (dtm, _) = prepare(config, &docs)?;
    let template = config.lda_config(config.lda.k);
    let report = run_select_k(&dtm, &config.k_grid, &template, &config.chain_params())?;

    ensure_out_dir(config)?;
    save_metric_report_csv(&report, &config.out_dir.join("metrics.csv"))?;
    save_metric_report_json(&report, &config.out_dir.join("metrics.json"))?;

    let man = manifest_with_corpus(config)?;
    man.write(&config.out_dir, &["metrics.csv", "metrics.json"])?;

    println!("scored k in {:?} on {} documents:", report.ks, dtm.n_docs());
    for s in &report.series {
        let better = |a: f64, b: f64| match s.direction {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        };
        let mut best = 0;
        for (i, &v) in s.raw.iter().enumerate() {
            if better(v, s.raw[best]) {
                best = i;
            }
        }
        println!("  {}: best k = {}", s.metric.name(), report.ks[best]);
    }
    Ok(())
}

pub fn analyze(config: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_docs(config)?;
    let model_path = config.out_dir.join(MODEL_FILE);
    let (model, archive_vocab) = load_model(&model_path)?;
    let (dtm, _) = prepare(config, &docs)?;
    check_vocab(&archive_vocab, &dtm)?;

    let stops = merged_stopwords(config)?;
    let raw_streams: Vec<TokenStream> = docs.iter().map(tokenize).collect();
    let table = frequency_table(&raw_streams, &stops, config.top_words, "corpus");

    let dominant = dominant_topics(&model);

    ensure_out_dir(config)?;
    save_frequency_table_csv(&table, &config.out_dir.join("frequency.csv"))?;
    save_frequency_table_json(&table, &config.out_dir.join("frequency.json"))?;

    #[derive(Serialize)]
    struct ImportanceRow {
        topic: usize,
        term: String,
        importance: f64,
    }
    let mut rows: Vec<ImportanceRow> = Vec::new();
    for topic in 0..model.k() {
        match word_importance(&dtm, &dominant, topic) {
            Ok(list) => rows.extend(list.into_iter().take(config.top_words).map(
                |(term, importance)| ImportanceRow {
                    topic,
                    term,
                    importance,
                },
            )),
            Err(Error::EmptyGroup) => {
                println!("topic {topic}: no documents, importance skipped");
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_importance_csv(&rows, &config.out_dir.join("word_importance.csv"))?;
    write_pretty_json(&rows, &config.out_dir.join("word_importance.json"))?;

    write_doc_topics_csv(&dtm, &dominant, &config.out_dir.join("doc_topics.csv"))?;

    let mut man = manifest_with_corpus(config)?;
    man.add_input(&model_path)?;
    man.write(
        &config.out_dir,
        &[
            "frequency.csv",
            "frequency.json",
            "word_importance.csv",
            "word_importance.json",
            "doc_topics.csv",
        ],
    )?;

    println!(
        "analyzed {} topics over {} documents; {} frequency rows",
        model.k(),
        dtm.n_docs(),
        table.entries.len()
    );
    Ok(())
}

pub fn timeline(config: &PipelineConfig) -> Result<(), CliError> {
    let docs = load_docs(config)?;
    let volume = volume_by_day(&docs)?;
    let undated = docs.iter().filter(|d| d.date.is_none()).count();
    let days = top_active_days(&volume, config.top_days)?;

    let model_path = config.out_dir.join(MODEL_FILE);
    let (model, archive_vocab) = load_model(&model_path)?;
    let (dtm, _) = prepare(config, &docs)?;
    check_vocab(&archive_vocab, &dtm)?;
    let by_id: HashMap<&str, &Document> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    let aligned: Vec<Document> = dtm
        .doc_ids()
        .iter()
        .map(|id| {
            (*by_id
                .get(id.as_str())
                .expect("dtm ids come from this corpus"))
            .clone()
        })
        .collect();
    let prevalence = topic_prevalence_over_time(&model, &dtm, &aligned, config.period)?;

    ensure_out_dir(config)?;
    save_time_series_csv(&volume, &config.out_dir.join("volume.csv"))?;
    save_top_days_csv(&days, &config.out_dir.join("top_days.csv"))?;
    save_time_series_csv(&prevalence, &config.out_dir.join("prevalence.csv"))?;
    save_time_series_json(&prevalence, &config.out_dir.join("prevalence.json"))?;

    let mut man = manifest_with_corpus(config)?;
    man.add_input(&model_path)?;
    man.write(
        &config.out_dir,
        &[
            "volume.csv",
            "top_days.csv",
            "prevalence.csv",
            "prevalence.json",
        ],
    )?;

    println!(
        "{} dated days, {} undated documents excluded; {} prevalence periods",
        volume.points.len(),
        undated,
        prevalence.points.len()
    );
    Ok(())
}

fn write_pretty_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes");
    std::fs::write(path, text).map_err(|e| {
        CliError::Data(Error::UnreadablePath {
            path: path.into(),
            source: e,
        })
    })
}

fn write_importance_csv(rows: &[impl Serialize], path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| {
        CliError::Data(Error::UnreadablePath {
            path: path.into(),
            source: e,
        })
    })?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| {
            CliError::Data(Error::MalformedRecord {
                line: 0,
                message: format!("csv write: {e}"),
            })
        })?;
    }
    w.flush().map_err(|e| {
        CliError::Data(Error::UnreadablePath {
            path: path.into(),
            source: e,
        })
    })
}

fn write_doc_topics_csv(
    dtm: &DocTermMatrix,
    dominant: &[usize],
    path: &Path,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Row<'a> {
        doc_id: &'a str,
        topic: usize,
    }
    let rows: Vec<Row> = dtm
        .doc_ids()
        .iter()
        .zip(dominant)
        .map(|(id, &topic)| Row { doc_id: id, topic })
        .collect();
    write_importance_csv(&rows, path)
}

//! Summary artifacts over fitted models: top terms per topic, corpus topic
//! proportions, frequency tables, unigram-difference word importance, and
//! temporal series.

use std::collections::HashMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, WordList};
use crate::error::{Error, Result};
use crate::lda::{doc_topic_proportions, LdaModel};
use crate::prep::{DocTermMatrix, TokenStream, Vocabulary};

/// The n most probable terms of one topic, descending by beta with
/// lexicographic tie-break.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopTerms {
    pub topic: usize,
    pub entries: Vec<(String, f64)>,
}

/// Pooled term counts, descending with lexicographic tie-break. The scope
/// tag names the corpus slice the counts cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    pub entries: Vec<(String, u64)>,
    pub scope_tag: String,
}

/// Calendar resolution for temporal aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Period {
    Day,
    Week,
    Month,
}

/// Dated value vectors with strictly increasing dates and one shared
/// dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub period: Period,
    pub points: Vec<(NaiveDate, Vec<f64>)>,
}

fn check_model(model: &LdaModel, dtm: &DocTermMatrix) -> Result<()> {
    if model.gamma.rows() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            context: "analysis: gamma rows vs documents".into(),
            expected: dtm.n_docs(),
            actual: model.gamma.rows(),
        });
    }
    if model.beta.cols() != dtm.n_terms() {
        return Err(Error::DimensionMismatch {
            context: "analysis: beta columns vs vocabulary".into(),
            expected: dtm.n_terms(),
            actual: model.beta.cols(),
        });
    }
    Ok(())
}

/// The n highest-beta terms of every topic, descending by beta, ties broken
/// lexicographically.
pub fn top_terms(model: &LdaModel, vocab: &Vocabulary, n: usize) -> Result<Vec<TopTerms>> {
    if vocab.len() != model.n_terms() {
        return Err(Error::DimensionMismatch {
            context: "top_terms: vocabulary vs beta columns".into(),
            expected: model.n_terms(),
            actual: vocab.len(),
        });
    }
    if n == 0 || n > vocab.len() {
        return Err(Error::InvalidConfig {
            message: format!("top-term count must lie in 1..={}, got {n}", vocab.len()),
        });
    }
    Ok((0..model.k())
        .map(|t| {
            let mut entries: Vec<(String, f64)> = model
                .beta
                .row(t)
                .iter()
                .enumerate()
                .map(|(v, &b)| (vocab.term(v).to_string(), b))
                .collect();
            entries.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .expect("finite beta")
                    .then_with(|| a.0.cmp(&b.0))
            });
            entries.truncate(n);
            TopTerms { topic: t, entries }
        })
        .collect())
}

/// Token-weighted mean of per-document topic proportions; sums to 1.
pub fn corpus_topic_proportions(model: &LdaModel, dtm: &DocTermMatrix) -> Result<Vec<f64>> {
    check_model(model, dtm)?;
    let theta = doc_topic_proportions(model);
    let mut totals = vec![0.0f64; model.k()];
    let mut weight = 0.0f64;
    for d in 0..dtm.n_docs() {
        let len = dtm.doc_len(d) as f64;
        weight += len;
        for (k, &t) in theta.row(d).iter().enumerate() {
            totals[k] += len * t;
        }
    }
    if weight == 0.0 {
        return Err(Error::EmptyCorpus);
    }
    for t in &mut totals {
        *t /= weight;
    }
    Ok(totals)
}

/// Dominant topic per document: argmax of the theta row, lowest index on
/// ties.
pub fn dominant_topics(model: &LdaModel) -> Vec<usize> {
    let theta = doc_topic_proportions(model);
    (0..theta.rows())
        .map(|d| {
            let row = theta.row(d);
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Unigram-difference importance for one topic's document group:
/// P(term | docs in topic) - P(term | docs outside), relative frequencies
/// within each group. The outside probability is 0 when no documents (or no
/// tokens) fall outside. Covers the whole vocabulary, sorted descending by
/// importance with lexicographic tie-break.
pub fn word_importance(
    dtm: &DocTermMatrix,
    doc_topics: &[usize],
    topic: usize,
) -> Result<Vec<(String, f64)>> {
    if doc_topics.len() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            context: "word_importance: doc_topics vs documents".into(),
            expected: dtm.n_docs(),
            actual: doc_topics.len(),
        });
    }
    let v = dtm.n_terms();
    let mut in_counts = vec![0u64; v];
    let mut out_counts = vec![0u64; v];
    for (d, &assigned) in doc_topics.iter().enumerate() {
        let counts = if assigned == topic {
            &mut in_counts
        } else {
            &mut out_counts
        };
        for &(t, c) in dtm.row(d) {
            counts[t] += u64::from(c);
        }
    }
    let in_total: u64 = in_counts.iter().sum();
    if in_total == 0 {
        return Err(Error::EmptyGroup);
    }
    let out_total: u64 = out_counts.iter().sum();
    let mut rows: Vec<(String, f64)> = (0..v)
        .map(|t| {
            let p_in = in_counts[t] as f64 / in_total as f64;
            let p_out = if out_total == 0 {
                0.0
            } else {
                out_counts[t] as f64 / out_total as f64
            };
            (dtm.vocab().term(t).to_string(), p_in - p_out)
        })
        .collect();
    rows.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite importance")
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(rows)
}

/// Pools token counts over the streams, drops `extra_stops`, and keeps the
/// `top_n` most frequent terms (all terms when fewer exist). Descending by
/// count, ties lexicographic.
pub fn frequency_table(
    streams: &[TokenStream],
    extra_stops: &WordList,
    top_n: usize,
    scope_tag: &str,
) -> FrequencyTable {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in streams {
        for t in &s.tokens {
            if !extra_stops.contains(t) {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .map(|(t, c)| (t.to_string(), c))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(top_n);
    FrequencyTable {
        entries,
        scope_tag: scope_tag.to_string(),
    }
}

/// Daily document counts from the earliest to the latest date, inclusive,
/// with zero-count days filled in. Undated documents are excluded.
pub fn volume_by_day(docs: &[Document]) -> Result<TimeSeries> {
    let mut counts: HashMap<NaiveDate, u64> = HashMap::new();
    for d in docs.iter().filter_map(|d| d.date) {
        *counts.entry(d).or_insert(0) += 1;
    }
    let min = *counts.keys().min().ok_or(Error::NoDatedDocuments)?;
    let max = *counts.keys().max().expect("nonempty");
    let mut points = Vec::new();
    let mut day = min;
    loop {
        let c = counts.get(&day).copied().unwrap_or(0);
        points.push((day, vec![c as f64]));
        if day == max {
            break;
        }
        day = day.succ_opt().expect("date range within calendar bounds");
    }
    Ok(TimeSeries {
        period: Period::Day,
        points,
    })
}

/// The n highest-count days of a scalar series, descending, ties broken by
/// earlier date. Returns every day when n exceeds the series length.
pub fn top_active_days(series: &TimeSeries, n: usize) -> Result<Vec<(NaiveDate, f64)>> {
    if let Some(bad) = series.points.iter().find(|(_, v)| v.len() != 1) {
        return Err(Error::DimensionMismatch {
            context: "top_active_days: scalar series".into(),
            expected: 1,
            actual: bad.1.len(),
        });
    }
    let mut days: Vec<(NaiveDate, f64)> = series.points.iter().map(|(d, v)| (*d, v[0])).collect();
    days.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite counts")
            .then_with(|| a.0.cmp(&b.0))
    });
    days.truncate(n);
    Ok(days)
}

fn period_start(date: NaiveDate, period: Period) -> NaiveDate {
    match period {
        Period::Day => date,
        Period::Week => date.week(Weekday::Mon).first_day(),
        Period::Month => {
            NaiveDate::from_ymd_opt(date.year(), date.month(), 1).expect("first of month")
        }
    }
}

/// Token-weighted mean theta per calendar period, over dated documents
/// aligned with the matrix rows. Periods with no (token-bearing) documents
/// are omitted; every emitted vector sums to 1.
pub fn topic_prevalence_over_time(
    model: &LdaModel,
    dtm: &DocTermMatrix,
    docs: &[Document],
    period: Period,
) -> Result<TimeSeries> {
    check_model(model, dtm)?;
    if docs.len() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            context: "topic_prevalence_over_time: docs vs matrix rows".into(),
            expected: dtm.n_docs(),
            actual: docs.len(),
        });
    }
    if !docs.iter().any(|d| d.date.is_some()) {
        return Err(Error::NoDatedDocuments);
    }
    let theta = doc_topic_proportions(model);
    let k = model.k();
    let mut buckets: HashMap<NaiveDate, (Vec<f64>, f64)> = HashMap::new();
    for (d, doc) in docs.iter().enumerate() {
        let Some(date) = doc.date else { continue };
        let len = dtm.doc_len(d) as f64;
        if len == 0.0 {
            continue;
        }
        let entry = buckets
            .entry(period_start(date, period))
            .or_insert_with(|| (vec![0.0; k], 0.0));
        for (kk, &t) in theta.row(d).iter().enumerate() {
            entry.0[kk] += len * t;
        }
        entry.1 += len;
    }
    let mut points: Vec<(NaiveDate, Vec<f64>)> = buckets
        .into_iter()
        .map(|(date, (mut totals, weight))| {
            for t in &mut totals {
                *t /= weight;
            }
            (date, totals)
        })
        .collect();
    points.sort_by_key(|(date, _)| *date);
    Ok(TimeSeries { period, points })
}

fn csv_out(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::unreadable(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_record<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    path: &Path,
    fields: &[String],
) -> Result<()> {
    w.write_record(fields)
        .map_err(|e| Error::malformed(0, format!("csv write to {}: {e}", path.display())))
}

fn csv_done(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::unreadable(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable artifact");
    std::fs::write(path, text).map_err(|e| Error::unreadable(path, e))
}

/// CSV columns: topic, term, beta.
pub fn save_top_terms_csv(tables: &[TopTerms], path: &Path) -> Result<()> {
    let mut w = csv_out(path)?;
    csv_record(
        &mut w,
        path,
        &["topic".into(), "term".into(), "beta".into()],
    )?;
    for t in tables {
        for (term, beta) in &t.entries {
            csv_record(
                &mut w,
                path,
                &[t.topic.to_string(), term.clone(), beta.to_string()],
            )?;
        }
    }
    csv_done(w, path)
}

/// Long-format JSON: one object per (topic, term) entry.
pub fn save_top_terms_json(tables: &[TopTerms], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        topic: usize,
        term: &'a str,
        beta: f64,
    }
    let rows: Vec<Row> = tables
        .iter()
        .flat_map(|t| {
            t.entries.iter().map(|(term, beta)| Row {
                topic: t.topic,
                term,
                beta: *beta,
            })
        })
        .collect();
    write_json(&rows, path)
}

/// Long-format JSON: one object per topic.
pub fn save_proportions_json(props: &[f64], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        topic: usize,
        proportion: f64,
    }
    let rows: Vec<Row> = props
        .iter()
        .enumerate()
        .map(|(topic, &proportion)| Row { topic, proportion })
        .collect();
    write_json(&rows, path)
}

/// CSV columns: topic, proportion.
pub fn save_proportions_csv(props: &[f64], path: &Path) -> Result<()> {
    let mut w = csv_out(path)?;
    csv_record(&mut w, path, &["topic".into(), "proportion".into()])?;
    for (k, p) in props.iter().enumerate() {
        csv_record(&mut w, path, &[k.to_string(), p.to_string()])?;
    }
    csv_done(w, path)
}

/// CSV columns: term, count, scope.
pub fn save_frequency_table_csv(table: &FrequencyTable, path: &Path) -> Result<()> {
    let mut w = csv_out(path)?;
    csv_record(
        &mut w,
        path,
        &["term".into(), "count".into(), "scope".into()],
    )?;
    for (term, count) in &table.entries {
        csv_record(
            &mut w,
            path,
            &[term.clone(), count.to_string(), table.scope_tag.clone()],
        )?;
    }
    csv_done(w, path)
}

/// Long-format JSON: one object per (term, count) entry, scope repeated.
pub fn save_frequency_table_json(table: &FrequencyTable, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        term: &'a str,
        count: u64,
        scope: &'a str,
    }
    let rows: Vec<Row> = table
        .entries
        .iter()
        .map(|(term, count)| Row {
            term,
            count: *count,
            scope: &table.scope_tag,
        })
        .collect();
    write_json(&rows, path)
}

/// Long-format JSON: one object per term.
pub fn save_word_importance_json(rows: &[(String, f64)], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        term: &'a str,
        importance: f64,
    }
    let out: Vec<Row> = rows
        .iter()
        .map(|(term, importance)| Row {
            term,
            importance: *importance,
        })
        .collect();
    write_json(&out, path)
}

/// CSV columns: term, importance.
pub fn save_word_importance_csv(rows: &[(String, f64)], path: &Path) -> Result<()> {
    let mut w = csv_out(path)?;
    csv_record(&mut w, path, &["term".into(), "importance".into()])?;
    for (term, imp) in rows {
        csv_record(&mut w, path, &[term.clone(), imp.to_string()])?;
    }
    csv_done(w, path)
}

/// CSV columns: date, then "count" for scalar series or topic_0..topic_{K-1}.
pub fn save_time_series_csv(series: &TimeSeries, path: &Path) -> Result<()> {
    let dim = series.points.first().map_or(0, |(_, v)| v.len());
    let mut header = vec!["date".to_string()];
    if dim == 1 {
        header.push("count".into());
    } else {
        header.extend((0..dim).map(|k| format!("topic_{k}")));
    }
    let mut w = csv_out(path)?;
    csv_record(&mut w, path, &header)?;
    for (date, values) in &series.points {
        let mut row = vec![date.to_string()];
        row.extend(values.iter().map(|v| v.to_string()));
        csv_record(&mut w, path, &row)?;
    }
    csv_done(w, path)
}

/// Long-format JSON: one object per (date, column) observation.
pub fn save_time_series_json(series: &TimeSeries, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        date: NaiveDate,
        column: String,
        value: f64,
    }
    let dim = series.points.first().map_or(0, |(_, v)| v.len());
    let mut rows = Vec::new();
    for (date, values) in &series.points {
        for (k, &value) in values.iter().enumerate() {
            rows.push(Row {
                date: *date,
                column: if dim == 1 {
                    "count".into()
                } else {
                    format!("topic_{k}")
                },
                value,
            });
        }
    }
    write_json(&rows, path)
}

/// CSV columns: date, count.
pub fn save_top_days_csv(days: &[(NaiveDate, f64)], path: &Path) -> Result<()> {
    let mut w = csv_out(path)?;
    csv_record(&mut w, path, &["date".into(), "count".into()])?;
    for (date, count) in days {
        csv_record(&mut w, path, &[date.to_string(), count.to_string()])?;
    }
    csv_done(w, path)
}

/// Long-format JSON: one object per day.
pub fn save_top_days_json(days: &[(NaiveDate, f64)], path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        date: NaiveDate,
        count: f64,
    }
    let rows: Vec<Row> = days
        .iter()
        .map(|&(date, count)| Row { date, count })
        .collect();
    write_json(&rows, path)
}

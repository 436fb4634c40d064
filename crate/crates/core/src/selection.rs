//! Topic-count selection: four metrics over a grid of candidate K, raw and
//! rescaled to [0,1] for side-by-side comparison.

use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::{doc_topic_proportions, fit_gibbs, fit_vem, LdaConfig, LdaModel};
use crate::prep::DocTermMatrix;

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_THIN: usize = 10;

/// The four selection metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Griffiths2004,
    CaoJuan2009,
    Arun2010,
    Deveaud2014,
}

pub const ALL_METRICS: [Metric; 4] = [
    Metric::Griffiths2004,
    Metric::CaoJuan2009,
    Metric::Arun2010,
    Metric::Deveaud2014,
];

/// Whether a better model drives the metric up or down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Metric {
    pub fn direction(self) -> Direction {
        match self {
            Metric::Griffiths2004 | Metric::Deveaud2014 => Direction::Maximize,
            Metric::CaoJuan2009 | Metric::Arun2010 => Direction::Minimize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Griffiths2004 => "Griffiths2004",
            Metric::CaoJuan2009 => "CaoJuan2009",
            Metric::Arun2010 => "Arun2010",
            Metric::Deveaud2014 => "Deveaud2014",
        }
    }
}

/// Collapsed-Gibbs chain schedule for the Griffiths metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainParams {
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            burn_in: DEFAULT_BURN_IN,
            samples: DEFAULT_SAMPLES,
            thin: DEFAULT_THIN,
        }
    }
}

/// One metric's values across the K grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub metric: Metric,
    pub direction: Direction,
    pub raw: Vec<f64>,
    pub rescaled: Vec<f64>,
}

/// All four metric series aligned with the candidate topic counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub ks: Vec<usize>,
    pub series: Vec<MetricSeries>,
}

impl MetricReport {
    pub fn series_for(&self, metric: Metric) -> &MetricSeries {
        self.series
            .iter()
            .find(|s| s.metric == metric)
            .expect("all four metrics present")
    }
}

/// (v - min)/(max - min) per value; all-equal inputs rescale to all zeros.
pub fn rescale(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

fn check_fitted(model: &LdaModel, dtm: &DocTermMatrix) -> Result<()> {
    if model.gamma.rows() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            context: "metric: gamma rows vs documents".into(),
            expected: dtm.n_docs(),
            actual: model.gamma.rows(),
        });
    }
    if model.beta.cols() != dtm.n_terms() {
        return Err(Error::DimensionMismatch {
            context: "metric: beta columns vs vocabulary".into(),
            expected: dtm.n_terms(),
            actual: model.beta.cols(),
        });
    }
    Ok(())
}

/// Mean pairwise cosine similarity between topic-word rows. Lower means
/// better separated topics.
pub fn metric_cao_juan(model: &LdaModel) -> Result<f64> {
    let k = model.k();
    if k < 2 {
        return Err(Error::DegenerateTopics {
            message: "CaoJuan2009 needs at least 2 topics".into(),
        });
    }
    let norms: Vec<f64> = (0..k)
        .map(|i| model.beta.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if norms.contains(&0.0) {
        return Err(Error::DegenerateTopics {
            message: "zero-norm topic row".into(),
        });
    }
    let mut total = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let dot: f64 = model
                .beta
                .row(i)
                .iter()
                .zip(model.beta.row(j))
                .map(|(a, b)| a * b)
                .sum();
            total += dot / (norms[i] * norms[j]);
        }
    }
    Ok(total / (k * (k - 1) / 2) as f64)
}

fn kl_base2_to_mid(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a * (a / b).log2())
        .sum()
}

/// Mean pairwise Jensen-Shannon divergence (base 2) between topic rows.
/// Higher means better separated topics. Panics when K < 2.
pub fn metric_deveaud(model: &LdaModel) -> f64 {
    let k = model.k();
    assert!(k >= 2, "Deveaud2014 needs at least 2 topics");
    let mut total = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let p = model.beta.row(i);
            let q = model.beta.row(j);
            let m: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| 0.5 * (a + b)).collect();
            total += 0.5 * kl_base2_to_mid(p, &m) + 0.5 * kl_base2_to_mid(q, &m);
        }
    }
    total / (k * (k - 1) / 2) as f64
}

/// Symmetric KL (natural log) with 1e-12 flooring on both arguments.
fn symmetric_kl(c1: &[f64], c2: &[f64]) -> f64 {
    let f = 1e-12;
    let mut total = 0.0;
    for (&a, &b) in c1.iter().zip(c2) {
        let (a, b) = (a.max(f), b.max(f));
        total += a * (a / b).ln() + b * (b / a).ln();
    }
    total
}

/// Symmetric KL divergence between the normalized singular-value spectrum of
/// beta and the normalized document-length-weighted topic distribution.
/// Lower is better.
pub fn metric_arun(model: &LdaModel, dtm: &DocTermMatrix) -> Result<f64> {
    check_fitted(model, dtm)?;
    let k = model.k();

    // Singular values of beta via the K x K Gram matrix.
    let gram = DMatrix::from_fn(k, k, |i, j| {
        model
            .beta
            .row(i)
            .iter()
            .zip(model.beta.row(j))
            .map(|(a, b)| a * b)
            .sum::<f64>()
    });
    let mut c1: Vec<f64> = gram
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    c1.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    let s1: f64 = c1.iter().sum();
    for x in &mut c1 {
        *x /= s1;
    }

    let theta = doc_topic_proportions(model);
    let mut c2 = vec![0.0f64; k];
    for d in 0..dtm.n_docs() {
        let len = dtm.doc_len(d) as f64;
        for (kk, &t) in theta.row(d).iter().enumerate() {
            c2[kk] += len * t;
        }
    }
    let s2: f64 = c2.iter().sum();
    for x in &mut c2 {
        *x /= s2;
    }
    c2.sort_by(|a, b| b.partial_cmp(a).expect("finite topic weights"));

    Ok(symmetric_kl(&c1, &c2))
}

/// Log harmonic mean of P(w|z) over retained Gibbs samples, computed in log
/// space: log S - logsumexp(-ll). Higher is better.
pub fn metric_griffiths(
    dtm: &DocTermMatrix,
    config: &LdaConfig,
    chain: &ChainParams,
) -> Result<f64> {
    let (_, lls) = fit_gibbs(dtm, config, chain.burn_in, chain.samples, chain.thin)?;
    Ok(log_harmonic_mean(&lls))
}

fn log_harmonic_mean(lls: &[f64]) -> f64 {
    let max_neg = lls.iter().map(|&l| -l).fold(f64::NEG_INFINITY, f64::max);
    let lse = max_neg + lls.iter().map(|&l| (-l - max_neg).exp()).sum::<f64>().ln();
    (lls.len() as f64).ln() - lse
}

/// Seed for the fit at one k, derived from the base seed by a splitmix64
/// finalizer so neighboring grid points decorrelate.
fn derive_seed(base: u64, k: usize) -> u64 {
    let mut x = base ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Fits VEM (Cao/Arun/Deveaud) and a Gibbs chain (Griffiths) at every k and
/// assembles the rescaled report. Per-k seeds derive from (template.seed, k);
/// template alpha and delta are used verbatim at every k.
pub fn select_k(
    dtm: &DocTermMatrix,
    ks: &[usize],
    template: &LdaConfig,
    chain: &ChainParams,
) -> Result<MetricReport> {
    if ks.is_empty() {
        return Err(Error::InvalidConfig {
            message: "candidate k list is empty".into(),
        });
    }
    if let Some(&bad) = ks.iter().find(|&&k| k < 2) {
        return Err(Error::InvalidConfig {
            message: format!("candidate k must be at least 2, got {bad}"),
        });
    }

    struct PerK {
        griffiths: f64,
        cao: f64,
        arun: f64,
        deveaud: f64,
    }

    let per_k: Vec<Result<PerK>> = ks
        .par_iter()
        .map(|&k| {
            let mut cfg = template.clone();
            cfg.k = k;
            cfg.seed = derive_seed(template.seed, k);
            let model = fit_vem(dtm, &cfg)?;
            Ok(PerK {
                griffiths: metric_griffiths(dtm, &cfg, chain)?,
                cao: metric_cao_juan(&model)?,
                arun: metric_arun(&model, dtm)?,
                deveaud: metric_deveaud(&model),
            })
        })
        .collect();

    let mut griffiths = Vec::with_capacity(ks.len());
    let mut cao = Vec::with_capacity(ks.len());
    let mut arun = Vec::with_capacity(ks.len());
    let mut deveaud = Vec::with_capacity(ks.len());
    for r in per_k {
        let r = r?;
        griffiths.push(r.griffiths);
        cao.push(r.cao);
        arun.push(r.arun);
        deveaud.push(r.deveaud);
    }
    for (metric, values) in ALL_METRICS.iter().zip([&griffiths, &cao, &arun, &deveaud]) {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                context: format!("{} value {bad}", metric.name()),
            });
        }
    }

    let series = [
        (Metric::Griffiths2004, griffiths),
        (Metric::CaoJuan2009, cao),
        (Metric::Arun2010, arun),
        (Metric::Deveaud2014, deveaud),
    ]
    .into_iter()
    .map(|(metric, raw)| MetricSeries {
        metric,
        direction: metric.direction(),
        rescaled: rescale(&raw),
        raw,
    })
    .collect();

    Ok(MetricReport {
        ks: ks.to_vec(),
        series,
    })
}

/// Writes the report as CSV: k,metric,raw,rescaled,direction.
pub fn save_metric_report_csv(report: &MetricReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::unreadable(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::unreadable(path, e);
    writeln!(w, "k,metric,raw,rescaled,direction").map_err(io_err)?;
    for s in &report.series {
        for (i, &k) in report.ks.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{:?}",
                k,
                s.metric.name(),
                s.raw[i],
                s.rescaled[i],
                s.direction
            )
            .map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Writes the report as long-format JSON: one object per (k, metric) point.
pub fn save_metric_report_json(report: &MetricReport, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        k: usize,
        metric: &'a str,
        raw: f64,
        rescaled: f64,
        direction: Direction,
    }
    let mut rows = Vec::new();
    for s in &report.series {
        for (i, &k) in report.ks.iter().enumerate() {
            rows.push(Row {
                k,
                metric: s.metric.name(),
                raw: s.raw[i],
                rescaled: s.rescaled[i],
                direction: s.direction,
            });
        }
    }
    let text = serde_json::to_string_pretty(&rows).expect("report serializes");
    std::fs::write(path, text).map_err(|e| Error::unreadable(path, e))
}

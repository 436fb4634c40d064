//! Acceptance gate: one test per criterion, each printing a PASS line with
//! the measured quantities once its assertions hold.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;
use textmine::analysis::{
    corpus_topic_proportions, topic_prevalence_over_time, volume_by_day, word_importance, Period,
};
use textmine::corpus::{Document, WordList, WordListKind};
use textmine::lda::{fit_gibbs, fit_vem, load_model, save_model, Backend, LdaConfig, LdaModel};
use textmine::mat::DenseMatrix;
use textmine::prep::{DocTermMatrix, Vocabulary};
use textmine::quality::{gate_corpus, Thresholds, Tier};
use textmine::selection::{metric_griffiths, select_k, ChainParams, Direction, Metric};

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn sample_dirichlet(rng: &mut ChaCha8Rng, alpha: f64, k: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("valid gamma");
    let mut v: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    if s <= 0.0 {
        return vec![1.0 / k as f64; k];
    }
    for x in &mut v {
        *x /= s;
    }
    v
}

fn sample_cat(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let total: f64 = p.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Dense count rows to a DocTermMatrix over zero-padded synthetic terms.
fn dtm_from_counts(counts: &[Vec<u32>]) -> DocTermMatrix {
    let v = counts[0].len();
    let width = (v.max(2) - 1).to_string().len();
    let terms: Vec<String> = (0..v).map(|i| format!("t{i:0width$}")).collect();
    let rows = counts
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(t, &c)| (t, c))
                .collect()
        })
        .collect();
    let ids = (0..counts.len()).map(|d| format!("d{d}")).collect();
    DocTermMatrix::from_parts(Vocabulary::from_sorted_terms(terms), ids, rows)
}

/// Tokens drawn from the LDA generative process: theta per doc from a
/// symmetric Dirichlet, then (topic, word) draws per token.
fn generative_corpus(
    rng: &mut ChaCha8Rng,
    beta: &[Vec<f64>],
    m: usize,
    l: usize,
    theta_conc: f64,
) -> Vec<Vec<u32>> {
    let k = beta.len();
    let v = beta[0].len();
    (0..m)
        .map(|_| {
            let theta = sample_dirichlet(rng, theta_conc, k);
            let mut row = vec![0u32; v];
            for _ in 0..l {
                let z = sample_cat(rng, &theta);
                row[sample_cat(rng, &beta[z])] += 1;
            }
            row
        })
        .collect()
}

#[test]
fn criterion_1_quality_tier_constants() {
    let t0 = Instant::now();
    let dict_words = [
        "farm", "water", "crop", "land", "war", "peace", "army", "troop", "tax", "fund", "senator",
        "letter", "office", "budget", "school", "road", "health", "state", "county", "town",
    ];
    let dictionary = WordList::new(WordListKind::Dictionary, dict_words);
    let hits = dict_words;
    let miss = ["zzxq", "qqvw", "xjqp", "wwyz", "kkpq", "vvnm"];

    let mut docs = Vec::with_capacity(4165);
    let word = |i: usize, j: usize| hits[(i + j) % hits.len()];
    for i in 0..1087 {
        // 4 of 10 hits: score 0.4, below the 0.5 cut.
        let text = format!(
            "{} {} {} {} {} {} {} {} {} {}",
            word(i, 0),
            miss[0],
            miss[1],
            word(i, 1),
            miss[2],
            miss[3],
            word(i, 2),
            miss[4],
            word(i, 3),
            miss[5],
        );
        docs.push(Document {
            id: format!("drop{i}"),
            text,
            date: None,
            source_tag: String::new(),
        });
    }
    for i in 0..477 {
        // 19 of 20 hits: score 0.95, above the 0.9 cut; the one miss is a
        // typo whose unique nearest dictionary word is "town".
        let mut words: Vec<&str> = (0..19).map(|j| word(i, j)).collect();
        words.insert(i % 20, "twon");
        docs.push(Document {
            id: format!("fix{i}"),
            text: words.join(" "),
            date: None,
            source_tag: String::new(),
        });
    }
    for i in 0..2601 {
        // 7 of 10 hits: score 0.7, inside the keep band.
        let text = format!(
            "{} {} {} {} {} {} {} {} {} {}",
            word(i, 0),
            word(i, 1),
            miss[0],
            word(i, 2),
            miss[1],
            word(i, 3),
            word(i, 4),
            miss[2],
            word(i, 5),
            word(i, 6),
        );
        docs.push(Document {
            id: format!("keep{i}"),
            text,
            date: None,
            source_tag: String::new(),
        });
    }
    assert_eq!(docs.len(), 4165);

    let thresholds = Thresholds::new(0.5, 0.9).unwrap();
    let (kept, reports) = gate_corpus(&docs, &dictionary, &thresholds, 2).unwrap();
    let count = |t: Tier| reports.iter().filter(|r| r.tier == t).count();
    assert_eq!(count(Tier::Drop), 1087, "criterion 1: drop count");
    assert_eq!(count(Tier::Correct), 477, "criterion 1: correct count");
    assert_eq!(count(Tier::Keep), 2601, "criterion 1: keep count");
    assert_eq!(kept.len(), 3078, "criterion 1: kept-or-corrected count");
    let fixed = kept.iter().find(|d| d.id == "fix0").unwrap();
    assert!(fixed.text.contains("town") && !fixed.text.contains("twon"));
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 30, "criterion 1: took {elapsed:?}");
    println!(
        "criterion 1: PASS (4165 docs: 1087 dropped, 477 corrected, 3078 retained in {:?})",
        elapsed
    );
}

#[test]
fn criterion_2_porter_conformance() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/porter_vectors.tsv");
    let text = std::fs::read_to_string(path).unwrap();
    let mut total = 0usize;
    let mut mismatches = Vec::new();
    for line in text.lines() {
        let (word, expected) = line.split_once('\t').unwrap();
        total += 1;
        let got = textmine::prep::stem(word);
        if got != expected {
            mismatches.push(format!("{word}: got {got}, want {expected}"));
        }
    }
    assert!(total >= 500, "criterion 2: only {total} vectors");
    assert!(
        mismatches.is_empty(),
        "criterion 2: {} mismatches, first: {}",
        mismatches.len(),
        mismatches[0]
    );
    println!("criterion 2: PASS ({total} reference vectors, 0 mismatches)");
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn criterion_3_vem_recovery() {
    let t0 = Instant::now();
    let (k, block, m, l) = (3usize, 10usize, 200usize, 50usize);
    let v = k * block;
    // Disjoint Zipf-weighted blocks of 10 terms per topic.
    let mut w: Vec<f64> = (0..block).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let ws: f64 = w.iter().sum();
    for x in &mut w {
        *x /= ws;
    }
    let mut true_beta = vec![vec![0.0; v]; k];
    for kk in 0..k {
        for i in 0..block {
            true_beta[kk][kk * block + i] = w[i];
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let counts = generative_corpus(&mut rng, &true_beta, m, l, 0.3);
    let dtm = dtm_from_counts(&counts);

    let mut config = LdaConfig::new(k).with_seed(11);
    config.alpha = 0.3;
    config.em_tol = 1e-6;
    config.max_em_iters = 150;
    let model = fit_vem(&dtm, &config).unwrap();

    for pair in model.elbo_trace.windows(2) {
        assert!(
            pair[1] >= pair[0] - 1e-6 * pair[0].abs(),
            "criterion 3: ELBO decreased from {} to {}",
            pair[0],
            pair[1]
        );
    }

    // Greedy matching on total variation, ties by lower index.
    let mut pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    pairs.sort_by(|&(i1, j1), &(i2, j2)| {
        let a = total_variation(&true_beta[i1], model.beta.row(j1));
        let b = total_variation(&true_beta[i2], model.beta.row(j2));
        a.partial_cmp(&b)
            .unwrap()
            .then_with(|| (i1, j1).cmp(&(i2, j2)))
    });
    let mut used_true = vec![false; k];
    let mut used_fit = vec![false; k];
    let mut tvs = Vec::new();
    for (i, j) in pairs {
        if !used_true[i] && !used_fit[j] {
            used_true[i] = true;
            used_fit[j] = true;
            tvs.push(total_variation(&true_beta[i], model.beta.row(j)));
        }
    }
    let mean_tv = tvs.iter().sum::<f64>() / k as f64;
    assert!(mean_tv <= 0.1, "criterion 3: mean TV {mean_tv}");
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 60, "criterion 3: took {elapsed:?}");
    println!(
        "criterion 3: PASS (ELBO nondecreasing over {} iterations, mean TV {:.4} in {:?})",
        model.elbo_trace.len(),
        mean_tv,
        elapsed
    );
}

/// Exact log P(w) for the 2-document, 6-token, V=3, K=2 corpus by summing
/// the collapsed joint over all 64 assignments.
fn exact_log_evidence(alpha: f64, delta: f64) -> f64 {
    let docs: [&[usize]; 2] = [&[0, 0, 1], &[1, 2, 2]];
    let (k, v) = (2usize, 3usize);
    let mut terms = Vec::with_capacity(64);
    for mask in 0u32..64 {
        let z: Vec<usize> = (0..6).map(|b| ((mask >> b) & 1) as usize).collect();
        let mut lp = 0.0;
        let mut nkv = vec![vec![0usize; v]; k];
        let mut nk = vec![0usize; k];
        let mut pos = 0;
        for doc in docs {
            let mut ndk = vec![0usize; k];
            for &word in doc {
                let topic = z[pos];
                pos += 1;
                ndk[topic] += 1;
                nkv[topic][word] += 1;
                nk[topic] += 1;
            }
            lp += ln_gamma(k as f64 * alpha) - ln_gamma(k as f64 * alpha + doc.len() as f64);
            for &c in &ndk {
                lp += ln_gamma(alpha + c as f64) - ln_gamma(alpha);
            }
        }
        for kk in 0..k {
            lp += ln_gamma(v as f64 * delta) - ln_gamma(v as f64 * delta + nk[kk] as f64);
            for &c in &nkv[kk] {
                lp += ln_gamma(delta + c as f64) - ln_gamma(delta);
            }
        }
        terms.push(lp);
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

#[test]
fn criterion_4_exact_enumeration_bracket() {
    let t0 = Instant::now();
    let exact = exact_log_evidence(0.5, 0.5);
    assert!(
        (exact - -7.579509060188357).abs() < 1e-9,
        "criterion 4: enumeration drifted to {exact}"
    );

    let counts = vec![vec![2u32, 1, 0], vec![0, 1, 2]];
    let dtm = dtm_from_counts(&counts);
    let chain = ChainParams {
        burn_in: 1000,
        samples: 100,
        thin: 10,
    };
    let mut worst: f64 = 0.0;
    for seed in 1..=5u64 {
        let mut config = LdaConfig::new(2).with_seed(seed);
        config.alpha = 0.5;
        config.delta = 0.5;
        let estimate = metric_griffiths(&dtm, &config, &chain).unwrap();
        let err = (estimate - exact).abs();
        worst = worst.max(err);
        assert!(
            err <= 0.5,
            "criterion 4: seed {seed} estimate {estimate} vs exact {exact}"
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 10, "criterion 4: took {elapsed:?}");
    println!(
        "criterion 4: PASS (exact {exact:.6}, worst seed error {worst:.4} nats in {elapsed:?})"
    );
}

/// True topics for the selection corpus: 5 private Zipf blocks of 12 terms
/// (mass 0.7) plus 4 shared terms per topic pair (mass 0.075 per pair).
fn bridge_beta() -> Vec<Vec<f64>> {
    let (k, private, bridge, p_private) = (5usize, 12usize, 4usize, 0.7f64);
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();
    let v = k * private + pairs.len() * bridge;
    let mut w: Vec<f64> = (0..private).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let ws: f64 = w.iter().sum();
    for x in &mut w {
        *x = *x / ws * p_private;
    }
    let mut beta = vec![vec![0.0; v]; k];
    for kk in 0..k {
        for i in 0..private {
            beta[kk][kk * private + i] = w[i];
        }
    }
    let q = (1.0 - p_private) / (k as f64 - 1.0);
    for (pi, &(i, j)) in pairs.iter().enumerate() {
        let lo = k * private + pi * bridge;
        for b in 0..bridge {
            beta[i][lo + b] = q / bridge as f64;
            beta[j][lo + b] = q / bridge as f64;
        }
    }
    beta
}

#[test]
fn criterion_5_k_selection_behavior() {
    let t0 = Instant::now();
    let true_beta = bridge_beta();
    assert_eq!(true_beta[0].len(), 100);
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let counts = generative_corpus(&mut rng, &true_beta, 500, 100, 0.3);
    let dtm = dtm_from_counts(&counts);

    let mut template = LdaConfig::new(5).with_seed(42);
    template.alpha = 0.5;
    template.delta = 3.0;
    template.em_tol = 1e-6;
    template.max_em_iters = 150;
    let chain = ChainParams {
        burn_in: 150,
        samples: 20,
        thin: 5,
    };
    let ks: Vec<usize> = (2..=10).collect();
    let report = select_k(&dtm, &ks, &template, &chain).unwrap();

    let best_of = |metric: Metric| {
        let s = report.series_for(metric);
        let mut best = 0;
        for (i, &val) in s.raw.iter().enumerate() {
            let better = match s.direction {
                Direction::Maximize => val > s.raw[best],
                Direction::Minimize => val < s.raw[best],
            };
            if better {
                best = i;
            }
        }
        report.ks[best]
    };
    let cao_k = best_of(Metric::CaoJuan2009);
    let deveaud_k = best_of(Metric::Deveaud2014);
    assert!(
        (4..=6).contains(&cao_k),
        "criterion 5: CaoJuan2009 minimizer at k = {cao_k}"
    );
    assert!(
        (4..=6).contains(&deveaud_k),
        "criterion 5: Deveaud2014 maximizer at k = {deveaud_k}"
    );
    for s in &report.series {
        let min = s.rescaled.iter().copied().fold(f64::INFINITY, f64::min);
        let max = s.rescaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(
            s.rescaled.iter().all(|&x| (0.0..=1.0).contains(&x)),
            "criterion 5: rescaled out of range"
        );
        assert_eq!(min, 0.0, "criterion 5: rescaled min");
        assert_eq!(max, 1.0, "criterion 5: rescaled max");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs() < 300, "criterion 5: took {elapsed:?}");
    println!(
        "criterion 5: PASS (CaoJuan2009 min at k={cao_k}, Deveaud2014 max at k={deveaud_k} in {elapsed:?})"
    );
}

fn runner() -> TestRunner {
    TestRunner::new(PtConfig {
        cases: 128,
        failure_persistence: None,
        ..PtConfig::default()
    })
}

fn uniform_model(k: usize, v: usize, gamma_rows: Vec<Vec<f64>>) -> LdaModel {
    let m = gamma_rows.len();
    let gamma = DenseMatrix::from_vec(m, k, gamma_rows.into_iter().flatten().collect());
    LdaModel {
        config: LdaConfig::new(k),
        beta: DenseMatrix::from_vec(k, v, vec![1.0 / v as f64; k * v]),
        gamma,
        elbo_trace: vec![],
        backend: Backend::Vem,
    }
}

fn counts_strategy() -> impl Strategy<Value = (Vec<Vec<u32>>, Vec<Vec<f64>>)> {
    (1usize..6, 1usize..5, 2usize..8).prop_flat_map(|(m, k, v)| {
        (
            prop::collection::vec(prop::collection::vec(0u32..5, v), m),
            prop::collection::vec(prop::collection::vec(0.01f64..10.0, k), m),
        )
    })
}

#[test]
fn criterion_6_analysis_invariants() {
    // corpus_topic_proportions sums to 1.
    runner()
        .run(&counts_strategy(), |(mut counts, gamma)| {
            counts[0][0] = counts[0][0].max(1);
            let dtm = dtm_from_counts(&counts);
            let model = uniform_model(gamma[0].len(), counts[0].len(), gamma);
            let props = corpus_topic_proportions(&model, &dtm).unwrap();
            let sum: f64 = props.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
            Ok(())
        })
        .unwrap();

    // Every prevalence vector sums to 1.
    let dated = (counts_strategy(), 0usize..3).prop_flat_map(|((counts, gamma), period)| {
        let m = counts.len();
        (
            Just(counts),
            Just(gamma),
            Just(period),
            prop::collection::vec(prop::option::of(0u64..60), m),
        )
    });
    runner()
        .run(&dated, |(mut counts, gamma, period, offsets)| {
            counts[0][0] = counts[0][0].max(1);
            let dtm = dtm_from_counts(&counts);
            let model = uniform_model(gamma[0].len(), counts[0].len(), gamma);
            let base = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
            let docs: Vec<Document> = offsets
                .iter()
                .enumerate()
                .map(|(i, off)| {
                    // Doc 0 is always dated so at least one bucket exists.
                    let date = if off.is_some() || i == 0 {
                        Some(base.checked_add_days(Days::new(off.unwrap_or(0))).unwrap())
                    } else {
                        None
                    };
                    Document {
                        id: format!("d{i}"),
                        text: String::new(),
                        date,
                        source_tag: String::new(),
                    }
                })
                .collect();
            let period = [Period::Day, Period::Week, Period::Month][period];
            let series = topic_prevalence_over_time(&model, &dtm, &docs, period).unwrap();
            for (_, vecvals) in &series.points {
                let sum: f64 = vecvals.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
            }
            Ok(())
        })
        .unwrap();

    // word_importance sums to 0 when both groups are nonempty.
    let grouped = (2usize..7, 2usize..8).prop_flat_map(|(m, v)| {
        (
            prop::collection::vec(prop::collection::vec(0u32..5, v), m),
            prop::collection::vec(0usize..3, m),
        )
    });
    runner()
        .run(&grouped, |(mut counts, mut topics)| {
            let v = counts[0].len();
            for (d, row) in counts.iter_mut().enumerate() {
                row[d % v] = row[d % v].max(1);
            }
            topics[0] = 0;
            topics[1] = 1;
            let dtm = dtm_from_counts(&counts);
            let rows = word_importance(&dtm, &topics, 0).unwrap();
            let sum: f64 = rows.iter().map(|r| r.1).sum();
            prop_assert!(sum.abs() < 1e-9, "sum {sum}");
            prop_assert!(rows.iter().all(|r| (-1.0..=1.0).contains(&r.1)));
            Ok(())
        })
        .unwrap();

    // volume_by_day totals the dated documents.
    let dates = prop::collection::vec(prop::option::of(0u64..90), 1..40);
    runner()
        .run(&dates, |offsets| {
            let base = NaiveDate::from_ymd_opt(2007, 1, 1).unwrap();
            let mut docs: Vec<Document> = offsets
                .iter()
                .enumerate()
                .map(|(i, off)| Document {
                    id: format!("d{i}"),
                    text: String::new(),
                    date: off.map(|o| base.checked_add_days(Days::new(o)).unwrap()),
                    source_tag: String::new(),
                })
                .collect();
            docs[0].date = Some(base);
            let dated = docs.iter().filter(|d| d.date.is_some()).count();
            let series = volume_by_day(&docs).unwrap();
            let total: f64 = series.points.iter().map(|(_, v)| v[0]).sum();
            prop_assert!((total - dated as f64).abs() < 1e-12, "total {total}");
            Ok(())
        })
        .unwrap();

    println!("criterion 6: PASS (4 invariants, 128 randomized cases each)");
}

fn run_command(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_textmine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn snapshot(out_dir: &Path, names: &[&str]) -> Vec<(String, Vec<u8>)> {
    names
        .iter()
        .map(|n| {
            (
                n.to_string(),
                std::fs::read(out_dir.join(n)).unwrap_or_else(|_| panic!("missing {n}")),
            )
        })
        .collect()
}

#[test]
fn criterion_7_rerun_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config_path = dir.path().join("config.json");
    let config = serde_json::json!({
        "corpus": {
            "path": data_file("fixture_corpus.jsonl").to_str().unwrap(),
            "format": "jsonl"
        },
        "stopwords": [data_file("stopwords.txt").to_str().unwrap()],
        "dictionary": data_file("dictionary.txt").to_str().unwrap(),
        "prep": {"min_term_count": 2, "min_doc_length": 3, "stem": true},
        "lda": {
            "k": 2, "alpha": null, "delta": 0.1, "max_em_iters": 60,
            "em_tol": 1e-4, "max_e_iters": 100, "e_tol": 1e-3
        },
        "k_grid": [2, 3],
        "chain": {"burn_in": 60, "samples": 10, "thin": 2},
        "out_dir": out_dir.to_str().unwrap(),
        "seed": 7
    });
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let cfg = config_path.to_str().unwrap();

    let fit_files = [
        "model.lda",
        "top_terms.csv",
        "top_terms.json",
        "proportions.csv",
        "proportions.json",
        "manifest.json",
    ];
    let mut fit_runs = Vec::new();
    for _ in 0..3 {
        let out = run_command(&["fit", "--config", cfg]);
        assert!(
            out.status.success(),
            "criterion 7: fit failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        fit_runs.push(snapshot(&out_dir, &fit_files));
    }
    assert_eq!(fit_runs[0], fit_runs[1], "criterion 7: fit rerun differs");
    assert_eq!(fit_runs[0], fit_runs[2], "criterion 7: fit rerun differs");

    let select_files = ["metrics.csv", "metrics.json", "manifest.json"];
    let mut select_runs = Vec::new();
    for _ in 0..3 {
        let out = run_command(&["select-k", "--config", cfg]);
        assert!(
            out.status.success(),
            "criterion 7: select-k failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        select_runs.push(snapshot(&out_dir, &select_files));
    }
    assert_eq!(
        select_runs[0], select_runs[1],
        "criterion 7: select-k rerun differs"
    );
    assert_eq!(
        select_runs[0], select_runs[2],
        "criterion 7: select-k rerun differs"
    );

    println!(
        "criterion 7: PASS (fit and select-k byte-identical across 3 runs, {} files checked)",
        fit_files.len() + select_files.len()
    );
}

fn assert_matrix_bits(a: &DenseMatrix, b: &DenseMatrix, what: &str) {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()), "{what} shape");
    for (x, y) in a.data().iter().zip(b.data()) {
        assert_eq!(x.to_bits(), y.to_bits(), "{what} bits");
    }
}

#[test]
fn criterion_8_archive_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let beta = vec![
        vec![0.5, 0.3, 0.1, 0.1],
        vec![0.05, 0.15, 0.4, 0.4],
        vec![0.25, 0.25, 0.25, 0.25],
    ];
    let counts = generative_corpus(&mut rng, &beta, 12, 9, 0.4);
    let dtm = dtm_from_counts(&counts);
    let dir = tempfile::tempdir().unwrap();

    let mut config = LdaConfig::new(3).with_seed(5);
    config.alpha = 50.0 / 3.0;
    let vem = fit_vem(&dtm, &config).unwrap();
    let (gibbs, _) = fit_gibbs(&dtm, &config, 30, 5, 2).unwrap();

    for (name, model) in [("vem.lda", &vem), ("gibbs.lda", &gibbs)] {
        let path = dir.path().join(name);
        save_model(model, dtm.vocab(), &path).unwrap();
        let (loaded, vocab) = load_model(&path).unwrap();
        assert_matrix_bits(&model.beta, &loaded.beta, "beta");
        assert_matrix_bits(&model.gamma, &loaded.gamma, "gamma");
        assert_eq!(model.config, loaded.config, "criterion 8: config");
        assert_eq!(model.backend, loaded.backend, "criterion 8: backend");
        assert_eq!(
            model.elbo_trace.len(),
            loaded.elbo_trace.len(),
            "criterion 8: trace length"
        );
        for (x, y) in model.elbo_trace.iter().zip(&loaded.elbo_trace) {
            assert_eq!(x.to_bits(), y.to_bits(), "criterion 8: trace bits");
        }
        assert_eq!(
            vocab.terms(),
            dtm.vocab().terms(),
            "criterion 8: vocabulary"
        );
    }
    println!("criterion 8: PASS (VEM and Gibbs archives round-trip bit-exactly)");
}

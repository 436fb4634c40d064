//! Collapsed Gibbs sampling for LDA. Sequential by definition; used as a
//! diagnostic backend and for the Griffiths2004 selection metric.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lda::{Backend, LdaConfig, LdaModel};
use crate::mat::DenseMatrix;
use crate::prep::DocTermMatrix;

/// Per-token topic assignments with their count marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignmentState {
    /// z[d][i]: topic of token i of document d. Tokens expand the sparse row
    /// in ascending term order, each term repeated by its count.
    pub z: Vec<Vec<usize>>,
    /// K x V term assignment counts.
    pub topic_term_counts: Vec<Vec<u64>>,
    /// M x K document assignment counts.
    pub doc_topic_counts: Vec<Vec<u64>>,
    /// Per-topic totals.
    pub topic_totals: Vec<u64>,
}

/// Expands each sparse row into explicit token terms, ascending term order.
fn expand_tokens(dtm: &DocTermMatrix) -> Vec<Vec<usize>> {
    (0..dtm.n_docs())
        .map(|d| {
            let mut toks = Vec::with_capacity(dtm.doc_len(d) as usize);
            for &(term, count) in dtm.row(d) {
                toks.extend(std::iter::repeat_n(term, count as usize));
            }
            toks
        })
        .collect()
}

impl TopicAssignmentState {
    fn init(dtm: &DocTermMatrix, tokens: &[Vec<usize>], k: usize, rng: &mut ChaCha8Rng) -> Self {
        let m = dtm.n_docs();
        let v = dtm.n_terms();
        let mut state = TopicAssignmentState {
            z: Vec::with_capacity(m),
            topic_term_counts: vec![vec![0; v]; k],
            doc_topic_counts: vec![vec![0; k]; m],
            topic_totals: vec![0; k],
        };
        for (d, toks) in tokens.iter().enumerate() {
            let mut zd = Vec::with_capacity(toks.len());
            for &w in toks {
                let topic = rng.random_range(0..k);
                zd.push(topic);
                state.topic_term_counts[topic][w] += 1;
                state.doc_topic_counts[d][topic] += 1;
                state.topic_totals[topic] += 1;
            }
            state.z.push(zd);
        }
        state
    }

    /// True when all three count tables equal the marginals recomputed
    /// from z over the given token expansion.
    pub fn consistent(&self, dtm: &DocTermMatrix) -> bool {
        let tokens = expand_tokens(dtm);
        if tokens.len() != self.z.len() {
            return false;
        }
        let k = self.topic_totals.len();
        let v = dtm.n_terms();
        let mut ttc = vec![vec![0u64; v]; k];
        let mut dtc = vec![vec![0u64; k]; tokens.len()];
        let mut tot = vec![0u64; k];
        for (d, toks) in tokens.iter().enumerate() {
            if toks.len() != self.z[d].len() {
                return false;
            }
            for (&w, &topic) in toks.iter().zip(&self.z[d]) {
                if topic >= k {
                    return false;
                }
                ttc[topic][w] += 1;
                dtc[d][topic] += 1;
                tot[topic] += 1;
            }
        }
        ttc == self.topic_term_counts && dtc == self.doc_topic_counts && tot == self.topic_totals
    }
}

/// One full sweep: resamples every token's topic from its collapsed
/// conditional P(z=k) proportional to
/// (n_dk + alpha)(n_kw + delta)/(n_k + V delta), all counts excluding the
/// token itself.
fn sweep(
    state: &mut TopicAssignmentState,
    tokens: &[Vec<usize>],
    alpha: f64,
    delta: f64,
    v_delta: f64,
    rng: &mut ChaCha8Rng,
) {
    let k = state.topic_totals.len();
    let mut probs = vec![0.0f64; k];
    for (d, toks) in tokens.iter().enumerate() {
        for (i, &w) in toks.iter().enumerate() {
            let old = state.z[d][i];
            state.topic_term_counts[old][w] -= 1;
            state.doc_topic_counts[d][old] -= 1;
            state.topic_totals[old] -= 1;

            let mut total = 0.0;
            for (kk, slot) in probs.iter_mut().enumerate() {
                let p = (state.doc_topic_counts[d][kk] as f64 + alpha)
                    * (state.topic_term_counts[kk][w] as f64 + delta)
                    / (state.topic_totals[kk] as f64 + v_delta);
                total += p;
                *slot = total;
            }
            let u = rng.random::<f64>() * total;
            let new = probs.iter().position(|&c| u < c).unwrap_or(k - 1);

            state.z[d][i] = new;
            state.topic_term_counts[new][w] += 1;
            state.doc_topic_counts[d][new] += 1;
            state.topic_totals[new] += 1;
        }
    }
}

/// log P(w | z) for the current assignment, integrating beta out.
fn log_likelihood(state: &TopicAssignmentState, delta: f64, v: usize) -> f64 {
    let v_delta = v as f64 * delta;
    let lg_delta = ln_gamma(delta);
    let lg_vdelta = ln_gamma(v_delta);
    let mut total = 0.0;
    for (kk, terms) in state.topic_term_counts.iter().enumerate() {
        total += lg_vdelta - ln_gamma(state.topic_totals[kk] as f64 + v_delta);
        for &c in terms {
            if c > 0 {
                total += ln_gamma(c as f64 + delta) - lg_delta;
            }
        }
    }
    total
}

/// Runs a collapsed Gibbs chain: `burn_in` sweeps, then `samples` recordings
/// of log P(w|z) every `thin` sweeps. The returned model estimates beta and
/// gamma from the final sample's counts; its elbo_trace holds the recorded
/// log-likelihoods.
pub fn fit_gibbs(
    dtm: &DocTermMatrix,
    config: &LdaConfig,
    burn_in: usize,
    samples: usize,
    thin: usize,
) -> Result<(LdaModel, Vec<f64>)> {
    config.validate()?;
    if samples == 0 || thin == 0 {
        return Err(Error::InvalidConfig {
            message: "samples and thin must be at least 1".into(),
        });
    }
    let m = dtm.n_docs();
    if m == 0 {
        return Err(Error::EmptyCorpus);
    }
    let v = dtm.n_terms();
    if v == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let k = config.k;
    let (alpha, delta) = (config.alpha, config.delta);
    let v_delta = v as f64 * delta;

    let tokens = expand_tokens(dtm);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = TopicAssignmentState::init(dtm, &tokens, k, &mut rng);

    let total_sweeps = burn_in + samples * thin;
    let mut lls = Vec::with_capacity(samples);
    for s in 1..=total_sweeps {
        sweep(&mut state, &tokens, alpha, delta, v_delta, &mut rng);
        if s > burn_in && (s - burn_in).is_multiple_of(thin) {
            lls.push(log_likelihood(&state, delta, v));
        }
    }

    let mut beta = DenseMatrix::zeros(k, v);
    for kk in 0..k {
        let denom = state.topic_totals[kk] as f64 + v_delta;
        let row = beta.row_mut(kk);
        for (slot, &c) in row.iter_mut().zip(&state.topic_term_counts[kk]) {
            *slot = (c as f64 + delta) / denom;
        }
    }
    let mut gamma = DenseMatrix::zeros(m, k);
    for d in 0..m {
        let row = gamma.row_mut(d);
        for (slot, &c) in row.iter_mut().zip(&state.doc_topic_counts[d]) {
            *slot = c as f64 + alpha;
        }
    }

    let model = LdaModel {
        config: config.clone(),
        beta,
        gamma,
        elbo_trace: lls.clone(),
        backend: Backend::Gibbs,
    };
    Ok((model, lls))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prep::{build_dtm, TokenStream};

    fn stream(id: &str, tokens: &[&str]) -> TokenStream {
        TokenStream {
            doc_id: id.into(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn counts_stay_consistent_across_sweeps() {
        let (dtm, _) = build_dtm(&[stream("1", &["a", "a", "a"])], 1, 1).unwrap();
        let tokens = expand_tokens(&dtm);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = TopicAssignmentState::init(&dtm, &tokens, 2, &mut rng);
        assert!(state.consistent(&dtm));
        for _ in 0..25 {
            sweep(&mut state, &tokens, 0.5, 0.5, 1.0, &mut rng);
            assert!(state.consistent(&dtm));
        }
    }

    #[test]
    fn seed_determinism() {
        let (dtm, _) = build_dtm(
            &[
                stream("1", &["a", "b", "b", "c"]),
                stream("2", &["c", "c", "a"]),
            ],
            1,
            1,
        )
        .unwrap();
        let config = LdaConfig::new(2).with_seed(21);
        let (ma, la) = fit_gibbs(&dtm, &config, 10, 5, 2).unwrap();
        let (mb, lb) = fit_gibbs(&dtm, &config, 10, 5, 2).unwrap();
        assert_eq!(la, lb);
        assert_eq!(ma.beta, mb.beta);
        assert_eq!(ma.gamma, mb.gamma);
    }

    #[test]
    fn model_shapes_and_trace_length() {
        let (dtm, _) = build_dtm(
            &[stream("1", &["a", "b", "a"]), stream("2", &["b", "c"])],
            1,
            1,
        )
        .unwrap();
        let config = LdaConfig::new(3).with_seed(4);
        let (model, lls) = fit_gibbs(&dtm, &config, 7, 4, 3).unwrap();
        assert_eq!(lls.len(), 4);
        assert!(lls.iter().all(|x| x.is_finite() && *x < 0.0));
        assert_eq!(model.beta.rows(), 3);
        assert_eq!(model.beta.cols(), 3);
        assert_eq!(model.gamma.rows(), 2);
        for kk in 0..3 {
            let s: f64 = model.beta.row(kk).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let (dtm, _) = build_dtm(&[stream("1", &["a", "a"])], 1, 1).unwrap();
        assert!(fit_gibbs(&dtm, &LdaConfig::new(2), 5, 0, 1).is_err());
    }
}

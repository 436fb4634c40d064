//! Variational EM for LDA with a mean-field q(theta, z) = q(theta; gamma)
//! prod_n q(z_n; phi_n) family and a MAP M-step for beta under its
//! Dirichlet(delta) prior.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};
use crate::lda::{Backend, LdaConfig, LdaModel};
use crate::mat::DenseMatrix;
use crate::prep::DocTermMatrix;

/// Floor applied to unnormalized beta entries; keeps log-likelihoods finite
/// downstream.
const BETA_FLOOR: f64 = 1e-12;

fn log_matrix(m: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_vec(
        m.rows(),
        m.cols(),
        m.data().iter().map(|&x| x.ln()).collect(),
    )
}

/// beta_kv proportional to delta - 1 + sstats_kv, floored then renormalized.
fn m_step(sstats: &[f64], k: usize, v: usize, delta: f64) -> DenseMatrix {
    let mut beta = DenseMatrix::zeros(k, v);
    for kk in 0..k {
        let row = beta.row_mut(kk);
        let mut sum = 0.0;
        for vv in 0..v {
            let val = (delta - 1.0 + sstats[kk * v + vv]).max(BETA_FLOOR);
            row[vv] = val;
            sum += val;
        }
        for x in row {
            *x /= sum;
        }
    }
    beta
}

/// phi_nk proportional to beta_k,w_n exp(psi(gamma_k)), normalized per slot
/// in log space via max-subtraction. `dig` holds psi(gamma_k).
fn compute_phi(row: &[(usize, u32)], lbeta: &DenseMatrix, dig: &[f64], phi: &mut [f64]) {
    let k = dig.len();
    for (slot, &(term, _)) in row.iter().enumerate() {
        let p = &mut phi[slot * k..(slot + 1) * k];
        let mut max = f64::NEG_INFINITY;
        for kk in 0..k {
            let lp = lbeta.get(kk, term) + dig[kk];
            p[kk] = lp;
            if lp > max {
                max = lp;
            }
        }
        let mut sum = 0.0;
        for x in p.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        for x in p.iter_mut() {
            *x /= sum;
        }
    }
}

/// One document's E-step: fixed-point iteration on (phi, gamma) warm-started
/// from `gamma_init`, stopping when the mean absolute gamma change per topic
/// falls below e_tol. Returns gamma and the phi consistent with it.
fn e_step_doc(
    row: &[(usize, u32)],
    lbeta: &DenseMatrix,
    gamma_init: &[f64],
    config: &LdaConfig,
) -> (Vec<f64>, Vec<f64>) {
    let k = config.k;
    let mut g = gamma_init.to_vec();
    let mut dig = vec![0.0; k];
    let mut phi = vec![0.0; row.len() * k];
    for _ in 0..config.max_e_iters {
        for kk in 0..k {
            dig[kk] = digamma(g[kk]);
        }
        compute_phi(row, lbeta, &dig, &mut phi);
        let mut gnew = vec![config.alpha; k];
        for (slot, &(_, count)) in row.iter().enumerate() {
            let c = f64::from(count);
            for kk in 0..k {
                gnew[kk] += c * phi[slot * k + kk];
            }
        }
        let change: f64 = (0..k).map(|kk| (gnew[kk] - g[kk]).abs()).sum::<f64>() / k as f64;
        g = gnew;
        if change < config.e_tol {
            break;
        }
    }
    for kk in 0..k {
        dig[kk] = digamma(g[kk]);
    }
    compute_phi(row, lbeta, &dig, &mut phi);
    (g, phi)
}

/// Mean-field bound contribution of one document, with phi recomputed from
/// (beta, gamma_d) so the value is a pure function of the model.
fn doc_bound(row: &[(usize, u32)], lbeta: &DenseMatrix, g: &[f64], alpha: f64) -> f64 {
    let k = g.len();
    let gsum: f64 = g.iter().sum();
    let dig_sum = digamma(gsum);
    let elt: Vec<f64> = g.iter().map(|&x| digamma(x) - dig_sum).collect();

    let mut total = ln_gamma(k as f64 * alpha) - k as f64 * ln_gamma(alpha);
    total -= ln_gamma(gsum);
    for kk in 0..k {
        total += (alpha - 1.0) * elt[kk];
        total += ln_gamma(g[kk]);
        total -= (g[kk] - 1.0) * elt[kk];
    }

    let mut lp = vec![0.0; k];
    for &(term, count) in row {
        let mut max = f64::NEG_INFINITY;
        for kk in 0..k {
            let x = lbeta.get(kk, term) + elt[kk] + dig_sum;
            lp[kk] = x;
            if x > max {
                max = x;
            }
        }
        let mut sum = 0.0;
        for x in &mut lp {
            *x -= max;
            sum += x.exp();
        }
        let lsum = sum.ln();
        let c = f64::from(count);
        for kk in 0..k {
            let lphi = lp[kk] - lsum;
            let phi = lphi.exp();
            total += c * phi * (elt[kk] + lbeta.get(kk, term) - lphi);
        }
    }
    total
}

fn bound(dtm: &DocTermMatrix, beta: &DenseMatrix, gamma: &DenseMatrix, config: &LdaConfig) -> f64 {
    let lbeta = log_matrix(beta);
    let per_doc: Vec<f64> = (0..dtm.n_docs())
        .into_par_iter()
        .map(|d| doc_bound(dtm.row(d), &lbeta, gamma.row(d), config.alpha))
        .collect();
    let mut total = 0.0;
    for x in per_doc {
        total += x;
    }
    let (k, v) = (beta.rows() as f64, beta.cols() as f64);
    total += k * (ln_gamma(v * config.delta) - v * ln_gamma(config.delta));
    let mut lsum = 0.0;
    for x in log_matrix(beta).data() {
        lsum += x;
    }
    total + (config.delta - 1.0) * lsum
}

/// Evidence lower bound of a fitted model on a matrix: pure function of
/// (dtm, beta, gamma) with phi recomputed from gamma. Intended for Vem
/// models.
pub fn elbo(dtm: &DocTermMatrix, model: &LdaModel) -> Result<f64> {
    if model.gamma.rows() != dtm.n_docs() {
        return Err(Error::DimensionMismatch {
            context: "elbo: gamma rows vs documents".into(),
            expected: dtm.n_docs(),
            actual: model.gamma.rows(),
        });
    }
    if model.beta.cols() != dtm.n_terms() {
        return Err(Error::DimensionMismatch {
            context: "elbo: beta columns vs vocabulary".into(),
            expected: dtm.n_terms(),
            actual: model.beta.cols(),
        });
    }
    let val = bound(dtm, &model.beta, &model.gamma, &model.config);
    if val.is_finite() {
        Ok(val)
    } else {
        Err(Error::NonFiniteValue {
            context: "ELBO evaluation".into(),
        })
    }
}

/// Fits LDA by variational EM. Deterministic for a fixed seed and
/// independent of thread count: parallel E-steps are merged in document
/// order before the M-step.
pub fn fit_vem(dtm: &DocTermMatrix, config: &LdaConfig) -> Result<LdaModel> {
    config.validate()?;
    let m = dtm.n_docs();
    if m == 0 {
        return Err(Error::EmptyCorpus);
    }
    let v = dtm.n_terms();
    if v == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let k = config.k;

    // Seeded init: phi ~ Dirichlet(1,..,1) per token slot (normalized iid
    // Exp(1) draws); gamma and sufficient statistics accumulate from it.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sstats = vec![0.0f64; k * v];
    let mut gamma = DenseMatrix::zeros(m, k);
    let mut phi = vec![0.0f64; k];
    for d in 0..m {
        let grow = gamma.row_mut(d);
        for &(term, count) in dtm.row(d) {
            if k == 1 {
                phi[0] = 1.0;
            } else {
                let mut sum = 0.0;
                for x in &mut phi {
                    *x = rng.sample::<f64, _>(Exp1);
                    sum += *x;
                }
                for x in &mut phi {
                    *x /= sum;
                }
            }
            let c = f64::from(count);
            for kk in 0..k {
                let w = c * phi[kk];
                grow[kk] += w;
                sstats[kk * v + term] += w;
            }
        }
        for x in grow {
            *x += config.alpha;
        }
    }
    let mut beta = m_step(&sstats, k, v, config.delta);

    let mut trace = Vec::new();
    let mut prev: Option<f64> = None;
    for it in 0..config.max_em_iters {
        let lbeta = log_matrix(&beta);
        let results: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
            .into_par_iter()
            .map(|d| e_step_doc(dtm.row(d), &lbeta, gamma.row(d), config))
            .collect();
        sstats.iter_mut().for_each(|x| *x = 0.0);
        for (d, (g, phi)) in results.into_iter().enumerate() {
            for (slot, &(term, count)) in dtm.row(d).iter().enumerate() {
                let c = f64::from(count);
                for kk in 0..k {
                    sstats[kk * v + term] += c * phi[slot * k + kk];
                }
            }
            gamma.row_mut(d).copy_from_slice(&g);
        }
        beta = m_step(&sstats, k, v, config.delta);

        let cur = bound(dtm, &beta, &gamma, config);
        if !cur.is_finite() {
            return Err(Error::NonFiniteValue {
                context: format!("ELBO at EM iteration {it}"),
            });
        }
        trace.push(cur);
        if let Some(p) = prev {
            if ((cur - p) / p).abs() < config.em_tol {
                break;
            }
        }
        prev = Some(cur);
    }

    Ok(LdaModel {
        config: config.clone(),
        beta,
        gamma,
        elbo_trace: trace,
        backend: Backend::Vem,
    })
}

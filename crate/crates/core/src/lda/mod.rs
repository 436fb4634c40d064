//! Latent Dirichlet allocation: variational EM (primary) and collapsed
//! Gibbs sampling (diagnostic backend).

mod archive;
mod gibbs;
mod vem;

pub use archive::{load_model, save_model};
pub use gibbs::{fit_gibbs, TopicAssignmentState};
pub use vem::{elbo, fit_vem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::DenseMatrix;

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_MAX_EM_ITERS: usize = 100;
pub const DEFAULT_EM_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_E_ITERS: usize = 100;
pub const DEFAULT_E_TOL: f64 = 1e-3;

/// Default symmetric document-Dirichlet concentration for k topics.
pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

/// Hyperparameters and stopping rules for one fit. α and δ are fixed, not
/// estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub delta: f64,
    pub max_em_iters: usize,
    pub em_tol: f64,
    pub max_e_iters: usize,
    pub e_tol: f64,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for k topics: alpha = 50/k, delta = 0.1, seed 0.
    pub fn new(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: default_alpha(k),
            delta: DEFAULT_DELTA,
            max_em_iters: DEFAULT_MAX_EM_ITERS,
            em_tol: DEFAULT_EM_TOL,
            max_e_iters: DEFAULT_MAX_E_ITERS,
            e_tol: DEFAULT_E_TOL,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks positivity constraints. k = 1 is accepted: the degenerate
    /// single-topic fit is well defined and useful as an analytic check.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.k == 0 {
            problems.push("k must be at least 1");
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            problems.push("alpha must be positive");
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            problems.push("delta must be positive");
        }
        if !(self.em_tol.is_finite() && self.em_tol > 0.0) {
            problems.push("em_tol must be positive");
        }
        if !(self.e_tol.is_finite() && self.e_tol > 0.0) {
            problems.push("e_tol must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig {
                message: problems.join("; "),
            })
        }
    }
}

/// Which estimator produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Vem,
    Gibbs,
}

/// A fitted topic model. `beta` is K x V with row-stochastic rows; `gamma`
/// is M x K of variational Dirichlet parameters (every entry >= alpha).
/// For the Vem backend `elbo_trace` is nondecreasing within 1e-6 relative
/// slack; for Gibbs it holds the recorded log-likelihood values.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub beta: DenseMatrix,
    pub gamma: DenseMatrix,
    pub elbo_trace: Vec<f64>,
    pub backend: Backend,
}

impl LdaModel {
    pub fn k(&self) -> usize {
        self.beta.rows()
    }

    pub fn n_terms(&self) -> usize {
        self.beta.cols()
    }

    pub fn n_docs(&self) -> usize {
        self.gamma.rows()
    }
}

/// Per-document topic proportions: row d is gamma_d normalized to sum 1.
pub fn doc_topic_proportions(model: &LdaModel) -> DenseMatrix {
    let mut theta = model.gamma.clone();
    for d in 0..theta.rows() {
        let row = theta.row_mut(d);
        let total: f64 = row.iter().sum();
        for v in row {
            *v /= total;
        }
    }
    theta
}

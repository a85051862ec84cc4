//! Latent Dirichlet allocation over bag-of-label-words corpora.
//!
//! [`fit_vb`] is the production estimator (online variational Bayes, accepts
//! fractional tf-idf weights). [`fit_gibbs`] is a collapsed Gibbs sampler kept
//! as an independent oracle for small integer-count corpora.
//! [`simulate_corpus`] draws corpora from the generative model itself.

mod dense;
mod dirichlet;
mod gibbs;
mod likelihood;
mod matching;
mod model_io;
mod report;
mod simulate;
mod vb;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::weighting::ImageLabelMatrix;

pub use dense::DenseMatrix;
pub use dirichlet::{sample_dirichlet, sample_log_gamma};
pub use gibbs::fit_gibbs;
pub use likelihood::{log_likelihood_report, write_likelihood_csv, LikelihoodRow};
pub use matching::{cosine_similarity, match_topics, TopicMatch};
pub use model_io::{MODEL_FORMAT, MODEL_VERSION};
pub use report::{top_labels, TopicEntry, TopicReport};
pub use simulate::{simulate_corpus, SimulatedCorpus};
pub use vb::{fit_vb, project};

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus is empty: {0}")]
    EmptyCorpus(&'static str),
    #[error("non-finite weight {value} at row {row}, column {col}")]
    NonFiniteWeight { row: usize, col: usize, value: f64 },
    #[error("Gibbs sampling needs integer counts (binary weighting); found {value} at row {row}, column {col}")]
    NonIntegerWeights { row: usize, col: usize, value: f64 },
    #[error("target weight {0} rounds to fewer than one label")]
    InvalidTargetWeight(f64),
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("unsupported model file: {0}")]
    UnsupportedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = LdaError> = std::result::Result<T, E>;

/// Online variational Bayes schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbConfig {
    pub batch_size: usize,
    /// Learning-rate decay exponent, in (0.5, 1].
    pub kappa: f64,
    /// Learning-rate delay, >= 0.
    pub tau0: f64,
    pub passes: usize,
    pub doc_update_iters: usize,
    /// Mean absolute change of the per-document parameters below which the
    /// document update stops.
    pub doc_convergence_tol: f64,
    /// Replaces the decaying rate `(tau0 + t)^-kappa` by a constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_rate: Option<f64>,
    /// Independent initializations; the run with the highest final bound is
    /// kept.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_restarts() -> usize {
    5
}

impl Default for VbConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            kappa: 0.7,
            tau0: 1.0,
            passes: 5,
            doc_update_iters: 100,
            doc_convergence_tol: 1e-4,
            fixed_rate: None,
            restarts: default_restarts(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            burn_in: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric image-topic prior.
    pub alpha: f64,
    /// Symmetric topic-label prior.
    pub beta: f64,
    pub seed: u64,
    pub vb: VbConfig,
    pub gibbs: GibbsConfig,
}

impl LdaConfig {
    /// `k` topics with `alpha = 50 / k` and `beta = 0.1`.
    pub fn new(k: usize) -> Self {
        Self {
            k,
            alpha: default_alpha(k),
            beta: 0.1,
            seed: 0,
            vb: VbConfig::default(),
            gibbs: GibbsConfig::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_priors(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    /// Same configuration for `k` topics. An alpha still at its `50 / k`
    /// default follows the new `k`; an explicit alpha is kept.
    pub fn for_k(&self, k: usize) -> Self {
        let mut out = self.clone();
        if self.k > 0 && self.alpha == default_alpha(self.k) {
            out.alpha = default_alpha(k);
        }
        out.k = k;
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_min_k(2)
    }

    pub(crate) fn validate_with_min_k(&self, min_k: usize) -> Result<()> {
        let bad = |m: String| Err(LdaError::InvalidConfig(m));
        if self.k < min_k {
            return bad(format!("K = {} (need at least {min_k})", self.k));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} (need > 0)", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} (need > 0)", self.beta));
        }
        let vb = &self.vb;
        if !(vb.kappa > 0.5 && vb.kappa <= 1.0) {
            return bad(format!("kappa = {} (need 0.5 < kappa <= 1)", vb.kappa));
        }
        if !(vb.tau0 >= 0.0 && vb.tau0.is_finite()) {
            return bad(format!("tau0 = {} (need >= 0)", vb.tau0));
        }
        if vb.batch_size == 0 || vb.passes == 0 || vb.doc_update_iters == 0 || vb.restarts == 0 {
            return bad(
                "batch_size, passes, doc_update_iters and restarts must be positive".into(),
            );
        }
        if !(vb.doc_convergence_tol >= 0.0) {
            return bad(format!("doc_convergence_tol = {}", vb.doc_convergence_tol));
        }
        if let Some(rate) = vb.fixed_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return bad(format!("fixed_rate = {rate} (need 0 < rate <= 1)"));
            }
        }
        if self.gibbs.burn_in >= self.gibbs.iterations {
            return bad(format!(
                "gibbs burn_in {} must be below iterations {}",
                self.gibbs.burn_in, self.gibbs.iterations
            ));
        }
        Ok(())
    }
}

pub fn default_alpha(k: usize) -> f64 {
    50.0 / k as f64
}

/// A fitted model: `phi` is `K x M` (topic-label), `theta` is `N x K`
/// (image-topic). Both are row-stochastic with strictly positive entries.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicModel {
    pub phi: DenseMatrix,
    pub theta: DenseMatrix,
    /// Variational bound after every global update (empty for Gibbs fits).
    pub elbo_trace: Vec<f64>,
    pub config: LdaConfig,
    pub vocabulary_hash: String,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.phi.rows()
    }

    pub fn n_words(&self) -> usize {
        self.phi.cols()
    }

    /// Most probable topic of each image, ties to the lower index.
    pub fn dominant_topics(&self) -> Vec<usize> {
        self.theta.row_argmax()
    }
}

/// Documents as `(column, weight)` lists with the weights validated.
pub(crate) fn documents(matrix: &ImageLabelMatrix) -> Result<Vec<&[(usize, f64)]>> {
    let mut docs = Vec::with_capacity(matrix.n_rows());
    for (i, row) in matrix.rows().iter().enumerate() {
        for &(j, v) in row.entries() {
            if !v.is_finite() {
                return Err(LdaError::NonFiniteWeight {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        docs.push(row.entries());
    }
    Ok(docs)
}

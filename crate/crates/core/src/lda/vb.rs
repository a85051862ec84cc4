//! Online variational Bayes for LDA with fractional word counts.
//!
//! Each image `d` has a variational Dirichlet `gamma_d` over topics and each
//! topic a variational Dirichlet `lambda_k` over labels. Mini-batches update
//! `gamma` to convergence with `lambda` fixed, then blend `lambda` towards the
//! batch estimate with step `rho_t = (tau0 + t)^-kappa`.

use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::rng::stage_rng;
use crate::weighting::ImageLabelMatrix;

use super::{documents, DenseMatrix, LdaConfig, LdaError, Result, TopicModel};

const PHINORM_FLOOR: f64 = 1e-100;

/// `E[log x]` under `Dirichlet(params)`.
fn dirichlet_expectation(params: &[f64]) -> Vec<f64> {
    let total = digamma(params.iter().sum());
    params.iter().map(|&p| digamma(p) - total).collect()
}

fn exp_dirichlet_expectation(params: &[f64]) -> Vec<f64> {
    dirichlet_expectation(params)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Converged per-document state.
struct DocFit {
    gamma: Vec<f64>,
    exp_elog_theta: Vec<f64>,
    phinorm: Vec<f64>,
}

/// Alternates the implicit label-topic responsibilities and `gamma` until the
/// mean absolute change of `gamma` drops below `tol`. `topic_weights` holds
/// `exp(E[log phi])` (or `phi` itself when topics are held fixed).
fn fit_document(
    doc: &[(usize, f64)],
    gamma_init: &[f64],
    alpha: f64,
    topic_weights: &DenseMatrix,
    max_iters: usize,
    tol: f64,
) -> DocFit {
    let k = gamma_init.len();
    let phinorm_of = |et: &[f64]| -> Vec<f64> {
        doc.iter()
            .map(|&(w, _)| {
                (0..k).map(|z| et[z] * topic_weights.get(z, w)).sum::<f64>() + PHINORM_FLOOR
            })
            .collect()
    };

    let mut gamma = gamma_init.to_vec();
    let mut et = exp_dirichlet_expectation(&gamma);
    let mut phinorm = phinorm_of(&et);
    for _ in 0..max_iters {
        let mut change = 0.0;
        for z in 0..k {
            let s: f64 = doc
                .iter()
                .zip(&phinorm)
                .map(|(&(w, c), &norm)| c / norm * topic_weights.get(z, w))
                .sum();
            let updated = alpha + et[z] * s;
            change += (updated - gamma[z]).abs();
            gamma[z] = updated;
        }
        et = exp_dirichlet_expectation(&gamma);
        phinorm = phinorm_of(&et);
        if change / (k as f64) < tol {
            break;
        }
    }
    DocFit {
        gamma,
        exp_elog_theta: et,
        phinorm,
    }
}

/// Document part of the variational bound, with the responsibilities at their
/// optimum: `sum_w c_w log sum_k exp(Elog theta_k + Elog phi_kw)` plus the
/// `theta` prior term and entropy.
fn document_bound(
    doc: &[(usize, f64)],
    gamma: &[f64],
    alpha: f64,
    elog_topics: &DenseMatrix,
) -> f64 {
    let k = gamma.len();
    let elog_theta = dirichlet_expectation(gamma);
    let mut score = 0.0;
    for &(w, c) in doc {
        let terms: Vec<f64> = (0..k)
            .map(|z| elog_theta[z] + elog_topics.get(z, w))
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
        score += c * lse;
    }
    for z in 0..k {
        score += (alpha - gamma[z]) * elog_theta[z] + ln_gamma(gamma[z]) - ln_gamma(alpha);
    }
    score += ln_gamma(alpha * k as f64) - ln_gamma(gamma.iter().sum());
    score
}

/// Topic part of the bound: `E[log p(phi | beta)] - E[log q(phi | lambda)]`.
fn topic_bound(lambda: &DenseMatrix, elog_beta: &DenseMatrix, beta: f64) -> f64 {
    let m = lambda.cols() as f64;
    let mut score = 0.0;
    for (lrow, erow) in lambda.iter_rows().zip(elog_beta.iter_rows()) {
        for (&l, &e) in lrow.iter().zip(erow) {
            score += (beta - l) * e + ln_gamma(l) - ln_gamma(beta);
        }
        score += ln_gamma(beta * m) - ln_gamma(lrow.iter().sum());
    }
    score
}

struct TopicState {
    lambda: DenseMatrix,
    elog: DenseMatrix,
    exp_elog: DenseMatrix,
}

impl TopicState {
    fn new(lambda: DenseMatrix) -> Self {
        let mut elog = DenseMatrix::zeros(lambda.rows(), lambda.cols());
        let mut exp_elog = DenseMatrix::zeros(lambda.rows(), lambda.cols());
        for z in 0..lambda.rows() {
            let e = dirichlet_expectation(lambda.row(z));
            for (w, v) in e.into_iter().enumerate() {
                elog.row_mut(z)[w] = v;
                exp_elog.row_mut(z)[w] = v.exp();
            }
        }
        Self {
            lambda,
            elog,
            exp_elog,
        }
    }
}

/// Fits LDA by online variational Bayes.
///
/// Rows are visited in matrix order in mini-batches of `vb.batch_size` for
/// `vb.passes` passes; per-document parameters are warm-started from the
/// previous pass. Entry weights act as (possibly fractional) label counts.
/// The whole schedule runs `vb.restarts` times from independent seeded
/// initializations and the run with the highest final bound is kept, which
/// escapes the local optima where two topics split one true topic. The
/// returned `theta` comes from a final document update against the
/// normalized topics.
pub fn fit_vb(matrix: &ImageLabelMatrix, config: &LdaConfig) -> Result<TopicModel> {
    config.validate()?;
    fit_vb_unchecked(matrix, config)
}

pub(crate) fn fit_vb_unchecked(
    matrix: &ImageLabelMatrix,
    config: &LdaConfig,
) -> Result<TopicModel> {
    let docs = documents(matrix)?;
    if docs.is_empty() {
        return Err(LdaError::EmptyCorpus("matrix has no rows"));
    }
    if docs.iter().all(|d| d.is_empty()) {
        return Err(LdaError::EmptyCorpus("every row is empty"));
    }
    let k = config.k;
    let n = docs.len();
    let vb = &config.vb;

    let mut best: Option<Run> = None;
    for restart in 0..vb.restarts {
        let stage = if restart == 0 {
            "fit-vb".to_string()
        } else {
            format!("fit-vb-restart-{restart}")
        };
        let run = run_once(&docs, matrix.n_cols(), config, &stage);
        let better = match &best {
            None => true,
            Some(b) => run.final_elbo() > b.final_elbo(),
        };
        if better {
            best = Some(run);
        }
    }
    let Run {
        topics,
        gamma,
        elbo_trace,
    } = best.expect("at least one restart");

    let mut phi = topics.lambda;
    phi.normalize_rows();

    let fits: Vec<DocFit> = (0..n)
        .into_par_iter()
        .map(|d| {
            fit_document(
                docs[d],
                gamma.row(d),
                config.alpha,
                &phi,
                vb.doc_update_iters,
                vb.doc_convergence_tol,
            )
        })
        .collect();
    let theta = normalized_gammas(fits, k);

    Ok(TopicModel {
        phi,
        theta,
        elbo_trace,
        config: config.clone(),
        vocabulary_hash: matrix.vocabulary_hash().to_string(),
    })
}

struct Run {
    topics: TopicState,
    gamma: DenseMatrix,
    elbo_trace: Vec<f64>,
}

impl Run {
    fn final_elbo(&self) -> f64 {
        self.elbo_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// One online VB run from the initialization drawn by `stage`.
fn run_once(docs: &[&[(usize, f64)]], m: usize, config: &LdaConfig, stage: &str) -> Run {
    let k = config.k;
    let n = docs.len();
    let vb = &config.vb;

    let mut rng = stage_rng(config.seed, stage);
    let init = Gamma::new(100.0, 0.01).expect("valid gamma");
    let lambda = DenseMatrix::from_vec(k, m, (0..k * m).map(|_| init.sample(&mut rng)).collect())
        .expect("k * m entries");
    let mut gamma =
        DenseMatrix::from_vec(n, k, (0..n * k).map(|_| init.sample(&mut rng)).collect())
            .expect("n * k entries");
    let mut topics = TopicState::new(lambda);

    let mut elbo_trace = Vec::new();
    let mut updates = 0usize;
    let order: Vec<usize> = (0..n).collect();
    for _pass in 0..vb.passes {
        for batch in order.chunks(vb.batch_size) {
            let rho = vb
                .fixed_rate
                .unwrap_or_else(|| (vb.tau0 + updates as f64).powf(-vb.kappa).min(1.0));

            let fits: Vec<DocFit> = batch
                .par_iter()
                .map(|&d| {
                    fit_document(
                        docs[d],
                        gamma.row(d),
                        config.alpha,
                        &topics.exp_elog,
                        vb.doc_update_iters,
                        vb.doc_convergence_tol,
                    )
                })
                .collect();

            let mut sstats = DenseMatrix::zeros(k, m);
            for (&d, fit) in batch.iter().zip(&fits) {
                gamma.row_mut(d).copy_from_slice(&fit.gamma);
                for z in 0..k {
                    let row = sstats.row_mut(z);
                    for (&(w, c), &norm) in docs[d].iter().zip(&fit.phinorm) {
                        row[w] += fit.exp_elog_theta[z] * c / norm;
                    }
                }
            }

            let scale = n as f64 / batch.len() as f64;
            let mut lambda = topics.lambda.clone();
            for z in 0..k {
                let stats = sstats.row(z);
                let weights = topics.exp_elog.row(z);
                for (w, l) in lambda.row_mut(z).iter_mut().enumerate() {
                    let target = config.beta + scale * stats[w] * weights[w];
                    *l = (1.0 - rho) * *l + rho * target;
                }
            }
            topics = TopicState::new(lambda);
            updates += 1;

            let docs_part: f64 = batch
                .iter()
                .map(|&d| document_bound(docs[d], gamma.row(d), config.alpha, &topics.elog))
                .sum();
            elbo_trace
                .push(scale * docs_part + topic_bound(&topics.lambda, &topics.elog, config.beta));
        }
    }

    Run {
        topics,
        gamma,
        elbo_trace,
    }
}

fn normalized_gammas(fits: Vec<DocFit>, k: usize) -> DenseMatrix {
    let mut theta = DenseMatrix::from_vec(
        fits.len(),
        k,
        fits.into_iter().flat_map(|f| f.gamma).collect(),
    )
    .expect("n * k entries");
    theta.normalize_rows();
    theta
}

fn check_alignment(model: &TopicModel, matrix: &ImageLabelMatrix) -> Result<()> {
    if matrix.n_cols() != model.n_words() {
        return Err(LdaError::VocabularyMismatch(format!(
            "matrix has {} columns, model has {} labels",
            matrix.n_cols(),
            model.n_words()
        )));
    }
    let (a, b) = (matrix.vocabulary_hash(), model.vocabulary_hash.as_str());
    if !a.is_empty() && !b.is_empty() && a != b {
        return Err(LdaError::VocabularyMismatch(format!(
            "matrix vocabulary {a} differs from model vocabulary {b}"
        )));
    }
    Ok(())
}

/// Per-document variational fit against the model's fixed topics, started
/// from `alpha + w_d / K` on every topic.
pub(crate) fn project_gammas(
    model: &TopicModel,
    matrix: &ImageLabelMatrix,
) -> Result<Vec<Vec<f64>>> {
    check_alignment(model, matrix)?;
    let docs = documents(matrix)?;
    let k = model.k();
    let cfg = &model.config;
    Ok(docs
        .par_iter()
        .map(|doc| {
            let weight: f64 = doc.iter().map(|e| e.1).sum();
            let init = vec![cfg.alpha + weight / k as f64; k];
            fit_document(
                doc,
                &init,
                cfg.alpha,
                &model.phi,
                cfg.vb.doc_update_iters,
                cfg.vb.doc_convergence_tol,
            )
            .gamma
        })
        .collect())
}

/// Topic mixtures of new rows with the model's topics held fixed.
pub fn project(model: &TopicModel, matrix: &ImageLabelMatrix) -> Result<DenseMatrix> {
    let gammas = project_gammas(model, matrix)?;
    let mut theta = DenseMatrix::from_vec(
        gammas.len(),
        model.k(),
        gammas.into_iter().flatten().collect(),
    )
    .expect("n * k entries");
    theta.normalize_rows();
    Ok(theta)
}

/// Bound of one document against fixed topics `phi` (used for held-out
/// likelihood).
pub(crate) fn fixed_topic_bound(
    doc: &[(usize, f64)],
    gamma: &[f64],
    alpha: f64,
    log_phi: &DenseMatrix,
) -> f64 {
    document_bound(doc, gamma, alpha, log_phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighting::{RowMeta, SparseRow, WeightingMode};

    pub(crate) fn matrix_from(rows: Vec<Vec<(usize, f64)>>, cols: usize) -> ImageLabelMatrix {
        let meta = (0..rows.len())
            .map(|i| RowMeta {
                image_id: i.to_string(),
                camera: "c".into(),
                timestamp: chrono::DateTime::from_timestamp(1_514_764_800 + 180 * i as i64, 0)
                    .unwrap(),
            })
            .collect();
        ImageLabelMatrix::from_rows(
            rows.into_iter().map(SparseRow::new).collect(),
            meta,
            cols,
            WeightingMode::Binary,
            String::new(),
        )
        .unwrap()
    }

    #[test]
    fn dirichlet_expectation_matches_digamma_identity() {
        // E[log x_1] for Dirichlet(1, 1) = psi(1) - psi(2) = -1
        let e = dirichlet_expectation(&[1.0, 1.0]);
        assert!((e[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_document_keeps_prior() {
        let phi = DenseMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let fit = fit_document(&[], &[3.0, 7.0], 0.4, &phi, 50, 1e-8);
        assert_eq!(fit.gamma, vec![0.4, 0.4]);
    }

    #[test]
    fn single_document_fit_is_normalized() {
        let m = matrix_from(vec![vec![(0, 1.0), (2, 3.0)]], 4);
        let model = fit_vb(&m, &LdaConfig::new(2).with_seed(3)).unwrap();
        let (dev, min) = model.theta.stochasticity();
        assert!(dev < 1e-8 && min > 0.0);
        let (dev, min) = model.phi.stochasticity();
        assert!(dev < 1e-8 && min > 0.0);
        assert!(model.elbo_trace.iter().all(|v| v.is_finite()));
        assert_eq!(model.elbo_trace.len(), 5);
    }

    #[test]
    fn config_echo_uses_default_alpha() {
        let m = matrix_from(vec![vec![(0, 1.0)], vec![(1, 1.0)]], 2);
        let model = fit_vb(&m, &LdaConfig::new(10)).unwrap();
        assert_eq!(model.config.alpha, 5.0);
        assert_eq!(model.config.beta, 0.1);
    }

    #[test]
    fn empty_and_non_finite_input() {
        let empty = matrix_from(vec![], 3);
        assert!(matches!(
            fit_vb(&empty, &LdaConfig::new(2)),
            Err(LdaError::EmptyCorpus(_))
        ));
        let blank = matrix_from(vec![vec![], vec![]], 3);
        assert!(matches!(
            fit_vb(&blank, &LdaConfig::new(2)),
            Err(LdaError::EmptyCorpus(_))
        ));
        let inf = matrix_from(vec![vec![(0, f64::INFINITY)]], 3);
        assert!(matches!(
            fit_vb(&inf, &LdaConfig::new(2)),
            Err(LdaError::NonFiniteWeight { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn projection_of_empty_row_is_uniform() {
        let m = matrix_from(vec![vec![(0, 2.0)], vec![(1, 2.0)], vec![(2, 1.0)]], 3);
        let model = fit_vb(&m, &LdaConfig::new(3).with_seed(1)).unwrap();
        let theta = project(&model, &matrix_from(vec![vec![]], 3)).unwrap();
        for &v in theta.row(0) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(matches!(
            project(&model, &matrix_from(vec![vec![]], 4)),
            Err(LdaError::VocabularyMismatch(_))
        ));
    }

    #[test]
    fn fractional_weights_are_accepted() {
        let m = matrix_from(
            vec![vec![(0, 4.6), (1, 0.3)], vec![(1, 2.2)], vec![(2, 0.7)]],
            3,
        );
        let model = fit_vb(&m, &LdaConfig::new(2).with_seed(8)).unwrap();
        assert!(model.theta.stochasticity().0 < 1e-8);
    }
}

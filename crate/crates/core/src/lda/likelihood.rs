use std::io::Write;

use rand::seq::SliceRandom;

use crate::rng::stage_rng;
use crate::weighting::ImageLabelMatrix;

use super::vb::{fit_vb_unchecked, fixed_topic_bound, project_gammas};
use super::{documents, DenseMatrix, LdaConfig, LdaError, Result};

/// Held-out fit quality for one topic count.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodRow {
    pub k: usize,
    pub train_images: usize,
    pub heldout_images: usize,
    pub heldout_weight: f64,
    /// Variational lower bound of the held-out log likelihood divided by the
    /// held-out label weight.
    pub per_token_bound: f64,
}

/// Splits rows 90/10 with a seeded shuffle, fits each distinct `K` on the
/// training part and scores the held-out part against the fitted topics.
///
/// Rows come back sorted by `K`. `K = 1` is accepted here as a baseline.
pub fn log_likelihood_report(
    matrix: &ImageLabelMatrix,
    config: &LdaConfig,
    k_values: &[usize],
) -> Result<Vec<LikelihoodRow>> {
    if k_values.is_empty() {
        return Err(LdaError::InvalidConfig("no K values given".into()));
    }
    let n = matrix.n_rows();
    if n < 2 {
        return Err(LdaError::EmptyCorpus(
            "need at least two rows to hold some out",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stage_rng(config.seed, "heldout-split"));
    let heldout_count = ((n as f64 * 0.1).round() as usize).clamp(1, n - 1);
    let mut heldout: Vec<usize> = order[..heldout_count].to_vec();
    let mut train: Vec<usize> = order[heldout_count..].to_vec();
    heldout.sort_unstable();
    train.sort_unstable();
    let train_matrix = matrix.select_rows(&train);
    let heldout_matrix = matrix.select_rows(&heldout);

    let heldout_docs = documents(&heldout_matrix)?;
    let heldout_weight: f64 = heldout_docs
        .iter()
        .flat_map(|d| d.iter())
        .map(|e| e.1)
        .sum();
    if heldout_weight <= 0.0 {
        return Err(LdaError::EmptyCorpus("held-out rows carry no labels"));
    }

    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let mut out = Vec::with_capacity(ks.len());
    for k in ks {
        let cfg = config.for_k(k);
        cfg.validate_with_min_k(1)?;
        let model = fit_vb_unchecked(&train_matrix, &cfg)?;
        let gammas = project_gammas(&model, &heldout_matrix)?;
        let log_phi = DenseMatrix::from_vec(
            model.phi.rows(),
            model.phi.cols(),
            model.phi.data().iter().map(|p| p.ln()).collect(),
        )
        .expect("same shape");
        let bound: f64 = heldout_docs
            .iter()
            .zip(&gammas)
            .map(|(doc, gamma)| fixed_topic_bound(doc, gamma, cfg.alpha, &log_phi))
            .sum();
        out.push(LikelihoodRow {
            k,
            train_images: train.len(),
            heldout_images: heldout.len(),
            heldout_weight,
            per_token_bound: bound / heldout_weight,
        });
    }
    Ok(out)
}

/// Writes `k,train_images,heldout_images,heldout_weight,per_token_bound`.
pub fn write_likelihood_csv<W: Write>(rows: &[LikelihoodRow], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "k",
        "train_images",
        "heldout_images",
        "heldout_weight",
        "per_token_bound",
    ])?;
    for r in rows {
        csv.write_record([
            r.k.to_string(),
            r.train_images.to_string(),
            r.heldout_images.to_string(),
            r.heldout_weight.to_string(),
            r.per_token_bound.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

//! Collapsed Gibbs sampler over token-topic assignments.
//!
//! After burn-in the full conditional of every token is accumulated
//! (Rao-Blackwellized counts), so the posterior-mean estimates of `theta`
//! and `phi` are exact under topic symmetry rather than noisy.

use rand::Rng;

use crate::rng::stage_rng;
use crate::weighting::ImageLabelMatrix;

use super::{documents, DenseMatrix, LdaConfig, LdaError, Result, TopicModel};

struct Token {
    doc: usize,
    word: usize,
}

/// Fits LDA by collapsed Gibbs sampling. Requires non-negative integer
/// weights, i.e. binary weighting or simulated counts.
pub fn fit_gibbs(matrix: &ImageLabelMatrix, config: &LdaConfig) -> Result<TopicModel> {
    config.validate()?;
    let docs = documents(matrix)?;
    if docs.is_empty() {
        return Err(LdaError::EmptyCorpus("matrix has no rows"));
    }
    let mut tokens = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        for &(w, v) in doc.iter() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(LdaError::NonIntegerWeights {
                    row: d,
                    col: w,
                    value: v,
                });
            }
            for _ in 0..v as usize {
                tokens.push(Token { doc: d, word: w });
            }
        }
    }
    if tokens.is_empty() {
        return Err(LdaError::EmptyCorpus("every row is empty"));
    }

    let k = config.k;
    let m = matrix.n_cols();
    let n = docs.len();
    let (alpha, beta) = (config.alpha, config.beta);
    let m_beta = m as f64 * beta;

    let mut rng = stage_rng(config.seed, "fit-gibbs");
    let mut doc_topic = vec![0usize; n * k];
    let mut topic_word = vec![0usize; k * m];
    let mut topic_total = vec![0usize; k];
    let mut assignment: Vec<usize> = Vec::with_capacity(tokens.len());
    for t in &tokens {
        let z = rng.random_range(0..k);
        assignment.push(z);
        doc_topic[t.doc * k + z] += 1;
        topic_word[z * m + t.word] += 1;
        topic_total[z] += 1;
    }

    let mut expected_doc_topic = vec![0.0; n * k];
    let mut expected_topic_word = vec![0.0; k * m];
    let mut conditional = vec![0.0; k];
    for sweep in 0..config.gibbs.iterations {
        let collect = sweep >= config.gibbs.burn_in;
        for (t, token) in tokens.iter().enumerate() {
            let old = assignment[t];
            doc_topic[token.doc * k + old] -= 1;
            topic_word[old * m + token.word] -= 1;
            topic_total[old] -= 1;

            let mut total = 0.0;
            for z in 0..k {
                let p = (doc_topic[token.doc * k + z] as f64 + alpha)
                    * (topic_word[z * m + token.word] as f64 + beta)
                    / (topic_total[z] as f64 + m_beta);
                conditional[z] = p;
                total += p;
            }
            if collect {
                for z in 0..k {
                    let p = conditional[z] / total;
                    expected_doc_topic[token.doc * k + z] += p;
                    expected_topic_word[z * m + token.word] += p;
                }
            }

            let mut u = rng.random::<f64>() * total;
            let mut new = k - 1;
            for (z, &c) in conditional.iter().enumerate() {
                u -= c;
                if u < 0.0 {
                    new = z;
                    break;
                }
            }
            assignment[t] = new;
            doc_topic[token.doc * k + new] += 1;
            topic_word[new * m + token.word] += 1;
            topic_total[new] += 1;
        }
    }

    let samples = (config.gibbs.iterations - config.gibbs.burn_in) as f64;
    let mut theta = DenseMatrix::zeros(n, k);
    for d in 0..n {
        let row = theta.row_mut(d);
        for z in 0..k {
            row[z] = expected_doc_topic[d * k + z] / samples + alpha;
        }
    }
    theta.normalize_rows();
    let mut phi = DenseMatrix::zeros(k, m);
    for z in 0..k {
        let row = phi.row_mut(z);
        for w in 0..m {
            row[w] = expected_topic_word[z * m + w] / samples + beta;
        }
    }
    phi.normalize_rows();

    Ok(TopicModel {
        phi,
        theta,
        elbo_trace: Vec::new(),
        config: config.clone(),
        vocabulary_hash: matrix.vocabulary_hash().to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighting::{RowMeta, SparseRow, WeightingMode};

    fn matrix(rows: Vec<Vec<(usize, f64)>>, cols: usize, mode: WeightingMode) -> ImageLabelMatrix {
        let meta = (0..rows.len())
            .map(|i| RowMeta {
                image_id: i.to_string(),
                camera: "c".into(),
                timestamp: chrono::DateTime::from_timestamp(1_514_764_800 + i as i64, 0).unwrap(),
            })
            .collect();
        ImageLabelMatrix::from_rows(
            rows.into_iter().map(SparseRow::new).collect(),
            meta,
            cols,
            mode,
            String::new(),
        )
        .unwrap()
    }

    fn small_config(k: usize) -> LdaConfig {
        let mut c = LdaConfig::new(k).with_seed(4);
        c.gibbs.iterations = 300;
        c.gibbs.burn_in = 100;
        c
    }

    #[test]
    fn single_token_is_symmetric() {
        let m = matrix(vec![vec![(0, 1.0)]], 3, WeightingMode::Binary);
        let model = fit_gibbs(&m, &small_config(2)).unwrap();
        assert_eq!(model.theta.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn tf_idf_weights_are_refused() {
        let m = matrix(vec![vec![(0, 4.605)]], 3, WeightingMode::PerCameraTfIdf);
        assert!(matches!(
            fit_gibbs(&m, &small_config(2)),
            Err(LdaError::NonIntegerWeights { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = matrix(
            vec![
                vec![(0, 2.0), (1, 1.0)],
                vec![(2, 3.0)],
                vec![(0, 1.0), (3, 2.0)],
            ],
            4,
            WeightingMode::Binary,
        );
        let a = fit_gibbs(&m, &small_config(2)).unwrap();
        let b = fit_gibbs(&m, &small_config(2)).unwrap();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.theta, b.theta);
        let (dev, min) = a.phi.stochasticity();
        assert!(dev < 1e-8 && min > 0.0);
    }

    #[test]
    fn empty_rows_get_uniform_theta() {
        let m = matrix(vec![vec![(0, 2.0)], vec![]], 2, WeightingMode::Binary);
        let model = fit_gibbs(&m, &small_config(2)).unwrap();
        assert_eq!(model.theta.row(1), &[0.5, 0.5]);
        let blank = matrix(vec![vec![]], 2, WeightingMode::Binary);
        assert!(matches!(
            fit_gibbs(&blank, &small_config(2)),
            Err(LdaError::EmptyCorpus(_))
        ));
    }
}

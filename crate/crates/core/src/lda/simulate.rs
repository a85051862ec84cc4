use rand::distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::corpus::BagOfLabelWords;
use crate::rng::stage_rng;

use super::{sample_dirichlet, DenseMatrix, LdaConfig, LdaError, Result};

/// Corpus drawn from the generative model with its ground truth.
#[derive(Clone, Debug)]
pub struct SimulatedCorpus {
    /// Label counts per image; entries are positive integers.
    pub bags: Vec<BagOfLabelWords>,
    /// `N x K` image-topic distributions.
    pub theta: DenseMatrix,
    /// `K x M` topic-label distributions.
    pub phi: DenseMatrix,
    /// Number of draws assigned to each topic, per image.
    pub topic_counts: Vec<Vec<usize>>,
}

/// Draws one topic-label distribution per topic from `Dirichlet(beta)`, then
/// for every image a topic mixture from `Dirichlet(alpha)` and labels until
/// the bag weight reaches the target rounded to the nearest integer.
pub fn simulate_corpus(
    config: &LdaConfig,
    target_weights: &[f64],
    vocab_size: usize,
) -> Result<SimulatedCorpus> {
    config.validate()?;
    if vocab_size == 0 {
        return Err(LdaError::InvalidConfig(
            "vocabulary size must be positive".into(),
        ));
    }
    let targets = target_weights
        .iter()
        .map(|&w| {
            let rounded = w.round();
            if rounded.is_finite() && rounded >= 1.0 {
                Ok(rounded as usize)
            } else {
                Err(LdaError::InvalidTargetWeight(w))
            }
        })
        .collect::<Result<Vec<usize>>>()?;

    let k = config.k;
    let mut rng = stage_rng(config.seed, "simulate");

    let mut phi = DenseMatrix::zeros(k, vocab_size);
    let mut label_draws = Vec::with_capacity(k);
    for z in 0..k {
        let row = sample_dirichlet(config.beta, vocab_size, &mut rng);
        phi.row_mut(z).copy_from_slice(&row);
        label_draws.push(WeightedIndex::new(&row).expect("normalized dirichlet draw"));
    }

    let mut theta = DenseMatrix::zeros(targets.len(), k);
    let mut bags = Vec::with_capacity(targets.len());
    let mut topic_counts = Vec::with_capacity(targets.len());
    for (i, &target) in targets.iter().enumerate() {
        let mixture = sample_dirichlet(config.alpha, k, &mut rng);
        theta.row_mut(i).copy_from_slice(&mixture);
        let topic_draw = WeightedIndex::new(&mixture).expect("normalized dirichlet draw");
        let mut counts = vec![0usize; vocab_size];
        let mut per_topic = vec![0usize; k];
        for _ in 0..target {
            let z = topic_draw.sample(&mut rng);
            let label = label_draws[z].sample(&mut rng);
            per_topic[z] += 1;
            counts[label] += 1;
        }
        bags.push(BagOfLabelWords::from_entries(
            counts
                .into_iter()
                .enumerate()
                .filter(|e| e.1 > 0)
                .map(|(j, c)| (j, c as f64)),
        ));
        topic_counts.push(per_topic);
    }

    Ok(SimulatedCorpus {
        bags,
        theta,
        phi,
        topic_counts,
    })
}

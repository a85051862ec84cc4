mod common;

use common::{bags_matrix, binary_matrix};
use labeltopic::lda::{
    fit_gibbs, fit_vb, log_likelihood_report, match_topics, project, simulate_corpus, top_labels,
    DenseMatrix, LdaConfig,
};
use statrs::function::gamma::ln_gamma;

fn assert_stochastic(m: &DenseMatrix, what: &str) {
    let (dev, min) = m.stochasticity();
    assert!(dev < 1e-8, "{what}: row sums off by {dev}");
    assert!(min > 0.0, "{what}: non-positive entry {min}");
}

/// Exact posterior expectation of `max_k theta_dk` for every image, by
/// summing the collapsed joint over all topic assignments of all tokens.
fn brute_force_dominance(
    docs: &[Vec<usize>],
    m: usize,
    k: usize,
    alpha: f64,
    beta: f64,
) -> Vec<f64> {
    let tokens: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, words)| words.iter().map(move |&w| (d, w)))
        .collect();
    let t = tokens.len();
    let states = k.pow(t as u32);
    let mut log_weights = Vec::with_capacity(states);
    let mut dominance = Vec::with_capacity(states);
    for s in 0..states {
        let mut z = Vec::with_capacity(t);
        let mut rest = s;
        for _ in 0..t {
            z.push(rest % k);
            rest /= k;
        }
        let mut ndk = vec![vec![0usize; k]; docs.len()];
        let mut nkw = vec![vec![0usize; m]; k];
        for (&(d, w), &zz) in tokens.iter().zip(&z) {
            ndk[d][zz] += 1;
            nkw[zz][w] += 1;
        }
        let mut lw = 0.0;
        for (d, counts) in ndk.iter().enumerate() {
            lw += ln_gamma(k as f64 * alpha) - ln_gamma(k as f64 * alpha + docs[d].len() as f64);
            for &c in counts {
                lw += ln_gamma(alpha + c as f64) - ln_gamma(alpha);
            }
        }
        for counts in &nkw {
            let total: usize = counts.iter().sum();
            lw += ln_gamma(m as f64 * beta) - ln_gamma(m as f64 * beta + total as f64);
            for &c in counts {
                lw += ln_gamma(beta + c as f64) - ln_gamma(beta);
            }
        }
        log_weights.push(lw);
        dominance.push(
            ndk.iter()
                .enumerate()
                .map(|(d, counts)| {
                    let top = *counts.iter().max().unwrap() as f64;
                    (top + alpha) / (docs[d].len() as f64 + k as f64 * alpha)
                })
                .collect::<Vec<f64>>(),
        );
    }
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    (0..docs.len())
        .map(|d| {
            weights
                .iter()
                .zip(&dominance)
                .map(|(w, dom)| w * dom[d])
                .sum::<f64>()
                / total
        })
        .collect()
}

#[test]
fn separable_pair_is_dominated_under_the_exact_posterior() {
    // image 0 uses labels {0, 1}, image 1 uses {2, 3}, each label twice
    let docs = vec![vec![0, 0, 1, 1], vec![2, 2, 3, 3]];
    let exact = brute_force_dominance(&docs, 4, 2, 0.1, 0.1);
    for v in &exact {
        assert!(*v > 0.9, "exact E[max theta] = {v}");
    }
}

#[test]
fn brute_force_oracle_matches_single_token_symmetry() {
    // one token, K = 2: posterior mean of max theta is (1 + a) / (1 + 2a)
    let v = brute_force_dominance(&[vec![0]], 1, 2, 0.5, 0.1);
    assert!((v[0] - 1.5 / 2.0).abs() < 1e-12);
}

fn separable_corpus(images: usize) -> (Vec<Vec<(usize, f64)>>, Vec<usize>) {
    // labels 0..5 belong to group 0, 5..10 to group 1; each image takes
    // four of its group's labels
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for i in 0..images {
        let group = i % 2;
        let skip = (i / 2) % 5;
        let row: Vec<(usize, f64)> = (0..5)
            .filter(|&j| j != skip)
            .map(|j| (group * 5 + j, 1.0))
            .collect();
        rows.push(row);
        truth.push(group);
    }
    (rows, truth)
}

#[test]
fn gibbs_and_vb_agree_on_separable_corpus() {
    let (rows, truth) = separable_corpus(50);
    let m = binary_matrix(rows, 10);
    let cfg = LdaConfig::new(2).with_priors(0.1, 0.1).with_seed(3);
    let gibbs = fit_gibbs(&m, &cfg).unwrap();
    let vb = fit_vb(&m, &cfg).unwrap();
    assert_stochastic(&gibbs.theta, "gibbs theta");
    assert_stochastic(&gibbs.phi, "gibbs phi");

    for d in 0..50 {
        let top = gibbs.theta.row(d).iter().copied().fold(0.0, f64::max);
        assert!(top > 0.9, "gibbs image {d}: {top}");
    }
    let matches = match_topics(&gibbs.phi, &vb.phi);
    let mut to_gibbs = [0usize; 2];
    for p in &matches {
        to_gibbs[p.fitted] = p.reference;
    }
    let g = gibbs.dominant_topics();
    let v = vb.dominant_topics();
    let agree = (0..50).filter(|&d| g[d] == to_gibbs[v[d]]).count();
    assert!(agree >= 45, "{agree} of 50 agree");
    // both recover the planted groups
    let same = (0..50).filter(|&d| g[d] == g[0]).count();
    assert_eq!(same, truth.iter().filter(|&&t| t == truth[0]).count());
}

#[test]
fn single_token_gibbs_is_exactly_uniform() {
    let m = binary_matrix(vec![vec![(0, 1.0)]], 1);
    let model = fit_gibbs(&m, &LdaConfig::new(2).with_seed(9)).unwrap();
    // with one word the conditional is (a + 0) / (2a) for each topic
    assert_eq!(model.theta.row(0), &[0.5, 0.5]);
}

#[test]
fn gibbs_rejects_fractional_weights() {
    let m = binary_matrix(vec![vec![(0, 1.5)]], 1);
    assert!(fit_gibbs(&m, &LdaConfig::new(2)).is_err());
}

fn simulated(seed: u64) -> (labeltopic::lda::SimulatedCorpus, LdaConfig) {
    let cfg = LdaConfig::new(3).with_priors(0.1, 0.01).with_seed(seed);
    (simulate_corpus(&cfg, &vec![50.0; 500], 50).unwrap(), cfg)
}

#[test]
fn vb_recovers_simulated_topics() {
    let (sim, cfg) = simulated(0);
    let model = fit_vb(&bags_matrix(&sim.bags, 50), &cfg).unwrap();
    assert_stochastic(&model.phi, "phi");
    assert_stochastic(&model.theta, "theta");
    for p in match_topics(&sim.phi, &model.phi) {
        assert!(p.similarity >= 0.9, "{p:?}");
    }
}

#[test]
fn full_batch_unit_rate_bound_never_drops() {
    let (sim, mut cfg) = simulated(2);
    cfg.vb.batch_size = sim.bags.len();
    cfg.vb.fixed_rate = Some(1.0);
    cfg.vb.passes = 30;
    cfg.vb.restarts = 1;
    let model = fit_vb(&bags_matrix(&sim.bags, 50), &cfg).unwrap();
    assert_eq!(model.elbo_trace.len(), 30);
    for w in model.elbo_trace.windows(2) {
        let drop = (w[0] - w[1]) / w[0].abs();
        assert!(drop <= 1e-6, "bound fell from {} to {}", w[0], w[1]);
    }
}

#[test]
fn fits_are_deterministic() {
    let (sim, cfg) = simulated(4);
    let m = bags_matrix(&sim.bags[..100], 50);
    assert_eq!(fit_vb(&m, &cfg).unwrap(), fit_vb(&m, &cfg).unwrap());
    let mut g = cfg.clone();
    g.gibbs.iterations = 60;
    g.gibbs.burn_in = 20;
    assert_eq!(fit_gibbs(&m, &g).unwrap(), fit_gibbs(&m, &g).unwrap());
}

#[test]
fn projection_reproduces_training_theta() {
    // default priors; with a sparse alpha a document's bound can have several
    // optima and the warm-started training fit need not be the one reached
    // from the uniform start
    let (sim, _) = simulated(1);
    let cfg = LdaConfig::new(3).with_seed(1);
    let m = bags_matrix(&sim.bags, 50);
    let model = fit_vb(&m, &cfg).unwrap();
    let theta = project(&model, &m).unwrap();
    assert_stochastic(&theta, "projected theta");
    let worst = theta
        .data()
        .iter()
        .zip(model.theta.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "largest difference {worst}");
}

#[test]
fn doubling_a_row_keeps_a_dominant_topic() {
    let (sim, cfg) = simulated(3);
    let m = bags_matrix(&sim.bags, 50);
    let model = fit_vb(&m, &cfg).unwrap();
    let doubled = bags_matrix(
        &sim.bags
            .iter()
            .map(|b| {
                labeltopic::corpus::BagOfLabelWords::from_entries(
                    b.entries().iter().map(|&(j, v)| (j, 2.0 * v)),
                )
            })
            .collect::<Vec<_>>(),
        50,
    );
    let once = project(&model, &m).unwrap();
    let twice = project(&model, &doubled).unwrap();
    let mut checked = 0;
    for d in 0..once.rows() {
        let top = once.row(d).iter().copied().fold(0.0, f64::max);
        if top > 0.6 {
            checked += 1;
            assert_eq!(once.row_argmax()[d], twice.row_argmax()[d], "image {d}");
        }
    }
    assert!(checked > 100);
}

#[test]
fn top_labels_contain_planted_labels() {
    // topic A lives on labels 0 and 1 ("snow", "blizzard"), topic B on 2..6
    let mut rows = Vec::new();
    for i in 0..60 {
        if i % 2 == 0 {
            rows.push(vec![(0, 3.0), (1, 2.0), (7 + i % 3, 1.0)]);
        } else {
            rows.push(vec![(2, 2.0), (3, 1.0), (4, 2.0), (5, 1.0), (6, 1.0)]);
        }
    }
    let m = binary_matrix(rows, 10);
    let model = fit_vb(&m, &LdaConfig::new(2).with_priors(0.1, 0.1).with_seed(2)).unwrap();
    let report = top_labels(&model, 5);
    let snow_topic = if model.phi.get(0, 0) > model.phi.get(1, 0) {
        0
    } else {
        1
    };
    let top: Vec<usize> = report.topics[snow_topic]
        .labels
        .iter()
        .map(|e| e.0)
        .collect();
    assert!(top.contains(&0) && top.contains(&1), "{top:?}");
    for entry in &report.topics {
        assert!(entry.labels.windows(2).all(|w| w[0].1 >= w[1].1));
    }
}

#[test]
fn three_topics_beat_one_on_held_out_data() {
    let (sim, cfg) = simulated(0);
    let rows = log_likelihood_report(&bags_matrix(&sim.bags, 50), &cfg, &[3, 1, 3]).unwrap();
    assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), [1, 3]);
    assert_eq!(rows[0].heldout_images, 50);
    assert!(
        rows[1].per_token_bound >= rows[0].per_token_bound,
        "{rows:?}"
    );
}

use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Logarithm of a `Gamma(shape, 1)` draw.
///
/// Shapes below one use `G(a) = G(a + 1) * U^(1/a)` in log space, so very
/// small shapes give large negative logs instead of underflowing to zero.
pub fn sample_log_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        Gamma::new(shape, 1.0)
            .expect("positive finite shape")
            .sample(rng)
            .ln()
    } else {
        let boosted = Gamma::new(shape + 1.0, 1.0)
            .expect("positive finite shape")
            .sample(rng)
            .ln();
        // U in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        boosted + u.ln() / shape
    }
}

/// Draws from a symmetric `Dirichlet(concentration)` of dimension `len` by
/// normalizing independent Gamma draws.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentration: f64, len: usize, rng: &mut R) -> Vec<f64> {
    assert!(len > 0, "dirichlet dimension must be positive");
    assert!(concentration > 0.0 && concentration.is_finite());
    let logs: Vec<f64> = (0..len)
        .map(|_| sample_log_gamma(concentration, rng))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

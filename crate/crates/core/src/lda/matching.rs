use super::DenseMatrix;

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopicMatch {
    pub reference: usize,
    pub fitted: usize,
    pub similarity: f64,
}

/// Greedy one-to-one assignment of rows of `fitted` to rows of `reference`
/// by repeatedly taking the most similar unassigned pair. Returns one match
/// per reference row (or per fitted row if there are fewer), sorted by
/// reference index. Ties go to the lower indices.
pub fn match_topics(reference: &DenseMatrix, fitted: &DenseMatrix) -> Vec<TopicMatch> {
    let mut pairs: Vec<TopicMatch> = Vec::with_capacity(reference.rows() * fitted.rows());
    for r in 0..reference.rows() {
        for f in 0..fitted.rows() {
            pairs.push(TopicMatch {
                reference: r,
                fitted: f,
                similarity: cosine_similarity(reference.row(r), fitted.row(f)),
            });
        }
    }
    pairs.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.reference.cmp(&b.reference))
            .then(a.fitted.cmp(&b.fitted))
    });
    let mut used_ref = vec![false; reference.rows()];
    let mut used_fit = vec![false; fitted.rows()];
    let mut out = Vec::new();
    for p in pairs {
        if !used_ref[p.reference] && !used_fit[p.fitted] {
            used_ref[p.reference] = true;
            used_fit[p.fitted] = true;
            out.push(p);
        }
    }
    out.sort_by_key(|p| p.reference);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_permutation() {
        let a = DenseMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = DenseMatrix::from_rows(vec![
            vec![0.0, 0.1, 0.9],
            vec![0.8, 0.2, 0.0],
            vec![0.1, 0.9, 0.0],
        ])
        .unwrap();
        let m = match_topics(&a, &b);
        let fitted: Vec<usize> = m.iter().map(|p| p.fitted).collect();
        assert_eq!(fitted, vec![1, 2, 0]);
        assert!(m.iter().all(|p| p.similarity > 0.9));
    }

    #[test]
    fn cosine_of_zero_vector() {
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((cosine_similarity(&[1.0, 1.0], &[2.0, 2.0]) - 1.0).abs() < 1e-15);
    }
}

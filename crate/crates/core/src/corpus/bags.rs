use super::{ImageRecord, Vocabulary};

/// Sparse non-negative label vector of one image.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BagOfLabelWords {
    entries: Vec<(usize, f64)>,
    weight: f64,
}

impl BagOfLabelWords {
    /// Builds a bag from `(index, weight)` pairs. Repeated indices are summed,
    /// zero weights are dropped and entries end up sorted by index.
    pub fn from_entries<I: IntoIterator<Item = (usize, f64)>>(entries: I) -> Self {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().filter(|e| e.1 != 0.0).collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        let weight = merged.iter().map(|e| e.1.abs()).sum();
        Self {
            entries: merged,
            weight,
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// L1 norm of the bag, `w_i`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.get(j) != 0.0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One bag per record. Each label in `vocab` contributes its score as weight,
/// which is exactly 1 for binarized records; labels absent from `vocab` are
/// dropped.
pub fn to_bags(records: &[ImageRecord], vocab: &Vocabulary) -> Vec<BagOfLabelWords> {
    records
        .iter()
        .map(|r| {
            BagOfLabelWords::from_entries(
                r.raw_labels
                    .iter()
                    .filter_map(|l| vocab.index_of(&l.word).map(|j| (j, l.score))),
            )
        })
        .collect()
}

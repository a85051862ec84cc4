//! Binary term frequency, per-camera and global idf, and the sparse
//! image-label matrix.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BagOfLabelWords, ImageRecord, Vocabulary};

pub use io::{read_coordinate, read_row_meta};

#[derive(Debug, Error)]
pub enum WeightingError {
    #[error("word index {index} out of range for {size} columns")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("camera `{0}` does not occur in the vocabulary")]
    UnknownCamera(String),
    #[error("{bags} bags but {meta} metadata rows")]
    LengthMismatch { bags: usize, meta: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = WeightingError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingMode {
    /// Bag weights copied unchanged (1 per label for binarized records).
    Binary,
    /// `tf(i, j) * max(0, log(N_c / n_j))`.
    #[default]
    PerCameraTfIdf,
    /// `tf(i, j) * log(N / n_j)`.
    GlobalTfIdf,
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingMode::Binary => "binary",
            WeightingMode::PerCameraTfIdf => "per-camera-tf-idf",
            WeightingMode::GlobalTfIdf => "global-tf-idf",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "binary" => Ok(WeightingMode::Binary),
            "per-camera-tf-idf" => Ok(WeightingMode::PerCameraTfIdf),
            "global-tf-idf" => Ok(WeightingMode::GlobalTfIdf),
            other => Err(format!(
                "unknown weighting mode `{other}` (expected binary, per-camera-tf-idf or global-tf-idf)"
            )),
        }
    }
}

/// Identity of the image behind a matrix row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowMeta {
    pub image_id: String,
    pub camera: String,
    pub timestamp: DateTime<Utc>,
}

impl From<&ImageRecord> for RowMeta {
    fn from(r: &ImageRecord) -> Self {
        Self {
            image_id: r.image_id.clone(),
            camera: r.camera.clone(),
            timestamp: r.timestamp,
        }
    }
}

/// Row of the image-label matrix: strictly positive values sorted by column.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Sorts by column and drops exact zeros. Columns must be distinct.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.retain(|e| e.1 != 0.0);
        entries.sort_by_key(|e| e.0);
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, j: usize) -> f64 {
        self.entries
            .binary_search_by_key(&j, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1.abs()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Sparse `N x M` matrix stacking one weighted label vector per image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageLabelMatrix {
    rows: Vec<SparseRow>,
    row_meta: Vec<RowMeta>,
    columns: usize,
    mode: WeightingMode,
    vocabulary_hash: String,
}

impl ImageLabelMatrix {
    /// Assembles a matrix from prepared rows. Fails when a column index is out
    /// of range, a value is negative or `rows` and `row_meta` differ in length.
    pub fn from_rows(
        rows: Vec<SparseRow>,
        row_meta: Vec<RowMeta>,
        columns: usize,
        mode: WeightingMode,
        vocabulary_hash: String,
    ) -> Result<Self> {
        if rows.len() != row_meta.len() {
            return Err(WeightingError::LengthMismatch {
                bags: rows.len(),
                meta: row_meta.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row.entries() {
                if j >= columns {
                    return Err(WeightingError::IndexOutOfRange {
                        index: j,
                        size: columns,
                    });
                }
                if v.is_nan() || v < 0.0 {
                    return Err(WeightingError::Malformed {
                        line: i + 1,
                        reason: format!("negative weight {v} in column {j}"),
                    });
                }
            }
        }
        Ok(Self {
            rows,
            row_meta,
            columns,
            mode,
            vocabulary_hash,
        })
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row_meta(&self) -> &[RowMeta] {
        &self.row_meta
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns
    }

    pub fn mode(&self) -> WeightingMode {
        self.mode
    }

    /// Hash of the vocabulary defining the columns; empty when the matrix was
    /// assembled without one.
    pub fn vocabulary_hash(&self) -> &str {
        &self.vocabulary_hash
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(j)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.entries.len()).sum()
    }

    /// Column `j` as `(timestamp, weight)` points per camera, chronological,
    /// zeros included. Rows sharing a timestamp keep matrix order.
    pub fn label_column_series(
        &self,
        j: usize,
    ) -> Result<BTreeMap<String, Vec<(DateTime<Utc>, f64)>>> {
        if j >= self.columns {
            return Err(WeightingError::IndexOutOfRange {
                index: j,
                size: self.columns,
            });
        }
        let mut out: BTreeMap<String, Vec<(DateTime<Utc>, f64)>> = BTreeMap::new();
        for (row, meta) in self.rows.iter().zip(&self.row_meta) {
            out.entry(meta.camera.clone())
                .or_default()
                .push((meta.timestamp, row.get(j)));
        }
        for points in out.values_mut() {
            points.sort_by_key(|p| p.0);
        }
        Ok(out)
    }

    /// Same matrix restricted to the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            row_meta: indices.iter().map(|&i| self.row_meta[i].clone()).collect(),
            columns: self.columns,
            mode: self.mode,
            vocabulary_hash: self.vocabulary_hash.clone(),
        }
    }
}

fn check_index(vocab: &Vocabulary, j: usize) -> Result<()> {
    if j < vocab.len() {
        Ok(())
    } else {
        Err(WeightingError::IndexOutOfRange {
            index: j,
            size: vocab.len(),
        })
    }
}

/// Binary term frequency: 1 when the bag holds label `j`.
pub fn tf(bag: &BagOfLabelWords, j: usize, vocab: &Vocabulary) -> Result<u8> {
    check_index(vocab, j)?;
    Ok(u8::from(bag.contains(j)))
}

/// `log(N_c / n_j)` with the camera's image count and the global document
/// count. Negative when the label occurs in more images overall than the
/// camera has.
pub fn per_camera_idf(vocab: &Vocabulary, j: usize, camera: &str) -> Result<f64> {
    check_index(vocab, j)?;
    let n_c = vocab
        .camera_images(camera)
        .ok_or_else(|| WeightingError::UnknownCamera(camera.to_string()))?;
    let n_j = vocab.doc_count(j).expect("index checked");
    Ok((n_c as f64 / n_j as f64).ln())
}

/// `log(N / n_j)`.
pub fn global_idf(vocab: &Vocabulary, j: usize) -> Result<f64> {
    check_index(vocab, j)?;
    let n_j = vocab.doc_count(j).expect("index checked");
    Ok((vocab.total_images() as f64 / n_j as f64).ln())
}

/// Weights every bag under `mode`. Per-camera idf is clamped at 0; zero
/// products are not stored. Rows are assembled in parallel, order preserved.
pub fn build_matrix(
    bags: &[BagOfLabelWords],
    row_meta: Vec<RowMeta>,
    vocab: &Vocabulary,
    mode: WeightingMode,
) -> Result<ImageLabelMatrix> {
    if bags.len() != row_meta.len() {
        return Err(WeightingError::LengthMismatch {
            bags: bags.len(),
            meta: row_meta.len(),
        });
    }
    for meta in &row_meta {
        if mode == WeightingMode::PerCameraTfIdf && vocab.camera_images(&meta.camera).is_none() {
            return Err(WeightingError::UnknownCamera(meta.camera.clone()));
        }
    }
    let rows: Vec<SparseRow> = bags
        .par_iter()
        .zip(row_meta.par_iter())
        .map(|(bag, meta)| {
            let entries = bag
                .entries()
                .iter()
                .map(|&(j, value)| {
                    let weight = match mode {
                        WeightingMode::Binary => value,
                        WeightingMode::PerCameraTfIdf => {
                            per_camera_idf(vocab, j, &meta.camera)?.max(0.0)
                        }
                        WeightingMode::GlobalTfIdf => global_idf(vocab, j)?,
                    };
                    Ok((j, weight))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SparseRow::new(entries))
        })
        .collect::<Result<_>>()?;
    ImageLabelMatrix::from_rows(rows, row_meta, vocab.len(), mode, vocab.hash())
}

#![allow(dead_code)]

use chrono::{DateTime, Utc};
use labeltopic::corpus::BagOfLabelWords;
use labeltopic::weighting::{ImageLabelMatrix, RowMeta, SparseRow, WeightingMode};

pub fn at(seconds: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(1_514_764_800 + seconds, 0).unwrap()
}

/// One camera, images three minutes apart from 2018-01-01.
pub fn binary_matrix(rows: Vec<Vec<(usize, f64)>>, cols: usize) -> ImageLabelMatrix {
    let meta = (0..rows.len())
        .map(|i| RowMeta {
            image_id: format!("img-{i}"),
            camera: "c".into(),
            timestamp: at(180 * i as i64),
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

pub fn bags_matrix(bags: &[BagOfLabelWords], cols: usize) -> ImageLabelMatrix {
    binary_matrix(bags.iter().map(|b| b.entries().to_vec()).collect(), cols)
}

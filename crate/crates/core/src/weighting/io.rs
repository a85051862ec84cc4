use std::io::{BufRead, Read, Write};

use crate::corpus::{format_timestamp, parse_timestamp};

use super::{ImageLabelMatrix, Result, RowMeta, SparseRow, WeightingError};

impl ImageLabelMatrix {
    /// Writes stored entries as `i j value` lines, 1-based, row-major.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row.entries() {
                writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `row,image_id,camera,timestamp` with 1-based rows.
    pub fn write_row_meta<W: Write>(&self, out: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(["row", "image_id", "camera", "timestamp"])?;
        for (i, meta) in self.row_meta.iter().enumerate() {
            csv.write_record([
                (i + 1).to_string(),
                meta.image_id.clone(),
                meta.camera.clone(),
                format_timestamp(&meta.timestamp),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

/// Reads `i j value` lines into `n_rows` sparse rows. Blank lines and lines
/// starting with `%` are skipped.
pub fn read_coordinate<R: BufRead>(reader: R, n_rows: usize) -> Result<Vec<SparseRow>> {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let bad = |reason: String| WeightingError::Malformed {
            line: n + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", fields.len())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad row `{}`", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad column `{}`", fields[1])))?;
        let v: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", fields[2])))?;
        if i == 0 || i > n_rows || j == 0 {
            return Err(bad(format!("index ({i}, {j}) out of range")));
        }
        rows[i - 1].push((j - 1, v));
    }
    Ok(rows.into_iter().map(SparseRow::new).collect())
}

pub fn read_row_meta<R: Read>(reader: R) -> Result<Vec<RowMeta>> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (n, rec) in csv.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| WeightingError::Malformed {
            line: n + 2,
            reason,
        };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", rec.len())));
        }
        let timestamp =
            parse_timestamp(&rec[3]).ok_or_else(|| bad(format!("bad timestamp `{}`", &rec[3])))?;
        out.push(RowMeta {
            image_id: rec[1].to_string(),
            camera: rec[2].to_string(),
            timestamp,
        });
    }
    Ok(out)
}

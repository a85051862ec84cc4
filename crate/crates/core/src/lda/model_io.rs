use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, LdaConfig, LdaError, Result, TopicModel};

pub const MODEL_FORMAT: &str = "labeltopic-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Table {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: LdaConfig,
    vocabulary_hash: String,
    phi: Table,
    theta: Table,
    elbo_trace: Vec<f64>,
}

fn table(m: &DenseMatrix) -> Table {
    Table {
        rows: m.rows(),
        cols: m.cols(),
        data: m.data().to_vec(),
    }
}

fn matrix(name: &str, t: Table) -> Result<DenseMatrix> {
    let (rows, cols) = (t.rows, t.cols);
    DenseMatrix::from_vec(rows, cols, t.data).ok_or_else(|| {
        LdaError::UnsupportedModel(format!(
            "{name}: data length does not match {rows} x {cols}"
        ))
    })
}

impl TopicModel {
    /// Writes the model as one JSON document.
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocabulary_hash: self.vocabulary_hash.clone(),
            phi: table(&self.phi),
            theta: table(&self.theta),
            elbo_trace: self.elbo_trace.clone(),
        };
        serde_json::to_writer(&mut writer, &file)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read_from<R: std::io::Read>(reader: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if file.format != MODEL_FORMAT {
            return Err(LdaError::UnsupportedModel(format!(
                "format `{}`",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(LdaError::UnsupportedModel(format!(
                "version {}",
                file.version
            )));
        }
        let phi = matrix("phi", file.phi)?;
        let theta = matrix("theta", file.theta)?;
        if phi.rows() != file.config.k || theta.cols() != file.config.k {
            return Err(LdaError::UnsupportedModel(format!(
                "tables disagree with K = {}",
                file.config.k
            )));
        }
        Ok(TopicModel {
            phi,
            theta,
            elbo_trace: file.elbo_trace,
            config: file.config,
            vocabulary_hash: file.vocabulary_hash,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let model = TopicModel {
            phi: DenseMatrix::from_rows(vec![
                vec![0.1, 0.2, 0.7],
                vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            ])
            .unwrap(),
            theta: DenseMatrix::from_rows(vec![vec![
                0.123_456_789_012_345_68,
                1.0 - 0.123_456_789_012_345_68,
            ]])
            .unwrap(),
            elbo_trace: vec![-12.5, -11.000000000000002],
            config: LdaConfig::new(2).with_seed(7),
            vocabulary_hash: "abc".into(),
        };
        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = TopicModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(TopicModel::read_from(br#"{"format":"other","version":1}"#.as_slice()).is_err());
        let text = String::from_utf8({
            let mut b = Vec::new();
            TopicModel {
                phi: DenseMatrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
                theta: DenseMatrix::zeros(0, 2),
                elbo_trace: vec![],
                config: LdaConfig::new(2),
                vocabulary_hash: String::new(),
            }
            .write_to(&mut b)
            .unwrap();
            b
        })
        .unwrap();
        let bumped = text.replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            TopicModel::read_from(bumped.as_bytes()),
            Err(LdaError::UnsupportedModel(_))
        ));
    }
}

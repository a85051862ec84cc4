use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_vocabulary, format_timestamp, parse_timestamp, Blacklist, CorpusError, ImageRecord,
    LabelWord, RawLabel, Result, Service, Vocabulary,
};

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusSource {
    /// Cleaned, binarized label records.
    Ingest,
    /// Simulated bags; label scores hold draw counts.
    Simulate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StoredLabel {
    service: Service,
    text: String,
    score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StoredRecord {
    image_id: String,
    camera: String,
    timestamp: String,
    labels: Vec<StoredLabel>,
}

/// On-disk corpus: records plus the cleaning parameters needed to rebuild the
/// exact vocabulary they were prepared with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusArtifact {
    pub version: u32,
    pub source: CorpusSource,
    pub blacklist: Vec<String>,
    pub cutoff: f64,
    pub vocabulary_hash: String,
    records: Vec<StoredRecord>,
}

impl CorpusArtifact {
    pub fn new(
        source: CorpusSource,
        records: &[ImageRecord],
        blacklist: &Blacklist,
        cutoff: f64,
    ) -> Result<Self> {
        let mut artifact = Self {
            version: ARTIFACT_VERSION,
            source,
            blacklist: blacklist.patterns().to_vec(),
            cutoff,
            vocabulary_hash: String::new(),
            records: records.iter().map(store).collect(),
        };
        artifact.vocabulary_hash = artifact.vocabulary()?.hash();
        Ok(artifact)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> Result<Vec<ImageRecord>> {
        self.records.iter().map(restore).collect()
    }

    /// Rebuilds the blacklisted, frequency-filtered vocabulary.
    pub fn vocabulary(&self) -> Result<Vocabulary> {
        let records = self.records()?;
        build_vocabulary(&records, &Blacklist::new(&self.blacklist))?.frequency_filter(self.cutoff)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
            _ => CorpusError::Io(e),
        })?;
        let artifact: CorpusArtifact = serde_json::from_reader(BufReader::new(file))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(CorpusError::UnsupportedVersion(artifact.version));
        }
        Ok(artifact)
    }
}

fn store(r: &ImageRecord) -> StoredRecord {
    StoredRecord {
        image_id: r.image_id.clone(),
        camera: r.camera.clone(),
        timestamp: format_timestamp(&r.timestamp),
        labels: r
            .raw_labels
            .iter()
            .map(|l| StoredLabel {
                service: l.word.service,
                text: l.word.text.clone(),
                score: l.score,
            })
            .collect(),
    }
}

fn restore(r: &StoredRecord) -> Result<ImageRecord> {
    let bad = |reason: String| CorpusError::MalformedRecord { line: 0, reason };
    let timestamp = parse_timestamp(&r.timestamp)
        .ok_or_else(|| bad(format!("invalid timestamp `{}`", r.timestamp)))?;
    let raw_labels = r
        .labels
        .iter()
        .map(|l| {
            LabelWord::new(l.service, &l.text)
                .map(|word| RawLabel {
                    word,
                    score: l.score,
                })
                .ok_or_else(|| bad(format!("empty label text in `{}`", r.image_id)))
        })
        .collect::<Result<_>>()?;
    Ok(ImageRecord {
        image_id: r.image_id.clone(),
        camera: r.camera.clone(),
        timestamp,
        raw_labels,
    })
}

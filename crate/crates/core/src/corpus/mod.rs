//! Label records, the unified label vocabulary and bag-of-label-words vectors.
//!
//! Every label is prefixed by the service that produced it so that the two
//! service vocabularies stay disjoint: `LS1: snow` and `LS2: Snow` are
//! different words.

mod artifact;
mod bags;
mod ingest;
mod vocab;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use artifact::{CorpusArtifact, CorpusSource, ARTIFACT_VERSION};
pub use bags::{to_bags, BagOfLabelWords};
pub use ingest::{binarize, ingest, parse_line, read_records, Ingested, RejectedLine};
pub use vocab::{build_vocabulary, Blacklist, Vocabulary, DEFAULT_BLACKLIST};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate image id `{0}`")]
    DuplicateImageId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("word index {index} out of range for vocabulary of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("no word survives frequency cutoff {0}")]
    AllWordsFiltered(f64),
    #[error("invalid cutoff {0}: must lie in [0, 1]")]
    InvalidCutoff(f64),
    #[error("unsupported corpus artifact version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Labeling service a word came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Service {
    #[serde(rename = "LS1")]
    Ls1,
    #[serde(rename = "LS2")]
    Ls2,
}

impl Service {
    pub fn as_str(self) -> &'static str {
        match self {
            Service::Ls1 => "LS1",
            Service::Ls2 => "LS2",
        }
    }
}

impl fmt::Display for Service {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Service {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "LS1" => Ok(Service::Ls1),
            "LS2" => Ok(Service::Ls2),
            other => Err(format!("unknown service `{other}`")),
        }
    }
}

/// A single service-prefixed label.
///
/// The derived ordering compares `(service, text)`; because both service tags
/// render with the same width, this coincides with byte-wise ordering of the
/// rendered `"<service>: <text>"` form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelWord {
    pub service: Service,
    pub text: String,
}

impl LabelWord {
    /// Builds a word, trimming surrounding whitespace. Returns `None` when the
    /// trimmed text is empty.
    pub fn new(service: Service, text: &str) -> Option<Self> {
        let text = text.trim();
        if text.is_empty() {
            None
        } else {
            Some(Self {
                service,
                text: text.to_string(),
            })
        }
    }

    pub fn rendered(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for LabelWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.service, self.text)
    }
}

impl FromStr for LabelWord {
    type Err = String;

    /// Parses the rendered form, e.g. `"LS1: snow"`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (service, text) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `<service>: <text>`, got `{s}`"))?;
        let service: Service = service.trim().parse()?;
        LabelWord::new(service, text).ok_or_else(|| format!("empty label text in `{s}`"))
    }
}

/// One label attached to an image together with the service's score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawLabel {
    pub word: LabelWord,
    pub score: f64,
}

/// One labeled camera image.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub camera: String,
    pub timestamp: DateTime<Utc>,
    pub raw_labels: Vec<RawLabel>,
}

impl ImageRecord {
    pub fn has_word(&self, word: &LabelWord) -> bool {
        self.raw_labels.iter().any(|l| &l.word == word)
    }
}

/// Formats a timestamp as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses an ISO-8601 / RFC 3339 instant and truncates it to whole seconds.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let ts = DateTime::parse_from_rfc3339(s.trim())
        .ok()?
        .with_timezone(&Utc);
    DateTime::from_timestamp(ts.timestamp(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendered_form_round_trips() {
        let w = LabelWord::new(
            Service::Ls2,
            "  Massachusetts Department of Transportation ",
        )
        .unwrap();
        assert_eq!(
            w.rendered(),
            "LS2: Massachusetts Department of Transportation"
        );
        assert_eq!(w.rendered().parse::<LabelWord>().unwrap(), w);
    }

    #[test]
    fn blank_text_is_rejected() {
        assert!(LabelWord::new(Service::Ls1, "   ").is_none());
        assert!("LS1:  ".parse::<LabelWord>().is_err());
        assert!("LS3: car".parse::<LabelWord>().is_err());
    }

    #[test]
    fn ordering_matches_rendered_form() {
        let mut words = vec![
            LabelWord::new(Service::Ls2, "Car").unwrap(),
            LabelWord::new(Service::Ls1, "car").unwrap(),
            LabelWord::new(Service::Ls1, "Zebra").unwrap(),
            LabelWord::new(Service::Ls2, "Blizzard").unwrap(),
            LabelWord::new(Service::Ls1, "blizzard").unwrap(),
        ];
        let mut rendered: Vec<String> = words.iter().map(|w| w.rendered()).collect();
        words.sort();
        rendered.sort();
        let after: Vec<String> = words.iter().map(|w| w.rendered()).collect();
        assert_eq!(after, rendered);
    }

    #[test]
    fn timestamps_parse_and_format() {
        let ts = parse_timestamp("2018-01-04T16:57:52Z").unwrap();
        assert_eq!(format_timestamp(&ts), "2018-01-04T16:57:52Z");
        let frac = parse_timestamp("2018-01-04T16:57:52.750Z").unwrap();
        assert_eq!(frac, ts);
        let offset = parse_timestamp("2018-01-04T11:57:52-05:00").unwrap();
        assert_eq!(offset, ts);
        assert!(parse_timestamp("yesterday").is_none());
    }
}

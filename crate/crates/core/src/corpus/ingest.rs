use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{parse_timestamp, CorpusError, ImageRecord, LabelWord, RawLabel, Result, Service};

#[derive(Deserialize)]
struct LineRecord {
    image_id: String,
    camera: String,
    timestamp: String,
    #[serde(default)]
    labels: Vec<LineLabel>,
}

#[derive(Deserialize)]
struct LineLabel {
    service: String,
    text: String,
    score: f64,
}

/// A line skipped during lenient ingestion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

/// Output of [`ingest`]: accepted records in file order plus the lines that
/// were skipped (always empty in strict mode).
#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<ImageRecord>,
    pub rejected: Vec<RejectedLine>,
}

/// Reads a label-record file (one JSON object per line).
///
/// In strict mode the first bad line aborts with its line number; otherwise
/// bad lines are collected in [`Ingested::rejected`]. Blank lines are ignored.
pub fn ingest(path: &Path, strict: bool) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::Io(e),
    })?;
    read_records(BufReader::new(file), strict)
}

pub fn read_records<R: BufRead>(reader: R, strict: bool) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = match parse_line(&line) {
            Ok(record) if seen.contains(&record.image_id) => {
                Err(LineError::Duplicate(record.image_id))
            }
            Ok(record) => Ok(record),
            Err(reason) => Err(LineError::Malformed(reason)),
        };
        match outcome {
            Ok(record) => {
                seen.insert(record.image_id.clone());
                out.records.push(record);
            }
            Err(LineError::Duplicate(id)) if strict => {
                return Err(CorpusError::DuplicateImageId(id))
            }
            Err(LineError::Malformed(reason)) if strict => {
                return Err(CorpusError::MalformedRecord {
                    line: line_no,
                    reason,
                })
            }
            Err(err) => out.rejected.push(RejectedLine {
                line: line_no,
                reason: err.to_string(),
            }),
        }
    }
    Ok(out)
}

enum LineError {
    Malformed(String),
    Duplicate(String),
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LineError::Malformed(reason) => f.write_str(reason),
            LineError::Duplicate(id) => write!(f, "duplicate image id `{id}`"),
        }
    }
}

/// Parses and validates one record line. Repeated labels collapse to a single
/// entry carrying the maximum score, at the position of first occurrence.
pub fn parse_line(line: &str) -> std::result::Result<ImageRecord, String> {
    let raw: LineRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.image_id.trim().is_empty() {
        return Err("empty image_id".into());
    }
    if raw.camera.trim().is_empty() {
        return Err("empty camera".into());
    }
    let timestamp = parse_timestamp(&raw.timestamp)
        .ok_or_else(|| format!("invalid timestamp `{}`", raw.timestamp))?;

    let mut raw_labels: Vec<RawLabel> = Vec::with_capacity(raw.labels.len());
    for label in raw.labels {
        let service: Service = label.service.parse()?;
        let word = LabelWord::new(service, &label.text)
            .ok_or_else(|| format!("empty {service} label text"))?;
        if !label.score.is_finite() || label.score < 0.0 {
            return Err(format!("invalid score {} for `{word}`", label.score));
        }
        match raw_labels.iter_mut().find(|l| l.word == word) {
            Some(existing) => existing.score = existing.score.max(label.score),
            None => raw_labels.push(RawLabel {
                word,
                score: label.score,
            }),
        }
    }

    Ok(ImageRecord {
        image_id: raw.image_id,
        camera: raw.camera,
        timestamp,
        raw_labels,
    })
}

/// Discards score information: positive scores become 1, zero scores drop the
/// label. Order is preserved.
pub fn binarize(records: Vec<ImageRecord>) -> Vec<ImageRecord> {
    records
        .into_iter()
        .map(|mut r| {
            r.raw_labels.retain(|l| l.score > 0.0);
            for l in &mut r.raw_labels {
                l.score = 1.0;
            }
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BOMB_CYCLONE: &str = r#"{"image_id":"1137-1/20180104165752","camera":"1137-1","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS1","text":"snow","score":0.91},{"service":"LS1","text":"blizzard","score":0.7},{"service":"LS2","text":"Blizzard","score":1.21}]}"#;

    fn read(text: &str, strict: bool) -> Result<Ingested> {
        read_records(text.as_bytes(), strict)
    }

    #[test]
    fn labels_keep_service_prefix() {
        let rec = parse_line(BOMB_CYCLONE).unwrap();
        assert_eq!(rec.raw_labels.len(), 3);
        let ls1 = rec
            .raw_labels
            .iter()
            .filter(|l| l.word.service == Service::Ls1)
            .count();
        assert_eq!(ls1, 2);
        assert_eq!(rec.raw_labels[2].word.rendered(), "LS2: Blizzard");
        assert_eq!(rec.raw_labels[0].score, 0.91);
    }

    #[test]
    fn empty_input_gives_no_records() {
        let out = read("", true).unwrap();
        assert!(out.records.is_empty());
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn repeated_image_id_is_an_error_in_strict_mode() {
        let text = format!("{BOMB_CYCLONE}\n{BOMB_CYCLONE}\n");
        match read(&text, true) {
            Err(CorpusError::DuplicateImageId(id)) => assert_eq!(id, "1137-1/20180104165752"),
            other => panic!("expected DuplicateImageId, got {other:?}"),
        }
        let lenient = read(&text, false).unwrap();
        assert_eq!(lenient.records.len(), 1);
        assert_eq!(lenient.rejected[0].line, 2);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let text = format!("{BOMB_CYCLONE}\n\n{{\"image_id\":\"x\"}}\n");
        match read(&text, true) {
            Err(CorpusError::MalformedRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MalformedRecord, got {other:?}"),
        }
        let lenient = read(&text, false).unwrap();
        assert_eq!(lenient.records.len(), 1);
        assert_eq!(lenient.rejected.len(), 1);
        assert_eq!(lenient.rejected[0].line, 3);
    }

    #[test]
    fn bad_fields_are_rejected() {
        let cases = [
            r#"{"image_id":"a","camera":"c","timestamp":"not a time","labels":[]}"#,
            r#"{"image_id":"a","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS9","text":"x","score":1}]}"#,
            r#"{"image_id":"a","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS1","text":" ","score":1}]}"#,
            r#"{"image_id":"a","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS1","text":"x","score":-1}]}"#,
            r#"{"image_id":"","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[]}"#,
        ];
        for case in cases {
            assert!(parse_line(case).is_err(), "{case}");
        }
    }

    #[test]
    fn duplicate_labels_keep_max_score() {
        let line = r#"{"image_id":"a","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS1","text":"snow","score":0.6},{"service":"LS1","text":"road","score":0.8},{"service":"LS1","text":"snow ","score":0.9}]}"#;
        let rec = parse_line(line).unwrap();
        assert_eq!(rec.raw_labels.len(), 2);
        assert_eq!(rec.raw_labels[0].word.text, "snow");
        assert_eq!(rec.raw_labels[0].score, 0.9);
    }

    #[test]
    fn missing_file_is_reported() {
        match ingest(Path::new("/nonexistent/labels.jsonl"), true) {
            Err(CorpusError::FileNotFound(_)) => {}
            other => panic!("expected FileNotFound, got {other:?}"),
        }
    }

    #[test]
    fn binarize_sets_scores_to_one_and_drops_zeros() {
        let line = r#"{"image_id":"a","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[{"service":"LS1","text":"snow","score":0.91},{"service":"LS1","text":"road","score":0}]}"#;
        let out = binarize(vec![parse_line(line).unwrap()]);
        assert_eq!(out[0].raw_labels.len(), 1);
        assert_eq!(out[0].raw_labels[0].score, 1.0);

        let empty =
            r#"{"image_id":"b","camera":"c","timestamp":"2018-01-04T16:57:52Z","labels":[]}"#;
        let rec = parse_line(empty).unwrap();
        assert_eq!(binarize(vec![rec.clone()]), vec![rec]);
    }

    proptest! {
        #[test]
        fn binarize_is_idempotent(scores in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..5.0], 0..12)) {
            let labels: Vec<RawLabel> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| RawLabel { word: LabelWord::new(Service::Ls1, &format!("w{i}")).unwrap(), score: s })
                .collect();
            let rec = ImageRecord {
                image_id: "x".into(),
                camera: "c".into(),
                timestamp: parse_timestamp("2018-01-01T00:00:00Z").unwrap(),
                raw_labels: labels,
            };
            let once = binarize(vec![rec]);
            let twice = binarize(once.clone());
            prop_assert_eq!(&once, &twice);
            prop_assert!(once[0].raw_labels.iter().all(|l| l.score == 1.0));
        }
    }
}

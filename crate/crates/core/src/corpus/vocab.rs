use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use sha2::{Digest, Sha256};

use super::{CorpusError, ImageRecord, LabelWord, Result};

/// Watermark label removed by default.
pub const DEFAULT_BLACKLIST: &[&str] = &["massachusetts department of transportation"];

/// Case-insensitive substring patterns matched against label text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blacklist {
    patterns: Vec<String>,
}

impl Blacklist {
    pub fn new<I, S>(patterns: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            patterns: patterns
                .into_iter()
                .map(|p| p.as_ref().trim().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        Self {
            patterns: Vec::new(),
        }
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn matches(&self, word: &LabelWord) -> bool {
        if self.patterns.is_empty() {
            return false;
        }
        let text = word.text.to_lowercase();
        self.patterns.iter().any(|p| text.contains(p.as_str()))
    }
}

impl Default for Blacklist {
    fn default() -> Self {
        Self::new(DEFAULT_BLACKLIST)
    }
}

/// Ordered label vocabulary with global and per-camera document counts.
///
/// Indices are 0-based and follow lexicographic order of the rendered words.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<LabelWord>,
    index: HashMap<LabelWord, usize>,
    doc_count: Vec<usize>,
    per_camera_doc_count: Vec<BTreeMap<String, usize>>,
    total_images: usize,
    per_camera_images: BTreeMap<String, usize>,
}

/// Collects every label of `records` that no blacklist pattern matches.
///
/// Records with no surviving labels still count towards `N` and `N_c`.
pub fn build_vocabulary(records: &[ImageRecord], blacklist: &Blacklist) -> Result<Vocabulary> {
    if records.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut counts: BTreeMap<&LabelWord, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut per_camera_images: BTreeMap<String, usize> = BTreeMap::new();
    for record in records {
        *per_camera_images.entry(record.camera.clone()).or_default() += 1;
        // ingestion collapses duplicates, but records built by hand may not
        let distinct: BTreeSet<&LabelWord> = record
            .raw_labels
            .iter()
            .filter(|l| l.score > 0.0)
            .map(|l| &l.word)
            .collect();
        for word in distinct {
            if blacklist.matches(word) {
                continue;
            }
            *counts
                .entry(word)
                .or_default()
                .entry(record.camera.as_str())
                .or_default() += 1;
        }
    }

    let mut words = Vec::with_capacity(counts.len());
    let mut doc_count = Vec::with_capacity(counts.len());
    let mut per_camera_doc_count = Vec::with_capacity(counts.len());
    for (word, by_camera) in counts {
        words.push(word.clone());
        doc_count.push(by_camera.values().sum());
        per_camera_doc_count.push(
            by_camera
                .into_iter()
                .map(|(c, n)| (c.to_string(), n))
                .collect(),
        );
    }
    Ok(Vocabulary::assemble(
        words,
        doc_count,
        per_camera_doc_count,
        records.len(),
        per_camera_images,
    ))
}

impl Vocabulary {
    fn assemble(
        words: Vec<LabelWord>,
        doc_count: Vec<usize>,
        per_camera_doc_count: Vec<BTreeMap<String, usize>>,
        total_images: usize,
        per_camera_images: BTreeMap<String, usize>,
    ) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(j, w)| (w.clone(), j))
            .collect();
        Self {
            words,
            index,
            doc_count,
            per_camera_doc_count,
            total_images,
            per_camera_images,
        }
    }

    /// Number of words `M`.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[LabelWord] {
        &self.words
    }

    pub fn word(&self, j: usize) -> Result<&LabelWord> {
        self.words.get(j).ok_or(CorpusError::IndexOutOfRange {
            index: j,
            size: self.len(),
        })
    }

    pub fn index_of(&self, word: &LabelWord) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Total image count `N`.
    pub fn total_images(&self) -> usize {
        self.total_images
    }

    /// Image count `N_c` of `camera`, if the camera occurs in the corpus.
    pub fn camera_images(&self, camera: &str) -> Option<usize> {
        self.per_camera_images.get(camera).copied()
    }

    pub fn cameras(&self) -> impl Iterator<Item = (&str, usize)> {
        self.per_camera_images.iter().map(|(c, &n)| (c.as_str(), n))
    }

    /// Number of images containing word `j` (`n_j`).
    pub fn doc_count(&self, j: usize) -> Result<usize> {
        self.check(j)?;
        Ok(self.doc_count[j])
    }

    /// Number of `camera`'s images containing word `j`.
    pub fn camera_doc_count(&self, j: usize, camera: &str) -> Result<usize> {
        self.check(j)?;
        Ok(self.per_camera_doc_count[j]
            .get(camera)
            .copied()
            .unwrap_or(0))
    }

    /// Empirical document frequency `f_j = n_j / N`.
    pub fn document_frequency(&self, j: usize) -> Result<f64> {
        self.check(j)?;
        Ok(self.doc_count[j] as f64 / self.total_images as f64)
    }

    /// Keeps words whose document frequency is at least `cutoff` (inclusive).
    /// Image totals are unchanged.
    pub fn frequency_filter(&self, cutoff: f64) -> Result<Vocabulary> {
        if !(0.0..=1.0).contains(&cutoff) {
            return Err(CorpusError::InvalidCutoff(cutoff));
        }
        let n = self.total_images as f64;
        let keep: Vec<usize> = (0..self.len())
            .filter(|&j| self.doc_count[j] as f64 / n >= cutoff)
            .collect();
        if keep.is_empty() {
            return Err(CorpusError::AllWordsFiltered(cutoff));
        }
        Ok(Vocabulary::assemble(
            keep.iter().map(|&j| self.words[j].clone()).collect(),
            keep.iter().map(|&j| self.doc_count[j]).collect(),
            keep.iter()
                .map(|&j| self.per_camera_doc_count[j].clone())
                .collect(),
            self.total_images,
            self.per_camera_images.clone(),
        ))
    }

    /// SHA-256 over the rendered words, newline separated, as lowercase hex.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.rendered().as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Writes `index,service,text,n_j,f_j` with 1-based indices.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["index", "service", "text", "n_j", "f_j"])?;
        for (j, word) in self.words.iter().enumerate() {
            csv.write_record([
                (j + 1).to_string(),
                word.service.to_string(),
                word.text.clone(),
                self.doc_count[j].to_string(),
                self.document_frequency(j)?.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }

    fn check(&self, j: usize) -> Result<()> {
        if j < self.len() {
            Ok(())
        } else {
            Err(CorpusError::IndexOutOfRange {
                index: j,
                size: self.len(),
            })
        }
    }
}

use std::io::Write;

use crate::corpus::Vocabulary;

use super::{LdaError, Result, TopicModel};

#[derive(Clone, Debug, PartialEq)]
pub struct TopicEntry {
    /// 0-based topic index.
    pub topic: usize,
    pub name: Option<String>,
    /// `(word index, probability)` in non-increasing probability.
    pub labels: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicReport {
    pub topics: Vec<TopicEntry>,
}

/// The `n` most probable labels of every topic, ties by ascending index.
/// `n` is capped at the vocabulary size.
pub fn top_labels(model: &TopicModel, n: usize) -> TopicReport {
    let n = n.min(model.n_words());
    let topics = model
        .phi
        .iter_rows()
        .enumerate()
        .map(|(z, row)| {
            let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.truncate(n);
            TopicEntry {
                topic: z,
                name: None,
                labels: ranked,
            }
        })
        .collect();
    TopicReport { topics }
}

impl TopicReport {
    /// Attaches names to topics by 0-based index.
    pub fn with_names<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = (usize, S)>,
        S: Into<String>,
    {
        for (z, name) in names {
            if let Some(entry) = self.topics.get_mut(z) {
                entry.name = Some(name.into());
            }
        }
        self
    }

    /// Writes `topic,rank,service,text,probability`, topics and ranks 1-based.
    pub fn write_csv<W: Write>(&self, vocab: &Vocabulary, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["topic", "rank", "service", "text", "probability"])?;
        for entry in &self.topics {
            for (rank, &(j, p)) in entry.labels.iter().enumerate() {
                let word = vocab.word(j).map_err(|_| {
                    LdaError::VocabularyMismatch(format!("label index {j} not in vocabulary"))
                })?;
                csv.write_record([
                    (entry.topic + 1).to_string(),
                    (rank + 1).to_string(),
                    word.service.to_string(),
                    word.text.clone(),
                    p.to_string(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    }
}

//! Corpus size and class balance.

use serde::Serialize;

use crate::preprocess::{Document, Label};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub size: usize,
    pub neutral: usize,
    pub offensive: usize,
    /// Offensive fraction in [0, 1].
    pub negativity_ratio: f64,
}

impl CorpusStats {
    pub fn from_counts(neutral: usize, offensive: usize) -> Self {
        let size = neutral + offensive;
        Self {
            size,
            neutral,
            offensive,
            negativity_ratio: if size == 0 { 0.0 } else { offensive as f64 / size as f64 },
        }
    }

    /// The ratio as a percentage with two decimals, e.g. `15.71%`.
    pub fn negativity_percent(&self) -> String {
        format!("{:.2}%", 100.0 * self.negativity_ratio)
    }
}

pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let offensive = docs.iter().filter(|d| d.label == Label::Offensive).count();
    CorpusStats::from_counts(docs.len() - offensive, offensive)
}

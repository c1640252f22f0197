//! Class-level emoji distributions and the correct/incorrect breakdown.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::layers::EMOJI_DIM;
use crate::preprocess::emotion::top5_indices;
use crate::preprocess::{Document, Label};

fn probs(doc: &Document) -> Result<&[f64]> {
    doc.emoji_probs
        .as_deref()
        .ok_or_else(|| Error::invalid(format!("document `{}` has no emoji probabilities", doc.id)))
}

fn mean<'a>(vectors: impl Iterator<Item = &'a [f64]>) -> (Vec<f64>, usize) {
    let mut sum = vec![0.0; EMOJI_DIM];
    let mut n = 0;
    for v in vectors {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    (sum, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEmojiDistribution {
    /// Emoji indices the vectors cover, in order.
    pub indices: Vec<usize>,
    pub neutral: Vec<f64>,
    pub offensive: Vec<f64>,
}

impl ClassEmojiDistribution {
    pub fn class(&self, label: Label) -> &[f64] {
        match label {
            Label::Neutral => &self.neutral,
            Label::Offensive => &self.offensive,
        }
    }

    /// `emoji_index,class,mean_probability` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("emoji_index,class,mean_probability\n");
        for label in Label::ALL {
            for (i, p) in self.indices.iter().zip(self.class(label)) {
                writeln!(out, "{i},{label},{p}").expect("write to string");
            }
        }
        out
    }
}

/// Mean emoji probability vector per class, optionally restricted to
/// `subset` indices.
pub fn class_emoji_distribution(docs: &[Document], subset: Option<&[usize]>) -> Result<ClassEmojiDistribution> {
    let indices: Vec<usize> = subset.map_or_else(|| (0..EMOJI_DIM).collect(), <[usize]>::to_vec);
    if let Some(&bad) = indices.iter().find(|&&i| i >= EMOJI_DIM) {
        return Err(Error::invalid(format!("emoji index {bad} out of range")));
    }
    let mut per_class = Vec::with_capacity(2);
    for label in Label::ALL {
        let vs = docs
            .iter()
            .filter(|d| d.label == label)
            .map(probs)
            .collect::<Result<Vec<_>>>()?;
        if vs.is_empty() {
            return Err(Error::invalid(format!("no {label} documents")));
        }
        let (m, _) = mean(vs.into_iter());
        per_class.push(indices.iter().map(|&i| m[i]).collect::<Vec<f64>>());
    }
    let offensive = per_class.pop().expect("two classes");
    let neutral = per_class.pop().expect("two classes");
    Ok(ClassEmojiDistribution {
        indices,
        neutral,
        offensive,
    })
}

/// `p` with everything but its five largest entries zeroed.
pub fn keep_top5(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for i in top5_indices(p) {
        out[i] = p[i];
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmojiCell {
    pub mean: Vec<f64>,
    pub count: usize,
    /// No documents fell in this cell; `mean` is all zeros.
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEmojiAnalysis {
    pub correct_neutral: EmojiCell,
    pub correct_offensive: EmojiCell,
    pub incorrect_neutral: EmojiCell,
    pub incorrect_offensive: EmojiCell,
}

/// Averages top-5-filtered emoji vectors within each (correct?, gold class)
/// cell.
pub fn error_emoji_analysis(docs: &[Document], predicted: &[Label]) -> Result<ErrorEmojiAnalysis> {
    if docs.len() != predicted.len() {
        return Err(Error::invalid(format!("{} documents, {} predictions", docs.len(), predicted.len())));
    }
    let filtered = docs.iter().map(|d| probs(d).map(keep_top5)).collect::<Result<Vec<_>>>()?;
    let cell = |correct: bool, label: Label| {
        let members = docs
            .iter()
            .zip(predicted)
            .zip(&filtered)
            .filter(|((d, p), _)| d.label == label && (**p == d.label) == correct)
            .map(|(_, f)| f.as_slice());
        let (mean, count) = mean(members);
        EmojiCell {
            mean,
            count,
            empty: count == 0,
        }
    };
    Ok(ErrorEmojiAnalysis {
        correct_neutral: cell(true, Label::Neutral),
        correct_offensive: cell(true, Label::Offensive),
        incorrect_neutral: cell(false, Label::Neutral),
        incorrect_offensive: cell(false, Label::Offensive),
    })
}

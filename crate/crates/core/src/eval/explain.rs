//! Attention weights over the real tokens of a document.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::preprocess::emotion::top5_indices;
use crate::preprocess::{Document, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionExplanation {
    pub id: String,
    pub tokens: Vec<String>,
    pub weights: Vec<f64>,
    /// `(emoji index, probability)`, most probable first.
    pub top_emojis: Vec<(usize, f64)>,
    pub predicted: Label,
    pub gold: Label,
}

pub fn explain(model: &Model, doc: &Document) -> Result<AttentionExplanation> {
    let cfg = model.config();
    if !cfg.variant.has_bilstm() {
        return Err(Error::invalid(format!("{} has no attention to explain", cfg.variant)));
    }
    let input = model.prepare(doc)?;
    let out = model.infer(&input)?;
    let alpha = out.attention.as_ref().expect("attention variant");

    let kept = doc.tokens.len().min(cfg.maxlen);
    let tokens: Vec<String> = match cfg.truncation {
        crate::preprocess::Truncation::KeepFirst => doc.tokens[..kept].to_vec(),
        crate::preprocess::Truncation::KeepLast => doc.tokens[doc.tokens.len() - kept..].to_vec(),
    };
    if tokens.is_empty() {
        return Err(Error::invalid(format!("document `{}` has no tokens", doc.id)));
    }
    let weights = alpha[cfg.maxlen - kept..].to_vec();

    let emoji = doc
        .emoji_probs
        .as_ref()
        .or(doc.emoji_binary.as_ref())
        .ok_or_else(|| Error::invalid(format!("document `{}` has no emoji vector", doc.id)))?;
    let top_emojis = top5_indices(emoji).into_iter().map(|i| (i, emoji[i])).collect();

    Ok(AttentionExplanation {
        id: doc.id.clone(),
        tokens,
        weights,
        top_emojis,
        predicted: out.label(),
        gold: doc.label,
    })
}

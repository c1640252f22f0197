//! Emotion (emoji-distribution) vectors: sentence averaging, top-5
//! binarization and a deterministic stand-in encoder.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::layers::EMOJI_DIM;
use crate::preprocess::text::{normalize_and_tokenize, split_sentences};

/// Number of emojis kept by [`binarize_top5`].
pub const TOP_K: usize = 5;

const BASE: f64 = 1.0;
const LEXICON_WEIGHT: f64 = 4.0;
const HASH_WEIGHT: f64 = 0.5;

/// Keyword → emoji index table used by [`stub_emotion_encoder`].
pub const LEXICON: &[(&str, usize)] = &[
    ("lol", 0),
    ("haha", 0),
    ("funny", 0),
    ("sad", 3),
    ("cry", 3),
    ("love", 8),
    ("heart", 8),
    ("cute", 10),
    ("happy", 16),
    ("great", 16),
    ("thanks", 16),
    ("nice", 17),
    ("cool", 21),
    ("angry", 32),
    ("hate", 32),
    ("mad", 32),
    ("stupid", 37),
    ("idiot", 37),
    ("dumb", 37),
    ("ugly", 39),
    ("gross", 39),
    ("kill", 43),
    ("die", 43),
    ("wow", 46),
    ("omg", 46),
    ("shut", 55),
    ("ok", 62),
];

/// Componentwise mean of per-sentence vectors.
pub fn average_emoji(vectors: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(Error::Empty("no emoji vectors to average"))?;
    let n = first.len();
    let mut sum = vec![0.0; n];
    for v in vectors {
        if v.len() != n {
            return Err(Error::invalid(format!("emoji vectors of lengths {n} and {}", v.len())));
        }
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    let k = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / k).collect())
}

/// Indices of the five largest entries, ties to the lowest index.
pub fn top5_indices(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    idx.truncate(TOP_K);
    idx
}

/// 1 at the five most probable emojis, 0 elsewhere.
pub fn binarize_top5(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for i in top5_indices(p) {
        out[i] = 1.0;
    }
    out
}

fn hash_index(token: &str) -> usize {
    let digest = Sha256::digest(token.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(bytes) % EMOJI_DIM as u64) as usize
}

/// Deterministic stand-in for a learned emoji predictor: every index starts
/// at a common base, lexicon words add a large weight to their emoji and
/// other tokens a small weight to a hashed slot; the result is normalized.
pub fn stub_emotion_encoder(text: &str) -> Vec<f64> {
    let mut scores = vec![BASE; EMOJI_DIM];
    for token in normalize_and_tokenize(text) {
        match LEXICON.iter().find(|(w, _)| *w == token) {
            Some(&(_, k)) => scores[k] += LEXICON_WEIGHT,
            None => scores[hash_index(&token)] += HASH_WEIGHT,
        }
    }
    let total: f64 = scores.iter().sum();
    scores.into_iter().map(|s| s / total).collect()
}

/// Per-document vector: the encoder applied to each sentence, averaged.
pub fn document_emotion(text: &str, encoder: impl Fn(&str) -> Vec<f64>) -> Vec<f64> {
    let sentences = split_sentences(text);
    if sentences.is_empty() {
        return encoder("");
    }
    let vs: Vec<Vec<f64>> = sentences.iter().map(|s| encoder(s)).collect();
    average_emoji(&vs).expect("at least one sentence")
}

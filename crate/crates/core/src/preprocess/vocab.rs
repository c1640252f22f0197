//! Vocabulary, GloVe loading and embedding-table construction.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::text::{pad_ids, Truncation};
use crate::preprocess::Document;
use crate::tensor::Tensor;

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Half-width of the uniform range used for tokens missing from GloVe.
pub const OOV_RANGE: f64 = 0.05;

/// Token ↔ id map. Id 0 is padding, id 1 the unknown token, and training
/// tokens follow contiguously in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn empty() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        v.push(PAD);
        v.push(UNK);
        v
    }

    fn push(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// Number of ids including padding.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Ids of `tokens`, truncated and left-padded to `maxlen`.
    pub fn encode(&self, tokens: &[String], maxlen: usize, truncation: Truncation) -> Vec<usize> {
        let ids: Vec<usize> = tokens.iter().map(|t| self.id(t)).collect();
        pad_ids(&ids, maxlen, truncation)
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[PAD_ID] != PAD || tokens[UNK_ID] != UNK {
            return Err(Error::invalid("vocabulary must start with <pad>, <unk>"));
        }
        let mut v = Self::empty();
        for t in &tokens[2..] {
            if v.contains(t) {
                return Err(Error::invalid(format!("duplicate vocabulary token `{t}`")));
            }
            v.push(t);
        }
        Ok(v)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Pretrained word vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Glove {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
    /// Lines skipped for having the wrong number of values.
    pub skipped: usize,
}

impl Glove {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    /// Parses GloVe text: a token and `dim` numbers per line.
    pub fn parse(text: &str, dim: usize, path: &Path) -> Result<Self> {
        let mut glove = Self::new(dim);
        let mut lines = 0;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            lines += 1;
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line");
            let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            match values {
                Ok(v) if v.len() == dim => {
                    glove.vectors.insert(word.to_string(), v);
                }
                Ok(v) => {
                    log::warn!("{}:{}: expected {dim} values, found {}", path.display(), n + 1, v.len());
                    glove.skipped += 1;
                }
                Err(e) => {
                    log::warn!("{}:{}: {e}", path.display(), n + 1);
                    glove.skipped += 1;
                }
            }
        }
        if glove.skipped * 2 > lines {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("{} of {lines} lines do not have {dim} values", glove.skipped),
            });
        }
        Ok(glove)
    }

    pub fn load(path: impl AsRef<Path>, dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, dim, path)
    }

    /// GloVe text with tokens sorted, for reproducible files.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            for v in &self.vectors[w] {
                write!(out, " {v}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Seeded uniform row for a token missing from GloVe; depends only on
/// `(seed, token)`.
pub fn oov_row(seed: u64, token: &str, dim: usize) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(token.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    (0..dim).map(|_| rng.random_range(-OOV_RANGE..=OOV_RANGE)).collect()
}

/// Builds the vocabulary from the training documents' tokens and the
/// matching `[V, d]` embedding table (row 0 zero).
pub fn build_vocab(train: &[Document], glove: &Glove, seed: u64) -> Result<(Vocabulary, Tensor)> {
    if train.is_empty() {
        return Err(Error::Empty("cannot build a vocabulary from an empty corpus"));
    }
    if glove.dim == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    let mut vocab = Vocabulary::empty();
    for doc in train {
        for t in &doc.tokens {
            vocab.push(t);
        }
    }
    let d = glove.dim;
    let mut table = Tensor::zeros(&[vocab.len(), d]);
    for (id, token) in vocab.tokens.iter().enumerate().skip(1) {
        let row = match glove.vectors.get(token) {
            Some(v) => v.clone(),
            None => oov_row(seed, token, d),
        };
        table.row_mut(id).copy_from_slice(&row);
    }
    Ok((vocab, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::Label;

    fn doc(text: &str) -> Document {
        Document::new("x", text, Label::Neutral)
    }

    #[test]
    fn parse_skips_malformed_lines() {
        let g = Glove::parse("the 0.1 0.2\nbad 0.3\nof 1 2\n", 2, Path::new("g.txt")).unwrap();
        assert_eq!(g.vectors["the"], vec![0.1, 0.2]);
        assert_eq!(g.skipped, 1);
        assert!(Glove::parse("a 1\nb 2\nc 1 2\n", 2, Path::new("g.txt")).is_err());
    }

    #[test]
    fn glove_round_trip() {
        let mut g = Glove::new(3);
        g.vectors.insert("a".into(), vec![0.1, -2.5, 1e-7]);
        g.vectors.insert("b".into(), vec![1.0 / 3.0, 0.0, 7.0]);
        g.vectors.insert("c".into(), vec![-0.0625, 4.25, 1e300]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        g.save(&path).unwrap();
        assert_eq!(Glove::load(&path, 3).unwrap(), g);
    }

    #[test]
    fn vocab_and_table() {
        let mut g = Glove::new(2);
        g.vectors.insert("hello".into(), vec![0.5, -0.5]);
        let docs = [doc("hello world"), doc("world again")];
        let (v, t) = build_vocab(&docs, &g, 9).unwrap();
        assert_eq!(v.tokens(), [PAD, UNK, "hello", "world", "again"]);
        assert_eq!(t.shape(), &[5, 2]);
        assert_eq!(t.row(0), [0.0, 0.0]);
        assert_eq!(t.row(2), [0.5, -0.5]);
        assert_eq!(v.id("nope"), UNK_ID);
        let (_, t2) = build_vocab(&docs, &g, 9).unwrap();
        assert_eq!(t, t2);
        let (_, t3) = build_vocab(&docs, &g, 10).unwrap();
        assert_ne!(t.row(3), t3.row(3));
        assert!(build_vocab(&[], &g, 9).is_err());
    }

    #[test]
    fn oov_rows_in_range() {
        for i in 0..1000 {
            let row = oov_row(3, &format!("tok{i}"), 8);
            assert!(row.iter().all(|x| x.abs() <= OOV_RANGE));
        }
    }

    #[test]
    fn serde_round_trip() {
        let (v, _) = build_vocab(&[doc("a b c")], &Glove::new(1), 0).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(serde_json::from_str::<Vocabulary>(&json).unwrap(), v);
        assert!(serde_json::from_str::<Vocabulary>(r#"["<pad>","<unk>","a","a"]"#).is_err());
    }
}

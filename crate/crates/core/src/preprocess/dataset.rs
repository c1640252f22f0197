//! Line-delimited JSON datasets and emotion sidecars.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::layers::EMOJI_DIM;
use crate::preprocess::emotion::binarize_top5;
use crate::preprocess::text::{normalize_and_tokenize, pad_ids, Truncation, MAXLEN};
use crate::preprocess::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Neutral,
    Offensive,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Neutral, Label::Offensive];

    pub fn index(self) -> usize {
        match self {
            Label::Neutral => 0,
            Label::Offensive => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Label::Neutral),
            1 => Ok(Label::Offensive),
            _ => Err(Error::invalid(format!("label index {i} outside {{0, 1}}"))),
        }
    }

    fn from_json(v: &Value) -> std::result::Result<Self, String> {
        match v {
            Value::Number(n) => match n.as_u64() {
                Some(0) => Ok(Label::Neutral),
                Some(1) => Ok(Label::Offensive),
                _ => Err(format!("label {n} is not 0 or 1")),
            },
            Value::String(s) => match s.to_lowercase().as_str() {
                "neutral" | "0" => Ok(Label::Neutral),
                "offensive" | "1" => Ok(Label::Offensive),
                _ => Err(format!("unknown label `{s}`")),
            },
            other => Err(format!("label must be 0/1 or a class name, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Neutral => "neutral",
            Label::Offensive => "offensive",
        })
    }
}

/// One labelled post.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub tokens: Vec<String>,
    /// Filled by [`Document::encode`]; empty until then.
    pub token_ids: Vec<usize>,
    pub emoji_probs: Option<Vec<f64>>,
    pub emoji_binary: Option<Vec<f64>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        let text = text.into();
        Self {
            id: id.into(),
            tokens: normalize_and_tokenize(&text),
            text,
            label,
            token_ids: Vec::new(),
            emoji_probs: None,
            emoji_binary: None,
        }
    }

    /// Sets the emotion probabilities and their top-5 binarization.
    pub fn set_emoji(&mut self, probs: Vec<f64>) -> Result<()> {
        validate_emoji(&probs).map_err(Error::InvalidArgument)?;
        self.emoji_binary = Some(binarize_top5(&probs));
        self.emoji_probs = Some(probs);
        Ok(())
    }

    pub fn with_emoji(mut self, probs: Vec<f64>) -> Result<Self> {
        self.set_emoji(probs)?;
        Ok(self)
    }

    pub fn encode(&mut self, vocab: &Vocabulary, maxlen: usize, truncation: Truncation) {
        self.token_ids = vocab.encode(&self.tokens, maxlen, truncation);
    }

    /// Whether the token sequence was cut to fit `maxlen`.
    pub fn is_truncated(&self, maxlen: usize) -> bool {
        self.tokens.len() > maxlen
    }
}

/// Ids of `tokens` left-padded to the default length.
pub fn encode(tokens: &[String], vocab: &Vocabulary) -> Vec<usize> {
    pad_ids(
        &tokens.iter().map(|t| vocab.id(t)).collect::<Vec<_>>(),
        MAXLEN,
        Truncation::KeepFirst,
    )
}

fn validate_emoji(v: &[f64]) -> std::result::Result<(), String> {
    if v.len() != EMOJI_DIM {
        return Err(format!("emoji vector has {} entries, expected {EMOJI_DIM}", v.len()));
    }
    if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(format!("emoji probability {x} outside [0, 1]"));
    }
    Ok(())
}

fn parse_emoji(v: &Value) -> std::result::Result<Vec<f64>, String> {
    let arr = v.as_array().ok_or("emoji must be an array of numbers")?;
    let floats = arr
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| format!("non-numeric emoji entry {x}")))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    validate_emoji(&floats)?;
    Ok(floats)
}

fn str_field<'a>(obj: &'a serde_json::Map<String, Value>, key: &str) -> std::result::Result<&'a str, String> {
    obj.get(key)
        .ok_or_else(|| format!("missing field `{key}`"))?
        .as_str()
        .ok_or_else(|| format!("field `{key}` must be a string"))
}

fn parse_record(line: &str) -> std::result::Result<Document, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record must be an object")?;
    let id = str_field(obj, "id")?;
    let text = str_field(obj, "text")?;
    let label = Label::from_json(obj.get("label").ok_or("missing field `label`")?)?;
    let mut doc = Document::new(id, text, label);
    if let Some(e) = obj.get("emoji").filter(|e| !e.is_null()) {
        doc.set_emoji(parse_emoji(e)?).map_err(|e| e.to_string())?;
    }
    Ok(doc)
}

/// Parses dataset text; `path` is only used in error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(line).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

#[derive(Serialize)]
struct Record<'a> {
    id: &'a str,
    text: &'a str,
    label: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    emoji: Option<&'a [f64]>,
}

/// Dataset text in the format read by [`parse_dataset`].
pub fn dataset_to_string(docs: &[Document]) -> String {
    let mut out = String::new();
    for d in docs {
        let rec = Record {
            id: &d.id,
            text: &d.text,
            label: d.label.index(),
            emoji: d.emoji_probs.as_deref(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("serializable record"));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_string(docs)).map_err(|e| Error::io(path, e))
}

/// Reads a sidecar of `{"id": .., "emoji": [64 floats]}` lines.
pub fn load_sidecar(path: impl AsRef<Path>) -> Result<HashMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = (|| -> std::result::Result<(String, Vec<f64>), String> {
            let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let obj = value.as_object().ok_or("record must be an object")?;
            let id = str_field(obj, "id")?.to_string();
            let emoji = parse_emoji(obj.get("emoji").ok_or("missing field `emoji`")?)?;
            Ok((id, emoji))
        })();
        let (id, emoji) = parsed.map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        })?;
        out.insert(id, emoji);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Document>> {
        parse_dataset(text, Path::new("d.jsonl"))
    }

    fn emoji_json(n: usize) -> String {
        serde_json::to_string(&vec![1.0 / 64.0; n]).unwrap()
    }

    #[test]
    fn labels_and_optional_emoji() {
        let text = format!(
            "{{\"id\":\"a\",\"text\":\"Hi @x\",\"label\":\"offensive\"}}\n\n{{\"id\":\"b\",\"text\":\"ok\",\"label\":0,\"emoji\":{}}}\n",
            emoji_json(64)
        );
        let docs = parse(&text).unwrap();
        assert_eq!(docs[0].label, Label::Offensive);
        assert_eq!(docs[0].tokens, ["hi", "@username"]);
        assert!(docs[0].emoji_probs.is_none());
        assert_eq!(docs[1].label, Label::Neutral);
        assert_eq!(docs[1].emoji_binary.as_ref().unwrap().iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn rejections_name_the_line() {
        let text = format!(
            "{{\"id\":\"a\",\"text\":\"x\",\"label\":1}}\n{{\"id\":\"b\",\"text\":\"y\",\"label\":1,\"emoji\":{}}}\n",
            emoji_json(63)
        );
        let err = parse(&text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("63"));
        assert!(matches!(parse("{\"id\":\"a\",\"text\":\"x\",\"label\":2}"), Err(Error::Parse { line: 1, .. })));
        assert!(parse("not json").is_err());
    }

    #[test]
    fn round_trip() {
        let docs = vec![
            Document::new("1", "Hello \"world\"", Label::Neutral),
            Document::new("2", "you idiot", Label::Offensive).with_emoji(vec![0.5; 64]).unwrap(),
        ];
        assert_eq!(parse(&dataset_to_string(&docs)).unwrap(), docs);
    }
}

//! The model zoo: variant selection, the per-document encoder, the shared
//! classification head, and prediction.
//!
//! A document is encoded to one feature vector, laid out as
//! `[CNN features (|widths|·F) ; attention output (2H) ; emoji vector (64)]`
//! with absent parts omitted. Feature vectors of a batch are stacked and fed
//! to the head.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::layers::{
    attention, attention_pool, attention_scores, attention_weights, bilstm_forward, conv, conv_block_forward, dense,
    dense_head, embedding, embedding_forward, emoji_project, lstm, AttentionKind, HeadOutput, Mode, ParamSpec,
    EMOJI_DIM,
};
use crate::parallel::Exec;
use crate::params::ParameterSet;
use crate::preprocess::vocab::PAD_ID;
use crate::preprocess::{Document, Label, Truncation, Vocabulary, MAXLEN};
use crate::rng::seeded;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    EmojiOnly,
    Cnn,
    CnnEmoji,
    BilstmRa,
    BilstmEa,
    CnnBilstmRa,
    CnnBilstmRaEmoji,
    CnnBilstmEa,
    CnnBilstmEaEmoji,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::EmojiOnly,
        Variant::Cnn,
        Variant::CnnEmoji,
        Variant::BilstmRa,
        Variant::BilstmEa,
        Variant::CnnBilstmRa,
        Variant::CnnBilstmRaEmoji,
        Variant::CnnBilstmEa,
        Variant::CnnBilstmEaEmoji,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::EmojiOnly => "EMOJI_ONLY",
            Variant::Cnn => "CNN",
            Variant::CnnEmoji => "CNN_EMOJI",
            Variant::BilstmRa => "BILSTM_RA",
            Variant::BilstmEa => "BILSTM_EA",
            Variant::CnnBilstmRa => "CNN_BILSTM_RA",
            Variant::CnnBilstmRaEmoji => "CNN_BILSTM_RA_EMOJI",
            Variant::CnnBilstmEa => "CNN_BILSTM_EA",
            Variant::CnnBilstmEaEmoji => "CNN_BILSTM_EA_EMOJI",
        }
    }

    pub fn has_cnn(self) -> bool {
        matches!(
            self,
            Variant::Cnn
                | Variant::CnnEmoji
                | Variant::CnnBilstmRa
                | Variant::CnnBilstmRaEmoji
                | Variant::CnnBilstmEa
                | Variant::CnnBilstmEaEmoji
        )
    }

    pub fn has_bilstm(self) -> bool {
        self.attention().is_some()
    }

    pub fn attention(self) -> Option<AttentionKind> {
        match self {
            Variant::BilstmRa | Variant::CnnBilstmRa | Variant::CnnBilstmRaEmoji => Some(AttentionKind::Regular),
            Variant::BilstmEa | Variant::CnnBilstmEa | Variant::CnnBilstmEaEmoji => Some(AttentionKind::EmotionAware),
            _ => None,
        }
    }

    /// Whether the emoji vector joins the head input by default.
    pub fn concats_emoji(self) -> bool {
        matches!(
            self,
            Variant::EmojiOnly | Variant::CnnEmoji | Variant::CnnBilstmRaEmoji | Variant::CnnBilstmEaEmoji
        )
    }

    fn uses_text(self) -> bool {
        self != Variant::EmojiOnly
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_uppercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == upper)
            .ok_or_else(|| Error::invalid(format!("unknown variant `{s}`")))
    }
}

/// Which form of the emoji vector is concatenated to the head input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmojiSource {
    #[default]
    Binary,
    Probabilities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub attention_dim: usize,
    pub filter_widths: Vec<usize>,
    pub filters: usize,
    pub dense_units: usize,
    pub dropout: f64,
    pub maxlen: usize,
    pub truncation: Truncation,
    pub seed: u64,
    pub finetune_embeddings: bool,
    /// Overrides [`Variant::concats_emoji`].
    pub concat_emoji: Option<bool>,
    pub emoji_source: EmojiSource,
    /// Feed the attention the projected emoji vector (`2H` wide) rather than
    /// the raw 64-dim one.
    pub project_emotion: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::CnnBilstmEaEmoji,
            embed_dim: 200,
            lstm_hidden: 100,
            attention_dim: 100,
            filter_widths: vec![2, 3, 4, 5],
            filters: 100,
            dense_units: 100,
            dropout: 0.5,
            maxlen: MAXLEN,
            truncation: Truncation::KeepFirst,
            seed: 0,
            finetune_embeddings: false,
            concat_emoji: None,
            emoji_source: EmojiSource::Binary,
            project_emotion: true,
        }
    }
}

impl ModelConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    /// Very small dimensions for gradient checking.
    pub fn tiny(variant: Variant) -> Self {
        Self {
            variant,
            embed_dim: 4,
            lstm_hidden: 3,
            attention_dim: 3,
            filters: 2,
            dense_units: 3,
            maxlen: 6,
            dropout: 0.0,
            ..Self::default()
        }
    }

    pub fn concat_emoji(&self) -> bool {
        self.concat_emoji.unwrap_or(self.variant.concats_emoji())
    }

    pub fn needs_emoji(&self) -> bool {
        self.concat_emoji() || self.variant.attention() == Some(AttentionKind::EmotionAware)
    }

    pub fn cnn_width(&self) -> usize {
        self.filter_widths.len() * self.filters
    }

    pub fn state_dim(&self) -> usize {
        2 * self.lstm_hidden
    }

    /// Width of the head input.
    pub fn feature_width(&self) -> usize {
        let v = self.variant;
        usize::from(v.has_cnn()) * self.cnn_width()
            + usize::from(v.has_bilstm()) * self.state_dim()
            + usize::from(self.concat_emoji()) * EMOJI_DIM
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("embed_dim", self.embed_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("attention_dim", self.attention_dim),
            ("filters", self.filters),
            ("dense_units", self.dense_units),
            ("maxlen", self.maxlen),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("{name} must be positive")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.variant.has_cnn() {
            let widest = self.filter_widths.iter().copied().max().unwrap_or(0);
            if self.filter_widths.contains(&0) || widest == 0 {
                return Err(Error::invalid("filter widths must be positive and non-empty"));
            }
            if widest > self.maxlen {
                return Err(Error::SequenceTooShort {
                    len: self.maxlen,
                    width: widest,
                });
            }
        }
        if self.feature_width() == 0 {
            return Err(Error::invalid(format!("{} with these options has no features", self.variant)));
        }
        Ok(())
    }

    /// Every parameter the configuration uses, in allocation order.
    pub fn param_specs(&self, embeddings: Option<Tensor>) -> Vec<ParamSpec> {
        let v = self.variant;
        let mut specs = Vec::new();
        if let Some(table) = embeddings {
            specs.extend(embedding::param_specs(table, self.finetune_embeddings));
        }
        if v.has_cnn() {
            specs.extend(conv::param_specs(&self.filter_widths, self.embed_dim, self.filters));
        }
        if let Some(kind) = v.attention() {
            specs.extend(lstm::param_specs(self.embed_dim, self.lstm_hidden));
            let emotion_dim = if self.project_emotion { self.state_dim() } else { EMOJI_DIM };
            if kind == AttentionKind::EmotionAware && self.project_emotion {
                specs.extend(attention::projection_specs(self.state_dim()));
            }
            specs.extend(attention::param_specs(kind, self.state_dim(), self.attention_dim, emotion_dim));
        }
        specs.extend(dense::param_specs(self.feature_width(), self.dense_units));
        specs
    }

    /// Encodes one document's feature vector `[feature_width]` into `g`.
    /// The returned attention node is `[maxlen]` and zero on padding.
    pub fn document_features<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<'_>,
        input: &DocInput,
        mode: Mode,
        rng: &mut R,
    ) -> Result<DocFeatures> {
        let v = self.variant;
        let mut parts = Vec::with_capacity(3);
        let mut alpha = None;
        if v.uses_text() {
            let emb = embedding_forward(g, &input.ids)?;
            if v.has_cnn() {
                parts.push(conv_block_forward(g, emb, &self.filter_widths, self.dropout, mode, rng)?);
            }
            if let Some(kind) = v.attention() {
                let hs = bilstm_forward(g, emb)?;
                let emotion = match kind {
                    AttentionKind::Regular => None,
                    AttentionKind::EmotionAware => {
                        let e = input.emotion.as_ref().ok_or_else(|| missing_emoji(v))?;
                        let e = g.constant(Tensor::vector(e.clone()));
                        Some(if self.project_emotion { emoji_project(g, e)? } else { e })
                    }
                };
                let scores = attention_scores(g, hs, emotion)?;
                let real = input.real_mask();
                // An empty post has nothing to attend to; spread attention
                // over the padding instead of failing.
                let mask = if real.iter().any(|&r| r) { real } else { vec![true; real.len()] };
                let a = attention_weights(g, scores, &mask)?;
                parts.push(attention_pool(g, a, hs)?);
                alpha = Some(a);
            }
        }
        if self.concat_emoji() {
            let e = input.concat.as_ref().ok_or_else(|| missing_emoji(v))?;
            parts.push(g.constant(Tensor::vector(e.clone())));
        }
        let features = g.concat(&parts)?;
        Ok(DocFeatures { features, alpha })
    }

    /// The head over stacked features `[B, feature_width]`.
    pub fn head<R: Rng + ?Sized>(&self, g: &mut Graph<'_>, features: Var, mode: Mode, rng: &mut R) -> Result<HeadOutput> {
        dense_head(g, features, self.dropout, mode, rng)
    }

    /// Mean cross-entropy of a batch built as one graph. Used for gradient
    /// checks; training uses the equivalent two-stage route in
    /// [`crate::train`].
    pub fn batch_loss<R: Rng + ?Sized>(
        &self,
        g: &mut Graph<'_>,
        inputs: &[DocInput],
        labels: &[Label],
        mode: Mode,
        rng: &mut R,
    ) -> Result<Var> {
        let rows = inputs
            .iter()
            .map(|x| Ok(self.document_features(g, x, mode, rng)?.features))
            .collect::<Result<Vec<_>>>()?;
        let x = g.stack_rows(&rows)?;
        let out = self.head(g, x, mode, rng)?;
        let labels: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        g.cross_entropy_logits(out.logits, &labels)
    }
}

fn missing_emoji(v: Variant) -> Error {
    Error::invalid(format!("{v} needs an emoji vector for every document"))
}

/// Model-ready view of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocInput {
    /// Exactly `maxlen` ids, left-padded with 0.
    pub ids: Vec<usize>,
    /// Binary emoji vector for emotion-aware attention.
    pub emotion: Option<Vec<f64>>,
    /// Emoji vector appended to the head input.
    pub concat: Option<Vec<f64>>,
}

impl DocInput {
    pub fn real_mask(&self) -> Vec<bool> {
        self.ids.iter().map(|&i| i != PAD_ID).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DocFeatures {
    pub features: Var,
    pub alpha: Option<Var>,
}

/// Inference result for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocOutput {
    pub logits: [f64; 2],
    /// `[P(neutral), P(offensive)]`.
    pub probs: [f64; 2],
    /// Attention weights over the `maxlen` positions, if the variant attends.
    pub attention: Option<Vec<f64>>,
}

impl DocOutput {
    /// Offensive only when strictly more probable.
    pub fn label(&self) -> Label {
        label_from_probs(self.probs)
    }
}

pub fn label_from_probs(probs: [f64; 2]) -> Label {
    if probs[1] > probs[0] {
        Label::Offensive
    } else {
        Label::Neutral
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predictions {
    pub labels: Vec<Label>,
    /// Offensive-class probability per document.
    pub scores: Vec<f64>,
}

/// A configured network with its parameters and vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    params: ParameterSet,
    vocab: Vocabulary,
}

impl Model {
    /// Allocates and seeds the parameters `config` calls for. `embeddings`
    /// must be `[vocab.len(), embed_dim]`.
    pub fn build(config: ModelConfig, embeddings: Tensor, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        if embeddings.shape() != [vocab.len(), config.embed_dim] {
            return Err(Error::Shape {
                op: "embedding table",
                left: embeddings.shape().to_vec(),
                right: vec![vocab.len(), config.embed_dim],
            });
        }
        let mut rng = seeded(config.seed);
        let table = config.variant.uses_text().then_some(embeddings);
        let mut params = ParameterSet::new();
        for spec in config.param_specs(table) {
            let value = spec.materialize(&mut rng);
            params.insert(spec.name, value, spec.trainable)?;
        }
        Ok(Self { config, params, vocab })
    }

    /// Reassembles a model from stored parts, checking the parameter
    /// inventory against the configuration.
    pub fn from_parts(config: ModelConfig, params: ParameterSet, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let table = config
            .variant
            .uses_text()
            .then(|| Tensor::zeros(&[vocab.len(), config.embed_dim]));
        let specs = config.param_specs(table);
        if specs.len() != params.len() {
            return Err(Error::Checkpoint(format!(
                "configuration needs {} parameters, found {}",
                specs.len(),
                params.len()
            )));
        }
        for spec in &specs {
            let t = params.get(&spec.name)?;
            if t.shape() != spec.shape.as_slice() {
                return Err(Error::Shape {
                    op: "stored parameter",
                    left: t.shape().to_vec(),
                    right: spec.shape.clone(),
                });
            }
        }
        Ok(Self { config, params, vocab })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet {
        &mut self.params
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn into_parts(self) -> (ModelConfig, ParameterSet, Vocabulary) {
        (self.config, self.params, self.vocab)
    }

    /// Encodes `doc` with this model's vocabulary and picks out the emoji
    /// vectors the variant consumes.
    pub fn prepare(&self, doc: &Document) -> Result<DocInput> {
        let cfg = &self.config;
        let ids = self.vocab.encode(&doc.tokens, cfg.maxlen, cfg.truncation);
        let need = |present: Option<&Vec<f64>>| -> Result<Vec<f64>> {
            present.cloned().ok_or_else(|| {
                Error::invalid(format!("document `{}`: {} needs an emoji vector", doc.id, cfg.variant))
            })
        };
        let emotion = match cfg.variant.attention() {
            Some(AttentionKind::EmotionAware) => Some(need(doc.emoji_binary.as_ref())?),
            _ => None,
        };
        let concat = if cfg.concat_emoji() {
            Some(match cfg.emoji_source {
                EmojiSource::Binary => need(doc.emoji_binary.as_ref())?,
                EmojiSource::Probabilities => need(doc.emoji_probs.as_ref())?,
            })
        } else {
            None
        };
        Ok(DocInput { ids, emotion, concat })
    }

    pub fn prepare_all(&self, docs: &[Document]) -> Result<Vec<DocInput>> {
        docs.iter().map(|d| self.prepare(d)).collect()
    }

    /// Inference on one prepared document. Batch norm uses the running
    /// statistics, so results do not depend on what else is in a batch.
    pub fn infer(&self, input: &DocInput) -> Result<DocOutput> {
        let mut g = Graph::with_params(&self.params);
        // Inference draws no random numbers; the generator is a formality.
        let mut rng = seeded(0);
        let f = self.config.document_features(&mut g, input, Mode::Infer, &mut rng)?;
        let width = g.shape(f.features)[0];
        let x = g.reshape(f.features, &[1, width])?;
        let out = self.config.head(&mut g, x, Mode::Infer, &mut rng)?;
        let p = g.softmax_rows(out.logits)?;
        let pv = g.value(p).data();
        let lv = g.value(out.logits).data();
        Ok(DocOutput {
            logits: [lv[0], lv[1]],
            probs: [pv[0], pv[1]],
            attention: f.alpha.map(|a| g.value(a).data().to_vec()),
        })
    }

    pub fn forward(&self, docs: &[Document], exec: Exec) -> Result<Vec<DocOutput>> {
        let inputs = self.prepare_all(docs)?;
        exec.map(&inputs, |_, x| self.infer(x)).into_iter().collect()
    }

    pub fn predict(&self, docs: &[Document], exec: Exec) -> Result<Predictions> {
        let outputs = self.forward(docs, exec)?;
        Ok(Predictions {
            labels: outputs.iter().map(DocOutput::label).collect(),
            scores: outputs.iter().map(|o| o.probs[1]).collect(),
        })
    }
}

//! Minibatch training with Adam and validation-based model selection.
//!
//! A gradient step runs in two stages so documents can be processed in
//! parallel:
//!
//! 1. each document's encoder graph is built independently, giving its
//!    feature row;
//! 2. one head graph takes the stacked rows as inputs, applies batch norm
//!    over the batch and computes the loss;
//! 3. the head's gradient with respect to each row seeds a backward pass
//!    through that document's encoder graph.
//!
//! Gradients are summed in document order, so parallel and sequential runs
//! produce identical bits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::{confusion, macro_f1};
use crate::graph::{BatchStats, Graph};
use crate::layers::dense::update_running_stats;
use crate::layers::Mode;
use crate::model::{DocInput, Model, ModelConfig};
use crate::parallel::Exec;
use crate::params::{AdamConfig, ParamGrads, ParameterSet};
use crate::preprocess::{Document, Label};
use crate::rng::{child_seeds, seeded, SeededRng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Drives shuffling and dropout.
    pub seed: u64,
    /// Rescale gradients to at most this global norm.
    pub clip_norm: Option<f64>,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-5,
            epochs: 150,
            batch_size: 32,
            seed: 0,
            clip_norm: None,
            exec: Exec::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2 for batch norm"));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::invalid(format!("clip norm {c} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestEpoch {
    pub epoch: usize,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters as they were after the best epoch.
    pub best: Model,
    pub best_epoch: BestEpoch,
    pub log: Vec<EpochLog>,
}

/// Loss and per-part gradients of one batch.
#[derive(Debug, Clone)]
pub struct BatchGradients {
    pub loss: f64,
    /// Head gradients first, then one entry per document.
    pub parts: Vec<ParamGrads>,
    pub batch_stats: Option<BatchStats>,
}

impl BatchGradients {
    pub fn accumulate_into(&self, params: &mut ParameterSet) {
        for g in &self.parts {
            params.accumulate(g);
        }
    }
}

/// Two-stage loss and gradients of `inputs` under `params`. Document `i`
/// draws its dropout masks from `seeds[i]`, the head from `seeds[B]`.
pub fn batch_gradients(
    cfg: &ModelConfig,
    params: &ParameterSet,
    inputs: &[&DocInput],
    labels: &[Label],
    mode: Mode,
    seeds: &[u64],
    exec: Exec,
) -> Result<BatchGradients> {
    let b = inputs.len();
    if labels.len() != b || seeds.len() != b + 1 {
        return Err(Error::invalid(format!(
            "batch of {b} documents with {} labels and {} seeds",
            labels.len(),
            seeds.len()
        )));
    }

    let mut encoded = exec
        .map(inputs, |i, x| -> Result<_> {
            let mut g = Graph::with_params(params);
            let mut rng = seeded(seeds[i]);
            let f = cfg.document_features(&mut g, x, mode, &mut rng)?;
            Ok((g, f.features))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let width = cfg.feature_width();
    let mut rows = Vec::with_capacity(b * width);
    for (g, f) in &encoded {
        rows.extend_from_slice(g.value(*f).data());
    }
    let mut head = Graph::with_params(params);
    let x = head.input(Tensor::matrix(b, width, rows)?);
    let out = cfg.head(&mut head, x, mode, &mut seeded(seeds[b]))?;
    let label_ids: Vec<usize> = labels.iter().map(|l| l.index()).collect();
    let loss_var = head.cross_entropy_logits(out.logits, &label_ids)?;
    let loss = head.value(loss_var).item();
    head.backward(loss_var)?;
    let dx = head.grad(x).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; b * width]);

    let mut parts = vec![head.into_param_grads()];
    let doc_grads = exec
        .map_mut(&mut encoded, |i, (g, f)| -> Result<ParamGrads> {
            g.backward_seeded(*f, &dx[i * width..(i + 1) * width])?;
            Ok(std::mem::take(g).into_param_grads())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    parts.extend(doc_grads);
    Ok(BatchGradients {
        loss,
        parts,
        batch_stats: out.batch_stats,
    })
}

/// Batches of `order`, with a trailing singleton folded into the previous
/// batch.
pub fn make_batches(order: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().expect("non-empty");
        batches.last_mut().expect("non-empty").extend(last);
    }
    batches
}

/// One optimizer step on a batch; returns its mean loss.
pub fn train_step(
    model: &mut Model,
    inputs: &[&DocInput],
    labels: &[Label],
    adam: &AdamConfig,
    clip_norm: Option<f64>,
    rng: &mut SeededRng,
    exec: Exec,
) -> Result<f64> {
    let seeds = child_seeds(rng, inputs.len() + 1);
    let cfg = model.config().clone();
    let grads = batch_gradients(&cfg, model.params(), inputs, labels, Mode::Train, &seeds, exec)?;
    let params = model.params_mut();
    grads.accumulate_into(params);
    if let Some(max) = clip_norm {
        params.clip_grad_norm(max);
    }
    params.adam_step(adam);
    if let Some(stats) = &grads.batch_stats {
        update_running_stats(params, stats)?;
    }
    Ok(grads.loss)
}

fn validation_macro_f1(model: &Model, inputs: &[DocInput], gold: &[Label], exec: Exec) -> Result<f64> {
    let outputs = exec
        .map(inputs, |_, x| model.infer(x))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let pred: Vec<Label> = outputs.iter().map(|o| o.label()).collect();
    Ok(macro_f1(&confusion(gold, &pred)?))
}

pub fn train(model: Model, train_docs: &[Document], val_docs: &[Document], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(model, train_docs, val_docs, cfg, |_| Ok(()))
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    mut model: Model,
    train_docs: &[Document],
    val_docs: &[Document],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog) -> Result<()>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_docs.len() < 2 {
        return Err(Error::Empty("training needs at least two documents"));
    }
    if val_docs.is_empty() {
        return Err(Error::Empty("validation split is empty"));
    }
    let inputs = model.prepare_all(train_docs)?;
    let labels: Vec<Label> = train_docs.iter().map(|d| d.label).collect();
    let val_inputs = model.prepare_all(val_docs)?;
    let val_gold: Vec<Label> = val_docs.iter().map(|d| d.label).collect();
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut rng = seeded(cfg.seed);

    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(BestEpoch, Model)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in make_batches(&order, cfg.batch_size) {
            let xs: Vec<&DocInput> = batch.iter().map(|&i| &inputs[i]).collect();
            let ys: Vec<Label> = batch.iter().map(|&i| labels[i]).collect();
            let loss = train_step(&mut model, &xs, &ys, &adam, cfg.clip_norm, &mut rng, cfg.exec)?;
            total += loss * batch.len() as f64;
        }
        let entry = EpochLog {
            epoch,
            train_loss: total / inputs.len() as f64,
            val_macro_f1: validation_macro_f1(&model, &val_inputs, &val_gold, cfg.exec)?,
        };
        log::info!(
            "epoch {epoch}: loss {:.6}, val macro F1 {:.4}",
            entry.train_loss,
            entry.val_macro_f1
        );
        on_epoch(&entry)?;
        if best.as_ref().is_none_or(|(b, _)| entry.val_macro_f1 > b.val_macro_f1) {
            let record = BestEpoch {
                epoch,
                val_macro_f1: entry.val_macro_f1,
            };
            best = Some((record, model.clone()));
        }
        log.push(entry);
    }
    let (best_epoch, best) = best.expect("at least one epoch");
    Ok(TrainOutcome { best, best_epoch, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use crate::preprocess::{build_vocab, Glove};

    fn docs(n: usize) -> Vec<Document> {
        (0..n)
            .map(|i| {
                let (text, label) = if i % 2 == 0 {
                    (format!("you stupid fool number {i}"), Label::Offensive)
                } else {
                    (format!("have a lovely day number {i}"), Label::Neutral)
                };
                let mut e = vec![0.01; 64];
                let base = if label == Label::Offensive { 30 } else { 5 };
                (base..base + 5).for_each(|k| e[k] = 0.15);
                Document::new(i.to_string(), text, label).with_emoji(e).unwrap()
            })
            .collect()
    }

    fn model(variant: Variant, dropout: f64, train: &[Document]) -> Model {
        let cfg = ModelConfig {
            embed_dim: 6,
            lstm_hidden: 4,
            attention_dim: 4,
            filters: 3,
            dense_units: 6,
            maxlen: 8,
            dropout,
            seed: 3,
            ..ModelConfig::new(variant)
        };
        let mut glove = Glove::new(6);
        for (i, w) in ["stupid", "fool", "lovely", "day"].iter().enumerate() {
            glove
                .vectors
                .insert(w.to_string(), (0..6).map(|k| ((i * 6 + k) as f64).sin()).collect());
        }
        let (vocab, table) = build_vocab(train, &glove, 1).unwrap();
        Model::build(cfg, table, vocab).unwrap()
    }

    #[test]
    fn batching_merges_trailing_singleton() {
        let order: Vec<usize> = (0..65).collect();
        let b = make_batches(&order, 32);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), [32, 33]);
        let b = make_batches(&order[..63], 32);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), [32, 31]);
    }

    #[test]
    fn two_stage_matches_single_graph() {
        let d = docs(5);
        let m = model(Variant::CnnBilstmEaEmoji, 0.0, &d);
        let inputs = m.prepare_all(&d).unwrap();
        let refs: Vec<&DocInput> = inputs.iter().collect();
        let labels: Vec<Label> = d.iter().map(|x| x.label).collect();

        let mut single = m.params().clone();
        let loss_single = {
            let mut g = Graph::with_params(m.params());
            let loss = m.config().batch_loss(&mut g, &inputs, &labels, Mode::Train, &mut seeded(0)).unwrap();
            let value = g.value(loss).item();
            g.backward(loss).unwrap();
            single.accumulate(&g.into_param_grads());
            value
        };
        let mut staged = m.params().clone();
        let seeds = vec![0; 6];
        let bg = batch_gradients(m.config(), m.params(), &refs, &labels, Mode::Train, &seeds, Exec::Parallel).unwrap();
        bg.accumulate_into(&mut staged);
        assert!((bg.loss - loss_single).abs() < 1e-14);
        for id in m.params().ids() {
            for (a, b) in single.grad(id).iter().zip(staged.grad(id)) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{}", m.params().name(id));
            }
        }
    }

    #[test]
    fn parallel_and_sequential_steps_agree_bitwise() {
        let d = docs(9);
        let run = |exec| {
            let mut m = model(Variant::CnnBilstmEaEmoji, 0.5, &d);
            let inputs = m.prepare_all(&d).unwrap();
            let refs: Vec<&DocInput> = inputs.iter().collect();
            let labels: Vec<Label> = d.iter().map(|x| x.label).collect();
            let mut rng = seeded(11);
            train_step(&mut m, &refs, &labels, &AdamConfig::with_lr(1e-3), None, &mut rng, exec).unwrap();
            m
        };
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
    }

    #[test]
    fn overfits_small_separable_set() {
        let d = docs(16);
        let m = model(Variant::CnnBilstmEaEmoji, 0.0, &d);
        let cfg = TrainConfig {
            lr: 1e-3,
            epochs: 150,
            batch_size: 16,
            seed: 4,
            ..TrainConfig::default()
        };
        let out = train(m, &d, &d, &cfg).unwrap();
        assert!(out.log.last().unwrap().train_loss < out.log[0].train_loss);
        let best_logged = out.log.iter().map(|e| e.val_macro_f1).fold(f64::MIN, f64::max);
        assert_eq!(out.best_epoch.val_macro_f1, best_logged);
        let first_best = out.log.iter().find(|e| e.val_macro_f1 == best_logged).unwrap().epoch;
        assert_eq!(out.best_epoch.epoch, first_best);
        let pred = out.best.predict(&d, Exec::Parallel).unwrap();
        assert!(pred.labels.iter().zip(&d).all(|(p, x)| *p == x.label));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let d = docs(12);
        let cfg = TrainConfig {
            lr: 1e-3,
            epochs: 3,
            batch_size: 4,
            seed: 8,
            ..TrainConfig::default()
        };
        let a = train(model(Variant::CnnBilstmRa, 0.5, &d), &d, &d, &cfg).unwrap();
        let b = train(model(Variant::CnnBilstmRa, 0.5, &d), &d, &d, &cfg).unwrap();
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn rejects_bad_input() {
        let d = docs(4);
        let m = model(Variant::Cnn, 0.0, &d);
        assert!(train(m.clone(), &d, &[], &TrainConfig::default()).is_err());
        assert!(train(m.clone(), &d[..1], &d, &TrainConfig::default()).is_err());
        let bad = TrainConfig {
            lr: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(m, &d, &d, &bad).is_err());
    }
}

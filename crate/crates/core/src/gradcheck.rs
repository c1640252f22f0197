//! Central finite-difference verification of analytic gradients.

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::parallel::Exec;
use crate::layers::{Mode, EMOJI_DIM};
use crate::model::{Model, ModelConfig, Variant};
use crate::params::{ParamId, ParameterSet};
use crate::preprocess::{build_vocab, Document, Glove, Label};
use crate::rng::seeded;
use rand::Rng;

/// Default perturbation.
pub const DEFAULT_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max over coordinates of `|a - n| / max(1e-8, |a| + |n|)`.
    pub max_rel_err: f64,
    /// Parameter name and flat index where the max occurred.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / f64::max(1e-8, analytic.abs() + numeric.abs())
}

fn evaluate<F>(params: &ParameterSet, f: &F) -> Result<f64>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    let mut g = Graph::with_params(params);
    let loss = f(&mut g)?;
    Ok(g.value(loss).item())
}

/// Compares the analytic gradient of the scalar built by `f` against
/// `(f(θ+eps) − f(θ−eps)) / 2eps` for every trainable coordinate.
///
/// `f` must be deterministic: dropout off, fixed inputs.
pub fn finite_diff_check<F>(params: &ParameterSet, eps: f64, exec: Exec, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<Var> + Sync + Send,
{
    let mut analytic: Vec<Vec<f64>> = params.ids().map(|id| vec![0.0; params.value(id).numel()]).collect();
    {
        let mut g = Graph::with_params(params);
        let loss = f(&mut g)?;
        g.backward(loss)?;
        for (id, grad) in g.into_param_grads().iter() {
            analytic[id.0].copy_from_slice(grad);
        }
    }

    let coords: Vec<(ParamId, usize)> = params
        .ids()
        .filter(|&id| params.is_trainable(id))
        .flat_map(|id| (0..params.value(id).numel()).map(move |j| (id, j)))
        .collect();
    let chunks: Vec<&[(ParamId, usize)]> = coords.chunks(64).collect();

    let results = exec.map(&chunks, |_, chunk| -> Result<Vec<f64>> {
        let mut local = params.clone();
        let mut errs = Vec::with_capacity(chunk.len());
        for &(id, j) in chunk.iter() {
            let orig = local.value(id).data()[j];
            local.value_mut(id).data_mut()[j] = orig + eps;
            let plus = evaluate(&local, &f)?;
            local.value_mut(id).data_mut()[j] = orig - eps;
            let minus = evaluate(&local, &f)?;
            local.value_mut(id).data_mut()[j] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            errs.push(relative_error(analytic[id.0][j], numeric));
        }
        Ok(errs)
    });

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        coordinates: coords.len(),
    };
    let mut k = 0;
    for chunk in results {
        for err in chunk? {
            if err > report.max_rel_err || report.worst.is_none() {
                let (id, j) = coords[k];
                report.max_rel_err = report.max_rel_err.max(err);
                report.worst = Some((params.name(id).to_string(), j));
            }
            k += 1;
        }
    }
    Ok(report)
}

/// A tiny random problem for checking a whole model: `n_docs` documents of
/// random length over a small vocabulary, with emoji vectors and both
/// classes present. Embeddings are fine-tuned so every parameter is checked,
/// and every trainable value is jittered so that no ReLU or max sits exactly
/// on a kink (zero biases over zero padding would).
pub fn tiny_problem(variant: Variant, n_docs: usize, seed: u64) -> Result<(Model, Vec<Document>)> {
    let mut rng = seeded(seed);
    let words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"];
    let docs: Vec<Document> = (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..=8);
            let text: Vec<&str> = (0..len).map(|_| words[rng.random_range(0..words.len())]).collect();
            let label = if i % 2 == 0 { Label::Offensive } else { Label::Neutral };
            let probs: Vec<f64> = (0..EMOJI_DIM).map(|_| rng.random::<f64>()).collect();
            Document::new(i.to_string(), text.join(" "), label).with_emoji(probs)
        })
        .collect::<Result<_>>()?;
    let mut glove = Glove::new(4);
    for w in &words[..4] {
        glove.vectors.insert(w.to_string(), (0..4).map(|_| rng.random_range(-0.5..0.5)).collect());
    }
    let (vocab, table) = build_vocab(&docs, &glove, seed)?;
    let cfg = ModelConfig {
        seed,
        finetune_embeddings: true,
        ..ModelConfig::tiny(variant)
    };
    let mut model = Model::build(cfg, table, vocab)?;
    let params = model.params_mut();
    let ids: Vec<ParamId> = params.ids().filter(|&id| params.is_trainable(id)).collect();
    for id in ids {
        for x in params.value_mut(id).data_mut() {
            *x += rng.random_range(-0.1..0.1);
        }
    }
    if let Ok(table) = params.get_mut(crate::layers::embedding::EMBEDDING) {
        table.row_mut(0).fill(0.0);
    }
    Ok((model, docs))
}

/// Checks the gradient of the batch loss over `docs` with respect to every
/// trainable parameter. Dropout masks are redrawn from the same seed for
/// every evaluation, so training mode is deterministic too.
pub fn check_model(model: &Model, docs: &[Document], mode: Mode, exec: Exec) -> Result<GradCheckReport> {
    let inputs = model.prepare_all(docs)?;
    let labels: Vec<Label> = docs.iter().map(|d| d.label).collect();
    let cfg = model.config();
    finite_diff_check(model.params(), DEFAULT_EPS, exec, |g| {
        cfg.batch_loss(g, &inputs, &labels, mode, &mut seeded(7))
    })
}

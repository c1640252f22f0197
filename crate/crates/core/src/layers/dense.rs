//! Classification head: dense → ReLU → batch norm → dropout → dense(2).

use rand::Rng;

use crate::error::Result;
use crate::graph::{BatchStats, Graph, Var};
use crate::layers::init::{Init, ParamSpec};
use crate::layers::Mode;
use crate::params::ParameterSet;

pub const DENSE_W: &str = "head.dense.w";
pub const DENSE_B: &str = "head.dense.b";
pub const BN_GAMMA: &str = "head.bn.gamma";
pub const BN_BETA: &str = "head.bn.beta";
pub const BN_MEAN: &str = "head.bn.running_mean";
pub const BN_VAR: &str = "head.bn.running_var";
pub const OUT_W: &str = "head.out.w";
pub const OUT_B: &str = "head.out.b";

pub const BN_EPS: f64 = 1e-5;
/// Weight kept by the running statistics at each update.
pub const BN_MOMENTUM: f64 = 0.9;
pub const NUM_CLASSES: usize = 2;

pub fn param_specs(input_dim: usize, hidden: usize) -> Vec<ParamSpec> {
    vec![
        ParamSpec::new(
            DENSE_W,
            &[hidden, input_dim],
            Init::Glorot {
                fan_in: input_dim,
                fan_out: hidden,
            },
        ),
        ParamSpec::new(DENSE_B, &[hidden], Init::Constant(0.0)),
        ParamSpec::new(BN_GAMMA, &[hidden], Init::Constant(1.0)),
        ParamSpec::new(BN_BETA, &[hidden], Init::Constant(0.0)),
        ParamSpec::new(BN_MEAN, &[hidden], Init::Constant(0.0)).frozen(),
        ParamSpec::new(BN_VAR, &[hidden], Init::Constant(1.0)).frozen(),
        ParamSpec::new(
            OUT_W,
            &[NUM_CLASSES, hidden],
            Init::Glorot {
                fan_in: hidden,
                fan_out: NUM_CLASSES,
            },
        ),
        ParamSpec::new(OUT_B, &[NUM_CLASSES], Init::Constant(0.0)),
    ]
}

#[derive(Debug)]
pub struct HeadOutput {
    /// `[B, 2]` pre-softmax scores.
    pub logits: Var,
    /// Present in training mode.
    pub batch_stats: Option<BatchStats>,
}

/// Runs the head on `features[B, F]`. Training mode normalizes with batch
/// statistics (so needs `B ≥ 2`); inference uses the running statistics.
pub fn dense_head<R: Rng + ?Sized>(
    g: &mut Graph<'_>,
    features: Var,
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<HeadOutput> {
    let w = g.param(DENSE_W)?;
    let b = g.param(DENSE_B)?;
    let h = g.matmul_nt(features, w)?;
    let h = g.add_row(h, b)?;
    let h = g.relu(h);

    let gamma = g.param(BN_GAMMA)?;
    let beta = g.param(BN_BETA)?;
    let (h, batch_stats) = match mode {
        Mode::Train => {
            let (h, stats) = g.batchnorm_train(h, gamma, beta, BN_EPS)?;
            (h, Some(stats))
        }
        Mode::Infer => {
            let mean = g.param(BN_MEAN)?;
            let var = g.param(BN_VAR)?;
            let (mean, var) = (g.value(mean).data().to_vec(), g.value(var).data().to_vec());
            (g.batchnorm_infer(h, gamma, beta, &mean, &var, BN_EPS)?, None)
        }
    };
    let h = g.dropout(h, dropout, mode.is_train(), rng)?;

    let ow = g.param(OUT_W)?;
    let ob = g.param(OUT_B)?;
    let logits = g.matmul_nt(h, ow)?;
    let logits = g.add_row(logits, ob)?;
    Ok(HeadOutput { logits, batch_stats })
}

/// Folds one batch's statistics into the running estimates.
pub fn update_running_stats(params: &mut ParameterSet, stats: &BatchStats) -> Result<()> {
    for (name, batch) in [(BN_MEAN, &stats.mean), (BN_VAR, &stats.var)] {
        let running = params.get_mut(name)?;
        for (r, b) in running.data_mut().iter_mut().zip(batch) {
            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tensor::Tensor;

    fn head(input: usize, hidden: usize) -> ParameterSet {
        let mut rng = seeded(3);
        let mut p = ParameterSet::new();
        for spec in param_specs(input, hidden) {
            let t = spec.materialize(&mut rng);
            p.insert(spec.name, t, spec.trainable).unwrap();
        }
        p
    }

    fn probs(g: &mut Graph<'_>, logits: Var) -> Vec<f64> {
        let p = g.softmax_rows(logits).unwrap();
        g.value(p).data().to_vec()
    }

    #[test]
    fn probabilities_are_normalized() {
        let p = head(5, 100);
        let mut g = Graph::with_params(&p);
        let x = g.constant(Tensor::matrix(3, 5, (0..15).map(|i| i as f64 * 0.1 - 0.6).collect()).unwrap());
        let out = dense_head(&mut g, x, 0.5, Mode::Train, &mut seeded(1)).unwrap();
        let pr = probs(&mut g, out.logits);
        for row in pr.chunks(2) {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
        }
        assert!(out.batch_stats.is_some());
    }

    #[test]
    fn symmetric_weights_zero_input_gives_half() {
        let mut p = head(4, 6);
        let ow = p.get_mut(OUT_W).unwrap();
        let row0 = ow.row(0).to_vec();
        ow.row_mut(1).copy_from_slice(&row0);
        let mut g = Graph::with_params(&p);
        let x = g.constant(Tensor::zeros(&[1, 4]));
        let out = dense_head(&mut g, x, 0.5, Mode::Infer, &mut seeded(1)).unwrap();
        assert_eq!(probs(&mut g, out.logits), vec![0.5, 0.5]);
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let p = head(4, 6);
        let mut g = Graph::with_params(&p);
        let x = g.constant(Tensor::zeros(&[1, 5]));
        assert!(dense_head(&mut g, x, 0.5, Mode::Infer, &mut seeded(1)).is_err());
    }

    #[test]
    fn relu_hidden_layer_by_hand() {
        // 2 features, 2 hidden units, identity-ish weights, inference mode with
        // running stats (0, 1): hidden = relu(W x + b) / sqrt(1 + eps)
        let mut p = ParameterSet::new();
        p.insert(DENSE_W, Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(), true).unwrap();
        p.insert(DENSE_B, Tensor::vector(vec![0.0, 0.0]), true).unwrap();
        p.insert(BN_GAMMA, Tensor::vector(vec![1.0, 1.0]), true).unwrap();
        p.insert(BN_BETA, Tensor::vector(vec![0.0, 0.0]), true).unwrap();
        p.insert(BN_MEAN, Tensor::vector(vec![0.0, 0.0]), false).unwrap();
        p.insert(BN_VAR, Tensor::vector(vec![1.0, 1.0]), false).unwrap();
        p.insert(OUT_W, Tensor::matrix(2, 2, vec![1.0, 1.0, 2.0, -1.0]).unwrap(), true).unwrap();
        p.insert(OUT_B, Tensor::vector(vec![0.0, 0.0]), true).unwrap();
        let mut g = Graph::with_params(&p);
        let x = g.constant(Tensor::matrix(1, 2, vec![0.8, -0.5]).unwrap());
        let out = dense_head(&mut g, x, 0.5, Mode::Infer, &mut seeded(0)).unwrap();
        let s = 1.0 / (1.0f64 + BN_EPS).sqrt();
        // relu zeroes the second unit
        let expected = [0.8 * s, 2.0 * 0.8 * s];
        let got = g.value(out.logits).data();
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn running_stats_momentum() {
        let mut p = head(2, 3);
        let stats = BatchStats {
            mean: vec![1.0, 2.0, 3.0],
            var: vec![2.0, 2.0, 2.0],
        };
        update_running_stats(&mut p, &stats).unwrap();
        let m = p.get(BN_MEAN).unwrap().data();
        assert!((m[2] - 0.3).abs() < 1e-15);
        let v = p.get(BN_VAR).unwrap().data();
        assert!((v[0] - 1.1).abs() < 1e-15);
    }
}

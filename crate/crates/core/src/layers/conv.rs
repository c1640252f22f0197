use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::layers::init::{Init, ParamSpec};
use crate::layers::Mode;

pub fn filters_name(width: usize) -> String {
    format!("conv.w{width}.filters")
}

pub fn bias_name(width: usize) -> String {
    format!("conv.w{width}.bias")
}

pub fn param_specs(widths: &[usize], embed_dim: usize, filters: usize) -> Vec<ParamSpec> {
    widths
        .iter()
        .flat_map(|&w| {
            [
                ParamSpec::new(
                    filters_name(w),
                    &[w, embed_dim, filters],
                    Init::Glorot {
                        fan_in: w * embed_dim,
                        fan_out: w * filters,
                    },
                ),
                ParamSpec::new(bias_name(w), &[filters], Init::Constant(0.0)),
            ]
        })
        .collect()
}

/// One convolution unit per width: valid conv, ReLU, max over time. The
/// units' outputs are concatenated (`widths.len() * F` values) and passed
/// through dropout in training mode.
pub fn conv_block_forward<R: Rng + ?Sized>(
    g: &mut Graph<'_>,
    emb: Var,
    widths: &[usize],
    dropout: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Var> {
    let t_len = g.shape(emb)[0];
    let widest = widths.iter().copied().max().ok_or(Error::Empty("conv block without widths"))?;
    if t_len < widest {
        return Err(Error::SequenceTooShort {
            len: t_len,
            width: widest,
        });
    }
    let mut units = Vec::with_capacity(widths.len());
    for &w in widths {
        let filters = g.param(&filters_name(w))?;
        let bias = g.param(&bias_name(w))?;
        let conv = g.conv1d_valid(emb, filters, bias)?;
        let act = g.relu(conv);
        units.push(g.max_over_time(act)?);
    }
    let joined = g.concat(&units)?;
    g.dropout(joined, dropout, mode.is_train(), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;
    use crate::rng::seeded;
    use crate::tensor::Tensor;

    const WIDTHS: [usize; 4] = [2, 3, 4, 5];

    fn block_params(d: usize, f: usize, seed: u64) -> ParameterSet {
        let mut rng = seeded(seed);
        let mut p = ParameterSet::new();
        for spec in param_specs(&WIDTHS, d, f) {
            let t = spec.materialize(&mut rng);
            p.insert(spec.name, t, true).unwrap();
        }
        p
    }

    #[test]
    fn zero_input_zero_bias_gives_zeros_of_width_400() {
        let p = block_params(3, 100, 1);
        let mut g = Graph::with_params(&p);
        let e = g.constant(Tensor::zeros(&[7, 3]));
        let out = conv_block_forward(&mut g, e, &WIDTHS, 0.5, Mode::Infer, &mut seeded(0)).unwrap();
        assert_eq!(g.shape(out), &[400]);
        assert!(g.value(out).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_width_independent_of_length() {
        let p = block_params(2, 100, 2);
        for t in [5, 6, 31, 200] {
            let mut g = Graph::with_params(&p);
            let e = g.constant(Tensor::filled(&[t, 2], 0.1));
            let out = conv_block_forward(&mut g, e, &WIDTHS, 0.5, Mode::Train, &mut seeded(0)).unwrap();
            assert_eq!(g.shape(out), &[400]);
        }
        let mut g = Graph::with_params(&p);
        let e = g.constant(Tensor::zeros(&[4, 2]));
        assert!(conv_block_forward(&mut g, e, &WIDTHS, 0.5, Mode::Infer, &mut seeded(0)).is_err());
    }

    #[test]
    fn single_filter_matches_hand_pipeline() {
        // seq (d=1) = [1, -2, 3, 0.5], width 2 filter [1, 2], bias -1:
        // conv = [1-4-1, -2+6-1, 3+1-1] = [-4, 3, 3]; relu = [0, 3, 3]; max = 3
        let mut p = ParameterSet::new();
        p.insert(filters_name(2), Tensor::new(vec![2, 1, 1], vec![1.0, 2.0]).unwrap(), true)
            .unwrap();
        p.insert(bias_name(2), Tensor::vector(vec![-1.0]), true).unwrap();
        let mut g = Graph::with_params(&p);
        let e = g.constant(Tensor::matrix(4, 1, vec![1.0, -2.0, 3.0, 0.5]).unwrap());
        let out = conv_block_forward(&mut g, e, &[2], 0.0, Mode::Infer, &mut seeded(0)).unwrap();
        assert_eq!(g.value(out).data(), &[3.0]);

        // gradient wrt the filter goes through the first maximal window (t=1)
        let s = g.sum(out);
        g.backward(s).unwrap();
        let grads = g.into_param_grads();
        let filt = grads.iter().find(|(id, _)| id.0 == 0).unwrap().1;
        assert_eq!(filt, &[-2.0, 3.0]);
    }
}

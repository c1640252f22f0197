//! Single-layer bidirectional LSTM. Gate blocks are ordered
//! (input, forget, cell candidate, output) along the `4H` axis.

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::layers::init::{Init, ParamSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn prefix(self) -> &'static str {
        match self {
            Direction::Forward => "lstm.fwd",
            Direction::Backward => "lstm.bwd",
        }
    }
}

pub fn param_specs(embed_dim: usize, hidden: usize) -> Vec<ParamSpec> {
    [Direction::Forward, Direction::Backward]
        .into_iter()
        .flat_map(|dir| {
            let p = dir.prefix();
            [
                ParamSpec::new(
                    format!("{p}.w"),
                    &[4 * hidden, embed_dim],
                    Init::Glorot {
                        fan_in: embed_dim,
                        fan_out: 4 * hidden,
                    },
                ),
                ParamSpec::new(format!("{p}.u"), &[4 * hidden, hidden], Init::Orthogonal),
                ParamSpec::new(format!("{p}.b"), &[4 * hidden], Init::ForgetBias { hidden }),
            ]
        })
        .collect()
}

/// One cell update from the pre-activation `z = W x + b (+ U h_prev)`.
/// `c_prev = None` stands for the zero initial state.
fn gates(g: &mut Graph<'_>, z: Var, c_prev: Option<Var>, hidden: usize) -> Result<(Var, Var)> {
    let zi = g.slice(z, 0, hidden)?;
    let zf = g.slice(z, hidden, hidden)?;
    let zg = g.slice(z, 2 * hidden, hidden)?;
    let zo = g.slice(z, 3 * hidden, hidden)?;
    let i = g.sigmoid(zi);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let write = g.mul(i, cand)?;
    let c = match c_prev {
        Some(c_prev) => {
            let f = g.sigmoid(zf);
            let keep = g.mul(f, c_prev)?;
            g.add(keep, write)?
        }
        None => write,
    };
    let tc = g.tanh(c);
    let h = g.mul(o, tc)?;
    Ok((h, c))
}

fn recurrent(g: &mut Graph<'_>, h_prev: Var, u: Var) -> Result<Var> {
    let hidden = g.shape(h_prev)[0];
    let h2 = g.reshape(h_prev, &[1, hidden])?;
    let r = g.matmul_nt(h2, u)?;
    let n = g.shape(r)[1];
    g.reshape(r, &[n])
}

/// Full LSTM step with explicit weights:
/// `c_t = f ⊙ c_prev + i ⊙ g`, `h_t = o ⊙ tanh(c_t)`.
pub fn lstm_cell(
    g: &mut Graph<'_>,
    x: Var,
    h_prev: Var,
    c_prev: Var,
    w: Var,
    u: Var,
    b: Var,
) -> Result<(Var, Var)> {
    let d = g.shape(x)[0];
    let hidden = g.shape(h_prev)[0];
    let x2 = g.reshape(x, &[1, d])?;
    let wx = g.matmul_nt(x2, w)?;
    let wx = g.reshape(wx, &[4 * hidden])?;
    let rec = recurrent(g, h_prev, u)?;
    let z = g.add(wx, rec)?;
    let z = g.add(z, b)?;
    gates(g, z, Some(c_prev), hidden)
}

/// Runs one direction over `emb[T,d]` from a zero state and returns the
/// hidden state for every position in original order.
pub fn lstm_direction(g: &mut Graph<'_>, emb: Var, dir: Direction) -> Result<Vec<Var>> {
    let p = dir.prefix();
    let w = g.param(&format!("{p}.w"))?;
    let u = g.param(&format!("{p}.u"))?;
    let b = g.param(&format!("{p}.b"))?;
    let hidden = g.shape(u)[1];
    let t_len = g.shape(emb)[0];

    // input projections for every step at once
    let xw = g.matmul_nt(emb, w)?;
    let xw = g.add_row(xw, b)?;

    let order: Vec<usize> = match dir {
        Direction::Forward => (0..t_len).collect(),
        Direction::Backward => (0..t_len).rev().collect(),
    };
    let mut out = vec![None; t_len];
    let mut state: Option<(Var, Var)> = None;
    for t in order {
        let mut z = g.row(xw, t)?;
        if let Some((h_prev, _)) = state {
            let rec = recurrent(g, h_prev, u)?;
            z = g.add(z, rec)?;
        }
        let (h, c) = gates(g, z, state.map(|s| s.1), hidden)?;
        out[t] = Some(h);
        state = Some((h, c));
    }
    Ok(out.into_iter().map(|h| h.expect("every step visited")).collect())
}

/// `[T, 2H]` whose row `i` is `[forward h_i ; backward h_i]`.
pub fn bilstm_forward(g: &mut Graph<'_>, emb: Var) -> Result<Var> {
    let fwd = lstm_direction(g, emb, Direction::Forward)?;
    let bwd = lstm_direction(g, emb, Direction::Backward)?;
    let mut rows = Vec::with_capacity(fwd.len());
    for (f, b) in fwd.into_iter().zip(bwd) {
        rows.push(g.concat(&[f, b])?);
    }
    g.stack_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sigmoid;
    use crate::params::ParameterSet;
    use crate::rng::seeded;
    use crate::tensor::Tensor;

    fn params(d: usize, h: usize, seed: u64) -> ParameterSet {
        let mut rng = seeded(seed);
        let mut p = ParameterSet::new();
        for spec in param_specs(d, h) {
            let t = spec.materialize(&mut rng);
            p.insert(spec.name, t, true).unwrap();
        }
        p
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![0.4, -1.0]));
        let h0 = g.constant(Tensor::vector(vec![0.3, 0.2, -0.1]));
        let c0 = g.constant(Tensor::zeros(&[3]));
        let w = g.constant(Tensor::zeros(&[12, 2]));
        let u = g.constant(Tensor::zeros(&[12, 3]));
        let b = g.constant(Tensor::zeros(&[12]));
        let (h, c) = lstm_cell(&mut g, x, h0, c0, w, u, b).unwrap();
        assert!(g.value(h).data().iter().all(|&v| v == 0.0));
        assert!(g.value(c).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forget_bias_scales_previous_cell() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::zeros(&[2]));
        let h0 = g.constant(Tensor::zeros(&[2]));
        let c0 = g.constant(Tensor::vector(vec![0.8, -2.0]));
        let w = g.constant(Tensor::zeros(&[8, 2]));
        let u = g.constant(Tensor::zeros(&[8, 2]));
        let mut bias = vec![0.0; 8];
        bias[2..4].copy_from_slice(&[1.0, 1.0]);
        let b = g.constant(Tensor::vector(bias));
        let (_, c) = lstm_cell(&mut g, x, h0, c0, w, u, b).unwrap();
        let s1 = sigmoid(1.0);
        assert_eq!(g.value(c).data(), &[s1 * 0.8, s1 * -2.0]);
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut p = params(3, 2, 0);
        let names: Vec<String> = p.names().map(String::from).collect();
        for n in names {
            p.get_mut(&n).unwrap().data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let mut g = Graph::with_params(&p);
        let e = g.constant(Tensor::filled(&[4, 3], 0.9));
        let hs = bilstm_forward(&mut g, e).unwrap();
        assert_eq!(g.shape(hs), &[4, 4]);
        assert!(g.value(hs).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn palindrome_with_shared_weights_mirrors() {
        let mut p = params(2, 3, 9);
        for suffix in ["w", "u", "b"] {
            let fwd = p.get(&format!("lstm.fwd.{suffix}")).unwrap().clone();
            *p.get_mut(&format!("lstm.bwd.{suffix}")).unwrap() = fwd;
        }
        let mut g = Graph::with_params(&p);
        let e = g.constant(Tensor::matrix(2, 2, vec![0.5, -0.3, 0.5, -0.3]).unwrap());
        let hs = bilstm_forward(&mut g, e).unwrap();
        let v = g.value(hs);
        // forward h at step 0 equals backward h at step 1 and vice versa
        assert_eq!(&v.row(0)[..3], &v.row(1)[3..]);
        assert_eq!(&v.row(1)[..3], &v.row(0)[3..]);
    }

    #[test]
    fn every_row_depends_on_every_token() {
        let p = params(2, 3, 4);
        let base: Vec<f64> = (0..10).map(|i| (i as f64 * 0.37).sin()).collect();
        let run = |data: Vec<f64>| {
            let mut g = Graph::with_params(&p);
            let e = g.constant(Tensor::matrix(5, 2, data).unwrap());
            let hs = bilstm_forward(&mut g, e).unwrap();
            g.value(hs).clone()
        };
        let reference = run(base.clone());
        for tok in 0..5 {
            let mut data = base.clone();
            data[tok * 2] += 0.5;
            let perturbed = run(data);
            for row in 0..5 {
                assert_ne!(reference.row(row), perturbed.row(row), "token {tok} row {row}");
            }
        }
    }
}

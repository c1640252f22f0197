//! Additive attention over BiLSTM states, with an optional emotion term.
//!
//! Regular:        `score_i = vᵀ tanh(W_a h_i + b_a)`
//! Emotion-aware:  `score_i = vᵀ tanh(W_a h_i + W_e e + b_a)`
//!
//! `e` is one vector per document, so `W_e e` is computed once and shared by
//! every position.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Var};
use crate::layers::init::{Init, ParamSpec};
use crate::layers::EMOJI_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttentionKind {
    Regular,
    EmotionAware,
}

pub const W_A: &str = "attn.w_a";
pub const W_E: &str = "attn.w_e";
pub const B_A: &str = "attn.b_a";
pub const V: &str = "attn.v";
pub const PROJ_W: &str = "emoji_proj.w";
pub const PROJ_B: &str = "emoji_proj.b";

/// `state_dim` is `2H`; `emotion_dim` is the width of `e` (2H when the emoji
/// vector is projected, 64 when it is used raw).
pub fn param_specs(kind: AttentionKind, state_dim: usize, attn_dim: usize, emotion_dim: usize) -> Vec<ParamSpec> {
    let mut specs = vec![ParamSpec::new(
        W_A,
        &[attn_dim, state_dim],
        Init::Glorot {
            fan_in: state_dim,
            fan_out: attn_dim,
        },
    )];
    if kind == AttentionKind::EmotionAware {
        specs.push(ParamSpec::new(
            W_E,
            &[attn_dim, emotion_dim],
            Init::Glorot {
                fan_in: emotion_dim,
                fan_out: attn_dim,
            },
        ));
    }
    specs.push(ParamSpec::new(B_A, &[attn_dim], Init::Constant(0.0)));
    specs.push(ParamSpec::new(
        V,
        &[attn_dim],
        Init::Glorot {
            fan_in: attn_dim,
            fan_out: 1,
        },
    ));
    specs
}

pub fn projection_specs(state_dim: usize) -> Vec<ParamSpec> {
    vec![
        ParamSpec::new(
            PROJ_W,
            &[state_dim, EMOJI_DIM],
            Init::Glorot {
                fan_in: EMOJI_DIM,
                fan_out: state_dim,
            },
        ),
        ParamSpec::new(PROJ_B, &[state_dim], Init::Constant(0.0)),
    ]
}

/// Unnormalized scores `[T]` for the states `hs[T, 2H]`. Passing `emotion`
/// selects the emotion-aware score and requires `attn.w_e`.
pub fn attention_scores(g: &mut Graph<'_>, hs: Var, emotion: Option<Var>) -> Result<Var> {
    let w_a = g.param(W_A)?;
    let b_a = g.param(B_A)?;
    let v = g.param(V)?;
    let mut pre = g.matmul_nt(hs, w_a)?;
    if let Some(e) = emotion {
        let w_e = g.param(W_E)?;
        let n = g.shape(e)[0];
        let e2 = g.reshape(e, &[1, n])?;
        let we = g.matmul_nt(e2, w_e)?;
        let a = g.shape(we)[1];
        let we = g.reshape(we, &[a])?;
        pre = g.add_row(pre, we)?;
    }
    let pre = g.add_row(pre, b_a)?;
    let act = g.tanh(pre);
    let a = g.shape(v)[0];
    let v_col = g.reshape(v, &[a, 1])?;
    let scores = g.matmul(act, v_col)?;
    let t_len = g.shape(scores)[0];
    g.reshape(scores, &[t_len])
}

/// Softmax of `scores` over real tokens; padding gets weight 0.
pub fn attention_weights(g: &mut Graph<'_>, scores: Var, real: &[bool]) -> Result<Var> {
    if !real.iter().any(|&r| r) {
        return Err(Error::Empty("attention over a document with no real tokens"));
    }
    g.softmax_masked(scores, real)
}

/// `r = Σ α_i h_i`.
pub fn attention_pool(g: &mut Graph<'_>, alpha: Var, hs: Var) -> Result<Var> {
    let t_len = g.shape(alpha)[0];
    let a2 = g.reshape(alpha, &[1, t_len])?;
    let r = g.matmul(a2, hs)?;
    let n = g.shape(r)[1];
    g.reshape(r, &[n])
}

/// `tanh(W_p e + b_p)` for a binary emoji vector `e`.
pub fn emoji_project(g: &mut Graph<'_>, e_raw: Var) -> Result<Var> {
    if g.value(e_raw).data().iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::invalid("emoji projection input must be binary"));
    }
    let w = g.param(PROJ_W)?;
    let b = g.param(PROJ_B)?;
    let n = g.shape(e_raw)[0];
    let e2 = g.reshape(e_raw, &[1, n])?;
    let z = g.matmul_nt(e2, w)?;
    let m = g.shape(z)[1];
    let z = g.reshape(z, &[m])?;
    let z = g.add(z, b)?;
    Ok(g.tanh(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;
    use crate::tensor::Tensor;

    fn attn_params(w_a: &[f64], w_e: Option<&[f64]>, b_a: &[f64], v: &[f64]) -> ParameterSet {
        let a = v.len();
        let s = w_a.len() / a;
        let mut p = ParameterSet::new();
        p.insert(W_A, Tensor::matrix(a, s, w_a.to_vec()).unwrap(), true).unwrap();
        if let Some(w_e) = w_e {
            p.insert(W_E, Tensor::matrix(a, w_e.len() / a, w_e.to_vec()).unwrap(), true)
                .unwrap();
        }
        p.insert(B_A, Tensor::vector(b_a.to_vec()), true).unwrap();
        p.insert(V, Tensor::vector(v.to_vec()), true).unwrap();
        p
    }

    fn score(p: &ParameterSet, h: &[f64], e: Option<&[f64]>) -> f64 {
        let mut g = Graph::with_params(p);
        let hs = g.constant(Tensor::matrix(1, h.len(), h.to_vec()).unwrap());
        let e = e.map(|e| g.constant(Tensor::vector(e.to_vec())));
        let s = attention_scores(&mut g, hs, e).unwrap();
        g.value(s).item()
    }

    #[test]
    fn regular_score_zero_weights() {
        let p = attn_params(&[0.0; 4], None, &[0.0, 0.0], &[3.0, -7.0]);
        assert_eq!(score(&p, &[1.0, 2.0], None), 0.0);
    }

    #[test]
    fn regular_score_hand_case() {
        // W_a = [[1,2],[0,-1]], b = [0.1,-0.2], v = [0.5, 2], h = [0.3, -0.4]
        // W_a h + b = [0.3-0.8+0.1, 0.4-0.2] = [-0.4, 0.2]
        let p = attn_params(&[1.0, 2.0, 0.0, -1.0], None, &[0.1, -0.2], &[0.5, 2.0]);
        let expected = 0.5 * (-0.4f64).tanh() + 2.0 * 0.2f64.tanh();
        assert!((score(&p, &[0.3, -0.4], None) - expected).abs() < 1e-15);
    }

    #[test]
    fn regular_score_ignores_null_space() {
        // W_a has null space spanned by [2, -1]
        let p = attn_params(&[1.0, 2.0, 0.5, 1.0], None, &[0.1, 0.2], &[1.0, -1.0]);
        let a = score(&p, &[0.3, 0.7], None);
        let b = score(&p, &[0.3 + 2.0, 0.7 - 1.0], None);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn emotion_score_reduces_to_regular_when_we_is_zero() {
        let reg = attn_params(&[1.0, 2.0, 0.0, -1.0], None, &[0.1, -0.2], &[0.5, 2.0]);
        let ea = attn_params(&[1.0, 2.0, 0.0, -1.0], Some(&[0.0; 4]), &[0.1, -0.2], &[0.5, 2.0]);
        let h = [0.3, -0.4];
        assert_eq!(score(&reg, &h, None), score(&ea, &h, Some(&[0.9, -0.6])));
    }

    #[test]
    fn emotion_term_isolated() {
        // h = 0: score = v · tanh(W_e e + b_a)
        let p = attn_params(&[4.0, 4.0, 4.0, 4.0], Some(&[1.0, 0.0, 0.0, 1.0]), &[0.2, 0.0], &[1.0, 3.0]);
        let e = [0.5, -0.25];
        let expected = (0.5f64 + 0.2).tanh() + 3.0 * (-0.25f64).tanh();
        assert!((score(&p, &[0.0, 0.0], Some(&e)) - expected).abs() < 1e-15);
    }

    #[test]
    fn emotion_score_hand_case() {
        // W_a = I, W_e = [[0,1],[1,0]], b = [0,0.5], v = [1,1], h = [0.2,0.1], e = [0.3,-0.6]
        // pre = [0.2-0.6, 0.1+0.3+0.5] = [-0.4, 0.9]
        let p = attn_params(&[1.0, 0.0, 0.0, 1.0], Some(&[0.0, 1.0, 1.0, 0.0]), &[0.0, 0.5], &[1.0, 1.0]);
        let expected = (-0.4f64).tanh() + 0.9f64.tanh();
        assert!((score(&p, &[0.2, 0.1], Some(&[0.3, -0.6])) - expected).abs() < 1e-15);
    }

    #[test]
    fn weights_uniform_and_masked() {
        let mut g = Graph::new();
        let s = g.constant(Tensor::filled(&[7], 0.3));
        let mask = [false, false, true, true, true, true, true];
        let a = attention_weights(&mut g, s, &mask).unwrap();
        let w = g.value(a).data();
        assert_eq!(&w[..2], &[0.0, 0.0]);
        for &x in &w[2..] {
            assert!((x - 0.2).abs() < 1e-15);
        }
        assert!(attention_weights(&mut g, s, &[false; 7]).is_err());
    }

    #[test]
    fn pool_one_hot_and_uniform() {
        let mut g = Graph::new();
        let hs = g.constant(Tensor::matrix(3, 2, vec![1.0, 2.0, -3.0, 0.5, 4.0, 4.0]).unwrap());
        let one_hot = g.constant(Tensor::vector(vec![0.0, 1.0, 0.0]));
        let r = attention_pool(&mut g, one_hot, hs).unwrap();
        assert_eq!(g.value(r).data(), &[-3.0, 0.5]);
        let uni = g.constant(Tensor::vector(vec![0.25, 0.25, 0.5]));
        let r = attention_pool(&mut g, uni, hs).unwrap();
        assert_eq!(g.value(r).data(), &[0.25 - 0.75 + 2.0, 0.5 + 0.125 + 2.0]);
    }

    #[test]
    fn projection_cases() {
        let mut p = ParameterSet::new();
        p.insert(PROJ_W, Tensor::zeros(&[2, EMOJI_DIM]), true).unwrap();
        p.insert(PROJ_B, Tensor::zeros(&[2]), true).unwrap();
        let mut e = vec![0.0; EMOJI_DIM];
        e[3] = 1.0;
        e[10] = 1.0;
        {
            let mut g = Graph::with_params(&p);
            let ev = g.constant(Tensor::vector(e.clone()));
            let out = emoji_project(&mut g, ev).unwrap();
            assert_eq!(g.value(out).data(), &[0.0, 0.0]);
        }
        // hand case: row0 picks e[3] with weight 2, row1 picks e[10] with -1, b = [0.1, 0]
        let w = p.get_mut(PROJ_W).unwrap();
        w.data_mut()[3] = 2.0;
        w.data_mut()[EMOJI_DIM + 10] = -1.0;
        p.get_mut(PROJ_B).unwrap().data_mut()[0] = 0.1;
        let mut g = Graph::with_params(&p);
        let ev = g.constant(Tensor::vector(e.clone()));
        let out = emoji_project(&mut g, ev).unwrap();
        assert_eq!(g.value(out).data(), &[2.1f64.tanh(), (-1.0f64).tanh()]);
        assert!(g.value(out).data().iter().all(|v| v.abs() < 1.0));

        e[0] = 0.5;
        let bad = g.constant(Tensor::vector(e));
        assert!(emoji_project(&mut g, bad).is_err());
    }
}

//! Layers of the classifier, expressed as graph builders over named
//! parameters.
//!
//! Parameter naming:
//!
//! | layer            | names                                                        |
//! |------------------|--------------------------------------------------------------|
//! | embedding        | `embedding`                                                  |
//! | conv block       | `conv.w{width}.filters` `[w,d,F]`, `conv.w{width}.bias`      |
//! | BiLSTM           | `lstm.{fwd,bwd}.{w,u,b}` (`[4H,d]`, `[4H,H]`, `[4H]`)          |
//! | attention        | `attn.w_a`, `attn.w_e` (emotion-aware only), `attn.b_a`, `attn.v` |
//! | emoji projection | `emoji_proj.w` `[2H,64]`, `emoji_proj.b`                     |
//! | dense head       | `head.dense.{w,b}`, `head.bn.{gamma,beta,running_mean,running_var}`, `head.out.{w,b}` |

pub mod attention;
pub mod conv;
pub mod dense;
pub mod embedding;
pub mod init;
pub mod lstm;

use serde::{Deserialize, Serialize};

pub use attention::{attention_pool, attention_scores, attention_weights, emoji_project, AttentionKind};
pub use conv::conv_block_forward;
pub use dense::{dense_head, HeadOutput};
pub use embedding::embedding_forward;
pub use init::{Init, ParamSpec};
pub use lstm::{bilstm_forward, lstm_cell};

/// Number of emoji classes in an emotion vector.
pub const EMOJI_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Infer,
}

impl Mode {
    pub fn is_train(self) -> bool {
        self == Mode::Train
    }
}

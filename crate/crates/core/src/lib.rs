//! Offensive-language classifier built from a stacked CNN and BiLSTM with
//! emotion-aware attention, on top of a small `f64` reverse-mode autodiff
//! engine.
//!
//! The crate is organized bottom-up:
//!
//! * [`tensor`], [`graph`], [`params`], [`gradcheck`] - numerics and
//!   differentiation;
//! * [`layers`] - embedding, convolution block, BiLSTM, attention, head;
//! * [`preprocess`] - tokenization, vocabulary, emotion vectors, datasets;
//! * [`model`], [`train`], [`checkpoint`] - the model zoo and its training;
//! * [`eval`] - metrics, significance tests and analyses.

pub mod checkpoint;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod model;
pub mod parallel;
pub mod params;
pub mod preprocess;
pub mod rng;
pub mod synthetic;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Graph, Var};
pub use model::{Model, ModelConfig, Variant};
pub use parallel::Exec;
pub use params::ParameterSet;
pub use tensor::Tensor;

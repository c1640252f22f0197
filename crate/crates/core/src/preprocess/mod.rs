//! From raw posts to model inputs.

pub mod dataset;
pub mod emotion;
pub mod split;
pub mod stats;
pub mod text;
pub mod vocab;

pub use dataset::{dataset_to_string, encode, load_dataset, load_sidecar, save_dataset, Document, Label};
pub use emotion::{average_emoji, binarize_top5, document_emotion, stub_emotion_encoder};
pub use split::{stratified_split, Splits, DEFAULT_RATIOS};
pub use stats::{corpus_stats, CorpusStats};
pub use text::{normalize_and_tokenize, split_sentences, Truncation, MAXLEN};
pub use vocab::{build_vocab, Glove, Vocabulary};

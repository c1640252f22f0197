//! Metrics, significance testing and model analyses.

pub mod emoji_analysis;
pub mod explain;
pub mod mcnemar;
pub mod metrics;

pub use emoji_analysis::{class_emoji_distribution, error_emoji_analysis, ClassEmojiDistribution, ErrorEmojiAnalysis};
pub use explain::{explain, AttentionExplanation};
pub use mcnemar::{mcnemar, mcnemar_counts, McNemar};
pub use metrics::{confusion, evaluate, f1, macro_f1, roc_auc, Confusion, MetricsReport};

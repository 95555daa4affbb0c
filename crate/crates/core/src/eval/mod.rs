//! Evaluation: tree edit distance, exact-match and solve metrics, and
//! n-gram text metrics.

pub mod expr;
pub mod report;
pub mod ted;
pub mod text_metrics;

pub use expr::{evaluate_expression, solve_equal, Bindings, EvalError};
pub use report::{aggregate, score_formulas, score_line, score_predictions, AggregateReport, EvalOptions, EvalReport, LineScore, MeanStd};
pub use ted::{ted, ted_collapsed, tree_match};
pub use text_metrics::{bleu4, corpus_bleu, metric_tokens, rouge_l};

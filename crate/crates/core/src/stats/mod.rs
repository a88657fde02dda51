//! Statistics for coded results tables: one-way ANOVA, paired t-tests with
//! Bonferroni correction, and the distribution functions behind them.

mod anova;
mod coding;
mod report;
pub mod special;
mod ttest;

use thiserror::Error;

pub use anova::{one_way_anova, AnovaResult};
pub use coding::{encode_table, CodedMatrix, GroupAxis};
pub use report::{analyze_matrix, analyze_table, format_p, AnovaSummary, PairwiseResult, StatsConfig, StatsReport};
pub use special::{beta_inc, f_cdf, f_sf, ln_gamma, t_cdf, t_two_tailed};
pub use ttest::{bonferroni, paired_t_test, PairedDegeneracy, PairedT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("incomplete beta failed to converge for a={a}, b={b}, x={x}")]
    NonConvergence { a: f64, b: f64, x: f64 },
    #[error("scenario is not binary: {0}")]
    NonBinaryScenario(String),
}

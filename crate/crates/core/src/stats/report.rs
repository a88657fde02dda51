use serde::{Deserialize, Serialize};

use super::coding::{encode_table, CodedMatrix, GroupAxis};
use super::{bonferroni, one_way_anova, paired_t_test, PairedDegeneracy, StatsError};
use crate::extract::ReasoningLevel;
use crate::harness::ResultsTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub alpha: f64,
    /// Bonferroni family size; `None` means all pairs of groups.
    pub comparisons: Option<usize>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: 0.05,
            comparisons: None,
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StatsError::Domain(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.comparisons == Some(0) {
            return Err(StatsError::Domain("comparisons must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaSummary {
    pub f: f64,
    pub df: (usize, usize),
    pub p: f64,
    pub group_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseResult {
    pub pair: (String, String),
    pub t: f64,
    pub df: usize,
    pub p_raw: f64,
    pub p_corrected: f64,
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<PairedDegeneracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub scenario_id: String,
    pub level: ReasoningLevel,
    pub group_axis: GroupAxis,
    pub groups: Vec<String>,
    pub anova: Option<AnovaSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anova_error: Option<String>,
    pub alpha: f64,
    pub comparisons: usize,
    pub pairwise: Vec<PairwiseResult>,
    pub missing_cell_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// ANOVA over the rows of `matrix`, plus Bonferroni-corrected paired t-tests
/// between every pair of rows when `pairwise` is set. Columns missing in
/// either row of a pair are left out of that pair's test.
pub fn analyze_matrix(
    scenario_id: &str,
    matrix: &CodedMatrix,
    config: &StatsConfig,
    pairwise: bool,
) -> Result<StatsReport, StatsError> {
    config.validate()?;
    let k = matrix.rows.len();
    let mut report = StatsReport {
        scenario_id: scenario_id.to_string(),
        level: matrix.level,
        group_axis: matrix.group_axis,
        groups: matrix.rows.clone(),
        anova: None,
        anova_error: None,
        alpha: config.alpha,
        comparisons: config.comparisons.unwrap_or(k * k.saturating_sub(1) / 2).max(1),
        pairwise: Vec::new(),
        missing_cell_count: matrix.missing_count(),
        notes: Vec::new(),
    };
    match one_way_anova(&matrix.groups()) {
        Ok(a) => {
            report.anova = Some(AnovaSummary {
                f: a.f,
                df: (a.df_between, a.df_within),
                p: a.p,
                group_means: a.group_means,
            })
        }
        Err(e) => report.anova_error = Some(e.to_string()),
    }
    if !pairwise {
        return Ok(report);
    }
    report.notes.push(PAIRWISE_NOTE.to_string());
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = matrix.paired(i, j);
            let label = format!("{} vs {}", matrix.rows[i], matrix.rows[j]);
            match paired_t_test(&a, &b) {
                Ok(t) => {
                    let p_corrected = bonferroni(t.p_raw, report.comparisons)?;
                    report.pairwise.push(PairwiseResult {
                        pair: (matrix.rows[i].clone(), matrix.rows[j].clone()),
                        t: t.t,
                        df: t.df,
                        p_raw: t.p_raw,
                        p_corrected,
                        significant: p_corrected < config.alpha,
                        degenerate: t.degenerate,
                    });
                }
                Err(e) => report.notes.push(format!("{label}: {e}")),
            }
        }
    }
    Ok(report)
}

/// Attached to every report with pairwise tests. Published pairwise
/// p-values computed with another family or correction procedure will not
/// match these.
pub const PAIRWISE_NOTE: &str = "pairwise p-values: two-tailed paired t on d = a - b, Bonferroni over the stated number of comparisons; other correction procedures give different values";

/// The two standard analyses: final decisions grouped by emotion weight
/// (with pairwise tests) and emotional decisions grouped by provider.
pub fn analyze_table(table: &ResultsTable, config: &StatsConfig) -> Result<Vec<StatsReport>, StatsError> {
    let by_weight = encode_table(table, ReasoningLevel::Final, GroupAxis::Ewc)?;
    let by_provider = encode_table(table, ReasoningLevel::Emotional, GroupAxis::Provider)?;
    Ok(vec![
        analyze_matrix(&table.scenario_id, &by_weight, config, true)?,
        analyze_matrix(&table.scenario_id, &by_provider, config, false)?,
    ])
}

/// Four decimals, with very small values shown as `< 0.0001`.
pub fn format_p(p: f64) -> String {
    if p < 0.00005 {
        "< 0.0001".to_string()
    } else {
        format!("= {p:.4}")
    }
}

fn format_stat(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.4}")
    }
}

impl StatsReport {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{}: {} decisions grouped by {}\n",
            self.scenario_id, self.level, self.group_axis
        );
        match (&self.anova, &self.anova_error) {
            (Some(a), _) => {
                out.push_str(&format!(
                    "  ANOVA: F({},{}) = {}, p {}\n",
                    a.df.0,
                    a.df.1,
                    format_stat(a.f),
                    format_p(a.p)
                ));
                let means: Vec<String> = self
                    .groups
                    .iter()
                    .zip(&a.group_means)
                    .map(|(g, m)| format!("{g}={m:.4}"))
                    .collect();
                out.push_str(&format!("  group means: {}\n", means.join(" ")));
            }
            (None, Some(e)) => out.push_str(&format!("  ANOVA: not computed ({e})\n")),
            (None, None) => {}
        }
        if !self.pairwise.is_empty() {
            out.push_str(&format!(
                "  paired t-tests, Bonferroni m = {}, alpha = {}:\n",
                self.comparisons, self.alpha
            ));
            for r in &self.pairwise {
                out.push_str(&format!(
                    "    {} vs {}: t({}) = {}, p {}, corrected p {}{}\n",
                    r.pair.0,
                    r.pair.1,
                    r.df,
                    format_stat(r.t),
                    format_p(r.p_raw),
                    format_p(r.p_corrected),
                    if r.significant { "  *" } else { "" }
                ));
            }
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out.push_str(&format!("  missing cells: {}\n", self.missing_cell_count));
        out
    }
}

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::extract::ReasoningLevel;
use crate::harness::ResultsTable;

/// Which table axis defines the ANOVA groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupAxis {
    Ewc,
    Provider,
}

impl std::fmt::Display for GroupAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupAxis::Ewc => "ewc",
            GroupAxis::Provider => "provider",
        })
    }
}

impl std::str::FromStr for GroupAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ewc" => Ok(GroupAxis::Ewc),
            "provider" => Ok(GroupAxis::Provider),
            other => Err(format!("unknown group axis {other:?}")),
        }
    }
}

/// One reasoning level of a results table coded as 0/1, one row per group.
/// `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedMatrix {
    pub level: ReasoningLevel,
    pub group_axis: GroupAxis,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<u8>>>,
    /// The label coded as 1.
    pub positive_label: String,
}

impl CodedMatrix {
    /// Swaps 0 and 1 everywhere; missing cells stay missing.
    pub fn complement(&self) -> CodedMatrix {
        CodedMatrix {
            cells: self
                .cells
                .iter()
                .map(|r| r.iter().map(|c| c.map(|v| 1 - v)).collect())
                .collect(),
            positive_label: format!("not {}", self.positive_label),
            ..self.clone()
        }
    }

    /// Rows with missing cells dropped, ready for ANOVA.
    pub fn groups(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|r| r.iter().flatten().map(|&v| f64::from(v)).collect())
            .collect()
    }

    pub fn row(&self, key: &str) -> Option<&[Option<u8>]> {
        let i = self.rows.iter().position(|r| r == key)?;
        Some(&self.cells[i])
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// Two rows paired column by column, keeping only columns present in both.
    pub fn paired(&self, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
        self.cells[a]
            .iter()
            .zip(&self.cells[b])
            .filter_map(|(x, y)| Some((f64::from((*x)?), f64::from((*y)?))))
            .unzip()
    }
}

/// Codes one reasoning level of `table`: the emotionally aligned label is 1,
/// the other label 0. Rows are weights or providers depending on `axis`.
pub fn encode_table(table: &ResultsTable, level: ReasoningLevel, axis: GroupAxis) -> Result<CodedMatrix, StatsError> {
    let coding = table
        .coding()
        .ok_or_else(|| StatsError::NonBinaryScenario("table has no label coding".into()))?;
    if coding.labels.len() != 2 {
        return Err(StatsError::NonBinaryScenario(format!(
            "{} labels {:?}",
            coding.labels.len(),
            coding.labels
        )));
    }
    let code = |label: Option<&str>| -> Result<Option<u8>, StatsError> {
        match label {
            None => Ok(None),
            Some(l) if l == coding.emotional_label => Ok(Some(1)),
            Some(l) if coding.labels.iter().any(|k| k == l) => Ok(Some(0)),
            Some(l) => Err(StatsError::NonBinaryScenario(format!("unexpected label {l:?}"))),
        }
    };
    let weights: Vec<String> = table.ewc_levels.iter().map(|w| w.to_string()).collect();
    let (rows, columns, cells) = match axis {
        GroupAxis::Ewc => {
            let cells = (0..weights.len())
                .map(|e| (0..table.providers.len()).map(|p| code(table.cell(level, e, p))).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            (weights, table.providers.clone(), cells)
        }
        GroupAxis::Provider => {
            let cells = (0..table.providers.len())
                .map(|p| (0..weights.len()).map(|e| code(table.cell(level, e, p))).collect())
                .collect::<Result<Vec<Vec<_>>, _>>()?;
            (table.providers.clone(), weights, cells)
        }
    };
    Ok(CodedMatrix {
        level,
        group_axis: axis,
        rows,
        columns,
        cells,
        positive_label: coding.emotional_label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{LabelRule, Pattern};
    use crate::harness::Scenario;
    use crate::reasoning::EmotionWeight;

    fn scenario(labels: &[&str]) -> Scenario {
        Scenario {
            id: "s".into(),
            title: "t".into(),
            description: "d".into(),
            labels: labels
                .iter()
                .enumerate()
                .map(|(i, l)| LabelRule {
                    label: l.to_string(),
                    patterns: vec![Pattern::Substring(l.to_lowercase())],
                    emotional_aligned: i == 0,
                })
                .collect(),
            notes: None,
        }
    }

    fn table(labels: &[&str]) -> ResultsTable {
        let mut t = ResultsTable::empty(
            "s",
            vec!["A".into(), "B".into(), "C".into()],
            vec![EmotionWeight::ZERO, EmotionWeight::ONE],
        );
        t.set(ReasoningLevel::Final, 0, 0, Some("Dog".into()));
        t.set(ReasoningLevel::Final, 0, 1, Some("Owner".into()));
        t.set(ReasoningLevel::Final, 1, 0, Some("Dog".into()));
        t.set(ReasoningLevel::Final, 1, 2, Some("Owner".into()));
        t.with_coding(&scenario(labels))
    }

    #[test]
    fn encode_both_axes() {
        let t = table(&["Dog", "Owner"]);
        let m = encode_table(&t, ReasoningLevel::Final, GroupAxis::Ewc).unwrap();
        assert_eq!(m.rows, ["0.00", "1.00"]);
        assert_eq!(m.cells, vec![vec![Some(1), Some(0), None], vec![Some(1), None, Some(0)]]);
        assert_eq!(m.missing_count(), 2);
        assert_eq!(m.groups(), vec![vec![1.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(m.paired(0, 1), (vec![1.0], vec![1.0]));
        let m = encode_table(&t, ReasoningLevel::Final, GroupAxis::Provider).unwrap();
        assert_eq!(m.rows, ["A", "B", "C"]);
        assert_eq!(m.row("C").unwrap(), &[None, Some(0)]);
    }

    #[test]
    fn complement_flips_every_cell() {
        let t = table(&["Dog", "Owner"]);
        let m = encode_table(&t, ReasoningLevel::Final, GroupAxis::Ewc).unwrap();
        let c = m.complement();
        for (r, rc) in m.cells.iter().zip(&c.cells) {
            for (x, y) in r.iter().zip(rc) {
                assert_eq!(x.map(|v| 1 - v), *y);
            }
        }
        assert_eq!(c.complement().cells, m.cells);
    }

    #[test]
    fn non_binary() {
        let t = table(&["Dog", "Owner", "Both"]);
        assert!(matches!(
            encode_table(&t, ReasoningLevel::Final, GroupAxis::Ewc),
            Err(StatsError::NonBinaryScenario(_))
        ));
        let bare = ResultsTable::empty("s", vec!["A".into()], vec![EmotionWeight::ZERO]);
        assert!(encode_table(&bare, ReasoningLevel::Final, GroupAxis::Ewc).is_err());
        let t = table(&["Dog", "Human"]);
        assert!(encode_table(&t, ReasoningLevel::Final, GroupAxis::Ewc).is_err());
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Scenario, Transcript};
use crate::extract::ReasoningLevel;
use crate::reasoning::EmotionWeight;

/// Marker written for cells without a usable label.
pub const MISSING: &str = "MISSING";

/// Which labels a table's cells may hold, and which one counts as emotional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coding {
    pub labels: Vec<String>,
    pub emotional_label: String,
}

/// Decision labels indexed by reasoning level, emotion weight and provider.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsTable {
    pub scenario_id: String,
    pub providers: Vec<String>,
    pub ewc_levels: Vec<EmotionWeight>,
    cells: Vec<Option<String>>,
    coding: Option<Coding>,
}

fn level_index(level: ReasoningLevel) -> usize {
    match level {
        ReasoningLevel::Logical => 0,
        ReasoningLevel::Emotional => 1,
        ReasoningLevel::Final => 2,
    }
}

impl ResultsTable {
    /// A table with every cell missing.
    pub fn empty(scenario_id: &str, providers: Vec<String>, ewc_levels: Vec<EmotionWeight>) -> Self {
        let n = 3 * providers.len() * ewc_levels.len();
        ResultsTable {
            scenario_id: scenario_id.to_string(),
            providers,
            ewc_levels,
            cells: vec![None; n],
            coding: None,
        }
    }

    fn index(&self, level: ReasoningLevel, ewc_idx: usize, provider_idx: usize) -> usize {
        assert!(ewc_idx < self.ewc_levels.len() && provider_idx < self.providers.len());
        (level_index(level) * self.ewc_levels.len() + ewc_idx) * self.providers.len() + provider_idx
    }

    pub fn cell(&self, level: ReasoningLevel, ewc_idx: usize, provider_idx: usize) -> Option<&str> {
        self.cells[self.index(level, ewc_idx, provider_idx)].as_deref()
    }

    pub fn set(&mut self, level: ReasoningLevel, ewc_idx: usize, provider_idx: usize, label: Option<String>) {
        let i = self.index(level, ewc_idx, provider_idx);
        self.cells[i] = label;
    }

    /// Looks a cell up by value rather than position.
    pub fn get(&self, level: ReasoningLevel, ewc: EmotionWeight, provider: &str) -> Option<&str> {
        let e = self.ewc_levels.iter().position(|w| *w == ewc)?;
        let p = self.providers.iter().position(|n| n == provider)?;
        self.cell(level, e, p)
    }

    pub fn row(&self, level: ReasoningLevel, ewc_idx: usize) -> Vec<Option<&str>> {
        (0..self.providers.len())
            .map(|p| self.cell(level, ewc_idx, p))
            .collect()
    }

    pub fn missing_count(&self, level: Option<ReasoningLevel>) -> usize {
        let block = self.providers.len() * self.ewc_levels.len();
        match level {
            None => self.cells.iter().filter(|c| c.is_none()).count(),
            Some(l) => {
                let start = level_index(l) * block;
                self.cells[start..start + block].iter().filter(|c| c.is_none()).count()
            }
        }
    }

    pub fn with_coding(mut self, scenario: &Scenario) -> Self {
        self.coding = Some(Coding {
            labels: scenario.label_names(),
            emotional_label: scenario.emotional_label().to_string(),
        });
        self
    }

    pub fn coding(&self) -> Option<&Coding> {
        self.coding.as_ref()
    }

    fn ordered_cells(&self) -> impl Iterator<Item = (EmotionWeight, ReasoningLevel, &str, Option<&str>)> {
        self.ewc_levels.iter().enumerate().flat_map(move |(e, &w)| {
            ReasoningLevel::ALL.into_iter().flat_map(move |level| {
                self.providers
                    .iter()
                    .enumerate()
                    .map(move |(p, name)| (w, level, name.as_str(), self.cell(level, e, p)))
            })
        })
    }

    /// Columns `ewc,level,provider,label`, rows ordered by weight, level, provider.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ewc,level,provider,label\n");
        for (w, level, provider, label) in self.ordered_cells() {
            out.push_str(&format!(
                "{w},{level},{},{}\n",
                csv_field(provider),
                csv_field(label.unwrap_or(MISSING))
            ));
        }
        out
    }

    /// Aligned text grid: one block of three level rows per weight, one column per provider.
    pub fn render_text(&self) -> String {
        let mut header = vec!["EWC".to_string(), "Level".to_string()];
        header.extend(self.providers.iter().cloned());
        let mut rows = vec![header];
        for (e, w) in self.ewc_levels.iter().enumerate() {
            for (i, level) in ReasoningLevel::ALL.into_iter().enumerate() {
                let mut row = vec![if i == 0 { w.to_string() } else { String::new() }, level.to_string()];
                row.extend(self.row(level, e).into_iter().map(|c| c.unwrap_or("-").to_string()));
                rows.push(row);
            }
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("Scenario: {}\n", self.scenario_id);
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// The label most trials agree on; `None` when nothing was classified or
/// the top count is shared.
fn majority<'a>(labels: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = *counts.values().max()?;
    let mut winners = counts.into_iter().filter(|(_, c)| *c == top);
    let (label, _) = winners.next()?;
    winners.next().is_none().then(|| label.to_string())
}

/// Builds one scenario's table. Providers keep their order of first
/// appearance; weights are sorted ascending.
pub fn assemble_table(transcripts: &[Transcript]) -> Result<ResultsTable, HarnessError> {
    let scenarios: BTreeSet<&str> = transcripts.iter().map(|t| t.scenario_id.as_str()).collect();
    match scenarios.len() {
        0 => return Err(HarnessError::EmptyInput),
        1 => {}
        _ => return Err(HarnessError::MixedScenario(scenarios.into_iter().map(String::from).collect())),
    }
    let mut providers: Vec<String> = Vec::new();
    for t in transcripts {
        if !providers.contains(&t.provider) {
            providers.push(t.provider.clone());
        }
    }
    let ewc_levels: Vec<EmotionWeight> = transcripts
        .iter()
        .map(|t| t.ewc)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut by_cell: HashMap<(usize, usize), Vec<&Transcript>> = HashMap::new();
    for t in transcripts {
        let p = providers.iter().position(|n| *n == t.provider).expect("collected above");
        let e = ewc_levels.binary_search(&t.ewc).expect("collected above");
        by_cell.entry((e, p)).or_default().push(t);
    }

    let mut table = ResultsTable::empty(&transcripts[0].scenario_id, providers, ewc_levels);
    for ((e, p), trials) in by_cell {
        for level in ReasoningLevel::ALL {
            let label = majority(trials.iter().filter_map(|t| t.label(level)));
            table.set(level, e, p, label);
        }
    }
    Ok(table)
}

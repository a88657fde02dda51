use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::extract::{LabelRule, RuleSet};

/// A situation description plus the labels its decisions are coded into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub title: String,
    pub description: String,
    pub labels: Vec<LabelRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let schema = |m: String| Err(HarnessError::Schema(format!("scenario {:?}: {m}", self.id)));
        if self.id.is_empty()
            || !self
                .id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return schema("id must be a nonempty identifier ([A-Za-z0-9_-])".into());
        }
        if self.description.trim().is_empty() {
            return schema("description is empty".into());
        }
        if self.labels.len() < 2 {
            return schema(format!("needs at least 2 labels, has {}", self.labels.len()));
        }
        let aligned = self.labels.iter().filter(|l| l.emotional_aligned).count();
        if aligned != 1 {
            return schema(format!("exactly one label must be emotional_aligned, found {aligned}"));
        }
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l.label.as_str()) {
                return schema(format!("duplicate label {:?}", l.label));
            }
        }
        RuleSet::compile(&self.labels).map_err(|e| HarnessError::Schema(format!("scenario {:?}: {e}", self.id)))?;
        Ok(())
    }

    pub fn emotional_label(&self) -> &str {
        self.labels
            .iter()
            .find(|l| l.emotional_aligned)
            .map(|l| l.label.as_str())
            .unwrap_or_default()
    }

    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.label.clone()).collect()
    }

    pub fn rules(&self) -> Result<RuleSet, HarnessError> {
        RuleSet::compile(&self.labels).map_err(|e| HarnessError::Schema(e.to_string()))
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, HarnessError> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        HarnessError::Schema(m) => HarnessError::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), HarnessError> {
    scenario.validate()?;
    let mut text = serde_json::to_string_pretty(scenario).expect("scenario serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Pattern;

    pub(crate) fn scenario() -> Scenario {
        Scenario {
            id: "animal".into(),
            title: "Animal compassion".into(),
            description: "The dog is hungry.".into(),
            labels: vec![
                LabelRule {
                    label: "Dog".into(),
                    patterns: vec![Pattern::Substring("dog".into())],
                    emotional_aligned: true,
                },
                LabelRule {
                    label: "Owner".into(),
                    patterns: vec![Pattern::Regex { regex: "owner|human".into() }],
                    emotional_aligned: false,
                },
            ],
            notes: Some("binning note".into()),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let s = scenario();
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }

    #[test]
    fn zero_labels_rejected() {
        let mut s = scenario();
        s.labels.clear();
        let text = serde_json::to_string(&s).unwrap();
        assert!(matches!(parse_scenario(&text), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn two_emotional_labels_rejected() {
        let mut s = scenario();
        s.labels[1].emotional_aligned = true;
        let text = serde_json::to_string(&s).unwrap();
        assert!(matches!(parse_scenario(&text), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn other_schema_errors() {
        let mut s = scenario();
        s.description = "  ".into();
        assert!(s.validate().is_err());
        let mut s = scenario();
        s.labels[1].label = "Dog".into();
        assert!(s.validate().is_err());
        assert!(parse_scenario("{\"id\": \"x\"}").is_err());
        let mut v = serde_json::to_value(scenario()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(parse_scenario(&v.to_string()).is_err());
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(load_scenario(Path::new("/nonexistent/s.json")), Err(HarnessError::Io { .. })));
    }

    #[test]
    fn emotional_label_lookup() {
        assert_eq!(scenario().emotional_label(), "Dog");
    }
}

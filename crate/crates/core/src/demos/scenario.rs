//! Scenario files (`.scn`): one JSON object per line, `#` starts a comment.
//!
//! Every record has `at` (the tick it applies at) and exactly one of
//! `gesture`, `tick`, `expect`, `rule`, `dataset_row`.
//!
//! ```text
//! # type a formula into two windows
//! {"at": 0, "gesture": "new_window"}
//! {"at": 0, "gesture": "edit A1 =()", "view": 1}
//! {"at": 0, "expect": {"view": 0, "render": {"set_text": {"property": "A1", "text": "=()"}}}}
//! {"at": 0, "tick": 3}
//! ```

use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

use crate::validation::Rule;
use crate::value::{PropertyValue, Snapshot};
use crate::vocab::{Gesture, RenderCommand};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default)]
    pub view: Option<usize>,
    pub render: RenderCommand,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRow {
    pub entity: String,
    pub row: IndexMap<String, PropertyValue>,
}

impl DatasetRow {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_pairs(self.row.iter().map(|(k, v)| (k.clone(), v.clone())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Gesture(Gesture),
    Tick(u64),
    Expect(Expect),
    Rule(Rule),
    DatasetRow(DatasetRow),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub line: usize,
    pub at: u64,
    /// 1-based triad index within the demo.
    pub triad: usize,
    pub view: usize,
    pub action: Action,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    at: u64,
    #[serde(default)]
    triad: Option<usize>,
    #[serde(default)]
    view: Option<usize>,
    #[serde(default)]
    gesture: Option<String>,
    #[serde(default)]
    tick: Option<u64>,
    #[serde(default)]
    expect: Option<Expect>,
    #[serde(default)]
    rule: Option<Rule>,
    #[serde(default)]
    dataset_row: Option<DatasetRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scenario {
    pub records: Vec<Record>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut records = Vec::new();
        let mut last_at = 0;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |message: String| ParseError { line, message };
            let raw: RawRecord = serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
            let mut actions = Vec::new();
            if let Some(g) = raw.gesture {
                actions.push(Action::Gesture(g.parse().map_err(|e| err(format!("{e}")))?));
            }
            if let Some(n) = raw.tick {
                actions.push(Action::Tick(n));
            }
            if let Some(e) = raw.expect {
                actions.push(Action::Expect(e));
            }
            if let Some(r) = raw.rule {
                actions.push(Action::Rule(r));
            }
            if let Some(d) = raw.dataset_row {
                actions.push(Action::DatasetRow(d));
            }
            if actions.len() != 1 {
                return Err(err(format!(
                    "expected exactly one of gesture/tick/expect/rule/dataset_row, found {}",
                    actions.len()
                )));
            }
            if raw.at < last_at {
                return Err(err(format!("at {} is before {last_at}", raw.at)));
            }
            last_at = raw.at;
            if raw.triad == Some(0) {
                return Err(err("triads are numbered from 1".into()));
            }
            records.push(Record {
                line,
                at: raw.at,
                triad: raw.triad.unwrap_or(1),
                view: raw.view.unwrap_or(0),
                action: actions.pop().expect("one action"),
            });
        }
        Ok(Self { records })
    }

    pub fn rules(&self) -> impl Iterator<Item = (usize, &Rule)> {
        self.records.iter().filter_map(|r| match &r.action {
            Action::Rule(rule) => Some((r.triad, rule)),
            _ => None,
        })
    }

    pub fn dataset_rows(&self) -> impl Iterator<Item = &DatasetRow> {
        self.records.iter().filter_map(|r| match &r.action {
            Action::DatasetRow(d) => Some(d),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_record_kind() {
        let text = r##"
# comment
{"at": 0, "gesture": "edit A1 =()", "view": 1}
{"at": 0, "tick": 3}
{"at": 3, "expect": {"render": {"show_busy": {"busy": false}}}}
{"at": 3, "rule": {"required": "A1"}}
{"at": 3, "dataset_row": {"entity": "employee", "row": {"id": {"integer": 1}}}}
"##;
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.records.len(), 5);
        assert_eq!(s.records[0].line, 3);
        assert_eq!(s.records[0].view, 1);
        assert!(matches!(s.records[1].action, Action::Tick(3)));
        assert_eq!(s.rules().count(), 1);
        assert_eq!(s.dataset_rows().next().unwrap().snapshot().id(), Some(1));
    }

    #[test]
    fn two_actions_is_an_error() {
        let err = Scenario::parse("{\"at\": 0, \"tick\": 1, \"gesture\": \"open\"}").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn unknown_command_reports_line() {
        let err = Scenario::parse("\n{\"at\": 0, \"gesture\": \"launch\"}").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn time_cannot_go_backwards() {
        let text = "{\"at\": 5, \"tick\": 1}\n{\"at\": 2, \"tick\": 1}";
        assert_eq!(Scenario::parse(text).unwrap_err().line, 2);
    }
}

//! Flow audit: the bus log boiled down to who-talked-to-whom counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bus::{ComponentId, ComponentKind, ForbiddenEdge, Payload, RunLog};
use crate::model::PortReply;
use crate::vocab::{PromptKind, RenderCommand};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeCount {
    pub source: ComponentKind,
    pub target: ComponentKind,
    pub verb: String,
    pub mutating: bool,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub tick: u64,
    pub seq: u64,
    pub source: ComponentId,
    pub target: ComponentId,
    pub kind: PromptKind,
}

/// A model commit and whether the validation just before it was clean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitGate {
    pub seq: u64,
    pub model: ComponentId,
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRender {
    pub seq: u64,
    pub source: ComponentId,
    pub view: ComponentId,
    pub verb: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    /// Sorted by (source, target, verb, mutating).
    pub edges: Vec<EdgeCount>,
    /// Transcript lines of every message addressed to each view.
    pub views: BTreeMap<String, Vec<String>>,
    pub prompts: Vec<PromptRecord>,
    pub rejected: Vec<ForbiddenEdge>,
    pub commit_gates: Vec<CommitGate>,
    /// Mutator replies that carried an error.
    pub mutator_errors: usize,
    /// Render commands carrying model data, by who sent them.
    pub data_renders: Vec<DataRender>,
}

impl FlowReport {
    /// Messages from `source` kind to `target` kind, any verb.
    pub fn count(&self, source: ComponentKind, target: ComponentKind) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source == source && e.target == target)
            .map(|e| e.count)
            .sum()
    }

    pub fn count_verb(&self, source: ComponentKind, target: ComponentKind, verb: &str) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source == source && e.target == target && e.verb == verb)
            .map(|e| e.count)
            .sum()
    }

    pub fn count_mutating(&self, source: ComponentKind, target: ComponentKind) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source == source && e.target == target && e.mutating)
            .map(|e| e.count)
            .sum()
    }

    pub fn total(&self) -> usize {
        self.edges.iter().map(|e| e.count).sum()
    }
}

const MUTATORS: [&str; 3] = ["set", "mutate", "mutate_batch"];

/// Pure aggregation of a run log.
pub fn audit(log: &RunLog) -> FlowReport {
    let mut edges: BTreeMap<(ComponentKind, ComponentKind, String, bool), usize> = BTreeMap::new();
    let mut report = FlowReport {
        rejected: log.rejected.clone(),
        ..FlowReport::default()
    };
    // last validation outcome per model
    let mut last_validate: BTreeMap<ComponentId, bool> = BTreeMap::new();
    for env in &log.envelopes {
        *edges
            .entry((env.source.kind, env.target.kind, env.verb.clone(), env.mutating))
            .or_default() += 1;
        if env.target.kind == ComponentKind::View {
            report
                .views
                .entry(env.target.to_string())
                .or_default()
                .push(env.transcript_line());
        }
        match &env.payload {
            Payload::Render(RenderCommand::Prompt { kind, .. }) => {
                report.prompts.push(PromptRecord {
                    tick: env.tick,
                    seq: env.seq,
                    source: env.source,
                    target: env.target,
                    kind: *kind,
                });
            }
            Payload::Render(cmd) if cmd.carries_data() => report.data_renders.push(DataRender {
                seq: env.seq,
                source: env.source,
                view: env.target,
                verb: env.verb.clone(),
            }),
            Payload::Reply(reply) if env.source.kind == ComponentKind::Model => {
                if env.verb == "validate" {
                    if let PortReply::Report(r) = reply {
                        last_validate.insert(env.source, r.is_clean());
                    }
                }
                if MUTATORS.contains(&env.verb.as_str())
                    && matches!(reply, PortReply::Rejected(_) | PortReply::Refused(_))
                {
                    report.mutator_errors += 1;
                }
            }
            Payload::Call(_) if env.verb == "commit" && env.target.kind == ComponentKind::Model => {
                report.commit_gates.push(CommitGate {
                    seq: env.seq,
                    model: env.target,
                    gated: last_validate.get(&env.target).copied().unwrap_or(false),
                });
            }
            Payload::Call(_) if env.target.kind == ComponentKind::Model && env.mutating => {
                // any change after a validation makes it stale
                last_validate.remove(&env.target);
            }
            _ => {}
        }
    }
    report.edges = edges
        .into_iter()
        .map(|((source, target, verb, mutating), count)| EdgeCount {
            source,
            target,
            verb,
            mutating,
            count,
        })
        .collect();
    report
}

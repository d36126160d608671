//! Deterministic scenario replay.

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::demos::scenario::{Action, ParseError, Scenario};
use crate::demos::{DemoDescriptor, DemoName, DemoOptions};
use crate::session::Session;
use crate::triad::AssembleError;
use crate::vocab::RenderCommand;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub text: String,
    /// Hex SHA-256 of `text`.
    pub digest: String,
}

impl Transcript {
    pub fn new(text: String) -> Self {
        let digest = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Self { text, digest }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: expected {expected:?} on view {view} by tick {tick}, seq {seq}; not rendered")]
    Expectation {
        line: usize,
        tick: u64,
        /// Next sequence number at the point of divergence.
        seq: u64,
        view: usize,
        expected: RenderCommand,
    },
    #[error("line {line}: demo has no triad {triad} or view {view}")]
    Target { line: usize, triad: usize, view: usize },
    #[error("wiring: {0}")]
    Wiring(String),
}

impl From<AssembleError> for ReplayError {
    fn from(e: AssembleError) -> Self {
        ReplayError::Wiring(e.to_string())
    }
}

/// A finished replay: the transcript plus the session for inspection.
pub struct Replayed {
    pub transcript: Transcript,
    pub session: Session,
}

pub fn replay(
    demo: DemoName,
    scenario: &Scenario,
    opts: DemoOptions,
) -> Result<Transcript, ReplayError> {
    replay_session(demo, scenario, opts).map(|r| r.transcript)
}

pub fn replay_text(demo: DemoName, text: &str, opts: DemoOptions) -> Result<Transcript, ReplayError> {
    replay(demo, &Scenario::parse(text)?, opts)
}

/// Rules and dataset rows are setup: they apply before anything else runs.
/// Gestures the controller refuses are part of the run, not errors.
pub fn replay_session(
    demo: DemoName,
    scenario: &Scenario,
    opts: DemoOptions,
) -> Result<Replayed, ReplayError> {
    let descriptor = DemoDescriptor::get(demo);
    let mut specs = descriptor.specs.clone();
    for record in &scenario.records {
        if let Action::Rule(rule) = &record.action {
            let spec = specs.get_mut(record.triad - 1).ok_or(ReplayError::Target {
                line: record.line,
                triad: record.triad,
                view: record.view,
            })?;
            spec.ruleset.push(rule.clone());
        }
    }
    let mut plan = descriptor.plan_with(opts);
    for row in scenario.dataset_rows() {
        plan.dataset.push_row(&row.entity, row.snapshot());
    }
    let (mut session, ids) = descriptor.launch_with(plan, &specs)?;

    let mut cursor = 0;
    for record in &scenario.records {
        let now = session.now();
        if record.at > now {
            session.tick(record.at - now);
        }
        let target = ReplayError::Target {
            line: record.line,
            triad: record.triad,
            view: record.view,
        };
        let Some(&id) = ids.get(record.triad - 1) else {
            return Err(target);
        };
        match &record.action {
            Action::Gesture(g) => {
                if record.view >= session.views(id).len() {
                    return Err(target);
                }
                let _ = session.dispatch_from(id, record.view, g.clone());
            }
            Action::Tick(n) => {
                session.tick(*n);
            }
            Action::Expect(expect) => {
                let view = expect.view.unwrap_or(record.view);
                let Some(state) = session.views(id).get(view) else {
                    return Err(target);
                };
                let view_id = state.id;
                let found = session.rendered()[cursor..]
                    .iter()
                    .position(|r| r.view == view_id && r.command == expect.render);
                match found {
                    Some(offset) => cursor += offset + 1,
                    None => {
                        return Err(ReplayError::Expectation {
                            line: record.line,
                            tick: session.now(),
                            seq: session.bus().peek_seq(),
                            view,
                            expected: expect.render.clone(),
                        })
                    }
                }
            }
            Action::Rule(_) | Action::DatasetRow(_) => {}
        }
    }

    if demo == DemoName::Refdata {
        let types: Vec<&str> = ids.iter().map(|&id| session.controller_type(id)).collect();
        if types.windows(2).any(|w| w[0] != w[1]) {
            return Err(ReplayError::Wiring(format!(
                "reference data triads use different controllers: {}",
                types.join(", ")
            )));
        }
    }

    Ok(Replayed {
        transcript: Transcript::new(session.transcript()),
        session,
    })
}

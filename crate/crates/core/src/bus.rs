//! The instrumented message bus every cross-component message travels on.
//!
//! Each message becomes an [`EventEnvelope`] with a `(tick, seq)` stamp; seq is
//! global and never reused, so the log order is the emission order. The bus
//! also refuses edges the owning triad's pattern forbids, and keeps a
//! diagnostics side channel that never reaches views.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ChangeNotice, ModelEvent, PortCall, PortReply};
use crate::services::{Request, ServiceEvent};
use crate::triad::Pattern;
use crate::vocab::{Gesture, RenderCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Controller,
    View,
    Model,
    Service,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Controller => "Controller",
            ComponentKind::View => "View",
            ComponentKind::Model => "Model",
            ComponentKind::Service => "Service",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriadId(pub u32);

impl fmt::Display for TriadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Address of one component. The services layer is shared and has no triad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentId {
    pub kind: ComponentKind,
    pub triad: Option<TriadId>,
    pub index: u32,
}

impl ComponentId {
    pub const SERVICES: ComponentId = ComponentId {
        kind: ComponentKind::Service,
        triad: None,
        index: 0,
    };

    pub fn controller(triad: TriadId) -> Self {
        Self {
            kind: ComponentKind::Controller,
            triad: Some(triad),
            index: 0,
        }
    }

    pub fn model(triad: TriadId) -> Self {
        Self {
            kind: ComponentKind::Model,
            triad: Some(triad),
            index: 0,
        }
    }

    pub fn view(triad: TriadId, index: u32) -> Self {
        Self {
            kind: ComponentKind::View,
            triad: Some(triad),
            index,
        }
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.triad) {
            (ComponentKind::Service, _) | (_, None) => f.write_str("services"),
            (ComponentKind::Controller, Some(t)) => write!(f, "{t}.controller"),
            (ComponentKind::Model, Some(t)) => write!(f, "{t}.model"),
            (ComponentKind::View, Some(t)) => write!(f, "{t}.view{}", self.index),
        }
    }
}

/// Controller-to-view and view-to-controller control messages that are not
/// user-visible render output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    /// The model is ready; an active view may start reading it.
    Bind,
    /// Re-read the model and redraw.
    Refresh,
    PullCache,
    ClearCache,
    /// Pending view-side input, in schema order.
    Cache(Vec<(String, String)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Gesture(Gesture),
    Render(RenderCommand),
    Request(Request),
    Service(ServiceEvent),
    Change(ChangeNotice),
    Call(PortCall),
    Reply(PortReply),
    ModelEvent(ModelEvent),
    Signal(Signal),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub tick: u64,
    pub seq: u64,
    pub source: ComponentId,
    pub target: ComponentId,
    pub verb: String,
    pub mutating: bool,
    pub payload: Payload,
}

impl EventEnvelope {
    /// `tick seq source->target verb payload`, payload as canonical JSON with
    /// sorted object keys.
    pub fn transcript_line(&self) -> String {
        let value = serde_json::to_value(&self.payload).expect("payload serializes");
        format!(
            "{} {} {}->{} {} {}",
            self.tick, self.seq, self.source, self.target, self.verb, value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("forbidden edge {source_kind}->{target_kind} ({verb}) under {pattern}")]
pub struct ForbiddenEdge {
    pub tick: u64,
    pub sender: ComponentId,
    pub receiver: ComponentId,
    pub source_kind: ComponentKind,
    pub target_kind: ComponentKind,
    pub verb: String,
    pub mutating: bool,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    UnhandledEvent,
    UnknownGesture,
    StaleCompletion,
    ForbiddenEdge,
    NotBound,
    WiringError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub tick: u64,
    pub kind: DiagnosticKind,
    pub component: Option<ComponentId>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = serde_json::to_value(self.kind).expect("kind serializes");
        let kind = kind.as_str().unwrap_or_default().to_string();
        match &self.component {
            Some(c) => write!(f, "{} {kind} {c}: {}", self.tick, self.message),
            None => write!(f, "{} {kind}: {}", self.tick, self.message),
        }
    }
}

/// Edges a pattern never allows, checked before a message is logged.
pub fn edge_forbidden(
    pattern: Pattern,
    source: ComponentKind,
    target: ComponentKind,
    mutating: bool,
) -> bool {
    use ComponentKind::*;
    let universal = match (source, target) {
        (View, Service) | (Service, View) => true,
        (View, Model) => mutating,
        _ => false,
    };
    if universal {
        return true;
    }
    match pattern {
        Pattern::PassiveView => matches!((source, target), (View, Model) | (Model, View)),
        Pattern::ClosedModel | Pattern::OpenModel | Pattern::DisconnectedModel => {
            matches!((source, target), (Model, Service) | (Service, Model))
        }
        Pattern::ModelAsServicesFacade => {
            matches!((source, target), (Controller, Service) | (Service, Controller))
        }
        Pattern::ActiveView => false,
    }
}

/// Everything a finished run recorded, as consumed by the auditor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub envelopes: Vec<EventEnvelope>,
    pub rejected: Vec<ForbiddenEdge>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RunLog {
    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for env in &self.envelopes {
            out.push_str(&env.transcript_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Default)]
pub struct Bus {
    log: Vec<EventEnvelope>,
    rejected: Vec<ForbiddenEdge>,
    diagnostics: Vec<Diagnostic>,
    next_seq: u64,
    tick: u64,
    patterns: BTreeMap<TriadId, Pattern>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, triad: TriadId, pattern: Pattern) {
        self.patterns.insert(triad, pattern);
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub(crate) fn set_tick(&mut self, tick: u64) {
        debug_assert!(tick >= self.tick);
        self.tick = tick;
    }

    /// Next seq the bus will hand out.
    pub fn peek_seq(&self) -> u64 {
        self.next_seq
    }

    fn pattern_for(&self, source: &ComponentId, target: &ComponentId) -> Option<Pattern> {
        source
            .triad
            .or(target.triad)
            .and_then(|t| self.patterns.get(&t).copied())
    }

    /// Logs one message, or refuses it if the pattern forbids the edge.
    pub fn send(
        &mut self,
        source: ComponentId,
        target: ComponentId,
        verb: impl Into<String>,
        mutating: bool,
        payload: Payload,
    ) -> Result<u64, ForbiddenEdge> {
        let verb = verb.into();
        if let Some(pattern) = self.pattern_for(&source, &target) {
            if edge_forbidden(pattern, source.kind, target.kind, mutating) {
                let err = ForbiddenEdge {
                    tick: self.tick,
                    sender: source,
                    receiver: target,
                    source_kind: source.kind,
                    target_kind: target.kind,
                    verb,
                    mutating,
                    pattern,
                };
                self.rejected.push(err.clone());
                self.diagnose(DiagnosticKind::ForbiddenEdge, Some(source), err.to_string());
                return Err(err);
            }
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.log.push(EventEnvelope {
            tick: self.tick,
            seq,
            source,
            target,
            verb,
            mutating,
            payload,
        });
        Ok(seq)
    }

    pub fn diagnose(
        &mut self,
        kind: DiagnosticKind,
        component: Option<ComponentId>,
        message: impl Into<String>,
    ) {
        self.diagnostics.push(Diagnostic {
            tick: self.tick,
            kind,
            component,
            message: message.into(),
        });
    }

    pub fn log(&self) -> &[EventEnvelope] {
        &self.log
    }

    pub fn rejected(&self) -> &[ForbiddenEdge] {
        &self.rejected
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn run_log(&self) -> RunLog {
        RunLog {
            envelopes: self.log.clone(),
            rejected: self.rejected.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

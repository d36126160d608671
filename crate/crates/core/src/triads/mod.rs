//! Pattern blueprints: the controller choreography of each MVC variant.
//!
//! Blueprints never touch each other's state. Every interaction goes through
//! [`Cx`], which stamps it on the bus before (or instead of) performing it.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{Bus, ComponentId, ComponentKind, DiagnosticKind, ForbiddenEdge, Payload, Signal, TriadId};
use crate::model::{ChangeNotice, Model, ModelEvent, PortCall, PortReply, PortVerb, ReadRefused};
use crate::services::{Request, RequestId, ServiceEvent, ServiceSim};
use crate::triad::{Pattern, TriadSpec};
use crate::value::Snapshot;
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

pub mod mask;

mod closed;
mod disconnected;
mod facade;
mod open;
mod passive;

pub use closed::FormController;
pub use disconnected::{PageCursor, PagerController};
pub use facade::GenericController;
pub use mask::{mask_step, Mask, MaskStep};
pub use open::SheetController;
pub use passive::MaskController;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DispatchError {
    #[error("{verb} is not accepted here: {reason}")]
    UnknownGesture { verb: String, reason: String },
    #[error(transparent)]
    ForbiddenEdge(#[from] ForbiddenEdge),
    #[error("no triad {0}")]
    UnknownTriad(TriadId),
    #[error("no view {0} in this triad")]
    UnknownView(usize),
}

pub(crate) fn refuse(gesture: &Gesture, reason: impl Into<String>) -> DispatchError {
    DispatchError::UnknownGesture {
        verb: gesture.verb().to_string(),
        reason: reason.into(),
    }
}

/// Pending, uncommitted input a closed-model view keeps to itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViewCache {
    pub entries: IndexMap<String, String>,
}

impl ViewCache {
    pub fn is_dirty(&self) -> bool {
        !self.entries.is_empty()
    }
}

/// A user decision the controller is waiting for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptState<Op> {
    pub kind: PromptKind,
    pub pending: Op,
}

impl<Op> PromptState<Op> {
    pub fn accepts(&self, command: CommandName) -> bool {
        self.kind.options().contains(&command)
    }
}

/// One headless view surface: what it was told to show, plus a shadow of
/// the resulting screen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewState {
    pub id: ComponentId,
    pub kind: String,
    pub attached: bool,
    /// Has read the model at least once (active/open views).
    pub bound: bool,
    pub display: Vec<RenderCommand>,
    pub fields: IndexMap<String, String>,
    pub page: Option<(Vec<Snapshot>, u32, u32)>,
    pub cache: Option<ViewCache>,
    pub busy: bool,
}

impl ViewState {
    pub(crate) fn new(id: ComponentId, kind: &str, cached: bool) -> Self {
        Self {
            id,
            kind: kind.to_string(),
            attached: true,
            bound: false,
            display: Vec::new(),
            fields: IndexMap::new(),
            page: None,
            cache: cached.then(ViewCache::default),
            busy: false,
        }
    }

    pub(crate) fn show(&mut self, command: RenderCommand) {
        match &command {
            RenderCommand::SetText { property, text } => {
                self.fields.insert(property.clone(), text.clone());
            }
            RenderCommand::SetCharAt {
                property,
                position,
                character,
            } => {
                let field = self.fields.entry(property.clone()).or_default();
                let mut chars: Vec<char> = field.chars().collect();
                if chars.len() <= *position {
                    chars.resize(*position + 1, ' ');
                }
                chars[*position] = *character;
                *field = chars.into_iter().collect();
            }
            RenderCommand::ShowPage {
                rows,
                page,
                page_count,
            } => self.page = Some((rows.clone(), *page, *page_count)),
            RenderCommand::ShowBusy { busy } => self.busy = *busy,
            _ => {}
        }
        self.display.push(command);
    }
}

/// A render command as it reached a view, stamped with the causing message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rendered {
    pub tick: u64,
    pub seq: u64,
    pub view: ComponentId,
    pub command: RenderCommand,
}

/// Who gets a request's terminal event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Owner {
    pub triad: TriadId,
    pub kind: ComponentKind,
}

/// Everything a blueprint may touch while handling one message.
pub(crate) struct Cx<'a> {
    pub triad: TriadId,
    pub spec: &'a TriadSpec,
    pub bus: &'a mut Bus,
    pub services: &'a mut ServiceSim,
    pub owners: &'a mut BTreeMap<RequestId, Owner>,
    pub model: &'a mut Model,
    pub views: &'a mut Vec<ViewState>,
    pub rendered: &'a mut Vec<Rendered>,
    /// View the current gesture came from.
    pub origin: usize,
    /// Seq of the message being handled.
    pub cause: u64,
}

type Sent = Result<(), ForbiddenEdge>;

impl Cx<'_> {
    pub fn controller(&self) -> ComponentId {
        ComponentId::controller(self.triad)
    }

    pub fn model_id(&self) -> ComponentId {
        ComponentId::model(self.triad)
    }

    pub fn diagnose(&mut self, kind: DiagnosticKind, message: impl Into<String>) {
        let me = self.controller();
        self.bus.diagnose(kind, Some(me), message);
    }

    fn deliver(&mut self, view: usize, seq: u64, command: RenderCommand) {
        let v = &mut self.views[view];
        self.rendered.push(Rendered {
            tick: self.bus.tick(),
            seq,
            view: v.id,
            command: command.clone(),
        });
        v.show(command);
    }

    /// Controller -> view render. Detached views are skipped.
    pub fn render(&mut self, view: usize, command: RenderCommand) -> Sent {
        if !self.views.get(view).is_some_and(|v| v.attached) {
            return Ok(());
        }
        let seq = self.bus.send(
            self.controller(),
            self.views[view].id,
            command.verb(),
            false,
            Payload::Render(command.clone()),
        )?;
        self.deliver(view, seq, command);
        Ok(())
    }

    pub fn render_origin(&mut self, command: RenderCommand) -> Sent {
        self.render(self.origin, command)
    }

    pub fn render_all(&mut self, command: RenderCommand) -> Sent {
        for i in 0..self.views.len() {
            self.render(i, command.clone())?;
        }
        Ok(())
    }

    /// A view echoing its own input locally. Not a bus message.
    pub fn echo(&mut self, view: usize, seq: u64, command: RenderCommand) {
        self.deliver(view, seq, command);
    }

    /// Controller -> model call through the controller port.
    pub fn call(&mut self, call: PortCall) -> Sent {
        let verb = call.verb();
        self.bus.send(
            self.controller(),
            self.model_id(),
            verb.as_str(),
            verb.is_mutating(),
            Payload::Call(call),
        )?;
        Ok(())
    }

    /// Model -> controller return value of the previous call.
    pub fn reply(&mut self, verb: PortVerb, reply: PortReply) -> Sent {
        self.bus.send(
            self.model_id(),
            self.controller(),
            verb.as_str(),
            false,
            Payload::Reply(reply),
        )?;
        Ok(())
    }

    /// Model -> controller asynchronous notification.
    pub fn model_event(&mut self, event: ModelEvent) -> Sent {
        let verb = match event {
            ModelEvent::Loaded { .. } => "loaded",
            ModelEvent::Saved { .. } => "saved",
            ModelEvent::Fault { .. } => "fault",
        };
        self.bus.send(
            self.model_id(),
            self.controller(),
            verb,
            false,
            Payload::ModelEvent(event),
        )?;
        Ok(())
    }

    pub fn signal(&mut self, view: usize, signal: Signal) -> Sent {
        let verb = signal_verb(&signal);
        self.bus.send(
            self.controller(),
            self.views[view].id,
            verb,
            false,
            Payload::Signal(signal),
        )?;
        Ok(())
    }

    /// View -> controller answer to a signal (e.g. the pulled cache).
    pub fn view_answer(&mut self, view: usize, signal: Signal) -> Sent {
        let verb = signal_verb(&signal);
        self.bus.send(
            self.views[view].id,
            self.controller(),
            verb,
            false,
            Payload::Signal(signal),
        )?;
        Ok(())
    }

    /// Observer broadcast: model -> every attached, bound view.
    pub fn notify(&mut self, change: &ChangeNotice) -> Sent {
        for i in 0..self.views.len() {
            if !(self.views[i].attached && self.views[i].bound) {
                continue;
            }
            let seq = self.bus.send(
                self.model_id(),
                self.views[i].id,
                "changed",
                false,
                Payload::Change(change.clone()),
            )?;
            let text = change.new.display_text();
            self.deliver(i, seq, RenderCommand::set_text(&change.property, text));
        }
        Ok(())
    }

    /// The view pulls the whole model through its read port and redraws.
    /// `Ok(false)` when the model refused (not bound yet).
    pub fn view_read(&mut self, view: usize) -> Result<bool, ForbiddenEdge> {
        if !self.views[view].attached {
            return Ok(false);
        }
        let id = self.views[view].id;
        self.bus.send(
            id,
            self.model_id(),
            PortVerb::ReadAll.as_str(),
            false,
            Payload::Call(PortCall::ReadAll),
        )?;
        let snapshot = match self.model.view_port().read_all() {
            Ok(s) => s,
            Err(ReadRefused::NotBound | ReadRefused::UnknownProperty(_)) => {
                self.bus.diagnose(
                    DiagnosticKind::NotBound,
                    Some(id),
                    "view read refused: model not loaded",
                );
                return Ok(false);
            }
        };
        let seq = self.bus.send(
            self.model_id(),
            id,
            PortVerb::ReadAll.as_str(),
            false,
            Payload::Reply(PortReply::Snapshot(snapshot.clone())),
        )?;
        for (property, value) in snapshot.entries() {
            self.deliver(view, seq, RenderCommand::set_text(property, value.display_text()));
        }
        self.views[view].bound = true;
        Ok(true)
    }

    pub fn submit(&mut self, from: ComponentKind, request: Request) -> Result<RequestId, ForbiddenEdge> {
        let source = match from {
            ComponentKind::Model => self.model_id(),
            _ => self.controller(),
        };
        let mutating = matches!(request, Request::SaveEntity { .. });
        self.bus.send(
            source,
            ComponentId::SERVICES,
            request.verb(),
            mutating,
            Payload::Request(request.clone()),
        )?;
        let id = self.services.submit(request);
        self.owners.insert(
            id,
            Owner {
                triad: self.triad,
                kind: from,
            },
        );
        Ok(id)
    }

    pub fn attach_view(&mut self, kind: &str) -> usize {
        let index = self.views.len();
        let id = ComponentId::view(self.triad, index as u32);
        self.views.push(ViewState::new(id, kind, false));
        index
    }

    /// Sends Detach to every attached view and marks them detached.
    pub fn detach_all(&mut self) -> Sent {
        for i in 0..self.views.len() {
            if self.views[i].attached {
                let id = self.views[i].id.to_string();
                self.render(i, RenderCommand::Detach { view: id })?;
                self.views[i].attached = false;
                self.views[i].bound = false;
            }
        }
        Ok(())
    }

    pub fn reattach_all(&mut self) {
        for v in self.views.iter_mut() {
            v.attached = true;
        }
    }
}

fn signal_verb(signal: &Signal) -> &'static str {
    match signal {
        Signal::Bind => "bind",
        Signal::Refresh => "refresh",
        Signal::PullCache => "pull_cache",
        Signal::ClearCache => "clear_cache",
        Signal::Cache(_) => "cache",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitResult {
    Committed,
    Rejected,
    Cancelled,
    PromptIssued,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaveResult {
    Saved,
    Submitted,
    NothingToSave,
    ValidationRefused,
    FaultPrompted,
}

/// The blueprint controllers, one per triad.
#[derive(Debug, Clone)]
pub(crate) enum Controller {
    Mask(MaskController),
    Form(FormController),
    Sheet(SheetController),
    Pager(PagerController),
    Generic(GenericController),
}

impl Controller {
    pub fn for_spec(spec: &TriadSpec) -> Self {
        match spec.pattern {
            Pattern::PassiveView => Controller::Mask(MaskController::new(spec)),
            Pattern::ClosedModel => Controller::Form(FormController::new()),
            Pattern::OpenModel => Controller::Sheet(SheetController::new()),
            Pattern::DisconnectedModel => Controller::Pager(PagerController::new(spec)),
            Pattern::ModelAsServicesFacade | Pattern::ActiveView => {
                Controller::Generic(GenericController::new(spec.pattern))
            }
        }
    }

    /// Controller type name; the generic one is shared across triads.
    pub fn type_name(&self) -> &'static str {
        match self {
            Controller::Mask(_) => "MaskController",
            Controller::Form(_) => "FormController",
            Controller::Sheet(_) => "SheetController",
            Controller::Pager(_) => "PagerController",
            Controller::Generic(_) => GenericController::TYPE_NAME,
        }
    }

    /// Refuses gestures that make no sense in the current state, before
    /// anything is logged.
    pub(crate) fn precheck(&self, cx: &Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        match self {
            Controller::Mask(c) => c.precheck(gesture),
            Controller::Form(c) => c.precheck(cx, gesture),
            Controller::Sheet(c) => c.precheck(cx, gesture),
            Controller::Pager(c) => c.precheck(gesture),
            Controller::Generic(c) => c.precheck(gesture),
        }
    }

    /// Whether this blueprint's vocabulary covers the gesture at all.
    pub fn handles(&self, gesture: &Gesture) -> bool {
        match self {
            Controller::Mask(c) => c.handles(gesture),
            Controller::Form(c) => c.handles(gesture),
            Controller::Sheet(c) => c.handles(gesture),
            Controller::Pager(c) => c.handles(gesture),
            Controller::Generic(c) => c.handles(gesture),
        }
    }

    pub(crate) fn on_assemble(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        match self {
            Controller::Mask(_) => Ok(()),
            Controller::Form(c) => c.on_assemble(cx),
            Controller::Sheet(c) => c.on_assemble(cx),
            Controller::Pager(c) => c.on_assemble(cx),
            Controller::Generic(c) => c.on_assemble(cx),
        }
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        match self {
            Controller::Mask(c) => c.on_gesture(cx, gesture),
            Controller::Form(c) => c.on_gesture(cx, gesture),
            Controller::Sheet(c) => c.on_gesture(cx, gesture),
            Controller::Pager(c) => c.on_gesture(cx, gesture),
            Controller::Generic(c) => c.on_gesture(cx, gesture),
        }
    }

    pub(crate) fn on_service_event(&mut self, cx: &mut Cx, event: &ServiceEvent) -> Result<(), DispatchError> {
        match self {
            Controller::Pager(c) => c.on_service_event(cx, event),
            _ => {
                cx.diagnose(
                    DiagnosticKind::StaleCompletion,
                    format!("controller does not talk to services (request {})", event.request.0),
                );
                Ok(())
            }
        }
    }

    pub(crate) fn on_model_event(&mut self, cx: &mut Cx, event: &ModelEvent) -> Result<(), DispatchError> {
        match self {
            Controller::Generic(c) => c.on_model_event(cx, event),
            _ => Ok(()),
        }
    }

    pub fn last_commit(&self) -> Option<CommitResult> {
        match self {
            Controller::Form(c) => c.last_commit,
            Controller::Sheet(c) => c.last_commit,
            _ => None,
        }
    }

    pub fn last_save(&self) -> Option<SaveResult> {
        match self {
            Controller::Generic(c) => c.last_save,
            _ => None,
        }
    }

    /// Whether a user decision is pending.
    pub fn awaiting_prompt(&self) -> Option<PromptKind> {
        match self {
            Controller::Mask(_) => None,
            Controller::Form(c) => c.prompt,
            Controller::Sheet(c) => c.prompt,
            Controller::Pager(c) => c.prompt.as_ref().map(|p| p.kind),
            Controller::Generic(c) => c.prompt.as_ref().map(|p| p.kind),
        }
    }

    pub fn page_cursor(&self) -> Option<&PageCursor> {
        match self {
            Controller::Pager(c) => Some(&c.cursor),
            _ => None,
        }
    }

    /// Verbs the generic controller has executed, in order.
    pub fn verb_trace(&self) -> Option<&[String]> {
        match self {
            Controller::Generic(c) => Some(&c.trace),
            _ => None,
        }
    }
}

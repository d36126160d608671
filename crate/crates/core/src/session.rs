//! The runtime that hosts triads: one bus, one services simulator, a virtual
//! clock, and the routing between them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{Bus, ComponentId, ComponentKind, DiagnosticKind, EventEnvelope, ForbiddenEdge, Payload, RunLog, TriadId};
use crate::model::{ports, Model, PortCall, PortReply, ReadRefused, ValidationTiming};
use crate::services::{RequestId, ServiceEvent, ServicePlan, ServiceSim};
use crate::triad::{options, AssembleError, Pattern, TriadHandle, TriadSpec, WiringError};
use crate::triads::{
    refuse, CommitResult, Controller, Cx, DispatchError, Owner, PageCursor, Rendered, SaveResult,
    ViewState,
};
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachError {
    #[error("{0} does not take additional views")]
    PatternForbidsMultiView(Pattern),
    #[error("no triad {0}")]
    UnknownTriad(TriadId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViewCallError {
    #[error(transparent)]
    Forbidden(#[from] ForbiddenEdge),
    #[error("the view port does not offer {0}")]
    NotExposed(String),
    #[error(transparent)]
    Refused(#[from] ReadRefused),
    #[error("no triad {0}")]
    UnknownTriad(TriadId),
    #[error("no view {0}")]
    UnknownView(usize),
}

/// Where an escalated event ended up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    Handled,
    Forwarded { to: ComponentId, hops: u32 },
}

/// Upper bound on ticks the convenience drivers wait for the services layer.
const PATIENCE: u64 = 10_000;

#[derive(Debug)]
struct TriadSlot {
    id: TriadId,
    spec: TriadSpec,
    model: Model,
    views: Vec<ViewState>,
    controller: Controller,
    parent: Option<TriadId>,
}

#[derive(Debug)]
pub struct Session {
    bus: Bus,
    services: ServiceSim,
    triads: Vec<TriadSlot>,
    owners: BTreeMap<RequestId, Owner>,
    rendered: Vec<Rendered>,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(ServicePlan::default())
    }
}

impl Session {
    pub fn new(plan: ServicePlan) -> Self {
        Self {
            bus: Bus::new(),
            services: ServiceSim::new(plan),
            triads: Vec::new(),
            owners: BTreeMap::new(),
            rendered: Vec::new(),
        }
    }

    fn index(&self, id: TriadId) -> Result<usize, DispatchError> {
        self.triads
            .iter()
            .position(|t| t.id == id)
            .ok_or(DispatchError::UnknownTriad(id))
    }

    fn with_cx<R>(
        &mut self,
        idx: usize,
        origin: usize,
        cause: u64,
        f: impl FnOnce(&mut Controller, &mut Cx) -> R,
    ) -> R {
        let slot = &mut self.triads[idx];
        let mut cx = Cx {
            triad: slot.id,
            spec: &slot.spec,
            bus: &mut self.bus,
            services: &mut self.services,
            owners: &mut self.owners,
            model: &mut slot.model,
            views: &mut slot.views,
            rendered: &mut self.rendered,
            origin,
            cause,
        };
        f(&mut slot.controller, &mut cx)
    }

    pub fn assemble_triad(&mut self, spec: TriadSpec) -> Result<TriadHandle, AssembleError> {
        if let Err(e) = spec.check() {
            if let AssembleError::Wiring(w) = &e {
                self.bus.diagnose(DiagnosticKind::WiringError, None, w.0.clone());
            }
            return Err(e);
        }
        let id = TriadId(self.triads.len() as u32 + 1);
        self.bus.register(id, spec.pattern);
        let schema = spec.schema.clone();
        let rules = spec.ruleset.clone();
        let mut model = match spec.pattern {
            Pattern::ModelAsServicesFacade => {
                let entity = spec.service_binding.clone().unwrap_or_default();
                let key = spec
                    .option(options::ENTITY_ID)
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(1);
                Model::service_backed(schema, rules, entity, key)
            }
            Pattern::ClosedModel => Model::new(schema, rules, ValidationTiming::InMutator),
            _ => Model::new(schema, rules, ValidationTiming::Deferred),
        };
        model.seed(&spec.initial);
        let cached = spec.pattern == Pattern::ClosedModel;
        let views = vec![ViewState::new(ComponentId::view(id, 0), &spec.view_kind, cached)];
        let controller = Controller::for_spec(&spec);
        self.triads.push(TriadSlot {
            id,
            spec,
            model,
            views,
            controller,
            parent: None,
        });
        let idx = self.triads.len() - 1;
        let cause = self.bus.peek_seq();
        self.with_cx(idx, 0, cause, |c, cx| c.on_assemble(cx))
            .map_err(|e| AssembleError::Wiring(WiringError(e.to_string())))?;
        Ok(self.handle(id).expect("just assembled"))
    }

    pub fn handle(&self, id: TriadId) -> Option<TriadHandle> {
        let slot = self.triads.iter().find(|t| t.id == id)?;
        let (controller_port, view_port) = ports(slot.spec.pattern);
        Some(TriadHandle {
            id,
            pattern: slot.spec.pattern,
            controller_port,
            view_port,
            views: slot.views.iter().filter(|v| v.attached).map(|v| v.id).collect(),
            controller: ComponentId::controller(id),
            parent: slot.parent.map(ComponentId::controller),
        })
    }

    pub fn triad_ids(&self) -> Vec<TriadId> {
        self.triads.iter().map(|t| t.id).collect()
    }

    /// Makes `parent`'s controller the escalation target of `child`'s.
    pub fn set_parent(&mut self, child: TriadId, parent: TriadId) -> Result<(), WiringError> {
        let known = |id| self.triads.iter().any(|t| t.id == id);
        if !known(child) || !known(parent) {
            return Err(WiringError(format!("unknown triad in {child} -> {parent}")));
        }
        let mut cursor = Some(parent);
        while let Some(t) = cursor {
            if t == child {
                return Err(WiringError(format!("{parent} is below {child}")));
            }
            cursor = self.triads.iter().find(|s| s.id == t).and_then(|s| s.parent);
        }
        let idx = self.index(child).expect("checked");
        self.triads[idx].parent = Some(parent);
        Ok(())
    }

    pub fn dispatch(
        &mut self,
        id: TriadId,
        gesture: Gesture,
    ) -> Result<Vec<RenderCommand>, DispatchError> {
        self.dispatch_from(id, 0, gesture)
    }

    /// Delivers a gesture arriving at one view and runs the controller to
    /// quiescence. Returns every render command emitted meanwhile.
    pub fn dispatch_from(
        &mut self,
        id: TriadId,
        view: usize,
        gesture: Gesture,
    ) -> Result<Vec<RenderCommand>, DispatchError> {
        let idx = self.index(id)?;
        let Some(state) = self.triads[idx].views.get(view) else {
            return Err(DispatchError::UnknownView(view));
        };
        let source = state.id;
        let start = self.rendered.len();
        self.deliver(idx, view, &gesture, source, false)?;
        Ok(self.rendered[start..].iter().map(|r| r.command.clone()).collect())
    }

    /// Hands an event to a controller; unhandled gestures climb the
    /// hierarchy until someone handles them or the root gives up.
    pub fn escalate(
        &mut self,
        controller: ComponentId,
        event: &EventEnvelope,
    ) -> Result<Disposition, DispatchError> {
        let Payload::Gesture(gesture) = &event.payload else {
            self.bus.diagnose(
                DiagnosticKind::UnhandledEvent,
                Some(controller),
                format!("{} is not an escalatable event", event.verb),
            );
            return Err(DispatchError::UnknownGesture {
                verb: event.verb.clone(),
                reason: "not a gesture".into(),
            });
        };
        let triad = controller.triad.ok_or(DispatchError::UnknownTriad(TriadId(0)))?;
        let idx = self.index(triad)?;
        self.deliver(idx, 0, gesture, event.source, true)
    }

    fn deliver(
        &mut self,
        idx: usize,
        view: usize,
        gesture: &Gesture,
        source: ComponentId,
        logged: bool,
    ) -> Result<Disposition, DispatchError> {
        let me = ComponentId::controller(self.triads[idx].id);
        if !self.triads[idx].controller.handles(gesture) {
            if !logged {
                self.bus
                    .send(source, me, gesture.verb(), false, Payload::Gesture(gesture.clone()))?;
            }
            let Some(parent) = self.triads[idx].parent else {
                self.bus.diagnose(
                    DiagnosticKind::UnhandledEvent,
                    Some(me),
                    format!("{} reached the root unhandled", gesture.verb()),
                );
                return Err(refuse(gesture, format!("{} has no handler", me)));
            };
            let target = ComponentId::controller(parent);
            self.bus
                .send(me, target, "forward", false, Payload::Gesture(gesture.clone()))?;
            let pidx = self.index(parent)?;
            return match self.deliver(pidx, 0, gesture, me, true)? {
                Disposition::Handled => Ok(Disposition::Forwarded { to: target, hops: 1 }),
                Disposition::Forwarded { to, hops } => {
                    Ok(Disposition::Forwarded { to, hops: hops + 1 })
                }
            };
        }
        if let Some(kind) = self.triads[idx].controller.awaiting_prompt() {
            let answers = matches!(gesture, Gesture::Command(c) if kind.options().contains(c));
            if !answers {
                let err = refuse(gesture, format!("awaiting an answer to {kind:?}"));
                self.bus
                    .diagnose(DiagnosticKind::UnknownGesture, Some(me), err.to_string());
                return Err(err);
            }
        }
        let cause = self.bus.peek_seq();
        if let Err(err) = self.with_cx(idx, view, cause, |c, cx| c.precheck(cx, gesture)) {
            self.bus
                .diagnose(DiagnosticKind::UnknownGesture, Some(me), err.to_string());
            return Err(err);
        }
        let cause = if logged {
            cause.saturating_sub(1)
        } else {
            self.bus
                .send(source, me, gesture.verb(), false, Payload::Gesture(gesture.clone()))?
        };
        self.with_cx(idx, view, cause, |c, cx| c.on_gesture(cx, gesture))?;
        Ok(Disposition::Handled)
    }

    /// Adds a window to a multi-view triad; it renders the model at once.
    pub fn attach_view(&mut self, id: TriadId, view_kind: &str) -> Result<ComponentId, AttachError> {
        let idx = self.index(id).map_err(|_| AttachError::UnknownTriad(id))?;
        let pattern = self.triads[idx].spec.pattern;
        if !pattern.allows_multiple_views() {
            return Err(AttachError::PatternForbidsMultiView(pattern));
        }
        let cause = self.bus.peek_seq();
        let view = self.with_cx(idx, 0, cause, |_, cx| {
            let view = cx.attach_view(view_kind);
            if cx.model.is_bound() {
                // the edge is allowed for every multi-view pattern
                let _ = cx.view_read(view);
            }
            view
        });
        Ok(self.triads[idx].views[view].id)
    }

    /// A call a view makes on the model by itself. Well-behaved views only
    /// read; hostile test doubles try everything else.
    pub fn view_call(
        &mut self,
        id: TriadId,
        view: usize,
        call: PortCall,
    ) -> Result<PortReply, ViewCallError> {
        let idx = self.index(id).map_err(|_| ViewCallError::UnknownTriad(id))?;
        let slot = &self.triads[idx];
        let Some(state) = slot.views.get(view) else {
            return Err(ViewCallError::UnknownView(view));
        };
        let source = state.id;
        let target = ComponentId::model(slot.id);
        let verb = call.verb();
        if let Some(port) = ports(slot.spec.pattern).1 {
            if !verb.is_mutating() && !port.exposes(verb) {
                return Err(ViewCallError::NotExposed(verb.as_str().to_string()));
            }
        }
        self.bus.send(
            source,
            target,
            verb.as_str(),
            verb.is_mutating(),
            Payload::Call(call.clone()),
        )?;
        let port = self.triads[idx].model.view_port();
        let result = match &call {
            PortCall::Get(p) => port.get(p).map(PortReply::Value),
            PortCall::ReadAll => port.read_all().map(PortReply::Snapshot),
            _ => return Err(ViewCallError::NotExposed(verb.as_str().to_string())),
        };
        match result {
            Ok(reply) => {
                self.bus
                    .send(target, source, verb.as_str(), false, Payload::Reply(reply.clone()))?;
                Ok(reply)
            }
            Err(refused) => {
                self.bus.diagnose(
                    DiagnosticKind::NotBound,
                    Some(source),
                    format!("view read refused: {refused}"),
                );
                Err(refused.into())
            }
        }
    }

    /// Advances the virtual clock; completions due at each tick are routed
    /// to their owners in delivery order.
    pub fn tick(&mut self, n: u64) -> Vec<ServiceEvent> {
        let mut delivered = Vec::new();
        for _ in 0..n {
            self.services.advance_one();
            self.bus.set_tick(self.services.now());
            loop {
                let due = self.services.drain_due();
                if due.is_empty() {
                    break;
                }
                for event in due {
                    self.route(&event);
                    delivered.push(event);
                }
            }
        }
        delivered
    }

    /// Ticks until nothing is pending. Returns the ticks spent.
    pub fn run_until_idle(&mut self) -> u64 {
        let mut spent = 0;
        while !self.services.inspect_pending().is_empty() && spent < PATIENCE {
            self.tick(1);
            spent += 1;
        }
        spent
    }

    fn route(&mut self, event: &ServiceEvent) {
        let Some(owner) = self.owners.remove(&event.request) else {
            self.bus.diagnose(
                DiagnosticKind::StaleCompletion,
                None,
                format!("no owner for request {}", event.request.0),
            );
            return;
        };
        let Ok(idx) = self.index(owner.triad) else {
            return;
        };
        let verb = if event.is_fault() { "fault" } else { "completion" };
        let target = match owner.kind {
            ComponentKind::Model => ComponentId::model(owner.triad),
            _ => ComponentId::controller(owner.triad),
        };
        let Ok(cause) = self.bus.send(
            ComponentId::SERVICES,
            target,
            verb,
            false,
            Payload::Service(event.clone()),
        ) else {
            return;
        };
        // refusals are already on the bus's record
        let _ = self.with_cx(idx, 0, cause, |c, cx| match owner.kind {
            ComponentKind::Model => {
                let model_event = cx.model.controller_port().apply_service_event(event);
                cx.model_event(model_event.clone())?;
                c.on_model_event(cx, &model_event)
            }
            _ => c.on_service_event(cx, event),
        });
    }

    /// Commit through a closed/open model controller.
    pub fn cm_commit(&mut self, id: TriadId) -> Result<Option<CommitResult>, DispatchError> {
        self.dispatch(id, Gesture::Command(CommandName::Commit))?;
        Ok(self.last_commit(id))
    }

    /// Save through the generic controller and wait for the outcome.
    pub fn generic_save(&mut self, id: TriadId) -> Result<Option<SaveResult>, DispatchError> {
        self.dispatch(id, Gesture::Command(CommandName::Save))?;
        let mut spent = 0;
        while self.last_save(id) == Some(SaveResult::Submitted) && spent < PATIENCE {
            self.tick(1);
            spent += 1;
        }
        Ok(self.last_save(id))
    }

    /// Opens a façade entity and waits for the load to finish (or fail).
    pub fn msf_open(&mut self, id: TriadId) -> Result<Vec<RenderCommand>, DispatchError> {
        let start = self.rendered.len();
        self.dispatch(id, Gesture::Command(CommandName::Open))?;
        let mut spent = 0;
        while self.owners.values().any(|o| o.triad == id) && spent < PATIENCE {
            self.tick(1);
            spent += 1;
        }
        Ok(self.rendered[start..].iter().map(|r| r.command.clone()).collect())
    }

    /// An active view forwarding an edit; returns the view's event.
    pub fn av_forward_edit(
        &mut self,
        id: TriadId,
        view: usize,
        property: &str,
        raw: &str,
    ) -> Result<EventEnvelope, DispatchError> {
        let before = self.bus.log().len();
        self.dispatch_from(id, view, Gesture::edit(property, raw))?;
        Ok(self.bus.log()[before].clone())
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn run_log(&self) -> RunLog {
        self.bus.run_log()
    }

    pub fn transcript(&self) -> String {
        self.run_log().transcript()
    }

    pub fn services(&self) -> &ServiceSim {
        &self.services
    }

    pub fn services_mut(&mut self) -> &mut ServiceSim {
        &mut self.services
    }

    pub fn now(&self) -> u64 {
        self.services.now()
    }

    fn slot(&self, id: TriadId) -> &TriadSlot {
        self.triads
            .iter()
            .find(|t| t.id == id)
            .unwrap_or_else(|| panic!("no triad {id}"))
    }

    pub fn model(&self, id: TriadId) -> &Model {
        &self.slot(id).model
    }

    pub fn views(&self, id: TriadId) -> &[ViewState] {
        &self.slot(id).views
    }

    pub fn spec(&self, id: TriadId) -> &TriadSpec {
        &self.slot(id).spec
    }

    /// Every render command, in delivery order.
    pub fn rendered(&self) -> &[Rendered] {
        &self.rendered
    }

    pub fn renders_for(&self, view: ComponentId) -> Vec<RenderCommand> {
        self.rendered
            .iter()
            .filter(|r| r.view == view)
            .map(|r| r.command.clone())
            .collect()
    }

    pub fn controller_type(&self, id: TriadId) -> &'static str {
        self.slot(id).controller.type_name()
    }

    pub fn awaiting_prompt(&self, id: TriadId) -> Option<PromptKind> {
        self.slot(id).controller.awaiting_prompt()
    }

    pub fn last_commit(&self, id: TriadId) -> Option<CommitResult> {
        self.slot(id).controller.last_commit()
    }

    pub fn last_save(&self, id: TriadId) -> Option<SaveResult> {
        self.slot(id).controller.last_save()
    }

    pub fn page_cursor(&self, id: TriadId) -> Option<&PageCursor> {
        self.slot(id).controller.page_cursor()
    }

    pub fn verb_trace(&self, id: TriadId) -> Option<&[String]> {
        self.slot(id).controller.verb_trace()
    }
}

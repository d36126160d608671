//! Model as services façade, with active views on top.
//!
//! One reusable controller type drives any entity. It only uses the opaque
//! port verbs (load, is_dirty, validate, save, plus forwarding a view's
//! edit) and never names a schema property. The model owns the services
//! conversation and hands faults back to the controller.

use crate::bus::{ComponentKind, Signal};
use crate::model::{ModelEvent, PortCall, PortReply, PortVerb};
use crate::triad::Pattern;
use crate::value::PropertyValue;
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

use super::{refuse, Cx, DispatchError, PromptState, SaveResult};

/// What the controller was doing when it had to stop and ask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Load,
    Save,
    Close,
}

#[derive(Debug, Clone)]
pub struct GenericController {
    pattern: Pattern,
    opened: bool,
    loaded: bool,
    /// A load or save the model is waiting on.
    in_flight: Option<Operation>,
    close_after_save: bool,
    pub(crate) prompt: Option<PromptState<Operation>>,
    pub(crate) last_save: Option<SaveResult>,
    /// Executed verbs, for structural comparisons across entities.
    pub(crate) trace: Vec<String>,
}

impl GenericController {
    pub const TYPE_NAME: &'static str = "GenericController";

    pub fn new(pattern: Pattern) -> Self {
        Self {
            pattern,
            opened: false,
            loaded: false,
            in_flight: None,
            close_after_save: false,
            prompt: None,
            last_save: None,
            trace: Vec::new(),
        }
    }

    pub fn handles(&self, gesture: &Gesture) -> bool {
        use CommandName::*;
        match gesture {
            Gesture::Edit(..) => true,
            Gesture::Key(_) | Gesture::Focus(_) => false,
            Gesture::Command(NewWindow) => self.pattern.allows_multiple_views(),
            Gesture::Command(c) => matches!(
                c,
                Open | Save | Commit | Close | Yes | No | Cancel | Retry | Abort | Ignore
            ),
        }
    }

    pub fn precheck(&self, gesture: &Gesture) -> Result<(), DispatchError> {
        use CommandName::*;
        let busy = self.in_flight.is_some();
        match gesture {
            Gesture::Command(Open) if self.opened => Err(refuse(gesture, "already open")),
            Gesture::Command(Open) => Ok(()),
            _ if !self.opened => Err(refuse(gesture, "nothing is open")),
            Gesture::Command(Yes | No | Cancel | Retry | Abort | Ignore) if self.prompt.is_none() => {
                Err(refuse(gesture, "no question pending"))
            }
            Gesture::Command(Yes | No | Cancel | Retry | Abort | Ignore) => Ok(()),
            _ if busy => Err(refuse(gesture, "waiting for the services layer")),
            _ if !self.loaded => Err(refuse(gesture, "entity not loaded")),
            _ => Ok(()),
        }
    }

    fn note(&mut self, verb: &str) {
        self.trace.push(verb.to_string());
    }

    pub(crate) fn on_assemble(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        // in-memory active views start out open and bound
        if !self.pattern.needs_service() {
            self.opened = true;
            self.loaded = true;
            for view in 0..cx.views.len() {
                cx.view_read(view)?;
            }
        }
        Ok(())
    }

    fn load(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        self.note("load");
        cx.render_all(RenderCommand::ShowBusy { busy: true })?;
        cx.call(PortCall::Load)?;
        let request = cx.model.controller_port().load_request();
        match request {
            Some(request) => {
                cx.submit(ComponentKind::Model, request)?;
                cx.reply(PortVerb::Load, PortReply::Pending)?;
                self.in_flight = Some(Operation::Load);
                Ok(())
            }
            None => {
                cx.model.controller_port().mark_loaded_locally();
                let revision = cx.model.snapshot().revision();
                cx.reply(PortVerb::Load, PortReply::Revision(revision))?;
                self.bind_views(cx)
            }
        }
    }

    /// The model is ready: views may now read it themselves.
    fn bind_views(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        self.loaded = true;
        cx.render_all(RenderCommand::ShowBusy { busy: false })?;
        for view in 0..cx.views.len() {
            if cx.views[view].attached {
                cx.signal(view, Signal::Bind)?;
                cx.view_read(view)?;
            }
        }
        Ok(())
    }

    fn save(&mut self, cx: &mut Cx, retry: bool) -> Result<(), DispatchError> {
        if !retry {
            self.note("is_dirty");
            cx.call(PortCall::IsDirty)?;
            let dirty = cx.model.controller_port().is_dirty();
            cx.reply(PortVerb::IsDirty, PortReply::Dirty(dirty))?;
            if !dirty {
                self.last_save = Some(SaveResult::NothingToSave);
                return self.after_save(cx);
            }
            self.note("validate");
            cx.call(PortCall::Validate)?;
            let report = cx.model.controller_port().validate();
            cx.reply(PortVerb::Validate, PortReply::Report(report.clone()))?;
            if !report.is_clean() {
                self.close_after_save = false;
                self.last_save = Some(SaveResult::ValidationRefused);
                cx.render_origin(RenderCommand::ShowError {
                    message: report.summary(),
                })?;
                return Ok(());
            }
        }
        self.note("save");
        cx.render_all(RenderCommand::ShowBusy { busy: true })?;
        cx.call(PortCall::Save)?;
        let request = cx.model.controller_port().save_request(retry);
        match request {
            Some(request) => {
                cx.submit(ComponentKind::Model, request)?;
                cx.reply(PortVerb::Save, PortReply::Pending)?;
                self.in_flight = Some(Operation::Save);
                self.last_save = Some(SaveResult::Submitted);
                Ok(())
            }
            None => {
                cx.model.controller_port().mark_saved_locally();
                let revision = cx.model.snapshot().revision();
                cx.reply(PortVerb::Save, PortReply::Revision(revision))?;
                cx.render_all(RenderCommand::ShowBusy { busy: false })?;
                self.last_save = Some(SaveResult::Saved);
                self.after_save(cx)
            }
        }
    }

    fn after_save(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        if std::mem::take(&mut self.close_after_save) {
            self.close(cx)?;
        }
        Ok(())
    }

    fn close(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        self.note("close");
        cx.detach_all()?;
        self.opened = false;
        self.loaded = false;
        Ok(())
    }

    fn ask(&mut self, cx: &mut Cx, kind: PromptKind, pending: Operation) -> Result<(), DispatchError> {
        cx.render_origin(RenderCommand::prompt(kind))?;
        self.prompt = Some(PromptState { kind, pending });
        Ok(())
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        use CommandName::*;
        match gesture {
            Gesture::Edit(property, raw) => {
                // forwarded from the view; the controller only relays it
                self.note("set");
                let value = PropertyValue::text(raw.clone());
                cx.call(PortCall::Set(property.clone(), value.clone()))?;
                match cx.model.controller_port().mutate_open(property, value) {
                    Ok(notice) => {
                        cx.reply(PortVerb::Set, PortReply::Revision(notice.revision))?;
                        cx.notify(&notice)?;
                    }
                    Err(e) => {
                        cx.reply(PortVerb::Set, PortReply::Refused(e.to_string()))?;
                        cx.render_origin(RenderCommand::ShowError {
                            message: e.to_string(),
                        })?;
                    }
                }
                Ok(())
            }
            Gesture::Command(Open) => {
                self.opened = true;
                cx.reattach_all();
                self.load(cx)
            }
            Gesture::Command(Save | Commit) => self.save(cx, false),
            Gesture::Command(NewWindow) => {
                let view = cx.attach_view(&cx.spec.view_kind.clone());
                cx.view_read(view)?;
                Ok(())
            }
            Gesture::Command(Close) => {
                self.note("is_dirty");
                cx.call(PortCall::IsDirty)?;
                let dirty = cx.model.controller_port().is_dirty();
                cx.reply(PortVerb::IsDirty, PortReply::Dirty(dirty))?;
                if dirty {
                    self.ask(cx, PromptKind::SaveChanges, Operation::Close)
                } else {
                    self.close(cx)
                }
            }
            Gesture::Command(Yes) => {
                self.prompt = None;
                self.close_after_save = true;
                self.save(cx, false)
            }
            Gesture::Command(No) => {
                self.prompt = None;
                self.close(cx)
            }
            Gesture::Command(Cancel) => {
                self.prompt = None;
                Ok(())
            }
            Gesture::Command(Retry) => {
                let failed = self.prompt.take().expect("precheck").pending;
                match failed {
                    Operation::Load => self.load(cx),
                    Operation::Save => self.save(cx, true),
                    Operation::Close => Ok(()),
                }
            }
            Gesture::Command(Abort | Ignore) => {
                let failed = self.prompt.take().expect("precheck").pending;
                self.close_after_save = false;
                if failed == Operation::Load {
                    // nothing was loaded, so there is nothing to show
                    self.opened = false;
                }
                Ok(())
            }
            other => Err(refuse(other, "not a generic gesture")),
        }
    }

    pub(crate) fn on_model_event(&mut self, cx: &mut Cx, event: &ModelEvent) -> Result<(), DispatchError> {
        let operation = self.in_flight.take();
        match event {
            ModelEvent::Loaded { .. } => self.bind_views(cx),
            ModelEvent::Saved { .. } => {
                self.last_save = Some(SaveResult::Saved);
                cx.render_all(RenderCommand::ShowBusy { busy: false })?;
                self.after_save(cx)
            }
            ModelEvent::Fault { .. } => {
                cx.render_all(RenderCommand::ShowBusy { busy: false })?;
                if operation == Some(Operation::Save) {
                    self.last_save = Some(SaveResult::FaultPrompted);
                }
                let pending = operation.unwrap_or(Operation::Load);
                self.ask(cx, PromptKind::AbortRetryIgnore, pending)
            }
        }
    }
}

//! Open model: mutators store anything and broadcast; validation waits for
//! the controller (commit, or save-on-close).

use crate::model::{PortCall, PortReply, PortVerb};
use crate::value::PropertyValue;
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

use super::{refuse, CommitResult, Cx, DispatchError};

#[derive(Debug, Clone)]
pub struct SheetController {
    opened: bool,
    pub(crate) prompt: Option<PromptKind>,
    pub(crate) last_commit: Option<CommitResult>,
}

impl Default for SheetController {
    fn default() -> Self {
        Self::new()
    }
}

impl SheetController {
    pub fn new() -> Self {
        Self {
            opened: true,
            prompt: None,
            last_commit: None,
        }
    }

    pub fn handles(&self, gesture: &Gesture) -> bool {
        use CommandName::*;
        match gesture {
            Gesture::Edit(..) | Gesture::Focus(_) => true,
            Gesture::Key(_) => false,
            Gesture::Command(c) => {
                matches!(c, Open | Commit | Cancel | Close | Yes | No | NewWindow)
            }
        }
    }

    pub(crate) fn precheck(&self, cx: &Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        match gesture {
            Gesture::Edit(p, _) | Gesture::Focus(p) if !cx.spec.schema.contains(p) => {
                Err(refuse(gesture, format!("no cell {p:?}")))
            }
            Gesture::Command(CommandName::Open) if self.opened => {
                Err(refuse(gesture, "already open"))
            }
            Gesture::Command(CommandName::Open) => Ok(()),
            Gesture::Command(CommandName::Yes | CommandName::No | CommandName::Cancel)
                if self.prompt.is_none() =>
            {
                Err(refuse(gesture, "no question pending"))
            }
            _ if !self.opened => Err(refuse(gesture, "sheet is closed")),
            _ => Ok(()),
        }
    }

    pub(crate) fn on_assemble(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        cx.view_read(0)?;
        Ok(())
    }

    /// Validate first; commit only on a clean report.
    fn commit(&mut self, cx: &mut Cx) -> Result<CommitResult, DispatchError> {
        cx.call(PortCall::Validate)?;
        let report = cx.model.controller_port().validate();
        cx.reply(PortVerb::Validate, PortReply::Report(report.clone()))?;
        if let Some(first) = report.violations.first() {
            cx.render_origin(RenderCommand::ShowError {
                message: report.summary(),
            })?;
            let property = first.properties[0].clone();
            let len = cx.model.snapshot().value(&property).display_text().chars().count();
            let select = RenderCommand::select_range(property, 0, len).expect("0 <= len");
            cx.render_origin(select)?;
            return Ok(CommitResult::Rejected);
        }
        cx.call(PortCall::Commit)?;
        let reply = match cx.model.controller_port().commit() {
            Ok(revision) => PortReply::Revision(revision),
            Err(e) => PortReply::Refused(e.to_string()),
        };
        cx.reply(PortVerb::Commit, reply)?;
        Ok(CommitResult::Committed)
    }

    fn close(&mut self, cx: &mut Cx) -> Result<CommitResult, DispatchError> {
        cx.detach_all()?;
        self.opened = false;
        Ok(CommitResult::Closed)
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        let result = match gesture {
            Gesture::Edit(p, raw) => {
                let value = PropertyValue::text(raw.clone());
                cx.call(PortCall::Set(p.clone(), value.clone()))?;
                let notice = cx
                    .model
                    .controller_port()
                    .mutate_open(p, value)
                    .expect("precheck keeps cells in the schema");
                cx.reply(PortVerb::Set, PortReply::Revision(notice.revision))?;
                cx.notify(&notice)?;
                return Ok(());
            }
            Gesture::Focus(p) => {
                let len = cx.model.snapshot().value(p).display_text().chars().count();
                let select = RenderCommand::select_range(p.clone(), 0, len).expect("0 <= len");
                cx.render_origin(select)?;
                return Ok(());
            }
            Gesture::Command(CommandName::NewWindow) => {
                let view = cx.attach_view(&cx.spec.view_kind.clone());
                cx.view_read(view)?;
                return Ok(());
            }
            Gesture::Command(CommandName::Open) => {
                cx.reattach_all();
                self.opened = true;
                for view in 0..cx.views.len() {
                    cx.view_read(view)?;
                }
                return Ok(());
            }
            Gesture::Command(CommandName::Commit) => self.commit(cx)?,
            Gesture::Command(CommandName::Close) => {
                cx.call(PortCall::IsDirty)?;
                let dirty = cx.model.controller_port().is_dirty();
                cx.reply(PortVerb::IsDirty, PortReply::Dirty(dirty))?;
                if dirty {
                    cx.render_origin(RenderCommand::prompt(PromptKind::SaveChanges))?;
                    self.prompt = Some(PromptKind::SaveChanges);
                    CommitResult::PromptIssued
                } else {
                    self.close(cx)?
                }
            }
            Gesture::Command(CommandName::Yes) => {
                self.prompt = None;
                match self.commit(cx)? {
                    CommitResult::Committed => self.close(cx)?,
                    other => other,
                }
            }
            Gesture::Command(CommandName::No) => {
                // uncommitted values stay in the model; only the windows go
                self.prompt = None;
                self.close(cx)?
            }
            Gesture::Command(CommandName::Cancel) => {
                self.prompt = None;
                CommitResult::Cancelled
            }
            other => return Err(refuse(other, "not a sheet gesture")),
        };
        self.last_commit = Some(result);
        Ok(())
    }
}

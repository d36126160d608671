//! Closed model: the view caches raw input; the controller pulls the cache
//! on commit and hands the whole batch to a validating mutator.

use crate::bus::Signal;
use crate::model::{PortCall, PortError, PortReply, PortVerb};
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

use super::{refuse, CommitResult, Cx, DispatchError};

#[derive(Debug, Clone)]
pub struct FormController {
    opened: bool,
    pub(crate) prompt: Option<PromptKind>,
    pub(crate) last_commit: Option<CommitResult>,
}

impl Default for FormController {
    fn default() -> Self {
        Self::new()
    }
}

impl FormController {
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
            Gesture::Command(c) => matches!(c, Open | Commit | Cancel | Close | Yes | No),
        }
    }

    pub(crate) fn precheck(&self, cx: &Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        match gesture {
            Gesture::Edit(p, _) | Gesture::Focus(p) if !cx.spec.schema.contains(p) => {
                Err(refuse(gesture, format!("no field {p:?}")))
            }
            Gesture::Command(CommandName::Open) if self.opened => {
                Err(refuse(gesture, "already open"))
            }
            Gesture::Command(CommandName::Open) => Ok(()),
            Gesture::Command(CommandName::Yes | CommandName::No) if self.prompt.is_none() => {
                Err(refuse(gesture, "no question pending"))
            }
            _ if !self.opened => Err(refuse(gesture, "form is closed")),
            _ => Ok(()),
        }
    }

    pub(crate) fn on_assemble(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        cx.view_read(0)?;
        Ok(())
    }

    /// The controller asks the view for its pending input.
    fn pull_cache(&self, cx: &mut Cx) -> Result<Vec<(String, String)>, DispatchError> {
        let view = cx.origin;
        cx.signal(view, Signal::PullCache)?;
        let entries: Vec<(String, String)> = cx.views[view]
            .cache
            .as_ref()
            .map(|c| c.entries.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
            .unwrap_or_default();
        cx.view_answer(view, Signal::Cache(entries.clone()))?;
        Ok(entries)
    }

    fn discard(&self, cx: &mut Cx) -> Result<(), DispatchError> {
        let view = cx.origin;
        cx.signal(view, Signal::ClearCache)?;
        if let Some(cache) = cx.views[view].cache.as_mut() {
            cache.entries.clear();
        }
        cx.signal(view, Signal::Refresh)?;
        cx.view_read(view)?;
        Ok(())
    }

    fn commit(&mut self, cx: &mut Cx) -> Result<CommitResult, DispatchError> {
        let cached = self.pull_cache(cx)?;
        if cached.is_empty() {
            return Ok(CommitResult::Committed);
        }
        // schema order, so the batch (and the transcript) is deterministic
        let mut batch = Vec::new();
        for def in cx.spec.schema.properties() {
            let Some((_, raw)) = cached.iter().find(|(k, _)| *k == def.name) else {
                continue;
            };
            match def.kind.parse(&def.name, raw) {
                Ok(v) => batch.push((def.name.clone(), v)),
                Err(e) => {
                    cx.render_origin(RenderCommand::ShowError {
                        message: e.to_string(),
                    })?;
                    return Ok(CommitResult::Rejected);
                }
            }
        }
        cx.call(PortCall::MutateBatch(batch.clone()))?;
        let outcome = cx.model.controller_port().mutate_closed_batch(&batch);
        match outcome {
            Ok(revision) => {
                cx.reply(PortVerb::MutateBatch, PortReply::Revision(revision))?;
                self.discard(cx)?;
                Ok(CommitResult::Committed)
            }
            Err(PortError::Rejected(rejected)) => {
                let message = rejected.report.summary();
                cx.reply(PortVerb::MutateBatch, PortReply::Rejected(rejected.report))?;
                cx.render_origin(RenderCommand::ShowError { message })?;
                Ok(CommitResult::Rejected)
            }
            Err(other) => {
                cx.reply(PortVerb::MutateBatch, PortReply::Refused(other.to_string()))?;
                Ok(CommitResult::Rejected)
            }
        }
    }

    fn close(&mut self, cx: &mut Cx) -> Result<CommitResult, DispatchError> {
        cx.detach_all()?;
        self.opened = false;
        Ok(CommitResult::Closed)
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        let result = match gesture {
            Gesture::Edit(p, raw) => {
                // local echo: the view owns uncommitted input
                let view = cx.origin;
                if let Some(cache) = cx.views[view].cache.as_mut() {
                    cache.entries.insert(p.clone(), raw.clone());
                }
                cx.echo(view, cx.cause, RenderCommand::set_text(p, raw));
                return Ok(());
            }
            Gesture::Focus(p) => {
                let view = cx.origin;
                let len = cx.views[view]
                    .fields
                    .get(p)
                    .map_or(0, |t| t.chars().count());
                let select = RenderCommand::select_range(p.clone(), 0, len).expect("0 <= len");
                cx.render_origin(select)?;
                return Ok(());
            }
            Gesture::Command(CommandName::Open) => {
                cx.reattach_all();
                self.opened = true;
                cx.view_read(0)?;
                return Ok(());
            }
            Gesture::Command(CommandName::Commit) => self.commit(cx)?,
            Gesture::Command(CommandName::Close) => {
                let cached = self.pull_cache(cx)?;
                if cached.is_empty() {
                    self.close(cx)?
                } else {
                    cx.render_origin(RenderCommand::prompt(PromptKind::SaveChanges))?;
                    self.prompt = Some(PromptKind::SaveChanges);
                    CommitResult::PromptIssued
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
                self.prompt = None;
                self.discard(cx)?;
                self.close(cx)?
            }
            Gesture::Command(CommandName::Cancel) => {
                if self.prompt.take().is_none() {
                    self.discard(cx)?;
                }
                CommitResult::Cancelled
            }
            other => return Err(refuse(other, "not a form gesture")),
        };
        self.last_commit = Some(result);
        Ok(())
    }
}


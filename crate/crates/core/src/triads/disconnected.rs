//! Disconnected model: the controller talks to services, tracks what was
//! already read, and feeds rows into a model that never sees the services.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bus::{ComponentKind, DiagnosticKind};
use crate::model::{PortCall, PortReply, PortVerb};
use crate::services::{Completion, Outcome, Request, RequestId, ServiceEvent};
use crate::triad::{options, TriadSpec};
use crate::vocab::{CommandName, Gesture, PromptKind, RenderCommand};

use super::{refuse, Cx, DispatchError, PromptState};

pub const DEFAULT_PAGE_SIZE: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageCursor {
    pub page: u32,
    pub page_size: u32,
    /// Unknown until the first page arrives.
    pub page_count: Option<u32>,
    /// Pages already read and kept in the model.
    pub loaded: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingFetch {
    pub id: RequestId,
    pub request: Request,
    pub target: u32,
    pub previous: u32,
}

#[derive(Debug, Clone)]
pub struct PagerController {
    entity: String,
    filter: String,
    opened: bool,
    pub cursor: PageCursor,
    pending: Option<PendingFetch>,
    pub(crate) prompt: Option<PromptState<PendingFetch>>,
}

impl PagerController {
    pub fn new(spec: &TriadSpec) -> Self {
        let page_size = spec
            .option(options::PAGE_SIZE)
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_PAGE_SIZE);
        Self {
            entity: spec.service_binding.clone().unwrap_or_default(),
            filter: spec.option(options::FILTER).unwrap_or_default().to_string(),
            opened: true,
            cursor: PageCursor {
                page: 0,
                page_size,
                page_count: None,
                loaded: BTreeSet::new(),
            },
            pending: None,
            prompt: None,
        }
    }

    pub fn handles(&self, gesture: &Gesture) -> bool {
        use CommandName::*;
        match gesture {
            Gesture::Command(c) => matches!(
                c,
                Open | Close | NextPage | PrevPage | Retry | Abort | Ignore
            ),
            _ => false,
        }
    }

    pub fn precheck(&self, gesture: &Gesture) -> Result<(), DispatchError> {
        let Gesture::Command(command) = gesture else {
            return Err(refuse(gesture, "not a pager gesture"));
        };
        match command {
            CommandName::Open if self.opened => Err(refuse(gesture, "already open")),
            CommandName::Open => Ok(()),
            _ if !self.opened => Err(refuse(gesture, "browser is closed")),
            CommandName::Retry | CommandName::Abort | CommandName::Ignore
                if self.prompt.is_none() =>
            {
                Err(refuse(gesture, "no failed request"))
            }
            CommandName::NextPage => match self.cursor.page_count {
                Some(count) if self.cursor.page + 1 >= count => {
                    Err(refuse(gesture, "already on the last page"))
                }
                None => Err(refuse(gesture, "page count not known yet")),
                _ => Ok(()),
            },
            CommandName::PrevPage if self.cursor.page == 0 => {
                Err(refuse(gesture, "already on the first page"))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn on_assemble(&mut self, cx: &mut Cx) -> Result<(), DispatchError> {
        self.fetch(cx, 0)
    }

    fn count(&self) -> u32 {
        self.cursor.page_count.unwrap_or(0)
    }

    fn fetch(&mut self, cx: &mut Cx, target: u32) -> Result<(), DispatchError> {
        let request = Request::FetchPage {
            entity: self.entity.clone(),
            filter: self.filter.clone(),
            page: target,
            page_size: self.cursor.page_size,
        };
        self.submit(cx, request, target, self.cursor.page)
    }

    fn submit(
        &mut self,
        cx: &mut Cx,
        request: Request,
        target: u32,
        previous: u32,
    ) -> Result<(), DispatchError> {
        cx.render_all(RenderCommand::ShowBusy { busy: true })?;
        let id = cx.submit(ComponentKind::Controller, request.clone())?;
        // a newer request supersedes whatever was in flight
        self.pending = Some(PendingFetch {
            id,
            request,
            target,
            previous,
        });
        Ok(())
    }

    /// Shows a page the model already holds.
    fn show_cached(&mut self, cx: &mut Cx, page: u32) -> Result<(), DispatchError> {
        cx.call(PortCall::PageView(page))?;
        let rows = cx.model.controller_port().page_view(page);
        cx.reply(PortVerb::PageView, PortReply::Rows(rows.clone()))?;
        self.cursor.page = page;
        cx.render_all(RenderCommand::ShowPage {
            rows,
            page,
            page_count: self.count(),
        })?;
        Ok(())
    }

    fn go_to(&mut self, cx: &mut Cx, target: u32) -> Result<(), DispatchError> {
        if self.cursor.loaded.contains(&target) {
            self.pending = None;
            self.show_cached(cx, target)
        } else {
            self.fetch(cx, target)
        }
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        let Gesture::Command(command) = gesture else {
            return Err(refuse(gesture, "not a pager gesture"));
        };
        match command {
            CommandName::NextPage => self.go_to(cx, self.cursor.page + 1),
            CommandName::PrevPage => self.go_to(cx, self.cursor.page - 1),
            CommandName::Retry => {
                let failed = self.prompt.take().expect("precheck").pending;
                // the identical request, byte for byte
                self.submit(cx, failed.request, failed.target, failed.previous)
            }
            CommandName::Ignore => {
                let failed = self.prompt.take().expect("precheck").pending;
                cx.render_all(RenderCommand::ShowPage {
                    rows: Vec::new(),
                    page: failed.target,
                    page_count: self.count(),
                })?;
                Ok(())
            }
            CommandName::Abort => {
                let failed = self.prompt.take().expect("precheck").pending;
                self.cursor.page = failed.previous;
                if self.cursor.loaded.contains(&failed.previous) {
                    self.show_cached(cx, failed.previous)?;
                }
                Ok(())
            }
            CommandName::Close => {
                self.cursor.loaded.clear();
                self.pending = None;
                self.prompt = None;
                cx.detach_all()?;
                self.opened = false;
                Ok(())
            }
            CommandName::Open => {
                cx.reattach_all();
                self.opened = true;
                self.fetch(cx, self.cursor.page)
            }
            _ => Err(refuse(gesture, "not a pager gesture")),
        }
    }

    pub(crate) fn on_service_event(&mut self, cx: &mut Cx, event: &ServiceEvent) -> Result<(), DispatchError> {
        let current = self.pending.as_ref().is_some_and(|p| p.id == event.request);
        if !current {
            cx.diagnose(
                DiagnosticKind::StaleCompletion,
                format!("dropped result of superseded request {}", event.request.0),
            );
            return Ok(());
        }
        let fetch = self.pending.take().expect("checked above");
        match &event.outcome {
            Outcome::Completion(Completion::Page(result)) => {
                let size = u64::from(self.cursor.page_size);
                let count = result.total.div_ceil(size).max(1) as u32;
                self.cursor.page_count = Some(count);
                cx.call(PortCall::LoadRows {
                    page: result.page,
                    rows: result.rows.clone(),
                })?;
                let revision = cx
                    .model
                    .controller_port()
                    .load_rows(result.page, result.rows.clone());
                cx.reply(PortVerb::LoadRows, PortReply::Revision(revision))?;
                self.cursor.loaded.insert(result.page);
                cx.render_all(RenderCommand::ShowBusy { busy: false })?;
                self.show_cached(cx, fetch.target)
            }
            Outcome::Completion(_) => {
                cx.diagnose(DiagnosticKind::StaleCompletion, "unexpected completion kind");
                Ok(())
            }
            Outcome::Fault { .. } => {
                cx.render_all(RenderCommand::ShowBusy { busy: false })?;
                cx.render_all(RenderCommand::prompt(PromptKind::AbortRetryIgnore))?;
                self.prompt = Some(PromptState {
                    kind: PromptKind::AbortRetryIgnore,
                    pending: fetch,
                });
                Ok(())
            }
        }
    }
}

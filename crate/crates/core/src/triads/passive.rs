//! Passive view: a masked edit box. The view knows nothing about the model;
//! the controller reads the buffer, runs the mask and pushes characters.

use crate::model::{PortCall, PortReply, PortVerb};
use crate::triad::{options, TriadSpec};
use crate::value::PropertyValue;
use crate::vocab::{CommandName, Gesture, RenderCommand};

use super::mask::Mask;
use super::{refuse, Cx, DispatchError};

#[derive(Debug, Clone)]
pub struct MaskController {
    mask: Mask,
    property: String,
    opened: bool,
}

impl MaskController {
    pub fn new(spec: &TriadSpec) -> Self {
        Self {
            mask: Mask::new(spec.option(options::MASK).unwrap_or("*")),
            property: spec
                .schema
                .names()
                .next()
                .unwrap_or_default()
                .to_string(),
            opened: false,
        }
    }

    pub fn handles(&self, gesture: &Gesture) -> bool {
        match gesture {
            Gesture::Key(_) | Gesture::Edit(..) | Gesture::Focus(_) => true,
            Gesture::Command(c) => matches!(c, CommandName::Open | CommandName::Cancel),
        }
    }

    pub fn precheck(&self, gesture: &Gesture) -> Result<(), DispatchError> {
        match gesture {
            Gesture::Edit(p, _) | Gesture::Focus(p) if *p != self.property => {
                Err(refuse(gesture, format!("no field {p:?}")))
            }
            Gesture::Command(CommandName::Open) if self.opened => {
                Err(refuse(gesture, "already open"))
            }
            _ => Ok(()),
        }
    }

    fn buffer(&self, cx: &mut Cx) -> Result<String, DispatchError> {
        let call = PortCall::Get(self.property.clone());
        cx.call(call)?;
        let value = cx
            .model
            .controller_port()
            .get(&self.property)
            .unwrap_or(PropertyValue::Absent);
        cx.reply(PortVerb::Get, PortReply::Value(value.clone()))?;
        Ok(value.display_text())
    }

    fn store(&self, cx: &mut Cx, buffer: &str) -> Result<(), DispatchError> {
        let value = PropertyValue::text(buffer);
        cx.call(PortCall::Set(self.property.clone(), value.clone()))?;
        let notice = cx
            .model
            .controller_port()
            .mutate_open(&self.property, value)
            .expect("mask property is in the schema");
        cx.reply(PortVerb::Set, PortReply::Revision(notice.revision))?;
        Ok(())
    }

    /// Feeds keys one by one; rejected keys are dropped.
    fn type_keys(&self, cx: &mut Cx, keys: &str) -> Result<(), DispatchError> {
        let mut buffer = self.buffer(cx)?;
        let mut commands = Vec::new();
        for key in keys.chars() {
            let step = self.mask.step(&buffer, key);
            if step.accepted {
                commands.extend(step.render_commands(&self.property));
                buffer = step.buffer;
            }
        }
        if commands.is_empty() {
            return Ok(());
        }
        self.store(cx, &buffer)?;
        for command in commands {
            cx.render_origin(command)?;
        }
        Ok(())
    }

    pub(crate) fn on_gesture(&mut self, cx: &mut Cx, gesture: &Gesture) -> Result<(), DispatchError> {
        match gesture {
            Gesture::Key(k) => self.type_keys(cx, &k.to_string()),
            Gesture::Edit(_, raw) => self.type_keys(cx, raw),
            Gesture::Focus(p) => {
                let len = self.buffer(cx)?.chars().count();
                let select = RenderCommand::select_range(p.clone(), 0, len).expect("0 <= len");
                cx.render_origin(select)?;
                Ok(())
            }
            Gesture::Command(CommandName::Open) => {
                self.opened = true;
                let buffer = self.buffer(cx)?;
                cx.render_origin(RenderCommand::set_text(&self.property, buffer))?;
                Ok(())
            }
            Gesture::Command(CommandName::Cancel) => {
                self.store(cx, "")?;
                cx.render_origin(RenderCommand::set_text(&self.property, ""))?;
                Ok(())
            }
            other => Err(refuse(other, "not a masked-field gesture")),
        }
    }
}

//! Declarative triad wiring: which pattern, which data, which services.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{ComponentId, TriadId};
use crate::model::PortDescriptor;
use crate::validation::Rule;
use crate::value::{PropertyValue, Schema, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    PassiveView,
    ClosedModel,
    OpenModel,
    DisconnectedModel,
    ModelAsServicesFacade,
    ActiveView,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::PassiveView,
        Pattern::ClosedModel,
        Pattern::OpenModel,
        Pattern::DisconnectedModel,
        Pattern::ModelAsServicesFacade,
        Pattern::ActiveView,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Pattern::PassiveView => "passive_view",
            Pattern::ClosedModel => "closed_model",
            Pattern::OpenModel => "open_model",
            Pattern::DisconnectedModel => "disconnected_model",
            Pattern::ModelAsServicesFacade => "model_as_services_facade",
            Pattern::ActiveView => "active_view",
        }
    }

    pub fn needs_service(&self) -> bool {
        matches!(
            self,
            Pattern::DisconnectedModel | Pattern::ModelAsServicesFacade
        )
    }

    pub fn allows_multiple_views(&self) -> bool {
        matches!(self, Pattern::OpenModel | Pattern::ActiveView)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown pattern {0:?}")]
pub struct UnknownPattern(pub String);

impl FromStr for Pattern {
    type Err = UnknownPattern;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownPattern(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Generic,
    Specific,
}

/// Option keys understood by the blueprints.
pub mod options {
    pub const MASK: &str = "mask";
    pub const PAGE_SIZE: &str = "page_size";
    pub const FILTER: &str = "filter";
    pub const ENTITY_ID: &str = "entity_id";
}

pub const MASKED_FIELD: &str = "masked_field";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriadSpec {
    pub pattern: Pattern,
    pub schema: Schema,
    #[serde(default)]
    pub ruleset: Vec<Rule>,
    pub view_kind: String,
    pub controller_kind: ControllerKind,
    #[serde(default)]
    pub service_binding: Option<String>,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
    /// Starting values for in-memory models.
    #[serde(default)]
    pub initial: Vec<(String, PropertyValue)>,
}

impl TriadSpec {
    pub fn new(pattern: Pattern, schema: Schema, view_kind: impl Into<String>) -> Self {
        Self {
            pattern,
            schema,
            ruleset: Vec::new(),
            view_kind: view_kind.into(),
            controller_kind: ControllerKind::Specific,
            service_binding: None,
            options: BTreeMap::new(),
            initial: Vec::new(),
        }
    }

    pub fn with_rules(mut self, rules: Vec<Rule>) -> Self {
        self.ruleset = rules;
        self
    }

    pub fn with_option(mut self, key: &str, value: impl Into<String>) -> Self {
        self.options.insert(key.to_string(), value.into());
        self
    }

    pub fn with_service(mut self, binding: impl Into<String>) -> Self {
        self.service_binding = Some(binding.into());
        self
    }

    pub fn with_controller(mut self, kind: ControllerKind) -> Self {
        self.controller_kind = kind;
        self
    }

    pub fn with_initial(mut self, values: Vec<(String, PropertyValue)>) -> Self {
        self.initial = values;
        self
    }

    pub fn option(&self, key: &str) -> Option<&str> {
        self.options.get(key).map(String::as_str)
    }

    /// Checks the pattern's wiring rules and the schema/ruleset.
    pub fn check(&self) -> Result<(), AssembleError> {
        let wiring = |msg: String| Err(AssembleError::Wiring(WiringError(msg)));
        match (self.pattern.needs_service(), &self.service_binding) {
            (true, None) => return wiring(format!("{} needs a service binding", self.pattern)),
            (false, Some(s)) => {
                return wiring(format!("{} must not bind service {s:?}", self.pattern))
            }
            _ => {}
        }
        if self.pattern == Pattern::PassiveView
            && self.view_kind == MASKED_FIELD
            && self.option(options::MASK).map_or(true, str::is_empty)
        {
            return wiring("masked_field view needs a mask option".into());
        }
        if self.controller_kind == ControllerKind::Generic
            && !matches!(
                self.pattern,
                Pattern::ModelAsServicesFacade | Pattern::ActiveView
            )
        {
            return wiring(format!("{} cannot use a generic controller", self.pattern));
        }
        if self.pattern == Pattern::ModelAsServicesFacade
            && self.controller_kind != ControllerKind::Generic
        {
            return wiring("model_as_services_facade needs the generic controller".into());
        }
        if self.pattern == Pattern::PassiveView && self.schema.is_empty() {
            return wiring("passive_view needs one property to edit".into());
        }
        if let Some(size) = self.option(options::PAGE_SIZE) {
            match size.parse::<u32>() {
                Ok(n) if n >= 1 => {}
                _ => return wiring(format!("bad page size {size:?}")),
            }
        }
        if let Some(id) = self.option(options::ENTITY_ID) {
            if id.parse::<i64>().is_err() {
                return wiring(format!("bad entity id {id:?}"));
            }
        }
        Schema::new(self.schema.properties().to_vec())?;
        Rule::check_all(&self.ruleset, &self.schema)?;
        for (name, _) in &self.initial {
            if !self.schema.contains(name) {
                return Err(SchemaError::UnknownProperty {
                    rule: usize::MAX,
                    property: name.clone(),
                }
                .into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("wiring error: {0}")]
pub struct WiringError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssembleError {
    #[error(transparent)]
    Wiring(#[from] WiringError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// Runtime handle of one assembled triad. A value snapshot; ask the session
/// for a fresh one after views are attached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriadHandle {
    pub id: TriadId,
    pub pattern: Pattern,
    pub controller_port: PortDescriptor,
    /// Absent for passive view: views hold no model reference.
    pub view_port: Option<PortDescriptor>,
    pub views: Vec<ComponentId>,
    pub controller: ComponentId,
    pub parent: Option<ComponentId>,
}

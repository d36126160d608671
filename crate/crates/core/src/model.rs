//! The model and its two segregated ports.
//!
//! A [`ControllerPort`] carries mutators, validation triggers and load/save.
//! A [`ViewPort`] carries accessors only, and its errors never call for a
//! user decision. Passive-view models hand out no view port at all.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::services::{Completion, FaultKind, Outcome, Request, ServiceEvent};
use crate::triad::Pattern;
use crate::validation::{evaluate, Rule, ValidationReport};
use crate::value::{PropertyValue, Schema, Snapshot};

/// When validation runs relative to mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationTiming {
    /// Every mutator validates the candidate state and refuses violations.
    InMutator,
    /// Mutators store anything; validation waits for the controller.
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeNotice {
    pub property: String,
    pub old: PropertyValue,
    pub new: PropertyValue,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("mutation rejected: {}", report.summary())]
pub struct RejectedMutation {
    pub report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PortError {
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
    #[error(transparent)]
    Rejected(#[from] RejectedMutation),
    #[error("{0} is not available on this model")]
    Unsupported(&'static str),
}

/// Accessor failures on the view port. None of these is a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ReadRefused {
    #[error("model data not loaded yet")]
    NotBound,
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
}

/// Verbs a model port can expose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortVerb {
    Get,
    ReadAll,
    Set,
    Mutate,
    MutateBatch,
    Validate,
    Commit,
    Load,
    IsDirty,
    Save,
    LoadRows,
    PageView,
}

impl PortVerb {
    pub fn as_str(&self) -> &'static str {
        match self {
            PortVerb::Get => "get",
            PortVerb::ReadAll => "read_all",
            PortVerb::Set => "set",
            PortVerb::Mutate => "mutate",
            PortVerb::MutateBatch => "mutate_batch",
            PortVerb::Validate => "validate",
            PortVerb::Commit => "commit",
            PortVerb::Load => "load",
            PortVerb::IsDirty => "is_dirty",
            PortVerb::Save => "save",
            PortVerb::LoadRows => "load_rows",
            PortVerb::PageView => "page_view",
        }
    }

    pub fn is_mutating(&self) -> bool {
        matches!(
            self,
            PortVerb::Set
                | PortVerb::Mutate
                | PortVerb::MutateBatch
                | PortVerb::Commit
                | PortVerb::Load
                | PortVerb::Save
                | PortVerb::LoadRows
        )
    }
}

/// A call made through a port, as carried on the bus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortCall {
    Get(String),
    ReadAll,
    Set(String, PropertyValue),
    Mutate(String, PropertyValue),
    MutateBatch(Vec<(String, PropertyValue)>),
    Validate,
    Commit,
    Load,
    IsDirty,
    Save,
    LoadRows { page: u32, rows: Vec<Snapshot> },
    PageView(u32),
}

impl PortCall {
    pub fn verb(&self) -> PortVerb {
        match self {
            PortCall::Get(_) => PortVerb::Get,
            PortCall::ReadAll => PortVerb::ReadAll,
            PortCall::Set(..) => PortVerb::Set,
            PortCall::Mutate(..) => PortVerb::Mutate,
            PortCall::MutateBatch(_) => PortVerb::MutateBatch,
            PortCall::Validate => PortVerb::Validate,
            PortCall::Commit => PortVerb::Commit,
            PortCall::Load => PortVerb::Load,
            PortCall::IsDirty => PortVerb::IsDirty,
            PortCall::Save => PortVerb::Save,
            PortCall::LoadRows { .. } => PortVerb::LoadRows,
            PortCall::PageView(_) => PortVerb::PageView,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortReply {
    Value(PropertyValue),
    Snapshot(Snapshot),
    Revision(u64),
    Rejected(ValidationReport),
    Report(ValidationReport),
    Dirty(bool),
    Rows(Vec<Snapshot>),
    /// The model started an asynchronous operation with the services layer.
    Pending,
    Refused(String),
}

/// Notification from a service-backed model to its controller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelEvent {
    Loaded { version: u64 },
    Saved { version: u64 },
    Fault { kind: FaultKind, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDescriptor {
    pub verbs: Vec<PortVerb>,
}

impl PortDescriptor {
    pub fn exposes(&self, verb: PortVerb) -> bool {
        self.verbs.contains(&verb)
    }

    pub fn has_mutators(&self) -> bool {
        self.verbs.iter().any(PortVerb::is_mutating)
    }
}

/// Port layout per pattern: `(controller port, view read port)`.
pub fn ports(pattern: Pattern) -> (PortDescriptor, Option<PortDescriptor>) {
    use PortVerb::*;
    let controller = match pattern {
        Pattern::PassiveView => vec![Get, ReadAll, Set],
        Pattern::ClosedModel => vec![Get, ReadAll, Mutate, MutateBatch],
        Pattern::OpenModel => vec![Get, ReadAll, Set, Validate, Commit, IsDirty],
        Pattern::DisconnectedModel => vec![Get, ReadAll, LoadRows, PageView],
        Pattern::ModelAsServicesFacade | Pattern::ActiveView => {
            vec![Load, Set, IsDirty, Validate, Save]
        }
    };
    let view = match pattern {
        Pattern::PassiveView => None,
        _ => Some(PortDescriptor {
            verbs: vec![Get, ReadAll],
        }),
    };
    (PortDescriptor { verbs: controller }, view)
}

/// What a service-backed model is bound to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityBinding {
    pub entity: String,
    pub id: i64,
    pub version: u64,
    pub loaded: bool,
    /// Last save request, re-sent verbatim on retry.
    pub last_save: Option<Request>,
}

#[derive(Debug, Clone)]
pub struct Model {
    schema: Schema,
    rules: Vec<Rule>,
    snapshot: Snapshot,
    timing: ValidationTiming,
    /// Reads through the view port are refused until this is set.
    bound: bool,
    entity: Option<EntityBinding>,
    pages: std::collections::BTreeMap<u32, Vec<Snapshot>>,
}

impl Model {
    pub fn new(schema: Schema, rules: Vec<Rule>, timing: ValidationTiming) -> Self {
        let snapshot = schema.blank_snapshot();
        Self {
            schema,
            rules,
            snapshot,
            timing,
            bound: true,
            entity: None,
            pages: Default::default(),
        }
    }

    /// A model that fronts one entity of a service; unbound until loaded.
    pub fn service_backed(
        schema: Schema,
        rules: Vec<Rule>,
        entity: impl Into<String>,
        id: i64,
    ) -> Self {
        let mut model = Self::new(schema, rules, ValidationTiming::Deferred);
        model.bound = false;
        model.entity = Some(EntityBinding {
            entity: entity.into(),
            id,
            version: 0,
            loaded: false,
            last_save: None,
        });
        model
    }

    /// Seeds values without touching revision or dirty flags.
    pub fn seed(&mut self, values: &[(String, PropertyValue)]) {
        let mut seeded = self.snapshot.clone();
        for (k, v) in values {
            seeded.set(k, v.clone());
        }
        seeded.clear_dirty();
        self.snapshot = Snapshot::from_pairs(seeded.entries().map(|(k, v)| (k, v.clone())));
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn timing(&self) -> ValidationTiming {
        self.timing
    }

    pub fn is_bound(&self) -> bool {
        self.bound
    }

    pub fn entity(&self) -> Option<&EntityBinding> {
        self.entity.as_ref()
    }

    pub fn controller_port(&mut self) -> ControllerPort<'_> {
        ControllerPort { model: self }
    }

    pub fn view_port(&self) -> ViewPort<'_> {
        ViewPort { model: self }
    }
}

pub struct ControllerPort<'a> {
    model: &'a mut Model,
}

impl ControllerPort<'_> {
    fn require(&self, property: &str) -> Result<(), PortError> {
        if self.model.schema.contains(property) {
            Ok(())
        } else {
            Err(PortError::UnknownProperty(property.to_string()))
        }
    }

    pub fn get(&self, property: &str) -> Result<PropertyValue, PortError> {
        self.require(property)?;
        Ok(self.model.snapshot.value(property).clone())
    }

    pub fn read_all(&self) -> Snapshot {
        self.model.snapshot.clone()
    }

    /// Validate-in-mutator: the candidate must be clean, otherwise the model
    /// is left exactly as it was.
    pub fn mutate_closed(
        &mut self,
        property: &str,
        value: PropertyValue,
    ) -> Result<u64, PortError> {
        self.mutate_closed_batch(&[(property.to_string(), value)])
    }

    /// All-or-nothing: the whole batch is evaluated as one candidate.
    pub fn mutate_closed_batch(
        &mut self,
        changes: &[(String, PropertyValue)],
    ) -> Result<u64, PortError> {
        for (property, _) in changes {
            self.require(property)?;
        }
        let candidate = self
            .model
            .snapshot
            .with_changes(changes.iter().map(|(k, v)| (k.as_str(), v)));
        let report = evaluate(&candidate, &self.model.rules);
        if !report.is_clean() {
            return Err(RejectedMutation { report }.into());
        }
        self.model.snapshot = candidate;
        Ok(self.model.snapshot.revision())
    }

    /// Deferred-validation mutator: stores the value no matter what.
    ///
    /// Text is coerced to the declared kind when it parses; otherwise it is
    /// kept verbatim so views can show exactly what the user typed.
    pub fn mutate_open(
        &mut self,
        property: &str,
        value: PropertyValue,
    ) -> Result<ChangeNotice, PortError> {
        let kind = self
            .model
            .schema
            .kind_of(property)
            .ok_or_else(|| PortError::UnknownProperty(property.to_string()))?;
        let value = match value {
            PropertyValue::Text(raw) => kind.parse(property, &raw).unwrap_or(PropertyValue::Text(raw)),
            other => other,
        };
        let old = self.model.snapshot.set(property, value.clone());
        Ok(ChangeNotice {
            property: property.to_string(),
            old,
            new: value,
            revision: self.model.snapshot.revision(),
        })
    }

    pub fn validate(&self) -> ValidationReport {
        evaluate(&self.model.snapshot, &self.model.rules)
    }

    /// Accepts the current state as committed. Refused while validation fails.
    pub fn commit(&mut self) -> Result<u64, PortError> {
        let report = self.validate();
        if !report.is_clean() {
            return Err(RejectedMutation { report }.into());
        }
        self.model.snapshot.clear_dirty();
        Ok(self.model.snapshot.revision())
    }

    pub fn is_dirty(&self) -> bool {
        self.model.snapshot.is_dirty()
    }

    pub fn load_rows(&mut self, page: u32, rows: Vec<Snapshot>) -> u64 {
        self.model.pages.insert(page, rows);
        // the page cache is model state too
        self.model.snapshot.bump_revision();
        self.model.snapshot.revision()
    }

    pub fn page_view(&self, page: u32) -> Vec<Snapshot> {
        self.model.pages.get(&page).cloned().unwrap_or_default()
    }

    /// Starts loading the bound entity. `None` for in-memory models, which
    /// are always loaded.
    pub fn load_request(&mut self) -> Option<Request> {
        let binding = self.model.entity.as_ref()?;
        Some(Request::LoadEntity {
            entity: binding.entity.clone(),
            id: binding.id,
        })
    }

    /// Builds (or re-uses, on retry) the save request. `None` for in-memory
    /// models, which save by clearing their dirty flags.
    pub fn save_request(&mut self, retry: bool) -> Option<Request> {
        let snapshot = &self.model.snapshot;
        let binding = self.model.entity.as_mut()?;
        if retry {
            if let Some(previous) = &binding.last_save {
                return Some(previous.clone());
            }
        }
        let record = Snapshot::from_pairs(snapshot.entries().map(|(k, v)| (k, v.clone())));
        let request = Request::SaveEntity {
            entity: binding.entity.clone(),
            record,
            version: binding.version,
        };
        binding.last_save = Some(request.clone());
        Some(request)
    }

    pub fn mark_saved_locally(&mut self) {
        self.model.snapshot.clear_dirty();
    }

    pub fn mark_loaded_locally(&mut self) {
        self.model.bound = true;
    }

    /// Applies a service outcome addressed to this model.
    pub fn apply_service_event(&mut self, event: &ServiceEvent) -> ModelEvent {
        match &event.outcome {
            Outcome::Completion(Completion::Entity { record, version }) => {
                let mut next = self.model.schema.blank_snapshot();
                for (k, v) in record.entries() {
                    if self.model.schema.contains(k) {
                        next.set(k, v.clone());
                    }
                }
                self.model.snapshot.replace_entries(&next);
                self.model.bound = true;
                if let Some(b) = self.model.entity.as_mut() {
                    b.version = *version;
                    b.loaded = true;
                }
                ModelEvent::Loaded { version: *version }
            }
            Outcome::Completion(Completion::Saved { version }) => {
                self.model.snapshot.clear_dirty();
                if let Some(b) = self.model.entity.as_mut() {
                    b.version = *version;
                    b.last_save = None;
                }
                ModelEvent::Saved { version: *version }
            }
            Outcome::Completion(Completion::Page(_)) => ModelEvent::Fault {
                kind: FaultKind::ConnectionError,
                message: "unexpected page result".into(),
            },
            Outcome::Fault { kind, message } => ModelEvent::Fault {
                kind: *kind,
                message: message.clone(),
            },
        }
    }
}

pub struct ViewPort<'a> {
    model: &'a Model,
}

impl ViewPort<'_> {
    pub fn get(&self, property: &str) -> Result<PropertyValue, ReadRefused> {
        if !self.model.bound {
            return Err(ReadRefused::NotBound);
        }
        self.model
            .snapshot
            .get(property)
            .cloned()
            .ok_or_else(|| ReadRefused::UnknownProperty(property.to_string()))
    }

    pub fn read_all(&self) -> Result<Snapshot, ReadRefused> {
        if !self.model.bound {
            return Err(ReadRefused::NotBound);
        }
        Ok(self.model.snapshot.clone())
    }
}

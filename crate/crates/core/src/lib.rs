//! Headless MVC pattern variants over an audited message bus.
//!
//! Six blueprints (passive view, closed model, open model, disconnected
//! model, model as services façade, active view) share one instrumented
//! [`bus::Bus`], a virtual-clock [`services::ServiceSim`], and a test kit
//! that audits who talked to whom.

pub mod bus;
pub mod demos;
pub mod model;
pub mod services;
pub mod session;
pub mod testkit;
pub mod triad;
pub mod triads;
pub mod validation;
pub mod value;
pub mod vocab;

pub use bus::{ComponentId, ComponentKind, EventEnvelope, ForbiddenEdge, RunLog, TriadId};
pub use session::{AttachError, Disposition, Session, ViewCallError};
pub use triad::{AssembleError, Pattern, TriadHandle, TriadSpec, WiringError};
pub use triads::{mask_step, CommitResult, DispatchError, MaskStep, SaveResult};
pub use value::{Decimal, PropertyValue, Schema, Snapshot, ValueKind};
pub use vocab::{CommandName, Gesture, PromptKind, RenderCommand};

//! Test support: flow audits, conformance tables, view doubles and replay.

pub mod audit;
pub mod conformance;
pub mod double;
pub mod replay;

pub use audit::{audit, FlowReport};
pub use conformance::{check_conformance, check_conformance_named, ConformanceViolation};
pub use double::{make_view_double, BadScript, DoubleMode, ScriptStep, StepOutcome, ViewDouble};
pub use replay::{replay, replay_session, replay_text, ReplayError, Replayed, Transcript};

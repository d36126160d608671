//! View doubles: stand-ins for a real view surface in tests.

use thiserror::Error;

use crate::bus::TriadId;
use crate::model::{PortCall, PortReply};
use crate::session::{Session, ViewCallError};
use crate::triads::DispatchError;
use crate::vocab::{Gesture, RenderCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleMode {
    /// Plays its gesture script.
    Scripted,
    /// Only listens.
    Recording,
    /// Tries the port calls in its script, allowed or not.
    Hostile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptStep {
    Gesture(Gesture),
    Call(PortCall),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script step {index} at tick {tick} comes after tick {previous}")]
pub struct BadScript {
    pub index: usize,
    pub tick: u64,
    pub previous: u64,
}

/// What one step led to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Rendered(Vec<RenderCommand>),
    Refused(DispatchError),
    Replied(PortReply),
    CallFailed(ViewCallError),
}

#[derive(Debug, Clone)]
pub struct ViewDouble {
    mode: DoubleMode,
    script: Vec<(u64, ScriptStep)>,
    pub captured: Vec<RenderCommand>,
    pub outcomes: Vec<StepOutcome>,
}

pub fn make_view_double(
    mode: DoubleMode,
    script: Vec<(u64, ScriptStep)>,
) -> Result<ViewDouble, BadScript> {
    for (index, pair) in script.windows(2).enumerate() {
        if pair[1].0 < pair[0].0 {
            return Err(BadScript {
                index: index + 1,
                tick: pair[1].0,
                previous: pair[0].0,
            });
        }
    }
    Ok(ViewDouble {
        mode,
        script,
        captured: Vec::new(),
        outcomes: Vec::new(),
    })
}

impl ViewDouble {
    pub fn mode(&self) -> DoubleMode {
        self.mode
    }

    /// Plays the script as view `view` of `triad`, then captures every
    /// render command that view received.
    pub fn run(&mut self, session: &mut Session, triad: TriadId, view: usize) {
        if self.mode != DoubleMode::Recording {
            for (tick, step) in self.script.clone() {
                let now = session.now();
                if tick > now {
                    session.tick(tick - now);
                }
                let outcome = match (self.mode, step) {
                    (DoubleMode::Scripted, ScriptStep::Gesture(g)) => {
                        match session.dispatch_from(triad, view, g) {
                            Ok(r) => StepOutcome::Rendered(r),
                            Err(e) => StepOutcome::Refused(e),
                        }
                    }
                    (DoubleMode::Hostile, ScriptStep::Call(call)) => {
                        match session.view_call(triad, view, call) {
                            Ok(r) => StepOutcome::Replied(r),
                            Err(e) => StepOutcome::CallFailed(e),
                        }
                    }
                    // a double only performs steps of its own kind
                    _ => continue,
                };
                self.outcomes.push(outcome);
            }
        }
        self.capture(session, triad, view);
    }

    pub fn capture(&mut self, session: &Session, triad: TriadId, view: usize) {
        if let Some(state) = session.views(triad).get(view) {
            self.captured = session.renders_for(state.id);
        }
    }
}

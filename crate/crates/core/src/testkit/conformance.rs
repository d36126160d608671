//! Per-pattern conformance tables, checked against a flow report.
//!
//! Deliberately written without reusing the bus's own edge policy, so the
//! two can disagree and a test can notice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bus::ComponentKind::{self, Controller, Model, Service, View};
use crate::triad::{Pattern, UnknownPattern};

use super::audit::FlowReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceViolation {
    pub pattern: Pattern,
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for ConformanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.pattern, self.rule, self.detail)
    }
}

struct Checker<'a> {
    report: &'a FlowReport,
    pattern: Pattern,
    out: Vec<ConformanceViolation>,
}

impl Checker<'_> {
    fn fail(&mut self, rule: impl Into<String>, detail: impl Into<String>) {
        self.out.push(ConformanceViolation {
            pattern: self.pattern,
            rule: rule.into(),
            detail: detail.into(),
        });
    }

    fn forbid(&mut self, source: ComponentKind, target: ComponentKind) {
        for e in &self.report.edges {
            if e.source == source && e.target == target && e.count > 0 {
                let detail = format!("{}->{} {} x{}", e.source, e.target, e.verb, e.count);
                self.fail(format!("no {source}->{target} edges"), detail);
            }
        }
    }

    fn forbid_both(&mut self, a: ComponentKind, b: ComponentKind) {
        self.forbid(a, b);
        self.forbid(b, a);
    }
}

pub fn check_conformance(report: &FlowReport, pattern: Pattern) -> Vec<ConformanceViolation> {
    let mut c = Checker {
        report,
        pattern,
        out: Vec::new(),
    };
    match pattern {
        Pattern::PassiveView => c.forbid_both(View, Model),
        Pattern::ClosedModel => c.forbid_both(Model, Service),
        Pattern::OpenModel => {
            c.forbid_both(Model, Service);
            if report.mutator_errors > 0 {
                let n = report.mutator_errors;
                c.fail("mutators never return errors", format!("{n} error replies"));
            }
            for gate in report.commit_gates.iter().filter(|g| !g.gated) {
                let detail = format!("commit seq {} on {}", gate.seq, gate.model);
                c.fail("commit preceded by a clean validate", detail);
            }
        }
        Pattern::DisconnectedModel => {
            c.forbid_both(Model, Service);
            c.forbid_both(View, Service);
        }
        Pattern::ModelAsServicesFacade => {
            c.forbid_both(Controller, Service);
            let down = report.count_verb(Service, Model, "fault");
            let up = report.count_verb(Model, Controller, "fault");
            if down != up {
                c.fail(
                    "faults travel Service->Model->Controller",
                    format!("{down} faults reached models, {up} reached controllers"),
                );
            }
        }
        Pattern::ActiveView => {
            let mutating = report.count_mutating(View, Model);
            if mutating > 0 {
                c.fail("no mutating View->Model edges", format!("{mutating} mutating calls"));
            }
            for r in report.data_renders.iter().filter(|r| r.source.kind == Controller) {
                let detail = format!("seq {} {} -> {}", r.seq, r.verb, r.view);
                c.fail("no Controller->View data renders", detail);
            }
            let views_got_data = report.count(Model, View) > 0 || !report.data_renders.is_empty();
            if views_got_data && report.count(Model, View) == 0 {
                c.fail("views read the model directly", "no Model->View edges");
            }
        }
    }
    for p in report.prompts.iter().filter(|p| p.source.kind != Controller) {
        let detail = format!("seq {} from {}", p.seq, p.source);
        c.fail("prompts come from a controller", detail);
    }
    c.out
}

/// Same as [`check_conformance`], with the pattern given by name.
pub fn check_conformance_named(
    report: &FlowReport,
    pattern: &str,
) -> Result<Vec<ConformanceViolation>, UnknownPattern> {
    Ok(check_conformance(report, pattern.parse()?))
}

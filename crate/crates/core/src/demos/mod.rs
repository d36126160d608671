//! The five reference demos and the files they read and write.

use serde::Serialize;

use crate::services::{
    Dataset, FaultKind, FaultRule, Latency, RequestKind, RequestMatcher, ServicePlan,
};
use crate::session::Session;
use crate::triad::{options, ControllerKind, Pattern, TriadSpec, MASKED_FIELD};
use crate::validation::{Relation, Rule};
use crate::value::{Decimal, PropertyValue, Schema, Snapshot, ValueKind};

pub mod cli;
pub mod scenario;

pub const PHONE_MASK: &str = "(###) ###-####";
pub const EMPLOYEES: i64 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoName {
    Masked,
    Form,
    Sheet,
    Pager,
    Refdata,
}

impl DemoName {
    pub const ALL: [DemoName; 5] = [
        DemoName::Masked,
        DemoName::Form,
        DemoName::Sheet,
        DemoName::Pager,
        DemoName::Refdata,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DemoName::Masked => "masked",
            DemoName::Form => "form",
            DemoName::Sheet => "sheet",
            DemoName::Pager => "pager",
            DemoName::Refdata => "refdata",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.as_str() == name)
    }
}

/// Knobs the command line may override.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DemoOptions {
    pub seed: Option<u64>,
    pub latency: Option<u64>,
    pub fault_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoDescriptor {
    pub name: DemoName,
    pub summary: &'static str,
    /// Patterns whose conformance tables the demo must satisfy.
    pub patterns: Vec<Pattern>,
    pub specs: Vec<TriadSpec>,
    pub plan: Option<ServicePlan>,
    /// Scenario shipped with the demo.
    pub default_script: &'static str,
}

impl DemoDescriptor {
    pub fn get(name: DemoName) -> Self {
        match name {
            DemoName::Masked => masked(),
            DemoName::Form => form(),
            DemoName::Sheet => sheet(),
            DemoName::Pager => pager(),
            DemoName::Refdata => refdata(),
        }
    }

    /// The plan with command-line overrides applied.
    pub fn plan_with(&self, opts: DemoOptions) -> ServicePlan {
        let mut plan = self.plan.clone().unwrap_or_default();
        if let Some(seed) = opts.seed {
            plan.seed = seed;
        }
        if let Some(ticks) = opts.latency {
            plan.latency = Latency::uniform(ticks);
        }
        if let Some(rate) = opts.fault_rate {
            plan.faults.retain(|f| !matches!(f.attempts, crate::services::AttemptMatcher::Rate(_)));
            if rate > 0.0 {
                plan.faults.push(FaultRule::rate(
                    RequestMatcher::any(),
                    rate,
                    FaultKind::ConnectionError,
                ));
            }
        }
        plan
    }

    /// A fresh session with every triad of the demo assembled.
    pub fn launch(&self, opts: DemoOptions) -> Result<(Session, Vec<crate::bus::TriadId>), crate::triad::AssembleError> {
        self.launch_with(self.plan_with(opts), &self.specs)
    }

    pub fn launch_with(
        &self,
        plan: ServicePlan,
        specs: &[TriadSpec],
    ) -> Result<(Session, Vec<crate::bus::TriadId>), crate::triad::AssembleError> {
        let mut session = Session::new(plan);
        let mut ids = Vec::new();
        for spec in specs {
            ids.push(session.assemble_triad(spec.clone())?.id);
        }
        Ok((session, ids))
    }
}

/// Stable order, one line each.
pub fn list_demos() -> Vec<(&'static str, String)> {
    DemoName::ALL
        .into_iter()
        .map(|n| {
            let d = DemoDescriptor::get(n);
            let patterns: Vec<&str> = d.patterns.iter().map(Pattern::as_str).collect();
            (n.as_str(), format!("[{}] {}", patterns.join(", "), d.summary))
        })
        .collect()
}

fn masked() -> DemoDescriptor {
    let schema = Schema::of(&[("phone", ValueKind::Text)]).expect("static schema");
    let spec = TriadSpec::new(Pattern::PassiveView, schema, MASKED_FIELD)
        .with_option(options::MASK, PHONE_MASK)
        .with_rules(vec![Rule::TextPattern {
            property: "phone".into(),
            mask: PHONE_MASK.into(),
        }]);
    DemoDescriptor {
        name: DemoName::Masked,
        summary: "masked phone-number edit box; the view never sees the model",
        patterns: vec![Pattern::PassiveView],
        specs: vec![spec],
        plan: None,
        default_script: "masked_phone.scn",
    }
}

pub fn form_schema() -> Schema {
    Schema::of(&[
        ("name", ValueKind::Text),
        ("age", ValueKind::Integer),
        ("start", ValueKind::Integer),
        ("end", ValueKind::Integer),
        ("zip", ValueKind::Text),
    ])
    .expect("static schema")
}

pub fn form_rules() -> Vec<Rule> {
    vec![
        Rule::Required("name".into()),
        Rule::Required("age".into()),
        Rule::IntRange {
            property: "age".into(),
            min: 0,
            max: 150,
        },
        Rule::IntRange {
            property: "start".into(),
            min: 1,
            max: 9999,
        },
        Rule::CrossField {
            left: "start".into(),
            relation: Relation::LessOrEqual,
            right: "end".into(),
        },
        Rule::TextPattern {
            property: "zip".into(),
            mask: "#####".into(),
        },
    ]
}

fn form() -> DemoDescriptor {
    let spec = TriadSpec::new(Pattern::ClosedModel, form_schema(), "form")
        .with_rules(form_rules())
        .with_initial(vec![
            ("name".into(), PropertyValue::text("Ada")),
            ("age".into(), PropertyValue::Integer(36)),
            ("start".into(), PropertyValue::Integer(1)),
            ("end".into(), PropertyValue::Integer(5)),
            ("zip".into(), PropertyValue::text("02139")),
        ]);
    DemoDescriptor {
        name: DemoName::Form,
        summary: "employee form; input waits in the view until commit",
        patterns: vec![Pattern::ClosedModel],
        specs: vec![spec],
        plan: None,
        default_script: "form_commit.scn",
    }
}

pub fn sheet_cells() -> Vec<String> {
    let mut cells = Vec::new();
    for row in 1..=3 {
        for col in ['A', 'B', 'C'] {
            cells.push(format!("{col}{row}"));
        }
    }
    cells
}

fn sheet() -> DemoDescriptor {
    let cells = sheet_cells();
    let defs: Vec<(&str, ValueKind)> = cells.iter().map(|c| (c.as_str(), ValueKind::Text)).collect();
    let schema = Schema::of(&defs).expect("static schema");
    let rules = cells.iter().cloned().map(Rule::FormulaWellFormed).collect();
    let spec = TriadSpec::new(Pattern::OpenModel, schema, "grid").with_rules(rules);
    DemoDescriptor {
        name: DemoName::Sheet,
        summary: "3x3 spreadsheet; anything is stored, formulas are checked on commit",
        patterns: vec![Pattern::OpenModel],
        specs: vec![spec],
        plan: None,
        default_script: "sheet_invalid_formula.scn",
    }
}

pub fn employee_dataset(rows: i64) -> Dataset {
    const DEPTS: [&str; 4] = ["sales", "ops", "research", "support"];
    let mut data = Dataset::default();
    for id in 1..=rows {
        data.push_row(
            "employee",
            Snapshot::from_pairs([
                ("id", PropertyValue::Integer(id)),
                ("name", PropertyValue::text(format!("employee {id:02}"))),
                ("dept", PropertyValue::text(DEPTS[(id as usize) % DEPTS.len()])),
            ]),
        );
    }
    data
}

fn pager() -> DemoDescriptor {
    let schema = Schema::of(&[
        ("id", ValueKind::Integer),
        ("name", ValueKind::Text),
        ("dept", ValueKind::Text),
    ])
    .expect("static schema");
    let spec = TriadSpec::new(Pattern::DisconnectedModel, schema, "list")
        .with_service("employee")
        .with_option(options::PAGE_SIZE, "20");
    let plan = ServicePlan {
        seed: 7,
        latency: Latency::uniform(3),
        faults: vec![FaultRule::rate(
            RequestMatcher::kind(RequestKind::FetchPage),
            0.3,
            FaultKind::ConnectionError,
        )],
        dataset: employee_dataset(EMPLOYEES),
    };
    DemoDescriptor {
        name: DemoName::Pager,
        summary: "paged employee browser; the controller talks to the services layer",
        patterns: vec![Pattern::DisconnectedModel],
        specs: vec![spec],
        plan: Some(plan),
        default_script: "pager_retry.scn",
    }
}

fn percent(mantissa: i64) -> PropertyValue {
    PropertyValue::Decimal(Decimal::new(mantissa, 2).expect("scale 2"))
}

pub fn refdata_dataset() -> Dataset {
    let mut data = Dataset::default();
    for id in 1..=10 {
        data.push_row(
            "discount_type",
            Snapshot::from_pairs([
                ("id", PropertyValue::Integer(id)),
                ("name", PropertyValue::text(format!("discount {id}"))),
                ("percent", percent(id * 250)),
                ("active", PropertyValue::Flag(id % 2 == 1)),
            ]),
        );
        data.push_row(
            "customer_type",
            Snapshot::from_pairs([
                ("id", PropertyValue::Integer(id)),
                ("title", PropertyValue::text(format!("tier {id}"))),
                ("credit_limit", percent(id * 100_000)),
                ("vip", PropertyValue::Flag(id % 2 == 1)),
            ]),
        );
    }
    data
}

pub fn refdata_specs() -> Vec<TriadSpec> {
    let discount = TriadSpec::new(
        Pattern::ModelAsServicesFacade,
        Schema::of(&[
            ("id", ValueKind::Integer),
            ("name", ValueKind::Text),
            ("percent", ValueKind::Decimal { scale: 2 }),
            ("active", ValueKind::Flag),
        ])
        .expect("static schema"),
        "record",
    )
    .with_service("discount_type")
    .with_controller(ControllerKind::Generic)
    .with_option(options::ENTITY_ID, "7")
    .with_rules(vec![
        Rule::Required("name".into()),
        Rule::IntRange {
            property: "percent".into(),
            min: 0,
            max: 100,
        },
    ]);
    let customer = TriadSpec::new(
        Pattern::ModelAsServicesFacade,
        Schema::of(&[
            ("id", ValueKind::Integer),
            ("title", ValueKind::Text),
            ("credit_limit", ValueKind::Decimal { scale: 2 }),
            ("vip", ValueKind::Flag),
        ])
        .expect("static schema"),
        "record",
    )
    .with_service("customer_type")
    .with_controller(ControllerKind::Generic)
    .with_option(options::ENTITY_ID, "7")
    .with_rules(vec![
        Rule::Required("title".into()),
        Rule::IntRange {
            property: "credit_limit".into(),
            min: 0,
            max: 1_000_000,
        },
    ]);
    vec![discount, customer]
}

fn refdata() -> DemoDescriptor {
    DemoDescriptor {
        name: DemoName::Refdata,
        summary: "discount and customer types edited through one generic controller",
        patterns: vec![Pattern::ModelAsServicesFacade, Pattern::ActiveView],
        specs: refdata_specs(),
        plan: Some(ServicePlan {
            seed: 7,
            latency: Latency::uniform(3),
            faults: Vec::new(),
            dataset: refdata_dataset(),
        }),
        default_script: "refdata_both.scn",
    }
}

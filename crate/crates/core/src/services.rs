//! In-memory stand-in for the remote services layer.
//!
//! Requests complete on a virtual clock after a per-kind latency. A fault
//! schedule can turn chosen attempts into faults. Nothing here knows about
//! views, controllers or render commands.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::value::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    FetchPage,
    LoadEntity,
    SaveEntity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Request {
    FetchPage {
        entity: String,
        filter: String,
        page: u32,
        page_size: u32,
    },
    LoadEntity {
        entity: String,
        id: i64,
    },
    SaveEntity {
        entity: String,
        record: Snapshot,
        version: u64,
    },
}

impl Request {
    pub fn kind(&self) -> RequestKind {
        match self {
            Request::FetchPage { .. } => RequestKind::FetchPage,
            Request::LoadEntity { .. } => RequestKind::LoadEntity,
            Request::SaveEntity { .. } => RequestKind::SaveEntity,
        }
    }

    pub fn verb(&self) -> &'static str {
        match self.kind() {
            RequestKind::FetchPage => "fetch_page",
            RequestKind::LoadEntity => "load_entity",
            RequestKind::SaveEntity => "save_entity",
        }
    }

    pub fn entity(&self) -> &str {
        match self {
            Request::FetchPage { entity, .. }
            | Request::LoadEntity { entity, .. }
            | Request::SaveEntity { entity, .. } => entity,
        }
    }

    /// Byte-exact identity of the logical request; retries share it.
    pub fn key(&self) -> String {
        serde_json::to_value(self)
            .expect("request serializes")
            .to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageResult {
    pub rows: Vec<Snapshot>,
    pub page: u32,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    Page(PageResult),
    Entity { record: Snapshot, version: u64 },
    Saved { version: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultKind {
    ConnectionError,
    Timeout,
    ConcurrencyConflict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completion(Completion),
    Fault { kind: FaultKind, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEvent {
    pub request: RequestId,
    pub outcome: Outcome,
}

impl ServiceEvent {
    pub fn is_fault(&self) -> bool {
        matches!(self.outcome, Outcome::Fault { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Latency {
    pub fetch_page: u64,
    pub load_entity: u64,
    pub save_entity: u64,
}

impl Latency {
    pub fn uniform(ticks: u64) -> Self {
        Self {
            fetch_page: ticks,
            load_entity: ticks,
            save_entity: ticks,
        }
    }

    fn of(&self, kind: RequestKind) -> u64 {
        match kind {
            RequestKind::FetchPage => self.fetch_page,
            RequestKind::LoadEntity => self.load_entity,
            RequestKind::SaveEntity => self.save_entity,
        }
    }
}

impl Default for Latency {
    fn default() -> Self {
        Self::uniform(3)
    }
}

/// Which requests a fault rule looks at. `None` fields match anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestMatcher {
    #[serde(default)]
    pub kind: Option<RequestKind>,
    #[serde(default)]
    pub entity: Option<String>,
    #[serde(default)]
    pub page: Option<u32>,
}

impl RequestMatcher {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn kind(kind: RequestKind) -> Self {
        Self {
            kind: Some(kind),
            ..Self::default()
        }
    }

    pub fn fetch_page(page: u32) -> Self {
        Self {
            kind: Some(RequestKind::FetchPage),
            page: Some(page),
            ..Self::default()
        }
    }

    pub fn matches(&self, request: &Request) -> bool {
        if self.kind.is_some_and(|k| k != request.kind()) {
            return false;
        }
        if self.entity.as_deref().is_some_and(|e| e != request.entity()) {
            return false;
        }
        match (self.page, request) {
            (None, _) => true,
            (Some(p), Request::FetchPage { page, .. }) => p == *page,
            (Some(_), _) => false,
        }
    }
}

/// Which attempts (per logical request, counted from 1) fault.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptMatcher {
    FirstN(u32),
    Nth(u32),
    Always,
    /// Seeded coin flip per matching submit.
    Rate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRule {
    pub requests: RequestMatcher,
    pub attempts: AttemptMatcher,
    pub fault: FaultKind,
}

impl FaultRule {
    pub fn first_attempts(requests: RequestMatcher, n: u32, fault: FaultKind) -> Self {
        Self {
            requests,
            attempts: AttemptMatcher::FirstN(n),
            fault,
        }
    }

    pub fn rate(requests: RequestMatcher, p: f64, fault: FaultKind) -> Self {
        Self {
            requests,
            attempts: AttemptMatcher::Rate(p),
            fault,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub row: Snapshot,
    pub version: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTable {
    pub name: String,
    pub records: Vec<Record>,
}

/// Ordered entity tables. Rows carry an integer `id` property.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub tables: Vec<EntityTable>,
}

impl Dataset {
    pub fn table(&self, name: &str) -> Option<&EntityTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn table_mut(&mut self, name: &str) -> &mut EntityTable {
        if let Some(i) = self.tables.iter().position(|t| t.name == name) {
            return &mut self.tables[i];
        }
        self.tables.push(EntityTable {
            name: name.to_string(),
            records: Vec::new(),
        });
        self.tables.last_mut().expect("just pushed")
    }

    /// Appends a row at version 1.
    pub fn push_row(&mut self, entity: &str, row: Snapshot) {
        let row = Snapshot::from_pairs(row.entries().map(|(k, v)| (k, v.clone())));
        self.table_mut(entity).records.push(Record { row, version: 1 });
    }

    fn find_mut(&mut self, entity: &str, id: i64) -> Option<&mut Record> {
        self.tables
            .iter_mut()
            .find(|t| t.name == entity)?
            .records
            .iter_mut()
            .find(|r| r.row.id() == Some(id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServicePlan {
    pub seed: u64,
    pub latency: Latency,
    #[serde(default)]
    pub faults: Vec<FaultRule>,
    #[serde(default)]
    pub dataset: Dataset,
}

impl Default for ServicePlan {
    fn default() -> Self {
        Self {
            seed: 0,
            latency: Latency::default(),
            faults: Vec::new(),
            dataset: Dataset::default(),
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    id: RequestId,
    request: Request,
    fault: Option<FaultKind>,
    attempt: u32,
}

#[derive(Debug, Clone)]
pub struct ServiceSim {
    latency: Latency,
    faults: Vec<FaultRule>,
    dataset: Dataset,
    rng: ChaCha8Rng,
    now: u64,
    next_id: u64,
    pending: BTreeMap<(u64, RequestId), Pending>,
    attempts: BTreeMap<String, u32>,
    submitted: u64,
}

impl ServiceSim {
    pub fn new(plan: ServicePlan) -> Self {
        Self {
            latency: plan.latency,
            faults: plan.faults,
            dataset: plan.dataset,
            rng: ChaCha8Rng::seed_from_u64(plan.seed),
            now: 0,
            next_id: 1,
            pending: BTreeMap::new(),
            attempts: BTreeMap::new(),
            submitted: 0,
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    /// Total requests accepted so far.
    pub fn submitted(&self) -> u64 {
        self.submitted
    }

    /// Replaces the fault schedule. Attempt counters keep running.
    pub fn plan_faults(&mut self, schedule: Vec<FaultRule>) {
        self.faults = schedule;
    }

    /// Simulates another client saving the record: its version moves on.
    pub fn bump_version(&mut self, entity: &str, id: i64) -> Option<u64> {
        let record = self.dataset.find_mut(entity, id)?;
        record.version += 1;
        Some(record.version)
    }

    pub fn submit(&mut self, request: Request) -> RequestId {
        let id = RequestId(self.next_id);
        self.next_id += 1;
        self.submitted += 1;
        let attempt = {
            let n = self.attempts.entry(request.key()).or_insert(0);
            *n += 1;
            *n
        };
        let mut fault = None;
        for rule in &self.faults {
            let hit = match rule.attempts {
                // one draw per matching rule and submit keeps the stream stable
                AttemptMatcher::Rate(p) if rule.requests.matches(&request) => {
                    self.rng.gen_bool(p.clamp(0.0, 1.0))
                }
                _ if !rule.requests.matches(&request) => false,
                AttemptMatcher::FirstN(n) => attempt <= n,
                AttemptMatcher::Nth(n) => attempt == n,
                AttemptMatcher::Always => true,
                AttemptMatcher::Rate(_) => false,
            };
            if hit && fault.is_none() {
                fault = Some(rule.fault);
            }
        }
        let due = self.now + self.latency.of(request.kind());
        self.pending.insert(
            (due, id),
            Pending {
                id,
                request,
                fault,
                attempt,
            },
        );
        id
    }

    /// `(request id, due tick)` in delivery order.
    pub fn inspect_pending(&self) -> Vec<(RequestId, u64)> {
        self.pending.keys().map(|&(due, id)| (id, due)).collect()
    }

    /// Advances the clock by `n` ticks and delivers everything due in
    /// `(now, now + n]`, ordered by (due tick, request id).
    pub fn tick(&mut self, n: u64) -> Vec<ServiceEvent> {
        let mut out = Vec::new();
        for _ in 0..n {
            self.advance_one();
            out.extend(self.drain_due());
        }
        out
    }

    pub(crate) fn advance_one(&mut self) {
        self.now += 1;
    }

    /// Delivers every pending request due at or before now.
    pub(crate) fn drain_due(&mut self) -> Vec<ServiceEvent> {
        let mut out = Vec::new();
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().0 > self.now {
                break;
            }
            let pending = entry.remove();
            out.push(self.execute(pending));
        }
        out
    }

    fn execute(&mut self, pending: Pending) -> ServiceEvent {
        let outcome = match pending.fault {
            Some(kind) => Outcome::Fault {
                kind,
                message: format!("{:?} on attempt {}", kind, pending.attempt),
            },
            None => self.perform(&pending.request),
        };
        ServiceEvent {
            request: pending.id,
            outcome,
        }
    }

    fn perform(&mut self, request: &Request) -> Outcome {
        match request {
            Request::FetchPage {
                entity,
                filter,
                page,
                page_size,
            } => {
                let size = u64::from((*page_size).max(1));
                let matching: Vec<&Record> = self
                    .dataset
                    .table(entity)
                    .map(|t| {
                        t.records
                            .iter()
                            .filter(|r| filter.is_empty() || row_contains(&r.row, filter))
                            .collect()
                    })
                    .unwrap_or_default();
                let total = matching.len() as u64;
                let start = (u64::from(*page) * size).min(total);
                let end = (start + size).min(total);
                let rows = matching[start as usize..end as usize]
                    .iter()
                    .map(|r| r.row.clone())
                    .collect();
                Outcome::Completion(Completion::Page(PageResult {
                    rows,
                    page: *page,
                    total,
                }))
            }
            Request::LoadEntity { entity, id } => match self.dataset.find_mut(entity, *id) {
                Some(r) => Outcome::Completion(Completion::Entity {
                    record: r.row.clone(),
                    version: r.version,
                }),
                None => Outcome::Fault {
                    kind: FaultKind::ConcurrencyConflict,
                    message: format!("{entity} {id} no longer exists"),
                },
            },
            Request::SaveEntity {
                entity,
                record,
                version,
            } => {
                let Some(id) = record.id() else {
                    return Outcome::Fault {
                        kind: FaultKind::ConcurrencyConflict,
                        message: "record has no id".into(),
                    };
                };
                let row = Snapshot::from_pairs(record.entries().map(|(k, v)| (k, v.clone())));
                match self.dataset.find_mut(entity, id) {
                    Some(stored) if stored.version == *version => {
                        stored.row = row;
                        stored.version += 1;
                        Outcome::Completion(Completion::Saved {
                            version: stored.version,
                        })
                    }
                    Some(stored) => Outcome::Fault {
                        kind: FaultKind::ConcurrencyConflict,
                        message: format!(
                            "{entity} {id} is at version {}, save was based on {version}",
                            stored.version
                        ),
                    },
                    None if *version == 0 => {
                        self.dataset.push_row(entity, row);
                        Outcome::Completion(Completion::Saved { version: 1 })
                    }
                    None => Outcome::Fault {
                        kind: FaultKind::ConcurrencyConflict,
                        message: format!("{entity} {id} no longer exists"),
                    },
                }
            }
        }
    }
}

fn row_contains(row: &Snapshot, needle: &str) -> bool {
    row.entries().any(|(_, v)| match v {
        crate::value::PropertyValue::Text(t) => t.contains(needle),
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::PropertyValue;

    fn employees(n: i64) -> Dataset {
        let mut d = Dataset::default();
        for id in 1..=n {
            d.push_row(
                "employee",
                Snapshot::from_pairs([
                    ("id", PropertyValue::Integer(id)),
                    ("name", PropertyValue::text(format!("emp{id}"))),
                ]),
            );
        }
        d
    }

    fn fetch(page: u32) -> Request {
        Request::FetchPage {
            entity: "employee".into(),
            filter: String::new(),
            page,
            page_size: 20,
        }
    }

    fn sim(dataset: Dataset) -> ServiceSim {
        ServiceSim::new(ServicePlan {
            dataset,
            ..ServicePlan::default()
        })
    }

    fn page_of(ev: &ServiceEvent) -> &PageResult {
        match &ev.outcome {
            Outcome::Completion(Completion::Page(p)) => p,
            other => panic!("not a page: {other:?}"),
        }
    }

    #[test]
    fn first_and_last_page_sizes() {
        let mut s = sim(employees(45));
        s.submit(fetch(0));
        s.submit(fetch(2));
        let events = s.tick(3);
        assert_eq!(events.len(), 2);
        assert_eq!(page_of(&events[0]).rows.len(), 20);
        assert_eq!(page_of(&events[0]).total, 45);
        assert_eq!(page_of(&events[1]).rows.len(), 5);
    }

    #[test]
    fn page_past_end_is_empty() {
        let mut s = sim(employees(45));
        s.submit(fetch(5));
        let events = s.tick(3);
        assert!(page_of(&events[0]).rows.is_empty());
    }

    #[test]
    fn latency_boundary() {
        let mut s = sim(employees(3));
        let id = s.submit(fetch(0));
        assert_eq!(s.inspect_pending(), [(id, 3)]);
        assert!(s.tick(2).is_empty());
        assert_eq!(s.tick(1).len(), 1);
        assert!(s.inspect_pending().is_empty());
    }

    #[test]
    fn same_due_tick_in_submit_order() {
        let mut s = sim(employees(45));
        let a = s.submit(fetch(1));
        let b = s.submit(fetch(0));
        assert!(a < b);
        let events = s.tick(3);
        assert_eq!(events.iter().map(|e| e.request).collect::<Vec<_>>(), [a, b]);
    }

    #[test]
    fn stale_version_conflicts() {
        let mut s = sim(employees(1));
        s.bump_version("employee", 1);
        s.submit(Request::SaveEntity {
            entity: "employee".into(),
            record: Snapshot::from_pairs([("id", PropertyValue::Integer(1))]),
            version: 1,
        });
        let events = s.tick(3);
        assert!(matches!(
            events[0].outcome,
            Outcome::Fault {
                kind: FaultKind::ConcurrencyConflict,
                ..
            }
        ));
    }

    #[test]
    fn save_at_current_version_bumps_it() {
        let mut s = sim(employees(1));
        s.submit(Request::SaveEntity {
            entity: "employee".into(),
            record: Snapshot::from_pairs([("id", PropertyValue::Integer(1))]),
            version: 1,
        });
        assert_eq!(
            s.tick(3)[0].outcome,
            Outcome::Completion(Completion::Saved { version: 2 })
        );
    }

    #[test]
    fn first_two_attempts_fault_then_complete() {
        let mut s = sim(employees(45));
        s.plan_faults(vec![FaultRule::first_attempts(
            RequestMatcher::fetch_page(1),
            2,
            FaultKind::ConnectionError,
        )]);
        let mut kinds = Vec::new();
        for _ in 0..3 {
            s.submit(fetch(1));
            kinds.extend(s.tick(3).iter().map(ServiceEvent::is_fault));
        }
        assert_eq!(kinds, [true, true, false]);
        // other pages are untouched
        s.submit(fetch(0));
        assert!(!s.tick(3)[0].is_fault());
    }

    #[test]
    fn empty_schedule_never_faults() {
        let mut s = sim(employees(45));
        for p in 0..50 {
            s.submit(fetch(p % 4));
        }
        assert!(s.tick(10).iter().all(|e| !e.is_fault()));
    }

    #[test]
    fn request_ids_strictly_increase() {
        let mut s = sim(employees(1));
        let a = s.submit(fetch(0));
        let b = s.submit(fetch(0));
        assert!(b > a);
        assert_eq!(s.inspect_pending().len(), 2);
    }
}

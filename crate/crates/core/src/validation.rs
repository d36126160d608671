//! Declarative validation rules shared by the closed-model (validate inside
//! mutators) and open-model (validate on request) contracts.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::triads::mask::Mask;
use crate::value::{PropertyValue, Schema, SchemaError, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    LessOrEqual,
    #[serde(rename = "=")]
    Equal,
    #[serde(rename = "!=")]
    NotEqual,
}

impl Relation {
    fn holds(&self, ord: Ordering) -> bool {
        match self {
            Relation::Less => ord == Ordering::Less,
            Relation::LessOrEqual => ord != Ordering::Greater,
            Relation::Equal => ord == Ordering::Equal,
            Relation::NotEqual => ord != Ordering::Equal,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::LessOrEqual => "<=",
            Relation::Equal => "=",
            Relation::NotEqual => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Required(String),
    IntRange {
        property: String,
        min: i64,
        max: i64,
    },
    TextPattern {
        property: String,
        mask: String,
    },
    CrossField {
        left: String,
        relation: Relation,
        right: String,
    },
    FormulaWellFormed(String),
}

impl Rule {
    pub fn properties(&self) -> Vec<&str> {
        match self {
            Rule::Required(p) | Rule::FormulaWellFormed(p) => vec![p],
            Rule::IntRange { property, .. } | Rule::TextPattern { property, .. } => {
                vec![property]
            }
            Rule::CrossField { left, right, .. } => vec![left, right],
        }
    }

    /// Schema-level checks for a ruleset.
    pub fn check_all(rules: &[Rule], schema: &Schema) -> Result<(), SchemaError> {
        for (index, rule) in rules.iter().enumerate() {
            for property in rule.properties() {
                if !schema.contains(property) {
                    return Err(SchemaError::UnknownProperty {
                        rule: index,
                        property: property.to_string(),
                    });
                }
            }
            match rule {
                Rule::IntRange { min, max, .. } if min > max => {
                    return Err(SchemaError::EmptyRange {
                        rule: index,
                        min: *min,
                        max: *max,
                    })
                }
                Rule::TextPattern { mask, .. } if mask.is_empty() => {
                    return Err(SchemaError::EmptyMask { rule: index })
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// `Some(message)` when the snapshot breaks this rule.
    fn check(&self, snapshot: &Snapshot) -> Option<String> {
        match self {
            Rule::Required(p) => snapshot
                .value(p)
                .is_absent()
                .then(|| format!("{p} is required")),
            Rule::IntRange { property, min, max } => {
                let in_range = match snapshot.value(property) {
                    PropertyValue::Absent => return None,
                    PropertyValue::Integer(v) => (*min..=*max).contains(v),
                    PropertyValue::Decimal(d) => {
                        d.cmp_integer(*min) != Ordering::Less
                            && d.cmp_integer(*max) != Ordering::Greater
                    }
                    _ => return Some(format!("{property} must be a number")),
                };
                (!in_range).then(|| format!("{property} must be between {min} and {max}"))
            }
            Rule::TextPattern { property, mask } => match snapshot.value(property) {
                PropertyValue::Absent => None,
                PropertyValue::Text(t) => (!Mask::new(mask).matches_complete(t))
                    .then(|| format!("{property} does not match {mask}")),
                _ => Some(format!("{property} must be text matching {mask}")),
            },
            Rule::CrossField {
                left,
                relation,
                right,
            } => {
                let (l, r) = (snapshot.value(left), snapshot.value(right));
                if l.is_absent() || r.is_absent() {
                    return None;
                }
                let holds = compare(l, r).map(|ord| relation.holds(ord));
                match holds {
                    Some(true) => None,
                    Some(false) => Some(format!("{left} must be {} {right}", relation.symbol())),
                    None => Some(format!("{left} and {right} are not comparable")),
                }
            }
            Rule::FormulaWellFormed(p) => match snapshot.value(p) {
                PropertyValue::Text(t) if !formula_well_formed(t) => {
                    Some("invalid formula".to_string())
                }
                _ => None,
            },
        }
    }
}

fn compare(l: &PropertyValue, r: &PropertyValue) -> Option<Ordering> {
    use PropertyValue::*;
    match (l, r) {
        (Integer(a), Integer(b)) => Some(a.cmp(b)),
        (Decimal(a), Decimal(b)) => Some(a.cmp_value(b)),
        (Decimal(a), Integer(b)) => Some(a.cmp_integer(*b)),
        (Integer(a), Decimal(b)) => Some(b.cmp_integer(*a).reverse()),
        (Text(a), Text(b)) => Some(a.cmp(b)),
        (Flag(a), Flag(b)) => Some(a.cmp(b)),
        _ => None,
    }
}

/// Text not starting with `=` is not a formula and passes. A formula needs a
/// non-empty body, balanced parentheses, and no empty argument list.
pub fn formula_well_formed(text: &str) -> bool {
    let Some(body) = text.strip_prefix('=') else {
        return true;
    };
    if body.trim().is_empty() {
        return false;
    }
    // One flag per open paren: has this group seen any non-blank content yet?
    let mut groups: Vec<bool> = Vec::new();
    for c in body.chars() {
        match c {
            '(' => {
                if let Some(outer) = groups.last_mut() {
                    *outer = true;
                }
                groups.push(false);
            }
            ')' => match groups.pop() {
                Some(true) => {}
                Some(false) | None => return false,
            },
            c if c.is_whitespace() => {}
            _ => {
                if let Some(inner) = groups.last_mut() {
                    *inner = true;
                }
            }
        }
    }
    groups.is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: usize,
    pub properties: Vec<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub revision: u64,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// One-line summary, as shown in an error box.
    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(|v| v.message.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks `snapshot` against every rule, in declaration order. Never fails:
/// problems come back as violations.
pub fn evaluate(snapshot: &Snapshot, rules: &[Rule]) -> ValidationReport {
    let violations = rules
        .iter()
        .enumerate()
        .filter_map(|(index, rule)| {
            rule.check(snapshot).map(|message| Violation {
                rule: index,
                properties: rule.properties().into_iter().map(String::from).collect(),
                message,
            })
        })
        .collect();
    ValidationReport {
        violations,
        revision: snapshot.revision(),
    }
}

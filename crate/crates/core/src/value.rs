//! Scalar property values, schemas and the snapshot property bag a model exposes.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAX_DECIMAL_SCALE: u8 = 6;

/// Fixed-point decimal: `mantissa * 10^-scale`.
#[derive(Debug, Clone, Copy)]
pub struct Decimal {
    mantissa: i64,
    scale: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecimalError {
    #[error("decimal scale {0} exceeds {MAX_DECIMAL_SCALE}")]
    ScaleTooLarge(u8),
    #[error("malformed decimal literal {0:?}")]
    Malformed(String),
}

impl Decimal {
    pub fn new(mantissa: i64, scale: u8) -> Result<Self, DecimalError> {
        if scale > MAX_DECIMAL_SCALE {
            return Err(DecimalError::ScaleTooLarge(scale));
        }
        Ok(Self { mantissa, scale })
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn scale(&self) -> u8 {
        self.scale
    }

    /// Mantissa rescaled to `scale` (which must be >= self.scale).
    fn widened(&self, scale: u8) -> i128 {
        i128::from(self.mantissa) * 10i128.pow(u32::from(scale - self.scale))
    }

    pub fn cmp_value(&self, other: &Decimal) -> Ordering {
        let scale = self.scale.max(other.scale);
        self.widened(scale).cmp(&other.widened(scale))
    }

    /// Compares against a whole number without loss.
    pub fn cmp_integer(&self, value: i64) -> Ordering {
        self.widened(self.scale)
            .cmp(&(i128::from(value) * 10i128.pow(u32::from(self.scale))))
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl Eq for Decimal {}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let digits = self.mantissa.unsigned_abs().to_string();
        let scale = usize::from(self.scale);
        let padded = format!("{digits:0>width$}", width = scale + 1);
        let (int, frac) = padded.split_at(padded.len() - scale);
        write!(f, "{sign}{int}.{frac}")
    }
}

impl FromStr for Decimal {
    type Err = DecimalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || DecimalError::Malformed(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || (body.contains('.') && frac.is_empty()) {
            return Err(malformed());
        }
        let scale = u8::try_from(frac.len()).map_err(|_| malformed())?;
        if scale > MAX_DECIMAL_SCALE {
            return Err(DecimalError::ScaleTooLarge(scale));
        }
        let magnitude: i64 = format!("{int}{frac}").parse().map_err(|_| malformed())?;
        Decimal::new(if negative { -magnitude } else { magnitude }, scale)
    }
}

// Decimals travel as strings with the scale spelled out by the fraction digits.
impl Serialize for Decimal {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyValue {
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    Flag(bool),
    Absent,
}

impl PropertyValue {
    pub fn text(s: impl Into<String>) -> Self {
        PropertyValue::Text(s.into())
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, PropertyValue::Absent)
    }

    /// How a view would show the value in an edit box.
    pub fn display_text(&self) -> String {
        match self {
            PropertyValue::Text(s) => s.clone(),
            PropertyValue::Integer(i) => i.to_string(),
            PropertyValue::Decimal(d) => d.to_string(),
            PropertyValue::Flag(b) => b.to_string(),
            PropertyValue::Absent => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Text,
    Integer,
    Decimal { scale: u8 },
    Flag,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot read {raw:?} as {expected} for property {property}")]
pub struct ParseValueError {
    pub property: String,
    pub raw: String,
    pub expected: &'static str,
}

impl ValueKind {
    /// Parses user-entered text. Empty input is `Absent` for every kind.
    pub fn parse(&self, property: &str, raw: &str) -> Result<PropertyValue, ParseValueError> {
        let raw_trimmed = raw.trim();
        if raw_trimmed.is_empty() {
            return Ok(PropertyValue::Absent);
        }
        let fail = |expected| ParseValueError {
            property: property.to_string(),
            raw: raw.to_string(),
            expected,
        };
        match self {
            ValueKind::Text => Ok(PropertyValue::Text(raw.to_string())),
            ValueKind::Integer => raw_trimmed
                .parse()
                .map(PropertyValue::Integer)
                .map_err(|_| fail("integer")),
            ValueKind::Decimal { scale } => {
                let parsed: Decimal = raw_trimmed.parse().map_err(|_| fail("decimal"))?;
                if parsed.scale() > *scale {
                    return Err(fail("decimal"));
                }
                let mantissa = parsed
                    .mantissa()
                    .checked_mul(10i64.pow(u32::from(*scale - parsed.scale())))
                    .ok_or_else(|| fail("decimal"))?;
                Decimal::new(mantissa, *scale)
                    .map(PropertyValue::Decimal)
                    .map_err(|_| fail("decimal"))
            }
            ValueKind::Flag => match raw_trimmed {
                "true" | "yes" | "1" => Ok(PropertyValue::Flag(true)),
                "false" | "no" | "0" => Ok(PropertyValue::Flag(false)),
                _ => Err(fail("flag")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("duplicate property name {0:?}")]
    DuplicateProperty(String),
    #[error("rule {rule} references unknown property {property:?}")]
    UnknownProperty { rule: usize, property: String },
    #[error("rule {rule} has an empty range [{min}, {max}]")]
    EmptyRange { rule: usize, min: i64, max: i64 },
    #[error("rule {rule} has an empty mask")]
    EmptyMask { rule: usize },
}

/// Ordered property declarations of one model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    properties: Vec<PropertyDef>,
}

impl Schema {
    pub fn new(properties: Vec<PropertyDef>) -> Result<Self, SchemaError> {
        let mut seen = BTreeSet::new();
        for p in &properties {
            if !seen.insert(p.name.as_str()) {
                return Err(SchemaError::DuplicateProperty(p.name.clone()));
            }
        }
        Ok(Self { properties })
    }

    /// Convenience for fixtures: `Schema::of(&[("age", ValueKind::Integer)])`.
    pub fn of(defs: &[(&str, ValueKind)]) -> Result<Self, SchemaError> {
        Self::new(
            defs.iter()
                .map(|(n, k)| PropertyDef {
                    name: (*n).to_string(),
                    kind: *k,
                })
                .collect(),
        )
    }

    pub fn properties(&self) -> &[PropertyDef] {
        &self.properties
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.properties.iter().map(|p| p.name.as_str())
    }

    pub fn kind_of(&self, name: &str) -> Option<ValueKind> {
        self.properties
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.kind)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.kind_of(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }

    /// A snapshot holding `Absent` for every declared property.
    pub fn blank_snapshot(&self) -> Snapshot {
        let mut snapshot = Snapshot::new();
        for p in &self.properties {
            snapshot.entries.insert(p.name.clone(), PropertyValue::Absent);
        }
        snapshot
    }
}

/// The model's exposed data state.
///
/// Entries keep insertion order, `dirty` is always a subset of the entry
/// keys, and `revision` grows by one on every accepted mutation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    entries: IndexMap<String, PropertyValue>,
    dirty: BTreeSet<String>,
    revision: u64,
}

impl Snapshot {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a clean snapshot at revision 0.
    pub fn from_pairs<I, K>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, PropertyValue)>,
        K: Into<String>,
    {
        Self {
            entries: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            dirty: BTreeSet::new(),
            revision: 0,
        }
    }

    pub fn get(&self, name: &str) -> Option<&PropertyValue> {
        self.entries.get(name)
    }

    /// `Absent` for missing keys as well as explicit absent values.
    pub fn value(&self, name: &str) -> &PropertyValue {
        self.entries.get(name).unwrap_or(&PropertyValue::Absent)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &PropertyValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dirty(&self) -> &BTreeSet<String> {
        &self.dirty
    }

    pub fn is_dirty(&self) -> bool {
        !self.dirty.is_empty()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    /// Stores `value`, marks the property dirty and bumps the revision.
    /// Returns the previous value.
    pub fn set(&mut self, name: &str, value: PropertyValue) -> PropertyValue {
        let old = self
            .entries
            .insert(name.to_string(), value)
            .unwrap_or(PropertyValue::Absent);
        self.dirty.insert(name.to_string());
        self.revision += 1;
        old
    }

    /// Replaces all entries with `other`'s (a load), bumping the revision and
    /// clearing dirty flags.
    pub fn replace_entries(&mut self, other: &Snapshot) {
        self.entries = other.entries.clone();
        self.dirty.clear();
        self.revision += 1;
    }

    pub(crate) fn bump_revision(&mut self) {
        self.revision += 1;
    }

    pub fn clear_dirty(&mut self) {
        self.dirty.clear();
    }

    /// Candidate copy with `changes` applied, used for pre-commit evaluation.
    pub fn with_changes<'a, I>(&self, changes: I) -> Snapshot
    where
        I: IntoIterator<Item = (&'a str, &'a PropertyValue)>,
    {
        let mut candidate = self.clone();
        for (name, value) in changes {
            candidate.set(name, value.clone());
        }
        candidate
    }

    /// Integer `id` property, used by paged datasets.
    pub fn id(&self) -> Option<i64> {
        match self.get("id") {
            Some(PropertyValue::Integer(id)) => Some(*id),
            _ => None,
        }
    }

    /// Stable hex digest over the canonical serialization (entries, dirty set, revision).
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("snapshot serializes");
        let hash = Sha256::digest(&canonical);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

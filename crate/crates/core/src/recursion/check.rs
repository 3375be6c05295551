//! Verification reports.

use serde::Serialize;

use crate::error::Result;
use crate::ring::json::FormulaJson;
use crate::ring::DiffPoly;

/// One verified identity. A `None` residual means it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckEntry {
    pub check: String,
    pub indices: String,
    pub residual: Option<DiffPoly>,
}

impl CheckEntry {
    pub fn passed(&self) -> bool {
        self.residual.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

#[derive(Serialize)]
struct EntryJson<'a> {
    check: &'a str,
    indices: &'a str,
    passed: bool,
    residual: Option<FormulaJson>,
}

impl CheckReport {
    pub fn push(&mut self, check: &str, indices: String, residual: Option<DiffPoly>) {
        self.entries.push(CheckEntry { check: check.to_string(), indices, residual });
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// JSON array of `{check, indices, passed, residual}`; `residual` is
    /// `null` for identities that hold.
    pub fn to_json(&self) -> serde_json::Value {
        let items: Vec<EntryJson> = self
            .entries
            .iter()
            .map(|e| EntryJson {
                check: &e.check,
                indices: &e.indices,
                passed: e.passed(),
                residual: e.residual.as_ref().map(FormulaJson::from_poly),
            })
            .collect();
        serde_json::to_value(items).expect("report serializes")
    }
}

impl FromIterator<CheckEntry> for CheckReport {
    fn from_iter<I: IntoIterator<Item = CheckEntry>>(iter: I) -> Self {
        CheckReport { entries: iter.into_iter().collect() }
    }
}

/// `lhs − rhs` restricted to where both are exact, or `None` if that vanishes.
pub(crate) fn residual(lhs: &DiffPoly, rhs: &DiffPoly) -> Result<Option<DiffPoly>> {
    let diff = lhs.try_sub(rhs)?.restrict_to_exact();
    Ok(if diff.is_zero() { None } else { Some(diff) })
}

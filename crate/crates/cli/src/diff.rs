//! Structural comparison of formula tables.
//!
//! A table is read from a hierarchy document (`densities`), a single
//! formula (keyed by the empty string), or an object of formulas.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use drh::ring::json::{FormulaJson, RingHeader, RingJson, TermJson};
use drh::Rational;
use serde_json::{json, Value};

use crate::error::CliError;

/// `(params, eps, hbar, factors)`.
type TermKey = (BTreeMap<String, u32>, u32, u32, Vec<[u32; 3]>);
type Coeff = (Rational, Rational);
type Entries = (Option<RingJson>, Vec<(String, FormulaJson)>);

pub struct Table {
    header: Option<RingHeader>,
    ring: Option<RingJson>,
    formulas: BTreeMap<String, BTreeMap<TermKey, Coeff>>,
}

fn number(text: &str, path: &Path) -> Result<Rational, CliError> {
    Rational::from_str(text.trim())
        .map_err(|_| CliError::config(&path.display().to_string(), format!("`{text}` is not a rational")))
}

fn terms(f: &FormulaJson, path: &Path) -> Result<BTreeMap<TermKey, Coeff>, CliError> {
    let mut out = BTreeMap::new();
    for TermJson { re, im, params, eps, hbar, factors } in &f.terms {
        let c = (number(re, path)?, number(im, path)?);
        out.insert((params.clone(), *eps, *hbar, factors.clone()), c);
    }
    Ok(out)
}

/// The full ring (when the document carries a spec) and the keyed formulas.
pub fn entries(v: &Value, path: &Path) -> Result<Entries, CliError> {
    let bad = |m: &str| CliError::config(&path.display().to_string(), m.to_string());
    let ring = v
        .pointer("/spec/ring")
        .map(|r| serde_json::from_value::<RingJson>(r.clone()))
        .transpose()
        .map_err(|e| bad(&e.to_string()))?;
    let raw: Vec<(String, Value)> = if v.get("terms").is_some() {
        vec![(String::new(), v.clone())]
    } else {
        let obj = v.get("densities").unwrap_or(v).as_object().ok_or_else(|| bad("expected a formula or a table of formulas"))?;
        obj.iter().map(|(k, f)| (k.clone(), f.clone())).collect()
    };
    let mut out = Vec::with_capacity(raw.len());
    for (k, f) in raw {
        let f: FormulaJson = serde_json::from_value(f).map_err(|e| bad(&format!("entry `{k}`: {e}")))?;
        out.push((k, f));
    }
    Ok((ring, out))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(&path.display().to_string(), e.to_string()))
}

impl Table {
    pub fn load(path: &Path) -> Result<Table, CliError> {
        Table::from_value(&read_json(path)?, path)
    }

    fn from_value(v: &Value, path: &Path) -> Result<Table, CliError> {
        let bad = |m: &str| CliError::config(&path.display().to_string(), m.to_string());
        let (ring, entries) = entries(v, path)?;
        let mut header: Option<RingHeader> = None;
        let mut formulas = BTreeMap::new();
        for (k, f) in entries {
            match &header {
                Some(h) if *h != f.ring => return Err(bad(&format!("entry `{k}` has a different ring header"))),
                _ => header = Some(f.ring.clone()),
            }
            formulas.insert(k, terms(&f, path)?);
        }
        Ok(Table { header, ring, formulas })
    }

    fn compatible(&self, other: &Table) -> Result<(), String> {
        if let (Some(a), Some(b)) = (&self.header, &other.header) {
            let pa: BTreeSet<_> = a.params.iter().collect();
            let pb: BTreeSet<_> = b.params.iter().collect();
            if a.n_vars != b.n_vars || pa != pb {
                return Err(format!("rings differ: {} vars {:?} vs {} vars {:?}", a.n_vars, a.params, b.n_vars, b.params));
            }
        }
        if let (Some(a), Some(b)) = (&self.ring, &other.ring) {
            if a.var_names != b.var_names || a.eta != b.eta || a.mode != b.mode {
                return Err("rings differ in variables, metric or mode".into());
            }
        }
        Ok(())
    }
}

fn show(c: Option<&Coeff>) -> Value {
    c.map_or(Value::Null, |(re, im)| json!([re.to_string(), im.to_string()]))
}

/// The report, and whether it counts as a match.
pub fn diff(a: &Table, b: &Table, constants_ok: bool) -> Result<(Value, bool), CliError> {
    a.compatible(b).map_err(|m| CliError::config("b", format!("incompatible files: {m}")))?;
    let keys: BTreeSet<&String> = a.formulas.keys().chain(b.formulas.keys()).collect();
    let mut entries = Vec::new();
    for k in keys {
        let (fa, fb) = (a.formulas.get(k), b.formulas.get(k));
        let (fa, fb) = match (fa, fb) {
            (Some(x), Some(y)) => (x, y),
            (x, _) => {
                let kind = if x.is_none() { "missing_in_a" } else { "missing_in_b" };
                entries.push(json!({ "key": k, "kind": kind, "constant_only": false, "terms": [] }));
                continue;
            }
        };
        let monos: BTreeSet<&TermKey> = fa.keys().chain(fb.keys()).collect();
        let differing: Vec<&TermKey> = monos.into_iter().filter(|m| fa.get(*m) != fb.get(*m)).collect();
        if differing.is_empty() {
            continue;
        }
        let constant_only = differing.iter().all(|(_, _, _, factors)| factors.is_empty());
        let terms: Vec<Value> = differing
            .iter()
            .map(|m| {
                let (params, eps, hbar, factors) = m;
                json!({
                    "monomial": { "params": params, "eps": eps, "hbar": hbar, "factors": factors },
                    "a": show(fa.get(*m)),
                    "b": show(fb.get(*m)),
                })
            })
            .collect();
        entries.push(json!({ "key": k, "kind": "differs", "constant_only": constant_only, "terms": terms }));
    }
    let only_constants = entries.iter().all(|e| e["constant_only"] == true);
    let passed = entries.is_empty() || (constants_ok && only_constants);
    Ok((json!({ "identical": entries.is_empty(), "constant_only": only_constants, "passed": passed, "entries": entries }), passed))
}

pub fn pretty(report: &Value) -> String {
    let entries = report["entries"].as_array().map(Vec::as_slice).unwrap_or_default();
    if entries.is_empty() {
        return "identical\n".into();
    }
    let mut out = String::new();
    for e in entries {
        let flag = if e["constant_only"] == true { " (constant-only)" } else { "" };
        let n = e["terms"].as_array().map_or(0, Vec::len);
        out.push_str(&format!("{} {}{flag}: {n} term(s)\n", e["key"].as_str().unwrap_or(""), e["kind"].as_str().unwrap_or("")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(v: Value) -> Table {
        Table::from_value(&v, Path::new("t.json")).unwrap()
    }

    fn f(terms: Value) -> Value {
        json!({ "ring": { "n_vars": 1, "params": [] }, "terms": terms })
    }

    fn t(re: &str, factors: Value) -> Value {
        json!({ "re": re, "im": "0", "eps": 0, "hbar": 0, "factors": factors })
    }

    #[test]
    fn identical_tables_are_empty() {
        let a = table(json!({ "densities": { "1,0": f(json!([t("1/2", json!([[1, 0, 2]]))])) } }));
        let b = table(json!({ "densities": { "1,0": f(json!([t("2/4", json!([[1, 0, 2]]))])) } }));
        let (r, ok) = diff(&a, &b, false).unwrap();
        assert!(ok && r["identical"] == true);
    }

    #[test]
    fn constant_differences_are_flagged() {
        let a = table(f(json!([t("1", json!([[1, 0, 1]])), t("1/24", json!([]))])));
        let b = table(f(json!([t("1", json!([[1, 0, 1]]))])));
        let (r, ok) = diff(&a, &b, false).unwrap();
        assert!(!ok);
        assert_eq!(r["entries"].as_array().unwrap().len(), 1);
        assert_eq!(r["entries"][0]["constant_only"], true);
        assert!(diff(&a, &b, true).unwrap().1);
    }

    #[test]
    fn different_rings_are_incompatible() {
        let a = table(f(json!([])));
        let b = table(json!({ "ring": { "n_vars": 2, "params": [] }, "terms": [] }));
        assert!(diff(&a, &b, true).is_err());
    }
}

//! The canonical JSON formula format.
//!
//! ```json
//! {"ring": {"n_vars": 1, "params": []},
//!  "terms": [{"re": "1/2", "im": "0/1", "params": {}, "eps": 0, "hbar": 0, "factors": [[1, 0, 2]]}]}
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::coeff::{check_rational_text, rational_to_string, Gaussian};
use super::context::RingContext;
use super::poly::{DiffPoly, Factor, Monomial};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingHeader {
    pub n_vars: usize,
    pub params: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub re: String,
    pub im: String,
    #[serde(default)]
    pub params: BTreeMap<String, u32>,
    pub eps: u32,
    pub hbar: u32,
    pub factors: Vec<[u32; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaJson {
    pub ring: RingHeader,
    pub terms: Vec<TermJson>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub functional: bool,
}

impl FormulaJson {
    pub fn from_poly(f: &DiffPoly) -> Self {
        let ctx = f.ctx();
        let terms = f
            .terms()
            .map(|(m, c)| TermJson {
                re: rational_to_string(&c.re),
                im: rational_to_string(&c.im),
                params: m
                    .params
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| **e > 0)
                    .map(|(i, e)| (ctx.params[i].clone(), *e))
                    .collect(),
                eps: m.eps,
                hbar: m.hbar,
                factors: m.factors.iter().map(|f| [f.alpha as u32, f.k as u32, f.pow as u32]).collect(),
            })
            .collect();
        FormulaJson { ring: RingHeader { n_vars: ctx.n_vars, params: ctx.params.clone() }, terms, functional: false }
    }

    /// Rebuilds the polynomial in `ctx`, which must match the header.
    pub fn to_poly(&self, ctx: &Arc<RingContext>) -> Result<DiffPoly> {
        let bad = |i: usize, msg: String| Error::Parse { position: i, message: format!("term {i}: {msg}") };
        if self.ring.n_vars != ctx.n_vars {
            return Err(Error::ContextMismatch);
        }
        let mut out: Vec<(Monomial, Gaussian)> = Vec::with_capacity(self.terms.len());
        let mut seen = std::collections::BTreeSet::new();
        for (i, t) in self.terms.iter().enumerate() {
            let re = check_rational_text(&t.re).map_err(|e| bad(i, e.to_string()))?;
            let im = check_rational_text(&t.im).map_err(|e| bad(i, e.to_string()))?;
            let c = Gaussian::new(re, im);
            if c.is_zero() {
                return Err(bad(i, "zero coefficient".into()));
            }
            let mut m = Monomial::one(ctx.params.len());
            m.eps = t.eps;
            m.hbar = t.hbar;
            if m.hbar > 0 && !ctx.is_quantum() {
                return Err(bad(i, "hbar in a classical ring".into()));
            }
            for (name, e) in &t.params {
                let j = self
                    .ring
                    .params
                    .iter()
                    .position(|p| p == name)
                    .and_then(|_| ctx.param_index(name))
                    .ok_or_else(|| bad(i, format!("undeclared parameter `{name}`")))?;
                m.params[j] = *e;
            }
            let mut prev: Option<(u32, u32)> = None;
            for &[a, k, p] in &t.factors {
                if a == 0 || a as usize > ctx.n_vars {
                    return Err(bad(i, format!("variable index {a} out of range")));
                }
                if p == 0 {
                    return Err(bad(i, "zero power".into()));
                }
                if let Some(q) = prev {
                    if q == (a, k) {
                        return Err(bad(i, format!("duplicate factor ({a}, {k})")));
                    }
                    if q > (a, k) {
                        return Err(bad(i, "factors not sorted".into()));
                    }
                }
                prev = Some((a, k));
                m.factors.push(Factor { alpha: a as u16, k: k as u16, pow: p as u16 });
            }
            if !seen.insert(m.clone()) {
                return Err(bad(i, "duplicate monomial".into()));
            }
            out.push((m, c));
        }
        Ok(DiffPoly::from_terms(ctx, out))
    }
}

/// A full ring description: metric, names, parameters, mode and window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingJson {
    pub var_names: Vec<String>,
    /// `η_{αβ}` as `[re, im]` rational strings.
    pub eta: Vec<Vec<[String; 2]>>,
    #[serde(default)]
    pub params: Vec<String>,
    pub mode: super::context::Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_cutoff: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_degree_cutoff: Option<u32>,
}

impl RingJson {
    pub fn from_ctx(ctx: &RingContext) -> Self {
        RingJson {
            var_names: ctx.var_names.clone(),
            eta: ctx
                .eta
                .iter()
                .map(|row| row.iter().map(|g| [rational_to_string(&g.re), rational_to_string(&g.im)]).collect())
                .collect(),
            params: ctx.params.clone(),
            mode: ctx.mode,
            order_cutoff: ctx.window.order_cutoff,
            u_degree_cutoff: ctx.window.u_degree_cutoff,
        }
    }

    pub fn to_ctx(&self) -> Result<Arc<RingContext>> {
        let num = |s: &str| {
            super::coeff::parse_rational(s, false).map_err(|m| Error::Parse { position: 0, message: format!("eta entry: {m}") })
        };
        let mut eta = Vec::with_capacity(self.eta.len());
        for row in &self.eta {
            let mut r = Vec::with_capacity(row.len());
            for [re, im] in row {
                r.push(Gaussian::new(num(re)?, num(im)?));
            }
            eta.push(r);
        }
        let window = super::context::TruncationWindow {
            order_cutoff: self.order_cutoff,
            u_degree_cutoff: self.u_degree_cutoff,
        };
        RingContext::with_names(eta, self.var_names.clone(), self.params.clone(), self.mode, window)
    }
}

/// Serializes to canonical compact JSON text.
pub fn serialize(f: &DiffPoly) -> String {
    serde_json::to_string(&FormulaJson::from_poly(f)).expect("formula serializes")
}

/// Parses canonical JSON text into `ctx`.
pub fn parse(text: &str, ctx: &Arc<RingContext>) -> Result<DiffPoly> {
    from_json_str(text)?.to_poly(ctx)
}

/// Parses just the document, without a ring to resolve it against.
pub fn from_json_str(text: &str) -> Result<FormulaJson> {
    serde_json::from_str(text).map_err(|e| json_error(text, &e))
}

pub fn from_value(v: Value) -> Result<FormulaJson> {
    serde_json::from_value(v).map_err(|e| Error::Parse { position: 0, message: e.to_string() })
}

/// Converts a serde error to a byte offset.
pub fn json_error(text: &str, e: &serde_json::Error) -> Error {
    let mut offset = 0usize;
    for (n, line) in text.split_inclusive('\n').enumerate() {
        if n + 1 == e.line() {
            offset += e.column().saturating_sub(1);
            break;
        }
        offset += line.len();
    }
    Error::Parse { position: offset, message: e.to_string() }
}

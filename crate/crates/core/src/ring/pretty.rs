//! Human-readable rendering and its parser.
//!
//! Grammar (whitespace-separated tokens inside a term):
//!
//! ```text
//! poly    := "0" | term (" + " term)*
//! term    := [coeff] [ "i" ] atom* ["/" uint]
//! coeff   := "(" rational ")" | "(" rational " + " rational " i" ")"
//! atom    := name ["^" uint]
//! name    := param | "eps" | "hbar" | var ["_" uint]
//! var     := "u" (one field) | "u" uint (several fields)
//! ```
//!
//! A trailing `/q` divides the term by `q`. A bare `i` multiplies by the
//! imaginary unit.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::coeff::{parse_rational, Gaussian, Rational};
use super::context::RingContext;
use super::poly::{DiffPoly, Monomial};
use crate::error::{Error, Result};

fn var_name(ctx: &RingContext, alpha: u16, k: u16) -> String {
    let base = &ctx.var_names[alpha as usize - 1];
    if k == 0 {
        base.clone()
    } else {
        format!("{base}_{k}")
    }
}

fn atom(name: &str, pow: u32) -> String {
    if pow == 1 {
        name.to_string()
    } else {
        format!("{name}^{pow}")
    }
}

fn monomial_text(ctx: &RingContext, m: &Monomial) -> Vec<String> {
    let mut parts = Vec::new();
    for (i, e) in m.params.iter().enumerate() {
        if *e > 0 {
            parts.push(atom(&ctx.params[i], *e));
        }
    }
    if m.eps > 0 {
        parts.push(atom("eps", m.eps));
    }
    if m.hbar > 0 {
        parts.push(atom("hbar", m.hbar));
    }
    for f in &m.factors {
        parts.push(atom(&var_name(ctx, f.alpha, f.k), f.pow as u32));
    }
    parts
}

fn render_term(ctx: &RingContext, m: &Monomial, c: &Gaussian) -> String {
    let mono = monomial_text(ctx, m);
    let only_u = !mono.is_empty() && m.eps == 0 && m.hbar == 0 && m.params.iter().all(|e| *e == 0);
    let mut head: Vec<String> = Vec::new();
    let mut tail = String::new();
    if c.is_real() {
        let r = &c.re;
        if r.is_one() && !mono.is_empty() {
        } else if only_u && r.numer().is_one() && r.denom() > &BigInt::one() {
            tail = format!("/{}", r.denom());
        } else {
            head.push(format!("({r})"));
        }
    } else if c.re.is_zero() {
        if !c.im.is_one() {
            head.push(format!("({})", c.im));
        }
        head.push("i".into());
    } else {
        head.push(format!("({} + {} i)", c.re, c.im));
    }
    head.extend(mono);
    format!("{}{}", head.join(" "), tail)
}

/// Renders `f`; terms appear in canonical order.
pub fn render(f: &DiffPoly) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let ctx = f.ctx();
    f.terms().map(|(m, c)| render_term(ctx, m, c)).collect::<Vec<_>>().join(" + ")
}

/// Parses the rendered form back into `ctx`.
pub fn parse_pretty(text: &str, ctx: &Arc<RingContext>) -> Result<DiffPoly> {
    let text = text.trim();
    if text == "0" {
        return Ok(DiffPoly::zero(ctx));
    }
    let mut terms = Vec::new();
    for (start, chunk) in split_terms(text) {
        terms.push(parse_term(chunk, start, ctx)?);
    }
    let mut acc = DiffPoly::zero(ctx);
    for (m, c) in terms {
        acc = &acc + &DiffPoly::monomial(ctx, m, c);
    }
    Ok(acc)
}

fn split_terms(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let (mut depth, mut start, mut i) = (0i32, 0usize, 0usize);
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 && i > 0 && bytes[i - 1] == b' ' && bytes.get(i + 1) == Some(&b' ') => {
                out.push((start, text[start..i - 1].trim()));
                start = i + 2;
            }
            _ => {}
        }
        i += 1;
    }
    out.push((start, text[start..].trim()));
    out
}

fn perr(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { position: pos, message: msg.into() }
}

fn parse_term(chunk: &str, start: usize, ctx: &Arc<RingContext>) -> Result<(Monomial, Gaussian)> {
    let mut rest = chunk;
    let mut coeff = Gaussian::one();
    if rest.starts_with('(') {
        let close = rest.find(')').ok_or_else(|| perr(start, "unclosed parenthesis"))?;
        let inner = &rest[1..close];
        coeff = match inner.split_once(" + ") {
            Some((a, b)) => {
                let b = b.strip_suffix(" i").ok_or_else(|| perr(start, "expected `i` in complex coefficient"))?;
                Gaussian::new(
                    parse_rational(a, false).map_err(|e| perr(start, e))?,
                    parse_rational(b, false).map_err(|e| perr(start, e))?,
                )
            }
            None => Gaussian::real(parse_rational(inner, false).map_err(|e| perr(start, e))?),
        };
        rest = &rest[close + 1..];
    }
    let mut divisor = Rational::one();
    if let Some(slash) = rest.rfind('/') {
        let q = rest[slash + 1..].trim();
        let q: BigInt = q.parse().map_err(|_| perr(start + slash, format!("bad divisor `{q}`")))?;
        if !q.is_positive() {
            return Err(perr(start + slash, "divisor must be positive"));
        }
        divisor = Rational::from_integer(q);
        rest = &rest[..slash];
    }
    let mut m = Monomial::one(ctx.params.len());
    let offset = start + (chunk.len() - rest.len());
    for tok in rest.split_whitespace() {
        let pos = offset + rest.find(tok).unwrap_or(0);
        if tok == "i" {
            coeff = &coeff * &Gaussian::i();
            continue;
        }
        let (name, pow) = match tok.split_once('^') {
            Some((n, p)) => (n, p.parse::<u32>().map_err(|_| perr(pos, format!("bad exponent in `{tok}`")))?),
            None => (tok, 1),
        };
        if pow == 0 {
            return Err(perr(pos, "zero exponent"));
        }
        match name {
            "eps" => m.eps += pow,
            "hbar" => m.hbar += pow,
            _ => {
                if let Some(j) = ctx.param_index(name) {
                    m.params[j] += pow;
                } else {
                    let (base, k) = match name.split_once('_') {
                        Some((b, k)) => (b, k.parse::<u16>().map_err(|_| perr(pos, format!("bad derivative in `{tok}`")))?),
                        None => (name, 0),
                    };
                    let alpha = ctx
                        .var_names
                        .iter()
                        .position(|v| v == base)
                        .ok_or_else(|| perr(pos, format!("unknown symbol `{base}`")))?;
                    m = m.times_var(alpha as u16 + 1, k, pow as u16);
                }
            }
        }
    }
    if m.hbar > 0 && !ctx.is_quantum() {
        return Err(perr(start, "hbar in a classical ring"));
    }
    Ok((m, coeff.scale(&(Rational::one() / divisor))))
}

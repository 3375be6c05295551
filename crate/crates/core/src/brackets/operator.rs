//! Scalar differential operators `Σ_j c_j ∂_x^j` and matrix Hamiltonian
//! operators built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::json::FormulaJson;
use crate::ring::{binomial, DiffPoly, Gaussian, Rational, RingContext};

/// `Σ_j c_j ∂_x^j` with differential-polynomial coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct DiffOperator {
    ctx: Arc<RingContext>,
    coeffs: BTreeMap<usize, DiffPoly>,
}

impl DiffOperator {
    pub fn zero(ctx: &Arc<RingContext>) -> Self {
        DiffOperator { ctx: ctx.clone(), coeffs: BTreeMap::new() }
    }

    pub fn from_coeffs<I: IntoIterator<Item = (usize, DiffPoly)>>(ctx: &Arc<RingContext>, coeffs: I) -> Self {
        let mut op = Self::zero(ctx);
        for (j, c) in coeffs {
            op.add_term(j, &c);
        }
        op
    }

    /// Multiplication by `c`.
    pub fn multiplication(c: DiffPoly) -> Self {
        let ctx = c.ctx().clone();
        Self::from_coeffs(&ctx, [(0, c)])
    }

    /// `c · ∂_x^j`.
    pub fn dx_power(ctx: &Arc<RingContext>, j: usize, c: Gaussian) -> Self {
        Self::from_coeffs(ctx, [(j, DiffPoly::constant(ctx, c))])
    }

    fn add_term(&mut self, j: usize, c: &DiffPoly) {
        if c.is_zero() {
            return;
        }
        let next = match self.coeffs.get(&j) {
            Some(old) => old + c,
            None => c.clone(),
        };
        if next.is_zero() {
            self.coeffs.remove(&j);
        } else {
            self.coeffs.insert(j, next);
        }
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (usize, &DiffPoly)> {
        self.coeffs.iter().map(|(j, c)| (*j, c))
    }

    pub fn coeff(&self, j: usize) -> DiffPoly {
        self.coeffs.get(&j).cloned().unwrap_or_else(|| DiffPoly::zero(&self.ctx))
    }

    pub fn order(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Applies the operator to a function.
    pub fn apply(&self, f: &DiffPoly) -> DiffPoly {
        let mut acc = DiffPoly::zero(&self.ctx);
        let mut d = f.clone();
        let mut at = 0usize;
        for (j, c) in &self.coeffs {
            while at < *j {
                d = d.dx();
                at += 1;
            }
            acc = &acc + &(c * &d);
        }
        acc
    }

    /// `self ∘ other` by the Leibniz rule.
    pub fn compose(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = DiffOperator::zero(&self.ctx);
        for (j, b) in &other.coeffs {
            let mut db = b.clone();
            let top = self.order().unwrap_or(0);
            for l in 0..=top {
                if l > 0 {
                    db = db.dx();
                }
                if db.is_zero() {
                    break;
                }
                for (i, a) in self.coeffs.range(l..) {
                    let c = Rational::from_integer(binomial(*i as u64, l as u64));
                    out.add_term(i - l + j, &(a * &db).scale_rat(&c));
                }
            }
        }
        out
    }

    /// Formal adjoint `Σ_j (−∂_x)^j ∘ c_j`.
    pub fn adjoint(&self) -> DiffOperator {
        let mut out = DiffOperator::zero(&self.ctx);
        for (j, a) in &self.coeffs {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let mut da = a.clone();
            for l in 0..=*j {
                if l > 0 {
                    da = da.dx();
                }
                if da.is_zero() {
                    break;
                }
                let c = Rational::from_integer(binomial(*j as u64, l as u64) * sign);
                out.add_term(j - l, &da.scale_rat(&c));
            }
        }
        out
    }

    pub fn add(&self, other: &DiffOperator) -> DiffOperator {
        let mut out = self.clone();
        for (j, c) in &other.coeffs {
            out.add_term(*j, c);
        }
        out
    }

    pub fn scale(&self, c: &Gaussian) -> DiffOperator {
        Self::from_coeffs(&self.ctx, self.coeffs.iter().map(|(j, p)| (*j, p.scale(c))))
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs<F: Fn(&DiffPoly) -> Result<DiffPoly>>(&self, f: F) -> Result<DiffOperator> {
        let mut pairs = Vec::with_capacity(self.coeffs.len());
        for (j, c) in &self.coeffs {
            pairs.push((*j, f(c)?));
        }
        let ctx = pairs.first().map(|(_, c)| c.ctx().clone()).unwrap_or_else(|| self.ctx.clone());
        Ok(Self::from_coeffs(&ctx, pairs))
    }

    /// Keeps coefficients with `eps + 2·hbar ≤ n`.
    pub fn truncate_order(&self, n: u32) -> DiffOperator {
        Self::from_coeffs(&self.ctx, self.coeffs.iter().map(|(j, c)| (*j, c.truncate_order(n))))
    }
}

impl fmt::Debug for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(j, c)| match j {
                0 => format!("[{c}]"),
                1 => format!("[{c}] dx"),
                _ => format!("[{c}] dx^{j}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// A matrix of differential operators defining a bracket
/// `{f̄, ḡ} = ∫ δf/δu^μ K^{μν} δg/δu^ν`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HamiltonianOperator {
    entries: Vec<Vec<DiffOperator>>,
}

impl HamiltonianOperator {
    pub fn new(entries: Vec<Vec<DiffOperator>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("operator matrix must be square and non-empty".into()));
        }
        Ok(HamiltonianOperator { entries })
    }

    /// `η^{μν} ∂_x`.
    pub fn standard(ctx: &Arc<RingContext>) -> Self {
        let n = ctx.n_vars;
        let entries = (0..n)
            .map(|m| (0..n).map(|v| DiffOperator::dx_power(ctx, 1, ctx.eta_inv[m][v].clone())).collect())
            .collect();
        HamiltonianOperator { entries }
    }

    /// `{"size": n, "entries": [[{"j": formula}]]}`, keyed by the power of `∂_x`.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<Vec<BTreeMap<String, FormulaJson>>> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|op| op.coeffs().map(|(j, c)| (j.to_string(), FormulaJson::from_poly(c))).collect()).collect())
            .collect();
        serde_json::json!({ "size": self.size(), "entries": entries })
    }

    pub fn scalar(op: DiffOperator) -> Self {
        HamiltonianOperator { entries: vec![vec![op]] }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Entry `(μ, ν)`, 1-based.
    pub fn entry(&self, mu: usize, nu: usize) -> &DiffOperator {
        &self.entries[mu - 1][nu - 1]
    }

    pub fn entries(&self) -> &[Vec<DiffOperator>] {
        &self.entries
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        self.entries[0][0].ctx()
    }

    /// `(K X)^μ = Σ_ν K^{μν} X_ν`.
    pub fn apply(&self, x: &[DiffPoly]) -> Vec<DiffPoly> {
        self.entries
            .iter()
            .map(|row| {
                let parts: Vec<DiffPoly> = row.iter().zip(x).map(|(op, xv)| op.apply(xv)).collect();
                crate::ring::sum(x[0].ctx(), parts.iter())
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(DiffOperator::is_zero)
    }

    /// Whether every entry is `η^{μν}∂_x`.
    pub fn is_standard(&self) -> bool {
        *self == Self::standard(self.ctx())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{Mode, TruncationWindow};

    fn ctx() -> Arc<RingContext> {
        RingContext::scalar(Mode::Classical, &[], TruncationWindow::default())
    }

    #[test]
    fn leibniz_commutator() {
        let c = ctx();
        let d = DiffOperator::dx_power(&c, 1, Gaussian::one());
        let u = DiffOperator::multiplication(DiffPoly::var(&c, 1, 0));
        let comm = d.compose(&u).add(&u.compose(&d).scale(&Gaussian::from_int(-1)));
        assert_eq!(comm, DiffOperator::multiplication(DiffPoly::var(&c, 1, 1)));
    }

    #[test]
    fn compose_matches_apply() {
        let c = ctx();
        let a = DiffOperator::from_coeffs(&c, [(2, DiffPoly::var(&c, 1, 0)), (0, DiffPoly::var(&c, 1, 1))]);
        let b = DiffOperator::from_coeffs(&c, [(1, DiffPoly::var(&c, 1, 0).pow(2)), (3, DiffPoly::from_int(&c, 2))]);
        let f = &DiffPoly::var(&c, 1, 0).pow(3) + &DiffPoly::var(&c, 1, 2);
        assert_eq!(a.compose(&b).apply(&f), a.apply(&b.apply(&f)));
    }

    #[test]
    fn adjoint_is_involutive_and_skew_for_dx() {
        let c = ctx();
        let d = DiffOperator::dx_power(&c, 1, Gaussian::one());
        assert_eq!(d.adjoint(), d.scale(&Gaussian::from_int(-1)));
        let a = DiffOperator::from_coeffs(&c, [(2, DiffPoly::var(&c, 1, 0)), (1, DiffPoly::var(&c, 1, 3))]);
        assert_eq!(a.adjoint().adjoint(), a);
    }
}

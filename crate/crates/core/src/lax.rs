//! Pseudo-differential operators in `D_x = ε∂_x` and the Gelfand–Dickey
//! hierarchies built from `L = D_x^r + f_{r−2}D_x^{r−2} + … + f_0`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::brackets::{DiffOperator, HamiltonianOperator};
use crate::error::{Error, Result};
use crate::functionals::LocalFunctional;
use crate::ring::json::FormulaJson;
use crate::ring::{binomial_signed, sum, DiffPoly, Gaussian, Mode, Monomial, Rational, RingContext, TruncationWindow};

/// Name of the formal parameter standing for `√(−r)` in [`gd_ring`].
pub const SQRT_MINUS_R: &str = "sqrtmr";

/// `Σ_j c_j D_x^j` for `j = top, top−1, …`, known down to `top − depth`.
/// A `None` depth means the operator is exact: nothing below the stored
/// terms. Exact operators have no negative orders.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PseudoDiffOp {
    ctx: Arc<RingContext>,
    top: i64,
    depth: Option<u32>,
    coeffs: BTreeMap<i64, DiffPoly>,
}

fn min_depth(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

/// `D_x^k a = ε^k ∂_x^k a`.
fn dk(a: &DiffPoly, k: u32) -> DiffPoly {
    a.dx_n(k as usize).mul_eps(k)
}

impl PseudoDiffOp {
    pub fn new(ctx: &Arc<RingContext>, top: i64, depth: Option<u32>, coeffs: BTreeMap<i64, DiffPoly>) -> Result<Self> {
        if let Some((&j, _)) = coeffs.iter().next_back() {
            if j > top {
                return Err(Error::Invalid(format!("order {j} above top {top}")));
            }
        }
        if depth.is_none() && coeffs.keys().any(|j| *j < 0) {
            return Err(Error::Invalid("an operator with negative orders needs a depth".into()));
        }
        let mut op = PseudoDiffOp { ctx: ctx.clone(), top, depth, coeffs: BTreeMap::new() };
        for (j, c) in coeffs {
            op.add_term(j, &c);
        }
        Ok(op.normalized())
    }

    /// `D_x^j`; negative `j` needs a depth.
    pub fn dx_power(ctx: &Arc<RingContext>, j: i64, depth: Option<u32>) -> Result<Self> {
        Self::new(ctx, j, depth, BTreeMap::from([(j, DiffPoly::from_int(ctx, 1))]))
    }

    /// Multiplication by `a`.
    pub fn multiplication(a: DiffPoly) -> Self {
        let ctx = a.ctx().clone();
        Self::new(&ctx, 0, None, BTreeMap::from([(0, a)])).expect("order zero")
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn top(&self) -> i64 {
        self.top
    }

    pub fn depth(&self) -> Option<u32> {
        self.depth
    }

    /// Lowest order whose coefficient is known, if truncated.
    pub fn lowest_known(&self) -> Option<i64> {
        self.depth.map(|d| self.top - d as i64)
    }

    pub fn coeff(&self, j: i64) -> DiffPoly {
        self.coeffs.get(&j).cloned().unwrap_or_else(|| DiffPoly::zero(&self.ctx))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &DiffPoly)> {
        self.coeffs.iter().rev().map(|(j, c)| (*j, c))
    }

    /// Exact operators keep `top` at their highest nonzero order.
    fn normalized(mut self) -> Self {
        if self.depth.is_none() {
            self.top = self.coeffs.keys().next_back().copied().unwrap_or(0);
        }
        self
    }

    fn known(&self, j: i64) -> bool {
        self.lowest_known().is_none_or(|low| j >= low)
    }

    fn add_term(&mut self, j: i64, c: &DiffPoly) {
        if c.is_zero() || !self.known(j) {
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

    /// Drops everything below `top − depth`.
    pub fn truncate(&self, depth: u32) -> Self {
        let depth = min_depth(self.depth, Some(depth));
        let mut out = PseudoDiffOp { ctx: self.ctx.clone(), top: self.top, depth, coeffs: BTreeMap::new() };
        for (j, c) in &self.coeffs {
            out.add_term(*j, c);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let top = self.top.max(other.top);
        let low = match (self.lowest_known(), other.lowest_known()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (x, None) | (None, x) => x,
        };
        let depth = low.map(|l| (top - l).max(0) as u32);
        let mut out = PseudoDiffOp { ctx: self.ctx.clone(), top, depth, coeffs: BTreeMap::new() };
        for (j, c) in self.coeffs.iter().chain(&other.coeffs) {
            out.add_term(*j, c);
        }
        out.normalized()
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.scale(&Gaussian::from_int(-1));
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Gaussian) -> Self {
        let mut out = PseudoDiffOp { ctx: self.ctx.clone(), top: self.top, depth: self.depth, coeffs: BTreeMap::new() };
        for (j, a) in &self.coeffs {
            out.add_term(*j, &a.scale(c));
        }
        out.normalized()
    }

    /// `A ∘ B` by the generalized Leibniz rule
    /// `D_x^i ∘ b = Σ_k binom(i, k) (D_x^k b) D_x^{i−k}`.
    pub fn compose(&self, other: &Self) -> Self {
        let top = self.top + other.top;
        let depth = min_depth(self.depth, other.depth);
        let low = depth.map(|d| top - d as i64);
        let pairs: Vec<(i64, &DiffPoly, i64, &DiffPoly)> = self
            .coeffs
            .iter()
            .flat_map(|(i, a)| other.coeffs.iter().map(move |(j, b)| (*i, a, *j, b)))
            .collect();
        let parts: Vec<Vec<(i64, DiffPoly)>> = pairs
            .par_iter()
            .map(|&(i, a, j, b)| {
                let mut out = Vec::new();
                let mut k = 0u32;
                loop {
                    let n = i + j - k as i64;
                    if low.is_some_and(|l| n < l) || (i >= 0 && k as i64 > i) {
                        break;
                    }
                    let c = Rational::from_integer(binomial_signed(i, k as u64));
                    out.push((n, (a * &dk(b, k)).scale_rat(&c)));
                    k += 1;
                }
                out
            })
            .collect();
        let mut result = PseudoDiffOp { ctx: self.ctx.clone(), top, depth, coeffs: BTreeMap::new() };
        for (n, c) in parts.into_iter().flatten() {
            result.add_term(n, &c);
        }
        result.normalized()
    }

    /// `A^n`, `n ≥ 0`.
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = PseudoDiffOp::dx_power(&self.ctx, 0, self.depth).expect("order zero");
        for _ in 0..n {
            acc = acc.compose(self);
        }
        acc
    }

    /// `[A, B] = A∘B − B∘A`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other).sub(&other.compose(self))
    }

    /// The orders `≥ 0`, as an exact operator.
    pub fn positive_part(&self) -> Self {
        let coeffs = self.coeffs.range(0..).map(|(j, c)| (*j, c.clone())).collect();
        PseudoDiffOp::new(&self.ctx, self.top.max(0), None, coeffs).expect("non-negative orders")
    }

    /// The coefficient of `D_x^{−1}`.
    pub fn res(&self) -> Result<DiffPoly> {
        if !self.known(-1) {
            return Err(Error::Invalid("residue lies below the stored depth".into()));
        }
        Ok(self.coeff(-1))
    }

    /// `{"top": J, "depth": d | null, "coeffs": {j: formula}}`.
    pub fn to_json(&self) -> Value {
        let coeffs: Map<String, Value> = self
            .coeffs
            .iter()
            .rev()
            .map(|(j, c)| (j.to_string(), serde_json::to_value(FormulaJson::from_poly(c)).expect("formula")))
            .collect();
        json!({ "top": self.top, "depth": self.depth, "coeffs": coeffs })
    }
}

/// The ring of `f_0 … f_{r−2}`; from `r = 3` on it carries the parameter
/// [`SQRT_MINUS_R`] for the half-integer powers of `−r`.
pub fn gd_ring(r: usize) -> Result<Arc<RingContext>> {
    gd_ring_with(r, 0)
}

/// `gd_ring` plus `extra` auxiliary fields `x_0 …` after the `f`'s.
fn gd_ring_with(r: usize, extra: usize) -> Result<Arc<RingContext>> {
    if r < 2 {
        return Err(Error::Invalid("Gelfand-Dickey needs r >= 2".into()));
    }
    let n = r - 1 + extra;
    let eta = (0..n).map(|a| (0..n).map(|b| Gaussian::from_int(i64::from(a == b))).collect()).collect();
    let mut names: Vec<String> = (0..r - 1).map(|i| format!("f{i}")).collect();
    names.extend((0..extra).map(|i| format!("x{i}")));
    let params = if r >= 3 { vec![SQRT_MINUS_R.to_string()] } else { vec![] };
    RingContext::with_names(eta, names, params, Mode::Classical, TruncationWindow::unbounded())
}

/// `L = D_x^r + Σ_i f_i D_x^i`.
pub fn gd_lax(ctx: &Arc<RingContext>, r: usize) -> PseudoDiffOp {
    let mut coeffs = BTreeMap::from([(r as i64, DiffPoly::from_int(ctx, 1))]);
    for i in 0..r - 1 {
        coeffs.insert(i as i64, DiffPoly::var(ctx, i + 1, 0));
    }
    PseudoDiffOp::new(ctx, r as i64, None, coeffs).expect("differential operator")
}

fn lax_order(l: &PseudoDiffOp) -> Result<u32> {
    let monic = l.coeff(l.top) == DiffPoly::from_int(&l.ctx, 1);
    if l.depth.is_some() || l.top < 1 || !monic {
        return Err(Error::Invalid("expected a monic differential operator of positive order".into()));
    }
    Ok(l.top as u32)
}

/// `L^{1/r}`, monic of order one, known through `depth` orders below the
/// top. Each coefficient is read off the matching order of `root^r = L`.
pub fn rth_root(l: &PseudoDiffOp, r: u32, depth: u32) -> Result<PseudoDiffOp> {
    if lax_order(l)? != r {
        return Err(Error::Invalid(format!("operator has order {}, not {r}", l.top)));
    }
    if r == 1 {
        return Ok(l.truncate(depth));
    }
    let ctx = l.ctx.clone();
    let mut root = PseudoDiffOp::dx_power(&ctx, 1, Some(depth))?;
    let inv_r = Rational::new(1.into(), (r as i64).into());
    for k in 1..=depth {
        let partial = root.truncate(k);
        let power = partial.pow(r);
        let order = r as i64 - k as i64;
        let c = (&l.coeff(order) - &power.coeff(order)).scale_rat(&inv_r);
        root.add_term(1 - k as i64, &c);
    }
    Ok(root)
}

/// `L^{m/r}` known down to order `lowest`.
pub fn fractional_power(l: &PseudoDiffOp, m: u32, lowest: i64) -> Result<PseudoDiffOp> {
    let r = lax_order(l)?;
    let depth = (m as i64 - lowest).max(0) as u32;
    Ok(rth_root(l, r, depth)?.pow(m))
}

/// `h̄^GD_m = −(r/(m+r)) ∫ res L^{(m+r)/r}`.
pub fn gd_hamiltonian(l: &PseudoDiffOp, m: u32) -> Result<LocalFunctional> {
    if m == 0 {
        return Err(Error::Invalid("GD Hamiltonians start at m = 1".into()));
    }
    let r = lax_order(l)?;
    let res = fractional_power(l, m + r, -1)?.res()?;
    let c = Rational::new((-(r as i64)).into(), ((m + r) as i64).into());
    Ok(LocalFunctional::integrate(&res.scale_rat(&c)))
}

/// `ε∂f_i/∂T_m` from `[(L^{m/r})_+, L]`, indexed by `i`.
pub fn gd_flow(l: &PseudoDiffOp, m: u32) -> Result<BTreeMap<usize, DiffPoly>> {
    let r = lax_order(l)?;
    if m.is_multiple_of(r) {
        return Ok((0..r as usize - 1).map(|i| (i, DiffPoly::zero(&l.ctx))).collect());
    }
    let p = fractional_power(l, m, 0)?.positive_part();
    let c = p.commutator(l);
    if let Some((j, _)) = c.coeffs().find(|(j, _)| *j >= r as i64 - 1) {
        return Err(Error::Invalid(format!("Lax commutator has a term of order {j}")));
    }
    Ok((0..r as usize - 1).map(|i| (i, c.coeff(i as i64))).collect())
}

/// `X = Σ_β D_x^{−β−1} ∘ X_β` with enough depth for `[X, L]_+`.
fn x_operator(xs: &[DiffPoly], r: u32) -> Result<PseudoDiffOp> {
    let ctx = xs[0].ctx().clone();
    let depth = r + 1;
    let mut acc = PseudoDiffOp::new(&ctx, -1, Some(depth), BTreeMap::new())?;
    for (beta, x) in xs.iter().enumerate() {
        let d = PseudoDiffOp::dx_power(&ctx, -(beta as i64) - 1, Some(depth - beta as u32))?;
        acc = acc.add(&d.compose(&PseudoDiffOp::multiplication(x.clone())).truncate(depth));
    }
    Ok(acc.truncate(depth))
}

/// The coefficients of `D_x^α`, `α = 0..r−2`, of `[X, L]_+`.
pub fn gd_positive_bracket(l: &PseudoDiffOp, xs: &[DiffPoly]) -> Result<Vec<DiffPoly>> {
    let r = lax_order(l)?;
    if xs.len() != r as usize - 1 {
        return Err(Error::Invalid(format!("need {} entries of X", r - 1)));
    }
    let c = x_operator(xs, r)?.commutator(l);
    Ok((0..r as i64 - 1).map(|a| c.coeff(a)).collect())
}

/// `K^GD`, read off `[X, L]_+ = Σ (K^{αβ} X_β) D_x^α` with symbolic `X_β`.
pub fn gd_operator_bracket(l: &PseudoDiffOp) -> Result<HamiltonianOperator> {
    let r = lax_order(l)? as usize;
    let n = r - 1;
    let big = gd_ring_with(r, n)?;
    let lb = gd_lax(&big, r);
    let xs: Vec<DiffPoly> = (0..n).map(|b| DiffPoly::var(&big, r + b, 0)).collect();
    let rows = gd_positive_bracket(&lb, &xs)?;
    let ctx = l.ctx.clone();
    let mut entries = vec![vec![BTreeMap::<usize, Vec<DiffPoly>>::new(); n]; n];
    for (alpha, row) in rows.iter().enumerate() {
        for (m, c) in row.terms() {
            let xf: Vec<_> = m.factors.iter().filter(|f| f.alpha as usize > n).collect();
            if xf.len() != 1 || xf[0].pow != 1 {
                return Err(Error::Invalid("bracket is not linear in X".into()));
            }
            let beta = xf[0].alpha as usize - n - 1;
            let letters: Vec<(usize, usize, usize)> = m
                .factors
                .iter()
                .filter(|f| f.alpha as usize <= n)
                .map(|f| (f.alpha as usize, f.k as usize, f.pow as usize))
                .collect();
            let mut mono = Monomial::from_factors(ctx.params.len(), m.eps, m.hbar, &letters);
            mono.params = m.params.clone();
            entries[alpha][beta].entry(xf[0].k as usize).or_default().push(DiffPoly::monomial(&ctx, mono, c.clone()));
        }
    }
    let ops = entries
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|e| DiffOperator::from_coeffs(&ctx, e.into_iter().map(|(k, parts)| (k, sum(&ctx, parts.iter())))))
                .collect()
        })
        .collect();
    HamiltonianOperator::new(ops)
}

/// `ũ^α = res L^{(r−α)/r} / ((r−α)(−r)^{(r−α−1)/2})` for `α = 1..r−1`.
/// Odd powers of `√(−r)` are carried by the parameter [`SQRT_MINUS_R`].
pub fn gd_normal_coords(l: &PseudoDiffOp) -> Result<Vec<DiffPoly>> {
    let r = lax_order(l)? as i64;
    let ctx = l.ctx.clone();
    (1..r)
        .map(|alpha| {
            let res = fractional_power(l, (r - alpha) as u32, -1)?.res()?;
            let e = r - alpha - 1;
            let base = Rational::from_integer((-r).into());
            let half = if e % 2 == 0 { e / 2 } else { (e + 1) / 2 };
            let mut c = Rational::new(1.into(), (r - alpha).into());
            for _ in 0..half {
                c /= &base;
            }
            let out = res.scale_rat(&c);
            if e % 2 == 0 {
                Ok(out)
            } else {
                // 1/s^e = s/(−r)^{(e+1)/2} with s² = −r
                Ok(&out * &DiffPoly::param(&ctx, SQRT_MINUS_R, 1)?)
            }
        })
        .collect()
}

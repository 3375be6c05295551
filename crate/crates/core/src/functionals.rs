//! Local functionals, variational derivatives and the partial inverses of
//! `∂_x`, `D` and `D − 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::ring::poly::accumulate;
use crate::ring::{DiffPoly, Gaussian, Monomial, Rational, RingContext};

/// `∫ f dx`: a differential polynomial modulo `Im ∂_x` and constants.
///
/// Equality compares all variational derivatives.
#[derive(Clone)]
pub struct LocalFunctional {
    repr: DiffPoly,
}

impl LocalFunctional {
    /// Drops constants and reduces by parts to the canonical representative.
    pub fn integrate(f: &DiffPoly) -> Self {
        LocalFunctional { repr: ibp_reduce(&f.without_constant()) }
    }

    pub fn zero(ctx: &Arc<RingContext>) -> Self {
        LocalFunctional { repr: DiffPoly::zero(ctx) }
    }

    pub fn repr(&self) -> &DiffPoly {
        &self.repr
    }

    pub fn into_repr(self) -> DiffPoly {
        self.repr
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        self.repr.ctx()
    }

    /// `δ/δu^alpha` (1-based).
    pub fn variational_derivative(&self, alpha: usize) -> DiffPoly {
        variational_derivative(&self.repr, alpha)
    }

    /// All `N` variational derivatives.
    pub fn gradient(&self) -> Vec<DiffPoly> {
        (1..=self.ctx().n_vars).map(|a| self.variational_derivative(a)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.repr.is_zero() || self.gradient().iter().all(DiffPoly::is_zero)
    }

    pub fn add(&self, other: &LocalFunctional) -> Result<LocalFunctional> {
        Ok(LocalFunctional::integrate(&self.repr.try_add(&other.repr)?))
    }

    pub fn sub(&self, other: &LocalFunctional) -> Result<LocalFunctional> {
        Ok(LocalFunctional::integrate(&self.repr.try_sub(&other.repr)?))
    }

    pub fn scale(&self, c: &Gaussian) -> LocalFunctional {
        LocalFunctional { repr: self.repr.scale(c) }
    }

    /// Applies a polynomial map to the representative and re-canonicalizes.
    pub fn map(&self, f: impl FnOnce(&DiffPoly) -> DiffPoly) -> LocalFunctional {
        LocalFunctional::integrate(&f(&self.repr))
    }
}

impl PartialEq for LocalFunctional {
    fn eq(&self, other: &Self) -> bool {
        self.ctx().n_vars == other.ctx().n_vars && self.gradient() == other.gradient()
    }
}

impl fmt::Debug for LocalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "∫ {:?}", self.repr)
    }
}

impl fmt::Display for LocalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.repr)
    }
}

/// Euler operator `Σ_k (−∂_x)^k ∂f/∂u^alpha_k`, evaluated Horner-style.
pub fn variational_derivative(f: &DiffPoly, alpha: usize) -> DiffPoly {
    let top = f.variables().iter().filter(|(a, _)| *a as usize == alpha).map(|(_, k)| *k).max();
    let Some(top) = top else {
        return DiffPoly::zero(f.ctx()).with_exact_u_degree(f.exact_u_degree().map(|e| e - 1));
    };
    let mut acc = f.partial(alpha, top as usize);
    for k in (0..top as usize).rev() {
        acc = &f.partial(alpha, k) - &acc.dx();
    }
    acc
}

/// Whether `f` is a total derivative: no constant term and every Euler
/// operator annihilates it.
pub fn is_exact(f: &DiffPoly) -> bool {
    f.constant_part().is_zero() && (1..=f.ctx().n_vars).all(|a| variational_derivative(f, a).is_zero())
}

/// `∂_x` of a bare monomial, as `(monomial, multiplicity)` pairs.
fn dx_monomial(m: &Monomial) -> Vec<(Monomial, u16)> {
    m.factors
        .iter()
        .map(|f| {
            let lowered = m.divide_var(f.alpha, f.k, 1).expect("factor present");
            (lowered.times_var(f.alpha, f.k + 1, 1), f.pow)
        })
        .collect()
}

/// A monomial linear in its highest letter `u^α_K` with `K ≥ 1`, split as
/// `Q · (u^α_{K−1})^m · u^α_K`; returns `(Q, alpha, K, m)`.
fn reducible(m: &Monomial) -> Option<(Monomial, u16, u16, u16)> {
    let last = m.factors.last()?;
    if last.k == 0 || last.pow != 1 {
        return None;
    }
    let (a, k) = (last.alpha, last.k);
    let without_top = m.divide_var(a, k, 1)?;
    let mm = without_top.power_of(a, k - 1);
    let q = if mm > 0 { without_top.divide_var(a, k - 1, mm)? } else { without_top };
    Some((q, a, k, mm))
}

/// Splits `f = ∂_x(primitive) + remainder` with `remainder` in canonical
/// reduced form.
pub fn reduce_by_parts(f: &DiffPoly) -> (DiffPoly, DiffPoly) {
    let ctx = f.ctx();
    let mut pending: BTreeMap<Monomial, Gaussian> = f.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
    let mut remainder: BTreeMap<Monomial, Gaussian> = BTreeMap::new();
    let mut primitive: BTreeMap<Monomial, Gaussian> = BTreeMap::new();
    while let Some((m, c)) = pending.pop_last() {
        match reducible(&m) {
            None => accumulate(&mut remainder, m, c),
            Some((q, a, k, mm)) => {
                // M = Q·∂_x(u_{K−1}^{m+1})/(m+1)
                let scale = Rational::new(BigInt::from(1), BigInt::from(mm as u32 + 1));
                let cs = c.scale(&scale);
                let lifted = q.times_var(a, k - 1, mm + 1);
                accumulate(&mut primitive, lifted, cs.clone());
                for (dq, mult) in dx_monomial(&q) {
                    let term = dq.times_var(a, k - 1, mm + 1);
                    let coef = -&cs.scale(&Rational::from_integer(BigInt::from(mult)));
                    accumulate(&mut pending, term, coef);
                }
            }
        }
    }
    let exact = f.exact_u_degree();
    (
        DiffPoly::from_terms(ctx, primitive).with_exact_u_degree(exact),
        DiffPoly::from_terms(ctx, remainder).with_exact_u_degree(exact),
    )
}

/// Canonical representative modulo total derivatives.
pub fn ibp_reduce(f: &DiffPoly) -> DiffPoly {
    reduce_by_parts(f).1
}

/// `∂_x^{-1}`, normalized to have no constant term.
pub fn dx_inverse(f: &DiffPoly) -> Result<DiffPoly> {
    let c = f.constant_part();
    if !c.is_zero() {
        return Err(Error::NotExact(format!("constant term {c}")));
    }
    let (primitive, remainder) = reduce_by_parts(f);
    if !remainder.is_zero() {
        let shown: Vec<String> = remainder
            .terms()
            .take(3)
            .map(|(m, c)| DiffPoly::monomial(f.ctx(), m.clone(), c.clone()).to_string())
            .collect();
        return Err(Error::NotExact(format!("{} non-exact terms, e.g. {}", remainder.len(), shown.join(" + "))));
    }
    Ok(primitive)
}

fn divide_by_weight(f: &DiffPoly, shift: i64) -> std::result::Result<DiffPoly, Monomial> {
    let mut terms = Vec::with_capacity(f.len());
    for (m, c) in f.terms() {
        let w = m.d_weight() as i64 - shift;
        if w == 0 {
            return Err(m.clone());
        }
        terms.push((m.clone(), c.scale(&Rational::new(BigInt::from(1), BigInt::from(w)))));
    }
    Ok(DiffPoly::from_terms(f.ctx(), terms).with_exact_u_degree(f.exact_u_degree()))
}

/// `(D − 1)^{-1}`: each monomial divided by its D-weight minus one.
pub fn d_minus_one_inverse(f: &DiffPoly) -> Result<DiffPoly> {
    divide_by_weight(f, 1).map_err(|m| {
        Error::WeightOneComponent(DiffPoly::monomial(f.ctx(), m, Gaussian::one()).to_string())
    })
}

/// `D^{-1}`: each monomial divided by its D-weight.
pub fn d_inverse(f: &DiffPoly) -> Result<DiffPoly> {
    divide_by_weight(f, 0).map_err(|m| {
        Error::WeightZeroComponent(DiffPoly::monomial(f.ctx(), m, Gaussian::one()).to_string())
    })
}

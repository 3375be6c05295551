//! Differential polynomials in canonical sparse form.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;

use super::coeff::{Coefficient, Gaussian, Rational};
use super::context::{RingContext, TruncationWindow};
use crate::error::{Error, Result};

/// One letter `(u^α_k)^pow`; `alpha` is 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub alpha: u16,
    pub k: u16,
    pub pow: u16,
}

impl Factor {
    pub fn new(alpha: usize, k: usize, pow: usize) -> Self {
        Factor { alpha: alpha as u16, k: k as u16, pow: pow as u16 }
    }

    #[inline]
    fn var(&self) -> (u16, u16) {
        (self.alpha, self.k)
    }
}

/// A coefficient-free monomial: parameter exponents, `ε^eps ℏ^hbar`, and
/// u-letters sorted by `(alpha, k)` without repeats.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    pub params: Vec<u32>,
    pub eps: u32,
    pub hbar: u32,
    pub factors: Vec<Factor>,
}

impl Monomial {
    pub fn one(n_params: usize) -> Self {
        Monomial { params: vec![0; n_params], ..Default::default() }
    }

    /// Builds a monomial from arbitrary letters, merging repeats.
    pub fn from_factors(n_params: usize, eps: u32, hbar: u32, letters: &[(usize, usize, usize)]) -> Self {
        let mut m = Monomial { params: vec![0; n_params], eps, hbar, factors: Vec::new() };
        for &(a, k, p) in letters {
            if p > 0 {
                m = m.times_var(a as u16, k as u16, p as u16);
            }
        }
        m
    }

    /// `eps + 2·hbar`.
    #[inline]
    pub fn order(&self) -> u32 {
        self.eps + 2 * self.hbar
    }

    /// Number of u-letters counted with multiplicity.
    #[inline]
    pub fn u_degree(&self) -> u32 {
        self.factors.iter().map(|f| f.pow as u32).sum()
    }

    /// Standard degree: `Σ k·pow − eps − 2·hbar`.
    pub fn deg(&self) -> i64 {
        self.factors.iter().map(|f| f.k as i64 * f.pow as i64).sum::<i64>() - self.order() as i64
    }

    /// Eigenvalue of `D = ε∂_ε + 2ℏ∂_ℏ + Σ u_k ∂/∂u_k`.
    pub fn d_weight(&self) -> u32 {
        self.u_degree() + self.order()
    }

    /// Total derivative count `Σ k·pow`.
    pub fn derivative_count(&self) -> u32 {
        self.factors.iter().map(|f| f.k as u32 * f.pow as u32).sum()
    }

    pub fn is_u_free(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn power_of(&self, alpha: u16, k: u16) -> u16 {
        self.factors.iter().find(|f| f.alpha == alpha && f.k == k).map_or(0, |f| f.pow)
    }

    /// Same monomial without u-letters.
    pub fn u_free_part(&self) -> Monomial {
        Monomial { params: self.params.clone(), eps: self.eps, hbar: self.hbar, factors: Vec::new() }
    }

    /// Same monomial with only its u-letters.
    pub fn u_part(&self) -> Monomial {
        Monomial { params: vec![0; self.params.len()], eps: 0, hbar: 0, factors: self.factors.clone() }
    }

    pub fn times_var(&self, alpha: u16, k: u16, pow: u16) -> Monomial {
        let mut m = self.clone();
        match m.factors.binary_search_by(|f| f.var().cmp(&(alpha, k))) {
            Ok(i) => m.factors[i].pow += pow,
            Err(i) => m.factors.insert(i, Factor { alpha, k, pow }),
        }
        m
    }

    /// Lowers the power of `u^alpha_k` by `by`; `None` if not enough.
    pub fn divide_var(&self, alpha: u16, k: u16, by: u16) -> Option<Monomial> {
        let i = self.factors.binary_search_by(|f| f.var().cmp(&(alpha, k))).ok()?;
        if self.factors[i].pow < by {
            return None;
        }
        let mut m = self.clone();
        if m.factors[i].pow == by {
            m.factors.remove(i);
        } else {
            m.factors[i].pow -= by;
        }
        Some(m)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let params = if self.params.len() == other.params.len() {
            self.params.iter().zip(&other.params).map(|(a, b)| a + b).collect()
        } else {
            let n = self.params.len().max(other.params.len());
            (0..n)
                .map(|i| self.params.get(i).copied().unwrap_or(0) + other.params.get(i).copied().unwrap_or(0))
                .collect()
        };
        let mut factors = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, b) = (self.factors[i], other.factors[j]);
            match a.var().cmp(&b.var()) {
                Ordering::Less => {
                    factors.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    factors.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    factors.push(Factor { pow: a.pow + b.pow, ..a });
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&self.factors[i..]);
        factors.extend_from_slice(&other.factors[j..]);
        Monomial { params, eps: self.eps + other.eps, hbar: self.hbar + other.hbar, factors }
    }

    /// Highest letter in `(alpha, k)` lexicographic order.
    pub fn highest_var(&self) -> Option<(u16, u16)> {
        self.factors.last().map(|f| f.var())
    }

    pub fn max_k(&self) -> u16 {
        self.factors.iter().map(|f| f.k).max().unwrap_or(0)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(self.hbar.cmp(&other.hbar))
            .then(self.u_degree().cmp(&other.u_degree()))
            .then_with(|| self.factors.cmp(&other.factors))
            .then_with(|| self.params.cmp(&other.params))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exactness bound: terms of u-degree `≤ n` are exact; `None` means all are.
pub type ExactDegree = Option<i64>;

fn min_exact(a: ExactDegree, b: ExactDegree) -> ExactDegree {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

fn shift_exact(a: ExactDegree, by: i64) -> ExactDegree {
    a.map(|x| x + by)
}

/// An element of `Â` or `Â^ℏ`.
#[derive(Clone)]
pub struct DiffPoly {
    ctx: Arc<RingContext>,
    terms: BTreeMap<Monomial, Gaussian>,
    exact: ExactDegree,
}

impl PartialEq for DiffPoly {
    fn eq(&self, other: &Self) -> bool {
        same_ctx(&self.ctx, &other.ctx) && self.terms == other.terms
    }
}

impl Eq for DiffPoly {}

fn same_ctx(a: &Arc<RingContext>, b: &Arc<RingContext>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl DiffPoly {
    pub fn zero(ctx: &Arc<RingContext>) -> Self {
        DiffPoly { ctx: ctx.clone(), terms: BTreeMap::new(), exact: ctx.window.u_degree_cutoff.map(|c| c as i64) }
    }

    fn from_map(ctx: &Arc<RingContext>, terms: BTreeMap<Monomial, Gaussian>, exact: ExactDegree) -> Self {
        let cap = ctx.window.u_degree_cutoff.map(|c| c as i64);
        DiffPoly { ctx: ctx.clone(), terms, exact: min_exact(exact, cap) }
    }

    /// Collects terms, merging duplicates, dropping zeros and anything outside
    /// the ring's window.
    pub fn from_terms<I>(ctx: &Arc<RingContext>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Gaussian)>,
    {
        let mut map: BTreeMap<Monomial, Gaussian> = BTreeMap::new();
        let np = ctx.params.len();
        for (mut m, c) in terms {
            if c.is_zero() || !ctx.window.admits(m.order(), m.u_degree()) {
                continue;
            }
            if !ctx.is_quantum() && m.hbar > 0 {
                continue;
            }
            m.params.resize(np, 0);
            accumulate(&mut map, m, c);
        }
        Self::from_map(ctx, map, None)
    }

    pub fn constant(ctx: &Arc<RingContext>, c: Gaussian) -> Self {
        Self::from_terms(ctx, [(Monomial::one(ctx.params.len()), c)])
    }

    pub fn from_int(ctx: &Arc<RingContext>, n: i64) -> Self {
        Self::constant(ctx, Gaussian::from_int(n))
    }

    /// A coefficient with parameters; fails for undeclared parameter names.
    pub fn from_coefficient(ctx: &Arc<RingContext>, c: &Coefficient) -> Result<Self> {
        let mut m = Monomial::one(ctx.params.len());
        for (name, e) in &c.params {
            let i = ctx.param_index(name).ok_or_else(|| Error::Invalid(format!("undeclared parameter `{name}`")))?;
            m.params[i] += e;
        }
        Ok(Self::from_terms(ctx, [(m, c.value.clone())]))
    }

    /// The letter `u^alpha_k` (1-based `alpha`).
    pub fn var(ctx: &Arc<RingContext>, alpha: usize, k: usize) -> Self {
        assert!(alpha >= 1 && alpha <= ctx.n_vars, "variable index {alpha} out of range");
        Self::from_terms(ctx, [(Monomial::from_factors(ctx.params.len(), 0, 0, &[(alpha, k, 1)]), Gaussian::one())])
    }

    /// `ε^n`.
    pub fn eps(ctx: &Arc<RingContext>, n: u32) -> Self {
        let mut m = Monomial::one(ctx.params.len());
        m.eps = n;
        Self::from_terms(ctx, [(m, Gaussian::one())])
    }

    /// `ℏ^n`.
    pub fn hbar(ctx: &Arc<RingContext>, n: u32) -> Self {
        let mut m = Monomial::one(ctx.params.len());
        m.hbar = n;
        Self::from_terms(ctx, [(m, Gaussian::one())])
    }

    /// A declared parameter raised to `n`.
    pub fn param(ctx: &Arc<RingContext>, name: &str, n: u32) -> Result<Self> {
        Self::from_coefficient(ctx, &Coefficient::from(1).with_param(name, n))
    }

    pub fn monomial(ctx: &Arc<RingContext>, m: Monomial, c: Gaussian) -> Self {
        Self::from_terms(ctx, [(m, c)])
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Gaussian)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Monomial, Gaussian> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff_of(&self, m: &Monomial) -> Gaussian {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Highest u-degree through which every coefficient is exact.
    pub fn exact_u_degree(&self) -> ExactDegree {
        self.exact
    }

    pub fn with_exact_u_degree(mut self, e: ExactDegree) -> Self {
        self.exact = min_exact(self.exact, e);
        self
    }

    /// Drops everything above the exact u-degree.
    pub fn restrict_to_exact(&self) -> Self {
        match self.exact {
            None => self.clone(),
            Some(e) => self.filter(|m, _| (m.u_degree() as i64) <= e),
        }
    }

    fn check(&self, other: &DiffPoly) -> Result<()> {
        if same_ctx(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn try_add(&self, other: &DiffPoly) -> Result<DiffPoly> {
        self.check(other)?;
        let mut map = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut map, m.clone(), c.clone());
        }
        Ok(Self::from_map(&self.ctx, map, min_exact(self.exact, other.exact)))
    }

    pub fn try_sub(&self, other: &DiffPoly) -> Result<DiffPoly> {
        self.check(other)?;
        let mut map = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut map, m.clone(), -c);
        }
        Ok(Self::from_map(&self.ctx, map, min_exact(self.exact, other.exact)))
    }

    pub fn try_mul(&self, other: &DiffPoly) -> Result<DiffPoly> {
        self.check(other)?;
        let w = self.ctx.window;
        let mut map: HashMap<Monomial, Gaussian> = HashMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if !w.admits(ma.order() + mb.order(), ma.u_degree() + mb.u_degree()) {
                    continue;
                }
                let m = ma.mul(mb);
                let c = ca * cb;
                match map.get_mut(&m) {
                    Some(acc) => *acc += &c,
                    None => {
                        map.insert(m, c);
                    }
                }
            }
        }
        let terms: BTreeMap<_, _> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        let exact = min_exact(
            shift_exact(self.exact, other.min_u_degree().unwrap_or(0) as i64),
            shift_exact(other.exact, self.min_u_degree().unwrap_or(0) as i64),
        );
        let exact = if self.is_zero() || other.is_zero() { min_exact(self.exact, other.exact) } else { exact };
        Ok(Self::from_map(&self.ctx, terms, exact))
    }

    pub fn scale(&self, c: &Gaussian) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly { terms: BTreeMap::new(), ..self.clone() };
        }
        let terms = self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect();
        DiffPoly { ctx: self.ctx.clone(), terms, exact: self.exact }
    }

    pub fn scale_rat(&self, r: &Rational) -> DiffPoly {
        self.scale(&Gaussian::real(r.clone()))
    }

    /// Multiplication by a coefficient carrying parameters.
    pub fn scale_coeff(&self, c: &Coefficient) -> Result<DiffPoly> {
        let k = DiffPoly::from_coefficient(&self.ctx, c)?;
        self.try_mul(&k)
    }

    /// Multiplication by `c · m` for a single monomial.
    pub fn mul_monomial(&self, m: &Monomial, c: &Gaussian) -> DiffPoly {
        let w = self.ctx.window;
        let mut map = BTreeMap::new();
        for (mm, cc) in &self.terms {
            if !w.admits(mm.order() + m.order(), mm.u_degree() + m.u_degree()) {
                continue;
            }
            let v = cc * c;
            if !v.is_zero() {
                map.insert(mm.mul(m), v);
            }
        }
        let exact = shift_exact(self.exact, m.u_degree() as i64);
        Self::from_map(&self.ctx, map, exact)
    }

    pub fn mul_eps(&self, n: u32) -> DiffPoly {
        let mut m = Monomial::one(self.ctx.params.len());
        m.eps = n;
        self.mul_monomial(&m, &Gaussian::one())
    }

    pub fn mul_hbar(&self, n: u32) -> DiffPoly {
        let mut m = Monomial::one(self.ctx.params.len());
        m.hbar = n;
        self.mul_monomial(&m, &Gaussian::one())
    }

    pub fn pow(&self, n: u32) -> DiffPoly {
        let mut acc = DiffPoly::from_int(&self.ctx, 1);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Keeps the terms selected by `keep`.
    pub fn filter<F: Fn(&Monomial, &Gaussian) -> bool>(&self, keep: F) -> DiffPoly {
        let terms = self.terms.iter().filter(|(m, c)| keep(m, c)).map(|(m, c)| (m.clone(), c.clone())).collect();
        DiffPoly { ctx: self.ctx.clone(), terms, exact: self.exact }
    }

    /// Applies `f` to every monomial key, re-collecting terms.
    pub fn map_monomials<F: Fn(&Monomial) -> Option<(Monomial, Gaussian)>>(&self, f: F) -> DiffPoly {
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            if let Some((m2, k)) = f(m) {
                if self.ctx.window.admits(m2.order(), m2.u_degree()) {
                    accumulate(&mut map, m2, c * &k);
                }
            }
        }
        Self::from_map(&self.ctx, map, self.exact)
    }

    /// Total x-derivative `∂_x = Σ u^α_{k+1} ∂/∂u^α_k`.
    pub fn dx(&self) -> DiffPoly {
        let mut map: BTreeMap<Monomial, Gaussian> = BTreeMap::new();
        for (m, c) in &self.terms {
            for f in &m.factors {
                let lowered = m.divide_var(f.alpha, f.k, 1).expect("factor present");
                let raised = lowered.times_var(f.alpha, f.k + 1, 1);
                let coef = c.scale(&Rational::from_integer(BigInt::from(f.pow)));
                accumulate(&mut map, raised, coef);
            }
        }
        Self::from_map(&self.ctx, map, self.exact)
    }

    pub fn dx_n(&self, n: usize) -> DiffPoly {
        let mut p = self.clone();
        for _ in 0..n {
            if p.is_zero() {
                break;
            }
            p = p.dx();
        }
        p
    }

    /// Formal partial derivative `∂/∂u^alpha_k`.
    pub fn partial(&self, alpha: usize, k: usize) -> DiffPoly {
        let (a, k) = (alpha as u16, k as u16);
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            let p = m.power_of(a, k);
            if p == 0 {
                continue;
            }
            let lowered = m.divide_var(a, k, 1).expect("factor present");
            accumulate(&mut map, lowered, c.scale(&Rational::from_integer(BigInt::from(p))));
        }
        Self::from_map(&self.ctx, map, shift_exact(self.exact, -1))
    }

    /// `D = ε∂_ε + 2ℏ∂_ℏ + Σ u^α_k ∂/∂u^α_k`.
    pub fn euler_d(&self) -> DiffPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.d_weight() > 0)
            .map(|(m, c)| (m.clone(), c.scale(&Rational::from_integer(BigInt::from(m.d_weight())))))
            .collect();
        DiffPoly { ctx: self.ctx.clone(), terms, exact: self.exact }
    }

    /// Replaces every `u^α_k` by `∂_x^k(images[α-1])`.
    pub fn substitute(&self, images: &[DiffPoly]) -> Result<DiffPoly> {
        if images.len() != self.ctx.n_vars {
            return Err(Error::Invalid(format!("need {} images, got {}", self.ctx.n_vars, images.len())));
        }
        let target = images[0].ctx.clone();
        for im in images {
            if !same_ctx(&im.ctx, &target) {
                return Err(Error::ContextMismatch);
            }
        }
        // derivative and power caches keyed by (alpha, k) and (alpha, k, pow)
        let mut derivs: HashMap<(u16, u16), DiffPoly> = HashMap::new();
        let mut powers: HashMap<(u16, u16, u16), DiffPoly> = HashMap::new();
        let mut acc = DiffPoly::zero(&target);
        let mut min_img = u32::MAX;
        let mut img_exact: ExactDegree = None;
        for im in images {
            if let Some(d) = im.min_u_degree() {
                min_img = min_img.min(d);
            }
            img_exact = min_exact(img_exact, im.exact);
        }
        for (m, c) in &self.terms {
            let mut prefix = m.u_free_part();
            prefix.params.resize(target.params.len(), 0);
            let mut term = DiffPoly::monomial(&target, prefix, c.clone());
            for f in &m.factors {
                if term.is_zero() {
                    break;
                }
                let power = powers.entry((f.alpha, f.k, f.pow)).or_insert_with(|| {
                    derivs
                        .entry((f.alpha, f.k))
                        .or_insert_with(|| images[f.alpha as usize - 1].dx_n(f.k as usize))
                        .pow(f.pow as u32)
                });
                term = &term * &*power;
            }
            acc = &acc + &term;
        }
        let exact = if min_img >= 1 || self.exact.is_none() {
            min_exact(self.exact, img_exact)
        } else {
            Some(-1)
        };
        let mut out = acc;
        out.exact = min_exact(exact, target.window.u_degree_cutoff.map(|c| c as i64));
        if self.exact.is_none() && img_exact.is_none() {
            out.exact = target.window.u_degree_cutoff.map(|c| c as i64);
        }
        Ok(out)
    }

    /// Moves the polynomial into another ring with the same variables,
    /// re-applying that ring's window.
    pub fn rehome(&self, ctx: &Arc<RingContext>) -> Result<DiffPoly> {
        if self.ctx.n_vars != ctx.n_vars {
            return Err(Error::ContextMismatch);
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            let mut params = vec![0u32; ctx.params.len()];
            for (i, e) in m.params.iter().enumerate() {
                if *e == 0 {
                    continue;
                }
                let name = &self.ctx.params[i];
                let j = ctx.param_index(name).ok_or_else(|| Error::Invalid(format!("parameter `{name}` missing")))?;
                params[j] = *e;
            }
            m2.params = params;
            if m2.hbar > 0 && !ctx.is_quantum() {
                return Err(Error::ModeMismatch { expected: "quantum" });
            }
            out.push((m2, c.clone()));
        }
        Ok(DiffPoly::from_terms(ctx, out).with_exact_u_degree(self.exact))
    }

    pub fn truncate(&self, window: TruncationWindow) -> DiffPoly {
        self.filter(|m, _| window.admits(m.order(), m.u_degree()))
    }

    /// Keeps terms with `eps_pow + 2·hbar_pow ≤ n`.
    pub fn truncate_order(&self, n: u32) -> DiffPoly {
        self.filter(|m, _| m.order() <= n)
    }

    /// Keeps terms with `eps_pow ≤ n`.
    pub fn truncate_eps(&self, n: u32) -> DiffPoly {
        self.filter(|m, _| m.eps <= n)
    }

    pub fn restrict_u_degree(&self, max: u32) -> DiffPoly {
        self.filter(|m, _| m.u_degree() <= max)
    }

    /// Classical limit `ℏ = 0`.
    pub fn set_hbar_zero(&self) -> DiffPoly {
        self.filter(|m, _| m.hbar == 0)
    }

    pub fn set_eps_zero(&self) -> DiffPoly {
        self.filter(|m, _| m.eps == 0)
    }

    /// Coefficient of `ℏ^n`, as a polynomial without ℏ.
    pub fn hbar_coefficient(&self, n: u32) -> DiffPoly {
        self.map_monomials(|m| {
            (m.hbar == n).then(|| {
                let mut m2 = m.clone();
                m2.hbar = 0;
                (m2, Gaussian::one())
            })
        })
    }

    /// Divides by ℏ; fails if a term has no ℏ.
    pub fn div_hbar(&self) -> Result<DiffPoly> {
        let mut map = BTreeMap::new();
        for (m, c) in &self.terms {
            if m.hbar == 0 {
                return Err(Error::Invalid("term without hbar cannot be divided by hbar".into()));
            }
            let mut m2 = m.clone();
            m2.hbar -= 1;
            map.insert(m2, c.clone());
        }
        Ok(Self::from_map(&self.ctx, map, self.exact))
    }

    /// Sets a declared parameter to zero.
    pub fn set_param_zero(&self, name: &str) -> DiffPoly {
        match self.ctx.param_index(name) {
            None => self.clone(),
            Some(i) => self.filter(|m, _| m.params[i] == 0),
        }
    }

    /// The u-independent part (the value at `u = 0`).
    pub fn constant_part(&self) -> DiffPoly {
        self.filter(|m, _| m.is_u_free())
    }

    pub fn without_constant(&self) -> DiffPoly {
        self.filter(|m, _| !m.is_u_free())
    }

    pub fn min_u_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.u_degree()).min()
    }

    pub fn max_u_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.u_degree()).max()
    }

    pub fn max_order(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.order()).max()
    }

    /// Highest derivative order appearing.
    pub fn max_k(&self) -> Option<u16> {
        self.terms.keys().filter(|m| !m.is_u_free()).map(|m| m.max_k()).max()
    }

    /// All letters `(alpha, k)` that occur.
    pub fn variables(&self) -> Vec<(u16, u16)> {
        let mut v: Vec<(u16, u16)> = self.terms.keys().flat_map(|m| m.factors.iter().map(|f| f.var())).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Whether every term has standard degree `d`.
    pub fn is_homogeneous(&self, d: i64) -> bool {
        self.terms.keys().all(|m| m.deg() == d)
    }

    pub fn lead_term(&self) -> Option<(&Monomial, &Gaussian)> {
        self.terms.iter().next_back()
    }
}

pub(crate) fn accumulate(map: &mut BTreeMap<Monomial, Gaussian>, m: Monomial, c: Gaussian) {
    use std::collections::btree_map::Entry;
    match map.entry(m) {
        Entry::Vacant(v) => {
            if !c.is_zero() {
                v.insert(c);
            }
        }
        Entry::Occupied(mut o) => {
            *o.get_mut() += &c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::pretty::render(self))
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::pretty::render(self))
    }
}

impl Add<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: &DiffPoly) -> DiffPoly {
        self.try_add(rhs).expect("ring context mismatch in addition")
    }
}

impl Sub<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: &DiffPoly) -> DiffPoly {
        self.try_sub(rhs).expect("ring context mismatch in subtraction")
    }
}

impl Mul<&DiffPoly> for &DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: &DiffPoly) -> DiffPoly {
        self.try_mul(rhs).expect("ring context mismatch in multiplication")
    }
}

impl Add for DiffPoly {
    type Output = DiffPoly;
    fn add(self, rhs: DiffPoly) -> DiffPoly {
        &self + &rhs
    }
}

impl Sub for DiffPoly {
    type Output = DiffPoly;
    fn sub(self, rhs: DiffPoly) -> DiffPoly {
        &self - &rhs
    }
}

impl Mul for DiffPoly {
    type Output = DiffPoly;
    fn mul(self, rhs: DiffPoly) -> DiffPoly {
        &self * &rhs
    }
}

impl Neg for &DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        self.scale(&Gaussian::from_int(-1))
    }
}

impl Neg for DiffPoly {
    type Output = DiffPoly;
    fn neg(self) -> DiffPoly {
        -&self
    }
}

/// Sum of polynomials over one ring.
pub fn sum<'a, I: IntoIterator<Item = &'a DiffPoly>>(ctx: &Arc<RingContext>, items: I) -> DiffPoly {
    let mut map = BTreeMap::new();
    let mut exact: ExactDegree = ctx.window.u_degree_cutoff.map(|c| c as i64);
    for p in items {
        exact = min_exact(exact, p.exact);
        for (m, c) in &p.terms {
            accumulate(&mut map, m.clone(), c.clone());
        }
    }
    DiffPoly::from_map(ctx, map, exact)
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::context::Mode;
    use crate::ring::coeff::rat;

    fn kdv_ctx() -> Arc<RingContext> {
        RingContext::scalar(Mode::Quantum, &[], TruncationWindow::default())
    }

    fn u(ctx: &Arc<RingContext>, k: usize) -> DiffPoly {
        DiffPoly::var(ctx, 1, k)
    }

    #[test]
    fn square_of_u() {
        let c = kdv_ctx();
        let sq = &u(&c, 0) * &u(&c, 0);
        assert_eq!(sq.len(), 1);
        let (m, v) = sq.terms().next().unwrap();
        assert_eq!(m.factors, vec![Factor::new(1, 0, 2)]);
        assert!(v.is_one());
    }

    #[test]
    fn scale_by_zero_is_zero() {
        let c = kdv_ctx();
        assert!(u(&c, 3).scale(&Gaussian::zero()).is_zero());
    }

    #[test]
    fn eps_products_add_exponents() {
        let c = kdv_ctx();
        let a = u(&c, 1).mul_eps(1);
        let sq = &a * &a;
        let (m, _) = sq.terms().next().unwrap();
        assert_eq!(m.eps, 2);
        assert_eq!(m.factors, vec![Factor::new(1, 1, 2)]);
    }

    #[test]
    fn dx_examples() {
        let c = kdv_ctx();
        let half = Gaussian::from_ratio(1, 2);
        let u2h = (&u(&c, 0) * &u(&c, 0)).scale(&half);
        assert_eq!(u2h.dx(), &u(&c, 0) * &u(&c, 1));
        let uu2 = &u(&c, 0) * &u(&c, 2);
        assert_eq!(uu2.dx(), &(&u(&c, 1) * &u(&c, 2)) + &(&u(&c, 0) * &u(&c, 3)));
        assert!(DiffPoly::from_int(&c, 7).mul_hbar(1).dx().is_zero());
    }

    #[test]
    fn partial_examples() {
        let c = kdv_ctx();
        let u3 = u(&c, 0).pow(3).scale_rat(&rat(1, 6));
        assert_eq!(u3.partial(1, 0), u(&c, 0).pow(2).scale_rat(&rat(1, 2)));
        assert_eq!((&u(&c, 0) * &u(&c, 2)).partial(1, 2), u(&c, 0));
        assert!(u(&c, 2).mul_eps(2).partial(1, 0).is_zero());
    }

    #[test]
    fn euler_d_examples() {
        let c = kdv_ctx();
        let u2h = u(&c, 0).pow(2).scale_rat(&rat(1, 2));
        assert_eq!(u2h.euler_d(), u(&c, 0).pow(2));
        let t = (&u(&c, 0) * &u(&c, 2)).mul_eps(2);
        assert_eq!(t.euler_d(), t.scale(&Gaussian::from_int(4)));
        let h = u(&c, 0).mul_hbar(1);
        assert_eq!(h.euler_d(), h.scale(&Gaussian::from_int(3)));
    }

    #[test]
    fn substitute_examples() {
        let c = kdv_ctx();
        let img = &u(&c, 0) + &u(&c, 2).mul_eps(2);
        assert_eq!(u(&c, 2).substitute(&[img]).unwrap(), &u(&c, 2) + &u(&c, 4).mul_eps(2));
        let f = &(&u(&c, 0) * &u(&c, 3)) + &u(&c, 1);
        assert_eq!(f.substitute(&[u(&c, 0)]).unwrap(), f);
        let two_u = u(&c, 0).scale(&Gaussian::from_int(2));
        assert_eq!(u(&c, 0).pow(2).substitute(&[two_u]).unwrap(), u(&c, 0).pow(2).scale(&Gaussian::from_int(4)));
    }

    #[test]
    fn window_truncates_products() {
        let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::order(2).with_u_degree(3));
        let a = &u(&c, 0) + &u(&c, 1).mul_eps(1);
        let p = a.pow(4);
        assert!(p.is_zero());
        let q = a.pow(2);
        assert!(q.terms().all(|(m, _)| m.eps <= 2));
        assert_eq!(q.exact_u_degree(), Some(3));
    }

    #[test]
    fn exactness_tracks_products_and_partials() {
        let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::default().with_u_degree(6));
        let a = u(&c, 0).pow(2);
        assert_eq!(a.exact_u_degree(), Some(6));
        let b = a.partial(1, 0);
        assert_eq!(b.exact_u_degree(), Some(5));
        let p = &b * &u(&c, 0);
        // b is exact through 5 and u has min degree 1
        assert_eq!(p.exact_u_degree(), Some(6));
    }

    #[test]
    fn monomial_degrees() {
        let m = Monomial::from_factors(0, 2, 1, &[(1, 2, 1), (1, 0, 1)]);
        assert_eq!(m.deg(), 2 - 2 - 2);
        assert_eq!(m.d_weight(), 2 + 2 + 2);
        assert_eq!(m.factors[0], Factor::new(1, 0, 1));
    }
}

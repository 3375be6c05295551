//! Undetermined-coefficient search for DR-type generators.
//!
//! The unknown part of the generator at a fixed genus is written in a
//! monomial basis with symbolic coefficients `c_i`. With all lower genera
//! frozen the recursion is linear in the `c_i`, so every obstruction
//! (non-exact brackets, the shape of `δh̄/δu¹`, quantum self-consistency)
//! becomes a linear equation over `Q(i)[params]`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::brackets::hamiltonian_bracket;
use crate::error::{Error, Result};
use crate::functionals::{d_minus_one_inverse, ibp_reduce, reduce_by_parts, variational_derivative, LocalFunctional};
use crate::recursion::seed;
use crate::ring::json::FormulaJson;
use crate::ring::{sum, DiffPoly, Gaussian, Monomial, RingContext, TruncationWindow};

/// Polynomial in the ring parameters with Gaussian-rational coefficients,
/// keyed by exponent vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Scalar(BTreeMap<Vec<u32>, Gaussian>);

impl Scalar {
    fn constant(n: usize, c: Gaussian) -> Self {
        let mut s = Scalar::default();
        s.add_term(vec![0; n], c);
        s
    }

    fn add_term(&mut self, e: Vec<u32>, c: Gaussian) {
        if c.is_zero() {
            return;
        }
        let slot = self.0.entry(e).or_insert_with(Gaussian::zero);
        *slot += &c;
        if slot.is_zero() {
            self.0.retain(|_, v| !v.is_zero());
        }
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_constant(&self) -> Option<Gaussian> {
        match self.0.len() {
            0 => Some(Gaussian::zero()),
            1 => {
                let (e, c) = self.0.iter().next().expect("one term");
                e.iter().all(|x| *x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn scale(&self, c: &Gaussian) -> Scalar {
        let mut out = Scalar::default();
        for (e, v) in &self.0 {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    fn mul(&self, other: &Scalar) -> Scalar {
        let mut out = Scalar::default();
        for (e1, v1) in &self.0 {
            for (e2, v2) in &other.0 {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, v1 * v2);
            }
        }
        out
    }

    /// `self − f·other`.
    fn sub_mul(&self, f: &Scalar, other: &Scalar) -> Scalar {
        let mut out = self.clone();
        for (e, v) in f.mul(other).0 {
            out.add_term(e, -v);
        }
        out
    }

    fn neg(&self) -> Scalar {
        self.scale(&Gaussian::from_int(-1))
    }

    fn to_poly(&self, ctx: &Arc<RingContext>) -> DiffPoly {
        let n = ctx.params.len();
        let terms = self.0.iter().map(|(e, c)| {
            let mut m = Monomial::one(n);
            m.params[..e.len()].copy_from_slice(e);
            (m, c.clone())
        });
        DiffPoly::from_terms(ctx, terms)
    }
}

/// Monomials of genus `genus` in the ring, one per class modulo total
/// derivatives, with u-degree between 1 and `max_u_degree`.
///
/// A genus-`g` monomial carries `ε^{2j} ℏ^{g−j}`; the x-derivative count is
/// even and bounded by `2g` (equal to `2g` for classical rings).
pub fn monomial_basis(ctx: &Arc<RingContext>, genus: u32, max_u_degree: u32) -> Vec<Monomial> {
    let np = ctx.params.len();
    let top = 2 * genus;
    let letters: Vec<(usize, usize)> =
        (1..=ctx.n_vars).flat_map(|a| (0..=top as usize).map(move |k| (a, k))).collect();
    let mut shapes: Vec<Vec<(usize, usize, usize)>> = Vec::new();
    let mut current = Vec::new();
    collect_shapes(&letters, 0, max_u_degree, top, &mut current, &mut shapes);

    let hbar_range = if ctx.is_quantum() { 0..=genus } else { 0..=0 };
    let mut out = BTreeSet::new();
    for h in hbar_range {
        let eps = 2 * (genus - h);
        for shape in &shapes {
            let m = Monomial::from_factors(np, eps, h, shape);
            let dcount = m.derivative_count();
            if m.u_degree() == 0 || dcount % 2 == 1 || (!ctx.is_quantum() && dcount != top) {
                continue;
            }
            let reduced = ibp_reduce(&DiffPoly::monomial(ctx, m, Gaussian::one()));
            out.extend(reduced.terms().map(|(m, _)| m.clone()));
        }
    }
    let mut basis: Vec<Monomial> = out.into_iter().collect();
    basis.sort_by_key(|m| (m.hbar, m.u_degree(), m.derivative_count(), m.clone()));
    basis
}

fn collect_shapes(
    letters: &[(usize, usize)],
    from: usize,
    degree_left: u32,
    derivs_left: u32,
    current: &mut Vec<(usize, usize, usize)>,
    out: &mut Vec<Vec<(usize, usize, usize)>>,
) {
    out.push(current.clone());
    if degree_left == 0 {
        return;
    }
    for (idx, &(a, k)) in letters.iter().enumerate().skip(from) {
        if k as u32 > derivs_left {
            continue;
        }
        current.push((a, k, 1));
        collect_shapes(letters, idx, degree_left - 1, derivs_left - k as u32, current, out);
        current.pop();
    }
}

/// The search: a frozen known part, the genus to solve for, and bounds.
#[derive(Clone, Debug)]
pub struct AnsatzProblem {
    known: LocalFunctional,
    genus: u32,
    max_u_degree: u32,
    d_check: i64,
    lookahead: u32,
    gauge: Option<DiffPoly>,
    normalization: Option<DiffPoly>,
}

impl AnsatzProblem {
    /// `known` holds the generator through genus `genus − 1`.
    pub fn new(known: LocalFunctional, genus: u32) -> Self {
        let max_u_degree = (genus + 1).max(3);
        AnsatzProblem { known, genus, max_u_degree, d_check: 3, lookahead: 0, gauge: None, normalization: None }
    }

    pub fn with_max_u_degree(mut self, d: u32) -> Self {
        self.max_u_degree = d;
        self
    }

    /// Recursion levels `G_{α,d}` that must exist, `d ≤ d_check`.
    pub fn with_d_check(mut self, d: i64) -> Self {
        self.d_check = d;
        self
    }

    /// Also solve for the next `n` genera and check through their order.
    /// Only sound while the system stays linear, which needs `n < genus`.
    pub fn with_lookahead(mut self, n: u32) -> Self {
        self.lookahead = n;
        self
    }

    /// Pins basis coefficients: each term of `pins` (after reduction modulo
    /// total derivatives) fixes the coefficient of its monomial.
    pub fn with_gauge(mut self, pins: DiffPoly) -> Self {
        self.gauge = Some(pins);
        self
    }

    /// Scales free directions: when a free coefficient's monomial appears in
    /// `hints`, its kernel vector gets that coefficient instead of one.
    pub fn with_normalization(mut self, hints: DiffPoly) -> Self {
        self.normalization = Some(hints);
        self
    }

    pub fn known(&self) -> &LocalFunctional {
        &self.known
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }
}

/// One free parameter: its name, the basis column it was freed at, the
/// coefficient it carries there, and its full direction.
#[derive(Clone, Debug)]
struct Direction {
    name: String,
    column: usize,
    scale: Gaussian,
    coeffs: Vec<DiffPoly>,
}

/// Affine family `particular + Σ s_k · kernel_k` of admissible generators.
#[derive(Clone, Debug)]
pub struct AnsatzSolution {
    ctx: Arc<RingContext>,
    fixed: DiffPoly,
    basis: Vec<Monomial>,
    particular: Vec<DiffPoly>,
    kernel: Vec<Direction>,
    conditions: Vec<DiffPoly>,
    unknowns: usize,
    equations: usize,
    d_check: i64,
    orders: (u32, u32),
}

impl AnsatzSolution {
    /// The ring of the answer: the input ring plus the new free parameters.
    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn free_params(&self) -> Vec<&str> {
        self.kernel.iter().map(|d| d.name.as_str()).collect()
    }

    /// Recursion depth the constraints were taken through.
    pub fn d_check(&self) -> i64 {
        self.d_check
    }

    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    /// Polynomial equations on the ring parameters that the lower genera
    /// must satisfy for this genus to be solvable.
    pub fn conditions(&self) -> &[DiffPoly] {
        &self.conditions
    }

    pub fn equations(&self) -> usize {
        self.equations
    }

    fn combine(&self, coeffs: &[DiffPoly]) -> Result<DiffPoly> {
        let mut parts = Vec::with_capacity(coeffs.len());
        for (m, c) in self.basis.iter().zip(coeffs) {
            parts.push(c.try_mul(&DiffPoly::monomial(&self.ctx, m.clone(), Gaussian::one()))?);
        }
        Ok(sum(&self.ctx, parts.iter()))
    }

    /// Known part, gauge pins and the particular solution.
    pub fn particular(&self) -> Result<LocalFunctional> {
        Ok(LocalFunctional::integrate(&self.fixed.try_add(&self.combine(&self.particular)?)?))
    }

    /// The homogeneous directions, in the order of `free_params`.
    pub fn kernel(&self) -> Result<Vec<LocalFunctional>> {
        self.kernel.iter().map(|d| Ok(LocalFunctional::integrate(&self.combine(&d.coeffs)?))).collect()
    }

    /// The member with the given parameter values (u-free polynomials).
    pub fn point(&self, values: &[DiffPoly]) -> Result<LocalFunctional> {
        if values.len() != self.kernel.len() {
            return Err(Error::Invalid(format!("{} values for {} parameters", values.len(), self.kernel.len())));
        }
        let mut acc = self.particular()?.into_repr();
        for (d, v) in self.kernel.iter().zip(values) {
            acc = acc.try_add(&self.combine(&d.coeffs)?.try_mul(&v.rehome(&self.ctx)?)?)?;
        }
        Ok(LocalFunctional::integrate(&acc))
    }

    /// The whole family with the free parameters as ring parameters.
    pub fn generic(&self) -> Result<LocalFunctional> {
        let values: Vec<DiffPoly> =
            self.kernel.iter().map(|d| DiffPoly::param(&self.ctx, &d.name, 1)).collect::<Result<_>>()?;
        self.point(&values)
    }

    /// Parameter values at which the family reproduces `f` through the solved
    /// orders, or `None` when `f` lies outside it.
    pub fn locate(&self, f: &LocalFunctional) -> Result<Option<Vec<DiffPoly>>> {
        let target = ibp_reduce(&f.repr().rehome(&self.ctx)?.truncate_order(self.orders.1));
        let mut values = Vec::with_capacity(self.kernel.len());
        for d in &self.kernel {
            let m = &self.basis[d.column];
            let c = target.filter(|t, _| t.eps == m.eps && t.hbar == m.hbar && t.factors == m.factors);
            let c = c.map_monomials(|t| Some((Monomial { params: t.params.clone(), ..Default::default() }, Gaussian::one())));
            let inv = d.scale.inv().expect("nonzero scale");
            values.push(c.scale(&inv));
        }
        let candidate = self.point(&values)?;
        let diff = ibp_reduce(&candidate.repr().try_sub(&target)?);
        Ok(diff.is_zero().then_some(values))
    }

    pub fn to_json(&self) -> Result<Value> {
        let kernel: Result<Vec<Value>> =
            self.kernel.iter().map(|d| Ok(json!(FormulaJson::from_poly(&self.combine(&d.coeffs)?)))).collect();
        Ok(json!({
            "basis_point": FormulaJson::from_poly(self.particular()?.repr()),
            "kernel": kernel?,
            "free_params": self.free_params(),
            "orders": [self.orders.0, self.orders.1],
            "d_check": self.d_check,
            "unknowns": self.unknowns,
            "equations": self.equations,
            "conditions": self.conditions.iter().map(FormulaJson::from_poly).collect::<Vec<_>>(),
        }))
    }
}

/// One linear equation `Σ a_i c_i + b = 0`.
#[derive(Clone, Debug)]
struct Row {
    a: Vec<Scalar>,
    b: Scalar,
}

/// Splits a constraint polynomial into linear equations, one per monomial
/// in `u`, `ε`, `ℏ`.
fn harvest(p: &DiffPoly, n_base: usize, n_unknowns: usize, rows: &mut BTreeMap<Monomial, Row>) -> Result<()> {
    for (m, c) in p.terms() {
        let (base, unk) = m.params.split_at(n_base);
        let total: u32 = unk.iter().sum();
        if total > 1 {
            return Err(Error::Invalid(format!(
                "constraint is not linear in the unknowns at order {}; lower the lookahead",
                m.order()
            )));
        }
        let mut key = m.clone();
        key.params = Vec::new();
        let row = rows
            .entry(key)
            .or_insert_with(|| Row { a: vec![Scalar::default(); n_unknowns], b: Scalar::default() });
        let slot = match unk.iter().position(|e| *e == 1) {
            Some(i) => &mut row.a[i],
            None => &mut row.b,
        };
        slot.add_term(base.to_vec(), c.clone());
    }
    Ok(())
}

fn unknown_names(base: &RingContext, n: usize) -> Vec<String> {
    let mut prefix = "c".to_string();
    while base.params.iter().any(|p| p.starts_with(&prefix)) {
        prefix.push('c');
    }
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn fresh_params(base: &RingContext, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    let mut k = 1;
    while out.len() < n {
        let name = format!("s{k}");
        if !base.params.contains(&name) {
            out.push(name);
        }
        k += 1;
    }
    out
}

/// Map from basis monomial to a scalar, read off a reduced polynomial.
fn scalar_table(p: &DiffPoly, n_base: usize) -> BTreeMap<Monomial, Scalar> {
    let mut out: BTreeMap<Monomial, Scalar> = BTreeMap::new();
    for (m, c) in ibp_reduce(p).terms() {
        let mut key = m.clone();
        let e = std::mem::replace(&mut key.params, vec![0; n_base]);
        out.entry(key).or_default().add_term(e, c.clone());
    }
    out
}

/// Every polynomial that must vanish: the non-exact remainder of the
/// shape condition, of each recursion step, and of `G_{1,1} − H`.
///
/// At genus 0 the recursion is quadratic in the unknowns, so only the shape
/// condition is imposed there and the result is checked afterwards.
fn constraint_polys(h: &LocalFunctional, trial: &DiffPoly, d_check: i64, shape_only: bool) -> Result<Vec<DiffPoly>> {
    let work = h.ctx();
    let half = crate::ring::rat(1, 2);
    let mut quad = Vec::new();
    for mu in 1..=work.n_vars {
        for nu in 1..=work.n_vars {
            let t = DiffPoly::var(work, mu, 0).try_mul(&DiffPoly::var(work, nu, 0))?;
            quad.push(t.scale(work.eta_lower(mu, nu)).scale_rat(&half));
        }
    }
    let shape = variational_derivative(h.repr(), 1).try_sub(&sum(work, quad.iter()))?;
    let mut out = vec![reduce_by_parts(&shape.restrict_to_exact().without_constant()).1];
    if shape_only {
        return Ok(out);
    }

    let chains: Vec<Result<(Vec<DiffPoly>, DiffPoly)>> = (1..=work.n_vars)
        .into_par_iter()
        .map(|alpha| {
            let mut rems = Vec::new();
            let mut g = seed(work, alpha);
            let mut g11 = DiffPoly::zero(work);
            for d in 0..=d_check + 1 {
                let b = hamiltonian_bracket(&g, h)?.restrict_to_exact();
                let (prim, rem) = reduce_by_parts(&b);
                rems.push(rem);
                g = d_minus_one_inverse(&prim)?;
                if d == 1 {
                    g11 = g.clone();
                }
            }
            Ok((rems, g11))
        })
        .collect();
    for (idx, ch) in chains.into_iter().enumerate() {
        let (rems, g11) = ch?;
        out.extend(rems);
        if idx == 0 && work.is_quantum() {
            let diff = g11.try_sub(trial)?.restrict_to_exact().without_constant();
            out.push(reduce_by_parts(&diff).1);
        }
    }
    Ok(out)
}

/// Solves for the genus-`g` part of a DR-type generator.
pub fn solve_dr_type(problem: &AnsatzProblem) -> Result<AnsatzSolution> {
    let base = problem.known.ctx().clone();
    let nb = base.params.len();
    let top_genus = problem.genus + problem.lookahead;
    if problem.d_check < 1 && base.is_quantum() {
        return Err(Error::Invalid("quantum self-consistency needs d_check >= 1".into()));
    }
    let window = TruncationWindow { order_cutoff: Some(2 * top_genus), ..base.window };
    let work_base = base.with_window(window);

    let gauge = match &problem.gauge {
        Some(p) => scalar_table(&p.rehome(&work_base)?, nb),
        None => BTreeMap::new(),
    };
    let hints = match &problem.normalization {
        Some(p) => scalar_table(&p.rehome(&work_base)?, nb),
        None => BTreeMap::new(),
    };

    let mut basis: Vec<Monomial> = Vec::new();
    for g in problem.genus..=top_genus {
        basis.extend(monomial_basis(&work_base, g, problem.max_u_degree).into_iter().filter(|m| !gauge.contains_key(m)));
    }
    let n = basis.len();
    let names = unknown_names(&base, n);
    let work = work_base.with_extra_params(&names);

    let mut fixed = problem.known.repr().rehome(&work)?;
    for (m, s) in &gauge {
        let mono = m.clone().with_params(work.params.len());
        let t = s.to_poly(&work).try_mul(&DiffPoly::monomial(&work, mono, Gaussian::one()))?;
        fixed = fixed.try_add(&t)?;
    }
    let mut trial = fixed.clone();
    for (i, m) in basis.iter().enumerate() {
        let mut m = m.clone();
        m.params = vec![0; work.params.len()];
        m.params[nb + i] = 1;
        trial = trial.try_add(&DiffPoly::monomial(&work, m, Gaussian::one()))?;
    }
    let h = LocalFunctional::integrate(&trial);

    let polys = constraint_polys(&h, &trial, problem.d_check, problem.genus == 0)?;
    let mut rows: BTreeMap<Monomial, Row> = BTreeMap::new();
    for p in &polys {
        harvest(p, nb, n, &mut rows)?;
    }

    let mut rows: Vec<Row> = rows.into_values().filter(|r| !(r.b.is_zero() && r.a.iter().all(Scalar::is_zero))).collect();
    let equations = rows.len();

    // Reduced row echelon form. Pivots must be nonzero constants; columns are
    // revisited because eliminating one column can make another constant.
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; rows.len()];
    let mut pivoted = vec![false; n];
    loop {
        let pick = (0..n).filter(|&c| !pivoted[c]).find_map(|col| {
            (0..rows.len())
                .filter(|&r| !used[r])
                .find(|&r| rows[r].a[col].as_constant().is_some_and(|c| !c.is_zero()))
                .map(|r| (col, r))
        });
        let Some((col, r)) = pick else { break };
        used[r] = true;
        pivoted[col] = true;
        let inv = rows[r].a[col].as_constant().expect("constant pivot").inv().expect("nonzero pivot");
        let pivot_row = Row { a: rows[r].a.iter().map(|s| s.scale(&inv)).collect(), b: rows[r].b.scale(&inv) };
        for (j, row) in rows.iter_mut().enumerate() {
            if j == r || row.a[col].is_zero() {
                continue;
            }
            let f = row.a[col].clone();
            for k in 0..n {
                row.a[k] = row.a[k].sub_mul(&f, &pivot_row.a[k]);
            }
            row.b = row.b.sub_mul(&f, &pivot_row.b);
        }
        rows[r] = pivot_row;
        pivots.push((col, r));
    }
    if let Some(col) = (0..n).find(|&c| !pivoted[c] && (0..rows.len()).any(|r| !used[r] && !rows[r].a[c].is_zero())) {
        let shown = DiffPoly::monomial(&work_base, basis[col].clone(), Gaussian::one());
        return Err(Error::Invalid(format!("coefficient of {shown} needs division by a parameter polynomial")));
    }
    pivots.sort();
    let mut conditions: Vec<DiffPoly> = Vec::new();
    for r in (0..rows.len()).filter(|&r| !used[r] && !rows[r].b.is_zero()) {
        let cond = rows[r].b.to_poly(&base);
        if rows[r].b.as_constant().is_some() {
            return Err(Error::Inconsistent(format!("obstruction {cond} cannot be removed")));
        }
        if !conditions.iter().any(|c| c == &cond || c == &cond.scale(&Gaussian::from_int(-1))) {
            conditions.push(cond);
        }
    }

    let pivot_cols: BTreeSet<usize> = pivots.iter().map(|(c, _)| *c).collect();
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let new_names = fresh_params(&base, free.len());
    let out_ctx = work_base.with_extra_params(&new_names);
    let zero = Scalar::default();

    let mut particular = vec![zero.clone(); n];
    for &(col, r) in &pivots {
        particular[col] = rows[r].b.neg();
    }
    let mut kernel = Vec::with_capacity(free.len());
    for (&f, name) in free.iter().zip(&new_names) {
        let scale = hints.get(&basis[f]).and_then(Scalar::as_constant).filter(|c| !c.is_zero());
        let scale = scale.unwrap_or_else(Gaussian::one);
        let mut v = vec![zero.clone(); n];
        v[f] = Scalar::constant(nb, scale.clone());
        for &(col, r) in &pivots {
            v[col] = rows[r].a[f].neg().scale(&scale);
        }
        let coeffs = v.iter().map(|s| s.to_poly(&out_ctx)).collect();
        kernel.push(Direction { name: name.clone(), column: f, scale, coeffs });
    }

    let np = out_ctx.params.len();
    let mut fixed = problem.known.repr().rehome(&out_ctx)?;
    for (m, s) in &gauge {
        let mono = DiffPoly::monomial(&out_ctx, m.clone().with_params(np), Gaussian::one());
        fixed = fixed.try_add(&s.to_poly(&out_ctx).try_mul(&mono)?)?;
    }
    let solution = AnsatzSolution {
        fixed,
        particular: particular.iter().map(|s| s.to_poly(&out_ctx)).collect(),
        basis: basis.into_iter().map(|m| m.with_params(np)).collect(),
        ctx: out_ctx,
        kernel,
        conditions,
        unknowns: n,
        equations,
        d_check: problem.d_check,
        orders: (2 * problem.genus, 2 * top_genus),
    };
    if problem.genus == 0 {
        let point = solution.particular()?;
        let leftover = constraint_polys(&point, point.repr(), problem.d_check, false)?;
        if let Some(bad) = leftover.iter().find(|p| !p.is_zero()) {
            return Err(Error::Inconsistent(format!("genus-0 candidate fails the recursion: {bad}")));
        }
    }
    Ok(solution)
}

trait WithParams {
    fn with_params(self, n: usize) -> Monomial;
}

impl WithParams for Monomial {
    fn with_params(mut self, n: usize) -> Monomial {
        self.params = vec![0; n];
        self
    }
}

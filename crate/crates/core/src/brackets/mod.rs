//! Classical Poisson brackets and the quantum star-commutator.

pub mod ccoeff;
pub mod operator;

use std::collections::HashMap;

use num_bigint::BigInt;

pub use ccoeff::{c_row, polylog_product_coeffs, CCoeffTable};
pub use operator::{DiffOperator, HamiltonianOperator};

use crate::error::{Error, Result};
use crate::functionals::{variational_derivative, LocalFunctional};
use crate::ring::{factorial, DiffPoly, ExactDegree, Gaussian, Rational, RingContext};

fn ensure_classical(f: &DiffPoly) -> Result<()> {
    if f.terms().any(|(m, _)| m.hbar > 0) {
        Err(Error::ModeMismatch { expected: "classical" })
    } else {
        Ok(())
    }
}

fn ensure_quantum(ctx: &RingContext) -> Result<()> {
    if ctx.is_quantum() {
        Ok(())
    } else {
        Err(Error::ModeMismatch { expected: "quantum" })
    }
}

/// Exactness of a bracket built from `n ≤ n_max` contractions between `f`
/// and `g`, given how far each input is exact.
fn bracket_exactness(f: &DiffPoly, g: &DiffPoly, n_max: u32) -> ExactDegree {
    let (ef, eg) = (f.exact_u_degree(), g.exact_u_degree());
    if ef.is_none() && eg.is_none() {
        return None;
    }
    let big = i64::MAX / 4;
    let (ef, eg) = (ef.unwrap_or(big), eg.unwrap_or(big));
    let mf = f.min_u_degree().unwrap_or(0) as i64;
    let mg = g.min_u_degree().unwrap_or(0) as i64;
    let mut best = big;
    for n in 1..=n_max.max(1) as i64 {
        best = best.min(ef - n + (mg - n).max(1)).min(eg - n + (mf - n).max(0));
    }
    Some(best)
}

/// `{f, ḡ}_K = Σ ∂f/∂u^μ_s ∂_x^s (K^{μν} δḡ/δu^ν)`.
pub fn poisson_local(f: &DiffPoly, h: &LocalFunctional, k: &HamiltonianOperator) -> Result<DiffPoly> {
    ensure_classical(f)?;
    ensure_classical(h.repr())?;
    if f.ctx() != h.ctx() && **f.ctx() != **h.ctx() {
        return Err(Error::ContextMismatch);
    }
    let ctx = f.ctx();
    let grad = h.gradient();
    let w = k.apply(&grad);
    let mut out = DiffPoly::zero(ctx);
    for (mu, wm) in w.iter().enumerate() {
        let alpha = mu + 1;
        let top = f.variables().iter().filter(|(a, _)| *a as usize == alpha).map(|(_, s)| *s).max();
        let Some(top) = top else { continue };
        let mut ds = wm.clone();
        for s in 0..=top as usize {
            if s > 0 {
                ds = ds.dx();
            }
            let p = f.partial(alpha, s);
            if !p.is_zero() {
                out = &out + &(&p * &ds);
            }
        }
    }
    let exact = bracket_exactness(f, h.repr(), 1);
    Ok(out.with_exact_u_degree(exact))
}

/// `{h̄₁, h̄₂}_K` as a local functional.
pub fn poisson(h1: &LocalFunctional, h2: &LocalFunctional, k: &HamiltonianOperator) -> Result<LocalFunctional> {
    Ok(LocalFunctional::integrate(&poisson_local(h1.repr(), h2, k)?))
}

/// `{f, ḡ}` for the standard operator `η^{μν}∂_x`.
pub fn poisson_standard(f: &DiffPoly, h: &LocalFunctional) -> Result<DiffPoly> {
    poisson_local(f, h, &HamiltonianOperator::standard(f.ctx()))
}

type Letter = (u16, u16);

/// All nonzero `∂^n p / ∂u_{A}` for multisets `A` of size `n`, keyed by
/// the sorted multiset.
fn derivative_level(prev: &[(Vec<Letter>, DiffPoly)]) -> Vec<(Vec<Letter>, DiffPoly)> {
    let mut out = Vec::new();
    for (a, p) in prev {
        let floor = a.last().copied();
        for v in p.variables() {
            if floor.is_some_and(|fl| v < fl) {
                continue;
            }
            let q = p.partial(v.0 as usize, v.1 as usize);
            if !q.is_zero() {
                let mut key = a.clone();
                key.push(v);
                out.push((key, q));
            }
        }
    }
    out
}

/// Distinct permutations of a sorted slice, in lexicographic order.
fn distinct_permutations(sorted: &[Letter]) -> Vec<Vec<Letter>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn multiplicity_factorials(a: &[Letter]) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut i = 0;
    while i < a.len() {
        let mut j = i;
        while j < a.len() && a[j] == a[i] {
            j += 1;
        }
        acc *= factorial((j - i) as u64);
        i = j;
    }
    acc
}

/// `(1/ℏ)[f, ḡ]`, computed directly so the window applies after the
/// division by ℏ.
pub fn star_bracket_local(f: &DiffPoly, h: &LocalFunctional) -> Result<DiffPoly> {
    let ctx = f.ctx().clone();
    ensure_quantum(&ctx)?;
    if **h.ctx() != *ctx {
        return Err(Error::ContextMismatch);
    }
    let g = h.repr();
    let window = ctx.window;
    let n_cap = {
        let by_deg = f.max_u_degree().unwrap_or(0).min(g.max_u_degree().unwrap_or(0));
        match window.order_cutoff {
            Some(c) => by_deg.min(c / 2 + 1),
            None => by_deg,
        }
    };
    let mut f_level = vec![(Vec::new(), f.clone())];
    let mut g_level = vec![(Vec::new(), g.clone())];
    let mut out = DiffPoly::zero(&ctx);
    for n in 1..=n_cap {
        f_level = derivative_level(&f_level);
        g_level = derivative_level(&g_level);
        if f_level.is_empty() || g_level.is_empty() {
            break;
        }
        let hbar_order = 2 * (n - 1);
        let budget = window.order_cutoff.map(|c| c.saturating_sub(hbar_order));
        if window.order_cutoff.is_some_and(|c| c < hbar_order) {
            break;
        }
        let trim = |p: &DiffPoly| match budget {
            Some(b) => p.truncate_order(b),
            None => p.clone(),
        };
        let fs: Vec<(Vec<Letter>, DiffPoly)> =
            f_level.iter().map(|(a, p)| (a.clone(), trim(p))).filter(|(_, p)| !p.is_zero()).collect();
        let gs: Vec<(Vec<Letter>, DiffPoly)> =
            g_level.iter().map(|(b, p)| (b.clone(), trim(p))).filter(|(_, p)| !p.is_zero()).collect();
        let f_min_order = fs.iter().filter_map(|(_, p)| p.terms().map(|(m, _)| m.order()).min()).min();
        let Some(f_min_order) = f_min_order else { continue };
        let g_budget = budget.map(|b| b.saturating_sub(f_min_order));
        // (−i)^{n−1}, with the 1/n! absorbed into 1/Π m_A!
        let scalar = Gaussian::i_pow(-(n as i64 - 1));
        let mut dx_cache: HashMap<usize, Vec<DiffPoly>> = HashMap::new();
        for (a_key, fa) in &fs {
            let weight = Rational::new(BigInt::from(1), multiplicity_factorials(a_key));
            let mut t_a = DiffPoly::zero(&ctx);
            for (gi, (b_key, gb)) in gs.iter().enumerate() {
                let mut coeffs: Vec<Gaussian> = Vec::new();
                for perm in distinct_permutations(b_key) {
                    let mut eta = Gaussian::one();
                    let mut r_sum = 0u32;
                    let mut a_idx: Vec<u32> = Vec::with_capacity(n as usize);
                    for (x, y) in a_key.iter().zip(&perm) {
                        eta = &eta * ctx.eta_upper(x.0 as usize, y.0 as usize);
                        r_sum += y.1 as u32;
                        a_idx.push(x.1 as u32 + y.1 as u32 + 1);
                    }
                    if eta.is_zero() {
                        continue;
                    }
                    if r_sum % 2 == 1 {
                        eta = -eta;
                    }
                    let row = CCoeffTable::row(&a_idx);
                    if coeffs.len() < row.len() + 1 {
                        coeffs.resize(row.len() + 1, Gaussian::zero());
                    }
                    for (idx, c) in row.iter().enumerate() {
                        if !num_traits::Zero::is_zero(c) {
                            coeffs[idx + 1] += &eta.scale(c);
                        }
                    }
                }
                if coeffs.iter().all(Gaussian::is_zero) {
                    continue;
                }
                let derivs = dx_cache.entry(gi).or_insert_with(|| {
                    let base = match g_budget {
                        Some(b) => gb.truncate_order(b),
                        None => gb.clone(),
                    };
                    vec![base]
                });
                let top = coeffs.len() - 1;
                while derivs.len() <= top {
                    let next = derivs.last().expect("nonempty").dx();
                    derivs.push(next);
                }
                for (j, c) in coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        t_a = &t_a + &derivs[j].scale(c);
                    }
                }
            }
            if t_a.is_zero() {
                continue;
            }
            let t_a = t_a.mul_hbar(n - 1).scale(&scalar.scale(&weight));
            out = &out + &(fa * &t_a);
        }
    }
    let exact = bracket_exactness(f, g, n_cap.max(1));
    Ok(out.with_exact_u_degree(exact))
}

/// `[f, ḡ]` (including the leading ℏ), truncated to the ring's window.
pub fn star_commutator_local(f: &DiffPoly, h: &LocalFunctional) -> Result<DiffPoly> {
    Ok(star_bracket_local(f, h)?.mul_hbar(1))
}

/// `[h̄₁, h̄₂]` as a local functional.
pub fn star_commutator(h1: &LocalFunctional, h2: &LocalFunctional) -> Result<LocalFunctional> {
    Ok(LocalFunctional::integrate(&star_commutator_local(h1.repr(), h2)?))
}

/// `(1/ℏ)[h̄₁, h̄₂]` as a local functional.
pub fn star_bracket(h1: &LocalFunctional, h2: &LocalFunctional) -> Result<LocalFunctional> {
    Ok(LocalFunctional::integrate(&star_bracket_local(h1.repr(), h2)?))
}

/// The bracket appropriate to the ring: `(1/ℏ)[·,·]` when quantum, the
/// standard Poisson bracket when classical.
pub fn hamiltonian_bracket(f: &DiffPoly, h: &LocalFunctional) -> Result<DiffPoly> {
    if f.ctx().is_quantum() {
        star_bracket_local(f, h)
    } else {
        poisson_standard(f, h)
    }
}

/// `δḡ/δu^α` for every `α`, exposed for callers assembling their own flows.
pub fn gradient(h: &LocalFunctional) -> Vec<DiffPoly> {
    (1..=h.ctx().n_vars).map(|a| variational_derivative(h.repr(), a)).collect()
}

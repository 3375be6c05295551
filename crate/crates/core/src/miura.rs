//! Miura transformations: inversion, pushforward of operators and
//! functionals, and normal Miura transformations of a tau-structure.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde_json::{json, Map, Value};

use crate::brackets::{poisson_standard, DiffOperator, HamiltonianOperator};
use crate::error::{Error, Result};
use crate::functionals::LocalFunctional;
use crate::recursion::check::{residual, CheckReport};
use crate::recursion::{Level, TauStructure};
use crate::ring::json::FormulaJson;
use crate::ring::{invert_matrix, sum, DiffPoly, Gaussian, RingContext};

/// A change of coordinates `ũ^α = ũ^α(u; ε)`, kept through `eps_order`.
///
/// Old and new coordinates share one ring; which one a polynomial is
/// written in is up to the caller.
pub struct MiuraMap {
    ctx: Arc<RingContext>,
    images: Vec<DiffPoly>,
    eps_order: u32,
    inverse: Mutex<Option<Vec<DiffPoly>>>,
}

impl Clone for MiuraMap {
    fn clone(&self) -> Self {
        MiuraMap {
            ctx: self.ctx.clone(),
            images: self.images.clone(),
            eps_order: self.eps_order,
            inverse: Mutex::new(self.inverse.lock().expect("inverse cache").clone()),
        }
    }
}

impl std::fmt::Debug for MiuraMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MiuraMap").field("images", &self.images).field("eps_order", &self.eps_order).finish()
    }
}

impl PartialEq for MiuraMap {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images && self.eps_order == other.eps_order
    }
}

/// The `ε = 0`, `u`-linear part of the images as a numeric matrix.
fn linear_part(ctx: &RingContext, images: &[DiffPoly]) -> Result<Vec<Vec<Gaussian>>> {
    let n = ctx.n_vars;
    let mut a = vec![vec![Gaussian::zero(); n]; n];
    for (row, im) in images.iter().enumerate() {
        for (m, c) in im.terms() {
            if m.order() != 0 || m.u_degree() != 1 || m.derivative_count() != 0 {
                continue;
            }
            if m.params.iter().any(|e| *e != 0) {
                return Err(Error::Invalid("linear part of a Miura map must be numeric".into()));
            }
            let (alpha, _) = m.highest_var().expect("degree one");
            a[row][alpha as usize - 1] = c.clone();
        }
    }
    Ok(a)
}

impl MiuraMap {
    /// Checks invertibility at `ε = 0`: the images need an invertible
    /// constant linear part and no constant term.
    pub fn new(images: Vec<DiffPoly>, eps_order: u32) -> Result<Self> {
        let ctx = images.first().ok_or_else(|| Error::Invalid("empty Miura map".into()))?.ctx().clone();
        if images.len() != ctx.n_vars {
            return Err(Error::Invalid(format!("need {} images, got {}", ctx.n_vars, images.len())));
        }
        if images.iter().any(|im| **im.ctx() != *ctx) {
            return Err(Error::ContextMismatch);
        }
        if images.iter().any(|im| !im.constant_part().is_zero()) {
            return Err(Error::Invalid("Miura images must vanish at u = 0".into()));
        }
        invert_matrix(&linear_part(&ctx, &images)?).ok_or(Error::SingularAtEpsilonZero)?;
        let images = images.into_iter().map(|im| im.truncate_order(eps_order)).collect();
        Ok(MiuraMap { ctx, images, eps_order, inverse: Mutex::new(None) })
    }

    pub fn identity(ctx: &Arc<RingContext>, eps_order: u32) -> Self {
        let images = (1..=ctx.n_vars).map(|a| DiffPoly::var(ctx, a, 0)).collect();
        MiuraMap { ctx: ctx.clone(), images, eps_order, inverse: Mutex::new(None) }
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn images(&self) -> &[DiffPoly] {
        &self.images
    }

    pub fn eps_order(&self) -> u32 {
        self.eps_order
    }

    /// `u(ũ)` through `eps_order`, by fixed-point iteration
    /// `u ← A⁻¹(ũ − P(u))` where `A` is the linear part and `P` the rest.
    pub fn inverse_images(&self) -> Result<Vec<DiffPoly>> {
        if let Some(inv) = self.inverse.lock().expect("inverse cache").as_ref() {
            return Ok(inv.clone());
        }
        let ctx = &self.ctx;
        let n = ctx.n_vars;
        let a = linear_part(ctx, &self.images)?;
        let a_inv = invert_matrix(&a).ok_or(Error::SingularAtEpsilonZero)?;
        let vars: Vec<DiffPoly> = (1..=n).map(|b| DiffPoly::var(ctx, b, 0)).collect();
        let apply = |m: &[Vec<Gaussian>], v: &[DiffPoly]| -> Vec<DiffPoly> {
            m.iter()
                .map(|row| {
                    let parts: Vec<DiffPoly> = row.iter().zip(v).map(|(c, x)| x.scale(c)).collect();
                    sum(ctx, parts.iter())
                })
                .collect()
        };
        let lin = apply(&a, &vars);
        let pert: Vec<DiffPoly> = self.images.iter().zip(&lin).map(|(im, l)| im - l).collect();
        let nonlinear_at_zero = pert.iter().any(|p| p.terms().any(|(m, _)| m.order() == 0));
        let rounds = match (nonlinear_at_zero, ctx.window.u_degree_cutoff) {
            (false, _) => self.eps_order + 2,
            (true, Some(d)) => (self.eps_order + 1) * (d + 1) + 1,
            (true, None) => {
                return Err(Error::Invalid("a nonlinear epsilon = 0 part needs a u-degree cutoff".into()))
            }
        };
        let mut u = apply(&a_inv, &vars);
        for _ in 0..rounds {
            let pu: Vec<DiffPoly> = pert.iter().map(|p| p.substitute(&u)).collect::<Result<_>>()?;
            let rhs: Vec<DiffPoly> = vars.iter().zip(&pu).map(|(v, p)| v - p).collect();
            let next: Vec<DiffPoly> = apply(&a_inv, &rhs).iter().map(|f| f.truncate_order(self.eps_order)).collect();
            if next == u {
                break;
            }
            u = next;
        }
        *self.inverse.lock().expect("inverse cache") = Some(u.clone());
        Ok(u)
    }

    /// The inverse map `u = u(ũ)`.
    pub fn invert(&self) -> Result<MiuraMap> {
        let inv = self.inverse_images()?;
        let out = MiuraMap::new(inv, self.eps_order)?;
        *out.inverse.lock().expect("inverse cache") = Some(self.images.clone());
        Ok(out)
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &MiuraMap) -> Result<MiuraMap> {
        let images = self.images.iter().map(|im| im.substitute(&first.images)).collect::<Result<Vec<_>>>()?;
        MiuraMap::new(images, self.eps_order.min(first.eps_order))
    }

    /// Rewrites a polynomial in `u` in terms of `ũ`.
    pub fn pull_back(&self, f: &DiffPoly) -> Result<DiffPoly> {
        Ok(f.substitute(&self.inverse_images()?)?.truncate_order(self.eps_order))
    }

    /// `{"images": {α: formula}, "eps_order": n, "inverse": {α: formula} | null}`.
    pub fn to_json(&self) -> Value {
        let table = |v: &[DiffPoly]| -> Value {
            let map: Map<String, Value> = v
                .iter()
                .enumerate()
                .map(|(i, f)| ((i + 1).to_string(), serde_json::to_value(FormulaJson::from_poly(f)).expect("formula")))
                .collect();
            Value::Object(map)
        };
        let inv = self.inverse.lock().expect("inverse cache").as_deref().map(table);
        json!({ "images": table(&self.images), "eps_order": self.eps_order, "inverse": inv })
    }
}

/// `(L*)^α_μ = Σ_s ∂ũ^α/∂u^μ_s ∂_x^s`.
fn linearization(m: &MiuraMap, alpha: usize, mu: usize) -> DiffOperator {
    let im = &m.images[alpha - 1];
    let top = im.max_k().unwrap_or(0) as usize;
    DiffOperator::from_coeffs(&m.ctx, (0..=top).map(|s| (s, im.partial(mu, s))))
}

/// `K_ũ = L* ∘ K_u ∘ L`, coefficients rewritten in the new coordinates.
pub fn push_operator(k: &HamiltonianOperator, m: &MiuraMap) -> Result<HamiltonianOperator> {
    let n = m.ctx.n_vars;
    if k.size() != n {
        return Err(Error::ContextMismatch);
    }
    let lstar: Vec<Vec<DiffOperator>> =
        (1..=n).map(|a| (1..=n).map(|mu| linearization(m, a, mu)).collect()).collect();
    let inv = m.inverse_images()?;
    let mut rows = Vec::with_capacity(n);
    for alpha in 1..=n {
        let mut row = Vec::with_capacity(n);
        for beta in 1..=n {
            let mut acc = DiffOperator::zero(&m.ctx);
            for mu in 1..=n {
                for nu in 1..=n {
                    let l = lstar[beta - 1][nu - 1].adjoint();
                    let term = lstar[alpha - 1][mu - 1].compose(k.entry(mu, nu)).compose(&l);
                    acc = acc.add(&term);
                }
            }
            let acc = acc.map_coeffs(|c| Ok(c.substitute(&inv)?.truncate_order(m.eps_order)))?;
            row.push(acc.truncate_order(m.eps_order));
        }
        rows.push(row);
    }
    HamiltonianOperator::new(rows)
}

/// `∫h(u(ũ))`.
pub fn push_functional(h: &LocalFunctional, m: &MiuraMap) -> Result<LocalFunctional> {
    Ok(LocalFunctional::integrate(&m.pull_back(h.repr())?))
}

/// The result of a normal Miura transformation. The densities are written
/// in the old coordinates `u`.
#[derive(Debug)]
pub struct NormalMiura {
    pub map: MiuraMap,
    pub densities: BTreeMap<Level, DiffPoly>,
}

/// `ũ^α = u^α + η^{αμ}∂_x{F, h̄_{μ,0}}` and
/// `h̃_{β,q} = h_{β,q} + ∂_x{F, h̄_{β,q+1}}` for every `q` the
/// tau-structure supports.
pub fn normal_miura(f: &DiffPoly, tau: &TauStructure, eps_order: u32) -> Result<NormalMiura> {
    let ctx = tau.ctx().clone();
    if ctx.is_quantum() {
        return Err(Error::ModeMismatch { expected: "classical" });
    }
    if **f.ctx() != *ctx {
        return Err(Error::ContextMismatch);
    }
    let n = ctx.n_vars;
    let shift = |beta: usize, q: i64| -> Result<DiffPoly> {
        let hb = LocalFunctional::integrate(tau.h(beta, q)?);
        Ok(poisson_standard(f, &hb)?.dx())
    };
    let shifts: Vec<DiffPoly> = (1..=n).map(|mu| shift(mu, 0)).collect::<Result<_>>()?;
    let images: Vec<DiffPoly> = (1..=n)
        .map(|alpha| {
            let parts: Vec<DiffPoly> = (1..=n).map(|mu| shifts[mu - 1].scale(ctx.eta_upper(alpha, mu))).collect();
            &DiffPoly::var(&ctx, alpha, 0) + &sum(&ctx, parts.iter())
        })
        .collect();
    let mut densities = BTreeMap::new();
    for (&(beta, q), h) in tau.densities() {
        if q + 1 > tau.p_max() {
            continue;
        }
        densities.insert((beta, q), (h + &shift(beta, q + 1)?).truncate_order(eps_order));
    }
    Ok(NormalMiura { map: MiuraMap::new(images, eps_order)?, densities })
}

impl NormalMiura {
    /// Tau-symmetry `{h̃_{α,p−1}, h̃̄_{β,q}} = {h̃_{β,q−1}, h̃̄_{α,p}}` of the
    /// new densities. Brackets are computed in the old coordinates, where
    /// the operator is still standard.
    pub fn symmetry_check(&self) -> Result<CheckReport> {
        let top = self.densities.keys().map(|l| l.1).max().unwrap_or(-1);
        let n = self.map.ctx.n_vars;
        let h = |a: usize, p: i64| -> Result<&DiffPoly> {
            self.densities.get(&(a, p)).ok_or_else(|| Error::Invalid(format!("density ({a},{p}) missing")))
        };
        let flow = |a: usize, p: i64, b: usize, q: i64| -> Result<DiffPoly> {
            Ok(poisson_standard(h(a, p - 1)?, &LocalFunctional::integrate(h(b, q)?))?.truncate_order(self.map.eps_order))
        };
        let levels: Vec<Level> = (1..=n).flat_map(|a| (0..=top).map(move |p| (a, p))).collect();
        let mut report = CheckReport::default();
        for (i, &(a, p)) in levels.iter().enumerate() {
            for &(b, q) in &levels[i..] {
                let r = residual(&flow(a, p, b, q)?, &flow(b, q, a, p)?)?;
                report.push("normal Miura tau symmetry", format!("{a},{p};{b},{q}"), r);
            }
        }
        Ok(report)
    }

    /// `η^{αμ}h̃_{μ,−1} = ũ^α`: the new coordinates are normal.
    pub fn normality_check(&self) -> Result<CheckReport> {
        let ctx = &self.map.ctx;
        let mut report = CheckReport::default();
        for alpha in 1..=ctx.n_vars {
            let parts: Vec<DiffPoly> = (1..=ctx.n_vars)
                .map(|mu| {
                    let h = self.densities.get(&(mu, -1)).ok_or_else(|| Error::Invalid("h_{mu,-1} missing".into()))?;
                    Ok(h.scale(ctx.eta_upper(alpha, mu)))
                })
                .collect::<Result<_>>()?;
            let r = residual(&sum(ctx, parts.iter()), &self.map.images[alpha - 1])?;
            report.push("normal coordinates", alpha.to_string(), r);
        }
        Ok(report)
    }

    /// The new densities written in the new coordinates.
    pub fn densities_in_new_coordinates(&self) -> Result<BTreeMap<Level, DiffPoly>> {
        self.densities.iter().map(|(l, h)| Ok((*l, self.map.pull_back(h)?))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::{generate, preset, tau_structure, PresetOptions};
    use crate::ring::pretty::parse_pretty;
    use crate::ring::{Mode, TruncationWindow};

    fn scalar(order: u32) -> Arc<RingContext> {
        RingContext::scalar(Mode::Classical, &["c"], TruncationWindow::order(order))
    }

    fn p(text: &str, c: &Arc<RingContext>) -> DiffPoly {
        parse_pretty(text, c).unwrap()
    }

    #[test]
    fn invert_examples() {
        let c = scalar(8);
        let id = MiuraMap::identity(&c, 8);
        assert_eq!(id.inverse_images().unwrap(), vec![p("u", &c)]);

        let m = MiuraMap::new(vec![p("u + c eps^2 u_2", &c)], 4).unwrap();
        assert_eq!(m.inverse_images().unwrap(), vec![p("u + (-1) c eps^2 u_2 + c^2 eps^4 u_4", &c)]);

        let m = MiuraMap::new(vec![p("(2) u", &c)], 4).unwrap();
        assert_eq!(m.inverse_images().unwrap(), vec![p("u/2", &c)]);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let c = scalar(6);
        let m = MiuraMap::new(vec![p("u + eps^2 u u_2 + (1/3) eps^2 u_1^2 + eps^4 u_1 u_3", &c)], 6).unwrap();
        let inv = m.invert().unwrap();
        assert_eq!(m.after(&inv).unwrap().images(), &[p("u", &c)]);
        assert_eq!(inv.after(&m).unwrap().images(), &[p("u", &c)]);
    }

    #[test]
    fn singular_maps_are_rejected() {
        let c = scalar(4);
        assert!(matches!(MiuraMap::new(vec![p("eps^2 u_2", &c)], 4), Err(Error::SingularAtEpsilonZero)));
        assert!(matches!(MiuraMap::new(vec![p("u^2", &c)], 4), Err(Error::SingularAtEpsilonZero)));
    }

    #[test]
    fn push_operator_examples() {
        let c = scalar(4);
        let k = HamiltonianOperator::standard(&c);
        assert_eq!(push_operator(&k, &MiuraMap::identity(&c, 4)).unwrap(), k);
        let scaled = push_operator(&k, &MiuraMap::new(vec![p("(3) u", &c)], 4).unwrap()).unwrap();
        assert_eq!(scaled, HamiltonianOperator::scalar(DiffOperator::dx_power(&c, 1, Gaussian::from_int(9))));
    }

    #[test]
    fn push_functional_scaling() {
        let c = scalar(4);
        let m = MiuraMap::new(vec![p("(2) u", &c)], 4).unwrap();
        let h = LocalFunctional::integrate(&p("u^2/2", &c));
        assert_eq!(push_functional(&h, &m).unwrap(), LocalFunctional::integrate(&p("u^2/8", &c)));
        let id = MiuraMap::identity(&c, 4);
        assert_eq!(push_functional(&h, &id).unwrap(), h);
    }

    #[test]
    fn kdv_normal_miura() {
        let opts = PresetOptions { d_max: 3, window: TruncationWindow::order(6), ..PresetOptions::default() };
        let h = generate(&preset("kdv", &opts).unwrap()).unwrap();
        let tau = tau_structure(&h).unwrap();
        let c = h.ctx().clone();
        let zero = normal_miura(&DiffPoly::zero(&c), &tau, 6).unwrap();
        assert_eq!(zero.map.images(), &[p("u", &c)]);
        let nm = normal_miura(&p("(1/5) eps^2 u", &c), &tau, 6).unwrap();
        assert_eq!(nm.map.images(), &[p("u + (1/5) eps^2 u_2", &c)]);
        assert!(nm.symmetry_check().unwrap().passed());
        assert!(nm.normality_check().unwrap().passed());
    }

    #[test]
    fn json_has_images_and_inverse() {
        let c = scalar(4);
        let m = MiuraMap::new(vec![p("u + eps^2 u_2", &c)], 4).unwrap();
        assert!(m.to_json()["inverse"].is_null());
        m.inverse_images().unwrap();
        let v = m.to_json();
        assert_eq!(v["eps_order"], 4);
        assert!(v["inverse"]["1"].is_object());
    }
}

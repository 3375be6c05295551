//! Tau-structure `h_{α,p} = δḡ_{α,p+1}/δu¹`, the two-point functions `Ω`
//! and normal coordinates.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use super::check::{residual, CheckEntry, CheckReport};
use super::{Hierarchy, Level};
use crate::brackets::poisson_standard;
use crate::error::{Error, Result};
use crate::functionals::{d_inverse, dx_inverse, variational_derivative, LocalFunctional};
use crate::ring::{sum, DiffPoly, RingContext};

pub struct TauStructure {
    ctx: Arc<RingContext>,
    h: BTreeMap<Level, DiffPoly>,
    omega: Mutex<HashMap<(Level, Level), DiffPoly>>,
}

impl std::fmt::Debug for TauStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TauStructure").field("h", &self.h).finish()
    }
}

/// Tau densities for a classical hierarchy, for `p = −1..d_max−1`.
pub fn tau_structure(h: &Hierarchy) -> Result<TauStructure> {
    if h.ctx().is_quantum() {
        return Err(Error::ModeMismatch { expected: "classical" });
    }
    let mut table = BTreeMap::new();
    for alpha in 1..=h.n_vars() {
        for p in -1..h.d_max() {
            let g = h.density(alpha, p + 1)?;
            table.insert((alpha, p), variational_derivative(g, 1));
        }
    }
    Ok(TauStructure { ctx: h.ctx().clone(), h: table, omega: Mutex::new(HashMap::new()) })
}

impl TauStructure {
    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.ctx
    }

    pub fn densities(&self) -> &BTreeMap<Level, DiffPoly> {
        &self.h
    }

    pub fn h(&self, alpha: usize, p: i64) -> Result<&DiffPoly> {
        self.h.get(&(alpha, p)).ok_or_else(|| Error::Invalid(format!("tau density ({alpha},{p}) not available")))
    }

    fn h_bar(&self, alpha: usize, p: i64) -> Result<LocalFunctional> {
        Ok(LocalFunctional::integrate(self.h(alpha, p)?))
    }

    /// Largest `p` with `h_{α,p}` available.
    pub fn p_max(&self) -> i64 {
        self.h.keys().map(|l| l.1).max().unwrap_or(-1)
    }

    /// `∂h_{α,p−1}/∂t^β_q = {h_{α,p−1}, h̄_{β,q}}`.
    pub fn flow(&self, alpha: usize, p: i64, beta: usize, q: i64) -> Result<DiffPoly> {
        poisson_standard(self.h(alpha, p - 1)?, &self.h_bar(beta, q)?)
    }

    /// `Ω_{α,p;β,q}`: the primitive of `{h_{α,p−1}, h̄_{β,q}}` vanishing at `u = 0`.
    pub fn omega(&self, alpha: usize, p: i64, beta: usize, q: i64) -> Result<DiffPoly> {
        if p < 0 || q < 0 {
            return Err(Error::Invalid("omega needs p, q >= 0".into()));
        }
        let key = ((alpha, p), (beta, q));
        if let Some(w) = self.omega.lock().expect("omega memo").get(&key) {
            return Ok(w.clone());
        }
        let w = dx_inverse(&self.flow(alpha, p, beta, q)?.restrict_to_exact())?;
        self.omega.lock().expect("omega memo").insert(key, w.clone());
        Ok(w)
    }

    /// `{h_{α,p−1}, h̄_{β,q}} = {h_{β,q−1}, h̄_{α,p}}` for all available
    /// `(α,p) < (β,q)` with `p, q ≥ 0`.
    pub fn symmetry_check(&self) -> Result<CheckReport> {
        let n = self.ctx.n_vars;
        let top = self.p_max();
        let levels: Vec<Level> = (1..=n).flat_map(|a| (0..=top).map(move |p| (a, p))).collect();
        let mut jobs = Vec::new();
        for (i, x) in levels.iter().enumerate() {
            for y in &levels[i..] {
                jobs.push((*x, *y));
            }
        }
        let entries: Vec<Result<CheckEntry>> = jobs
            .par_iter()
            .map(|&((a, p), (b, q))| {
                let lhs = self.flow(a, p, b, q)?;
                let rhs = self.flow(b, q, a, p)?;
                Ok(CheckEntry {
                    check: "tau symmetry".into(),
                    indices: format!("{a},{p};{b},{q}"),
                    residual: residual(&lhs, &rhs)?,
                })
            })
            .collect();
        entries.into_iter().collect()
    }
}

/// `ũ^α = η^{αμ} h_{μ,−1}`.
pub fn normal_coordinates(h: &Hierarchy) -> Result<Vec<DiffPoly>> {
    let tau = tau_structure(h)?;
    let ctx = h.ctx();
    (1..=ctx.n_vars)
        .map(|alpha| {
            let parts: Vec<DiffPoly> = (1..=ctx.n_vars)
                .map(|mu| Ok(tau.h(mu, -1)?.scale(ctx.eta_upper(alpha, mu))))
                .collect::<Result<_>>()?;
            Ok(sum(ctx, parts.iter()))
        })
        .collect()
}

/// `ũ^α = D^{-1} η^{αμ} ∂/∂u^μ (δḡ_{1,1}/δu¹)`, read off the generator
/// without running the recursion.
pub fn normal_coordinates_from_generator(g: &LocalFunctional) -> Result<Vec<DiffPoly>> {
    let ctx = g.ctx();
    let w = g.variational_derivative(1).set_hbar_zero();
    (1..=ctx.n_vars)
        .map(|alpha| {
            let parts: Vec<DiffPoly> =
                (1..=ctx.n_vars).map(|mu| w.partial(mu, 0).scale(ctx.eta_upper(alpha, mu))).collect();
            d_inverse(&sum(ctx, parts.iter()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::{generate, preset, PresetOptions};
    use crate::ring::{Mode, TruncationWindow};

    fn kdv(d_max: i64, order: u32) -> Hierarchy {
        let opts = PresetOptions { mode: Mode::Classical, d_max, window: TruncationWindow::order(order), ..PresetOptions::default() };
        generate(&preset("kdv", &opts).unwrap()).unwrap()
    }

    fn parse(text: &str, ctx: &Arc<RingContext>) -> DiffPoly {
        crate::ring::pretty::parse_pretty(text, ctx).unwrap()
    }

    #[test]
    fn kdv_tau_densities() {
        let h = kdv(3, 6);
        let t = tau_structure(&h).unwrap();
        let c = h.ctx().clone();
        assert_eq!(*t.h(1, -1).unwrap(), parse("u", &c));
        assert_eq!(*t.h(1, 0).unwrap(), parse("u^2/2 + (1/12) eps^2 u_2", &c));
        assert!(t.symmetry_check().unwrap().passed());
    }

    #[test]
    fn tau_symmetry_instance() {
        let h = kdv(3, 4);
        let t = tau_structure(&h).unwrap();
        assert_eq!(t.flow(1, 1, 1, 2).unwrap(), t.flow(1, 2, 1, 1).unwrap());
    }

    #[test]
    fn omega_examples() {
        let h = kdv(3, 6);
        let t = tau_structure(&h).unwrap();
        let c = h.ctx().clone();
        assert_eq!(t.omega(1, 0, 1, 0).unwrap(), parse("u", &c));
        assert_eq!(t.omega(1, 1, 1, 0).unwrap(), *t.h(1, 0).unwrap());
        assert_eq!(t.omega(1, 1, 1, 2).unwrap(), t.omega(1, 2, 1, 1).unwrap());
        let w = t.omega(1, 2, 1, 1).unwrap();
        assert_eq!(w.dx(), t.flow(1, 2, 1, 1).unwrap());
        assert!(w.constant_part().is_zero());
    }

    #[test]
    fn quantum_rejected() {
        let opts = PresetOptions { mode: Mode::Quantum, d_max: 1, ..PresetOptions::default() };
        let h = generate(&preset("kdv", &opts).unwrap()).unwrap();
        assert!(matches!(tau_structure(&h), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn kdv_is_normal() {
        let h = kdv(1, 6);
        let c = h.ctx().clone();
        assert_eq!(normal_coordinates(&h).unwrap(), vec![parse("u", &c)]);
        let from_gen = normal_coordinates_from_generator(&h.spec().generator).unwrap();
        assert_eq!(from_gen, vec![parse("u", &c)]);
    }
}

//! Brute-force brackets on trigonometric-polynomial loops.
//!
//! Substituting `u^α_j = Σ_{|k|≤K} (ik)^j p^α_k e^{ikx}` turns differential
//! polynomials into polynomials in the Fourier modes `p^α_k`, where the
//! Poisson bracket and the star product act directly. Only used by tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::ring::poly::Monomial;
use crate::ring::{DiffPoly, Gaussian, Rational, RingContext};

/// One mode letter `(p^alpha_k)^pow`.
pub type ModeLetter = (u16, i32, u16);

/// Monomial key: ε, ℏ and parameter powers plus sorted mode letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FKey {
    pub eps: u32,
    pub hbar: u32,
    pub params: Vec<u32>,
    pub modes: Vec<ModeLetter>,
}

impl FKey {
    fn scalar(m: &Monomial) -> Self {
        FKey { eps: m.eps, hbar: m.hbar, params: m.params.clone(), modes: Vec::new() }
    }

    /// Total frequency `Σ k·pow`.
    pub fn frequency(&self) -> i64 {
        self.modes.iter().map(|(_, k, p)| *k as i64 * *p as i64).sum()
    }

    pub fn max_mode(&self) -> i32 {
        self.modes.iter().map(|(_, k, _)| k.abs()).max().unwrap_or(0)
    }

    fn mul(&self, other: &FKey) -> FKey {
        let mut modes = self.modes.clone();
        for &(a, k, p) in &other.modes {
            match modes.binary_search_by(|m| (m.0, m.1).cmp(&(a, k))) {
                Ok(i) => modes[i].2 += p,
                Err(i) => modes.insert(i, (a, k, p)),
            }
        }
        FKey {
            eps: self.eps + other.eps,
            hbar: self.hbar + other.hbar,
            params: self.params.iter().zip(&other.params).map(|(a, b)| a + b).collect(),
            modes,
        }
    }

    fn power(&self, a: u16, k: i32) -> u16 {
        self.modes.iter().find(|m| m.0 == a && m.1 == k).map_or(0, |m| m.2)
    }

    fn lower(&self, a: u16, k: i32, by: u16) -> FKey {
        let mut out = self.clone();
        if let Some(i) = out.modes.iter().position(|m| m.0 == a && m.1 == k) {
            out.modes[i].2 -= by;
            if out.modes[i].2 == 0 {
                out.modes.remove(i);
            }
        }
        out
    }
}

/// A polynomial in Fourier modes with `|k| ≤ k_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FourierPoly {
    pub k_max: i32,
    pub n_params: usize,
    pub terms: BTreeMap<FKey, Gaussian>,
}

fn add_into(map: &mut BTreeMap<FKey, Gaussian>, key: FKey, c: Gaussian) {
    if c.is_zero() {
        return;
    }
    let entry = map.entry(key);
    match entry {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += &c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

impl FourierPoly {
    pub fn zero(k_max: i32, n_params: usize) -> Self {
        FourierPoly { k_max, n_params, terms: BTreeMap::new() }
    }

    /// The single mode `p^alpha_k`.
    pub fn mode(k_max: i32, n_params: usize, alpha: u16, k: i32) -> Self {
        let mut out = Self::zero(k_max, n_params);
        let key = FKey { eps: 0, hbar: 0, params: vec![0; n_params], modes: vec![(alpha, k, 1)] };
        out.terms.insert(key, Gaussian::one());
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FourierPoly) -> FourierPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FourierPoly) -> FourierPoly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            add_into(&mut out.terms, k.clone(), -c);
        }
        out
    }

    pub fn mul(&self, other: &FourierPoly) -> FourierPoly {
        let mut out = Self::zero(self.k_max, self.n_params);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                add_into(&mut out.terms, ka.mul(kb), ca * cb);
            }
        }
        out
    }

    /// Terms of total frequency `freq`.
    pub fn frequency_part(&self, freq: i64) -> FourierPoly {
        self.filter(|k| k.frequency() == freq)
    }

    /// Terms whose modes all satisfy `|k| ≤ bound`.
    pub fn restrict_modes(&self, bound: i32) -> FourierPoly {
        let mut out = self.filter(|k| k.max_mode() <= bound);
        out.k_max = bound;
        out
    }

    /// Terms with `eps + 2·hbar ≤ n`.
    pub fn truncate_order(&self, n: u32) -> FourierPoly {
        self.filter(|k| k.eps + 2 * k.hbar <= n)
    }

    pub fn filter<F: Fn(&FKey) -> bool>(&self, keep: F) -> FourierPoly {
        FourierPoly {
            k_max: self.k_max,
            n_params: self.n_params,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, c)| (k.clone(), c.clone())).collect(),
        }
    }

    /// `∂/∂p^alpha_k`.
    pub fn partial(&self, alpha: u16, k: i32) -> FourierPoly {
        let mut out = Self::zero(self.k_max, self.n_params);
        for (key, c) in &self.terms {
            let p = key.power(alpha, k);
            if p > 0 {
                add_into(&mut out.terms, key.lower(alpha, k, 1), c.scale(&Rational::from_integer(BigInt::from(p))));
            }
        }
        out
    }

    fn mul_hbar(&self) -> FourierPoly {
        let mut out = Self::zero(self.k_max, self.n_params);
        for (k, c) in &self.terms {
            let mut k2 = k.clone();
            k2.hbar += 1;
            out.terms.insert(k2, c.clone());
        }
        out
    }

    fn scale(&self, c: &Gaussian) -> FourierPoly {
        let mut out = Self::zero(self.k_max, self.n_params);
        for (k, v) in &self.terms {
            add_into(&mut out.terms, k.clone(), v * c);
        }
        out
    }

    /// Mode letters occurring, as `(alpha, k)`.
    fn letters(&self) -> Vec<(u16, i32)> {
        let mut v: Vec<(u16, i32)> = self.terms.keys().flat_map(|k| k.modes.iter().map(|m| (m.0, m.1))).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Expands `f` over the modes `|k| ≤ k_max`.
pub fn to_fourier(f: &DiffPoly, k_max: i32) -> FourierPoly {
    let ctx = f.ctx();
    let np = ctx.params.len();
    let mut cache: BTreeMap<(u16, u16), FourierPoly> = BTreeMap::new();
    let mut out = FourierPoly::zero(k_max, np);
    for (m, c) in f.terms() {
        let mut acc = FourierPoly::zero(k_max, np);
        acc.terms.insert(FKey::scalar(m), c.clone());
        for fac in &m.factors {
            let letter = cache
                .entry((fac.alpha, fac.k))
                .or_insert_with(|| {
                    let mut s = FourierPoly::zero(k_max, np);
                    for k in -k_max..=k_max {
                        // (ik)^j
                        let ik = Gaussian::new(Rational::from_integer(BigInt::from(0)), Rational::from_integer(BigInt::from(k)));
                        let w = ik.pow(fac.k as u32);
                        if !w.is_zero() {
                            s = s.add(&FourierPoly::mode(k_max, np, fac.alpha, k).scale(&w));
                        }
                    }
                    s
                })
                .clone();
            for _ in 0..fac.pow {
                acc = acc.mul(&letter);
            }
        }
        out = out.add(&acc);
    }
    out
}

/// `{F, G} = Σ ∂F/∂p^α_k · ik η^{αβ} · ∂G/∂p^β_{−k}`.
pub fn poisson_fourier(ctx: &Arc<RingContext>, f: &FourierPoly, g: &FourierPoly) -> FourierPoly {
    let mut out = FourierPoly::zero(f.k_max, f.n_params);
    for (a, k) in f.letters() {
        if k == 0 {
            continue;
        }
        let df = f.partial(a, k);
        for b in 1..=ctx.n_vars as u16 {
            let eta = ctx.eta_upper(a as usize, b as usize);
            if eta.is_zero() {
                continue;
            }
            let dg = g.partial(b, -k);
            if dg.is_zero() {
                continue;
            }
            let w = &Gaussian::new(Rational::from_integer(BigInt::from(0)), Rational::from_integer(BigInt::from(k))) * eta;
            out = out.add(&df.mul(&dg).scale(&w));
        }
    }
    out
}

/// `f ⋆ g = f exp(Σ_{k>0} iℏk η^{αβ} ∂⃖/∂p^α_k ∂⃗/∂p^β_{−k}) g`.
pub fn star_product(ctx: &Arc<RingContext>, f: &FourierPoly, g: &FourierPoly) -> FourierPoly {
    // the exponent splits into commuting pieces, one per (k, α, β)
    let mut pairs: Vec<(FourierPoly, FourierPoly)> = vec![(f.clone(), g.clone())];
    for k in 1..=f.k_max {
        for a in 1..=ctx.n_vars as u16 {
            for b in 1..=ctx.n_vars as u16 {
                let eta = ctx.eta_upper(a as usize, b as usize);
                if eta.is_zero() {
                    continue;
                }
                let w = &Gaussian::new(Rational::from_integer(BigInt::from(0)), Rational::from_integer(BigInt::from(k))) * eta;
                let mut next = Vec::new();
                for (pf, pg) in &pairs {
                    let (mut df, mut dg) = (pf.clone(), pg.clone());
                    let mut coef = Gaussian::one();
                    let mut m = 0u32;
                    while !df.is_zero() && !dg.is_zero() {
                        let mut lhs = df.scale(&coef);
                        for _ in 0..m {
                            lhs = lhs.mul_hbar();
                        }
                        next.push((lhs, dg.clone()));
                        m += 1;
                        df = df.partial(a, k);
                        dg = dg.partial(b, -k);
                        coef = (&coef * &w).scale(&Rational::new(BigInt::from(1), BigInt::from(m)));
                    }
                }
                pairs = next;
            }
        }
    }
    let mut out = FourierPoly::zero(f.k_max, f.n_params);
    for (pf, pg) in pairs {
        out = out.add(&pf.mul(&pg));
    }
    out
}

/// `f ⋆ g − g ⋆ f`.
pub fn star_commutator_fourier(ctx: &Arc<RingContext>, f: &FourierPoly, g: &FourierPoly) -> Result<FourierPoly> {
    if !ctx.is_quantum() {
        return Err(Error::ModeMismatch { expected: "quantum" });
    }
    Ok(star_product(ctx, f, g).sub(&star_product(ctx, g, f)))
}

/// Mode bound that resolves every contraction feeding output modes `≤ k_out`
/// when the second argument has u-degree at most `g_degree`.
pub fn resolving_bound(k_out: i32, g_degree: u32) -> i32 {
    k_out * (g_degree.saturating_sub(1).max(1) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{rat, Mode, TruncationWindow};

    fn ctx() -> Arc<RingContext> {
        RingContext::scalar(Mode::Quantum, &[], TruncationWindow::default())
    }

    fn ig(n: i64) -> Gaussian {
        Gaussian::new(rat(0, 1), rat(n, 1))
    }

    #[test]
    fn to_fourier_examples() {
        let c = ctx();
        let f = to_fourier(&DiffPoly::var(&c, 1, 0), 1);
        assert_eq!(f.terms.len(), 3);
        let d = to_fourier(&DiffPoly::var(&c, 1, 1), 1);
        let expect = FourierPoly::mode(1, 0, 1, -1).scale(&ig(-1)).add(&FourierPoly::mode(1, 0, 1, 1).scale(&ig(1)));
        assert_eq!(d, expect);
        let sq = to_fourier(&DiffPoly::var(&c, 1, 0).pow(2).scale_rat(&rat(1, 2)), 1).frequency_part(0);
        let p = |k| FourierPoly::mode(1, 0, 1, k);
        let expect = p(0).mul(&p(0)).scale(&Gaussian::from_ratio(1, 2)).add(&p(1).mul(&p(-1)));
        assert_eq!(sq, expect);
    }

    #[test]
    fn mode_brackets() {
        let c = ctx();
        let p = |k| FourierPoly::mode(1, 0, 1, k);
        let one = poisson_fourier(&c, &p(1), &p(-1));
        assert_eq!(one.terms.len(), 1);
        assert_eq!(one.terms.values().next().unwrap(), &ig(1));
        assert!(poisson_fourier(&c, &p(0), &p(1).mul(&p(-1))).is_zero());
        let s = star_commutator_fourier(&c, &p(1), &p(-1)).unwrap();
        let (k, v) = s.terms.iter().next().unwrap();
        assert_eq!((k.hbar, v.clone()), (1, ig(1)));
        let f = p(1).mul(&p(-1)).add(&p(0));
        assert!(star_commutator_fourier(&c, &f, &f).unwrap().is_zero());
        assert!(star_commutator_fourier(&c, &p(0), &f).unwrap().is_zero());
    }
}

//! Generating Hamiltonians of the worked examples.
//!
//! Series generators (ILW, Toda) are materialized up to the window supplied
//! in [`PresetOptions`]; the others are finite and only truncated by it.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Signed;

use super::{ConstantsPolicy, HierarchySpec, Level};
use crate::error::{Error, Result};
use crate::functionals::LocalFunctional;
use crate::ring::pretty::parse_pretty;
use crate::ring::{
    bernoulli_numbers, factorial, DiffPoly, Gaussian, Mode, Rational, RingContext, TruncationWindow,
};

#[derive(Clone, Debug)]
pub struct PresetOptions {
    pub mode: Mode,
    pub d_max: i64,
    pub window: TruncationWindow,
    /// Use the tabulated constants of `G_d` where the preset has them.
    pub paper_constants: bool,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { mode: Mode::Classical, d_max: 2, window: TruncationWindow::default(), paper_constants: false }
    }
}

/// Names accepted by [`preset`], each with a one-line description.
pub fn preset_names() -> &'static [(&'static str, &'static str)] {
    &[
        ("kdv", "Korteweg-de Vries, trivial theory"),
        ("kdv-dispersionless", "KdV at eps = 0"),
        ("ilw", "intermediate long wave, parameter mu (needs an order cutoff)"),
        ("toda", "extended Toda, parameter q (needs order and u-degree cutoffs)"),
        ("spin3", "Witten 3-spin theory"),
        ("spin4", "Witten 4-spin theory"),
        ("spin5", "Witten 5-spin theory (classical only)"),
        ("rank1", "general rank-one family, parameters s1 s2 s3, through genus 3"),
    ]
}

pub fn preset(name: &str, opts: &PresetOptions) -> Result<HierarchySpec> {
    let (generator, constants) = match name {
        "kdv" => kdv(opts, true)?,
        "kdv-dispersionless" => kdv(opts, false)?,
        "ilw" => (ilw(opts)?, ConstantsPolicy::Zero),
        "toda" => (toda(opts)?, ConstantsPolicy::Zero),
        "spin3" => (spin(3, opts)?, ConstantsPolicy::Zero),
        "spin4" => (spin(4, opts)?, ConstantsPolicy::Zero),
        "spin5" => (spin(5, opts)?, ConstantsPolicy::Zero),
        "rank1" => (rank1(opts)?, ConstantsPolicy::Zero),
        other => return Err(Error::Invalid(format!("unknown preset `{other}`"))),
    };
    Ok(HierarchySpec::new(name, generator, opts.d_max).with_constants(constants))
}

/// Parses a formula written with ℏ-terms; a classical ring keeps only the
/// ℏ-free part.
fn parse_in(text: &str, ctx: &Arc<RingContext>) -> Result<DiffPoly> {
    if ctx.is_quantum() {
        return parse_pretty(text, ctx);
    }
    parse_pretty(text, &ctx.with_mode(Mode::Quantum))?.set_hbar_zero().rehome(ctx)
}

fn functional(text: &str, ctx: &Arc<RingContext>) -> Result<LocalFunctional> {
    Ok(LocalFunctional::integrate(&parse_in(text, ctx)?))
}

fn scalar(opts: &PresetOptions, params: &[&str]) -> Arc<RingContext> {
    RingContext::scalar(opts.mode, params, opts.window)
}

fn constants_table(ctx: &Arc<RingContext>, entries: &[(Level, &str)]) -> Result<ConstantsPolicy> {
    let mut table = BTreeMap::new();
    for (level, text) in entries {
        table.insert(*level, parse_in(text, ctx)?);
    }
    Ok(ConstantsPolicy::Table(table))
}

fn kdv(opts: &PresetOptions, dispersive: bool) -> Result<(LocalFunctional, ConstantsPolicy)> {
    let ctx = scalar(opts, &[]);
    let body = if dispersive { "u^3/6 + (1/24) eps^2 u u_2 + (-1/24) i hbar u" } else { "u^3/6 + (-1/24) i hbar u" };
    let g = functional(body, &ctx)?;
    let constants = if !opts.paper_constants {
        ConstantsPolicy::Zero
    } else if dispersive {
        constants_table(
            &ctx,
            &[
                ((1, 0), "(-1/24) i hbar"),
                ((1, 1), "(-1/2880) i eps^2 hbar"),
                ((1, 2), "(-1/120960) i eps^4 hbar + (-7/5760) hbar^2"),
            ],
        )?
    } else {
        constants_table(&ctx, &[((1, 0), "(-1/24) i hbar"), ((1, 1), "0"), ((1, 2), "(-7/5760) hbar^2")])?
    };
    Ok((g, constants))
}

fn need_order(opts: &PresetOptions, name: &str) -> Result<u32> {
    opts.window.order_cutoff.ok_or_else(|| Error::Invalid(format!("preset `{name}` needs an order cutoff")))
}

fn rat_big(n: BigInt, d: BigInt) -> Rational {
    Rational::new(n, d)
}

/// `|B_{2g}| / (2·(2g)!)` for `g = 1..=g_max`, indexed by `g − 1`.
fn ilw_coefficients(g_max: usize) -> Vec<Rational> {
    let b = bernoulli_numbers(2 * g_max);
    (1..=g_max)
        .map(|g| b[2 * g].abs() / rat_big(BigInt::from(2) * factorial(2 * g as u64), BigInt::from(1)))
        .collect()
}

fn ilw(opts: &PresetOptions) -> Result<LocalFunctional> {
    let order = need_order(opts, "ilw")?;
    let ctx = scalar(opts, &["mu"]);
    let g_max = (order / 2) as usize;
    let u = |k| DiffPoly::var(&ctx, 1, k);
    let mu = |n| DiffPoly::param(&ctx, "mu", n);
    let mut acc = parse_in("u^3/6 + (-1/24) i hbar u", &ctx)?;
    for (idx, c) in ilw_coefficients(g_max).iter().enumerate() {
        let g = idx + 1;
        let uu = &u(0) * &u(2 * g);
        let classical = (&mu(g as u32 - 1)? * &uu).mul_eps(2 * g as u32).scale_rat(c);
        let quantum =
            (&mu(g as u32)? * &uu).mul_eps(2 * g as u32 - 2).mul_hbar(1).scale(&Gaussian::new(Rational::from_integer(0.into()), -c));
        acc = &(&acc + &classical) + &quantum;
    }
    Ok(LocalFunctional::integrate(&acc))
}

/// `Σ_k c_k ε^{2k} ∂_x^{2k} f` up to the ring's order cutoff.
fn even_series(f: &DiffPoly, order: u32, coeff: impl Fn(usize) -> Rational) -> DiffPoly {
    let ctx = f.ctx().clone();
    let mut acc = DiffPoly::zero(&ctx);
    for k in 0..=(order / 2) as usize {
        acc = &acc + &f.dx_n(2 * k).mul_eps(2 * k as u32).scale_rat(&coeff(k));
    }
    acc
}

fn toda(opts: &PresetOptions) -> Result<LocalFunctional> {
    let order = need_order(opts, "toda")?;
    let udeg = opts
        .window
        .u_degree_cutoff
        .ok_or_else(|| Error::Invalid("preset `toda` needs a u-degree cutoff".into()))?;
    let g = |n: i64| Gaussian::from_int(n);
    let ctx = RingContext::new(vec![vec![g(0), g(1)], vec![g(1), g(0)]], vec!["q".into()], opts.mode, opts.window)?;
    let one = |k| DiffPoly::var(&ctx, 1, k);
    let w = DiffPoly::var(&ctx, 2, 0);
    let q = DiffPoly::param(&ctx, "q", 1)?;
    let pow4 = |k: usize| BigInt::from(4).pow(k as u32);
    // S(ε∂)u^ω and cosh(ε∂/2)u^ω
    let s_w = even_series(&w, order, |k| rat_big(1.into(), pow4(k) * factorial(2 * k as u64 + 1)));
    let c_w = even_series(&w, order, |k| rat_big(1.into(), pow4(k) * factorial(2 * k as u64)));
    let mut exp = DiffPoly::from_int(&ctx, 1);
    let mut power = DiffPoly::from_int(&ctx, 1);
    for n in 1..=udeg as u64 {
        power = (&power * &s_w).scale_rat(&rat_big(1.into(), n.into()));
        exp = &exp + &power;
    }
    let b = bernoulli_numbers(order as usize + 2);
    let mut acc = (&one(0).pow(2) * &w).scale_rat(&rat_big(1.into(), 2.into()));
    acc = &acc + &(&q * &(&(&c_w - &DiffPoly::from_int(&ctx, 2)) * &exp));
    acc = &acc + &(&q * &w);
    acc = &acc + &one(0).mul_hbar(1).scale(&Gaussian::new(Rational::from_integer(0.into()), rat_big((-1).into(), 12.into())));
    for gg in 1..=(order / 2) as usize {
        let c = &b[2 * gg] / Rational::from_integer(factorial(2 * gg as u64));
        acc = &acc + &(&one(0) * &one(2 * gg)).mul_eps(2 * gg as u32).scale_rat(&c);
        let wq = DiffPoly::var(&ctx, 2, 2 * gg);
        acc = &acc
            + &(&wq * &one(0))
                .mul_eps(2 * gg as u32 - 2)
                .mul_hbar(1)
                .scale(&Gaussian::new(Rational::from_integer(0.into()), c));
    }
    Ok(LocalFunctional::integrate(&acc))
}

fn antidiagonal(r: usize, opts: &PresetOptions) -> Result<Arc<RingContext>> {
    let n = r - 1;
    let eta =
        (1..=n).map(|a| (1..=n).map(|b| Gaussian::from_int(i64::from(a + b == r))).collect()).collect();
    RingContext::new(eta, vec![], opts.mode, opts.window)
}

const SPIN3: &str = "u1^2 u2/2 + u2^4/36 + (-1/12) eps^2 u1_1^2 + (-1/24) eps^2 u2 u2_1^2 + (1/432) eps^4 u2_2^2 \
    + (-1/12) i hbar u1";

const SPIN4: &str = "u1 u2^2/2 + u1^2 u3/2 + u2^2 u3^2/8 + u3^5/320 \
    + (-1/8) eps^2 u1_1^2 + (-1/16) eps^2 u3 u2_1^2 + (-1/32) eps^2 u3 u1_1 u3_1 + (3/64) eps^2 u2^2 u3_2 \
    + (1/192) eps^2 u3^3 u3_2 \
    + (1/160) eps^4 u2_2^2 + (3/640) eps^4 u1_2 u3_2 + (5/4096) eps^4 u3^2 u3_4 + (-1/8192) eps^6 u3_3^2 \
    + (1/96) i hbar u3_1^2 + (-1/96) i hbar u3^2 + (-1/8) i hbar u1 + (-1/1280) i eps^2 hbar u3";

const SPIN5: &str = "u1^2 u4/2 + u1 u2 u3 + u2^3/6 + u3^4/30 + u2 u3^2 u4/5 + u2^2 u4^2/10 + u3^2 u4^3/50 \
    + u4^6/3750 \
    + (1/6) eps^2 u1 u1_2 + (3/20) eps^2 u2 u3 u3_2 + (1/10) eps^2 u2 u3_1^2 + (1/20) eps^2 u3 u4 u1_2 \
    + (1/10) eps^2 u2 u4 u2_2 + (1/40) eps^2 u4 u2_1^2 + (1/50) eps^2 u2 u4 u4_1^2 + (1/75) eps^2 u2 u4^2 u4_2 \
    + (1/75) eps^2 u3^2 u4 u4_2 + (1/50) eps^2 u3 u4^2 u3_2 + (1/1200) eps^2 u4^4 u4_2 \
    + (7/600) eps^4 u2 u2_4 + (11/900) eps^4 u1 u3_4 + (7/1200) eps^4 u2 u4 u4_4 + (17/1200) eps^4 u2 u4_1 u4_3 \
    + (71/7200) eps^4 u2 u4_2^2 + (31/3600) eps^4 u3 u4 u3_4 + (7/450) eps^4 u4 u3_1 u3_3 \
    + (91/7200) eps^4 u4 u3_2^2 + (13/12000) eps^4 u4^2 u4_2^2 + (3/4000) eps^4 u4 u4_1^2 u4_2 \
    + (53/108000) eps^6 u3 u3_6 + (11/18000) eps^6 u2 u4_6 + (1397/6480000) eps^6 u4 u4_3^2 \
    + (617/1620000) eps^6 u4 u4_2 u4_4 + (107/10800000) eps^8 u4 u4_8";

fn spin(r: usize, opts: &PresetOptions) -> Result<LocalFunctional> {
    if r == 5 && opts.mode == Mode::Quantum {
        return Err(Error::ModeMismatch { expected: "classical" });
    }
    let ctx = antidiagonal(r, opts)?;
    let text = match r {
        3 => SPIN3,
        4 => SPIN4,
        5 => SPIN5,
        _ => return Err(Error::Invalid(format!("no {r}-spin preset"))),
    };
    functional(text, &ctx)
}

const RANK1: &str = "u^3/6 \
    + (-1/24) eps^2 u_1^2 + (-1/2) i s1 hbar u_1^2 + (-1/24) i hbar u \
    + (-1/120) s1 eps^4 u_2^2 + (-1/10) i s1^2 eps^2 hbar u_2^2 + (2/5) s1^3 hbar^2 u_2^2 + (1/12) s2 hbar^2 u_2^2 \
    + (-1/360) s1^3 eps^6 u_2^3 + (-1/1728) s2 eps^6 u_2^3 \
    + (-1/30) i s1^4 eps^4 hbar u_2^3 + (-1/144) i s1 s2 eps^4 hbar u_2^3 \
    + (4/25) s1^5 eps^2 hbar^2 u_2^3 + (1/12) s1^2 s2 eps^2 hbar^2 u_2^3 + (7/5760) s3 eps^2 hbar^2 u_2^3 \
    + (8/25) i s1^6 hbar^3 u_2^3 + (1/3) i s1^3 s2 hbar^3 u_2^3 + (7/480) i s1 s3 hbar^3 u_2^3 \
    + (-5/72) i s2^2 hbar^3 u_2^3 \
    + (-1/420) s1^2 eps^6 u_3^2 + (-4/105) i s1^3 eps^4 hbar u_3^2 + (-1/504) i s2 eps^4 hbar u_3^2 \
    + (8/35) s1^4 eps^2 hbar^2 u_3^2 + (1/21) s1 s2 eps^2 hbar^2 u_3^2 \
    + (96/175) i s1^5 hbar^3 u_3^2 + (2/7) i s1^2 s2 hbar^3 u_3^2 + (1/240) i s3 hbar^3 u_3^2";

fn rank1(opts: &PresetOptions) -> Result<LocalFunctional> {
    let ctx = scalar(opts, &["s1", "s2", "s3"]);
    functional(RANK1, &ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::rat;

    fn opts(mode: Mode, window: TruncationWindow) -> PresetOptions {
        PresetOptions { mode, window, ..PresetOptions::default() }
    }

    #[test]
    fn kdv_quantum_generator() {
        let s = preset("kdv", &opts(Mode::Quantum, TruncationWindow::default())).unwrap();
        let c = s.ring.clone();
        let expect = parse_pretty("u^3/6 + (-1/24) eps^2 u_1^2 + (-1/24) i hbar u", &c).unwrap();
        assert_eq!(s.generator, LocalFunctional::integrate(&expect));
    }

    #[test]
    fn ilw_leading_dispersion() {
        let s = preset("ilw", &opts(Mode::Quantum, TruncationWindow::order(6))).unwrap();
        let c = s.ring.clone();
        let g = s.generator.repr();
        // ε²/24·u·u₂ ≡ −ε²/24·u₁²
        let m = parse_pretty("eps^2 u_1^2", &c).unwrap();
        let (mono, _) = m.terms().next().unwrap();
        assert_eq!(g.coeff_of(mono), Gaussian::real(rat(-1, 24)));
        assert_eq!(ilw_coefficients(3), vec![rat(1, 24), rat(1, 1440), rat(1, 60480)]);
    }

    #[test]
    fn ilw_and_toda_need_windows() {
        assert!(preset("ilw", &PresetOptions::default()).is_err());
        assert!(preset("toda", &opts(Mode::Classical, TruncationWindow::order(4))).is_err());
        assert!(preset("nope", &PresetOptions::default()).is_err());
    }

    #[test]
    fn spin3_classical_part() {
        let s = preset("spin3", &opts(Mode::Classical, TruncationWindow::order(0))).unwrap();
        let c = s.ring.clone();
        assert_eq!(s.generator, LocalFunctional::integrate(&parse_pretty("u1^2 u2/2 + u2^4/36", &c).unwrap()));
    }

    /// `|u^{a}| = r − a + 1`, `|ε| = 1`, `|ℏ| = r + 2`, total `2r + 2`.
    fn spin_weight(r: usize, m: &crate::ring::Monomial) -> usize {
        let letters: usize = m.factors.iter().map(|f| (r + 1 - f.alpha as usize) * f.pow as usize).sum();
        letters + m.eps as usize + (r + 2) * m.hbar as usize
    }

    #[test]
    fn spin_generators_are_homogeneous() {
        for (r, mode) in [(3, Mode::Quantum), (4, Mode::Quantum), (5, Mode::Classical)] {
            let s = preset(&format!("spin{r}"), &opts(mode, TruncationWindow::default())).unwrap();
            let g = parse_in(
                match r {
                    3 => SPIN3,
                    4 => SPIN4,
                    _ => SPIN5,
                },
                &s.ring,
            )
            .unwrap();
            for (m, _) in g.terms() {
                assert_eq!(spin_weight(r, m), 2 * r + 2, "{r}-spin term {m:?}");
            }
        }
    }

    #[test]
    fn spin5_is_classical_only() {
        assert!(preset("spin5", &opts(Mode::Quantum, TruncationWindow::default())).is_err());
    }

    #[test]
    fn rank1_reduces_to_kdv() {
        let s = preset("rank1", &opts(Mode::Quantum, TruncationWindow::default())).unwrap();
        let mut g = s.generator.repr().clone();
        for p in ["s1", "s2", "s3"] {
            g = g.set_param_zero(p);
        }
        let k = preset("kdv", &opts(Mode::Quantum, TruncationWindow::default())).unwrap();
        let c = k.ring.clone();
        assert_eq!(LocalFunctional::integrate(&g.rehome(&c).unwrap()), k.generator);
    }

    #[test]
    fn toda_generator_low_order() {
        let s = preset("toda", &opts(Mode::Classical, TruncationWindow::order(0).with_u_degree(3))).unwrap();
        let c = s.ring.clone();
        // q(u^ω − 2)e^{u^ω} + q u^ω at ε = 0, cubic truncation, constant dropped
        let expect = parse_pretty("u1^2 u2/2 + (1/6) q u2^3", &c).unwrap();
        assert_eq!(s.generator, LocalFunctional::integrate(&expect));
    }
}

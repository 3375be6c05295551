//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use drh::ring::{rat, Factor, Monomial};
use drh::{DiffPoly, Gaussian, Mode, RingContext, TruncationWindow};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn scalar(mode: Mode) -> Arc<RingContext> {
    RingContext::scalar(mode, &[], TruncationWindow::unbounded())
}

pub fn two_field(mode: Mode, antidiagonal: bool) -> Arc<RingContext> {
    let g = Gaussian::from_int;
    let eta = if antidiagonal {
        vec![vec![g(0), g(1)], vec![g(1), g(0)]]
    } else {
        vec![vec![g(1), g(0)], vec![g(0), g(2)]]
    };
    RingContext::new(eta, vec![], mode, TruncationWindow::unbounded()).unwrap()
}

pub fn u(ctx: &Arc<RingContext>, k: usize) -> DiffPoly {
    DiffPoly::var(ctx, 1, k)
}

pub fn r(n: i64, d: i64) -> Gaussian {
    Gaussian::from_ratio(n, d)
}

pub fn ri(n: i64, d: i64) -> Gaussian {
    Gaussian::new(rat(0, 1), rat(n, d))
}

/// A random polynomial with u-degree in `1..=max_deg` and derivative orders
/// up to `max_k`.
pub fn random_poly(rng: &mut ChaCha8Rng, ctx: &Arc<RingContext>, terms: usize, max_deg: u32, max_k: u16) -> DiffPoly {
    let mut out = Vec::new();
    for _ in 0..terms {
        let deg = rng.gen_range(1..=max_deg);
        let mut letters: Vec<(usize, usize, usize)> = Vec::new();
        for _ in 0..deg {
            letters.push((rng.gen_range(1..=ctx.n_vars), rng.gen_range(0..=max_k) as usize, 1));
        }
        let eps = rng.gen_range(0..=2);
        let hbar = if ctx.is_quantum() { rng.gen_range(0..=1) } else { 0 };
        let m = Monomial::from_factors(ctx.params.len(), eps, hbar, &letters);
        let re = rat(rng.gen_range(-5..=5), rng.gen_range(1..=4));
        let im = if ctx.is_quantum() && rng.gen_bool(0.3) { rat(rng.gen_range(-3..=3), rng.gen_range(1..=3)) } else { rat(0, 1) };
        out.push((m, Gaussian::new(re, im)));
    }
    let p = DiffPoly::from_terms(ctx, out);
    let _ = Factor::new(1, 0, 1);
    p
}

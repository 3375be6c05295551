//! Coefficients of products of negative-index polylogarithms.
//!
//! `Π_i Li_{−d_i}(z) = Σ_j C̃_j Li_{−j}(z)` with `Li_{−d}(z) = Σ_{k≥0} k^d z^k`.
//! The signed, parity-filtered `C_j` feed the quantum commutator.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::ring::Rational;

/// `C̃_1 … C̃_m` for `m = n − 1 + Σ d_i`.
pub fn polylog_product_coeffs(d: &[u32]) -> Vec<Rational> {
    assert!(!d.is_empty() && d.iter().all(|&x| x >= 1), "polylog indices must be positive");
    let m = d.len() - 1 + d.iter().map(|&x| x as usize).sum::<usize>();
    // convolution values at k = 0..=m
    let pow = |k: usize, e: u32| BigInt::from(k).pow(e);
    let mut seq: Vec<BigInt> = (0..=m).map(|k| pow(k, d[0])).collect();
    for &di in &d[1..] {
        let next: Vec<BigInt> = (0..=m).map(|k| (0..=k).map(|l| &seq[l] * pow(k - l, di)).sum()).collect();
        seq = next;
    }
    let coeffs = interpolate(&seq);
    assert!(coeffs[0].is_zero(), "constant term of a polylog product must vanish");
    coeffs[1..].to_vec()
}

/// Monomial-basis coefficients of the degree-`len−1` polynomial through
/// `(k, values[k])`, via forward differences and falling factorials.
fn interpolate(values: &[BigInt]) -> Vec<Rational> {
    let m = values.len();
    let mut diffs = values.to_vec();
    let mut newton: Vec<BigInt> = Vec::with_capacity(m);
    for _ in 0..m {
        newton.push(diffs[0].clone());
        diffs = diffs.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    let mut out = vec![Rational::zero(); m];
    // falling factorial k(k−1)…(k−j+1) in the monomial basis
    let mut falling: Vec<BigInt> = vec![BigInt::one()];
    let mut fact = BigInt::one();
    for (j, nj) in newton.iter().enumerate() {
        if j > 0 {
            fact *= BigInt::from(j);
            let mut next = vec![BigInt::zero(); falling.len() + 1];
            for (i, c) in falling.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * BigInt::from(j - 1);
            }
            falling = next;
        }
        if nj.is_zero() {
            continue;
        }
        for (i, c) in falling.iter().enumerate() {
            out[i] += Rational::new(c * nj, fact.clone());
        }
    }
    out
}

/// `C_1 … C_m` with the parity rule and sign `(−1)^{(m−j)/2}` applied.
pub fn c_row(a: &[u32]) -> Vec<Rational> {
    let tilde = polylog_product_coeffs(a);
    let m = tilde.len() as i64;
    tilde
        .into_iter()
        .enumerate()
        .map(|(idx, c)| {
            let j = idx as i64 + 1;
            if (m - j) % 2 != 0 {
                Rational::zero()
            } else if ((m - j) / 2) % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

type Table = RwLock<HashMap<Vec<u32>, Arc<Vec<Rational>>>>;

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Memoized `C` rows, shared process-wide. Keys are sorted since rows are
/// symmetric in their indices.
pub struct CCoeffTable;

impl CCoeffTable {
    pub fn row(a: &[u32]) -> Arc<Vec<Rational>> {
        let mut key = a.to_vec();
        key.sort_unstable();
        if let Some(r) = table().read().expect("table lock").get(&key) {
            return r.clone();
        }
        let row = Arc::new(c_row(&key));
        table().write().expect("table lock").entry(key).or_insert(row).clone()
    }

    /// Number of memoized rows.
    pub fn len() -> usize {
        table().read().expect("table lock").len()
    }

    /// A row as a JSON array of `"p/q"` strings.
    pub fn row_json(a: &[u32]) -> String {
        let row = Self::row(a);
        let items: Vec<String> = row.iter().map(crate::ring::coeff::rational_to_string).collect();
        serde_json::to_string(&items).expect("strings serialize")
    }
}

/// Exact check that a row reproduces the convolution at a few extra points.
pub fn check_row(d: &[u32], extra: usize) -> bool {
    let tilde = polylog_product_coeffs(d);
    let m = tilde.len();
    for k in 0..=(m + extra) {
        let mut lhs = Rational::zero();
        for (idx, c) in tilde.iter().enumerate() {
            lhs += c * Rational::from_integer(BigInt::from(k).pow(idx as u32 + 1));
        }
        // brute-force convolution over compositions of k
        let mut total = BigInt::zero();
        let mut stack = vec![(0usize, 0usize, BigInt::one())];
        while let Some((i, used, acc)) = stack.pop() {
            if i + 1 == d.len() {
                total += acc * BigInt::from(k - used).pow(d[i]);
                continue;
            }
            for ki in 0..=(k - used) {
                stack.push((i + 1, used + ki, &acc * BigInt::from(ki).pow(d[i])));
            }
        }
        if lhs != Rational::from_integer(total) {
            return false;
        }
    }
    true
}

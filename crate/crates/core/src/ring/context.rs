use std::sync::Arc;

use super::coeff::Gaussian;
use crate::error::{Error, Result};

/// Whether ℏ is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classical,
    Quantum,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Classical => "classical",
            Mode::Quantum => "quantum",
        }
    }
}

/// Which monomials a ring retains.
///
/// `order_cutoff` bounds `eps_pow + 2·hbar_pow` (so genus `g` corresponds to
/// an order cutoff of `2g`); `u_degree_cutoff` bounds the number of u-letters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TruncationWindow {
    pub order_cutoff: Option<u32>,
    pub u_degree_cutoff: Option<u32>,
}

impl TruncationWindow {
    pub fn unbounded() -> Self {
        TruncationWindow::default()
    }

    /// Keep every term up to genus `g`, i.e. `eps_pow + 2·hbar_pow ≤ 2g`.
    pub fn genus(g: u32) -> Self {
        TruncationWindow { order_cutoff: Some(2 * g), u_degree_cutoff: None }
    }

    pub fn order(n: u32) -> Self {
        TruncationWindow { order_cutoff: Some(n), u_degree_cutoff: None }
    }

    pub fn with_u_degree(mut self, d: u32) -> Self {
        self.u_degree_cutoff = Some(d);
        self
    }

    #[inline]
    pub fn admits(&self, order: u32, u_degree: u32) -> bool {
        self.order_cutoff.is_none_or(|c| order <= c) && self.u_degree_cutoff.is_none_or(|c| u_degree <= c)
    }
}

/// The ring `Â` (or `Â^ℏ`): number of fields, metric, declared parameters,
/// mode and truncation window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingContext {
    pub n_vars: usize,
    pub var_names: Vec<String>,
    /// `η_{αβ}`, symmetric and invertible.
    pub eta: Vec<Vec<Gaussian>>,
    /// `η^{αβ}`, the inverse of `eta`.
    pub eta_inv: Vec<Vec<Gaussian>>,
    pub params: Vec<String>,
    pub mode: Mode,
    pub window: TruncationWindow,
}

impl RingContext {
    pub fn new(
        eta: Vec<Vec<Gaussian>>,
        params: Vec<String>,
        mode: Mode,
        window: TruncationWindow,
    ) -> Result<Arc<Self>> {
        let n = eta.len();
        if n == 0 {
            return Err(Error::Invalid("ring needs at least one variable".into()));
        }
        let names = if n == 1 { vec!["u".to_string()] } else { (1..=n).map(|a| format!("u{a}")).collect() };
        Self::with_names(eta, names, params, mode, window)
    }

    pub fn with_names(
        eta: Vec<Vec<Gaussian>>,
        var_names: Vec<String>,
        params: Vec<String>,
        mode: Mode,
        window: TruncationWindow,
    ) -> Result<Arc<Self>> {
        let n = eta.len();
        if eta.iter().any(|row| row.len() != n) {
            return Err(Error::Invalid("eta must be square".into()));
        }
        if var_names.len() != n {
            return Err(Error::Invalid("one name per variable required".into()));
        }
        if (0..n).any(|a| (0..n).any(|b| eta[a][b] != eta[b][a])) {
            return Err(Error::Invalid("eta must be symmetric".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &params {
            let reserved = matches!(p.as_str(), "i" | "eps" | "hbar") || p.starts_with('u');
            let word = p.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                && p.chars().all(|c| c.is_ascii_alphanumeric());
            if !seen.insert(p) || reserved || !word {
                return Err(Error::Invalid(format!("bad or duplicate parameter name `{p}`")));
            }
        }
        let eta_inv = invert_matrix(&eta).ok_or_else(|| Error::Invalid("eta is singular".into()))?;
        Ok(Arc::new(RingContext { n_vars: n, var_names, eta, eta_inv, params, mode, window }))
    }

    /// One field, `η = 1`.
    pub fn scalar(mode: Mode, params: &[&str], window: TruncationWindow) -> Arc<Self> {
        Self::new(vec![vec![Gaussian::one()]], params.iter().map(|s| s.to_string()).collect(), mode, window)
            .expect("scalar ring is valid")
    }

    /// Same ring with another window.
    pub fn with_window(&self, window: TruncationWindow) -> Arc<Self> {
        let mut c = self.clone();
        c.window = window;
        Arc::new(c)
    }

    pub fn with_mode(&self, mode: Mode) -> Arc<Self> {
        let mut c = self.clone();
        c.mode = mode;
        Arc::new(c)
    }

    /// Same ring with extra parameters appended (existing ones keep their slot).
    pub fn with_extra_params(&self, extra: &[String]) -> Arc<Self> {
        let mut c = self.clone();
        for p in extra {
            if !c.params.contains(p) {
                c.params.push(p.clone());
            }
        }
        Arc::new(c)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }

    pub fn is_quantum(&self) -> bool {
        self.mode == Mode::Quantum
    }

    /// `η_{αβ}` with 1-based indices.
    pub fn eta_lower(&self, a: usize, b: usize) -> &Gaussian {
        &self.eta[a - 1][b - 1]
    }

    /// `η^{αβ}` with 1-based indices.
    pub fn eta_upper(&self, a: usize, b: usize) -> &Gaussian {
        &self.eta_inv[a - 1][b - 1]
    }

    /// Rings are compatible when everything but the window agrees.
    pub fn same_algebra(&self, other: &RingContext) -> bool {
        self.n_vars == other.n_vars && self.eta == other.eta && self.params == other.params && self.mode == other.mode
    }
}

/// Gauss–Jordan inverse over the Gaussian rationals.
pub fn invert_matrix(m: &[Vec<Gaussian>]) -> Option<Vec<Vec<Gaussian>>> {
    let n = m.len();
    let mut a: Vec<Vec<Gaussian>> = m.to_vec();
    let mut inv: Vec<Vec<Gaussian>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Gaussian::one() } else { Gaussian::zero() }).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].inv()?;
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let t = &f * &a[col][j];
                    a[r][j] -= &t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= &t;
                }
            }
        }
    }
    Some(inv)
}

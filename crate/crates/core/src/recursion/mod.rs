//! The DR recursion `∂_x(D−1)G_{α,p+1} = (1/ℏ)[G_{α,p}, H̄]` (Poisson bracket
//! in the classical case), seeded by `G_{α,−1} = η_{αμ}u^μ`, together with
//! the identities a generated hierarchy must satisfy.

pub(crate) mod check;
pub mod presets;
mod tau;

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

pub use check::{CheckEntry, CheckReport};
pub use presets::{preset, preset_names, PresetOptions};
pub use tau::{normal_coordinates, normal_coordinates_from_generator, tau_structure, TauStructure};

use crate::brackets::hamiltonian_bracket;
use crate::error::{Error, Result};
use crate::functionals::{d_minus_one_inverse, dx_inverse, LocalFunctional};
use crate::ring::json::{FormulaJson, RingJson};
use crate::ring::{Coefficient, DiffPoly, ExactDegree, Mode, RingContext};
use check::residual;

/// `(α, d)` with `α` 1-based and `d ≥ −1`.
pub type Level = (usize, i64);

fn level_key((a, d): Level) -> String {
    format!("{a},{d}")
}

/// Inverse of the `"alpha,d"` keys used in reports.
pub fn parse_level(key: &str) -> Result<Level> {
    let bad = || Error::Invalid(format!("level `{key}` is not of the form alpha,d"));
    let (a, d) = key.split_once(',').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let d: i64 = d.trim().parse().map_err(|_| bad())?;
    if a == 0 || d < -1 {
        return Err(bad());
    }
    Ok((a, d))
}

/// How the u-independent constants of `G_{α,d}`, invisible to the
/// recursion, are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ConstantsPolicy {
    #[default]
    Zero,
    /// Known constants; each entry must be free of `u`.
    Table(BTreeMap<Level, DiffPoly>),
}

impl ConstantsPolicy {
    fn lookup(&self, level: Level) -> Option<&DiffPoly> {
        match self {
            ConstantsPolicy::Zero => None,
            ConstantsPolicy::Table(t) => t.get(&level),
        }
    }

    /// Whether the constant at `level` is pinned down rather than defaulted.
    pub fn knows(&self, level: Level) -> bool {
        level.1 < 0 || self.lookup(level).is_some()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstantsPolicy::Zero => "zero",
            ConstantsPolicy::Table(_) => "table",
        }
    }
}

/// Everything needed to generate a hierarchy.
#[derive(Clone, Debug)]
pub struct HierarchySpec {
    pub name: String,
    pub ring: Arc<RingContext>,
    /// `Ḡ_{1,1}` (or `ḡ_{1,1}`).
    pub generator: LocalFunctional,
    pub d_max: i64,
    pub constants: ConstantsPolicy,
}

impl HierarchySpec {
    pub fn new(name: &str, generator: LocalFunctional, d_max: i64) -> Self {
        HierarchySpec {
            name: name.to_string(),
            ring: generator.ctx().clone(),
            generator,
            d_max,
            constants: ConstantsPolicy::Zero,
        }
    }

    pub fn with_constants(mut self, constants: ConstantsPolicy) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_d_max(mut self, d_max: i64) -> Self {
        self.d_max = d_max;
        self
    }

    pub fn mode(&self) -> Mode {
        self.ring.mode
    }

    pub fn validate(&self) -> Result<()> {
        if !self.ring.same_algebra(self.generator.ctx()) || self.ring.window != self.generator.ctx().window {
            return Err(Error::ContextMismatch);
        }
        if self.d_max < -1 {
            return Err(Error::Invalid(format!("d_max must be at least -1, got {}", self.d_max)));
        }
        let quantum = self.ring.is_quantum();
        for (m, _) in self.generator.repr().terms() {
            let d = m.deg();
            if d > 0 || (!quantum && d != 0) {
                let shown = DiffPoly::monomial(&self.ring, m.clone(), crate::ring::Gaussian::one());
                return Err(Error::Invalid(format!("generator term {shown} has degree {d}")));
            }
        }
        if let ConstantsPolicy::Table(t) = &self.constants {
            for (&(a, d), c) in t {
                if a == 0 || a > self.ring.n_vars || d < 0 {
                    return Err(Error::Invalid(format!("constant for level ({a},{d}) out of range")));
                }
                if c.terms().any(|(m, _)| !m.is_u_free()) {
                    return Err(Error::Invalid(format!("constant for level ({a},{d}) depends on u")));
                }
            }
        }
        Ok(())
    }

    /// Reads the shape written by [`HierarchySpec::to_json`]; `d_max`,
    /// `constants_policy` and `constants` may be omitted.
    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| Error::Invalid(format!("spec: missing field `{k}`")));
        let ring: RingJson = serde_json::from_value(field("ring")?.clone())
            .map_err(|e| Error::Invalid(format!("spec.ring: {e}")))?;
        let ctx = ring.to_ctx()?;
        let generator = crate::ring::json::from_value(field("generator")?.clone())?.to_poly(&ctx)?;
        let name = v.get("name").and_then(Value::as_str).unwrap_or("input");
        let d_max = match v.get("d_max") {
            None => 2,
            Some(d) => d.as_i64().ok_or_else(|| Error::Invalid("spec.d_max: expected an integer".into()))?,
        };
        let mut spec = HierarchySpec::new(name, LocalFunctional::integrate(&generator), d_max);
        let table = v.get("constants").and_then(Value::as_object).filter(|t| !t.is_empty());
        if let Some(table) = table {
            let mut out = BTreeMap::new();
            for (k, f) in table {
                out.insert(parse_level(k)?, crate::ring::json::from_value(f.clone())?.to_poly(&ctx)?);
            }
            spec = spec.with_constants(ConstantsPolicy::Table(out));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Value {
        let constants: BTreeMap<String, FormulaJson> = match &self.constants {
            ConstantsPolicy::Zero => BTreeMap::new(),
            ConstantsPolicy::Table(t) => t.iter().map(|(l, c)| (level_key(*l), FormulaJson::from_poly(c))).collect(),
        };
        json!({
            "name": self.name,
            "ring": RingJson::from_ctx(&self.ring),
            "generator": FormulaJson { functional: true, ..FormulaJson::from_poly(self.generator.repr()) },
            "d_max": self.d_max,
            "constants_policy": self.constants.name(),
            "constants": constants,
        })
    }
}

/// The densities `G_{α,d}` for `α = 1..N`, `d = −1..d_max`.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    spec: HierarchySpec,
    densities: BTreeMap<Level, DiffPoly>,
}

impl Hierarchy {
    pub fn spec(&self) -> &HierarchySpec {
        &self.spec
    }

    pub fn ctx(&self) -> &Arc<RingContext> {
        &self.spec.ring
    }

    pub fn d_max(&self) -> i64 {
        self.spec.d_max
    }

    pub fn n_vars(&self) -> usize {
        self.spec.ring.n_vars
    }

    pub fn densities(&self) -> &BTreeMap<Level, DiffPoly> {
        &self.densities
    }

    pub fn density(&self, alpha: usize, d: i64) -> Result<&DiffPoly> {
        self.densities
            .get(&(alpha, d))
            .ok_or_else(|| Error::Invalid(format!("level ({alpha},{d}) was not generated")))
    }

    pub fn functional(&self, alpha: usize, d: i64) -> Result<LocalFunctional> {
        Ok(LocalFunctional::integrate(self.density(alpha, d)?))
    }

    /// The weakest exactness over all densities.
    pub fn exact_u_degree(&self) -> ExactDegree {
        self.densities.values().map(DiffPoly::exact_u_degree).fold(None, |acc, e| match (acc, e) {
            (None, x) | (x, None) => x,
            (Some(a), Some(b)) => Some(a.min(b)),
        })
    }

    /// `{"spec": …, "densities": {"alpha,d": formula}}`.
    pub fn to_json(&self) -> Value {
        let densities: BTreeMap<String, FormulaJson> =
            self.densities.iter().map(|(l, g)| (level_key(*l), FormulaJson::from_poly(g))).collect();
        json!({ "spec": self.spec.to_json(), "densities": densities })
    }
}

/// `η_{αμ} u^μ`.
pub fn seed(ctx: &Arc<RingContext>, alpha: usize) -> DiffPoly {
    let parts: Vec<DiffPoly> =
        (1..=ctx.n_vars).map(|mu| DiffPoly::var(ctx, mu, 0).scale(ctx.eta_lower(alpha, mu))).collect();
    crate::ring::sum(ctx, parts.iter())
}

/// One step `G ↦ (D−1)^{-1} ∂_x^{-1} (bracket(G, H̄))`, restricted to the
/// exact part of the bracket.
pub fn recursion_step(g: &DiffPoly, h: &LocalFunctional) -> Result<DiffPoly> {
    let rhs = hamiltonian_bracket(g, h)?.restrict_to_exact();
    d_minus_one_inverse(&dx_inverse(&rhs)?)
}

fn at_level(e: Error, alpha: usize, d: i64) -> Error {
    match e {
        Error::NotExact(m) => Error::NotExact(format!("level ({alpha},{d}): {m}")),
        Error::WeightOneComponent(m) => Error::WeightOneComponent(format!("level ({alpha},{d}): {m}")),
        other => other,
    }
}

fn chain(spec: &HierarchySpec, alpha: usize) -> Result<Vec<DiffPoly>> {
    let mut out = vec![seed(&spec.ring, alpha)];
    for d in 0..=spec.d_max {
        let prev = out.last().expect("chain is seeded");
        let next = recursion_step(prev, &spec.generator).map_err(|e| at_level(e, alpha, d))?;
        out.push(next);
    }
    Ok(out)
}

/// Runs the recursion for every `α` up to `spec.d_max`.
pub fn generate(spec: &HierarchySpec) -> Result<Hierarchy> {
    spec.validate()?;
    let ctx = &spec.ring;
    let chains: Vec<Result<Vec<DiffPoly>>> = (1..=ctx.n_vars).into_par_iter().map(|a| chain(spec, a)).collect();
    let mut densities = BTreeMap::new();
    for (idx, ch) in chains.into_iter().enumerate() {
        let alpha = idx + 1;
        for (j, g) in ch?.into_iter().enumerate() {
            let d = j as i64 - 1;
            let g = match spec.constants.lookup((alpha, d)) {
                Some(c) => g.try_add(&c.rehome(ctx)?)?,
                None => g,
            };
            densities.insert((alpha, d), g);
        }
    }
    Ok(Hierarchy { spec: spec.clone(), densities })
}

/// Every pair `(α,p) < (β,q)` with `0 ≤ p, q ≤ max_d`.
pub fn all_pairs(h: &Hierarchy, max_d: i64) -> Vec<(Level, Level)> {
    let top = max_d.min(h.d_max());
    let levels: Vec<Level> = (1..=h.n_vars()).flat_map(|a| (0..=top).map(move |d| (a, d))).collect();
    let mut out = Vec::new();
    for (i, x) in levels.iter().enumerate() {
        for y in &levels[i + 1..] {
            out.push((*x, *y));
        }
    }
    out
}

/// The bracket of two integrated densities, checked to vanish as a local
/// functional within the exact window. Uses `(1/ℏ)[·,·]` in quantum rings,
/// which is the stronger statement.
pub fn verify_commutativity(h: &Hierarchy, pairs: &[(Level, Level)]) -> Result<CheckReport> {
    let entries: Vec<Result<CheckEntry>> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let f = h.density(x.0, x.1)?;
            let g = h.functional(y.0, y.1)?;
            let b = hamiltonian_bracket(f, &g)?.restrict_to_exact();
            let r = LocalFunctional::integrate(&b);
            let residual = if r.is_zero() { None } else { Some(r.into_repr()) };
            Ok(CheckEntry {
                check: "commutativity".into(),
                indices: format!("{};{}", level_key(x), level_key(y)),
                residual,
            })
        })
        .collect();
    entries.into_iter().collect()
}

/// `∂G_{α,p}/∂u¹ = G_{α,p−1}`; compared modulo constants unless the
/// constant of `G_{α,p−1}` is known.
pub fn string_check(h: &Hierarchy) -> Result<CheckReport> {
    let mut report = CheckReport::default();
    for alpha in 1..=h.n_vars() {
        for p in 0..=h.d_max() {
            let lhs = h.density(alpha, p)?.partial(1, 0);
            let rhs = h.density(alpha, p - 1)?;
            let exact = h.spec.constants.knows((alpha, p - 1));
            let (lhs, rhs) = if exact { (lhs, rhs.clone()) } else { (lhs.without_constant(), rhs.without_constant()) };
            let label = if exact { "string" } else { "string (mod constants)" };
            report.push(label, format!("{alpha},{p}"), residual(&lhs, &rhs)?);
        }
    }
    Ok(report)
}

/// `∂_x ∂G_{α,p+1}/∂u^β = bracket(G_{α,p}, Ḡ_{β,0})`.
pub fn second_recursion_check(h: &Hierarchy) -> Result<CheckReport> {
    let n = h.n_vars();
    let mut jobs = Vec::new();
    for alpha in 1..=n {
        for p in -1..h.d_max() {
            for beta in 1..=n {
                jobs.push((alpha, p, beta));
            }
        }
    }
    let bars: Vec<LocalFunctional> = (1..=n).map(|b| h.functional(b, 0)).collect::<Result<_>>()?;
    let entries: Vec<Result<CheckEntry>> = jobs
        .par_iter()
        .map(|&(alpha, p, beta)| {
            let lhs = h.density(alpha, p + 1)?.partial(beta, 0).dx();
            let rhs = hamiltonian_bracket(h.density(alpha, p)?, &bars[beta - 1])?;
            Ok(CheckEntry {
                check: "second recursion".into(),
                indices: format!("{alpha},{p};{beta}"),
                residual: residual(&lhs, &rhs)?,
            })
        })
        .collect();
    entries.into_iter().collect()
}

/// `Σ_{m ≤ order} X^m f / m!` with `X = Σ t_{α,i} bracket(·, Ḡ_{α,i})`.
///
/// Time coefficients may carry parameters not declared in the ring; the
/// result then lives in the ring extended by them.
pub fn evolve_density(h: &Hierarchy, f: &DiffPoly, times: &BTreeMap<Level, Coefficient>, order: u32) -> Result<DiffPoly> {
    let extra: Vec<String> = times.values().flat_map(|c| c.params.keys().cloned()).collect();
    let ctx = if extra.iter().all(|p| h.ctx().param_index(p).is_some()) {
        h.ctx().clone()
    } else {
        h.ctx().with_extra_params(&extra)
    };
    let mut flows = Vec::new();
    for (&(a, d), t) in times {
        if t.is_zero() {
            continue;
        }
        let g = LocalFunctional::integrate(&h.density(a, d)?.rehome(&ctx)?);
        flows.push((t, g));
    }
    let start = f.rehome(&ctx)?;
    let mut acc = start.clone();
    let mut term = start;
    for m in 1..=order {
        let mut next = DiffPoly::zero(&ctx);
        for (t, g) in &flows {
            next = next.try_add(&hamiltonian_bracket(&term, g)?.scale_coeff(t)?)?;
        }
        term = next.scale_rat(&crate::ring::Rational::new(1.into(), m.into()));
        if term.is_zero() {
            break;
        }
        acc = acc.try_add(&term)?;
    }
    Ok(acc)
}

//! One function per job kind. Each returns an [`Artifact`]: the JSON
//! document, its pretty rendering, and the failed checks (if any).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use drh::ansatz::{solve_dr_type, AnsatzProblem};
use drh::brackets::HamiltonianOperator;
use drh::functionals::LocalFunctional;
use drh::lax::{gd_flow, gd_hamiltonian, gd_lax, gd_normal_coords, gd_operator_bracket, gd_ring, rth_root};
use drh::miura::{normal_miura, push_functional, push_operator, MiuraMap};
use drh::recursion::{
    all_pairs, evolve_density, generate, parse_level, preset, second_recursion_check, string_check, tau_structure,
    verify_commutativity, CheckReport, Hierarchy, HierarchySpec, Level, PresetOptions,
};
use drh::ring::json::FormulaJson;
use drh::ring::pretty::parse_pretty;
use drh::{Coefficient, DiffPoly, Mode, RingContext, TruncationWindow};
use serde_json::{json, Value};

use crate::config::{CommandKind, ConstantsArg, JobConfig};
use crate::error::CliError;

pub struct Artifact {
    pub json: Value,
    pub pretty: String,
    pub failures: Vec<Value>,
}

impl Artifact {
    fn ok(json: Value, pretty: String) -> Self {
        Artifact { json, pretty, failures: Vec::new() }
    }
}

type Out = Result<Artifact, CliError>;

pub fn run(kind: CommandKind, job: &JobConfig) -> Out {
    match kind {
        CommandKind::Generate => generate_cmd(job),
        CommandKind::Verify => verify_cmd(job),
        CommandKind::Miura => miura_cmd(job),
        CommandKind::Ansatz => ansatz_cmd(job),
        CommandKind::Lax => lax_cmd(job),
        CommandKind::Evolve => evolve_cmd(job),
    }
}

fn key((a, d): Level) -> String {
    format!("{a},{d}")
}

fn formula(f: &DiffPoly) -> Value {
    json!(FormulaJson::from_poly(f))
}

fn parse(text: &str, ctx: &Arc<RingContext>, field: &str) -> Result<DiffPoly, CliError> {
    parse_pretty(text, ctx).map_err(|e| CliError::config(field, e.to_string()))
}

fn spec(job: &JobConfig) -> Result<HierarchySpec, CliError> {
    let d_max = job.d_max.unwrap_or(2);
    if d_max < -1 {
        return Err(CliError::config("d_max", "must be at least -1"));
    }
    match (&job.preset, &job.input) {
        (Some(_), Some(_)) => Err(CliError::config("input", "give either a preset or an input file, not both")),
        (None, None) => Err(CliError::config("preset", "required (or give an input file)")),
        (None, Some(path)) => {
            let window_flags = [job.genus_cutoff, job.eps_order, job.u_degree_cutoff].iter().any(Option::is_some);
            if window_flags || job.mode.is_some() || job.constants.is_some() {
                return Err(CliError::config("input", "mode, window and constants come from the input file"));
            }
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::config("input", e.to_string()))?;
            let v = v.get("spec").cloned().unwrap_or(v);
            let s = HierarchySpec::from_json(&v)?;
            Ok(if job.d_max.is_some() { s.with_d_max(d_max) } else { s })
        }
        (Some(name), None) => {
            let paper = job.constants == Some(ConstantsArg::Paper);
            if paper && !name.starts_with("kdv") {
                return Err(CliError::config("constants", format!("no tabulated constants for preset `{name}`")));
            }
            let opts = PresetOptions {
                mode: job.mode.map_or(Mode::Classical, Mode::from),
                d_max,
                window: job.window(),
                paper_constants: paper,
            };
            Ok(preset(name, &opts)?)
        }
    }
}

fn hierarchy(job: &JobConfig) -> Result<Hierarchy, CliError> {
    Ok(generate(&spec(job)?)?)
}

fn density_lines(out: &mut String, densities: &BTreeMap<Level, DiffPoly>) {
    for (&(a, d), g) in densities {
        let _ = writeln!(out, "G[{a},{d}] = {g}");
    }
}

fn generate_cmd(job: &JobConfig) -> Out {
    let h = hierarchy(job)?;
    let mut pretty = format!("# {} ({}), d_max {}\n", h.spec().name, h.spec().mode().name(), h.d_max());
    density_lines(&mut pretty, h.densities());
    Ok(Artifact::ok(h.to_json(), pretty))
}

const CHECKS: [&str; 4] = ["commutativity", "string", "second-recursion", "tau"];

fn summarize(pretty: &mut String, failures: &mut Vec<Value>, name: &str, report: &CheckReport) {
    let bad: Vec<_> = report.failures().collect();
    let _ = writeln!(pretty, "{name}: {}/{} passed", report.len() - bad.len(), report.len());
    for e in bad {
        let residual = e.residual.as_ref().map_or_else(String::new, |r| r.to_string());
        let _ = writeln!(pretty, "  FAIL {} [{}] {residual}", e.check, e.indices);
        failures.push(json!({ "check": e.check, "indices": e.indices, "residual": e.residual.as_ref().map(formula) }));
    }
}

fn verify_cmd(job: &JobConfig) -> Out {
    let h = hierarchy(job)?;
    let classical = h.ctx().mode == Mode::Classical;
    let checks: Vec<String> = if job.checks.is_empty() {
        CHECKS.iter().filter(|c| classical || **c != "tau").map(|c| c.to_string()).collect()
    } else {
        job.checks.clone()
    };
    let mut reports = serde_json::Map::new();
    let mut pretty = format!("# verify {} ({})\n", h.spec().name, h.spec().mode().name());
    let mut failures = Vec::new();
    for (i, name) in checks.iter().enumerate() {
        let report = match name.as_str() {
            "commutativity" => verify_commutativity(&h, &all_pairs(&h, h.d_max()))?,
            "string" => string_check(&h)?,
            "second-recursion" => second_recursion_check(&h)?,
            "tau" if classical => tau_structure(&h)?.symmetry_check()?,
            "tau" => return Err(CliError::config(&format!("checks[{i}]"), "tau symmetry is checked in classical mode")),
            other => {
                let allowed = CHECKS.join(", ");
                return Err(CliError::config(&format!("checks[{i}]"), format!("unknown check `{other}` (known: {allowed})")));
            }
        };
        summarize(&mut pretty, &mut failures, name, &report);
        reports.insert(name.clone(), report.to_json());
    }
    let json = json!({ "spec": h.spec().to_json(), "checks": reports, "passed": failures.is_empty() });
    Ok(Artifact { json, pretty, failures })
}

fn miura_cmd(job: &JobConfig) -> Out {
    let h = hierarchy(job)?;
    let ctx = h.ctx().clone();
    let eps_order = *job.require(&job.window().order_cutoff, "eps_order")?;
    let standard = HamiltonianOperator::standard(&ctx);
    let mut pretty = String::new();
    match (&job.generator, job.map.is_empty()) {
        (Some(_), false) => Err(CliError::config("map", "give either a generator or a map, not both")),
        (None, true) => Err(CliError::config("generator", "required (or give --map images)")),
        (Some(text), true) => {
            let f = parse(text, &ctx, "generator")?;
            let tau = tau_structure(&h)?;
            let nm = normal_miura(&f, &tau, eps_order)?;
            let k = push_operator(&standard, &nm.map)?;
            let new = nm.densities_in_new_coordinates()?;
            let mut failures = Vec::new();
            let symmetry = nm.symmetry_check()?;
            let normality = nm.normality_check()?;
            for (i, im) in nm.map.images().iter().enumerate() {
                let _ = writeln!(pretty, "u~{} = {im}", i + 1);
            }
            summarize(&mut pretty, &mut failures, "symmetry", &symmetry);
            summarize(&mut pretty, &mut failures, "normality", &normality);
            let densities: BTreeMap<String, Value> = new.iter().map(|(l, g)| (key(*l), formula(g))).collect();
            let json = json!({
                "map": nm.map.to_json(),
                "operator": k.to_json(),
                "densities": densities,
                "checks": { "symmetry": symmetry.to_json(), "normality": normality.to_json() },
                "passed": failures.is_empty(),
            });
            Ok(Artifact { json, pretty, failures })
        }
        (None, false) => {
            let images = job
                .map
                .iter()
                .enumerate()
                .map(|(i, t)| parse(t, &ctx, &format!("map[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let m = MiuraMap::new(images, eps_order)?;
            let k = push_operator(&standard, &m)?;
            let g = push_functional(&h.spec().generator, &m)?;
            for (i, im) in m.images().iter().enumerate() {
                let _ = writeln!(pretty, "u~{} = {im}", i + 1);
            }
            let _ = writeln!(pretty, "generator = {}", g.repr());
            let json = json!({ "map": m.to_json(), "operator": k.to_json(), "generator": formula(g.repr()) });
            Ok(Artifact::ok(json, pretty))
        }
    }
}

fn ansatz_cmd(job: &JobConfig) -> Out {
    let params: Vec<&str> = job.params.iter().map(String::as_str).collect();
    let mode = job.mode.map_or(Mode::Classical, Mode::from);
    let ctx = RingContext::scalar(mode, &params, TruncationWindow::unbounded());
    let known = LocalFunctional::integrate(&parse(job.require(&job.known, "known")?, &ctx, "known")?);
    let mut problem = AnsatzProblem::new(known, *job.require(&job.genus, "genus")?);
    if let Some(d) = job.d_check {
        problem = problem.with_d_check(d);
    }
    if let Some(l) = job.lookahead {
        problem = problem.with_lookahead(l);
    }
    if let Some(n) = job.max_u_degree {
        problem = problem.with_max_u_degree(n);
    }
    if let Some(g) = &job.gauge {
        problem = problem.with_gauge(parse(g, &ctx, "gauge")?);
    }
    if let Some(n) = &job.normalization {
        problem = problem.with_normalization(parse(n, &ctx, "normalization")?);
    }
    let sol = solve_dr_type(&problem)?;
    let mut pretty = format!("dimension {} (free: {})\n", sol.dimension(), sol.free_params().join(", "));
    let _ = writeln!(pretty, "generic = {}", sol.generic()?.repr());
    for c in sol.conditions() {
        let _ = writeln!(pretty, "condition: {c} = 0");
    }
    Ok(Artifact::ok(sol.to_json()?, pretty))
}

fn lax_cmd(job: &JobConfig) -> Out {
    let r = *job.require(&job.r, "r")?;
    if r < 2 {
        return Err(CliError::config("r", "must be at least 2"));
    }
    let depth = job.depth.unwrap_or(6);
    let ms: Vec<u32> =
        if job.m.is_empty() { (1..=r as u32 + 1).filter(|m| m % r as u32 != 0).collect() } else { job.m.clone() };
    if let Some(bad) = ms.iter().find(|m| **m == 0 || **m % r as u32 == 0) {
        return Err(CliError::config("m", format!("{bad} is zero or a multiple of r")));
    }
    let ctx = gd_ring(r)?;
    let l = gd_lax(&ctx, r);
    let root = rth_root(&l, r as u32, depth)?;
    let coords = gd_normal_coords(&l)?;
    let mut pretty = format!("# Gelfand-Dickey r = {r}, depth {depth}\n");
    for (i, c) in coords.iter().enumerate() {
        let _ = writeln!(pretty, "normal coordinate {} = {c}", i + 1);
    }
    let mut hams = serde_json::Map::new();
    let mut flows = serde_json::Map::new();
    for m in &ms {
        let h = gd_hamiltonian(&l, *m)?;
        let flow = gd_flow(&l, *m)?;
        let _ = writeln!(pretty, "h[{m}] = {}", h.repr());
        for (i, f) in &flow {
            let _ = writeln!(pretty, "d f{i} / dT{m} = {f}");
        }
        hams.insert(m.to_string(), formula(h.repr()));
        flows.insert(m.to_string(), json!(flow.iter().map(|(i, f)| (i.to_string(), formula(f))).collect::<BTreeMap<_, _>>()));
    }
    let json = json!({
        "r": r,
        "root": root.to_json(),
        "normal_coordinates": coords.iter().map(formula).collect::<Vec<_>>(),
        "hamiltonians": hams,
        "flows": flows,
        "operator": gd_operator_bracket(&l)?.to_json(),
    });
    Ok(Artifact::ok(json, pretty))
}

fn evolve_cmd(job: &JobConfig) -> Out {
    let h = hierarchy(job)?;
    let f = parse(job.require(&job.density, "density")?, h.ctx(), "density")?;
    if job.times.is_empty() {
        return Err(CliError::config("times", "give at least one level alpha,d"));
    }
    let mut times = BTreeMap::new();
    let mut names = serde_json::Map::new();
    for (i, t) in job.times.iter().enumerate() {
        let level = parse_level(t).map_err(|e| CliError::config(&format!("times[{i}]"), e.to_string()))?;
        let name = if job.times.len() == 1 { "t".to_string() } else { format!("t{}", i + 1) };
        if h.ctx().param_index(&name).is_some() {
            return Err(CliError::config(&format!("times[{i}]"), format!("`{name}` is already a ring parameter")));
        }
        if times.insert(level, Coefficient::from(1).with_param(&name, 1)).is_some() {
            return Err(CliError::config(&format!("times[{i}]"), format!("level {t} listed twice")));
        }
        names.insert(key(level), json!(name));
    }
    let order = job.order.unwrap_or(2);
    let out = evolve_density(&h, &f, &times, order)?;
    let json = json!({ "density": formula(&out), "times": names, "order": order });
    Ok(Artifact::ok(json, format!("{out}\n")))
}

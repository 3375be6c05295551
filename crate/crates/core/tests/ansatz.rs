//! The undetermined-coefficient solver on rank one.

use std::sync::Arc;

use drh::ansatz::{monomial_basis, solve_dr_type, AnsatzProblem};
use drh::functionals::LocalFunctional;
use drh::recursion::{all_pairs, generate, preset, verify_commutativity, HierarchySpec, PresetOptions};
use drh::ring::pretty::parse_pretty;
use drh::{DiffPoly, Error, Gaussian, Mode, RingContext, TruncationWindow};

fn p(text: &str, c: &Arc<RingContext>) -> DiffPoly {
    parse_pretty(text, c).unwrap()
}

fn int(text: &str, c: &Arc<RingContext>) -> LocalFunctional {
    LocalFunctional::integrate(&p(text, c))
}

fn same(a: &LocalFunctional, b: &LocalFunctional) -> bool {
    a.sub(b).unwrap().is_zero()
}

fn quantum(params: &[&str]) -> Arc<RingContext> {
    RingContext::scalar(Mode::Quantum, params, TruncationWindow::unbounded())
}

const GENUS_ONE: &str = "u^3/6 + (-1/24) eps^2 u_1^2 + (-1/2) i s1 hbar u_1^2 + (-1/24) i hbar u";

#[test]
fn basis_is_one_representative_per_class() {
    let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::unbounded());
    let b = monomial_basis(&c, 1, 2);
    assert_eq!(b.len(), 1);
    assert_eq!(DiffPoly::monomial(&c, b[0].clone(), Gaussian::one()), p("eps^2 u_1^2", &c));
    assert_eq!(monomial_basis(&c, 1, 3).len(), 2, "u_1^2 and u u_1^2");
    let q = quantum(&[]);
    let b: Vec<String> =
        monomial_basis(&q, 1, 1).into_iter().map(|m| DiffPoly::monomial(&q, m, Gaussian::one()).to_string()).collect();
    assert_eq!(b, vec!["eps^2 u", "hbar u"]);
    let g0 = monomial_basis(&c, 0, 3);
    assert!(g0.iter().any(|m| m.u_degree() == 3 && m.derivative_count() == 0));
    assert!(monomial_basis(&c, 2, 0).is_empty());
}

#[test]
fn genus_zero_is_the_cubic() {
    let c = quantum(&[]);
    let sol = solve_dr_type(&AnsatzProblem::new(LocalFunctional::zero(&c), 0)).unwrap();
    assert!(same(&sol.particular().unwrap(), &int("u^3/6", sol.ctx())));
    // the only freedom is adding ∫u, part of the triangular ambiguity
    assert_eq!(sol.dimension(), 1);
    assert!(same(&sol.kernel().unwrap()[0], &int("u", sol.ctx())));
}

#[test]
fn genus_one_family() {
    let c = quantum(&[]);
    let problem = AnsatzProblem::new(int("u^3/6", &c), 1)
        .with_d_check(2)
        .with_gauge(p("(-1/24) eps^2 u_1^2", &c))
        .with_normalization(p("(-1/2) i hbar u_1^2", &c));
    let sol = solve_dr_type(&problem).unwrap();
    assert_eq!(sol.free_params(), vec!["s1"]);
    assert!(sol.conditions().is_empty());
    let got = sol.generic().unwrap();
    assert!(same(&got, &int(GENUS_ONE, sol.ctx())), "{}", got.repr());
}

#[test]
fn eps_scaling_is_a_free_direction() {
    let c = quantum(&[]);
    let sol = solve_dr_type(&AnsatzProblem::new(int("u^3/6", &c), 1)).unwrap();
    assert_eq!(sol.dimension(), 2);
    let classical = RingContext::scalar(Mode::Classical, &[], TruncationWindow::unbounded());
    let sol = solve_dr_type(&AnsatzProblem::new(int("u^3/6", &classical), 1)).unwrap();
    assert_eq!(sol.dimension(), 1);
    assert!(same(&sol.kernel().unwrap()[0], &int("eps^2 u_1^2", sol.ctx())));
}

#[test]
fn classical_genus_three_needs_the_next_order() {
    let c = RingContext::scalar(Mode::Classical, &["a"], TruncationWindow::unbounded());
    let known = int("u^3/6 + (-1/24) eps^2 u_1^2 + a eps^4 u_2^2", &c);
    let alone = solve_dr_type(&AnsatzProblem::new(known.clone(), 3).with_d_check(2)).unwrap();
    assert_eq!(alone.dimension(), 2, "u_3^2 and u_2^3 both free at order 6");
    let sol = solve_dr_type(&AnsatzProblem::new(known, 3).with_d_check(2).with_lookahead(1)).unwrap();
    let genus3 = sol.generic().unwrap().repr().filter(|m, _| m.order() == 6);
    let s = sol.free_params()[0];
    let expected = p(&format!("(-240/7) a^2 eps^6 u_3^2 + {s} eps^6 u_2^3"), sol.ctx());
    assert_eq!(genus3, expected);
}

#[test]
fn genus_two_family_contains_the_presets() {
    let c = quantum(&["s1"]);
    let sol = solve_dr_type(&AnsatzProblem::new(int(GENUS_ONE, &c), 2)).unwrap();
    // ε⁴u₂², ε²ℏu₂², ℏ²u₂²
    assert_eq!(sol.dimension(), 3);
    let opts = PresetOptions { mode: Mode::Quantum, window: TruncationWindow::order(4), ..PresetOptions::default() };
    let rank1 = preset("rank1", &opts).unwrap().generator;
    assert!(sol.locate(&rank1).unwrap().is_some());

    let ilw = preset("ilw", &opts).unwrap().generator;
    let known = ilw.map(|f| f.truncate_order(2));
    let sol = solve_dr_type(&AnsatzProblem::new(known, 2)).unwrap();
    assert!(sol.locate(&ilw).unwrap().is_some(), "ILW lies in its genus-2 family");
}

#[test]
fn points_of_the_family_commute() {
    let c = quantum(&["s1"]);
    let sol = solve_dr_type(&AnsatzProblem::new(int(GENUS_ONE, &c), 2).with_d_check(2)).unwrap();
    let ctx = sol.ctx().clone();
    let values: Vec<DiffPoly> = ["(3)", "(7) i", "(-2/5)"].iter().map(|t| p(t, &ctx)).collect();
    let point = sol.point(&values).unwrap();
    let windowed = ctx.with_window(TruncationWindow::order(4));
    let g = LocalFunctional::integrate(&point.repr().rehome(&windowed).unwrap());
    let h = generate(&HierarchySpec::new("point", g, 3)).unwrap();
    assert!(verify_commutativity(&h, &all_pairs(&h, 3)).unwrap().passed());
}

#[test]
fn non_dr_lower_genus_is_inconsistent() {
    let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::unbounded());
    let r = solve_dr_type(&AnsatzProblem::new(int("u^3/6 + eps^2 u u_1^2", &c), 2).with_d_check(2));
    assert!(matches!(r, Err(Error::Inconsistent(_))), "{r:?}");
}

#[test]
fn quadratic_lookahead_is_refused() {
    let c = quantum(&[]);
    let r = solve_dr_type(&AnsatzProblem::new(int("u^3/6", &c), 1).with_d_check(1).with_lookahead(1));
    assert!(matches!(r, Err(Error::Invalid(_))), "{r:?}");
}

#[test]
fn report_shape() {
    let c = quantum(&[]);
    let problem = AnsatzProblem::new(int("u^3/6", &c), 1).with_gauge(p("(-1/24) eps^2 u_1^2", &c));
    let v = solve_dr_type(&problem).unwrap().to_json().unwrap();
    assert!(v["basis_point"]["terms"].is_array());
    assert_eq!(v["kernel"].as_array().unwrap().len(), 1);
    assert_eq!(v["d_check"], 3);
}

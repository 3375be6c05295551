//! Miura maps on the ILW hierarchy, plus naturality of the pushforward.

use std::sync::Arc;

use drh::brackets::{poisson, DiffOperator, HamiltonianOperator};
use drh::functionals::LocalFunctional;
use drh::miura::{normal_miura, push_functional, push_operator, MiuraMap};
use drh::recursion::{generate, preset, tau_structure, PresetOptions};
use drh::ring::pretty::parse_pretty;
use drh::{DiffPoly, Mode, Rational, RingContext, TruncationWindow};
use num_bigint::BigInt;

fn p(text: &str, c: &Arc<RingContext>) -> DiffPoly {
    parse_pretty(text, c).unwrap()
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn fact(n: i64) -> Rational {
    q((1..=n).product(), 1)
}

// |B_2|, |B_4|, |B_6|
fn bernoulli_abs() -> [Rational; 3] {
    [q(1, 6), q(1, 30), q(1, 42)]
}

fn ilw_tau() -> (drh::recursion::TauStructure, Arc<RingContext>) {
    let opts = PresetOptions { d_max: 2, window: TruncationWindow::order(6), ..PresetOptions::default() };
    let h = generate(&preset("ilw", &opts).unwrap()).unwrap();
    let c = h.ctx().clone();
    (tau_structure(&h).unwrap(), c)
}

#[test]
fn ilw_normal_miura_and_operator() {
    let (tau, c) = ilw_tau();
    let mut f = DiffPoly::zero(&c);
    let mut want = DiffPoly::var(&c, 1, 0);
    let mut ops = vec![(1usize, DiffPoly::from_int(&c, 1))];
    for (i, b) in bernoulli_abs().iter().enumerate() {
        let g = i as i64 + 1;
        let two = q(2i64.pow(2 * g as u32 - 1), 1);
        let coeff = (&two - q(1, 1)) / &two * b / fact(2 * g);
        let mu = DiffPoly::param(&c, "mu", g as u32).unwrap();
        f = &f + &(&mu * &DiffPoly::var(&c, 1, 2 * g as usize - 2)).mul_eps(2 * g as u32).scale_rat(&coeff);
        want = &want + &(&mu * &DiffPoly::var(&c, 1, 2 * g as usize)).mul_eps(2 * g as u32).scale_rat(&coeff);
        let k = q(2 * g - 1, 1) * b / fact(2 * g);
        ops.push((2 * g as usize + 1, mu.mul_eps(2 * g as u32).scale_rat(&k)));
    }
    let nm = normal_miura(&f, &tau, 6).unwrap();
    assert_eq!(nm.map.images(), &[want]);
    assert!(nm.symmetry_check().unwrap().passed());
    assert!(nm.normality_check().unwrap().passed());

    let k = push_operator(&HamiltonianOperator::standard(&c), &nm.map).unwrap();
    let expected = HamiltonianOperator::scalar(DiffOperator::from_coeffs(&c, ops));
    assert_eq!(k, expected);
    // the same operator written out
    let literal = HamiltonianOperator::scalar(DiffOperator::from_coeffs(
        &c,
        [
            (1, p("(1)", &c)),
            (3, p("(1/12) eps^2 mu", &c)),
            (5, p("(1/240) eps^4 mu^2", &c)),
            (7, p("(1/6048) eps^6 mu^3", &c)),
        ],
    ));
    assert_eq!(k, literal);
}

#[test]
fn kdv_hamiltonians_commute_after_the_hodge_map() {
    let opts = PresetOptions { d_max: 3, window: TruncationWindow::order(4), ..PresetOptions::default() };
    let h = generate(&preset("kdv", &opts).unwrap()).unwrap();
    let c = h.ctx().clone();
    let m = MiuraMap::new(vec![p("u + (1/24) eps^2 u_2 + (7/5760) eps^4 u_4", &c)], 4).unwrap();
    let k = push_operator(&HamiltonianOperator::standard(&c), &m).unwrap();
    let g1 = push_functional(&h.functional(1, 1).unwrap(), &m).unwrap();
    let g2 = push_functional(&h.functional(1, 2).unwrap(), &m).unwrap();
    let b = poisson(&g1, &g2, &k).unwrap();
    assert!(LocalFunctional::integrate(&b.repr().truncate_order(4)).is_zero());
}

#[test]
fn group_law_for_operators() {
    let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::order(4));
    let m1 = MiuraMap::new(vec![p("u + (1/3) eps^2 u_2 + eps^2 u u_2", &c)], 4).unwrap();
    let m2 = MiuraMap::new(vec![p("(2) u + eps^2 u_1^2 + (-1/5) eps^4 u_4", &c)], 4).unwrap();
    let k = HamiltonianOperator::standard(&c);
    let two_step = push_operator(&push_operator(&k, &m1).unwrap(), &m2).unwrap();
    let one_step = push_operator(&k, &m2.after(&m1).unwrap()).unwrap();
    assert_eq!(two_step, one_step);
}

#[test]
fn bracket_naturality() {
    let c = RingContext::scalar(Mode::Classical, &[], TruncationWindow::order(4));
    let m = MiuraMap::new(vec![p("u + eps^2 u u_2 + (1/2) eps^2 u_1^2 + eps^4 u_4", &c)], 4).unwrap();
    let k = HamiltonianOperator::standard(&c);
    let h1 = LocalFunctional::integrate(&p("u^3 + eps^2 u_1^2", &c));
    let h2 = LocalFunctional::integrate(&p("u^4 + eps^2 u u_1^2", &c));
    let pk = push_operator(&k, &m).unwrap();
    let lhs = poisson(&push_functional(&h1, &m).unwrap(), &push_functional(&h2, &m).unwrap(), &pk).unwrap();
    let rhs = push_functional(&poisson(&h1, &h2, &k).unwrap(), &m).unwrap();
    let diff = LocalFunctional::integrate(&lhs.repr().truncate_order(4)).sub(&LocalFunctional::integrate(&rhs.repr().truncate_order(4))).unwrap();
    assert!(diff.is_zero(), "{:?}", diff);
}

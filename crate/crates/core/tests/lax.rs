//! Gelfand–Dickey hierarchies against the DR-side KdV hierarchy.

use std::sync::Arc;

use drh::brackets::poisson;
use drh::functionals::{is_exact, LocalFunctional};
use drh::lax::{gd_flow, gd_hamiltonian, gd_lax, gd_normal_coords, gd_operator_bracket, gd_ring, rth_root, PseudoDiffOp};
use drh::recursion::{generate, preset, PresetOptions};
use drh::ring::pretty::parse_pretty;
use drh::{DiffPoly, Gaussian, RingContext};

fn p(text: &str, c: &Arc<RingContext>) -> DiffPoly {
    parse_pretty(text, c).unwrap()
}

#[test]
fn square_root_squares_back() {
    let c = gd_ring(2).unwrap();
    let l = gd_lax(&c, 2);
    for depth in [6, 8] {
        let root = rth_root(&l, 2, depth).unwrap();
        assert_eq!(root.compose(&root), l.truncate(depth));
    }
    let c3 = gd_ring(3).unwrap();
    let l3 = gd_lax(&c3, 3);
    let root = rth_root(&l3, 3, 6).unwrap();
    assert_eq!(root.pow(3), l3.truncate(6));
}

#[test]
fn positive_part_of_root_is_dx() {
    for r in [2usize, 3] {
        let c = gd_ring(r).unwrap();
        let root = rth_root(&gd_lax(&c, r), r as u32, r as u32 + 2).unwrap();
        assert_eq!(root.positive_part(), PseudoDiffOp::dx_power(&c, 1, None).unwrap());
    }
}

#[test]
fn cubic_flow_is_kdv() {
    let c = gd_ring(2).unwrap();
    let flow = gd_flow(&gd_lax(&c, 2), 3).unwrap();
    // ε∂f/∂T₃ = (3/2) ε f f_1 + (1/4) ε^3 f_3
    assert_eq!(flow[&0], p("(3/2) eps f0 f0_1 + (1/4) eps^3 f0_3", &c));

    let opts = PresetOptions { d_max: 1, ..PresetOptions::default() };
    let h = generate(&preset("kdv", &opts).unwrap()).unwrap();
    let uc = h.ctx().clone();
    let kdv = h.functional(1, 1).unwrap().variational_derivative(1).dx();
    // f = a·u and T₃ = b·t; matching u u_1 and u_3 gives a = 2, b = 1/3
    let (a, b) = (Gaussian::from_int(2), Gaussian::from_ratio(1, 3));
    let subst = flow[&0].substitute(&[DiffPoly::var(&c, 1, 0).scale(&a)]).unwrap();
    let du_dt = subst.rehome(&uc).unwrap();
    // ε a ∂u/∂T₃ = flow(a u), and ∂/∂t = b ∂/∂T₃
    let lhs = kdv.mul_eps(1).scale(&a);
    let rhs = du_dt.scale(&b);
    assert_eq!(lhs, rhs);
}

#[test]
fn gd_hamiltonians_commute() {
    let c = gd_ring(2).unwrap();
    let l = gd_lax(&c, 2);
    let k = gd_operator_bracket(&l).unwrap();
    let h1 = gd_hamiltonian(&l, 1).unwrap();
    let h3 = gd_hamiltonian(&l, 3).unwrap();
    assert!(!h1.is_zero() && !h3.is_zero());
    assert!(poisson(&h1, &h3, &k).unwrap().is_zero());

    let c3 = gd_ring(3).unwrap();
    let l3 = gd_lax(&c3, 3);
    let k3 = gd_operator_bracket(&l3).unwrap();
    let hs: Vec<LocalFunctional> = [1, 2, 4].iter().map(|m| gd_hamiltonian(&l3, *m).unwrap()).collect();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            assert!(poisson(&hs[i], &hs[j], &k3).unwrap().is_zero(), "r = 3, pair {i} {j}");
        }
    }
}

#[test]
fn flows_are_hamiltonian() {
    for (r, ms) in [(2usize, vec![1u32, 3, 5]), (3, vec![1, 2, 4])] {
        let c = gd_ring(r).unwrap();
        let l = gd_lax(&c, r);
        let k = gd_operator_bracket(&l).unwrap();
        for m in ms {
            let flow = gd_flow(&l, m).unwrap();
            let grad = gd_hamiltonian(&l, m).unwrap().gradient();
            let via_k = k.apply(&grad);
            for i in 0..r - 1 {
                assert_eq!(flow[&i], via_k[i], "r = {r}, m = {m}, i = {i}");
            }
        }
    }
}

#[test]
fn residue_of_commutator_is_exact() {
    let c = gd_ring(3).unwrap();
    let l = gd_lax(&c, 3);
    let a = rth_root(&l, 3, 6).unwrap().pow(2);
    let b = PseudoDiffOp::multiplication(p("f0 f1_2", &c)).compose(&PseudoDiffOp::dx_power(&c, -1, Some(6)).unwrap());
    assert!(is_exact(&a.commutator(&b).res().unwrap()));
}

#[test]
fn normal_coordinates_of_kdv_and_boussinesq() {
    let c = gd_ring(2).unwrap();
    assert_eq!(gd_normal_coords(&gd_lax(&c, 2)).unwrap(), vec![p("f0/2", &c)]);
    let c3 = gd_ring(3).unwrap();
    let coords = gd_normal_coords(&gd_lax(&c3, 3)).unwrap();
    // α = 2 is res L^{1/3}; α = 1 carries one factor of 1/√(−3)
    assert_eq!(coords[1], p("f1/3", &c3));
    assert!(coords[0].terms().all(|(m, _)| m.params[0] == 1));
}

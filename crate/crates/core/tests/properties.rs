//! Randomized identities: Miura group law and naturality, roots of Lax
//! operators, exactness of residues, and bracket symmetries.

mod common;

use std::sync::Arc;

use common::*;
use drh::brackets::{poisson, poisson_standard, star_commutator_local, HamiltonianOperator};
use drh::functionals::{is_exact, LocalFunctional};
use drh::lax::{gd_lax, gd_ring, rth_root, PseudoDiffOp};
use drh::miura::{push_functional, push_operator, MiuraMap};
use drh::{DiffPoly, Mode, RingContext, TruncationWindow};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORDER: u32 = 4;

fn windowed() -> Arc<RingContext> {
    RingContext::scalar(Mode::Classical, &[], TruncationWindow::order(ORDER))
}

fn miura(rng: &mut ChaCha8Rng, ctx: &Arc<RingContext>) -> MiuraMap {
    let tail = random_poly(rng, ctx, 2, 2, 2).mul_eps(2).truncate_order(ORDER);
    MiuraMap::new(vec![&u(ctx, 0) + &tail], ORDER).unwrap()
}

fn integrated(f: &DiffPoly) -> LocalFunctional {
    LocalFunctional::integrate(&f.truncate_order(ORDER))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn miura_group_law(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = windowed();
        let (m1, m2) = (miura(&mut rng, &c), miura(&mut rng, &c));
        let k = HamiltonianOperator::standard(&c);
        let two_step = push_operator(&push_operator(&k, &m1).unwrap(), &m2).unwrap();
        let one_step = push_operator(&k, &m2.after(&m1).unwrap()).unwrap();
        prop_assert_eq!(two_step, one_step);
    }

    #[test]
    fn miura_inverse_undoes_the_map(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = windowed();
        let m = miura(&mut rng, &c);
        let id = m.invert().unwrap().after(&m).unwrap();
        let expected = MiuraMap::identity(&c, ORDER);
        prop_assert_eq!(id.images(), expected.images());
    }

    #[test]
    fn bracket_naturality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = windowed();
        let m = miura(&mut rng, &c);
        let k = HamiltonianOperator::standard(&c);
        let h1 = LocalFunctional::integrate(&random_poly(&mut rng, &c, 2, 3, 1));
        let h2 = LocalFunctional::integrate(&random_poly(&mut rng, &c, 2, 3, 1));
        let pk = push_operator(&k, &m).unwrap();
        let lhs = poisson(&push_functional(&h1, &m).unwrap(), &push_functional(&h2, &m).unwrap(), &pk).unwrap();
        let rhs = push_functional(&poisson(&h1, &h2, &k).unwrap(), &m).unwrap();
        prop_assert!(integrated(lhs.repr()).sub(&integrated(rhs.repr())).unwrap().is_zero());
    }

    #[test]
    fn root_power_is_the_lax_operator(r in 2usize..=3, depth in 4u32..=7) {
        let c = gd_ring(r).unwrap();
        let l = gd_lax(&c, r);
        let root = rth_root(&l, r as u32, depth).unwrap();
        prop_assert_eq!(root.pow(r as u32), l.truncate(depth));
    }

    #[test]
    fn residue_of_a_commutator_is_exact(seed in any::<u64>(), j in -2i64..=1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = gd_ring(2).unwrap();
        let op = |rng: &mut ChaCha8Rng, top: i64| {
            let a = random_poly(rng, &c, 2, 2, 2);
            PseudoDiffOp::multiplication(a).compose(&PseudoDiffOp::dx_power(&c, top, Some(5)).unwrap())
        };
        let a = op(&mut rng, 2);
        let b = op(&mut rng, j);
        prop_assert!(is_exact(&a.commutator(&b).res().unwrap()));
    }

    #[test]
    fn classical_bracket_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = scalar(Mode::Classical);
        let f = LocalFunctional::integrate(&random_poly(&mut rng, &c, 3, 3, 2));
        let g = LocalFunctional::integrate(&random_poly(&mut rng, &c, 3, 3, 2));
        let fg = LocalFunctional::integrate(&poisson_standard(f.repr(), &g).unwrap());
        let gf = LocalFunctional::integrate(&poisson_standard(g.repr(), &f).unwrap());
        prop_assert!(fg.add(&gf).unwrap().is_zero());
    }

    #[test]
    fn commutator_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = scalar(Mode::Quantum);
        let f = LocalFunctional::integrate(&random_poly(&mut rng, &c, 2, 3, 1));
        let g = LocalFunctional::integrate(&random_poly(&mut rng, &c, 2, 3, 1));
        let fg = LocalFunctional::integrate(&star_commutator_local(f.repr(), &g).unwrap());
        let gf = LocalFunctional::integrate(&star_commutator_local(g.repr(), &f).unwrap());
        prop_assert!(fg.add(&gf).unwrap().is_zero());
    }
}

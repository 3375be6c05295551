//! Every preset generates a commuting hierarchy inside its window.

use std::time::Instant;

use drh::recursion::{all_pairs, generate, preset, second_recursion_check, string_check, verify_commutativity, PresetOptions};
use drh::{Mode, TruncationWindow};

fn check(name: &str, mode: Mode, d_max: i64, window: TruncationWindow) {
    let t = Instant::now();
    let opts = PresetOptions { mode, d_max, window, ..PresetOptions::default() };
    let h = generate(&preset(name, &opts).unwrap()).unwrap();
    let gen = t.elapsed();
    let report = verify_commutativity(&h, &all_pairs(&h, d_max)).unwrap();
    let bad: Vec<_> = report.failures().map(|e| e.indices.clone()).collect();
    assert!(bad.is_empty(), "{name} {mode:?}: {bad:?}");
    assert!(string_check(&h).unwrap().passed(), "{name} {mode:?} string");
    assert!(second_recursion_check(&h).unwrap().passed(), "{name} {mode:?} second recursion");
    if mode == Mode::Classical {
        let tau = drh::recursion::tau_structure(&h).unwrap();
        assert!(tau.symmetry_check().unwrap().passed(), "{name} tau symmetry");
    }
    eprintln!("{name} {mode:?} d<={d_max}: generate {gen:?}, total {:?}", t.elapsed());
}

#[test]
fn ilw_commutes() {
    check("ilw", Mode::Classical, 3, TruncationWindow::order(6));
    check("ilw", Mode::Quantum, 2, TruncationWindow::order(4));
}

#[test]
fn toda_commutes() {
    let w = TruncationWindow::order(4).with_u_degree(6);
    check("toda", Mode::Classical, 1, w);
    check("toda", Mode::Quantum, 1, w);
}

#[test]
fn spin3_commutes() {
    check("spin3", Mode::Classical, 2, TruncationWindow::unbounded());
    check("spin3", Mode::Quantum, 2, TruncationWindow::unbounded());
}

#[test]
fn spin4_commutes() {
    check("spin4", Mode::Classical, 1, TruncationWindow::unbounded());
    check("spin4", Mode::Quantum, 1, TruncationWindow::unbounded());
}

#[test]
fn spin5_commutes() {
    check("spin5", Mode::Classical, 1, TruncationWindow::unbounded());
}

#[test]
fn rank1_commutes() {
    check("rank1", Mode::Classical, 2, TruncationWindow::order(6));
    check("rank1", Mode::Quantum, 2, TruncationWindow::order(6));
}

fn normal(name: &str) -> (Vec<drh::DiffPoly>, Vec<drh::DiffPoly>, std::sync::Arc<drh::RingContext>) {
    let opts = PresetOptions { mode: Mode::Classical, d_max: 1, ..PresetOptions::default() };
    let spec = preset(name, &opts).unwrap();
    let h = generate(&spec).unwrap();
    let a = drh::recursion::normal_coordinates(&h).unwrap();
    let b = drh::recursion::normal_coordinates_from_generator(&spec.generator).unwrap();
    (a, b, h.ctx().clone())
}

fn parse(text: &str, c: &std::sync::Arc<drh::RingContext>) -> drh::DiffPoly {
    drh::ring::pretty::parse_pretty(text, c).unwrap()
}

#[test]
fn spin_normal_coordinates() {
    let (a, b, c) = normal("spin3");
    let want = vec![parse("u1", &c), parse("u2", &c)];
    assert_eq!(a, want);
    assert_eq!(b, want);

    let (a, b, c) = normal("spin4");
    let want = vec![parse("u1 + (1/96) eps^2 u3_2", &c), parse("u2", &c), parse("u3", &c)];
    assert_eq!(a, want);
    assert_eq!(b, want);

    let (a, b, c) = normal("spin5");
    let want = vec![
        parse("u1 + (1/60) eps^2 u3_2", &c),
        parse("u2 + (1/60) eps^2 u4_2", &c),
        parse("u3", &c),
        parse("u4", &c),
    ];
    assert_eq!(a, want);
    assert_eq!(b, want);
}

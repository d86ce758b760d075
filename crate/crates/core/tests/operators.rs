//! Formal adjoints checked by brute-force pairing on finite lattices.

use lattice_frames::calculus::LinDiffOp;
use lattice_frames::harness::pairing::{difference_pairing, mixed_pairing, random_operator};
use lattice_frames::{Error, Expr, Shift, Signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plane() -> (Signature, lattice_frames::FieldId) {
    let mut s = Signature::new(2);
    let u = s.dependent("u");
    (s, u)
}

#[test]
fn random_difference_operators_pair_exactly() {
    let (sig, u) = plane();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let op = random_operator(u, 2, 2, 0, 4, &mut rng);
        assert!(op.radius() <= 2);
        let r = difference_pairing("pairing", &op, u, &sig, 20, 4, &mut rng, 1e-12).unwrap();
        assert!(r.passed(), "seed {seed}: {r:?}");
    }
}

#[test]
fn random_mixed_operators_pair_to_quadrature_accuracy() {
    let mut sig = Signature::new(1).differential();
    let u = sig.dependent("u");
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let op = random_operator(u, 1, 2, 2, 4, &mut rng);
        let r = mixed_pairing("pairing", &op, u, &sig, 12, 4, &mut rng, 1e-6).unwrap();
        assert!(r.passed(), "seed {seed}: {r:?}");
    }
}

#[test]
fn trivial_operators() {
    let (sig, u) = plane();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zero = difference_pairing("zero", &LinDiffOp::zero(), u, &sig, 20, 2, &mut rng, 1e-12).unwrap();
    assert_eq!(zero.max_residual, 0.0);
    let s1 = LinDiffOp::zero().term(Expr::one(), Shift::unit(0), 0);
    let r = difference_pairing("s1", &s1, u, &sig, 20, 2, &mut rng, 1e-12).unwrap();
    assert!(r.passed());
}

#[test]
fn pairing_rejects_bad_setups() {
    let (sig, u) = plane();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let far = LinDiffOp::zero().term(Expr::one(), Shift::from_slice(&[0, 2]), 0);
    let e = difference_pairing("m", &far, u, &sig, 20, 1, &mut rng, 1e-12).unwrap_err();
    assert!(matches!(e, Error::MarginTooSmall { margin: 1, radius: 2 }));
    let derivative = LinDiffOp::zero().term(Expr::one(), Shift::ZERO, 1);
    assert!(difference_pairing("d", &derivative, u, &sig, 20, 2, &mut rng, 1e-12).is_err());
}

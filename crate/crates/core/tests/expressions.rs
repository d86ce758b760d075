//! Parsing, evaluation and the basic calculus on expressions, checked against
//! values computed independently in this file.

use std::collections::HashMap;

use lattice_frames::calculus::{decompose_variation, divergence, euler_lagrange, sum_by_parts, DivergenceTuple, LinDiffOp};
use lattice_frames::expr::{DerivRule, Env, MapEnv};
use lattice_frames::harness::{identity_check, SamplePlan};
use lattice_frames::{parse, Error, Expr, FieldVar, Shift, Signature};

fn lattice() -> Signature {
    let mut s = Signature::new(2);
    s.dependent("u");
    s
}

fn line() -> Signature {
    let mut s = Signature::new(1).differential();
    s.dependent("u");
    s.dependent("v");
    s.param("h");
    s
}

fn u_at(sig: &Signature, k: &[i32]) -> FieldVar {
    sig.var("u", 0, k).unwrap()
}

fn toda_point(sig: &Signature, vals: &[([i32; 2], f64)]) -> MapEnv {
    vals.iter().fold(MapEnv::new(), |env, (k, v)| env.with(u_at(sig, k), *v))
}

#[test]
fn toda_lagrangian_parses_and_evaluates() {
    let sig = lattice();
    let l = parse("ln(abs((u[1,0]-u[0,1])/(u[1,1]-u[0,0])))", &sig).unwrap();
    let env = toda_point(&sig, &[([0, 0], 0.0), ([1, 0], 1.0), ([0, 1], 2.0), ([1, 1], 4.0)]);
    let expected = ((1.0f64 - 2.0) / (4.0 - 0.0)).abs().ln();
    assert!((l.eval(&env).unwrap() - expected).abs() < 1e-15);
    assert!((expected + 1.386_294_4).abs() < 1e-7);
}

#[test]
fn atoms_and_constants() {
    let sig = lattice();
    let e = parse("u[0,0]", &sig).unwrap();
    assert_eq!(e, Expr::var(u_at(&sig, &[0, 0])));
    assert_eq!(parse("5", &sig).unwrap().eval(&MapEnv::new()).unwrap(), 5.0);
}

#[test]
fn scalar_lagrangian_parses_in_both_index_styles() {
    let sig = line();
    let a = parse("(d1 u[;0])^2 / (u[;1]-u[;0])", &sig).unwrap();
    let b = parse("(d1 u[0])^2/(u[1]-u[0])", &sig).unwrap();
    let env = MapEnv::new()
        .with(sig.var("u", 1, &[0]).unwrap(), 0.7)
        .with(sig.var("u", 0, &[0]).unwrap(), -0.2)
        .with(sig.var("u", 0, &[1]).unwrap(), 1.1);
    let expected = 0.7f64.powi(2) / (1.1 + 0.2);
    assert!((a.eval(&env).unwrap() - expected).abs() < 1e-15);
    assert_eq!(a.eval(&env).unwrap(), b.eval(&env).unwrap());
}

#[test]
fn modulus_of_a_pair() {
    let sig = line();
    let e = parse("sqrt(u[0]^2+v[0]^2)", &sig).unwrap();
    let env = MapEnv::new().with(sig.var("u", 0, &[0]).unwrap(), 3.0).with(sig.var("v", 0, &[0]).unwrap(), 4.0);
    assert_eq!(e.eval(&env).unwrap(), 5.0);
}

#[test]
fn parse_errors_are_classified() {
    let sig = lattice();
    assert!(matches!(parse("u[0,0] +", &sig), Err(Error::Syntax { .. })));
    assert!(matches!(parse("w[0,0]", &sig), Err(Error::UnknownField(_))));
    assert!(matches!(parse("u[0]", &sig), Err(Error::IndexArity { expected: 2, found: 1 })));
    let env = MapEnv::new();
    assert!(matches!(parse("u[0,0]", &sig).unwrap().eval(&env), Err(Error::MissingVariable(_))));
}

#[test]
fn partials() {
    let sig = lattice();
    let e = parse("u[0,0]*u[1,0]", &sig).unwrap();
    assert_eq!(e.partial(&u_at(&sig, &[1, 0])), Expr::var(u_at(&sig, &[0, 0])));
    assert!(Expr::num(3.0).partial(&u_at(&sig, &[0, 0])).is_zero());

    let l = parse("ln(u[1,0]-u[0,1]) - ln(u[1,1]-u[0,0])", &sig).unwrap();
    let d = l.partial(&u_at(&sig, &[1, 1]));
    let p = |u11: f64| toda_point(&sig, &[([0, 0], 0.3), ([1, 0], 1.7), ([0, 1], -0.4), ([1, 1], u11)]);
    let u11 = 2.2;
    let hand = -1.0 / (u11 - 0.3);
    let step = 1e-5;
    let fd = (l.eval(&p(u11 + step)).unwrap() - l.eval(&p(u11 - step)).unwrap()) / (2.0 * step);
    assert!((d.eval(&p(u11)).unwrap() - hand).abs() < 1e-14);
    assert!((fd - hand).abs() < 1e-7);
}

#[test]
fn shifts() {
    let sig = lattice();
    let u00 = Expr::var(u_at(&sig, &[0, 0]));
    assert_eq!(u00.shift(Shift::from_slice(&[1, 0]), &sig).unwrap(), Expr::var(u_at(&sig, &[1, 0])));

    // λ shifted once in the first direction.
    let lambda = parse("(u[0,1]-u[0,0])/(u[1,1]-u[0,0])", &sig).unwrap();
    let shifted = lambda.shift(Shift::from_slice(&[1, 0]), &sig).unwrap();
    let expected = parse("(u[1,1]-u[1,0])/(u[2,1]-u[1,0])", &sig).unwrap();
    let plan = SamplePlan::default().tol(1e-14);
    assert!(identity_check("shift-lambda", &shifted, &expected, &sig, &plan).passed());

    let alt = Expr::alt() * u00;
    assert_eq!(alt.shift(Shift::from_slice(&[1, 0]), &sig).unwrap(), -(Expr::alt() * Expr::var(u_at(&sig, &[1, 0]))));
    assert_eq!(alt.shift(Shift::from_slice(&[1, 1]), &sig).unwrap(), Expr::alt() * Expr::var(u_at(&sig, &[1, 1])));
    assert!(matches!(
        Expr::var(u_at(&sig, &[0, 0])).shift(Shift::from_slice(&[9, 0]), &sig),
        Err(Error::ShiftRadius { .. })
    ));
}

#[test]
fn total_derivatives() {
    let sig = line();
    assert_eq!(Expr::x().total_derivative(&sig).unwrap(), Expr::one());
    let u = Expr::var(sig.var("u", 0, &[0]).unwrap());
    assert_eq!(u.total_derivative(&sig).unwrap(), Expr::var(sig.var("u", 1, &[0]).unwrap()));
    let top = Expr::var(sig.var("u", 4, &[0]).unwrap());
    assert!(matches!(top.total_derivative(&sig), Err(Error::DerivativeCap { .. })));
}

#[test]
fn substitution() {
    let sig = lattice();
    let kappa = parse("(u[1,0]-u[0,0])/(u[1,1]-u[0,0])", &sig).unwrap();
    // Invert κ for u[1,0] and substitute back: the identity on u[1,0].
    let inverse = parse("k*(u[1,1]-u[0,0])+u[0,0]", &{
        let mut s = sig.clone();
        s.param("k");
        s
    })
    .unwrap();
    let rules = HashMap::from([(u_at(&sig, &[1, 0]), inverse)]);
    let back = kappa.substitute(&rules);
    let env = toda_point(&sig, &[([0, 0], 0.2), ([1, 1], 1.9)]).with_param("k", 0.37);
    assert!((back.eval(&env).unwrap() - 0.37).abs() < 1e-15);

    assert_eq!(kappa.substitute(&HashMap::new()), kappa);

    let on_section = HashMap::from([(u_at(&sig, &[0, 0]), Expr::zero()), (u_at(&sig, &[1, 1]), Expr::one())]);
    let reduced = kappa.substitute(&on_section);
    let env = toda_point(&sig, &[([1, 0], -0.83)]);
    assert!((reduced.eval(&env).unwrap() + 0.83).abs() < 1e-15);

    // Simultaneous: u00 → u10 and u10 → u00 swap rather than chain.
    let swap = HashMap::from([
        (u_at(&sig, &[0, 0]), Expr::var(u_at(&sig, &[1, 0]))),
        (u_at(&sig, &[1, 0]), Expr::var(u_at(&sig, &[0, 0]))),
    ]);
    let e = parse("u[0,0] - 2*u[1,0]", &sig).unwrap().substitute(&swap);
    assert_eq!(e.eval(&toda_point(&sig, &[([0, 0], 1.0), ([1, 0], 10.0)])).unwrap(), 10.0 - 2.0);
}

#[test]
fn forward_difference_and_divergence() {
    let sig = lattice();
    let u00 = Expr::var(u_at(&sig, &[0, 0]));
    let op = LinDiffOp::zero().term(Expr::one(), Shift::from_slice(&[1, 0]), 0).term(Expr::num(-1.0), Shift::ZERO, 0);
    let applied = op.apply(&u00, &DerivRule::standard(&sig), &sig).unwrap();
    let env = toda_point(&sig, &[([0, 0], 0.25), ([1, 0], 2.0)]);
    assert_eq!(applied.eval(&env).unwrap(), 1.75);

    let t = DivergenceTuple { a0: None, comps: vec![u00, Expr::zero()] };
    assert_eq!(divergence(&t, &sig).unwrap().eval(&env).unwrap(), 1.75);
}

#[test]
fn adjoint_of_scaled_shift() {
    let sig = lattice();
    let op = LinDiffOp::zero().term(Expr::num(2.5), Shift::from_slice(&[1, 0]), 0);
    let adj = op.adjoint(&DerivRule::standard(&sig), &sig).unwrap();
    assert_eq!(adj.terms.len(), 1);
    assert_eq!(adj.terms[0].shift, Shift::from_slice(&[-1, 0]));
    assert_eq!(adj.terms[0].coeff.as_const(), Some(2.5));
}

#[test]
fn euler_lagrange_examples() {
    let sig = lattice();
    let l = parse("u[0,0]*u[1,0]", &sig).unwrap();
    let e = euler_lagrange(&l, sig.field("u").unwrap(), &sig).unwrap();
    let expected = parse("u[1,0]+u[-1,0]", &sig).unwrap();
    assert!(identity_check("two-term", &e, &expected, &sig, &SamplePlan::default().tol(1e-15)).passed());

    let toda = parse("ln(u[1,0]-u[0,1]) - ln(u[1,1]-u[0,0])", &sig).unwrap();
    let e = euler_lagrange(&toda, sig.field("u").unwrap(), &sig).unwrap();
    let env = toda_point(&sig, &[([0, 0], 0.0), ([1, 1], 4.0), ([-1, 1], 2.0), ([1, -1], 1.0), ([-1, -1], -1.0)]);
    // ∂L/∂u00 + S₋₁,₀ ∂L/∂u10 + S₀,₋₁ ∂L/∂u01 + S₋₁,₋₁ ∂L/∂u11 by hand.
    let hand = 1.0 / (4.0 - 0.0) + 1.0 / (0.0 - 2.0) - 1.0 / (1.0 - 0.0) - 1.0 / (0.0 + 1.0);
    assert_eq!(hand, -2.25);
    assert!((e.eval(&env).unwrap() - hand).abs() < 1e-14);

    assert!(euler_lagrange(&Expr::num(7.0), sig.field("u").unwrap(), &sig).unwrap().is_zero());
}

#[test]
fn summation_by_parts_examples() {
    let sig = lattice();
    let u00 = Expr::var(u_at(&sig, &[0, 0]));
    let zero = sum_by_parts(&u00, &u00, Shift::ZERO, &sig).unwrap();
    assert!(zero.comps.iter().all(Expr::is_zero));

    let plan = SamplePlan::default().tol(1e-13);
    for j in [[1, 0], [1, 1], [-2, 1], [0, -3]] {
        let f = parse("u[0,0]^2 + u[1,0]", &sig).unwrap();
        let g = parse("u[0,1]*u[0,0]", &sig).unwrap();
        let j = Shift::from_slice(&j);
        let b = sum_by_parts(&f, &g, j, &sig).unwrap();
        let lhs = &f * g.shift(j, &sig).unwrap() - f.shift(-j, &sig).unwrap() * &g;
        let rhs = divergence(&b, &sig).unwrap();
        assert!(identity_check("parts", &lhs, &rhs, &sig, &plan).passed(), "{j:?}");
    }
}

#[test]
fn variation_splits_into_el_and_boundary() {
    let sig = lattice();
    let u = sig.field("u").unwrap();
    let slot = sig.variation_of(u).unwrap();
    let l = parse("u[1,0]^2", &sig).unwrap();
    let split = decompose_variation(&l, &sig).unwrap();
    let two_u = parse("2*u[0,0]", &sig).unwrap();
    let plan = SamplePlan::default().tol(1e-14);
    assert!(identity_check("el", &split.coeffs[0], &two_u, &sig, &plan).passed());

    // dL/dt = E·u′ + Div(A).
    let w = Expr::var(FieldVar::new(slot, 0, Shift::ZERO));
    let rhs = &split.coeffs[0] * w + divergence(&split.boundary, &sig).unwrap();
    assert!(identity_check("variation", &l.tangent(&sig), &rhs, &sig, &plan).passed());

    let split = decompose_variation(&Expr::num(3.0), &sig).unwrap();
    assert!(split.coeffs[0].is_zero());
    assert!(split.boundary.comps.iter().all(Expr::is_zero));
}

mod properties {
    //! Random expressions over one continuous and one discrete direction.

    use super::*;
    use lattice_frames::FieldId;
    use proptest::prelude::*;

    /// Deterministic pseudo-random values in [-1, 1] for every variable.
    struct HashEnv(u64);

    impl Env for HashEnv {
        fn field(&self, v: &FieldVar) -> Option<f64> {
            let mut h = self.0 ^ 0x9e37_79b9_7f4a_7c15;
            for part in [v.field.0 as i64, v.order as i64, v.shift.get(0) as i64] {
                h = (h ^ part as u64).wrapping_mul(0x1000_0000_01b3).rotate_left(17);
            }
            Some(((h >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
        }
        fn x(&self) -> Option<f64> {
            Some(0.37 + (self.0 % 7) as f64 * 0.1)
        }
        fn param(&self, _: &str) -> Option<f64> {
            Some(0.8)
        }
    }

    /// Overrides one variable of an environment.
    struct Nudged<'a> {
        base: &'a HashEnv,
        var: FieldVar,
        value: f64,
    }

    impl Env for Nudged<'_> {
        fn field(&self, v: &FieldVar) -> Option<f64> {
            if *v == self.var { Some(self.value) } else { self.base.field(v) }
        }
        fn x(&self) -> Option<f64> {
            self.base.x()
        }
        fn param(&self, p: &str) -> Option<f64> {
            self.base.param(p)
        }
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        prop_oneof![
            (0u16..2, 0u8..2, -2i32..=2).prop_map(|(f, j, k)| Expr::var(FieldVar::new(FieldId(f), j, Shift::from_slice(&[k])))),
            (-3i32..=3).prop_map(|c| Expr::num(c as f64 * 0.5)),
            Just(Expr::x()),
            Just(Expr::param("h")),
        ]
    }

    /// Smooth, bounded-below denominators keep every point admissible.
    fn expr() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(3, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.quot(&(b.pow(2) + 1.0))),
                (inner.clone(), 2i32..4).prop_map(|(a, n)| a.pow(n)),
                inner.clone().prop_map(|a| (a.pow(2) + 1.0).sqrt()),
                inner.clone().prop_map(|a| (a.pow(2) + 0.5).ln_abs()),
                inner.prop_map(|a| -a),
            ]
        })
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn print_parse_round_trip(e in expr(), seed in any::<u64>()) {
            let sig = line();
            let back = parse(&e.print(&sig), &sig).unwrap();
            let env = HashEnv(seed);
            let (a, b) = (e.eval(&env).unwrap(), back.eval(&env).unwrap());
            prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
        }

        #[test]
        fn operations_are_linear(a in expr(), b in expr(), k in -2i32..=2, seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let sum = &a + &b;
            let s = Shift::from_slice(&[k]);
            let v = FieldVar::new(FieldId(0), 0, Shift::ZERO);
            let pairs = [
                (sum.total_derivative(&sig).unwrap(), a.total_derivative(&sig).unwrap() + b.total_derivative(&sig).unwrap()),
                (sum.shift(s, &sig).unwrap(), a.shift(s, &sig).unwrap() + b.shift(s, &sig).unwrap()),
                (sum.partial(&v), a.partial(&v) + b.partial(&v)),
            ];
            for (l, r) in pairs {
                let (x, y) = (l.eval(&env).unwrap(), r.eval(&env).unwrap());
                prop_assert!(close(x, y, 1e-10), "{} vs {}", x, y);
            }
        }

        #[test]
        fn product_rule(a in expr(), b in expr(), seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let lhs = (&a * &b).total_derivative(&sig).unwrap();
            let rhs = a.total_derivative(&sig).unwrap() * &b + &a * b.total_derivative(&sig).unwrap();
            let (x, y) = (lhs.eval(&env).unwrap(), rhs.eval(&env).unwrap());
            prop_assert!(close(x, y, 1e-10), "{} vs {}", x, y);
        }

        #[test]
        fn shift_commutes_with_derivative(e in expr(), k in -2i32..=2, seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let s = Shift::from_slice(&[k]);
            let lhs = e.total_derivative(&sig).unwrap().shift(s, &sig).unwrap();
            let rhs = e.shift(s, &sig).unwrap().total_derivative(&sig).unwrap();
            let (x, y) = (lhs.eval(&env).unwrap(), rhs.eval(&env).unwrap());
            prop_assert!(close(x, y, 1e-12), "{} vs {}", x, y);
        }

        #[test]
        fn shifts_compose(e in expr(), i in -2i32..=2, j in -2i32..=2, seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let twice = e.shift(Shift::from_slice(&[i]), &sig).unwrap().shift(Shift::from_slice(&[j]), &sig).unwrap();
            let once = e.shift(Shift::from_slice(&[i + j]), &sig).unwrap();
            prop_assert_eq!(twice.eval(&env).unwrap(), once.eval(&env).unwrap());
        }

        #[test]
        fn partial_matches_central_difference(e in expr(), seed in any::<u64>()) {
            let env = HashEnv(seed);
            for v in e.vars() {
                let at = env.field(&v).unwrap();
                let step = 1e-5;
                let f = |value| e.eval(&Nudged { base: &env, var: v, value }).unwrap();
                let fd = (f(at + step) - f(at - step)) / (2.0 * step);
                let exact = e.partial(&v).eval(&env).unwrap();
                prop_assert!(close(fd, exact, 1e-6), "{:?}: fd {} exact {}", v, fd, exact);
            }
        }
        #[test]
        fn euler_annihilates_divergences(a0 in expr(), a1 in expr(), seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let t = DivergenceTuple { a0: Some(a0), comps: vec![a1] };
            let div = divergence(&t, &sig).unwrap();
            for f in sig.dependents() {
                let e = euler_lagrange(&div, f, &sig).unwrap();
                let scale: f64 = e.vars().iter().map(|v| div.partial(v).eval(&env).unwrap().abs()).sum();
                let r = e.eval(&env).unwrap();
                prop_assert!(r.abs() <= 1e-10 * (1.0 + scale), "residual {} scale {}", r, scale);
            }
        }

        #[test]
        fn euler_ignores_shifts(l in expr(), k in -2i32..=2, seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let u = sig.field("u").unwrap();
            let a = euler_lagrange(&l, u, &sig).unwrap();
            let b = euler_lagrange(&l.shift(Shift::from_slice(&[k]), &sig).unwrap(), u, &sig).unwrap();
            let (x, y) = (a.eval(&env).unwrap(), b.eval(&env).unwrap());
            prop_assert!(close(x, y, 1e-10), "{} vs {}", x, y);
        }

        #[test]
        fn summation_by_parts_telescopes(f in expr(), g in expr(), j in -3i32..=3, seed in any::<u64>()) {
            let sig = line();
            let env = HashEnv(seed);
            let j = Shift::from_slice(&[j]);
            let b = sum_by_parts(&f, &g, j, &sig).unwrap();
            let lhs = &f * g.shift(j, &sig).unwrap() - f.shift(-j, &sig).unwrap() * &g;
            let (x, y) = (lhs.eval(&env).unwrap(), divergence(&b, &sig).unwrap().eval(&env).unwrap());
            prop_assert!(close(x, y, 1e-10), "{} vs {}", x, y);
        }

        #[test]
        fn adjoint_is_an_involution(op_seed in any::<u64>(), f in expr(), seed in any::<u64>()) {
            use lattice_frames::harness::pairing::random_operator;
            use rand::SeedableRng;
            let sig = line();
            let env = HashEnv(seed);
            let rule = DerivRule::standard(&sig);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(op_seed);
            let op = random_operator(sig.field("u").unwrap(), 1, 1, 1, 3, &mut rng);
            let back = op.adjoint(&rule, &sig).unwrap().adjoint(&rule, &sig).unwrap();
            let f = f.quot(&(Expr::var(FieldVar::new(FieldId(1), 0, Shift::ZERO)).pow(2) + 1.0));
            let (x, y) = (op.apply(&f, &rule, &sig).unwrap().eval(&env).unwrap(), back.apply(&f, &rule, &sig).unwrap().eval(&env).unwrap());
            prop_assert!(close(x, y, 1e-10), "{} vs {}", x, y);
        }
    }
}

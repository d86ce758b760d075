//! The three worked examples end to end: frames, recurrences, invariant
//! equations, conservation laws and the NLS integration.

use lattice_frames::catalog::suites::integration_reports;
use lattice_frames::catalog::{example, initial_data, nls_monitors, nls_system, run_suite, Example, EXAMPLES, SPACING};
use lattice_frames::expr::MapEnv;
use lattice_frames::group::Generator;
use lattice_frames::harness::integrate::{rk4, zero_state, Monitor};
use lattice_frames::harness::{identity_check, SamplePlan};
use lattice_frames::{parse, Error, Expr, FieldVar, Shift};

fn plan(ex: &Example) -> SamplePlan {
    ex.problem.inv.frame.plan(&ex.plan(&SamplePlan::default()))
}

fn same(ex: &Example, id: &str, a: &Expr, b: &Expr, tol: f64) {
    let r = identity_check(id, a, b, ex.sig(), &plan(ex).tol(tol));
    assert!(r.passed(), "{r:?}");
}

fn e(ex: &Example, text: &str) -> Expr {
    parse(text, ex.sig()).unwrap()
}

#[test]
fn every_suite_passes() {
    for name in EXAMPLES {
        let ex = example(name).unwrap();
        let reports = run_suite(&ex, "all", &SamplePlan::default(), None).unwrap();
        assert!(reports.len() >= 30, "{name}: only {} checks", reports.len());
        for r in &reports {
            assert!(r.passed(), "{r:?}");
        }
        assert!(reports.iter().any(|r| r.check_id.contains("negative-control")));
    }
}

#[test]
fn unknown_example_is_a_usage_error() {
    let err = example("kdv").unwrap_err();
    assert!(matches!(err, Error::NotRegistered { .. }));
    assert!(err.is_usage());
}

#[test]
fn reports_are_deterministic() {
    let ex = example("ex81").unwrap();
    let base = SamplePlan::default().seed(42);
    let a = serde_json::to_string(&run_suite(&ex, "all", &base, None).unwrap()).unwrap();
    let b = serde_json::to_string(&run_suite(&ex, "all", &base, None).unwrap()).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&run_suite(&ex, "all", &base.seed(43), None).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn toda_frame() {
    let ex = example("toda").unwrap();
    let f = &ex.problem.inv.frame;
    same(&ex, "a", &f.params[0], &e(&ex, "-u[0,0]/(u[1,1]-u[0,0])"), 1e-14);
    same(&ex, "b", &f.params[1], &e(&ex, "1/(u[1,1]-u[0,0])"), 1e-14);
    for (i, j) in [(1, 0), (0, 1), (2, 1), (-1, 2)] {
        let u = e(&ex, &format!("u[{i},{j}]"));
        let expected = e(&ex, &format!("(u[{i},{j}]-u[0,0])/(u[1,1]-u[0,0])"));
        same(&ex, "iota", &f.invariantize(&u).unwrap(), &expected, 1e-13);
    }
    let u00 = f.invariantize(&e(&ex, "u[0,0]")).unwrap();
    assert_eq!(u00.eval(&MapEnv::new().with(ex.sig().var("u", 0, &[1, 1]).unwrap(), 3.0).with(ex.sig().var("u", 0, &[0, 0]).unwrap(), 0.5)).unwrap(), 0.0);
    // The time-derivative slot.
    let slot = ex.sig().variation_of(ex.sig().field("u").unwrap()).unwrap();
    let sigma = f.invariantize(&Expr::var(FieldVar::new(slot, 0, Shift::ZERO))).unwrap();
    same(&ex, "sigma", &sigma, &e(&ex, "u_t[0,0]/(u[1,1]-u[0,0])"), 1e-14);
}

#[test]
fn toda_recurrence() {
    let ex = example("toda").unwrap();
    let inv = &ex.problem.inv;
    let u21 = inv.iota_var(&ex.sig().var("u", 0, &[2, 1]).unwrap()).unwrap();
    let hand = e(&ex, "k[0,0] + (1-k[0,0])/l[1,0]");
    same(&ex, "u21", &inv.expand(&u21).unwrap(), &inv.expand(&hand).unwrap(), 1e-12);
    let u11 = inv.iota_var(&ex.sig().var("u", 0, &[1, 1]).unwrap()).unwrap();
    same(&ex, "u11", &inv.expand(&u11).unwrap(), &Expr::one(), 1e-13);
}

#[test]
fn toda_maurer_cartan_is_invariant() {
    let ex = example("toda").unwrap();
    let f = &ex.problem.inv.frame;
    let r = f.verify_maurer_cartan(&plan(&ex).tol(1e-8), 20).unwrap();
    assert!(r.passed(), "{r:?}");
    assert_eq!(f.maurer_cartan(Shift::unit(0)).unwrap().len(), 2);
}

#[test]
fn scalar_frame_pins_x_and_u() {
    let ex = example("ex81").unwrap();
    let f = &ex.problem.inv.frame;
    assert_eq!(f.iota_x().unwrap().as_const(), Some(1.0));
    assert_eq!(f.iota_exact(&e(&ex, "u[0]")).unwrap().as_const(), Some(0.0));
    assert_eq!(f.iota_exact(&Expr::x()).unwrap().as_const(), Some(1.0));
    same(&ex, "a", &f.params[0], &e(&ex, "-u[0]/x"), 1e-14);
    same(&ex, "b", &f.params[1], &e(&ex, "1/x"), 1e-14);
    assert!(f.is_projectable());
}

#[test]
fn scalar_recurrence_and_syzygy() {
    let ex = example("ex81").unwrap();
    let inv = &ex.problem.inv;
    // ι(u_{0;1}) = κ¹ + κ²_{1;0} + κ² by the syzygy.
    let lhs = inv.iota_var(&ex.sig().var("u", 1, &[1]).unwrap()).unwrap();
    let rhs = e(&ex, "k1[0] + d1 k2[0] + k2[0]");
    same(&ex, "shift-derivative", &inv.expand(&lhs).unwrap(), &inv.expand(&rhs).unwrap(), 1e-10);
}

#[test]
fn kappa_euler_operators() {
    let toda = example("toda").unwrap();
    let ek = toda.problem.euler_kappa().unwrap();
    same(&toda, "e-kappa", &ek[0], &e(&toda, "1/(k[0,0]-l[0,0])"), 1e-14);
    same(&toda, "e-lambda", &ek[1], &e(&toda, "-1/(k[0,0]-l[0,0])"), 1e-14);

    let ex = example("ex81").unwrap();
    let ek = ex.problem.euler_kappa().unwrap();
    same(&ex, "e-k1", &ek[0], &e(&ex, "2*k1[0]/k2[0]"), 1e-14);
    same(&ex, "e-k2", &ek[1], &e(&ex, "-(k1[0]/k2[0])^2"), 1e-14);
}

#[test]
fn rotation_h_starts_with_identity() {
    let ex = example("nls").unwrap();
    let h = ex.problem.inv.derive_h().unwrap();
    let sig = ex.sig();
    let row = &h[0];
    let id = row[0].normalized(sig);
    assert_eq!(id.terms.len(), 1);
    assert!(id.terms[0].shift.is_zero() && id.terms[0].order == 0);
    same(&ex, "one", &id.terms[0].coeff, &Expr::one(), 1e-13);
    assert!(row[1].normalized(sig).terms.is_empty());
}

#[test]
fn nls_invariant_equations_match_stored() {
    let ex = example("nls").unwrap();
    for r in ex.problem.verify_invariant_el(&ex.stored_el, &ex.plan(&SamplePlan::default())).unwrap() {
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn noether_edge_cases() {
    let ex = example("toda").unwrap();
    let p = &ex.problem;
    let trivial = Generator::new("zero", Expr::zero(), vec![Expr::zero()]);
    let law = p.noether_original(&trivial, &plan(&ex)).unwrap();
    for c in law.components.comps.iter().chain(&law.components.a0) {
        same(&ex, "zero", c, &Expr::zero(), 0.0);
    }
    // u² only leaves L invariant up to a divergence and is refused.
    let v3 = &ex.symmetries[2];
    assert!(matches!(p.noether_original(v3, &plan(&ex)), Err(Error::NotSymmetry(_))));
}

#[test]
fn scalar_law_needs_lagrangian_term() {
    let ex = example("ex81").unwrap();
    let p = &ex.problem;
    let full = p.noether_invariant_with(1, true).unwrap();
    let cut = p.noether_invariant_with(1, false).unwrap();
    let pl = plan(&ex);
    assert!(p.verify_invariant_law(1, &full, &pl).unwrap().passed());
    let broken = p.verify_invariant_law(1, &cut, &pl).unwrap();
    assert!(broken.max_residual > 1e-3, "{broken:?}");
}

#[test]
fn integrator_basics() {
    let ex = example("nls").unwrap();
    let sys = nls_system(&ex).unwrap();
    let params = initial_data(16, SPACING).params;
    let zero = rk4(&sys, zero_state(2, 16, params), 0.5, 1e-2, &[]).unwrap();
    assert!(zero.last.fields.iter().flatten().all(|&v| v == 0.0));

    let constant = Monitor::new("zero", &Expr::zero()).unwrap();
    let t = rk4(&sys, initial_data(16, SPACING), 0.1, 1e-3, &[constant]).unwrap();
    assert_eq!(t.drift(0), 0.0);

    let unstable = rk4(&sys, initial_data(16, SPACING), 5.0, 0.2, &nls_monitors(&ex).unwrap());
    assert!(matches!(unstable, Err(Error::BlowUp { .. })));
}

#[test]
fn plane_wave_norm_is_conserved() {
    let ex = example("nls").unwrap();
    let sys = nls_system(&ex).unwrap();
    let n = 16;
    let mut state = initial_data(n, SPACING);
    let scale = (n as f64).sqrt();
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        state.fields[0][k] = t.cos() / scale;
        state.fields[1][k] = t.sin() / scale;
    }
    let norm = Monitor::new("norm", &e(&ex, "(u[0]^2+v[0]^2)/2")).unwrap();
    let t = rk4(&sys, state, 1.0, 1e-3, &[norm]).unwrap();
    assert!(t.drift(0) < 1e-8, "{}", t.drift(0));
}

#[test]
fn modulated_data_conserves_both_sums_at_fourth_order() {
    let ex = example("nls").unwrap();
    let reports = integration_reports(&ex, 1).unwrap();
    assert_eq!(reports.len(), 4);
    for r in &reports {
        assert!(r.passed(), "{r:?}");
    }
}

//! Named verification suites over a catalog example. Every suite ends with a
//! deliberately perturbed case that has to fail for the suite to pass.

use super::{initial_data, nls_monitors, nls_system, Example, SPACING};
use crate::calculus::{divergence, euler_lagrange};
use crate::error::{Error, Result};
use crate::expr::{Expr, FieldVar, Shift};
use crate::group::{check_variational_symmetry, pairs_check, ActionChecks, SymmetryClass};
use crate::harness::integrate::rk4;
use crate::harness::{identity_check, Report, SamplePlan};
use crate::variational::{ConservationLaw, LawForm};

pub const SUITES: [&str; 7] = ["syzygy", "invariant-el", "noether", "equivariance", "frame", "divergence", "all"];

/// Tolerances applied when the caller does not override them.
pub mod tol {
    pub const SYZYGY: f64 = 1e-10;
    pub const IDENTITY: f64 = 1e-9;
    pub const SYMMETRY: f64 = 1e-10;
    pub const FRAME: f64 = 1e-8;
    /// Residual a perturbed case must exceed.
    pub const NEGATIVE: f64 = 1e-3;
    pub const NORM_DRIFT: f64 = 1e-8;
    pub const ENERGY_DRIFT: f64 = 1e-6;
    pub const RATE_RATIO: (f64, f64) = (12.0, 20.0);
}

/// Group elements per invariance check.
pub const GROUP_SAMPLES: usize = 20;

/// Size of the perturbation in negative controls.
pub const PERTURBATION: f64 = 1e-3;

struct Ctx<'a> {
    ex: &'a Example,
    base: SamplePlan,
    tol: Option<f64>,
    out: Vec<Report>,
}

impl Ctx<'_> {
    fn plan(&self, default_tol: f64) -> SamplePlan {
        self.base.clone().tol(self.tol.unwrap_or(default_tol))
    }

    fn push(&mut self, mut r: Report) {
        r.check_id = format!("{}/{}", self.ex.name, r.check_id);
        self.out.push(r);
    }

    fn push_all(&mut self, rs: Vec<Report>) {
        for r in rs {
            self.push(r);
        }
    }

    /// Records an error as a failing report instead of aborting the suite.
    fn attempt(&mut self, id: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        let seed = self.base.seed;
        if let Err(e) = f(self) {
            self.push(Report::failed(id, seed, e.to_string()));
        }
    }
}

pub fn run_suite(ex: &Example, suite: &str, base: &SamplePlan, tol: Option<f64>) -> Result<Vec<Report>> {
    let mut ctx = Ctx { ex, base: ex.plan(base), tol, out: Vec::new() };
    match suite {
        "syzygy" => syzygy(&mut ctx),
        "invariant-el" => invariant_el(&mut ctx),
        "noether" => noether(&mut ctx),
        "equivariance" => equivariance(&mut ctx),
        "frame" => frame(&mut ctx),
        "divergence" => divergence_suite(&mut ctx),
        "all" => {
            frame(&mut ctx);
            syzygy(&mut ctx);
            invariant_el(&mut ctx);
            noether(&mut ctx);
            equivariance(&mut ctx);
            divergence_suite(&mut ctx);
        }
        _ => return Err(Error::NotRegistered { kind: "suite", name: suite.to_string() }),
    }
    Ok(ctx.out)
}

fn perturbed(e: &Expr) -> Expr {
    e + Expr::num(PERTURBATION)
}

fn syzygy(c: &mut Ctx) {
    let ex = c.ex;
    let inv = &ex.problem.inv;
    for s in &inv.syzygies {
        c.attempt("syzygy", |c| {
            let r = inv.verify_syzygy(s, &c.plan(tol::SYZYGY))?;
            c.push(r);
            Ok(())
        });
    }
    c.attempt("syzygy/derived-operators", |c| {
        let derived = inv.derive_h()?;
        let plan = c.plan(tol::IDENTITY);
        c.push(inv.compare_h(&derived, &ex.problem.h, &plan)?);
        let mut r = inv.verify_differential_syzygies(&derived, &plan)?;
        r.check_id.push_str("/derived");
        c.push(r);
        c.push(inv.verify_differential_syzygies(&ex.problem.h, &plan)?);
        Ok(())
    });
    c.attempt("syzygy/negative-control", |c| {
        let s = inv.syzygies.first().ok_or_else(|| Error::Invalid("no syzygy".into()))?;
        let plan = inv.frame.plan(&c.plan(tol::SYZYGY));
        let lhs = inv.expand(&s.lhs)?;
        let rhs = perturbed(&inv.expand(&s.rhs)?);
        c.push(identity_check("syzygy/negative-control", &lhs, &rhs, ex.sig(), &plan).expect_failure(plan.tol));
        Ok(())
    });
}

fn invariant_el(c: &mut Ctx) {
    let p = &c.ex.problem;
    c.attempt("lagrangian/invariant-form", |c| {
        let r = p.verify_lagrangian(&c.plan(tol::IDENTITY))?;
        c.push(r);
        Ok(())
    });
    c.attempt("invariant-el", |c| {
        let rs = p.verify_invariant_el(&c.ex.stored_el, &c.plan(tol::IDENTITY))?;
        c.push_all(rs);
        Ok(())
    });
    c.attempt("invariant-el/split", |c| {
        let r = p.verify_adjoint_split(&c.plan(tol::IDENTITY))?;
        c.push(r);
        Ok(())
    });
    c.attempt("invariant-el/negative-control", |c| {
        let plan = c.plan(tol::IDENTITY);
        let computed = p.invariant_euler_lagrange()?;
        let lhs = p.inv.expand(&computed[0])?;
        let rhs = perturbed(&p.inv.expand(&c.ex.stored_el[0])?);
        let r = identity_check("invariant-el/negative-control", &lhs, &rhs, p.sig(), &p.inv.frame.plan(&plan));
        c.push(r.expect_failure(plan.tol));
        Ok(())
    });
}

/// Adds ε·u to the last component, which changes the
/// divergence by a non-zero amount.
fn perturb_law(law: &ConservationLaw, ex: &Example) -> ConservationLaw {
    let u = ex.sig().dependents()[0];
    let bump = Expr::var(FieldVar::new(u, 0, Shift::ZERO)) * PERTURBATION;
    let mut out = law.clone();
    if let Some(last) = out.components.comps.last_mut() {
        *last = &*last + bump;
    }
    out
}

fn noether(c: &mut Ctx) {
    let ex = c.ex;
    let p = &ex.problem;
    for v in &ex.symmetries {
        c.attempt(&format!("symmetry/{}", v.name), |c| {
            let plan = p.inv.frame.plan(&c.plan(tol::SYMMETRY));
            let (class, report) = check_variational_symmetry(&p.lagrangian, v, p.sig(), &plan)?;
            let note = format!("{class:?}").to_lowercase();
            c.push(report.with_note(note));
            if class == SymmetryClass::Invariant {
                let law = p.noether_original(v, &plan)?;
                let r = p.verify_original_law(v, &law, &c.plan(tol::IDENTITY))?;
                c.push(r);
            }
            Ok(())
        });
    }
    for r in 0..ex.n_action() {
        let name = &ex.symmetries[r].name;
        c.attempt(&format!("noether/{name}"), |c| {
            let plan = c.plan(tol::IDENTITY);
            let law = p.noether_invariant(r)?;
            c.push(p.verify_invariant_law(r, &law, &plan)?);
            c.push_all(p.verify_forms(r, &plan)?);
            for stored in ex.laws_for(r) {
                let mut rep = match stored.form {
                    LawForm::Original => {
                        let l = ConservationLaw { generator: name.clone(), form: stored.form, components: stored.components.clone() };
                        p.verify_original_law(&ex.symmetries[r], &l, &plan)?
                    }
                    _ => {
                        let l = ConservationLaw { generator: name.clone(), form: stored.form, components: stored.components.clone() };
                        p.verify_invariant_law(r, &l, &plan)?
                    }
                };
                rep.check_id.push_str("/stored");
                c.push(rep);
            }
            Ok(())
        });
    }
    c.attempt("noether/negative-control", |c| {
        let plan = c.plan(tol::IDENTITY);
        let moving = (0..ex.n_action()).rev().find(|&r| !ex.symmetries[r].xi.is_zero());
        let rep = match moving {
            Some(r) => {
                let law = p.noether_invariant_with(r, false)?;
                let mut rep = p.verify_invariant_law(r, &law, &plan)?;
                rep.check_id = format!("noether/{}/without-lagrangian-term", ex.symmetries[r].name);
                rep
            }
            None => {
                let law = perturb_law(&p.noether_invariant(0)?, ex);
                let mut rep = p.verify_invariant_law(0, &law, &plan)?;
                rep.check_id = "noether/negative-control".into();
                rep
            }
        };
        c.push(rep.expect_failure(tol::NEGATIVE));
        Ok(())
    });
    if ex.name == "nls" {
        c.attempt("integration", |c| {
            let rs = integration_reports(ex, c.base.seed)?;
            c.push_all(rs);
            Ok(())
        });
    }
}

/// Drift of the lattice sums along RK4 trajectories at dt and dt/2.
pub fn integration_reports(ex: &Example, seed: u64) -> Result<Vec<Report>> {
    let sys = nls_system(ex)?;
    let monitors = nls_monitors(ex)?;
    let run = |dt: f64| rk4(&sys, initial_data(16, SPACING), 1.0, dt, &monitors);
    let coarse = run(1e-3)?;
    let fine = run(5e-4)?;
    let mut out = Vec::new();
    for (k, m) in monitors.iter().enumerate() {
        let bound = if m.name == "norm" { tol::NORM_DRIFT } else { tol::ENERGY_DRIFT };
        let d = coarse.drift(k);
        out.push(
            Report::new(&format!("integration/{}-drift", m.name), d, bound, coarse.xs.len(), seed)
                .with_note("N=16, h=0.5, dt=1e-3, x in [0,1]; lattice size and data are an artifact choice"),
        );
        let ratio = d / fine.drift(k);
        let (lo, hi) = tol::RATE_RATIO;
        let mut r = Report::new(&format!("integration/{}-rate", m.name), ratio, hi, fine.xs.len(), seed)
            .with_note(format!("drift ratio under dt halving: {ratio:.2}, order {:.2}", ratio.log2()));
        if !(lo..=hi).contains(&ratio) {
            r.status = crate::harness::Status::Fail;
        }
        out.push(r);
    }
    Ok(out)
}

fn equivariance(c: &mut Ctx) {
    let ex = c.ex;
    let p = &ex.problem;
    c.attempt("equivariance", |c| {
        let plan = c.plan(tol::IDENTITY);
        let laws: Vec<ConservationLaw> = (0..ex.n_action()).map(|r| p.noether_invariant(r)).collect::<Result<_>>()?;
        let v = p.equivariant_form(&laws)?;
        c.push(p.verify_equivariant_invariance(&v, &c.plan(tol::FRAME), GROUP_SAMPLES)?);
        for (r, law) in laws.iter().enumerate() {
            let back = p.law_from_equivariant(&v, r);
            let a = p.to_original(&back.components)?;
            let b = p.to_original(&law.components)?;
            let pairs: Vec<(Expr, Expr)> = a.a0.iter().chain(&a.comps).cloned().zip(b.a0.iter().chain(&b.comps).cloned()).collect();
            let id = format!("equivariance/{}/reconstruction", law.generator);
            c.push(pairs_check(&id, &pairs, p.sig(), &p.inv.frame.plan(&plan)));
            for stored in ex.laws_for(r).filter(|s| s.form != LawForm::Original) {
                let id = format!("equivariance/{}/stored", law.generator);
                c.push(p.compare_laws(&id, &p.to_original(&stored.components)?, &b, &plan)?);
            }
        }
        let mut bad = v.clone();
        let u = Expr::var(FieldVar::new(p.sig().dependents()[0], 0, Shift::ZERO));
        bad[0].comps[0] = &bad[0].comps[0] + u * PERTURBATION;
        let mut r = p.verify_equivariant_invariance(&bad, &c.plan(tol::FRAME), GROUP_SAMPLES)?;
        r.check_id = "equivariance/negative-control".into();
        c.push(r.expect_failure(c.tol.unwrap_or(tol::FRAME)));
        Ok(())
    });
}

fn frame(c: &mut Ctx) {
    let ex = c.ex;
    let inv = &ex.problem.inv;
    let f = &inv.frame;
    c.attempt("action", |c| {
        let plan = f.plan(&c.plan(tol::FRAME));
        let checks = ActionChecks { action: &f.action, sig: ex.sig(), plan: &plan };
        c.push(checks.identity(&ex.probes[0])?);
        c.push(checks.composition(&ex.probes[0])?);
        c.push(checks.adjoint_identity(&[Shift::ZERO, Shift::unit(0)])?);
        c.push(checks.representation()?);
        Ok(())
    });
    c.attempt("frame", |c| {
        let plan = c.plan(tol::FRAME);
        c.push(f.verify_normalization(&plan)?);
        c.push(f.verify_equivariance(&plan, GROUP_SAMPLES)?);
        c.push(f.verify_projection(&ex.probes, &plan)?);
        c.push(f.verify_invariance(&ex.probes, &plan, GROUP_SAMPLES)?);
        c.push(f.verify_maurer_cartan(&plan, GROUP_SAMPLES)?);
        c.push(f.verify_concatenation(&plan)?);
        c.push(f.verify_commutation(&ex.probes, &plan, GROUP_SAMPLES)?);
        let mut invariants: Vec<Expr> = inv.kappa.iter().map(|(_, d)| d.clone()).collect();
        for e in &ex.probes {
            invariants.push(f.invariantize(e)?);
        }
        c.push(inv.verify_replacement(&invariants, &plan)?);
        c.push(inv.verify_kappa_invariance(&plan, GROUP_SAMPLES)?);
        c.push(inv.verify_recurrences(&ex.recurrence_targets, &plan)?);
        Ok(())
    });
    c.attempt("frame/negative-control", |c| {
        let plan = f.plan(&c.plan(tol::FRAME));
        let (z, value) = &f.normalization[0];
        let lhs = f.invariantize(z)?;
        let r = identity_check("frame/negative-control", &lhs, &perturbed(&Expr::num(*value)), ex.sig(), &plan);
        c.push(r.expect_failure(plan.tol));
        Ok(())
    });
}

fn divergence_suite(c: &mut Ctx) {
    let ex = c.ex;
    let p = &ex.problem;
    c.attempt("divergence-equivalence", |c| {
        let r = p.verify_divergence_equivalence(&c.plan(tol::IDENTITY))?;
        c.push(r);
        Ok(())
    });
    let u = p.sig().dependents()[0];
    for v in ex.symmetries.iter().filter(|v| v.divergence.is_some()) {
        c.attempt(&format!("divergence/{}", v.name), |c| {
            let b = v.divergence.as_ref().expect("filtered");
            let e = euler_lagrange(&divergence(b, p.sig())?, u, p.sig())?;
            let plan = p.inv.frame.plan(&c.plan(tol::SYZYGY));
            c.push(identity_check(&format!("divergence/{}/euler-annihilates", v.name), &e, &Expr::zero(), p.sig(), &plan));
            Ok(())
        });
    }
    c.attempt("divergence/negative-control", |c| {
        let law = p.noether_invariant(0)?;
        let t = p.to_original(&law.components)?;
        let bump = Expr::var(FieldVar::new(u, 0, Shift::ZERO)).pow(2) * PERTURBATION;
        let e = euler_lagrange(&(divergence(&t, p.sig())? + bump), u, p.sig())?;
        let plan = p.inv.frame.plan(&c.plan(tol::SYZYGY));
        let r = identity_check("divergence/negative-control", &e, &Expr::zero(), p.sig(), &plan);
        c.push(r.expect_failure(plan.tol));
        Ok(())
    });
}

//! Nonlinear Schrödinger system, discretized in one direction, with
//! translations in x and phase rotations of ψ = u + iv.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use super::complex::CExpr;
use super::{Example, Src, StoredLaw};
use crate::error::{Error, Result};
use crate::expr::{DerivRule, Expr, FieldId, FieldVar, Shift, Signature};
use crate::frame::{Frame, InvariantSet, Recurrence};
use crate::group::GroupAction;
use crate::harness::integrate::{solve_for_derivatives, Evolution, LatticeState, Monitor};
use crate::variational::{LawForm, VariationalProblem};

/// Lattice spacing used by the integration checks.
pub const SPACING: f64 = 0.5;

const PHI: &str = "sqrt((k1[0]*k1[1])^2 - k3[0]^2)";
const PHI_BACK: &str = "sqrt((k1[-1]*k1[0])^2 - k3[-1]^2)";

struct Symbols {
    k1: FieldId,
    k2: FieldId,
    k3: FieldId,
}

impl Symbols {
    fn at(&self, f: FieldId, k: i32) -> Expr {
        Expr::var(FieldVar::at(f, &[k]))
    }

    /// e^{i(θ₁ − θ₀)} for ψ = r e^{iθ}.
    fn phase_step(&self, sig: &Signature) -> Result<CExpr> {
        let den = self.at(self.k1, 0) * self.at(self.k1, 1);
        let phi = Src(sig).e(PHI)?;
        Ok(CExpr::new(self.at(self.k3, 0).quot(&den), phi.quot(&den)))
    }

    /// ι(ψ_{j;0}).
    fn unshifted(&self, order: u8, sig: &Signature) -> Result<CExpr> {
        let mut p = CExpr::real(self.at(self.k1, 0));
        let rate = self.at(self.k2, 0).quot(&self.at(self.k1, 0).pow(2));
        let rule = DerivRule::standard(sig);
        for _ in 0..order {
            p = p.derive(&rule, sig)?.add(&p.times_i(&rate));
        }
        Ok(p)
    }

    fn iota(&self, order: u8, k: i32, sig: &Signature) -> Result<CExpr> {
        let m = self.phase_step(sig)?;
        let mut phase = CExpr::one();
        if k > 0 {
            for l in 0..k {
                phase = phase.mul(&m.shift(Shift::from_slice(&[l]), sig)?);
            }
        } else {
            for l in 1..=-k {
                phase = phase.mul(&m.shift(Shift::from_slice(&[-l]), sig)?.conj());
            }
        }
        Ok(phase.mul(&self.unshifted(order, sig)?.shift(Shift::from_slice(&[k]), sig)?))
    }
}

pub(super) fn build() -> Result<Example> {
    let mut sig = Signature::new(1).differential();
    let u = sig.dependent("u");
    let v = sig.dependent("v");
    let k1 = sig.invariant("k1");
    let k2 = sig.invariant("k2");
    let k3 = sig.invariant("k3");
    let su = sig.diff_invariant("su");
    let sv = sig.diff_invariant("sv");
    sig.param("h");
    let src = Src(&sig);
    let guard = src.e("u[0]*v[1]-v[0]*u[1]")?;
    let guards = [-1, 0, 1].iter().map(|&k| guard.shift(Shift::from_slice(&[k]), &sig)).collect::<Result<_>>()?;
    let frame = Frame {
        name: "nls-rotation".into(),
        sig: sig.clone(),
        action: GroupAction::translate_x_rotate_uv(&sig)?,
        normalization: vec![(Expr::x(), 0.0), (src.e("v[0]")?, 0.0)],
        params: vec![
            Expr::x().neg(),
            src.e("u[0]/sqrt(u[0]^2+v[0]^2)")?,
            src.e("v[0]/sqrt(u[0]^2+v[0]^2)")?,
        ],
        guards,
        x_range: None,
    };
    let syms = Arc::new(Symbols { k1, k2, k3 });
    let recurrence: Recurrence = Arc::new(move |var: &FieldVar, sig: &Signature| {
        let z = syms.iota(var.order, var.shift.get(0), sig)?;
        match var.field {
            f if f == u => Ok(z.re),
            f if f == v => Ok(z.im),
            f => Err(Error::MissingClosedForm(sig.name(f).to_string())),
        }
    });
    let kappa = vec![
        (k1, src.e("sqrt(u[0]^2+v[0]^2)")?),
        (k2, src.e("u[0]*d1 v[0] - v[0]*d1 u[0]")?),
        (k3, src.e("u[0]*u[1]+v[0]*v[1]")?),
    ];
    let syzygy = format!(
        "k3[0]*d1 k1[1]/k1[1] - d1 k3[0] + k3[0]*d1 k1[0]/k1[0] + {PHI}*k2[0]/k1[0]^2 - {PHI}*k2[1]/k1[1]^2"
    );
    let inv = InvariantSet::new(frame, kappa, &[su, sv], recurrence)?.with_syzygy(
        "phase-angle",
        src.e(&syzygy)?,
        Expr::zero(),
    );
    let h = vec![
        vec![src.op(&[("1", &[0], 0)])?, src.op(&[])?],
        vec![
            src.op(&[("2*k2[0]/k1[0]", &[0], 0)])?,
            src.op(&[("k1[0]", &[0], 1), ("-d1 k1[0]", &[0], 0)])?,
        ],
        vec![
            src.op(&[("k3[0]/k1[0]", &[0], 0), ("k3[0]/k1[1]", &[1], 0)])?,
            src.op(&[(&format!("{PHI}/k1[0]"), &[0], 0), (&format!("-{PHI}/k1[1]"), &[1], 0)])?,
        ],
    ];
    let problem = VariationalProblem {
        inv,
        lagrangian: src.e(
            "(v[0]*d1 u[0] - u[0]*d1 v[0])/2 + (u[0]^2+v[0]^2)^2/4 - ((u[1]-u[0])^2 + (v[1]-v[0])^2)/(2*h^2)",
        )?,
        l_kappa: src.e("-k2[0]/2 + k1[0]^4/4 - (k1[1]^2 - 2*k3[0] + k1[0]^2)/(2*h^2)")?,
        h,
    };
    let stored_el = vec![
        src.e("k1[0]^3 - 2*k1[0]/h^2 - k2[0]/k1[0] + k3[0]/(h^2*k1[0]) + k3[-1]/(h^2*k1[0])")?,
        src.e(&format!("d1 k1[0] + {PHI}/(h^2*k1[0]) - {PHI_BACK}/(h^2*k1[0])"))?,
    ];
    let stored_laws = vec![
        StoredLaw {
            generator: 0,
            form: LawForm::Invariant,
            components: src.tuple(
                Some("k1[0]^4/4 - k1[1]^2/(2*h^2) + k3[0]/h^2 - k1[0]^2/(2*h^2)"),
                &[&format!(
                    "-d1 k1[0]*k3[-1]/(h^2*k1[0]) + k2[0]*{PHI_BACK}/(h^2*k1[0]^2) + k1[0]*d1 k1[0]/h^2"
                )],
            )?,
        },
        StoredLaw {
            generator: 1,
            form: LawForm::Invariant,
            components: src.tuple(Some("k1[0]^2/2"), &[&format!("{PHI_BACK}/h^2")])?,
        },
    ];
    let symmetries = problem.action().generators.clone();
    let recurrence_targets = [(0, 1), (0, -1), (0, 2), (1, 0), (1, 1), (2, 0), (1, -1), (2, 1)]
        .iter()
        .flat_map(|&(j, k)| [FieldVar::new(u, j, Shift::from_slice(&[k])), FieldVar::new(v, j, Shift::from_slice(&[k]))])
        .collect();
    let probes = vec![
        src.e("u[1]*d1 v[0] + x*u[0]^2")?,
        src.e("v[-1]*v[0] - d2 u[0]")?,
        src.e("(u[0]^2+v[0]^2)*x")?,
    ];
    Ok(Example {
        name: "nls",
        problem,
        symmetries,
        stored_el,
        stored_laws,
        recurrence_targets,
        probes,
        fixed_params: Vec::new(),
    })
}

/// du/dx, dv/dx obtained by solving the computed Euler–Lagrange equations
/// for their single x-derivative each.
pub fn nls_system(ex: &Example) -> Result<Evolution> {
    let el = ex.problem.euler_lagrange()?;
    let rhs = solve_for_derivatives(&el, ex.sig())?;
    Evolution::new(&rhs, ex.sig())
}

/// Lattice sums of A⁰ for each stored invariant-form law, in original
/// variables: the energy for translations, the norm for rotations.
pub fn nls_monitors(ex: &Example) -> Result<Vec<Monitor>> {
    let mut out = Vec::new();
    for law in ex.stored_laws.iter().filter(|l| l.form == LawForm::Invariant) {
        let a0 = law.components.a0.as_ref().ok_or_else(|| Error::Invalid("law without A⁰".into()))?;
        let density = ex.problem.inv.expand(a0)?;
        let name = match law.generator {
            0 => "energy",
            1 => "norm",
            _ => "law",
        };
        out.push(Monitor::new(name, &density)?);
    }
    Ok(out)
}

/// Modulated data u_n = 2(cos 2πn/N + ½cos 6πn/N), v_n = 1.4 sin 4πn/N at
/// x = 0. A plane wave would conserve everything trivially, so the
/// modulation is what makes the drift test meaningful.
pub fn initial_data(sites: usize, spacing: f64) -> LatticeState {
    let n_f = sites as f64;
    let u = (0..sites)
        .map(|n| {
            let t = 2.0 * PI * n as f64 / n_f;
            2.0 * (t.cos() + 0.5 * (3.0 * t).cos())
        })
        .collect();
    let v = (0..sites).map(|n| 1.4 * (4.0 * PI * n as f64 / n_f).sin()).collect();
    LatticeState { x: 0.0, fields: vec![u, v], params: HashMap::from([("h".to_string(), spacing)]) }
}

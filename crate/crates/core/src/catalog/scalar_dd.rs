//! Scalar differential-difference Lagrangian u_x²/(u₁ − u) with the frame
//! x ↦ bx, u ↦ bu + a normalized at x = 1, u = 0.

use std::sync::Arc;

use super::{Example, Src, StoredLaw};
use crate::error::{Error, Result};
use crate::expr::{DerivRule, Expr, FieldId, FieldVar, Shift, Signature};
use crate::frame::{Frame, InvariantSet, Recurrence};
use crate::group::GroupAction;
use crate::variational::{LawForm, VariationalProblem};

fn at(f: FieldId, order: u8, k: i32) -> Expr {
    Expr::var(FieldVar::new(f, order, Shift::from_slice(&[k])))
}

fn iota(order: u8, k: i32, k1: FieldId, k2: FieldId, sig: &Signature) -> Result<Expr> {
    match order {
        0 if k >= 0 => Ok(Expr::sum((0..k).map(|l| at(k2, 0, l)))),
        0 => Ok(Expr::sum((k..0).map(|l| at(k2, 0, l))).neg()),
        1 => Ok(at(k1, 0, k)),
        j => {
            let prev = iota(j - 1, k, k1, k2, sig)?;
            Ok(prev.derive(&DerivRule::standard(sig), sig)? - &prev * f64::from(j - 2))
        }
    }
}

pub(super) fn build() -> Result<Example> {
    let mut sig = Signature::new(1).differential();
    let u = sig.dependent("u");
    let k1 = sig.invariant("k1");
    let k2 = sig.invariant("k2");
    let s = sig.diff_invariant("s");
    let src = Src(&sig);
    let frame = Frame {
        name: "ex81-scale".into(),
        sig: sig.clone(),
        action: GroupAction::scale_x_affine_u(&sig)?,
        normalization: vec![(Expr::x(), 1.0), (src.e("u[0]")?, 0.0)],
        params: vec![src.e("-u[0]/x")?, src.e("1/x")?],
        guards: vec![Expr::x()],
        x_range: Some((0.3, 2.0)),
    };
    let recurrence: Recurrence = Arc::new(move |v: &FieldVar, sig: &Signature| {
        if v.field != u {
            return Err(Error::MissingClosedForm(sig.name(v.field).to_string()));
        }
        iota(v.order, v.shift.get(0), k1, k2, sig)
    });
    let kappa = vec![(k1, src.e("d1 u[0]")?), (k2, src.e("(u[1]-u[0])/x")?)];
    let inv = InvariantSet::new(frame, kappa, &[s], recurrence)?.with_syzygy(
        "shift-derivative",
        src.e("k1[1]")?,
        src.e("k1[0] + d1 k2[0] + k2[0]")?,
    );
    let h = vec![
        vec![src.op(&[("1", &[0], 1), ("1", &[0], 0)])?],
        vec![src.op(&[("1", &[1], 0), ("-1", &[0], 0)])?],
    ];
    let problem = VariationalProblem {
        inv,
        lagrangian: src.e("(d1 u[0])^2/(u[1]-u[0])")?,
        l_kappa: src.e("k1[0]^2/k2[0]")?,
        h,
    };
    let stored_el = vec![src.e(
        "2*(k1[0] - d1 k1[0])/k2[0] + k1[0]*(k1[0] + 2*d1 k2[0])/k2[0]^2 - (k1[-1]/k2[-1])^2",
    )?];
    let law = |g, form, a0: &str, a1: &str| -> Result<StoredLaw> {
        Ok(StoredLaw { generator: g, form, components: src.tuple(Some(a0), &[a1])? })
    };
    let stored_laws = vec![
        law(0, LawForm::Original, "2*d1 u[0]/(u[1]-u[0])", "-(d1 u[-1])^2/(u[0]-u[-1])^2")?,
        law(
            1,
            LawForm::Original,
            "d1 u[0]*(2*u[0] - x*d1 u[0])/(u[1]-u[0])",
            "(d1 u[-1])^2*(x*d1 u[0] - u[0])/(u[0]-u[-1])^2",
        )?,
        law(0, LawForm::Equivariant, "2*k1[0]/(x*k2[0])", "-(1/x)*(k1[-1]/k2[-1])^2")?,
        law(1, LawForm::Equivariant, "(k1[0]/k2[0])*(2*u[0]/x - k1[0])", "(k1[-1]/k2[-1])^2*(k1[0] - u[0]/x)")?,
    ];
    let symmetries = problem.action().generators.clone();
    let recurrence_targets = [(0, 1), (0, -2), (0, 3), (1, 0), (1, 1), (2, 0), (2, -1), (3, 0), (3, 2)]
        .iter()
        .map(|&(j, k)| FieldVar::new(u, j, Shift::from_slice(&[k])))
        .collect();
    let probes = vec![
        src.e("x*d1 u[1] + u[0]^2/(u[1]-x)")?,
        src.e("d2 u[0]*u[-1] - x")?,
        src.e("(u[2]-u[0])/(x+d1 u[0])")?,
    ];
    Ok(Example {
        name: "ex81",
        problem,
        symmetries,
        stored_el,
        stored_laws,
        recurrence_targets,
        probes,
        fixed_params: Vec::new(),
    })
}

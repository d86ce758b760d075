//! Toda-type lattice on Z² with u ↦ bu + a.

use std::sync::Arc;

use super::{Example, Src, StoredLaw};
use crate::error::{Error, Result};
use crate::expr::{Expr, FieldId, FieldVar, Shift, Signature};
use crate::frame::{Frame, InvariantSet, Recurrence};
use crate::group::{Generator, GroupAction};
use crate::variational::{LawForm, VariationalProblem};

fn at(f: FieldId, i: i32, j: i32) -> Expr {
    Expr::var(FieldVar::at(f, &[i, j]))
}

/// ι(u_{i,j}) from ι(u_{0,0}) = 0 and the first-order relations in each
/// direction.
fn iota(i: i32, j: i32, k: FieldId, l: FieldId, sig: &Signature) -> Result<Expr> {
    let kap = at(k, 0, 0);
    let lam = at(l, 0, 0);
    let one = Expr::one();
    if i > 0 {
        let prev = iota(i - 1, j, k, l, sig)?.shift(Shift::unit(0), sig)?;
        Ok(&kap + (&one - &kap).quot(&at(l, 1, 0)) * prev)
    } else if i < 0 {
        let prev = iota(i + 1, j, k, l, sig)?;
        ((prev - &kap) * at(l, 1, 0)).quot(&(&one - &kap)).shift(Shift::from_slice(&[-1, 0]), sig)
    } else if j > 0 {
        let prev = iota(0, j - 1, k, l, sig)?.shift(Shift::unit(1), sig)?;
        Ok(&lam + (&one - &lam).quot(&at(k, 0, 1)) * prev)
    } else if j < 0 {
        let prev = iota(0, j + 1, k, l, sig)?;
        ((prev - &lam) * at(k, 0, 1)).quot(&(&one - &lam)).shift(Shift::from_slice(&[0, -1]), sig)
    } else {
        Ok(Expr::zero())
    }
}

pub(super) fn build() -> Result<Example> {
    let mut sig = Signature::new(2);
    let u = sig.dependent("u");
    let k = sig.invariant("k");
    let l = sig.invariant("l");
    let s = sig.diff_invariant("s");
    let src = Src(&sig);
    let action = GroupAction::affine_u(&sig)?;
    let frame = Frame {
        name: "toda-affine".into(),
        sig: sig.clone(),
        action,
        normalization: vec![(src.e("u[0,0]")?, 0.0), (src.e("u[1,1]")?, 1.0)],
        params: vec![src.e("-u[0,0]/(u[1,1]-u[0,0])")?, src.e("1/(u[1,1]-u[0,0])")?],
        guards: vec![src.e("u[1,1]-u[0,0]")?],
        x_range: None,
    };
    let recurrence: Recurrence = Arc::new(move |v: &FieldVar, sig: &Signature| {
        if v.field != u || v.order != 0 {
            return Err(Error::MissingClosedForm(sig.name(v.field).to_string()));
        }
        iota(v.shift.get(0), v.shift.get(1), k, l, sig)
    });
    let kappa = vec![
        (k, src.e("(u[1,0]-u[0,0])/(u[1,1]-u[0,0])")?),
        (l, src.e("(u[0,1]-u[0,0])/(u[1,1]-u[0,0])")?),
    ];
    let inv = InvariantSet::new(frame, kappa, &[s], recurrence)?.with_syzygy(
        "fundamental",
        src.e("(l[0,0]-1)*(k[0,1]-1)/(k[0,1]*l[1,1])")?,
        src.e("(k[0,0]-1)*(l[1,0]-1)/(l[1,0]*k[1,1])")?,
    );
    let cross = "(k[0,0]-1)*(l[1,0]-1)/(l[1,0]*k[1,1])";
    let h = vec![
        vec![src.op(&[
            ("(1-k[0,0])/l[1,0]", &[1, 0], 0),
            (&format!("-k[0,0]*{cross}"), &[1, 1], 0),
            ("k[0,0]-1", &[0, 0], 0),
        ])?],
        vec![src.op(&[
            ("(1-l[0,0])/k[0,1]", &[0, 1], 0),
            (&format!("-l[0,0]*{cross}"), &[1, 1], 0),
            ("l[0,0]-1", &[0, 0], 0),
        ])?],
    ];
    let problem = VariationalProblem {
        inv,
        lagrangian: src.e("ln(u[1,0]-u[0,1]) - ln(u[1,1]-u[0,0])")?,
        l_kappa: src.e("ln(k[0,0]-l[0,0])")?,
        h,
    };
    let stored_el = vec![src.e(
        "(1-k[-1,0])/(l[0,0]*(k[-1,0]-l[-1,0])) - (1-l[0,-1])/(k[0,0]*(k[0,-1]-l[0,-1])) \
         - (k[-1,-1]-1)*(l[0,-1]-1)/(k[0,0]*l[0,-1]) + 1",
    )?];
    // Brackets shared by both equivariant laws; a¹₁, a¹₂, a²₂ on the frame.
    let p1 = "((1-k[-1,0])/(l[0,0]*(k[-1,0]-l[-1,0])) + (k[-1,0]-1)/l[0,0])";
    let p2 = "((l[0,-1]-1)/(k[0,0]*(k[0,-1]-l[0,-1])) - (k[-1,-1]-1)*(l[0,-1]-1)/(k[0,0]*l[0,-1]))";
    let a11 = "(1/(u[1,1]-u[0,0]))";
    let a12 = "(u[0,0]/(u[1,1]-u[0,0]))";
    let stored_laws = vec![
        StoredLaw {
            generator: 0,
            form: LawForm::Equivariant,
            components: src.tuple(None, &[&format!("{p1}*{a11}"), &format!("{p2}*{a11}")])?,
        },
        StoredLaw {
            generator: 1,
            form: LawForm::Equivariant,
            components: src.tuple(None, &[&format!("{p1}*{a12} + (k[-1,0]-1)"), &format!("{p2}*{a12}")])?,
        },
    ];
    let mut symmetries = problem.action().generators.clone();
    symmetries.extend([
        Generator::new("v3", Expr::zero(), vec![src.e("u[0,0]^2")?]).with_divergence(src.tuple(None, &["u[0,0]-u[0,1]", "0"])?),
        Generator::new("v4", Expr::zero(), vec![Expr::alt()]),
        Generator::new("v5", Expr::zero(), vec![src.e("alt*u[0,0]")?]).with_divergence(src.tuple(None, &["alt", "0"])?),
        Generator::new("v6", Expr::zero(), vec![src.e("alt*u[0,0]^2")?])
            .with_divergence(src.tuple(None, &["alt*(u[0,0]+u[0,1])", "0"])?),
    ]);
    let recurrence_targets = [[1, 0], [0, 1], [2, 1], [-1, 1], [1, -1], [-1, -1], [0, 2], [-2, 0], [2, 2], [0, -2]]
        .iter()
        .map(|k| FieldVar::at(u, k))
        .collect();
    let probes = vec![
        src.e("u[1,0]*u[0,1] + u[2,1]")?,
        src.e("(u[1,0]-u[0,1])/(u[0,0]+2)")?,
        src.e("u[-1,1]^2 - u[0,0]")?,
    ];
    Ok(Example {
        name: "toda",
        problem,
        symmetries,
        stored_el,
        stored_laws,
        recurrence_targets,
        probes,
        fixed_params: Vec::new(),
    })
}

use super::DivergenceTuple;
use crate::error::Result;
use crate::expr::{DerivRule, Expr, FieldId, FieldVar, Shift, Signature};

/// Components B with S_J h − h = Σ_i (S_i − id) B_i, split along the
/// staircase S_J − id = Σ_i (S_i^{j_i} − id)·S_{(0,…,0,j_{i+1},…,j_m)}.
pub fn telescope(h: &Expr, j: Shift, sig: &Signature) -> Result<Vec<Expr>> {
    let dim = sig.dim();
    let mut out = vec![Expr::zero(); dim];
    for i in 0..dim {
        let k = j.get(i);
        if k == 0 {
            continue;
        }
        let mut tail = Shift::ZERO;
        for l in i + 1..dim {
            tail.0[l] = j.get(l);
        }
        let base = h.shift(tail, sig)?;
        let mut parts = Vec::new();
        if k > 0 {
            for l in 0..k {
                parts.push(base.shift(Shift::unit(i).scaled(l), sig)?);
            }
            out[i] = Expr::sum(parts);
        } else {
            for l in 1..=-k {
                parts.push(base.shift(Shift::unit(i).scaled(-l), sig)?);
            }
            out[i] = Expr::sum(parts).neg();
        }
    }
    Ok(out)
}

/// B with f·S_J g − (S_{−J} f)·g = Div(B).
pub fn sum_by_parts(f: &Expr, g: &Expr, j: Shift, sig: &Signature) -> Result<DivergenceTuple> {
    let h = f.shift(-j, sig)? * g;
    Ok(DivergenceTuple { a0: None, comps: telescope(&h, j, sig)? })
}

/// A form linear in slot variables rewritten as Σ_β c_β·w^β + Div(A).
#[derive(Clone, Debug)]
pub struct LinearSplit {
    /// Coefficient of each undifferentiated, unshifted slot.
    pub coeffs: Vec<Expr>,
    pub boundary: DivergenceTuple,
}

/// Moves every shift and derivative off the slot variables of `slots` by
/// summation and integration by parts. `rule` must differentiate slots at
/// rate 1.
pub fn split_linear(form: &Expr, slots: &[FieldId], rule: &DerivRule, sig: &Signature) -> Result<LinearSplit> {
    let dim = sig.dim();
    let mut coeffs = Vec::with_capacity(slots.len());
    let mut a0_parts = Vec::new();
    let mut comps: Vec<Vec<Expr>> = vec![Vec::new(); dim];
    let vars = form.vars();
    for &slot in slots {
        let mut coeff_parts = Vec::new();
        for v in vars.iter().filter(|v| v.field == slot) {
            let a = form.partial(v).shift(-v.shift, sig)?;
            let w_j = Expr::var(FieldVar::new(slot, v.order, Shift::ZERO));
            if !v.shift.is_zero() {
                for (i, b) in telescope(&(&a * &w_j), v.shift, sig)?.into_iter().enumerate() {
                    comps[i].push(b);
                }
            }
            let mut da = a;
            for i in 0..v.order {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let w = Expr::var(FieldVar::new(slot, v.order - 1 - i, Shift::ZERO));
                a0_parts.push(&da * &w * sign);
                da = da.derive(rule, sig)?;
            }
            coeff_parts.push(if v.order % 2 == 0 { da } else { da.neg() });
        }
        coeffs.push(Expr::sum(coeff_parts));
    }
    let boundary = DivergenceTuple {
        a0: sig.continuous.then(|| Expr::sum(a0_parts)),
        comps: comps.into_iter().map(Expr::sum).collect(),
    };
    Ok(LinearSplit { coeffs, boundary })
}

/// dL/dt = Σ_α E_α(L)·(u^α)′ + Div(A_u), with A_u linear in the variation
/// slots `<u>_t`.
pub fn decompose_variation(l: &Expr, sig: &Signature) -> Result<LinearSplit> {
    let slots: Vec<FieldId> =
        sig.dependents().into_iter().map(|u| sig.variation_of(u).expect("dependent has a slot")).collect();
    split_linear(&l.tangent(sig), &slots, &DerivRule::standard(sig), sig)
}

/// Replaces slot_{j;K} by S_K D^j(value) for every slot variable in `e`.
pub fn fill_slot(e: &Expr, slot: FieldId, value: &Expr, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
    let mut rules = std::collections::HashMap::new();
    for v in e.vars().into_iter().filter(|v| v.field == slot) {
        rules.insert(v, value.derive_n(v.order, rule, sig)?.shift(v.shift, sig)?);
    }
    Ok(e.substitute(&rules))
}

//! Linear difference and differential-difference operators, divergences,
//! Euler–Lagrange operators and summation/integration by parts.

mod parts;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, DerivRule, Expr, FieldId, Shift, Signature};
use crate::harness::is_identically_zero;

pub use parts::{decompose_variation, fill_slot, split_linear, sum_by_parts, telescope, LinearSplit};

/// One term coeff·S_K·D^j.
#[derive(Clone, Debug)]
pub struct OpTerm {
    pub coeff: Expr,
    pub shift: Shift,
    pub order: u8,
}

/// Finite sum of terms coeff·S_K·D^j. The derivative is supplied at
/// application time, so the same operator serves D and 𝒟 = 𝒥⁻¹D.
#[derive(Clone, Debug)]
pub struct LinDiffOp {
    pub terms: Vec<OpTerm>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    coeff: String,
    #[serde(rename = "K")]
    k: Vec<i32>,
    j: u8,
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl LinDiffOp {
    pub fn zero() -> LinDiffOp {
        LinDiffOp { terms: Vec::new() }
    }

    pub fn identity() -> LinDiffOp {
        LinDiffOp::zero().term(Expr::one(), Shift::ZERO, 0)
    }

    pub fn term(mut self, coeff: Expr, shift: Shift, order: u8) -> LinDiffOp {
        self.terms.push(OpTerm { coeff, shift, order });
        self
    }

    pub fn is_difference(&self) -> bool {
        self.terms.iter().all(|t| t.order == 0)
    }

    /// Largest |K_i| over all terms.
    pub fn radius(&self) -> i32 {
        self.terms.iter().map(|t| t.shift.max_abs()).max().unwrap_or(0)
    }

    /// Reads the operator off an expression linear in the variables of
    /// `slot`: coefficient of slot_{j;K} becomes the term (c, K, j).
    pub fn from_linear(form: &Expr, slot: FieldId) -> LinDiffOp {
        let mut op = LinDiffOp::zero();
        for v in form.vars().into_iter().filter(|v| v.field == slot) {
            op.terms.push(OpTerm { coeff: form.partial(&v), shift: v.shift, order: v.order });
        }
        op
    }

    /// Σ coeff·S_K D^j(e).
    pub fn apply(&self, e: &Expr, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
        let mut parts = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let d = e.derive_n(t.order, rule, sig)?.shift(t.shift, sig)?;
            parts.push(&t.coeff * d);
        }
        Ok(Expr::sum(parts))
    }

    /// Merges terms with equal (K, j) and drops numerically vanishing ones.
    pub fn normalized(&self, sig: &Signature) -> LinDiffOp {
        let mut merged: BTreeMap<(Shift, u8), Vec<Expr>> = BTreeMap::new();
        for t in &self.terms {
            merged.entry((t.shift, t.order)).or_default().push(t.coeff.clone());
        }
        let terms = merged
            .into_iter()
            .map(|((shift, order), cs)| OpTerm { coeff: Expr::sum(cs), shift, order })
            .filter(|t| !is_identically_zero(&t.coeff, sig))
            .collect();
        LinDiffOp { terms }
    }

    /// Formal adjoint relative to the derivative `rule`: the term (c, K, j)
    /// maps f to (−D)^j S_{−K}(c f), expanded by Leibniz into normal form.
    pub fn adjoint(&self, rule: &DerivRule, sig: &Signature) -> Result<LinDiffOp> {
        let mut out = LinDiffOp::zero();
        for t in &self.terms {
            let back = -t.shift;
            let c = t.coeff.shift(back, sig)?;
            let sign = if t.order % 2 == 0 { 1.0 } else { -1.0 };
            let mut dc = c;
            for i in (0..=t.order).rev() {
                let k = t.order - i;
                if k > 0 {
                    dc = dc.derive(rule, sig)?;
                }
                if !dc.is_zero() {
                    out.terms.push(OpTerm { coeff: dc.clone() * (sign * binomial(t.order, i)), shift: back, order: i });
                }
            }
        }
        Ok(out.normalized(sig))
    }

    /// Composition self∘other.
    pub fn compose(&self, other: &LinDiffOp, rule: &DerivRule, sig: &Signature) -> Result<LinDiffOp> {
        let mut out = LinDiffOp::zero();
        for a in &self.terms {
            for b in &other.terms {
                let mut dc = b.coeff.clone();
                for k in 0..=a.order {
                    if k > 0 {
                        dc = dc.derive(rule, sig)?;
                    }
                    let coeff = &a.coeff * dc.shift(a.shift, sig)? * binomial(a.order, k);
                    out.terms.push(OpTerm { coeff, shift: a.shift + b.shift, order: b.order + a.order - k });
                }
            }
        }
        Ok(out.normalized(sig))
    }

    pub fn to_json(&self, sig: &Signature) -> serde_json::Value {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|t| TermJson { coeff: t.coeff.print(sig), k: t.shift.as_slice(sig.dim()).to_vec(), j: t.order })
            .collect();
        serde_json::to_value(terms).expect("terms serialize")
    }

    pub fn from_json(v: &serde_json::Value, sig: &Signature) -> Result<LinDiffOp> {
        let terms: Vec<TermJson> =
            serde_json::from_value(v.clone()).map_err(|e| Error::Invalid(format!("operator json: {e}")))?;
        let mut op = LinDiffOp::zero();
        for t in terms {
            if t.k.len() != sig.dim() {
                return Err(Error::IndexArity { expected: sig.dim(), found: t.k.len() });
            }
            op.terms.push(OpTerm { coeff: parse(&t.coeff, sig)?, shift: Shift::from_slice(&t.k), order: t.j });
        }
        Ok(op)
    }
}

/// (A⁰; A¹,…,A^m). A⁰ is absent for pure difference problems.
#[derive(Clone, Debug)]
pub struct DivergenceTuple {
    pub a0: Option<Expr>,
    pub comps: Vec<Expr>,
}

impl DivergenceTuple {
    pub fn zero(dim: usize, with_a0: bool) -> DivergenceTuple {
        DivergenceTuple { a0: with_a0.then(Expr::zero), comps: vec![Expr::zero(); dim] }
    }

    pub fn add(&self, other: &DivergenceTuple) -> DivergenceTuple {
        let a0 = match (&self.a0, &other.a0) {
            (None, None) => None,
            (a, b) => Some(a.clone().unwrap_or_else(Expr::zero) + b.clone().unwrap_or_else(Expr::zero)),
        };
        DivergenceTuple { a0, comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect() }
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> DivergenceTuple {
        DivergenceTuple { a0: self.a0.as_ref().map(&mut f), comps: self.comps.iter().map(f).collect() }
    }

    pub fn try_map(&self, mut f: impl FnMut(&Expr) -> Result<Expr>) -> Result<DivergenceTuple> {
        Ok(DivergenceTuple {
            a0: self.a0.as_ref().map(&mut f).transpose()?,
            comps: self.comps.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// D A⁰ + Σ_i (S_i − id) A^i, with D given by `rule`.
    pub fn divergence(&self, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
        let mut parts = Vec::new();
        if let Some(a0) = &self.a0 {
            parts.push(a0.derive(rule, sig)?);
        }
        for (i, a) in self.comps.iter().enumerate() {
            parts.push(a.shift(Shift::unit(i), sig)? - a);
        }
        Ok(Expr::sum(parts))
    }

    pub fn to_strings(&self, sig: &Signature) -> Vec<String> {
        self.a0.iter().chain(&self.comps).map(|e| e.print(sig)).collect()
    }
}

/// Total divergence with the standard derivative.
pub fn divergence(t: &DivergenceTuple, sig: &Signature) -> Result<Expr> {
    t.divergence(&DerivRule::standard(sig), sig)
}

/// E_α(L) = Σ S_{−K}(−D)^j ∂L/∂u^α_{j;K}, with D given by `rule`.
pub fn euler_operator(l: &Expr, field: FieldId, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
    let mut parts = Vec::new();
    for v in l.vars().into_iter().filter(|v| v.field == field) {
        let mut d = l.partial(&v);
        for _ in 0..v.order {
            d = d.derive(rule, sig)?.neg();
        }
        parts.push(d.shift(-v.shift, sig)?);
    }
    Ok(Expr::sum(parts))
}

pub fn euler_lagrange(l: &Expr, field: FieldId, sig: &Signature) -> Result<Expr> {
    euler_operator(l, field, &DerivRule::standard(sig), sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{identity_check, SamplePlan};

    fn sig() -> Signature {
        let mut s = Signature::new(2);
        s.dependent("u");
        s
    }

    #[test]
    fn forward_difference() {
        let s = sig();
        let op = LinDiffOp::zero().term(Expr::one(), Shift::unit(0), 0).term(Expr::num(-1.0), Shift::ZERO, 0);
        let u = parse("u[0,0]", &s).unwrap();
        let r = op.apply(&u, &DerivRule::standard(&s), &s).unwrap();
        assert_eq!(r, parse("u[1,0] - u[0,0]", &s).unwrap());
    }

    #[test]
    fn adjoint_of_constant_shift() {
        let s = sig();
        let op = LinDiffOp::zero().term(Expr::num(3.0), Shift::unit(0), 0);
        let adj = op.adjoint(&DerivRule::standard(&s), &s).unwrap();
        assert_eq!(adj.terms.len(), 1);
        assert_eq!(adj.terms[0].shift, Shift::from_slice(&[-1, 0]));
        assert_eq!(adj.terms[0].coeff.as_const(), Some(3.0));
    }

    #[test]
    fn euler_of_two_term_stencil() {
        let s = sig();
        let l = parse("u[0,0]*u[1,0]", &s).unwrap();
        let e = euler_lagrange(&l, s.field("u").unwrap(), &s).unwrap();
        let r = identity_check("el", &e, &parse("u[1,0] + u[-1,0]", &s).unwrap(), &s, &SamplePlan::default());
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn json_round_trip() {
        let s = sig();
        let op = LinDiffOp::zero().term(parse("u[0,0]/2", &s).unwrap(), Shift::from_slice(&[1, -1]), 0);
        let v = op.to_json(&s);
        assert_eq!(v[0]["K"], serde_json::json!([1, -1]));
        let back = LinDiffOp::from_json(&v, &s).unwrap();
        assert_eq!(back.terms[0].coeff.print(&s), op.terms[0].coeff.print(&s));
    }
}

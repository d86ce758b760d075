use std::collections::HashMap;

use super::{Expr, FieldId, FieldVar, Node, Shift, Signature};
use crate::error::Result;

/// Leaves that a derivation must differentiate itself.
#[derive(Copy, Clone, Debug)]
pub enum Leaf<'a> {
    X,
    Var(&'a FieldVar),
}

/// Rates of a total-derivative-like operator: `x ↦ x_rate` and
/// `u_{j;K} ↦ rate(u)·u_{j+1;K}`.
#[derive(Clone, Debug)]
pub struct DerivRule {
    pub x_rate: Expr,
    rates: Vec<Expr>,
}

impl DerivRule {
    /// The total derivative D.
    pub fn standard(sig: &Signature) -> DerivRule {
        DerivRule { x_rate: Expr::one(), rates: sig.ids().map(|_| Expr::one()).collect() }
    }

    /// Sets the rate of every field selected by `pred`.
    pub fn with_rate(mut self, sig: &Signature, pred: impl Fn(FieldId) -> bool, rate: &Expr) -> DerivRule {
        for id in sig.ids() {
            if pred(id) {
                self.rates[id.0 as usize] = rate.clone();
            }
        }
        self
    }

    pub fn with_x_rate(mut self, rate: Expr) -> DerivRule {
        self.x_rate = rate;
        self
    }

    pub fn rate(&self, id: FieldId) -> &Expr {
        &self.rates[id.0 as usize]
    }
}

pub(crate) fn rebuild(e: &Expr, mut kids: Vec<Expr>) -> Expr {
    match e.node() {
        Node::Sum(_) => Expr::sum(kids),
        Node::Prod(_) => Expr::product(kids),
        Node::Pow(_, n) => kids[0].pow(*n),
        Node::Quot(_) => kids[0].quot(&kids[1]),
        Node::LnAbs(_) => kids[0].ln_abs(),
        Node::Abs(_) => kids[0].abs(),
        Node::Sqrt(_) => kids[0].sqrt(),
        Node::Neg(_) => kids.swap_remove(0).neg(),
        _ => e.clone(),
    }
}

impl Expr {
    /// Rebuilds the tree bottom-up, replacing nodes for which `f` returns a
    /// value. Shared subtrees are rewritten once.
    pub fn map_nodes(&self, f: &mut impl FnMut(&Expr) -> Result<Option<Expr>>) -> Result<Expr> {
        fn go(
            e: &Expr,
            memo: &mut HashMap<usize, Expr>,
            f: &mut impl FnMut(&Expr) -> Result<Option<Expr>>,
        ) -> Result<Expr> {
            if let Some(r) = memo.get(&e.key()) {
                return Ok(r.clone());
            }
            let out = if let Some(r) = f(e)? {
                r
            } else if e.children().is_empty() {
                e.clone()
            } else {
                let mut changed = false;
                let mut kids = Vec::with_capacity(e.children().len());
                for c in e.children() {
                    let k = go(c, memo, f)?;
                    changed |= !k.ptr_eq(c);
                    kids.push(k);
                }
                if changed { rebuild(e, kids) } else { e.clone() }
            };
            memo.insert(e.key(), out.clone());
            Ok(out)
        }
        go(self, &mut HashMap::new(), f)
    }

    /// Applies a derivation determined by its values on `x` and on field
    /// variables; constants, parameters and lattice coefficients map to 0.
    pub fn derivation(&self, f: &mut impl FnMut(Leaf) -> Result<Expr>) -> Result<Expr> {
        fn go(e: &Expr, memo: &mut HashMap<usize, Expr>, f: &mut impl FnMut(Leaf) -> Result<Expr>) -> Result<Expr> {
            if let Some(r) = memo.get(&e.key()) {
                return Ok(r.clone());
            }
            let out = match e.node() {
                Node::Const(_) | Node::Param(_) | Node::Alt => Expr::zero(),
                Node::X => f(Leaf::X)?,
                Node::Var(v) => f(Leaf::Var(v))?,
                Node::Sum(ts) => {
                    let mut parts = Vec::new();
                    for t in ts {
                        parts.push(go(t, memo, f)?);
                    }
                    Expr::sum(parts)
                }
                Node::Prod(fs) => {
                    let mut parts = Vec::new();
                    for (i, fi) in fs.iter().enumerate() {
                        let d = go(fi, memo, f)?;
                        if d.is_zero() {
                            continue;
                        }
                        let mut factors: Vec<Expr> =
                            fs.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, g)| g.clone()).collect();
                        factors.push(d);
                        parts.push(Expr::product(factors));
                    }
                    Expr::sum(parts)
                }
                Node::Pow(b, n) => {
                    let d = go(b, memo, f)?;
                    if d.is_zero() {
                        Expr::zero()
                    } else {
                        Expr::product([Expr::num(*n as f64), b.pow(n - 1), d])
                    }
                }
                Node::Quot([a, b]) => {
                    let da = go(a, memo, f)?;
                    let db = go(b, memo, f)?;
                    let mut parts = Vec::new();
                    if !da.is_zero() {
                        parts.push(da.quot(b));
                    }
                    if !db.is_zero() {
                        parts.push((a * db).quot(&b.pow(2)).neg());
                    }
                    Expr::sum(parts)
                }
                Node::LnAbs(a) => go(a, memo, f)?.quot(a),
                Node::Abs(a) => {
                    let d = go(a, memo, f)?;
                    if d.is_zero() { d } else { (d * a).quot(e) }
                }
                Node::Sqrt(a) => {
                    let d = go(a, memo, f)?;
                    if d.is_zero() { d } else { d.quot(&(e * 2.0)) }
                }
                Node::Neg(a) => go(a, memo, f)?.neg(),
            };
            memo.insert(e.key(), out.clone());
            Ok(out)
        }
        go(self, &mut HashMap::new(), f)
    }

    /// S_I: shifts every field index and the lattice coefficient.
    pub fn shift(&self, by: Shift, sig: &Signature) -> Result<Expr> {
        if by.is_zero() {
            return Ok(self.clone());
        }
        let flip = by.total().rem_euclid(2) == 1;
        self.map_nodes(&mut |e| match e.node() {
            Node::Var(v) => {
                let w = v.shifted(by);
                sig.check(&w)?;
                Ok(Some(Expr::var(w)))
            }
            Node::Alt if flip => Ok(Some(e.neg())),
            _ => Ok(None),
        })
    }

    pub fn partial(&self, v: &FieldVar) -> Expr {
        self.derivation(&mut |leaf| {
            Ok(match leaf {
                Leaf::Var(w) if w == v => Expr::one(),
                _ => Expr::zero(),
            })
        })
        .expect("partial derivative is infallible")
    }

    /// Explicit ∂/∂x.
    pub fn partial_x(&self) -> Expr {
        self.derivation(&mut |leaf| Ok(if matches!(leaf, Leaf::X) { Expr::one() } else { Expr::zero() }))
            .expect("partial derivative is infallible")
    }

    pub fn derive(&self, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
        self.derivation(&mut |leaf| match leaf {
            Leaf::X => Ok(rule.x_rate.clone()),
            Leaf::Var(v) => {
                let up = v.with_order(v.order + 1);
                sig.check(&up)?;
                Ok(rule.rate(v.field) * Expr::var(up))
            }
        })
    }

    pub fn derive_n(&self, n: u8, rule: &DerivRule, sig: &Signature) -> Result<Expr> {
        let mut e = self.clone();
        for _ in 0..n {
            e = e.derive(rule, sig)?;
        }
        Ok(e)
    }

    /// The total derivative D = ∂/∂x + Σ u_{j+1;K} ∂/∂u_{j;K}.
    pub fn total_derivative(&self, sig: &Signature) -> Result<Expr> {
        self.derive(&DerivRule::standard(sig), sig)
    }

    /// Simultaneous substitution of field variables.
    pub fn substitute(&self, rules: &HashMap<FieldVar, Expr>) -> Expr {
        if rules.is_empty() {
            return self.clone();
        }
        self.map_nodes(&mut |e| Ok(match e.node() {
            Node::Var(v) => rules.get(v).cloned(),
            _ => None,
        }))
        .expect("substitution is infallible")
    }

    /// Substitutes named parameters and, optionally, x.
    pub fn substitute_params(&self, params: &HashMap<String, Expr>, x: Option<&Expr>) -> Expr {
        self.map_nodes(&mut |e| Ok(match e.node() {
            Node::Param(p) => params.get(&**p).cloned(),
            Node::X => x.cloned(),
            _ => None,
        }))
        .expect("substitution is infallible")
    }

    /// Σ_v ∂e/∂v · v′ over dependent and invariant fields, where v′ is the
    /// variation slot with the same index.
    pub fn tangent(&self, sig: &Signature) -> Expr {
        self.derivation(&mut |leaf| {
            Ok(match leaf {
                Leaf::Var(v) => match sig.variation_of(v.field) {
                    Some(slot) => Expr::var(FieldVar { field: slot, ..*v }),
                    None => Expr::zero(),
                },
                Leaf::X => Expr::zero(),
            })
        })
        .expect("tangent is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, MapEnv};

    fn sig() -> Signature {
        let mut s = Signature::new(2);
        s.dependent("u");
        s
    }

    #[test]
    fn shift_moves_indices_and_flips_alt() {
        let s = sig();
        let e = parse("alt*u[0,0]", &s).unwrap();
        let shifted = e.shift(Shift::from_slice(&[1, 0]), &s).unwrap();
        assert_eq!(shifted, parse("-(alt*u[1,0])", &s).unwrap());
        let twice = e.shift(Shift::from_slice(&[1, 1]), &s).unwrap();
        assert_eq!(twice, parse("alt*u[1,1]", &s).unwrap());
    }

    #[test]
    fn shift_radius_is_enforced() {
        let s = sig();
        let e = parse("u[8,0]", &s).unwrap();
        assert!(e.shift(Shift::unit(0), &s).is_err());
    }

    #[test]
    fn partial_of_product() {
        let s = sig();
        let e = parse("u[0,0]*u[1,0]", &s).unwrap();
        let d = e.partial(&s.var("u", 0, &[1, 0]).unwrap());
        assert_eq!(d, parse("u[0,0]", &s).unwrap());
    }

    #[test]
    fn simultaneous_substitution() {
        let s = sig();
        let a = s.var("u", 0, &[0, 0]).unwrap();
        let b = s.var("u", 0, &[1, 0]).unwrap();
        let rules = HashMap::from([(a, Expr::var(b)), (b, Expr::var(a))]);
        let e = parse("u[0,0] - 2*u[1,0]", &s).unwrap().substitute(&rules);
        let env = MapEnv::new().with(a, 1.0).with(b, 10.0);
        assert_eq!(e.eval(&env).unwrap(), 10.0 - 2.0);
    }
}

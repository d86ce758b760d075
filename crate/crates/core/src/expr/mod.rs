//! Immutable expression trees over lattice field variables.
//!
//! An [`Expr`] is a cheaply clonable handle to a shared node. Constructors
//! fold constants and flatten nested sums and products; nothing else is
//! canonicalized, so equality of two expressions is decided numerically.

mod calc;
mod eval;
mod parse;
mod print;
mod signature;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use calc::{DerivRule, Leaf};
pub use eval::{Env, MapEnv, Program};
pub use parse::parse;
pub use print::Printed;
pub use signature::{Caps, FieldDecl, FieldKind, Signature};

/// Largest lattice dimension supported by [`Shift`].
pub const MAX_DIM: usize = 4;

/// Integer multi-index of a lattice shift. Components past the problem
/// dimension stay zero.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Shift(pub [i32; MAX_DIM]);

impl Shift {
    pub const ZERO: Shift = Shift([0; MAX_DIM]);

    pub fn unit(dir: usize) -> Shift {
        let mut k = [0; MAX_DIM];
        k[dir] = 1;
        Shift(k)
    }

    pub fn from_slice(k: &[i32]) -> Shift {
        assert!(k.len() <= MAX_DIM, "lattice dimension above {MAX_DIM}");
        let mut out = [0; MAX_DIM];
        out[..k.len()].copy_from_slice(k);
        Shift(out)
    }

    pub fn get(&self, i: usize) -> i32 {
        self.0[i]
    }

    pub fn as_slice(&self, dim: usize) -> &[i32] {
        &self.0[..dim]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn total(&self) -> i32 {
        self.0.iter().sum()
    }

    pub fn max_abs(&self) -> i32 {
        self.0.iter().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn scaled(&self, s: i32) -> Shift {
        Shift(self.0.map(|k| k * s))
    }
}

impl ops::Add for Shift {
    type Output = Shift;
    fn add(self, rhs: Shift) -> Shift {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Shift(out)
    }
}

impl ops::Sub for Shift {
    type Output = Shift;
    fn sub(self, rhs: Shift) -> Shift {
        self + (-rhs)
    }
}

impl ops::Neg for Shift {
    type Output = Shift;
    fn neg(self) -> Shift {
        Shift(self.0.map(|k| -k))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldId(pub u16);

/// The coordinate u^α_{j;K}: field α, `order` x-derivatives, lattice shift K.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldVar {
    pub field: FieldId,
    pub order: u8,
    pub shift: Shift,
}

impl FieldVar {
    pub fn new(field: FieldId, order: u8, shift: Shift) -> FieldVar {
        FieldVar { field, order, shift }
    }

    pub fn at(field: FieldId, shift: &[i32]) -> FieldVar {
        FieldVar::new(field, 0, Shift::from_slice(shift))
    }

    pub fn shifted(&self, by: Shift) -> FieldVar {
        FieldVar { shift: self.shift + by, ..*self }
    }

    pub fn with_order(&self, order: u8) -> FieldVar {
        FieldVar { order, ..*self }
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Param(Arc<str>),
    X,
    /// Lattice coefficient (−1)^{n¹+…+n^m}.
    Alt,
    Var(FieldVar),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Expr, i32),
    Quot([Expr; 2]),
    LnAbs(Expr),
    Abs(Expr),
    Sqrt(Expr),
    Neg(Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Expr {
    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn num(c: f64) -> Expr {
        Expr::wrap(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn param(name: &str) -> Expr {
        Expr::wrap(Node::Param(name.into()))
    }

    pub fn x() -> Expr {
        Expr::wrap(Node::X)
    }

    pub fn alt() -> Expr {
        Expr::wrap(Node::Alt)
    }

    pub fn var(v: FieldVar) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut acc = 0.0;
        let mut out = Vec::new();
        for t in terms {
            match t.node() {
                Node::Const(c) => acc += c,
                Node::Sum(inner) => {
                    for s in inner {
                        match s.as_const() {
                            Some(c) => acc += c,
                            None => out.push(s.clone()),
                        }
                    }
                }
                _ => out.push(t),
            }
        }
        if acc != 0.0 {
            out.push(Expr::num(acc));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::wrap(Node::Sum(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut acc = 1.0;
        let mut out = Vec::new();
        let push = |f: &Expr, acc: &mut f64, out: &mut Vec<Expr>| match f.node() {
            Node::Const(c) => *acc *= c,
            Node::Neg(a) => {
                *acc = -*acc;
                out.push(a.clone());
            }
            _ => out.push(f.clone()),
        };
        for f in factors {
            match f.node() {
                Node::Prod(inner) => {
                    for g in inner {
                        push(g, &mut acc, &mut out);
                    }
                }
                _ => push(&f, &mut acc, &mut out),
            }
        }
        if acc == 0.0 {
            return Expr::zero();
        }
        let body = match out.len() {
            0 => return Expr::num(acc),
            1 => out.pop().unwrap(),
            _ => Expr::wrap(Node::Prod(out)),
        };
        if acc == 1.0 {
            body
        } else if acc == -1.0 {
            Expr::wrap(Node::Neg(body))
        } else {
            let mut v = vec![Expr::num(acc)];
            match body.node() {
                Node::Prod(inner) => v.extend(inner.iter().cloned()),
                _ => v.push(body),
            }
            Expr::wrap(Node::Prod(v))
        }
    }

    pub fn pow(&self, n: i32) -> Expr {
        match (self.node(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), _) => Expr::num(c.powi(n)),
            (Node::Pow(b, m), _) => Expr::wrap(Node::Pow(b.clone(), m * n)),
            _ => Expr::wrap(Node::Pow(self.clone(), n)),
        }
    }

    pub fn quot(&self, den: &Expr) -> Expr {
        match (self.node(), den.node()) {
            (Node::Const(a), Node::Const(b)) if *b != 0.0 => Expr::num(a / b),
            (Node::Const(a), _) if *a == 0.0 => Expr::zero(),
            (_, Node::Const(b)) if *b != 0.0 => Expr::product([Expr::num(1.0 / b), self.clone()]),
            (_, Node::Neg(d)) => self.quot(d).neg(),
            (Node::Neg(a), _) => a.quot(den).neg(),
            _ => Expr::wrap(Node::Quot([self.clone(), den.clone()])),
        }
    }

    pub fn recip(&self) -> Expr {
        Expr::one().quot(self)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::num(-c),
            Node::Neg(a) => a.clone(),
            _ => Expr::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn ln_abs(&self) -> Expr {
        match self.node() {
            Node::Const(c) if *c != 0.0 => Expr::num(c.abs().ln()),
            _ => Expr::wrap(Node::LnAbs(self.clone())),
        }
    }

    pub fn abs(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::num(c.abs()),
            _ => Expr::wrap(Node::Abs(self.clone())),
        }
    }

    pub fn sqrt(&self) -> Expr {
        match self.node() {
            Node::Const(c) if *c >= 0.0 => Expr::num(c.sqrt()),
            _ => Expr::wrap(Node::Sqrt(self.clone())),
        }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> &[Expr] {
        match self.node() {
            Node::Sum(v) | Node::Prod(v) => v,
            Node::Pow(a, _) | Node::LnAbs(a) | Node::Abs(a) | Node::Sqrt(a) | Node::Neg(a) => {
                std::slice::from_ref(a)
            }
            Node::Quot(ab) => ab,
            _ => &[],
        }
    }

    /// Visits every distinct node once, children before parents.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        let mut seen = std::collections::HashSet::new();
        fn go(e: &Expr, seen: &mut std::collections::HashSet<usize>, f: &mut impl FnMut(&Expr)) {
            if !seen.insert(e.key()) {
                return;
            }
            for c in e.children() {
                go(c, seen, f);
            }
            f(e);
        }
        go(self, &mut seen, f);
    }

    pub fn vars(&self) -> BTreeSet<FieldVar> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Var(v) = e.node() {
                out.insert(*v);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Param(p) = e.node() {
                out.insert(p.to_string());
            }
        });
        out
    }

    pub fn has_x(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e.node(), Node::X));
        found
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::num(c)
    }
}

impl From<FieldVar> for Expr {
    fn from(v: FieldVar) -> Expr {
        Expr::var(v)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &Expr::num(rhs))
            }
        }
        impl ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &Expr::num(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&Expr::num(self), &rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&Expr::num(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::sum([a.clone(), b.neg()]));
binop!(Mul, mul, |a, b| Expr::product([a.clone(), b.clone()]));
binop!(Div, div, |a, b| a.quot(b));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

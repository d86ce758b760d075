use std::collections::HashMap;
use std::sync::Arc;

use super::{Expr, FieldVar, Node};
use crate::error::{Error, Result};

/// Values for everything an expression may reference.
pub trait Env {
    fn field(&self, v: &FieldVar) -> Option<f64>;
    fn x(&self) -> Option<f64>;
    fn param(&self, name: &str) -> Option<f64>;
    /// n¹+…+n^m at the base point, used by the lattice coefficient.
    fn parity(&self) -> i64 {
        0
    }
}

/// A point of the prolongation space stored in hash maps.
#[derive(Clone, Debug, Default)]
pub struct MapEnv {
    pub fields: HashMap<FieldVar, f64>,
    pub x: Option<f64>,
    pub params: HashMap<String, f64>,
    pub base: Vec<i64>,
}

impl MapEnv {
    pub fn new() -> MapEnv {
        MapEnv::default()
    }

    pub fn with(mut self, v: FieldVar, value: f64) -> MapEnv {
        self.fields.insert(v, value);
        self
    }

    pub fn with_x(mut self, x: f64) -> MapEnv {
        self.x = Some(x);
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> MapEnv {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, v: FieldVar, value: f64) {
        self.fields.insert(v, value);
    }
}

impl Env for MapEnv {
    fn field(&self, v: &FieldVar) -> Option<f64> {
        self.fields.get(v).copied()
    }
    fn x(&self) -> Option<f64> {
        self.x
    }
    fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
    fn parity(&self) -> i64 {
        self.base.iter().sum()
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Param(u32),
    X,
    Alt,
    Var(u32),
    Sum(Vec<u32>),
    Prod(Vec<u32>),
    Pow(u32, i32),
    Quot(u32, u32),
    LnAbs(u32),
    Abs(u32),
    Sqrt(u32),
    Neg(u32),
}

/// An expression flattened into a straight-line program over its distinct
/// nodes, so shared subtrees are evaluated once.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    nodes: Vec<Expr>,
    vars: Vec<FieldVar>,
    params: Vec<Arc<str>>,
    /// Denominators, logarithm arguments and negative-power bases smaller
    /// than this in magnitude count as singular.
    pub guard: f64,
}

impl Program {
    pub fn new(e: &Expr) -> Program {
        let mut slot: HashMap<usize, u32> = HashMap::new();
        let mut var_slot: HashMap<FieldVar, u32> = HashMap::new();
        let mut param_slot: HashMap<Arc<str>, u32> = HashMap::new();
        let mut p = Program { ops: Vec::new(), nodes: Vec::new(), vars: Vec::new(), params: Vec::new(), guard: 0.0 };
        e.visit(&mut |n| {
            let s = |c: &Expr| slot[&c.key()];
            let op = match n.node() {
                Node::Const(c) => Op::Const(*c),
                Node::Param(name) => {
                    let next = param_slot.len() as u32;
                    let i = *param_slot.entry(name.clone()).or_insert_with(|| {
                        p.params.push(name.clone());
                        next
                    });
                    Op::Param(i)
                }
                Node::X => Op::X,
                Node::Alt => Op::Alt,
                Node::Var(v) => {
                    let next = var_slot.len() as u32;
                    let i = *var_slot.entry(*v).or_insert_with(|| {
                        p.vars.push(*v);
                        next
                    });
                    Op::Var(i)
                }
                Node::Sum(ts) => Op::Sum(ts.iter().map(s).collect()),
                Node::Prod(fs) => Op::Prod(fs.iter().map(s).collect()),
                Node::Pow(b, k) => Op::Pow(s(b), *k),
                Node::Quot([a, b]) => Op::Quot(s(a), s(b)),
                Node::LnAbs(a) => Op::LnAbs(s(a)),
                Node::Abs(a) => Op::Abs(s(a)),
                Node::Sqrt(a) => Op::Sqrt(s(a)),
                Node::Neg(a) => Op::Neg(s(a)),
            };
            slot.insert(n.key(), p.ops.len() as u32);
            p.ops.push(op);
            p.nodes.push(n.clone());
        });
        p
    }

    pub fn with_guard(mut self, guard: f64) -> Program {
        self.guard = guard;
        self
    }

    pub fn vars(&self) -> &[FieldVar] {
        &self.vars
    }

    pub fn run(&self, env: &impl Env) -> Result<f64> {
        let mut scratch = Vec::with_capacity(self.ops.len());
        self.run_with(env, &mut scratch)
    }

    pub fn run_with(&self, env: &impl Env, val: &mut Vec<f64>) -> Result<f64> {
        val.clear();
        let guard = self.guard;
        let singular = |i: usize| Error::Singular(self.nodes[i].to_string());
        for (i, op) in self.ops.iter().enumerate() {
            let r = match op {
                Op::Const(c) => *c,
                Op::Param(k) => {
                    let name = &self.params[*k as usize];
                    env.param(name).ok_or_else(|| Error::MissingVariable(name.to_string()))?
                }
                Op::X => env.x().ok_or_else(|| Error::MissingVariable("x".into()))?,
                Op::Alt => {
                    if env.parity().rem_euclid(2) == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Op::Var(k) => {
                    let v = &self.vars[*k as usize];
                    env.field(v).ok_or_else(|| Error::MissingVariable(self.nodes[i].to_string()))?
                }
                Op::Sum(ts) => ts.iter().map(|&t| val[t as usize]).sum(),
                Op::Prod(fs) => fs.iter().map(|&t| val[t as usize]).product(),
                Op::Pow(b, k) => {
                    let b = val[*b as usize];
                    if *k < 0 && (b == 0.0 || b.abs() < guard) {
                        return Err(singular(i));
                    }
                    b.powi(*k)
                }
                Op::Quot(a, b) => {
                    let d = val[*b as usize];
                    if d == 0.0 || d.abs() < guard {
                        return Err(singular(i));
                    }
                    val[*a as usize] / d
                }
                Op::LnAbs(a) => {
                    let a = val[*a as usize];
                    if a == 0.0 || a.abs() < guard {
                        return Err(singular(i));
                    }
                    a.abs().ln()
                }
                Op::Abs(a) => val[*a as usize].abs(),
                Op::Sqrt(a) => {
                    let a = val[*a as usize];
                    if a < 0.0 {
                        return Err(singular(i));
                    }
                    a.sqrt()
                }
                Op::Neg(a) => -val[*a as usize],
            };
            if !r.is_finite() {
                return Err(singular(i));
            }
            val.push(r);
        }
        Ok(*val.last().expect("program has at least one op"))
    }
}

impl Expr {
    /// Evaluates with exact-zero singularity checks only.
    pub fn eval(&self, env: &impl Env) -> Result<f64> {
        Program::new(self).run(env)
    }
}

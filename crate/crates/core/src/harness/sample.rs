use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{Expr, FieldId, FieldKind, FieldVar, MapEnv, Program, Signature};

pub const DEFAULT_SEED: u64 = 20_240_611;

/// How random admissible points are drawn.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub n_points: usize,
    pub seed: u64,
    /// Range for dependent fields and invariant symbols.
    pub range: (f64, f64),
    /// Range for variation and differential-invariant slots.
    pub slot_range: (f64, f64),
    pub x_range: (f64, f64),
    pub param_range: (f64, f64),
    pub field_ranges: BTreeMap<FieldId, (f64, f64)>,
    pub param_ranges: BTreeMap<String, (f64, f64)>,
    /// Each guard must evaluate above `margin`.
    pub guards: Vec<Expr>,
    /// Also the minimum magnitude of denominators and logarithm arguments.
    pub margin: f64,
    pub max_rejections: usize,
    pub tol: f64,
    /// Record wall time in reports.
    pub timing: bool,
}

impl Default for SamplePlan {
    fn default() -> SamplePlan {
        SamplePlan {
            n_points: 50,
            seed: DEFAULT_SEED,
            range: (-2.0, 2.0),
            slot_range: (-1.0, 1.0),
            x_range: (-2.0, 2.0),
            param_range: (0.5, 2.0),
            field_ranges: BTreeMap::new(),
            param_ranges: BTreeMap::new(),
            guards: Vec::new(),
            margin: 0.05,
            max_rejections: 200_000,
            tol: 1e-9,
            timing: false,
        }
    }
}

impl SamplePlan {
    pub fn points(mut self, n: usize) -> SamplePlan {
        self.n_points = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> SamplePlan {
        self.seed = seed;
        self
    }

    pub fn tol(mut self, tol: f64) -> SamplePlan {
        self.tol = tol;
        self
    }

    pub fn guard(mut self, g: Expr) -> SamplePlan {
        self.guards.push(g);
        self
    }

    pub fn guards(mut self, gs: impl IntoIterator<Item = Expr>) -> SamplePlan {
        self.guards.extend(gs);
        self
    }

    pub fn x_range(mut self, lo: f64, hi: f64) -> SamplePlan {
        self.x_range = (lo, hi);
        self
    }

    pub fn field_range(mut self, id: FieldId, lo: f64, hi: f64) -> SamplePlan {
        self.field_ranges.insert(id, (lo, hi));
        self
    }

    pub fn param_value(mut self, name: &str, v: f64) -> SamplePlan {
        self.param_ranges.insert(name.to_string(), (v, v));
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws points at which a fixed set of expressions and all plan guards are
/// admissible.
pub struct Sampler<'a> {
    plan: &'a SamplePlan,
    sig: &'a Signature,
    vars: Vec<FieldVar>,
    params: Vec<String>,
    guards: Vec<Program>,
    checks: Vec<Program>,
    rng: ChaCha8Rng,
    rejections: usize,
    accepted: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(plan: &'a SamplePlan, sig: &'a Signature, exprs: &[&Expr]) -> Sampler<'a> {
        let mut vars = BTreeSet::new();
        let mut params = BTreeSet::new();
        for e in exprs.iter().copied().chain(plan.guards.iter()) {
            vars.extend(e.vars());
            params.extend(e.params());
        }
        Sampler {
            plan,
            sig,
            vars: vars.into_iter().collect(),
            params: params.into_iter().collect(),
            guards: plan.guards.iter().map(|g| Program::new(g).with_guard(plan.margin)).collect(),
            checks: exprs.iter().map(|e| Program::new(e).with_guard(plan.margin)).collect(),
            rng: plan.rng(),
            rejections: 0,
            accepted: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn range_of(&self, v: &FieldVar) -> (f64, f64) {
        if let Some(r) = self.plan.field_ranges.get(&v.field) {
            return *r;
        }
        match self.sig.kind(v.field) {
            FieldKind::Dependent | FieldKind::Invariant => self.plan.range,
            _ => self.plan.slot_range,
        }
    }

    fn draw(&mut self) -> MapEnv {
        let mut env = MapEnv::new();
        let dim = self.sig.dim();
        env.base = (0..dim).map(|_| self.rng.gen_range(-3..=3)).collect();
        env.x = Some(uniform(&mut self.rng, self.plan.x_range));
        for i in 0..self.params.len() {
            let r = self.plan.param_ranges.get(&self.params[i]).copied().unwrap_or(self.plan.param_range);
            let v = uniform(&mut self.rng, r);
            env.params.insert(self.params[i].clone(), v);
        }
        for i in 0..self.vars.len() {
            let v = self.vars[i];
            let r = self.range_of(&v);
            env.set(v, uniform(&mut self.rng, r));
        }
        env
    }

    /// Next admissible point.
    pub fn next_point(&mut self) -> Result<MapEnv> {
        loop {
            if self.rejections >= self.plan.max_rejections {
                return Err(Error::SamplingExhausted { rejections: self.rejections, accepted: self.accepted });
            }
            let env = self.draw();
            let guards_ok = self.guards.iter().all(|g| matches!(g.run(&env), Ok(v) if v > self.plan.margin));
            if guards_ok && self.checks.iter().all(|p| p.run(&env).is_ok()) {
                self.accepted += 1;
                return Ok(env);
            }
            self.rejections += 1;
        }
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Numeric zero test at 20 probe points; points where `e` cannot be
/// evaluated are skipped.
pub fn is_identically_zero(e: &Expr, sig: &Signature) -> bool {
    if let Some(c) = e.as_const() {
        return c == 0.0;
    }
    let plan = SamplePlan { n_points: 20, max_rejections: 2_000, ..SamplePlan::default() };
    let mut s = Sampler::new(&plan, sig, &[e]);
    let prog = Program::new(e);
    let mut seen = 0;
    while seen < plan.n_points {
        let Ok(env) = s.next_point() else { break };
        match prog.run(&env) {
            Ok(v) if v.abs() > 1e-11 => return false,
            _ => seen += 1,
        }
    }
    true
}

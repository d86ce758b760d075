//! Finite-parameter Lie group actions with closed-form maps, their
//! generators and adjoint representations.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::DivergenceTuple;
use crate::error::{Error, Result};
use crate::expr::{DerivRule, Expr, FieldId, FieldKind, FieldVar, Node, Shift, Signature};
use crate::harness::{check_points, identity_check, scaled_residual, Report, SamplePlan};

/// Infinitesimal generator in characteristic form: ξ D + Σ Q^α ∂_{u^α}.
#[derive(Clone, Debug)]
pub struct Generator {
    pub name: String,
    pub xi: Expr,
    /// One characteristic per dependent field, in declaration order.
    pub q: Vec<Expr>,
    /// Registered B with X_Q(L) + D(ξL) = Div(B), for divergence symmetries.
    pub divergence: Option<DivergenceTuple>,
}

impl Generator {
    pub fn new(name: &str, xi: Expr, q: Vec<Expr>) -> Generator {
        Generator { name: name.to_string(), xi, q, divergence: None }
    }

    pub fn with_divergence(mut self, b: DivergenceTuple) -> Generator {
        self.divergence = Some(b);
        self
    }

    pub fn is_trivial(&self) -> bool {
        self.xi.is_zero() && self.q.iter().all(Expr::is_zero)
    }
}

/// Outcome of a variational symmetry test.
#[derive(Clone, Debug, PartialEq)]
pub enum SymmetryClass {
    Invariant,
    Divergence,
    NotSymmetry,
}

type ComposeFn = fn(&[Expr], &[Expr]) -> Vec<Expr>;
type InverseFn = fn(&[Expr]) -> Vec<Expr>;
type SampleFn = fn(&mut ChaCha8Rng) -> Vec<f64>;

/// A group acting on (x, u) through closed-form maps in parameter
/// coordinates. Lattice points are never moved.
#[derive(Clone)]
pub struct GroupAction {
    pub name: String,
    /// Names of the map parameters; they appear as parameter nodes.
    pub params: Vec<String>,
    pub identity: Vec<f64>,
    pub dependents: Vec<FieldId>,
    pub x_map: Expr,
    /// ũ^α in terms of unshifted, underived fields, x and the parameters.
    pub u_maps: Vec<Expr>,
    pub generators: Vec<Generator>,
    /// `adjoint[s][r]` is a^s_r(g), defined by v_r = a^s_r(g) ṽ_s.
    pub adjoint: Vec<Vec<Expr>>,
    /// Parameter expressions that must stay positive.
    pub chart: Vec<Expr>,
    compose: ComposeFn,
    inverse: InverseFn,
    sample: SampleFn,
}

impl std::fmt::Debug for GroupAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GroupAction").field("name", &self.name).field("params", &self.params).finish()
    }
}

fn field_expr(id: FieldId) -> Expr {
    Expr::var(FieldVar::new(id, 0, Shift::ZERO))
}

fn d1(id: FieldId) -> Expr {
    Expr::var(FieldVar::new(id, 1, Shift::ZERO))
}

fn p(name: &str) -> Expr {
    Expr::param(name)
}

fn affine_compose(g: &[Expr], h: &[Expr]) -> Vec<Expr> {
    vec![&g[1] * &h[0] + &g[0], &g[1] * &h[1]]
}

fn affine_inverse(g: &[Expr]) -> Vec<Expr> {
    vec![g[0].quot(&g[1]).neg(), g[1].recip()]
}

fn affine_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(-0.5..0.5), rng.gen_range(0.6..1.6)]
}

fn rotation_compose(g: &[Expr], h: &[Expr]) -> Vec<Expr> {
    vec![
        &g[0] + &h[0],
        &g[1] * &h[1] - &g[2] * &h[2],
        &g[1] * &h[2] + &g[2] * &h[1],
    ]
}

fn rotation_inverse(g: &[Expr]) -> Vec<Expr> {
    vec![g[0].neg(), g[1].clone(), g[2].neg()]
}

fn rotation_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let t: f64 = rng.gen_range(-0.8..0.8);
    vec![rng.gen_range(-0.5..0.5), t.cos(), t.sin()]
}

fn trivial_compose(_: &[Expr], _: &[Expr]) -> Vec<Expr> {
    Vec::new()
}

fn trivial_inverse(_: &[Expr]) -> Vec<Expr> {
    Vec::new()
}

fn trivial_sample(_: &mut ChaCha8Rng) -> Vec<f64> {
    Vec::new()
}

fn affine_adjoint() -> Vec<Vec<Expr>> {
    vec![vec![p("b"), p("a").neg()], vec![Expr::zero(), Expr::one()]]
}

fn dependents(sig: &Signature, want: usize) -> Result<Vec<FieldId>> {
    let deps = sig.dependents();
    if deps.len() != want {
        return Err(Error::Invalid(format!("action needs {want} dependent field(s), found {}", deps.len())));
    }
    Ok(deps)
}

impl GroupAction {
    /// u ↦ bu + a on one field (b > 0).
    pub fn affine_u(sig: &Signature) -> Result<GroupAction> {
        let u = dependents(sig, 1)?[0];
        Ok(GroupAction {
            name: "affine-u".into(),
            params: vec!["a".into(), "b".into()],
            identity: vec![0.0, 1.0],
            dependents: vec![u],
            x_map: Expr::x(),
            u_maps: vec![p("b") * field_expr(u) + p("a")],
            generators: vec![
                Generator::new("v1", Expr::zero(), vec![Expr::one()]),
                Generator::new("v2", Expr::zero(), vec![field_expr(u)]),
            ],
            adjoint: affine_adjoint(),
            chart: vec![p("b")],
            compose: affine_compose,
            inverse: affine_inverse,
            sample: affine_sample,
        })
    }

    /// x ↦ bx, u ↦ bu + a (b > 0).
    pub fn scale_x_affine_u(sig: &Signature) -> Result<GroupAction> {
        let u = dependents(sig, 1)?[0];
        Ok(GroupAction {
            name: "scale-x-affine-u".into(),
            params: vec!["a".into(), "b".into()],
            identity: vec![0.0, 1.0],
            dependents: vec![u],
            x_map: p("b") * Expr::x(),
            u_maps: vec![p("b") * field_expr(u) + p("a")],
            generators: vec![
                Generator::new("v1", Expr::zero(), vec![Expr::one()]),
                Generator::new("v2", Expr::x(), vec![field_expr(u) - Expr::x() * d1(u)]),
            ],
            adjoint: affine_adjoint(),
            chart: vec![p("b")],
            compose: affine_compose,
            inverse: affine_inverse,
            sample: affine_sample,
        })
    }

    /// x ↦ x + a with (u, v) rotated by an angle whose cosine and sine are
    /// the parameters c and s.
    pub fn translate_x_rotate_uv(sig: &Signature) -> Result<GroupAction> {
        let d = dependents(sig, 2)?;
        let (u, v) = (field_expr(d[0]), field_expr(d[1]));
        Ok(GroupAction {
            name: "translate-x-rotate-uv".into(),
            params: vec!["a".into(), "c".into(), "s".into()],
            identity: vec![0.0, 1.0, 0.0],
            dependents: d.clone(),
            x_map: Expr::x() + p("a"),
            u_maps: vec![p("c") * &u + p("s") * &v, p("c") * &v - p("s") * &u],
            generators: vec![
                Generator::new("v1", Expr::one(), vec![d1(d[0]).neg(), d1(d[1]).neg()]),
                Generator::new("v2", Expr::zero(), vec![v.clone(), u.neg()]),
            ],
            adjoint: vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]],
            chart: Vec::new(),
            compose: rotation_compose,
            inverse: rotation_inverse,
            sample: rotation_sample,
        })
    }

    /// The group with one element.
    pub fn trivial(sig: &Signature) -> GroupAction {
        let deps = sig.dependents();
        GroupAction {
            name: "trivial".into(),
            params: Vec::new(),
            identity: Vec::new(),
            u_maps: deps.iter().map(|&d| field_expr(d)).collect(),
            dependents: deps,
            x_map: Expr::x(),
            generators: Vec::new(),
            adjoint: Vec::new(),
            chart: Vec::new(),
            compose: trivial_compose,
            inverse: trivial_inverse,
            sample: trivial_sample,
        }
    }

    pub fn by_name(name: &str, sig: &Signature) -> Result<GroupAction> {
        match name {
            "affine-u" => GroupAction::affine_u(sig),
            "scale-x-affine-u" => GroupAction::scale_x_affine_u(sig),
            "translate-x-rotate-uv" => GroupAction::translate_x_rotate_uv(sig),
            "trivial" => Ok(GroupAction::trivial(sig)),
            _ => Err(Error::NotRegistered { kind: "action", name: name.to_string() }),
        }
    }

    pub fn n_params(&self) -> usize {
        self.generators.len()
    }

    /// The parameters as symbols.
    pub fn symbolic(&self) -> Vec<Expr> {
        self.params.iter().map(|n| p(n)).collect()
    }

    pub fn element(values: &[f64]) -> Vec<Expr> {
        values.iter().map(|&v| Expr::num(v)).collect()
    }

    pub fn compose(&self, g: &[Expr], h: &[Expr]) -> Vec<Expr> {
        (self.compose)(g, h)
    }

    pub fn inverse(&self, g: &[Expr]) -> Vec<Expr> {
        (self.inverse)(g)
    }

    /// A random element near the identity.
    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (self.sample)(rng)
    }

    fn param_map(&self, g: &[Expr]) -> HashMap<String, Expr> {
        self.params.iter().cloned().zip(g.iter().cloned()).collect()
    }

    /// Replaces the parameter symbols by the components of `g`.
    pub fn at(&self, e: &Expr, g: &[Expr]) -> Expr {
        e.substitute_params(&self.param_map(g), None)
    }

    fn index_of(&self, field: FieldId) -> Option<usize> {
        self.dependents.iter().position(|&d| d == field)
    }

    /// ∂x̃/∂x.
    pub fn x_jacobian(&self) -> Expr {
        self.x_map.partial_x()
    }

    /// ∂ũ^α/∂u^β as a matrix over the dependent fields.
    pub fn u_jacobian(&self) -> Vec<Vec<Expr>> {
        self.u_maps
            .iter()
            .map(|m| self.dependents.iter().map(|&b| m.partial(&FieldVar::new(b, 0, Shift::ZERO))).collect())
            .collect()
    }

    /// Transformed coordinates ũ_{j;K} (and their variation slots) for every
    /// variable in `vars`, with the parameters left symbolic.
    fn rules(&self, vars: &BTreeSet<FieldVar>, sig: &Signature) -> Result<HashMap<FieldVar, Expr>> {
        let rule = DerivRule::standard(sig);
        let dx = self.x_map.derive(&rule, sig)?;
        let mut prolonged: Vec<Vec<Expr>> = self.u_maps.iter().map(|m| vec![m.clone()]).collect();
        let mut out = HashMap::new();
        for v in vars {
            let (base, slot) = match sig.kind(v.field) {
                FieldKind::Dependent => (v.field, false),
                FieldKind::Variation(of) => (of, true),
                _ => continue,
            };
            let Some(a) = self.index_of(base) else { continue };
            while prolonged[a].len() <= v.order as usize {
                let last = prolonged[a].last().expect("nonempty").clone();
                prolonged[a].push(last.derive(&rule, sig)?.quot(&dx));
            }
            let moved = prolonged[a][v.order as usize].shift(v.shift, sig)?;
            out.insert(*v, if slot { moved.tangent(sig) } else { moved });
        }
        Ok(out)
    }

    /// e evaluated at g·z: x ↦ x̃ and u_{j;K} ↦ ũ_{j;K}, prolonged through
    /// ũ_{j+1;0} = Dũ_{j;0}/Dx̃. Variation slots transform by the tangent map.
    pub fn transform(&self, e: &Expr, g: &[Expr], sig: &Signature) -> Result<Expr> {
        let rules = self.rules(&e.vars(), sig)?;
        let x_new = &self.x_map;
        let moved = e.map_nodes(&mut |n| {
            Ok(match n.node() {
                Node::Var(v) => rules.get(v).cloned(),
                Node::X => Some(x_new.clone()),
                _ => None,
            })
        })?;
        Ok(self.at(&moved, g))
    }

    /// Coefficient of ∂/∂u^α_{j;K} in the prolonged characteristic: S_K D^j Q^α.
    pub fn prolong_generator(&self, v: &Generator, target: &FieldVar, sig: &Signature) -> Result<Expr> {
        let a = self.index_of(target.field).ok_or_else(|| Error::UnknownField(sig.name(target.field).to_string()))?;
        prolong(v, a, target, sig)
    }

    /// Numeric adjoint matrix, `[s][r]`.
    pub fn adjoint_matrix(&self, g: &[f64]) -> Result<Vec<Vec<f64>>> {
        let ge = GroupAction::element(g);
        let env = crate::expr::MapEnv::new();
        for c in &self.chart {
            if self.at(c, &ge).eval(&env)? <= 0.0 {
                return Err(Error::ChartViolation(format!("{} requires {c} > 0", self.name)));
            }
        }
        self.adjoint.iter().map(|row| row.iter().map(|a| self.at(a, &ge).eval(&env)).collect()).collect()
    }
}

fn prolong(v: &Generator, alpha: usize, target: &FieldVar, sig: &Signature) -> Result<Expr> {
    v.q[alpha].derive_n(target.order, &DerivRule::standard(sig), sig)?.shift(target.shift, sig)
}

/// X_Q(L) + D(ξL), which vanishes iff the generator leaves L dx invariant.
pub fn symmetry_defect(l: &Expr, v: &Generator, sig: &Signature) -> Result<Expr> {
    let deps = sig.dependents();
    let mut parts = Vec::new();
    for w in l.vars() {
        let Some(a) = deps.iter().position(|&d| d == w.field) else { continue };
        parts.push(l.partial(&w) * prolong(v, a, &w, sig)?);
    }
    if !v.xi.is_zero() {
        parts.push((&v.xi * l).total_derivative(sig)?);
    }
    Ok(Expr::sum(parts))
}

/// Classifies a generator against a Lagrangian at the points of `plan`.
pub fn check_variational_symmetry(
    l: &Expr,
    v: &Generator,
    sig: &Signature,
    plan: &SamplePlan,
) -> Result<(SymmetryClass, Report)> {
    let defect = symmetry_defect(l, v, sig)?;
    let id = format!("symmetry/{}", v.name);
    let r = identity_check(&id, &defect, &Expr::zero(), sig, plan);
    if r.passed() {
        return Ok((SymmetryClass::Invariant, r));
    }
    if let Some(b) = &v.divergence {
        let div = crate::calculus::divergence(b, sig)?;
        let rb = identity_check(&format!("{id}/divergence"), &defect, &div, sig, plan);
        if rb.passed() {
            return Ok((SymmetryClass::Divergence, rb));
        }
    }
    Ok((SymmetryClass::NotSymmetry, r))
}

/// Residual checks of an action's defining identities.
pub struct ActionChecks<'a> {
    pub action: &'a GroupAction,
    pub sig: &'a Signature,
    pub plan: &'a SamplePlan,
}

impl ActionChecks<'_> {
    /// Identity parameters leave `e` unchanged.
    pub fn identity(&self, e: &Expr) -> Result<Report> {
        let id = GroupAction::element(&self.action.identity);
        let t = self.action.transform(e, &id, self.sig)?;
        Ok(identity_check("action/identity", &t, e, self.sig, self.plan))
    }

    /// transform(transform(e, g), h) ≡ transform(e, g∘h).
    pub fn composition(&self, e: &Expr) -> Result<Report> {
        let a = self.action;
        let mut rng = self.plan.rng();
        let mut worst: f64 = 0.0;
        let mut points = 0;
        for _ in 0..5 {
            let g = GroupAction::element(&a.random_element(&mut rng));
            let h = GroupAction::element(&a.random_element(&mut rng));
            let lhs = a.transform(&a.transform(e, &g, self.sig)?, &h, self.sig)?;
            let rhs = a.transform(e, &a.compose(&g, &h), self.sig)?;
            let plan = SamplePlan { n_points: self.plan.n_points / 5 + 1, ..self.plan.clone() };
            let r = identity_check("action/composition", &lhs, &rhs, self.sig, &plan);
            if r.n_points == 0 {
                return Ok(r);
            }
            worst = worst.max(r.max_residual);
            points += r.n_points;
        }
        Ok(Report::new("action/composition", worst, self.plan.tol, points, self.plan.seed))
    }

    /// J_x ξ_r ≡ ξ̃_s a^s_r(g) and (∂ũ^α/∂u^β) S_K Q^β_r ≡ S_K(Q̃^α_s) a^s_r(g)
    /// at random g, for every shift in `shifts`.
    pub fn adjoint_identity(&self, shifts: &[Shift]) -> Result<Report> {
        let a = self.action;
        let sig = self.sig;
        let mut rng = self.plan.rng();
        let mut pairs: Vec<(Expr, Expr)> = Vec::new();
        let jac_u = a.u_jacobian();
        for _ in 0..4 {
            let g = GroupAction::element(&a.random_element(&mut rng));
            let adj: Vec<Vec<Expr>> = a.adjoint.iter().map(|row| row.iter().map(|e| a.at(e, &g)).collect()).collect();
            let jx = a.at(&a.x_jacobian(), &g);
            for r in 0..a.n_params() {
                let rhs: Vec<Expr> = (0..a.n_params())
                    .map(|s| Ok(a.transform(&a.generators[s].xi, &g, sig)? * &adj[s][r]))
                    .collect::<Result<_>>()?;
                pairs.push((&jx * &a.generators[r].xi, Expr::sum(rhs)));
                for &k in shifts {
                    for al in 0..a.dependents.len() {
                        let lhs: Vec<Expr> = (0..a.dependents.len())
                            .map(|b| Ok(a.at(&jac_u[al][b], &g) * a.generators[r].q[b].shift(k, sig)?))
                            .collect::<Result<_>>()?;
                        let rhs: Vec<Expr> = (0..a.n_params())
                            .map(|s| {
                                let qs = a.generators[s].q[al].shift(k, sig)?;
                                Ok(a.transform(&qs, &g, sig)? * &adj[s][r])
                            })
                            .collect::<Result<_>>()?;
                        pairs.push((Expr::sum(lhs), Expr::sum(rhs)));
                    }
                }
            }
        }
        Ok(pairs_check("action/adjoint-identity", &pairs, sig, self.plan))
    }

    /// a(g∘h) = a(g)·a(h) at random numeric g, h.
    pub fn representation(&self) -> Result<Report> {
        let a = self.action;
        let mut rng = self.plan.rng();
        let mut worst: f64 = 0.0;
        let n = a.n_params();
        let trials = 20;
        for _ in 0..trials {
            let g = a.random_element(&mut rng);
            let h = a.random_element(&mut rng);
            let gh = a.compose(&GroupAction::element(&g), &GroupAction::element(&h));
            let env = crate::expr::MapEnv::new();
            let gh: Vec<f64> = gh.iter().map(|e| e.eval(&env)).collect::<Result<_>>()?;
            let (ag, ah, agh) = (a.adjoint_matrix(&g)?, a.adjoint_matrix(&h)?, a.adjoint_matrix(&gh)?);
            for s in 0..n {
                for r in 0..n {
                    let prod: f64 = (0..n).map(|l| ag[s][l] * ah[l][r]).sum();
                    worst = worst.max(scaled_residual(agh[s][r], prod));
                }
            }
            let id = a.adjoint_matrix(&a.identity)?;
            for s in 0..n {
                for r in 0..n {
                    worst = worst.max((id[s][r] - if s == r { 1.0 } else { 0.0 }).abs());
                }
            }
        }
        Ok(Report::new("action/representation", worst, self.plan.tol, trials, self.plan.seed))
    }
}

/// Largest residual over several expression pairs sharing one sampler.
pub fn pairs_check(id: &str, pairs: &[(Expr, Expr)], sig: &Signature, plan: &SamplePlan) -> Report {
    let exprs: Vec<&Expr> = pairs.iter().flat_map(|(a, b)| [a, b]).collect();
    let progs: Vec<_> = pairs
        .iter()
        .map(|(a, b)| (crate::expr::Program::new(a), crate::expr::Program::new(b)))
        .collect();
    check_points(id, sig, plan, &exprs, |env, _| {
        let mut worst: f64 = 0.0;
        for (a, b) in &progs {
            worst = worst.max(scaled_residual(a.run(env)?, b.run(env)?));
        }
        Ok(Some(worst))
    })
}

//! Moving frames with closed-form parameters, invariantization, Maurer–Cartan
//! invariants, generating invariants and their differential syzygies.

use std::collections::HashMap;
use std::sync::Arc;

use serde_json::json;

use crate::calculus::LinDiffOp;
use crate::error::{Error, Result};
use crate::expr::{DerivRule, Expr, FieldId, FieldKind, FieldVar, MapEnv, Node, Program, Shift, Signature};
use crate::group::{pairs_check, GroupAction};
use crate::harness::{identity_check, Report, SamplePlan, Sampler};

/// A frame ρ solving the normalization equations in closed form.
#[derive(Clone, Debug)]
pub struct Frame {
    pub name: String,
    /// Original fields, invariant symbols and their slots.
    pub sig: Signature,
    pub action: GroupAction,
    /// Coordinates z_r with ι(z_r) = c_r.
    pub normalization: Vec<(Expr, f64)>,
    /// Group parameters on the frame, ordered as `action.params`.
    pub params: Vec<Expr>,
    /// Chart: each must stay positive.
    pub guards: Vec<Expr>,
    pub x_range: Option<(f64, f64)>,
}

/// Inverse of a 1×1 or 2×2 matrix of expressions.
pub fn invert_small(m: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>> {
    match m.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![vec![m[0][0].recip()]]),
        2 => {
            let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
            Ok(vec![
                vec![m[1][1].quot(&det), m[0][1].neg().quot(&det)],
                vec![m[1][0].neg().quot(&det), m[0][0].quot(&det)],
            ])
        }
        n => Err(Error::Invalid(format!("{n}×{n} inverse not supported"))),
    }
}

impl Frame {
    /// A sampling plan restricted to the chart.
    pub fn plan(&self, base: &SamplePlan) -> SamplePlan {
        let mut p = base.clone().guards(self.guards.iter().cloned());
        if let Some((lo, hi)) = self.x_range {
            p = p.x_range(lo, hi);
        }
        p
    }

    /// An expression in the action parameters evaluated on the frame.
    pub fn on_frame(&self, e: &Expr) -> Expr {
        self.action.at(e, &self.params)
    }

    /// 𝒥 = ∂x̃/∂x on the frame, so that ι(dx) = 𝒥 dx.
    pub fn jacobian(&self) -> Expr {
        self.on_frame(&self.action.x_jacobian())
    }

    /// The invariant derivative 𝒟 = 𝒥⁻¹D on original variables; invariant
    /// symbols and σ slots already carry 𝒟 in their derivative index.
    pub fn inv_rule(&self) -> DerivRule {
        let jinv = self.jacobian().recip();
        let sig = &self.sig;
        DerivRule::standard(sig).with_rate(sig, |id| sig.kind(id).is_original(), &jinv).with_x_rate(jinv)
    }

    pub fn invariantize(&self, e: &Expr) -> Result<Expr> {
        self.action.transform(e, &self.params, &self.sig)
    }

    /// ι(x), folded to a number when the frame pins x to a constant.
    pub fn iota_x(&self) -> Result<Expr> {
        let e = self.invariantize(&Expr::x())?;
        if !e.vars().is_empty() || !e.params().is_empty() {
            return Ok(e);
        }
        let prog = Program::new(&e);
        let vals = [0.7, 1.3, 1.9].iter().map(|&x| prog.run(&MapEnv::new().with_x(x))).collect::<Result<Vec<_>>>()?;
        let c = vals[0];
        if vals.iter().all(|v| (v - c).abs() <= 1e-12 * (1.0 + c.abs())) {
            let r = c.round();
            return Ok(Expr::num(if (c - r).abs() <= 1e-12 { r } else { c }));
        }
        Ok(e)
    }

    /// ι(e), except that a normalized coordinate becomes its constant once
    /// the closed form is confirmed to match it at chart points. The raw
    /// form can miss the constant by rounding, e.g. u/x − u/x.
    pub fn iota_exact(&self, e: &Expr) -> Result<Expr> {
        if *e == Expr::x() {
            return self.iota_x();
        }
        let raw = self.invariantize(e)?;
        let Some((_, c)) = self.normalization.iter().find(|(z, _)| z == e) else {
            return Ok(raw);
        };
        let plan = self.plan(&SamplePlan::default().points(8));
        let mut sampler = Sampler::new(&plan, &self.sig, &[&raw]);
        for _ in 0..plan.n_points {
            let v = raw.eval(&sampler.next_point()?)?;
            if (v - c).abs() > 1e-12 * (1.0 + c.abs()) {
                return Ok(raw);
            }
        }
        Ok(Expr::num(*c))
    }

    /// The frame parameters entering x̃ depend on x alone.
    pub fn is_projectable(&self) -> bool {
        let used = self.action.x_map.params();
        self.action
            .params
            .iter()
            .zip(&self.params)
            .filter(|(name, _)| used.contains(*name))
            .all(|(_, p)| p.vars().is_empty())
    }

    pub fn adjoint_on_frame(&self) -> Vec<Vec<Expr>> {
        self.action.adjoint.iter().map(|row| row.iter().map(|a| self.on_frame(a)).collect()).collect()
    }

    /// K_(dir) = (S_dir ρ)·ρ⁻¹ in parameter coordinates.
    pub fn maurer_cartan(&self, dir: Shift) -> Result<Vec<Expr>> {
        let shifted: Vec<Expr> = self.params.iter().map(|p| p.shift(dir, &self.sig)).collect::<Result<_>>()?;
        Ok(self.action.compose(&shifted, &self.action.inverse(&self.params)))
    }

    fn group_samples(&self, plan: &SamplePlan, n: usize) -> Vec<Vec<Expr>> {
        let mut rng = plan.rng();
        (0..n).map(|_| GroupAction::element(&self.action.random_element(&mut rng))).collect()
    }

    /// ι(z_r) = c_r.
    pub fn verify_normalization(&self, plan: &SamplePlan) -> Result<Report> {
        let pairs = self
            .normalization
            .iter()
            .map(|(z, c)| Ok((self.invariantize(z)?, Expr::num(*c))))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs_check("frame/normalization", &pairs, &self.sig, &self.plan(plan)))
    }

    /// ρ(g·z) = ρ(z)·g⁻¹ at random g.
    pub fn verify_equivariance(&self, plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let mut pairs = Vec::new();
        for g in self.group_samples(plan, n_group) {
            let rhs = self.action.compose(&self.params, &self.action.inverse(&g));
            for (p, r) in self.params.iter().zip(rhs) {
                pairs.push((self.action.transform(p, &g, &self.sig)?, r));
            }
        }
        Ok(pairs_check("frame/equivariance", &pairs, &self.sig, &self.plan(plan)))
    }

    /// ι(ι(e)) = ι(e).
    pub fn verify_projection(&self, exprs: &[Expr], plan: &SamplePlan) -> Result<Report> {
        let mut pairs = Vec::new();
        for e in exprs {
            let once = self.invariantize(e)?;
            pairs.push((self.invariantize(&once)?, once));
        }
        Ok(pairs_check("frame/projection", &pairs, &self.sig, &self.plan(plan)))
    }

    /// ι(e) is unchanged by random group elements.
    pub fn verify_invariance(&self, exprs: &[Expr], plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let inv: Vec<Expr> = exprs.iter().map(|e| self.invariantize(e)).collect::<Result<_>>()?;
        self.invariance_pairs("frame/invariance", &inv, plan, n_group)
    }

    fn invariance_pairs(&self, id: &str, exprs: &[Expr], plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let mut pairs = Vec::new();
        for g in self.group_samples(plan, n_group) {
            for e in exprs {
                pairs.push((self.action.transform(e, &g, &self.sig)?, e.clone()));
            }
        }
        Ok(pairs_check(id, &pairs, &self.sig, &self.plan(plan)))
    }

    /// Every component of every K_(i) is invariant.
    pub fn verify_maurer_cartan(&self, plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let mut comps = Vec::new();
        for i in 0..self.sig.dim() {
            comps.extend(self.maurer_cartan(Shift::unit(i))?);
        }
        self.invariance_pairs("frame/maurer-cartan", &comps, plan, n_group)
    }

    /// (S₁S₂ρ)ρ⁻¹ = (S₂K₍₁₎)·K₍₂₎, or (S²ρ)ρ⁻¹ = (SK)·K on a line.
    pub fn verify_concatenation(&self, plan: &SamplePlan) -> Result<Report> {
        let (d1, d2) = if self.sig.dim() >= 2 { (Shift::unit(0), Shift::unit(1)) } else { (Shift::unit(0), Shift::unit(0)) };
        let k1 = self.maurer_cartan(d1)?;
        let k2 = self.maurer_cartan(d2)?;
        let k1s: Vec<Expr> = k1.iter().map(|e| e.shift(d2, &self.sig)).collect::<Result<_>>()?;
        let rhs = self.action.compose(&k1s, &k2);
        let both: Vec<Expr> = self.params.iter().map(|p| p.shift(d1 + d2, &self.sig)).collect::<Result<_>>()?;
        let lhs = self.action.compose(&both, &self.action.inverse(&self.params));
        let pairs: Vec<(Expr, Expr)> = lhs.into_iter().zip(rhs).collect();
        Ok(pairs_check("frame/concatenation", &pairs, &self.sig, &self.plan(plan)))
    }

    /// 𝒟∘S_K = S_K∘𝒟 and invariance of 𝒟ι(e). Vacuous without x.
    pub fn verify_commutation(&self, exprs: &[Expr], plan: &SamplePlan, n_group: usize) -> Result<Report> {
        if !self.sig.continuous {
            return Ok(Report::new("frame/commutation", 0.0, plan.tol, 0, plan.seed).with_note("no continuous variable"));
        }
        if !self.is_projectable() {
            return Ok(Report::failed("frame/commutation", plan.seed, "frame is not projectable".into()));
        }
        let rule = self.inv_rule();
        let mut pairs = Vec::new();
        for e in exprs {
            for k in [Shift::unit(0), Shift::unit(0).scaled(-1)] {
                pairs.push((e.shift(k, &self.sig)?.derive(&rule, &self.sig)?, e.derive(&rule, &self.sig)?.shift(k, &self.sig)?));
            }
        }
        let comm = pairs_check("frame/commutation", &pairs, &self.sig, &self.plan(plan));
        let dinv: Vec<Expr> =
            exprs.iter().map(|e| self.invariantize(e)?.derive(&rule, &self.sig)).collect::<Result<_>>()?;
        let inv = self.invariance_pairs("frame/commutation", &dinv, plan, n_group)?;
        Ok(if comm.max_residual >= inv.max_residual || !comm.passed() { comm } else { inv })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let sig = &self.sig;
        let norm: Vec<_> =
            self.normalization.iter().map(|(z, c)| json!({"coordinate": z.print(sig), "value": c})).collect();
        let params: serde_json::Map<String, serde_json::Value> = self
            .action
            .params
            .iter()
            .zip(&self.params)
            .map(|(n, p)| (n.clone(), json!(p.print(sig))))
            .collect();
        json!({
            "name": self.name,
            "action": self.action.name,
            "normalization": norm,
            "parameters": params,
            "guards": self.guards.iter().map(|g| g.print(sig)).collect::<Vec<_>>(),
            "projectable": self.is_projectable(),
        })
    }
}

/// ι(u_{j;K}) in invariant symbols, for a dependent-field variable.
pub type Recurrence = Arc<dyn Fn(&FieldVar, &Signature) -> Result<Expr> + Send + Sync>;

/// Two sides of a relation among invariant symbols.
#[derive(Clone, Debug)]
pub struct Syzygy {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
}

/// Generating invariants κ^β and σ^α of a frame with the table linking
/// invariant symbols to original variables.
#[derive(Clone)]
pub struct InvariantSet {
    pub frame: Frame,
    /// Symbol field and its definition in original variables.
    pub kappa: Vec<(FieldId, Expr)>,
    /// σ^α = ι((u^α)′), one per dependent field.
    pub sigma: Vec<(FieldId, Expr)>,
    pub syzygies: Vec<Syzygy>,
    recurrence: Recurrence,
}

impl std::fmt::Debug for InvariantSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InvariantSet").field("frame", &self.frame.name).finish()
    }
}

impl InvariantSet {
    pub fn new(frame: Frame, kappa: Vec<(FieldId, Expr)>, sigma_fields: &[FieldId], recurrence: Recurrence) -> Result<InvariantSet> {
        let deps = frame.sig.dependents();
        if sigma_fields.len() != deps.len() {
            return Err(Error::Invalid("one σ symbol per dependent field".into()));
        }
        let mut sigma = Vec::new();
        for (&s, &u) in sigma_fields.iter().zip(&deps) {
            let slot = frame.sig.variation_of(u).expect("dependent has a slot");
            sigma.push((s, frame.invariantize(&Expr::var(FieldVar::new(slot, 0, Shift::ZERO)))?));
        }
        Ok(InvariantSet { frame, kappa, sigma, syzygies: Vec::new(), recurrence })
    }

    pub fn with_syzygy(mut self, name: &str, lhs: Expr, rhs: Expr) -> InvariantSet {
        self.syzygies.push(Syzygy { name: name.to_string(), lhs, rhs });
        self
    }

    pub fn sig(&self) -> &Signature {
        &self.frame.sig
    }

    fn definition(&self, field: FieldId) -> Option<&Expr> {
        self.kappa.iter().chain(&self.sigma).find(|(f, _)| *f == field).map(|(_, d)| d)
    }

    /// Replaces every invariant symbol, κ slot and σ slot by its expression
    /// in original variables: κ_{j;K} ↦ 𝒟^j S_K κ, κ′ ↦ d/dt of that.
    pub fn expand(&self, e: &Expr) -> Result<Expr> {
        let sig = self.sig();
        let rule = self.frame.inv_rule();
        let mut rules = HashMap::new();
        for v in e.vars() {
            let sym = match sig.kind(v.field) {
                FieldKind::Invariant | FieldKind::DiffInvariant => v,
                FieldKind::InvariantVariation(of) => FieldVar { field: of, ..v },
                _ => continue,
            };
            let def = self
                .definition(sym.field)
                .ok_or_else(|| Error::MissingClosedForm(sig.name(sym.field).to_string()))?;
            let mut out = def.derive_n(v.order, &rule, sig)?.shift(v.shift, sig)?;
            if matches!(sig.kind(v.field), FieldKind::InvariantVariation(_)) {
                out = out.tangent(sig);
            }
            rules.insert(v, out);
        }
        Ok(e.substitute(&rules))
    }

    /// ι(u^α_{j;K}) in invariant symbols.
    pub fn iota_var(&self, v: &FieldVar) -> Result<Expr> {
        (self.recurrence)(v, self.sig())
    }

    /// Rewrites an invariant written in original variables in terms of the
    /// symbols, by the replacement rule F(z) = F(ι(z)).
    pub fn reduce(&self, e: &Expr) -> Result<Expr> {
        let sig = self.sig();
        let mut rules = HashMap::new();
        for v in e.vars() {
            match sig.kind(v.field) {
                FieldKind::Dependent => {
                    rules.insert(v, self.iota_var(&v)?);
                }
                FieldKind::Variation(_) => {
                    return Err(Error::Invalid("reduce works on expressions without variation slots".into()))
                }
                _ => {}
            }
        }
        let ix = self.frame.iota_x()?;
        Ok(e.substitute(&rules).substitute_params(&HashMap::new(), Some(&ix)))
    }

    /// H^β_α derived from d κ^β/dt by writing (u^α)′ through σ and reading
    /// off the coefficients, indexed `[β][α]`.
    pub fn derive_h(&self) -> Result<Vec<Vec<LinDiffOp>>> {
        let sig = self.sig();
        let frame = &self.frame;
        let jac = frame.action.u_jacobian();
        let at_frame: Vec<Vec<Expr>> = jac.iter().map(|row| row.iter().map(|e| frame.on_frame(e)).collect()).collect();
        let theta = invert_small(&at_frame)?;
        let sigma_rule =
            DerivRule::standard(sig).with_rate(sig, |id| sig.kind(id) == FieldKind::DiffInvariant, &frame.jacobian());
        let deps = sig.dependents();
        let u_dot: Vec<Expr> = (0..deps.len())
            .map(|a| {
                Expr::sum(
                    self.sigma.iter().enumerate().map(|(g, (s, _))| &theta[a][g] * Expr::var(FieldVar::new(*s, 0, Shift::ZERO))),
                )
            })
            .collect();
        let mut out = Vec::new();
        for (_, def) in &self.kappa {
            let t = def.tangent(sig);
            let mut rules = HashMap::new();
            for v in t.vars() {
                if let FieldKind::Variation(of) = sig.kind(v.field) {
                    let a = deps.iter().position(|&d| d == of).expect("slot of a dependent");
                    rules.insert(v, u_dot[a].derive_n(v.order, &sigma_rule, sig)?.shift(v.shift, sig)?);
                }
            }
            let form = t.substitute(&rules);
            let mut row = Vec::new();
            for (s, _) in &self.sigma {
                let op = LinDiffOp::from_linear(&form, *s).normalized(sig);
                let mut reduced = LinDiffOp::zero();
                for term in op.terms {
                    reduced = reduced.term(self.reduce(&term.coeff)?, term.shift, term.order);
                }
                row.push(reduced);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Σ_α H^β_α σ^α for each β, as symbol expressions.
    pub fn apply_h(&self, h: &[Vec<LinDiffOp>]) -> Result<Vec<Expr>> {
        let rule = self.frame.inv_rule();
        h.iter()
            .map(|row| {
                let parts = row
                    .iter()
                    .zip(&self.sigma)
                    .map(|(op, (s, _))| op.apply(&Expr::var(FieldVar::new(*s, 0, Shift::ZERO)), &rule, self.sig()))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Expr::sum(parts))
            })
            .collect()
    }

    /// d κ^β/dt = H^β_α σ^α with the σ expanded, at random slot values.
    pub fn verify_differential_syzygies(&self, h: &[Vec<LinDiffOp>], plan: &SamplePlan) -> Result<Report> {
        let mut pairs = Vec::new();
        for ((_, def), applied) in self.kappa.iter().zip(self.apply_h(h)?) {
            pairs.push((self.expand(&applied)?, def.tangent(self.sig())));
        }
        Ok(pairs_check("invariants/differential-syzygy", &pairs, self.sig(), &self.frame.plan(plan)))
    }

    /// Two operator matrices act identically on σ.
    pub fn compare_h(&self, a: &[Vec<LinDiffOp>], b: &[Vec<LinDiffOp>], plan: &SamplePlan) -> Result<Report> {
        let mut pairs = Vec::new();
        for (x, y) in self.apply_h(a)?.into_iter().zip(self.apply_h(b)?) {
            pairs.push((self.expand(&x)?, self.expand(&y)?));
        }
        Ok(pairs_check("invariants/operator-match", &pairs, self.sig(), &self.frame.plan(plan)))
    }

    pub fn verify_syzygy(&self, s: &Syzygy, plan: &SamplePlan) -> Result<Report> {
        let lhs = self.expand(&s.lhs)?;
        let rhs = self.expand(&s.rhs)?;
        Ok(identity_check(&format!("syzygy/{}", s.name), &lhs, &rhs, self.sig(), &self.frame.plan(plan)))
    }

    /// The recurrence table agrees with direct invariantization.
    pub fn verify_recurrences(&self, targets: &[FieldVar], plan: &SamplePlan) -> Result<Report> {
        let pairs = targets
            .iter()
            .map(|v| Ok((self.expand(&self.iota_var(v)?)?, self.frame.invariantize(&Expr::var(*v))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs_check("invariants/recurrence", &pairs, self.sig(), &self.frame.plan(plan)))
    }

    /// F ≡ F(ι(z)) through the recurrence table, for invariant F.
    pub fn verify_replacement(&self, invariants: &[Expr], plan: &SamplePlan) -> Result<Report> {
        let pairs = invariants
            .iter()
            .map(|f| Ok((self.expand(&self.reduce(f)?)?, f.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs_check("frame/replacement", &pairs, self.sig(), &self.frame.plan(plan)))
    }

    /// The κ definitions themselves are invariant.
    pub fn verify_kappa_invariance(&self, plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let defs: Vec<Expr> = self.kappa.iter().map(|(_, d)| d.clone()).collect();
        self.frame.invariance_pairs("invariants/kappa", &defs, plan, n_group)
    }
}

/// True when `e` mentions an invariant symbol or slot.
pub fn has_symbols(e: &Expr, sig: &Signature) -> bool {
    let mut found = false;
    e.visit(&mut |n| {
        if let Node::Var(v) = n.node() {
            found |= !sig.kind(v.field).is_original();
        }
    });
    found
}

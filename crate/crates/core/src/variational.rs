//! Invariant Euler–Lagrange equations and Noether conservation laws in
//! original, invariant and equivariant form.

use serde::Serialize;
use serde_json::json;

use crate::calculus::{
    decompose_variation, divergence, euler_lagrange, euler_operator, fill_slot, split_linear, DivergenceTuple,
    LinDiffOp, LinearSplit,
};
use crate::error::{Error, Result};
use crate::expr::{Expr, FieldId, FieldVar, Shift, Signature};
use crate::frame::{invert_small, InvariantSet};
use crate::group::{check_variational_symmetry, pairs_check, Generator, GroupAction, SymmetryClass};
use crate::harness::{identity_check, Report, SamplePlan};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawForm {
    Original,
    Invariant,
    Equivariant,
}

/// Components of a conservation law Div(A) = 0 (on solutions).
///
/// Original-form laws use Div = D A⁰ + Σ(S_i − id)A^i in original
/// variables. Invariant and equivariant forms use 𝒟iv = 𝒟A⁰ + Σ(S_i − id)A^i
/// and may mention invariant symbols.
#[derive(Clone, Debug)]
pub struct ConservationLaw {
    pub generator: String,
    pub form: LawForm,
    pub components: DivergenceTuple,
}

impl ConservationLaw {
    pub fn to_json(&self, sig: &Signature, report: Option<&Report>) -> serde_json::Value {
        json!({
            "generator": self.generator,
            "form": self.form,
            "components": self.components.to_strings(sig),
            "residual_stats": report,
        })
    }
}

/// An invariant Lagrangian together with its frame data.
#[derive(Clone, Debug)]
pub struct VariationalProblem {
    pub inv: InvariantSet,
    pub lagrangian: Expr,
    /// L^κ with L dx = L^κ ι(dx).
    pub l_kappa: Expr,
    /// Differential syzygy operators, `h[β][α]`.
    pub h: Vec<Vec<LinDiffOp>>,
}

impl VariationalProblem {
    pub fn sig(&self) -> &Signature {
        self.inv.sig()
    }

    pub fn action(&self) -> &GroupAction {
        &self.inv.frame.action
    }

    fn plan(&self, plan: &SamplePlan) -> SamplePlan {
        self.inv.frame.plan(plan)
    }

    fn kappa_fields(&self) -> Vec<FieldId> {
        self.inv.kappa.iter().map(|(f, _)| *f).collect()
    }

    fn sigma_fields(&self) -> Vec<FieldId> {
        self.inv.sigma.iter().map(|(f, _)| *f).collect()
    }

    /// L ≡ 𝒥·L^κ in original variables.
    pub fn verify_lagrangian(&self, plan: &SamplePlan) -> Result<Report> {
        let rhs = self.inv.frame.jacobian() * self.inv.expand(&self.l_kappa)?;
        Ok(identity_check("lagrangian/invariant-form", &self.lagrangian, &rhs, self.sig(), &self.plan(plan)))
    }

    /// E_{κ^β}(L^κ), relative to 𝒟.
    pub fn euler_kappa(&self) -> Result<Vec<Expr>> {
        let rule = self.inv.frame.inv_rule();
        self.kappa_fields().into_iter().map(|k| euler_operator(&self.l_kappa, k, &rule, self.sig())).collect()
    }

    /// E_{u^α}(L) for every dependent field.
    pub fn euler_lagrange(&self) -> Result<Vec<Expr>> {
        self.sig().dependents().into_iter().map(|u| euler_lagrange(&self.lagrangian, u, self.sig())).collect()
    }

    /// (H^β_α)† E_{κ^β}(L^κ) for each α.
    pub fn invariant_euler_lagrange(&self) -> Result<Vec<Expr>> {
        let rule = self.inv.frame.inv_rule();
        let e = self.euler_kappa()?;
        let n_fields = self.inv.sigma.len();
        let mut out = Vec::with_capacity(n_fields);
        for a in 0..n_fields {
            let mut parts = Vec::new();
            for (b, row) in self.h.iter().enumerate() {
                parts.push(row[a].adjoint(&rule, self.sig())?.apply(&e[b], &rule, self.sig())?);
            }
            out.push(Expr::sum(parts));
        }
        Ok(out)
    }

    /// The invariant equations against ι(E_u(L)) and, if given, stored forms.
    pub fn verify_invariant_el(&self, stored: &[Expr], plan: &SamplePlan) -> Result<Vec<Report>> {
        let computed = self.invariant_euler_lagrange()?;
        let el = self.euler_lagrange()?;
        let mut direct = Vec::new();
        let mut against_stored = Vec::new();
        for (a, c) in computed.iter().enumerate() {
            let c = self.inv.expand(c)?;
            direct.push((c.clone(), self.inv.frame.invariantize(&el[a])?));
            if let Some(s) = stored.get(a) {
                against_stored.push((c, self.inv.expand(s)?));
            }
        }
        let plan = self.plan(plan);
        let mut out = vec![pairs_check("invariant-el/iota", &direct, self.sig(), &plan)];
        if !against_stored.is_empty() {
            out.push(pairs_check("invariant-el/stored", &against_stored, self.sig(), &plan));
        }
        Ok(out)
    }

    /// E_κ(L^κ)·H σ = (H†E_κ(L^κ))σ + 𝒟iv(A_H), split over the σ slots.
    pub fn a_h(&self) -> Result<LinearSplit> {
        let applied = self.inv.apply_h(&self.h)?;
        let e = self.euler_kappa()?;
        let form = Expr::sum(e.iter().zip(applied).map(|(a, b)| a * b));
        split_linear(&form, &self.sigma_fields(), &self.inv.frame.inv_rule(), self.sig())
    }

    /// dL^κ/dt = E_κ(L^κ)κ′ + 𝒟iv(A_κ), split over the κ′ slots.
    pub fn a_kappa(&self) -> Result<LinearSplit> {
        let sig = self.sig();
        let slots: Vec<FieldId> =
            self.kappa_fields().into_iter().map(|k| sig.variation_of(k).expect("invariant has a slot")).collect();
        split_linear(&self.l_kappa.tangent(sig), &slots, &self.inv.frame.inv_rule(), sig)
    }

    /// (A⁰; 𝒥A^i) in original variables, so that its Div equals 𝒥·𝒟iv(A).
    pub fn to_original(&self, t: &DivergenceTuple) -> Result<DivergenceTuple> {
        let jac = self.inv.frame.jacobian();
        Ok(DivergenceTuple {
            a0: t.a0.as_ref().map(|a| self.inv.expand(a)).transpose()?,
            comps: t.comps.iter().map(|c| Ok(&jac * self.inv.expand(c)?)).collect::<Result<_>>()?,
        })
    }

    /// Div(A_u) ≡ 𝒥·𝒟iv(A_H + A_κ) with fresh variation slots.
    pub fn verify_divergence_equivalence(&self, plan: &SamplePlan) -> Result<Report> {
        let sig = self.sig();
        let lhs = divergence(&decompose_variation(&self.lagrangian, sig)?.boundary, sig)?;
        let both = self.a_h()?.boundary.add(&self.a_kappa()?.boundary);
        let rhs = divergence(&self.to_original(&both)?, sig)?;
        Ok(identity_check("divergence-equivalence", &lhs, &rhs, sig, &self.plan(plan)))
    }

    /// The split's σ coefficients agree with H†E_κ(L^κ).
    pub fn verify_adjoint_split(&self, plan: &SamplePlan) -> Result<Report> {
        let split = self.a_h()?;
        let direct = self.invariant_euler_lagrange()?;
        let pairs = split
            .coeffs
            .iter()
            .zip(&direct)
            .map(|(a, b)| Ok((self.inv.expand(a)?, self.inv.expand(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs_check("invariant-el/split", &pairs, self.sig(), &self.plan(plan)))
    }

    /// Σ_α Q^α E_α(L) + Div(A) for an original-form law.
    pub fn noether_residual(&self, v: &Generator, law: &DivergenceTuple) -> Result<Expr> {
        let el = self.euler_lagrange()?;
        let mut parts: Vec<Expr> = v.q.iter().zip(&el).map(|(q, e)| q * e).collect();
        parts.push(divergence(law, self.sig())?);
        Ok(Expr::sum(parts))
    }

    /// Thm-style law: A_u with (u^α)′ ↦ Q^α, plus (ξL; 0).
    pub fn noether_original(&self, v: &Generator, plan: &SamplePlan) -> Result<ConservationLaw> {
        let sig = self.sig();
        let (class, _) = check_variational_symmetry(&self.lagrangian, v, sig, &self.plan(plan))?;
        if class != SymmetryClass::Invariant {
            return Err(Error::NotSymmetry(v.name.clone()));
        }
        let split = decompose_variation(&self.lagrangian, sig)?;
        let std_rule = crate::expr::DerivRule::standard(sig);
        let mut law = split.boundary;
        for (u, q) in sig.dependents().into_iter().zip(&v.q) {
            let slot = sig.variation_of(u).expect("dependent has a slot");
            law = law.try_map(|c| fill_slot(c, slot, q, &std_rule, sig))?;
        }
        if !v.xi.is_zero() {
            let extra = &v.xi * &self.lagrangian;
            law.a0 = Some(law.a0.take().map_or(extra.clone(), |a| a + extra));
        }
        Ok(ConservationLaw { generator: v.name.clone(), form: LawForm::Original, components: law })
    }

    /// Off-shell check of an original-form law.
    pub fn verify_original_law(&self, v: &Generator, law: &ConservationLaw, plan: &SamplePlan) -> Result<Report> {
        let res = self.noether_residual(v, &law.components)?;
        Ok(identity_check(&format!("noether/{}/original", v.name), &res, &Expr::zero(), self.sig(), &self.plan(plan)))
    }

    /// Σ_s ι(e_s)·a^s_r(ρ) in original variables.
    fn frame_combination(&self, r: usize, pick: impl Fn(&Generator) -> Expr) -> Result<Expr> {
        let adj = self.inv.frame.adjoint_on_frame();
        let gens = &self.action().generators;
        let parts = gens
            .iter()
            .enumerate()
            .map(|(s, g)| Ok(self.inv.frame.invariantize(&pick(g))? * &adj[s][r]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Expr::sum(parts))
    }

    /// Invariant-form law for the r-th action generator, built from A_H with
    /// σ^α ↦ ι(Q^α_s)a^s_r(ρ) and, for x-moving generators, A_κ with
    /// κ′ ↦ −𝒟κ·ι(ξ_s)a^s_r(ρ) plus L^κ ι(ξ_s)a^s_r(ρ) in A⁰.
    pub fn noether_invariant(&self, r: usize) -> Result<ConservationLaw> {
        self.noether_invariant_with(r, true)
    }

    /// As [`noether_invariant`](Self::noether_invariant); `lk_term = false`
    /// drops the L^κ term, which must break the law when ξ ≠ 0.
    pub fn noether_invariant_with(&self, r: usize, lk_term: bool) -> Result<ConservationLaw> {
        let sig = self.sig();
        let gens = &self.action().generators;
        let v = gens.get(r).ok_or_else(|| Error::Invalid(format!("generator index {} out of range", r + 1)))?;
        let rule = self.inv.frame.inv_rule();
        let mut law = self.a_h()?.boundary;
        for (a, s) in self.sigma_fields().into_iter().enumerate() {
            let c = self.frame_combination(r, |g| g.q[a].clone())?;
            law = law.try_map(|e| fill_slot(e, s, &c, &rule, sig))?;
        }
        if gens.iter().any(|g| !g.xi.is_zero()) {
            let e = self.frame_combination(r, |g| g.xi.clone())?;
            let mut kap = self.a_kappa()?.boundary;
            for k in self.kappa_fields() {
                let slot = sig.variation_of(k).expect("invariant has a slot");
                let value = Expr::var(FieldVar::new(k, 1, Shift::ZERO)).neg() * &e;
                kap = kap.try_map(|c| fill_slot(c, slot, &value, &rule, sig))?;
            }
            law = law.add(&kap);
            if lk_term {
                let extra = &self.l_kappa * &e;
                law.a0 = Some(law.a0.take().map_or(extra.clone(), |a| a + extra));
            }
        }
        Ok(ConservationLaw { generator: v.name.clone(), form: LawForm::Invariant, components: law })
    }

    /// Off-shell check of an invariant or equivariant law: Q_r·E(L) +
    /// 𝒥𝒟iv(A) ≡ 0 after expansion.
    pub fn verify_invariant_law(&self, r: usize, law: &ConservationLaw, plan: &SamplePlan) -> Result<Report> {
        let v = &self.action().generators[r];
        let res = self.noether_residual(v, &self.to_original(&law.components)?)?;
        let id = format!("noether/{}/{}", v.name, serde_json::to_value(law.form).unwrap_or_default().as_str().unwrap_or("law"));
        Ok(identity_check(&id, &res, &Expr::zero(), self.sig(), &self.plan(plan)))
    }

    /// Two laws have the same divergence after expansion.
    pub fn compare_laws(&self, id: &str, a: &DivergenceTuple, b: &DivergenceTuple, plan: &SamplePlan) -> Result<Report> {
        let da = divergence(a, self.sig())?;
        let db = divergence(b, self.sig())?;
        Ok(identity_check(id, &da, &db, self.sig(), &self.plan(plan)))
    }

    /// V_l with A_r = Σ_l V_l a^l_r(ρ), from all R invariant-form laws.
    pub fn equivariant_form(&self, laws: &[ConservationLaw]) -> Result<Vec<DivergenceTuple>> {
        let adj = self.inv.frame.adjoint_on_frame();
        let inv = invert_small(&adj)?;
        let n = laws.len();
        if n != adj.len() {
            return Err(Error::Invalid(format!("need {} laws, got {n}", adj.len())));
        }
        let pick = |f: &dyn Fn(&DivergenceTuple) -> Expr, l: usize| {
            Expr::sum((0..n).map(|r| f(&laws[r].components) * &inv[r][l]))
        };
        let dim = self.sig().dim();
        let has_a0 = laws.iter().any(|l| l.components.a0.is_some());
        Ok((0..n)
            .map(|l| DivergenceTuple {
                a0: has_a0.then(|| pick(&|t| t.a0.clone().unwrap_or_else(Expr::zero), l)),
                comps: (0..dim).map(|i| pick(&|t| t.comps[i].clone(), l)).collect(),
            })
            .collect())
    }

    /// Σ_l V_l a^l_r(ρ).
    pub fn law_from_equivariant(&self, v: &[DivergenceTuple], r: usize) -> ConservationLaw {
        let adj = self.inv.frame.adjoint_on_frame();
        let mut acc = DivergenceTuple::zero(self.sig().dim(), v.iter().any(|t| t.a0.is_some()));
        for (l, t) in v.iter().enumerate() {
            acc = acc.add(&t.map(|c| c * &adj[l][r]));
        }
        ConservationLaw {
            generator: self.action().generators[r].name.clone(),
            form: LawForm::Equivariant,
            components: acc,
        }
    }

    /// Every V_l component is invariant under random group elements.
    pub fn verify_equivariant_invariance(&self, v: &[DivergenceTuple], plan: &SamplePlan, n_group: usize) -> Result<Report> {
        let frame = &self.inv.frame;
        let mut comps = Vec::new();
        for t in v {
            for c in t.a0.iter().chain(&t.comps) {
                comps.push(self.inv.expand(c)?);
            }
        }
        let mut rng = plan.rng();
        let mut pairs = Vec::new();
        for _ in 0..n_group {
            let g = GroupAction::element(&frame.action.random_element(&mut rng));
            for c in &comps {
                pairs.push((frame.action.transform(c, &g, self.sig())?, c.clone()));
            }
        }
        Ok(pairs_check("noether/equivariant-invariance", &pairs, self.sig(), &self.plan(plan)))
    }

    /// Original, invariant and equivariant forms agree at the level of their
    /// divergences, and invariant-form components agree with original ones
    /// pointwise (A⁰ and 𝒥A^i).
    pub fn verify_forms(&self, r: usize, plan: &SamplePlan) -> Result<Vec<Report>> {
        let v = &self.action().generators[r];
        let orig = self.noether_original(v, plan)?;
        let inv = self.noether_invariant(r)?;
        let inv_orig = self.to_original(&inv.components)?;
        let mut out = vec![self.compare_laws(&format!("noether/{}/forms", v.name), &orig.components, &inv_orig, plan)?];
        let pairs: Vec<(Expr, Expr)> = orig
            .components
            .a0
            .iter()
            .chain(&orig.components.comps)
            .cloned()
            .zip(inv_orig.a0.iter().chain(&inv_orig.comps).cloned())
            .collect();
        out.push(pairs_check(&format!("noether/{}/components", v.name), &pairs, self.sig(), &self.plan(plan)));
        Ok(out)
    }
}

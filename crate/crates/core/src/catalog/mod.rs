//! Worked examples: a two-dimensional Toda-type lattice, a scalar
//! differential-difference model with a scaling frame, and a discretized
//! nonlinear Schrödinger system. Each bundles a Lagrangian, its frame,
//! recurrence table and stored forms of H, the invariant equations and
//! conservation laws for comparison against the derived ones.

mod complex;
mod nls;
mod scalar_dd;
pub mod suites;
mod toda;

use crate::calculus::{DivergenceTuple, LinDiffOp};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, FieldVar, Signature};
use crate::group::Generator;
use crate::harness::SamplePlan;
use crate::variational::{LawForm, VariationalProblem};

pub use nls::{initial_data, nls_monitors, nls_system, SPACING};
pub use suites::{run_suite, SUITES};

/// A conservation law as written down by hand.
#[derive(Clone, Debug)]
pub struct StoredLaw {
    /// Index into [`Example::symmetries`].
    pub generator: usize,
    pub form: LawForm,
    pub components: DivergenceTuple,
}

#[derive(Clone, Debug)]
pub struct Example {
    pub name: &'static str,
    pub problem: VariationalProblem,
    /// Action generators first, then any further candidates.
    pub symmetries: Vec<Generator>,
    pub stored_el: Vec<Expr>,
    pub stored_laws: Vec<StoredLaw>,
    /// Variables whose recurrence entry is checked against ι directly.
    pub recurrence_targets: Vec<FieldVar>,
    /// Original-variable expressions for frame property checks.
    pub probes: Vec<Expr>,
    pub fixed_params: Vec<(&'static str, f64)>,
}

pub const EXAMPLES: [&str; 3] = ["toda", "ex81", "nls"];

pub fn example(name: &str) -> Result<Example> {
    match name {
        "toda" => toda::build(),
        "ex81" => scalar_dd::build(),
        "nls" => nls::build(),
        _ => Err(Error::NotRegistered { kind: "example", name: name.to_string() }),
    }
}

impl Example {
    pub fn sig(&self) -> &Signature {
        self.problem.sig()
    }

    /// Number of action generators.
    pub fn n_action(&self) -> usize {
        self.problem.action().generators.len()
    }

    /// `base` with the example's fixed parameters applied.
    pub fn plan(&self, base: &SamplePlan) -> SamplePlan {
        self.fixed_params.iter().fold(base.clone(), |p, (n, v)| p.param_value(n, *v))
    }

    pub fn laws_for(&self, generator: usize) -> impl Iterator<Item = &StoredLaw> {
        self.stored_laws.iter().filter(move |l| l.generator == generator)
    }
}

/// Parses catalog text against a signature.
pub(crate) struct Src<'a>(pub &'a Signature);

impl Src<'_> {
    pub fn e(&self, text: &str) -> Result<Expr> {
        parse(text, self.0)
    }

    /// Σ coeff_t S_{K_t} D^{j_t} from `(coeff, shift, order)` triples.
    pub fn op(&self, terms: &[(&str, &[i32], u8)]) -> Result<LinDiffOp> {
        let mut op = LinDiffOp::zero();
        for (c, k, j) in terms {
            op = op.term(self.e(c)?, crate::expr::Shift::from_slice(k), *j);
        }
        Ok(op)
    }

    pub fn tuple(&self, a0: Option<&str>, comps: &[&str]) -> Result<DivergenceTuple> {
        Ok(DivergenceTuple {
            a0: a0.map(|t| self.e(t)).transpose()?,
            comps: comps.iter().map(|c| self.e(c)).collect::<Result<_>>()?,
        })
    }
}

use super::{FieldId, FieldVar, Shift, MAX_DIM};
use crate::error::{Error, Result};

/// Role of a declared field.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// A dependent variable u^α.
    Dependent,
    /// The variation slot (u^α)′ of a dependent field.
    Variation(FieldId),
    /// A generating invariant symbol κ^β.
    Invariant,
    /// The variation slot (κ^β)′ of an invariant symbol.
    InvariantVariation(FieldId),
    /// A generating differential invariant σ^α.
    DiffInvariant,
}

impl FieldKind {
    /// Fields expressed in the original coordinates.
    pub fn is_original(self) -> bool {
        matches!(self, FieldKind::Dependent | FieldKind::Variation(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Caps {
    pub max_order: u8,
    pub radius: i32,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps { max_order: 4, radius: 8 }
    }
}

/// Problem declaration: lattice dimension, fields, parameter names and caps.
#[derive(Clone, Debug, PartialEq)]
pub struct Signature {
    dim: usize,
    fields: Vec<FieldDecl>,
    params: Vec<String>,
    pub caps: Caps,
    /// Whether fields also depend on the continuous variable x.
    pub continuous: bool,
}

impl Signature {
    pub fn new(dim: usize) -> Signature {
        assert!((1..=MAX_DIM).contains(&dim), "lattice dimension must be in 1..={MAX_DIM}");
        Signature { dim, fields: Vec::new(), params: Vec::new(), caps: Caps::default(), continuous: false }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn declare(&mut self, name: &str, kind: FieldKind) -> FieldId {
        assert!(self.field(name).is_none(), "field `{name}` declared twice");
        self.fields.push(FieldDecl { name: name.to_string(), kind });
        FieldId(self.fields.len() as u16 - 1)
    }

    /// Declares a dependent field together with its variation slot `<name>_t`.
    pub fn dependent(&mut self, name: &str) -> FieldId {
        let id = self.declare(name, FieldKind::Dependent);
        self.declare(&format!("{name}_t"), FieldKind::Variation(id));
        id
    }

    /// Declares an invariant symbol together with its variation slot `<name>_t`.
    pub fn invariant(&mut self, name: &str) -> FieldId {
        let id = self.declare(name, FieldKind::Invariant);
        self.declare(&format!("{name}_t"), FieldKind::InvariantVariation(id));
        id
    }

    pub fn diff_invariant(&mut self, name: &str) -> FieldId {
        self.declare(name, FieldKind::DiffInvariant)
    }

    pub fn param(&mut self, name: &str) {
        if !self.params.iter().any(|p| p == name) {
            self.params.push(name.to_string());
        }
    }

    /// Marks the problem as differential-difference.
    pub fn differential(mut self) -> Signature {
        self.continuous = true;
        self
    }

    pub fn with_caps(mut self, caps: Caps) -> Signature {
        self.caps = caps;
        self
    }

    pub fn field(&self, name: &str) -> Option<FieldId> {
        self.fields.iter().position(|f| f.name == name).map(|i| FieldId(i as u16))
    }

    pub fn field_or_err(&self, name: &str) -> Result<FieldId> {
        self.field(name).ok_or_else(|| Error::UnknownField(name.to_string()))
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p == name)
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn decl(&self, id: FieldId) -> &FieldDecl {
        &self.fields[id.0 as usize]
    }

    pub fn name(&self, id: FieldId) -> &str {
        &self.decl(id).name
    }

    pub fn kind(&self, id: FieldId) -> FieldKind {
        self.decl(id).kind
    }

    pub fn ids(&self) -> impl Iterator<Item = FieldId> + '_ {
        (0..self.fields.len()).map(|i| FieldId(i as u16))
    }

    pub fn dependents(&self) -> Vec<FieldId> {
        self.ids().filter(|&i| self.kind(i) == FieldKind::Dependent).collect()
    }

    pub fn invariants(&self) -> Vec<FieldId> {
        self.ids().filter(|&i| self.kind(i) == FieldKind::Invariant).collect()
    }

    pub fn diff_invariants(&self) -> Vec<FieldId> {
        self.ids().filter(|&i| self.kind(i) == FieldKind::DiffInvariant).collect()
    }

    /// The variation slot attached to a dependent or invariant field.
    pub fn variation_of(&self, id: FieldId) -> Option<FieldId> {
        self.ids().find(|&i| match self.kind(i) {
            FieldKind::Variation(of) | FieldKind::InvariantVariation(of) => of == id,
            _ => false,
        })
    }

    /// Builds a variable after checking the caps.
    pub fn var(&self, name: &str, order: u8, shift: &[i32]) -> Result<FieldVar> {
        if shift.len() != self.dim {
            return Err(Error::IndexArity { expected: self.dim, found: shift.len() });
        }
        let v = FieldVar::new(self.field_or_err(name)?, order, Shift::from_slice(shift));
        self.check(&v)?;
        Ok(v)
    }

    pub fn check(&self, v: &FieldVar) -> Result<()> {
        if v.order > self.caps.max_order {
            return Err(Error::DerivativeCap { cap: self.caps.max_order });
        }
        if v.shift.max_abs() > self.caps.radius {
            return Err(Error::ShiftRadius {
                radius: self.caps.radius,
                index: format!("{:?}", v.shift.as_slice(self.dim)),
            });
        }
        Ok(())
    }
}

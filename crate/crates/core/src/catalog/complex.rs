//! Complex arithmetic on pairs of real expressions.

use crate::error::Result;
use crate::expr::{DerivRule, Expr, Shift, Signature};

#[derive(Clone, Debug)]
pub(crate) struct CExpr {
    pub re: Expr,
    pub im: Expr,
}

impl CExpr {
    pub fn real(re: Expr) -> CExpr {
        CExpr { re, im: Expr::zero() }
    }

    pub fn new(re: Expr, im: Expr) -> CExpr {
        CExpr { re, im }
    }

    pub fn one() -> CExpr {
        CExpr::real(Expr::one())
    }

    pub fn mul(&self, o: &CExpr) -> CExpr {
        CExpr {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn add(&self, o: &CExpr) -> CExpr {
        CExpr { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn conj(&self) -> CExpr {
        CExpr { re: self.re.clone(), im: self.im.neg() }
    }

    /// i·f·z for real f.
    pub fn times_i(&self, f: &Expr) -> CExpr {
        CExpr { re: (f * &self.im).neg(), im: f * &self.re }
    }

    pub fn shift(&self, k: Shift, sig: &Signature) -> Result<CExpr> {
        Ok(CExpr { re: self.re.shift(k, sig)?, im: self.im.shift(k, sig)? })
    }

    pub fn derive(&self, rule: &DerivRule, sig: &Signature) -> Result<CExpr> {
        Ok(CExpr { re: self.re.derive(rule, sig)?, im: self.im.derive(rule, sig)? })
    }
}

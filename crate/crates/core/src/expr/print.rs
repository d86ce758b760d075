use std::fmt::{self, Write};

use super::{Expr, FieldVar, Node, Signature, MAX_DIM};

/// Expression rendered in the input grammar of a given problem.
pub struct Printed<'a> {
    e: &'a Expr,
    sig: Option<&'a Signature>,
}

impl Expr {
    pub fn display<'a>(&'a self, sig: &'a Signature) -> Printed<'a> {
        Printed { e: self, sig: Some(sig) }
    }

    pub fn print(&self, sig: &Signature) -> String {
        self.display(sig).to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Printed { e: self, sig: None }, f)
    }
}

impl fmt::Display for Printed<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self.e, 0, self.sig)?;
        f.write_str(&s)
    }
}

const SUM: u8 = 1;
const NEG: u8 = 2;
const PROD: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 || c.is_sign_negative() => NEG,
        Node::Sum(_) => SUM,
        Node::Neg(_) => NEG,
        Node::Prod(_) | Node::Quot(_) => PROD,
        Node::Pow(..) => POW,
        _ => ATOM,
    }
}

fn write_var(out: &mut String, v: &FieldVar, sig: Option<&Signature>) -> fmt::Result {
    if v.order > 0 {
        write!(out, "d{} ", v.order)?;
    }
    let dim = match sig {
        Some(s) => {
            out.push_str(s.name(v.field));
            s.dim()
        }
        None => {
            write!(out, "f{}", v.field.0)?;
            (1..=MAX_DIM).rev().find(|&d| v.shift.get(d - 1) != 0).unwrap_or(1)
        }
    };
    out.push('[');
    for (i, k) in v.shift.as_slice(dim).iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{k}")?;
    }
    out.push(']');
    Ok(())
}

fn write_expr(out: &mut String, e: &Expr, min: u8, sig: Option<&Signature>) -> fmt::Result {
    let p = prec(e);
    let paren = p < min;
    if paren {
        out.push('(');
    }
    match e.node() {
        Node::Const(c) => write!(out, "{c}")?,
        Node::Param(name) => out.push_str(name),
        Node::X => out.push('x'),
        Node::Alt => out.push_str("alt"),
        Node::Var(v) => write_var(out, v, sig)?,
        Node::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(out, t, NEG, sig)?;
                    continue;
                }
                match t.node() {
                    Node::Neg(a) => {
                        out.push_str(" - ");
                        write_expr(out, a, PROD, sig)?;
                    }
                    Node::Const(c) if *c < 0.0 => write!(out, " - {}", -c)?,
                    _ => {
                        out.push_str(" + ");
                        write_expr(out, t, PROD, sig)?;
                    }
                }
            }
        }
        Node::Neg(a) => {
            out.push('-');
            write_expr(out, a, PROD, sig)?;
        }
        Node::Prod(fs) => {
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_expr(out, g, if i == 0 { PROD } else { POW }, sig)?;
            }
        }
        Node::Quot([a, b]) => {
            write_expr(out, a, PROD, sig)?;
            out.push('/');
            write_expr(out, b, POW, sig)?;
        }
        Node::Pow(b, n) => {
            write_expr(out, b, ATOM, sig)?;
            if *n < 0 {
                write!(out, "^({n})")?;
            } else {
                write!(out, "^{n}")?;
            }
        }
        Node::LnAbs(a) => {
            out.push_str("ln(");
            write_expr(out, a, 0, sig)?;
            out.push(')');
        }
        Node::Abs(a) => {
            out.push_str("abs(");
            write_expr(out, a, 0, sig)?;
            out.push(')');
        }
        Node::Sqrt(a) => {
            out.push_str("sqrt(");
            write_expr(out, a, 0, sig)?;
            out.push(')');
        }
    }
    if paren {
        out.push(')');
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Signature};

    #[test]
    fn prints_grammar() {
        let mut sig = Signature::new(1);
        sig.dependent("u");
        sig.param("h");
        for text in ["d1 u[0]^2/(u[1] - u[0])", "-(u[0] + x)*h", "u[0]^(-2)", "ln(abs(u[-1])) - 3"] {
            let e = parse(text, &sig).unwrap();
            let printed = e.print(&sig);
            assert_eq!(parse(&printed, &sig).unwrap().print(&sig), printed, "{text}");
        }
        assert_eq!(parse("d1 u[;0]", &sig).unwrap().print(&sig), "d1 u[0]");
    }
}

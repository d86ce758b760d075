//! Classical RK4 in x for semi-discrete systems on a periodic lattice, with
//! monitoring of lattice sums.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, FieldId, FieldVar, Program, Signature};

/// Fields on a periodic one-dimensional lattice of N sites.
#[derive(Clone, Debug)]
pub struct LatticeState {
    pub x: f64,
    /// One row per dependent field, in declaration order.
    pub fields: Vec<Vec<f64>>,
    pub params: HashMap<String, f64>,
}

impl LatticeState {
    pub fn sites(&self) -> usize {
        self.fields.first().map_or(0, Vec::len)
    }

    pub fn norm(&self) -> f64 {
        self.fields.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

struct PeriodicEnv<'a> {
    fields: &'a [Vec<f64>],
    index: &'a HashMap<FieldId, usize>,
    params: &'a HashMap<String, f64>,
    n: usize,
    x: f64,
}

impl Env for PeriodicEnv<'_> {
    fn field(&self, v: &FieldVar) -> Option<f64> {
        if v.order != 0 {
            return None;
        }
        let row = &self.fields[*self.index.get(&v.field)?];
        let len = row.len() as i64;
        Some(row[(self.n as i64 + v.shift.get(0) as i64).rem_euclid(len) as usize])
    }
    fn x(&self) -> Option<f64> {
        Some(self.x)
    }
    fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
    fn parity(&self) -> i64 {
        self.n as i64
    }
}

/// du^α/dx = F^α(u at nearby sites).
pub struct Evolution {
    index: HashMap<FieldId, usize>,
    rhs: Vec<Program>,
}

/// Solves each equation for the single first x-derivative it contains,
/// which must enter linearly: w = −(E|_{w=0}) / (∂E/∂w). Returns the right
/// sides ordered by dependent field.
pub fn solve_for_derivatives(equations: &[Expr], sig: &Signature) -> Result<Vec<Expr>> {
    let deps = sig.dependents();
    let mut out: Vec<Option<Expr>> = vec![None; deps.len()];
    for e in equations {
        let firsts: Vec<FieldVar> = e.vars().into_iter().filter(|v| v.order > 0).collect();
        let [w] = firsts.as_slice() else {
            return Err(Error::Invalid("each equation must contain exactly one derivative".into()));
        };
        if w.order != 1 || !w.shift.is_zero() {
            return Err(Error::Invalid("expected an unshifted first derivative".into()));
        }
        let coeff = e.partial(w);
        if !coeff.vars().is_empty() || coeff.has_x() {
            return Err(Error::Invalid("derivative must enter with a constant coefficient".into()));
        }
        let rest = e.substitute(&HashMap::from([(*w, Expr::zero())]));
        let a = deps.iter().position(|&d| d == w.field).ok_or_else(|| Error::UnknownField(sig.name(w.field).into()))?;
        out[a] = Some(rest.neg().quot(&coeff));
    }
    out.into_iter()
        .enumerate()
        .map(|(a, r)| r.ok_or_else(|| Error::Invalid(format!("no equation for {}", sig.name(deps[a])))))
        .collect()
}

impl Evolution {
    pub fn new(rhs: &[Expr], sig: &Signature) -> Result<Evolution> {
        let deps = sig.dependents();
        if rhs.len() != deps.len() {
            return Err(Error::Invalid("one right side per dependent field".into()));
        }
        for r in rhs {
            if r.vars().iter().any(|v| v.order > 0) {
                return Err(Error::Invalid("right sides may not contain x-derivatives".into()));
            }
        }
        Ok(Evolution {
            index: deps.iter().enumerate().map(|(i, &d)| (d, i)).collect(),
            rhs: rhs.iter().map(Program::new).collect(),
        })
    }

    fn field_index(&self) -> &HashMap<FieldId, usize> {
        &self.index
    }

    fn eval(&self, fields: &[Vec<f64>], params: &HashMap<String, f64>, x: f64) -> Result<Vec<Vec<f64>>> {
        let n = fields[0].len();
        let mut out = vec![vec![0.0; n]; fields.len()];
        let mut scratch = Vec::new();
        for site in 0..n {
            let env = PeriodicEnv { fields, index: &self.index, params, n: site, x };
            for (a, p) in self.rhs.iter().enumerate() {
                out[a][site] = p.run_with(&env, &mut scratch)?;
            }
        }
        Ok(out)
    }
}

/// Σ_n F(n) over the periodic lattice.
pub struct Monitor {
    pub name: String,
    program: Program,
}

impl Monitor {
    pub fn new(name: &str, density: &Expr) -> Result<Monitor> {
        if density.vars().iter().any(|v| v.order > 0) {
            return Err(Error::Invalid(format!("monitor {name} may not contain x-derivatives")));
        }
        Ok(Monitor { name: name.to_string(), program: Program::new(density) })
    }

    fn sum(&self, s: &LatticeState, index: &HashMap<FieldId, usize>) -> Result<f64> {
        let mut scratch = Vec::new();
        let mut acc = 0.0;
        for n in 0..s.sites() {
            let env = PeriodicEnv { fields: &s.fields, index, params: &s.params, n, x: s.x };
            acc += self.program.run_with(&env, &mut scratch)?;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    /// `sums[k][i]` is monitor k at `xs[i]`.
    pub sums: Vec<Vec<f64>>,
    pub last: LatticeState,
}

impl Trajectory {
    /// max_x |S(x) − S(x₀)| / |S(x₀)|, or the absolute deviation when S(x₀) = 0.
    pub fn drift(&self, k: usize) -> f64 {
        let s = &self.sums[k];
        let s0 = s[0];
        let scale = if s0 == 0.0 { 1.0 } else { s0.abs() };
        s.iter().map(|v| (v - s0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = format!("x,{}\n", names.join(","));
        for (i, x) in self.xs.iter().enumerate() {
            let row: Vec<String> = self.sums.iter().map(|s| format!("{:.16e}", s[i])).collect();
            out.push_str(&format!("{x:.6},{}\n", row.join(",")));
        }
        out
    }
}

/// Norm above which integration stops with a blow-up error.
pub const BLOW_UP_NORM: f64 = 1e6;

/// Classical fourth-order Runge–Kutta from `state.x` to `x_end` in steps of
/// (at most) `dt`, recording monitor sums after every step.
pub fn rk4(sys: &Evolution, state: LatticeState, x_end: f64, dt: f64, monitors: &[Monitor]) -> Result<Trajectory> {
    if dt <= 0.0 {
        return Err(Error::Invalid("step must be positive".into()));
    }
    let steps = ((x_end - state.x) / dt).round().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { (x_end - state.x) / steps as f64 };
    let index = sys.field_index();
    let mut s = state;
    let mut xs = vec![s.x];
    let mut sums: Vec<Vec<f64>> = monitors.iter().map(|m| m.sum(&s, index).map(|v| vec![v])).collect::<Result<_>>()?;
    let axpy = |base: &[Vec<f64>], k: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
        base.iter().zip(k).map(|(b, d)| b.iter().zip(d).map(|(x, y)| x + c * y).collect()).collect()
    };
    for _ in 0..steps {
        let k1 = sys.eval(&s.fields, &s.params, s.x)?;
        let k2 = sys.eval(&axpy(&s.fields, &k1, h / 2.0), &s.params, s.x + h / 2.0)?;
        let k3 = sys.eval(&axpy(&s.fields, &k2, h / 2.0), &s.params, s.x + h / 2.0)?;
        let k4 = sys.eval(&axpy(&s.fields, &k3, h), &s.params, s.x + h)?;
        for a in 0..s.fields.len() {
            for n in 0..s.fields[a].len() {
                s.fields[a][n] += h / 6.0 * (k1[a][n] + 2.0 * k2[a][n] + 2.0 * k3[a][n] + k4[a][n]);
            }
        }
        s.x += h;
        let norm = s.norm();
        if !norm.is_finite() || norm > BLOW_UP_NORM {
            return Err(Error::BlowUp { x: s.x, norm });
        }
        xs.push(s.x);
        for (m, acc) in monitors.iter().zip(sums.iter_mut()) {
            acc.push(m.sum(&s, index)?);
        }
    }
    Ok(Trajectory { xs, sums, last: s })
}

/// Zero field of the right shape.
pub fn zero_state(n_fields: usize, sites: usize, params: HashMap<String, f64>) -> LatticeState {
    LatticeState { x: 0.0, fields: vec![vec![0.0; sites]; n_fields], params }
}

/// u at site n + k.
#[cfg(test)]
fn var(f: FieldId, k: i32) -> Expr {
    Expr::var(FieldVar::new(f, 0, crate::expr::Shift::from_slice(&[k])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heat() -> (Signature, Evolution, FieldId) {
        let mut s = Signature::new(1).differential();
        let u = s.dependent("u");
        let rhs = var(u, 1) - var(u, 0) * 2.0 + var(u, -1);
        let sys = Evolution::new(&[rhs], &s).unwrap();
        (s, sys, u)
    }

    #[test]
    fn zero_data_stays_zero() {
        let (_, sys, _) = heat();
        let t = rk4(&sys, zero_state(1, 8, HashMap::new()), 1.0, 0.01, &[]).unwrap();
        assert!(t.last.fields[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn discrete_heat_conserves_mass() {
        let (_, sys, u) = heat();
        let mut st = zero_state(1, 8, HashMap::new());
        for (n, v) in st.fields[0].iter_mut().enumerate() {
            *v = (n as f64).sin();
        }
        let m = Monitor::new("mass", &var(u, 0)).unwrap();
        let t = rk4(&sys, st, 1.0, 0.01, &[m]).unwrap();
        assert!(t.drift(0) < 1e-12);
    }

    #[test]
    fn solves_linear_derivative() {
        let mut s = Signature::new(1).differential();
        let u = s.dependent("u");
        let e = Expr::var(FieldVar::new(u, 1, crate::expr::Shift::ZERO)) * -2.0 + var(u, 1);
        let r = solve_for_derivatives(&[e], &s).unwrap();
        let env = crate::expr::MapEnv::new().with(FieldVar::at(u, &[1]), 4.0);
        assert_eq!(r[0].eval(&env).unwrap(), 2.0);
    }
}

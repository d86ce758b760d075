//! Brute-force checks of ⟨f, Hg⟩ = ⟨H†f, g⟩ on finite lattices with
//! compactly supported test fields.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::identity::{scaled_residual, Report};
use crate::calculus::LinDiffOp;
use crate::error::{Error, Result};
use crate::expr::{DerivRule, Env, Expr, FieldId, FieldVar, Program, Shift, Signature};

/// Values on the box [lo, hi)^m, zero outside.
struct Grid {
    dim: usize,
    lo: i64,
    width: usize,
    data: Vec<f64>,
}

impl Grid {
    fn new(dim: usize, lo: i64, hi: i64) -> Grid {
        let width = (hi - lo) as usize;
        Grid { dim, lo, width, data: vec![0.0; width.pow(dim as u32)] }
    }

    fn index(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for &c in p.iter().take(self.dim) {
            let o = c - self.lo;
            if o < 0 || o >= self.width as i64 {
                return None;
            }
            idx = idx * self.width + o as usize;
        }
        Some(idx)
    }

    fn get(&self, p: &[i64]) -> f64 {
        self.index(p).map_or(0.0, |i| self.data[i])
    }

    fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let n = self.data.len();
        (0..n).map(move |mut i| {
            let mut p = vec![0; self.dim];
            for k in (0..self.dim).rev() {
                p[k] = self.lo + (i % self.width) as i64;
                i /= self.width;
            }
            p
        })
    }
}

fn add_shift(p: &[i64], k: Shift) -> Vec<i64> {
    p.iter().enumerate().map(|(i, c)| c + k.get(i) as i64).collect()
}

/// Background field u and the base point for evaluating coefficients.
struct LatticeEnv<'a> {
    u: &'a Grid,
    field: FieldId,
    base: &'a [i64],
}

impl Env for LatticeEnv<'_> {
    fn field(&self, v: &FieldVar) -> Option<f64> {
        (v.field == self.field && v.order == 0).then(|| self.u.get(&add_shift(self.base, v.shift)))
    }
    fn x(&self) -> Option<f64> {
        None
    }
    fn param(&self, _: &str) -> Option<f64> {
        None
    }
    fn parity(&self) -> i64 {
        self.base.iter().sum()
    }
}

/// Random operator Σ c_K S_K D^j whose coefficients are polynomials in
/// nearby values of `field`.
pub fn random_operator(
    field: FieldId,
    dim: usize,
    radius: i32,
    max_order: u8,
    n_terms: usize,
    rng: &mut ChaCha8Rng,
) -> LinDiffOp {
    let mut op = LinDiffOp::zero();
    let shift = |rng: &mut ChaCha8Rng, r: i32| {
        let mut k = Shift::ZERO;
        for i in 0..dim {
            k.0[i] = rng.gen_range(-r..=r);
        }
        k
    };
    for _ in 0..n_terms {
        let k = shift(rng, radius);
        let j = if max_order == 0 { 0 } else { rng.gen_range(0..=max_order) };
        let u1 = Expr::var(FieldVar::new(field, 0, shift(rng, 1)));
        let u2 = Expr::var(FieldVar::new(field, 0, shift(rng, 1)));
        let coeff = Expr::num(rng.gen_range(-1.0..1.0))
            + Expr::num(rng.gen_range(-1.0..1.0)) * u1
            + Expr::num(rng.gen_range(-1.0..1.0)) * u2.pow(2);
        op = op.term(coeff, k, j);
    }
    op
}

/// Pure difference pairing on the box [0, size)^m with test fields
/// supported `margin` sites away from its faces. Exact sums.
pub fn difference_pairing(
    check_id: &str,
    op: &LinDiffOp,
    field: FieldId,
    sig: &Signature,
    size: i64,
    margin: i64,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> Result<Report> {
    if !op.is_difference() {
        return Err(Error::Invalid("difference pairing needs a pure difference operator".into()));
    }
    let adj = op.adjoint(&DerivRule::standard(sig), sig)?;
    let radius = op.radius().max(adj.radius()) as i64;
    if margin < radius {
        return Err(Error::MarginTooSmall { margin: margin.max(0) as usize, radius: radius as usize });
    }
    let dim = sig.dim();
    let pad = radius + 2;
    let mut u = Grid::new(dim, -pad, size + pad);
    for v in u.data.iter_mut() {
        *v = rng.gen_range(-1.5..1.5);
    }
    let mut f = Grid::new(dim, 0, size);
    let mut g = Grid::new(dim, 0, size);
    let inside = |p: &[i64]| p.iter().all(|&c| c >= margin && c < size - margin);
    for (i, p) in f.points().collect::<Vec<_>>().into_iter().enumerate() {
        if inside(&p) {
            f.data[i] = rng.gen_range(-1.0..1.0);
            g.data[i] = rng.gen_range(-1.0..1.0);
        }
    }
    let apply = |h: &LinDiffOp, w: &Grid, p: &[i64]| -> Result<f64> {
        let env = LatticeEnv { u: &u, field, base: p };
        let mut acc = 0.0;
        for t in &h.terms {
            acc += Program::new(&t.coeff).run(&env)? * w.get(&add_shift(p, t.shift));
        }
        Ok(acc)
    };
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for p in f.points() {
        lhs += f.get(&p) * apply(op, &g, &p)?;
        rhs += apply(&adj, &f, &p)? * g.get(&p);
    }
    Ok(Report::new(check_id, scaled_residual(lhs, rhs), tol, f.data.len(), 0))
}

/// Polynomial with coefficients in increasing degree.
#[derive(Clone, Debug)]
struct Poly(Vec<f64>);

impl Poly {
    fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn derivatives(&self, n: usize) -> Vec<Poly> {
        let mut out = vec![self.clone()];
        for _ in 0..n {
            let next = out.last().expect("nonempty").derivative();
            out.push(next);
        }
        out
    }
}

struct LineEnv<'a> {
    u: &'a [Vec<Poly>],
    offset: i64,
    field: FieldId,
    n: i64,
    x: f64,
}

impl Env for LineEnv<'_> {
    fn field(&self, v: &FieldVar) -> Option<f64> {
        if v.field != self.field {
            return None;
        }
        let site = (self.n + v.shift.get(0) as i64 + self.offset) as usize;
        self.u.get(site)?.get(v.order as usize).map(|p| p.eval(self.x))
    }
    fn x(&self) -> Option<f64> {
        Some(self.x)
    }
    fn param(&self, _: &str) -> Option<f64> {
        None
    }
    fn parity(&self) -> i64 {
        self.n
    }
}

/// Mixed pairing on one lattice direction and x ∈ [−1, 1]. Test fields are
/// (1 − x²)⁶ times random quadratics; the x integral uses the composite
/// trapezoid rule, refined by doubling until two levels agree to `tol`/10.
pub fn mixed_pairing(
    check_id: &str,
    op: &LinDiffOp,
    field: FieldId,
    sig: &Signature,
    sites: i64,
    margin: i64,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> Result<Report> {
    if sig.dim() != 1 || !sig.continuous {
        return Err(Error::Invalid("mixed pairing needs one lattice direction and x".into()));
    }
    let adj = op.adjoint(&DerivRule::standard(sig), sig)?;
    let radius = op.radius().max(adj.radius()) as i64;
    if margin < radius {
        return Err(Error::MarginTooSmall { margin: margin.max(0) as usize, radius: radius as usize });
    }
    let max_order = op.terms.iter().chain(&adj.terms).map(|t| t.order).max().unwrap_or(0) as usize;
    let pad = radius + 2;
    let total = (sites + 2 * pad) as usize;
    let bump = (0..6).fold(Poly(vec![1.0]), |acc, _| acc.mul(&Poly(vec![1.0, 0.0, -1.0])));
    let quad = |rng: &mut ChaCha8Rng| Poly((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let u: Vec<Vec<Poly>> = (0..total).map(|_| quad(rng).derivatives(max_order + 2)).collect();
    let mut f = vec![vec![Poly(vec![0.0])]; total];
    let mut g = vec![vec![Poly(vec![0.0])]; total];
    for n in margin..sites - margin {
        let i = (n + pad) as usize;
        f[i] = bump.mul(&quad(rng)).derivatives(max_order);
        g[i] = bump.mul(&quad(rng)).derivatives(max_order);
    }
    let ops = [op, &adj];
    let programs: Vec<Vec<Program>> = ops.iter().map(|h| h.terms.iter().map(|t| Program::new(&t.coeff)).collect()).collect();
    let at = |w: &[Vec<Poly>], n: i64, k: i64, j: usize, x: f64| -> f64 {
        w.get((n + k + pad) as usize).and_then(|d| d.get(j)).map_or(0.0, |p| p.eval(x))
    };
    let integrand = |x: f64| -> Result<(f64, f64)> {
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for n in 0..sites {
            let env = LineEnv { u: &u, offset: pad, field, n, x };
            let fn_ = at(&f, n, 0, 0, x);
            let gn = at(&g, n, 0, 0, x);
            for (t, p) in op.terms.iter().zip(&programs[0]) {
                lhs += fn_ * p.run(&env)? * at(&g, n, t.shift.get(0) as i64, t.order as usize, x);
            }
            for (t, p) in adj.terms.iter().zip(&programs[1]) {
                rhs += gn * p.run(&env)? * at(&f, n, t.shift.get(0) as i64, t.order as usize, x);
            }
        }
        Ok((lhs, rhs))
    };
    let trapezoid = |m: usize| -> Result<(f64, f64)> {
        let hstep = 2.0 / m as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..=m {
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            let (l, r) = integrand(-1.0 + i as f64 * hstep)?;
            a += w * l;
            b += w * r;
        }
        Ok((a * hstep, b * hstep))
    };
    let mut m = 16;
    let mut prev = trapezoid(m)?;
    loop {
        m *= 2;
        let cur = trapezoid(m)?;
        let settled = scaled_residual(cur.0, prev.0) < tol / 10.0 && scaled_residual(cur.1, prev.1) < tol / 10.0;
        prev = cur;
        if settled || m >= 4096 {
            break;
        }
    }
    Ok(Report::new(check_id, scaled_residual(prev.0, prev.1), tol, m + 1, 0).with_note(format!("trapezoid panels: {m}")))
}

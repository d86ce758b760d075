use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use lattice_frames::calculus::{euler_lagrange as el_of, LinDiffOp};
use lattice_frames::catalog::{self, example, initial_data, nls_monitors, nls_system, run_suite, Example, SPACING};
use lattice_frames::expr::{Program, MAX_DIM};
use lattice_frames::group::{check_variational_symmetry, SymmetryClass};
use lattice_frames::harness::integrate::rk4;
use lattice_frames::harness::{identity_check, Report, Sampler};
use lattice_frames::variational::{ConservationLaw, LawForm};
use lattice_frames::{parse, Error, Expr, Result, Signature};

use crate::Global;

fn emit(g: &Global, value: serde_json::Value, text: impl FnOnce()) {
    if g.json {
        out!("{}", serde_json::to_string_pretty(&value).expect("json values serialize"));
    } else {
        text();
    }
}

fn report_line(r: &Report) -> String {
    let status = if r.passed() { "PASS" } else { "FAIL" };
    let note = r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
    format!("{status}  {:<52} {:>10.3e}{note}", r.check_id, r.max_residual)
}

pub fn verify(g: &Global, name: &str, suite: &str) -> Result<bool> {
    let ex = example(name)?;
    let reports = run_suite(&ex, suite, &g.plan(), g.tol)?;
    let passed = reports.iter().all(Report::passed);
    let n_pass = reports.iter().filter(|r| r.passed()).count();
    emit(g, json!({"example": name, "suite": suite, "seed": g.seed, "passed": passed, "reports": reports}), || {
        for r in &reports {
            out!("{}", report_line(r));
        }
        out!("{n_pass}/{} checks passed", reports.len());
    });
    Ok(passed)
}

#[derive(Args)]
pub struct ElArgs {
    /// Lagrangian in the expression grammar; defaults to the example's.
    pub lagrangian: Option<String>,
    /// Take the signature (and default Lagrangian) from a catalog example.
    #[arg(long)]
    pub example: Option<String>,
    /// Number of lattice directions.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Add the continuous variable x.
    #[arg(long)]
    pub continuous: bool,
    #[arg(long, value_delimiter = ',', default_value = "u")]
    pub fields: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
}

fn el_signature(a: &ElArgs) -> Result<(Signature, Option<Expr>)> {
    if let Some(name) = &a.example {
        let ex = example(name)?;
        return Ok((ex.sig().clone(), Some(ex.problem.lagrangian.clone())));
    }
    if a.dim == 0 || a.dim > MAX_DIM {
        return Err(Error::Invalid(format!("--dim must be in 1..={MAX_DIM}")));
    }
    let mut sig = Signature::new(a.dim);
    if a.continuous {
        sig = sig.differential();
    }
    for f in &a.fields {
        sig.dependent(f);
    }
    for p in &a.params {
        sig.param(p);
    }
    Ok((sig, None))
}

pub fn euler_lagrange(g: &Global, a: &ElArgs) -> Result<bool> {
    let (sig, default_l) = el_signature(a)?;
    let l = match (&a.lagrangian, default_l) {
        (Some(text), _) => parse(text, &sig)?,
        (None, Some(l)) => l,
        (None, None) => return Err(Error::Invalid("give a Lagrangian or --example".into())),
    };
    let deps = sig.dependents();
    let eqs = deps.iter().map(|&u| el_of(&l, u, &sig)).collect::<Result<Vec<_>>>()?;
    // Values at a few seeded admissible points, for comparison by hand.
    let plan = g.plan();
    let refs: Vec<&Expr> = eqs.iter().collect();
    let mut sampler = Sampler::new(&plan, &sig, &refs);
    let programs: Vec<Program> = eqs.iter().map(Program::new).collect();
    let mut rows = Vec::new();
    for _ in 0..3 {
        let env = sampler.next_point()?;
        rows.push(programs.iter().map(|p| p.run(&env)).collect::<Result<Vec<f64>>>()?);
    }
    let names: Vec<&str> = deps.iter().map(|&d| sig.name(d)).collect();
    let printed: Vec<String> = eqs.iter().map(|e| e.print(&sig)).collect();
    emit(
        g,
        json!({
            "equations": names.iter().zip(&printed).map(|(n, e)| json!({"field": n, "expr": e})).collect::<Vec<_>>(),
            "spot_checks": rows,
            "seed": g.seed,
        }),
        || {
            for (n, e) in names.iter().zip(&printed) {
                out!("E_{n} = {e}");
            }
            out!();
            out!("point  {}", names.iter().map(|n| format!("{:>16}", format!("E_{n}"))).collect::<String>());
            for (i, row) in rows.iter().enumerate() {
                out!("{i:>5}  {}", row.iter().map(|v| format!("{v:>16.8e}")).collect::<String>());
            }
        },
    );
    Ok(true)
}

fn law_block(sig: &Signature, source: &str, law: &ConservationLaw, rep: &Report) -> (serde_json::Value, String) {
    let mut j = law.to_json(sig, Some(rep));
    j["source"] = json!(source);
    let form = serde_json::to_value(law.form).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let mut text = format!("{form} form ({source}):\n");
    let labels: Vec<String> = law
        .components
        .a0
        .iter()
        .map(|_| "A0".to_string())
        .chain((1..=law.components.comps.len()).map(|i| format!("A{i}")))
        .collect();
    for (label, c) in labels.iter().zip(law.components.to_strings(sig)) {
        text.push_str(&format!("  {label} = {c}\n"));
    }
    text.push_str(&format!("  {}\n", report_line(rep)));
    (j, text)
}

fn stored_as_law(ex: &Example, i: usize, form: LawForm, comps: &lattice_frames::calculus::DivergenceTuple) -> ConservationLaw {
    ConservationLaw { generator: ex.symmetries[i].name.clone(), form, components: comps.clone() }
}

pub fn noether(g: &Global, name: &str, r: usize) -> Result<bool> {
    let ex = example(name)?;
    let n = ex.symmetries.len();
    if r == 0 || r > n {
        return Err(Error::Invalid(format!("--r must be in 1..={n} for {name}")));
    }
    let i = r - 1;
    let v = &ex.symmetries[i];
    let p = &ex.problem;
    let sig = p.sig();
    let base = ex.plan(&g.plan());
    let plan = match g.tol {
        Some(_) => base,
        None => base.tol(catalog::suites::tol::IDENTITY),
    };
    let fplan = p.inv.frame.plan(&plan.clone().tol(g.tol.unwrap_or(catalog::suites::tol::SYMMETRY)));
    let (class, srep) = check_variational_symmetry(&p.lagrangian, v, sig, &fplan)?;
    if class != SymmetryClass::Invariant {
        let what = match class {
            SymmetryClass::Divergence => "a divergence symmetry (L dx changes by a total divergence)",
            _ => "not a symmetry",
        };
        eprintln!("refusing: {} is {what} of the Lagrangian; the law construction needs L dx to be invariant", v.name);
        if g.json {
            out!("{}", json!({"example": name, "generator": v.name, "refused": true, "symmetry": srep}));
        }
        return Ok(false);
    }
    let mut blocks = Vec::new();
    let orig = p.noether_original(v, &fplan)?;
    blocks.push(law_block(sig, "derived", &orig, &p.verify_original_law(v, &orig, &plan)?));
    if i < ex.n_action() {
        let inv = p.noether_invariant(i)?;
        blocks.push(law_block(sig, "derived", &inv, &p.verify_invariant_law(i, &inv, &plan)?));
        let all = (0..ex.n_action()).map(|s| p.noether_invariant(s)).collect::<Result<Vec<_>>>()?;
        let eq = p.law_from_equivariant(&p.equivariant_form(&all)?, i);
        blocks.push(law_block(sig, "derived", &eq, &p.verify_invariant_law(i, &eq, &plan)?));
    }
    for s in ex.laws_for(i) {
        let law = stored_as_law(&ex, i, s.form, &s.components);
        let rep = match s.form {
            LawForm::Original => p.verify_original_law(v, &law, &plan)?,
            _ => p.verify_invariant_law(i, &law, &plan)?,
        };
        blocks.push(law_block(sig, "stored", &law, &rep));
    }
    let passed = srep.passed() && blocks.iter().all(|(j, _)| j["residual_stats"]["status"] == "pass");
    let q: Vec<String> = v.q.iter().map(|e| e.print(sig)).collect();
    emit(
        g,
        json!({"example": name, "generator": v.name, "xi": v.xi.print(sig), "q": q, "symmetry": srep,
               "laws": blocks.iter().map(|(j, _)| j.clone()).collect::<Vec<_>>()}),
        || {
            out!("{}: xi = {}, Q = ({})", v.name, v.xi.print(sig), q.join(", "));
            out!("{}", report_line(&srep));
            for (_, t) in &blocks {
                out!("\n{}", t.trim_end_matches('\n'));
            }
        },
    );
    Ok(passed)
}

#[derive(Args)]
pub struct IntegrateArgs {
    #[arg(default_value = "nls")]
    pub example: String,
    /// Lattice sites N (periodic).
    #[arg(long, default_value_t = 16)]
    pub sites: usize,
    /// Lattice spacing h.
    #[arg(long, default_value_t = SPACING)]
    pub spacing: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x_end: f64,
    /// Write monitored sums against x as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the drift report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Largest dt/h² considered stable for the difference Laplacian.
const STABILITY: f64 = 0.2;

pub fn integrate(g: &Global, a: &IntegrateArgs) -> Result<bool> {
    if a.example != "nls" {
        return Err(Error::Invalid(format!("no evolution registered for `{}`; only nls integrates", a.example)));
    }
    if a.sites < 3 || a.spacing <= 0.0 || a.dt <= 0.0 {
        return Err(Error::Invalid("need at least 3 sites and positive spacing and step".into()));
    }
    if a.dt > STABILITY * a.spacing * a.spacing {
        eprintln!("warning: dt = {} exceeds {STABILITY}·h² = {}", a.dt, STABILITY * a.spacing * a.spacing);
    }
    let ex = example("nls")?;
    let sys = nls_system(&ex)?;
    let monitors = nls_monitors(&ex)?;
    let traj = rk4(&sys, initial_data(a.sites, a.spacing), a.x_end, a.dt, &monitors)?;
    let names: Vec<String> = monitors.iter().map(|m| m.name.clone()).collect();
    let drifts: Vec<serde_json::Value> = names
        .iter()
        .enumerate()
        .map(|(k, n)| json!({"law": n, "initial": traj.sums[k][0], "drift": traj.drift(k)}))
        .collect();
    let report = json!({
        "example": "nls", "sites": a.sites, "spacing": a.spacing, "dt": a.dt, "x_end": a.x_end,
        "steps": traj.xs.len() - 1, "laws": drifts,
        "note": "initial data and lattice size are an artifact choice",
    });
    let io = |e: std::io::Error| Error::Invalid(e.to_string());
    if let Some(path) = &a.csv {
        std::fs::write(path, traj.to_csv(&names)).map_err(io)?;
    }
    if let Some(path) = &a.report {
        std::fs::write(path, serde_json::to_string_pretty(&report).expect("serializes")).map_err(io)?;
    }
    emit(g, report.clone(), || {
        out!("RK4: N = {}, h = {}, dt = {}, x in [0, {}]", a.sites, a.spacing, a.dt, a.x_end);
        for (k, n) in names.iter().enumerate() {
            out!("{n:<8} initial {:>14.8e}  relative drift {:.3e}", traj.sums[k][0], traj.drift(k));
        }
    });
    Ok(true)
}

pub fn invariantize(g: &Global, name: &str, text: &str) -> Result<bool> {
    let ex = example(name)?;
    let sig = ex.sig();
    let e = parse(text, sig)?;
    let inv = &ex.problem.inv;
    let iota = inv.frame.iota_exact(&e)?;
    let reduced = inv.reduce(&iota);
    let plan = ex.plan(&g.plan()).tol(g.tol.unwrap_or(catalog::suites::tol::FRAME));
    let rep = match &reduced {
        Ok(r) => Some(identity_check("invariantize/replacement", &inv.expand(r)?, &iota, sig, &inv.frame.plan(&plan))),
        Err(_) => None,
    };
    let symbols = reduced.as_ref().map(|r| r.print(sig)).map_err(|e| e.to_string());
    emit(
        g,
        json!({"input": e.print(sig), "invariantized": iota.print(sig),
               "in_symbols": symbols.as_ref().ok(), "replacement": rep}),
        || {
            out!("iota  = {}", iota.print(sig));
            match &symbols {
                Ok(s) => out!("in symbols = {s}"),
                Err(msg) => out!("in symbols: unavailable ({msg})"),
            }
            if let Some(r) = &rep {
                out!("{}", report_line(r));
            }
        },
    );
    Ok(rep.map_or(true, |r| r.passed()))
}

fn op_text(op: &LinDiffOp, sig: &Signature) -> String {
    if op.terms.is_empty() {
        return "0".into();
    }
    let parts: Vec<String> = op
        .terms
        .iter()
        .map(|t| {
            let mut s = format!("({})", t.coeff.print(sig));
            if !t.shift.is_zero() {
                s.push_str(&format!("·S{:?}", t.shift.as_slice(sig.dim())));
            }
            if t.order > 0 {
                s.push_str(&format!("·D^{}", t.order));
            }
            s
        })
        .collect();
    parts.join(" + ")
}

pub fn syzygy(g: &Global, name: &str) -> Result<bool> {
    let ex = example(name)?;
    let inv = &ex.problem.inv;
    let sig = ex.sig();
    let derived = inv.derive_h()?;
    let reports = run_suite(&ex, "syzygy", &g.plan(), g.tol)?;
    let passed = reports.iter().all(Report::passed);
    let rows = |h: &[Vec<LinDiffOp>]| -> Vec<Vec<String>> {
        h.iter().map(|row| row.iter().map(|op| op_text(op, sig)).collect()).collect()
    };
    let syz: Vec<_> =
        inv.syzygies.iter().map(|s| json!({"name": s.name, "lhs": s.lhs.print(sig), "rhs": s.rhs.print(sig)})).collect();
    let kappa: Vec<String> = inv.kappa.iter().map(|(k, _)| sig.name(*k).to_string()).collect();
    let sigma: Vec<String> = inv.sigma.iter().map(|(s, _)| sig.name(*s).to_string()).collect();
    emit(
        g,
        json!({"example": name, "syzygies": syz, "kappa": kappa, "sigma": sigma,
               "operators_stored": rows(&ex.problem.h), "operators_derived": rows(&derived), "reports": reports}),
        || {
            for s in &inv.syzygies {
                out!("{}: {} = {}", s.name, s.lhs.print(sig), s.rhs.print(sig));
            }
            for (b, k) in kappa.iter().enumerate() {
                for (a, s) in sigma.iter().enumerate() {
                    out!("\nH[{k}][{s}] stored : {}", op_text(&ex.problem.h[b][a], sig));
                    out!("H[{k}][{s}] derived: {}", op_text(&derived[b][a], sig));
                }
            }
            out!();
            for r in &reports {
                out!("{}", report_line(r));
            }
        },
    );
    Ok(passed)
}


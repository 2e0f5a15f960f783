//! Built-in reference problems.

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Var};
use crate::problem::{ProblemData, ProblemSpec};

/// A named problem with an optional exact solution.
#[derive(Debug, Clone)]
pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    pub spec: ProblemSpec,
    pub exact: Option<Vec<Expr>>,
}

pub const EXAMPLE13: &str = "example13";
pub const PURE_FORCING: &str = "pure-forcing";
pub const MANUFACTURED: &str = "manufactured-wellposed";
pub const LEVY_PASS: &str = "levy-pass";

pub const NAMES: [&str; 4] = [EXAMPLE13, PURE_FORCING, MANUFACTURED, LEVY_PASS];

/// `(name, one-line summary)` for every built-in.
pub fn list() -> Vec<(&'static str, &'static str)> {
    NAMES.iter().map(|&name| (name, summary(name))).collect()
}

fn summary(name: &str) -> &'static str {
    match name {
        EXAMPLE13 => {
            "resonant system: u1_t + (2/pi) u1_x - u2 = 0, u2_t + (2/pi) u2_x + u1 = 0, \
             u1(0,t) = 0, u2(1,t) = 0, f = 0; Levy condition fails"
        }
        PURE_FORCING => "n=1, m=1, a=1, all couplings zero, f=1; solution u = x",
        MANUFACTURED => {
            "n=2, m=1, a1=1, a2=-1, r=0, exact u1 = x*sin(t), u2 = (1-x)*cos(t), \
             f derived symbolically"
        }
        LEVY_PASS => "n=2, m=1, variable speed a1, a2=-1, b_jk proportional to a_k-a_j, boundary inputs h, nonzero r",
        _ => "",
    }
}

pub fn builtin(name: &str) -> Result<Builtin> {
    let (spec, exact) = match name {
        EXAMPLE13 => (example13()?, None),
        PURE_FORCING => (pure_forcing()?, Some(vec![Expr::x()])),
        MANUFACTURED => {
            let (spec, exact) = manufactured()?;
            (spec, Some(exact))
        }
        LEVY_PASS => (levy_pass()?, None),
        _ => {
            return Err(Error::Validation(format!(
                "unknown built-in `{name}` (available: {})",
                NAMES.join(", ")
            )))
        }
    };
    let name = NAMES
        .iter()
        .copied()
        .find(|&n| n == name)
        .expect("matched above");
    Ok(Builtin {
        name,
        summary: summary(name),
        spec,
        exact,
    })
}

fn e(source: &str) -> Expr {
    parse(source).expect("built-in expressions parse")
}

fn matrix(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
    rows.iter()
        .map(|row| row.iter().map(|s| e(s)).collect())
        .collect()
}

fn example13() -> Result<ProblemSpec> {
    let mut d = ProblemData::with_speeds(1, vec![e("2/pi"), e("2/pi")]);
    d.b = matrix(&[&["0", "-1"], &["1", "0"]]);
    d.description = summary(EXAMPLE13).to_string();
    ProblemSpec::new(d)
}

/// The `l`-th explicit kernel pair of the resonant example.
pub fn example13_kernel(l: u32) -> Vec<Expr> {
    let phase = format!("sin({l}*(t-(pi/2)*x))");
    vec![
        e(&format!("sin((pi/2)*x)*{phase}")),
        e(&format!("cos((pi/2)*x)*{phase}")),
    ]
}

fn pure_forcing() -> Result<ProblemSpec> {
    let mut d = ProblemData::with_speeds(1, vec![e("1")]);
    d.f = vec![e("1")];
    d.description = summary(PURE_FORCING).to_string();
    ProblemSpec::new(d)
}

fn levy_pass() -> Result<ProblemSpec> {
    let a1 = "(1.5 + 0.5*sin(x+t))";
    let a2 = "(-1)";
    let mut d = ProblemData::with_speeds(1, vec![e(a1), e(a2)]);
    d.b = vec![
        vec![e("0.2"), e(&format!("({a2} - {a1})*cos(t)"))],
        vec![e(&format!("0.3*({a1} - {a2})")), e("0.1")],
    ];
    d.h = matrix(&[&["0", "0.2"], &["0.1*cos(t)", "0"]]);
    d.r = matrix(&[&["0", "0"], &["0.5*cos(t)", "0"]]);
    d.f = vec![e("x*cos(t)"), e("sin(t)")];
    d.description = summary(LEVY_PASS).to_string();
    ProblemSpec::new(d)
}

/// Data of the manufactured problem, exposed for tests of its forcing.
pub(crate) struct ManufacturedParts {
    pub data: ProblemData,
    pub exact: Vec<Expr>,
    /// `Σ_k ∫_0^x g_jk(y, t) u_k(y, t) dy` in closed form.
    pub volterra_terms: Vec<Expr>,
}

pub(crate) fn manufactured_parts() -> ManufacturedParts {
    let mut data = ProblemData::with_speeds(1, vec![e("1"), e("-1")]);
    data.b = matrix(&[&["0.5", "0.5*cos(t)"], &["0.5*sin(t)", "0.5"]]);
    data.g = matrix(&[&["0", "0.3"], &["0.2", "0"]]);
    // no boundary inputs: trace operators are not uniformly bounded in the
    // discrete ℓ² norm, which would make σ_min drift under refinement
    data.description = summary(MANUFACTURED).to_string();
    let exact = vec![e("x*sin(t)"), e("(1-x)*cos(t)")];
    // ∫_0^x 0.3 (1-y) cos t dy and ∫_0^x 0.2 y sin t dy
    let volterra_terms = vec![e("0.3*cos(t)*(x - x^2/2)"), e("0.1*x^2*sin(t)")];
    ManufacturedParts {
        data,
        exact,
        volterra_terms,
    }
}

/// Forcing that makes `exact` solve the differential system, given the
/// Volterra terms `Σ_k ∫_0^x g_jk(y, t) u_k(y, t) dy` in closed form:
/// `f_j = ∂_t u_j + a_j ∂_x u_j + Σ_k b_jk u_k + Σ_k ∫_0^x g_jk u_k dy - Σ_k h_jk u_k(1 - x_k, t)`.
pub fn manufactured_forcing(
    d: &ProblemData,
    exact: &[Expr],
    volterra: &[Expr],
) -> Result<Vec<Expr>> {
    let n = d.n;
    let mut f = Vec::with_capacity(n);
    for j in 0..n {
        let u = &exact[j];
        let mut acc = Expr::add(
            u.differentiate(Var::T)?,
            Expr::mul(d.a[j].clone(), u.differentiate(Var::X)?),
        );
        for k in 0..n {
            acc = Expr::add(acc, Expr::mul(d.b[j][k].clone(), exact[k].clone()));
            let trace_at = if k < d.m { 1.0 } else { 0.0 };
            let trace = exact[k].substitute(Var::X, trace_at);
            acc = Expr::sub(acc, Expr::mul(d.h[j][k].clone(), trace));
        }
        f.push(Expr::add(acc, volterra[j].clone()));
    }
    Ok(f)
}

fn manufactured() -> Result<(ProblemSpec, Vec<Expr>)> {
    let ManufacturedParts {
        mut data,
        exact,
        volterra_terms,
    } = manufactured_parts();
    data.f = manufactured_forcing(&data, &exact, &volterra_terms)?;
    Ok((ProblemSpec::new(data)?, exact))
}

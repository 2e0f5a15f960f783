//! Problem data: speeds, couplings, kernels, boundary coefficients and forcing
//! of a first-order integro-differential hyperbolic system, periodic in time,
//! with integral boundary conditions.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Var};

/// Degenerate-speed threshold; `|a_j|` below this is an input error.
pub const SPEED_FLOOR: f64 = 1e-10;
/// Allowed deviation between `e(x, t)` and `e(x, t + 2π)` during validation.
pub const PERIODICITY_TOLERANCE: f64 = 1e-10;

const SPEED_SAMPLES: (usize, usize) = (101, 128);
const PERIOD_SAMPLES: (usize, usize) = (11, 16);

/// A coefficient function of `(x, t)` with a constant fast path.
#[derive(Debug, Clone)]
pub struct Coefficient {
    expr: Expr,
    constant: Option<f64>,
}

impl Coefficient {
    pub fn new(expr: Expr) -> Coefficient {
        let constant = expr.as_constant();
        Coefficient { expr, constant }
    }

    pub fn parse(source: &str) -> Result<Coefficient> {
        Ok(Coefficient::new(parse(source)?))
    }

    pub fn zero() -> Coefficient {
        Coefficient::new(Expr::zero())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn constant(&self) -> Option<f64> {
        self.constant
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        match self.constant {
            Some(c) => Ok(c),
            None => self.expr.eval(x, t),
        }
    }
}

/// Which boundary carries the integral condition of component `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn position(self) -> f64 {
        match self {
            Side::Left => 0.0,
            Side::Right => 1.0,
        }
    }
}

/// Validated problem description. Component indices are zero based; the
/// first `m` components carry their boundary condition at `x = 0`, the rest
/// at `x = 1`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    n: usize,
    m: usize,
    a: Vec<Coefficient>,
    b: Vec<Vec<Coefficient>>,
    g: Vec<Vec<Coefficient>>,
    h: Vec<Vec<Coefficient>>,
    r: Vec<Vec<Coefficient>>,
    f: Vec<Coefficient>,
    volterra: bool,
    description: String,
    // ∂a/∂t and ∂a/∂x; `None` where symbolic differentiation is unavailable.
    da_dt: Vec<Option<Coefficient>>,
    da_dx: Vec<Option<Coefficient>>,
}

/// Raw, unvalidated problem data.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub n: usize,
    pub m: usize,
    pub a: Vec<Expr>,
    pub b: Vec<Vec<Expr>>,
    pub g: Vec<Vec<Expr>>,
    pub h: Vec<Vec<Expr>>,
    pub r: Vec<Vec<Expr>>,
    pub f: Vec<Expr>,
    pub volterra: bool,
    pub description: String,
}

impl ProblemData {
    /// All-zero data with the given speeds.
    pub fn with_speeds(m: usize, a: Vec<Expr>) -> ProblemData {
        let n = a.len();
        let zeros = vec![vec![Expr::zero(); n]; n];
        ProblemData {
            n,
            m,
            a,
            b: zeros.clone(),
            g: zeros.clone(),
            h: zeros.clone(),
            r: zeros,
            f: vec![Expr::zero(); n],
            volterra: true,
            description: String::new(),
        }
    }
}

impl ProblemSpec {
    pub fn new(data: ProblemData) -> Result<ProblemSpec> {
        let ProblemData {
            n,
            m,
            a,
            b,
            g,
            h,
            r,
            f,
            volterra,
            description,
        } = data;
        if n == 0 {
            return Err(Error::Validation("n must be at least 1".into()));
        }
        if m > n {
            return Err(Error::Validation(format!("m = {m} exceeds n = {n}")));
        }
        check_len("a", a.len(), n)?;
        check_len("f", f.len(), n)?;
        for (name, mat) in [("b", &b), ("g", &g), ("h", &h), ("r", &r)] {
            check_len(name, mat.len(), n)?;
            for (j, row) in mat.iter().enumerate() {
                check_len(&format!("{name}[{}]", j + 1), row.len(), n)?;
            }
        }
        let wrap = |v: Vec<Expr>| v.into_iter().map(Coefficient::new).collect::<Vec<_>>();
        let wrap2 = |m: Vec<Vec<Expr>>| m.into_iter().map(wrap).collect::<Vec<_>>();
        let a = wrap(a);
        let da_dt = a
            .iter()
            .map(|c| c.expr().differentiate(Var::T).ok().map(Coefficient::new))
            .collect();
        let da_dx = a
            .iter()
            .map(|c| c.expr().differentiate(Var::X).ok().map(Coefficient::new))
            .collect();
        let spec = ProblemSpec {
            n,
            m,
            a,
            b: wrap2(b),
            g: wrap2(g),
            h: wrap2(h),
            r: wrap2(r),
            f: wrap(f),
            volterra,
            description,
            da_dt,
            da_dx,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        for (j, a) in self.a.iter().enumerate() {
            check_speed(j, a)?;
        }
        for (name, c) in self.named_coefficients() {
            check_periodic(&name, c)?;
        }
        Ok(())
    }

    /// Every coefficient with its problem-file key, e.g. `b[1][2]` (one based).
    pub fn named_coefficients(&self) -> Vec<(String, &Coefficient)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            out.push((format!("a[{}]", j + 1), &self.a[j]));
            out.push((format!("f[{}]", j + 1), &self.f[j]));
        }
        for (name, mat) in [
            ("b", &self.b),
            ("g", &self.g),
            ("h", &self.h),
            ("r", &self.r),
        ] {
            for j in 0..self.n {
                for k in 0..self.n {
                    out.push((format!("{name}[{}][{}]", j + 1, k + 1), &mat[j][k]));
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn side(&self, j: usize) -> Side {
        if j < self.m {
            Side::Left
        } else {
            Side::Right
        }
    }

    /// Boundary position `x_j` where component `j` takes its integral condition.
    pub fn boundary(&self, j: usize) -> f64 {
        self.side(j).position()
    }

    pub fn a(&self, j: usize) -> &Coefficient {
        &self.a[j]
    }

    pub fn b(&self, j: usize, k: usize) -> &Coefficient {
        &self.b[j][k]
    }

    pub fn g(&self, j: usize, k: usize) -> &Coefficient {
        &self.g[j][k]
    }

    pub fn h(&self, j: usize, k: usize) -> &Coefficient {
        &self.h[j][k]
    }

    pub fn r(&self, j: usize, k: usize) -> &Coefficient {
        &self.r[j][k]
    }

    pub fn f(&self, j: usize) -> &Coefficient {
        &self.f[j]
    }

    /// True for Volterra integral terms (`∫_0^ξ`), false for the Fredholm variant (`∫_0^1`).
    pub fn volterra(&self) -> bool {
        self.volterra
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn da_dt(&self, j: usize) -> Result<&Coefficient> {
        self.da_dt[j].as_ref().ok_or_else(|| Error::Diff {
            node: self.a[j].expr().to_string(),
            reason: format!("a[{}] has no symbolic t-derivative", j + 1),
        })
    }

    pub fn da_dx(&self, j: usize) -> Result<&Coefficient> {
        self.da_dx[j].as_ref().ok_or_else(|| Error::Diff {
            node: self.a[j].expr().to_string(),
            reason: format!("a[{}] has no symbolic x-derivative", j + 1),
        })
    }

    /// Replaces the forcing, revalidating it.
    pub fn with_forcing(&self, f: Vec<Expr>) -> Result<ProblemSpec> {
        check_len("f", f.len(), self.n)?;
        let mut spec = self.clone();
        spec.f = f.into_iter().map(Coefficient::new).collect();
        for (j, c) in spec.f.iter().enumerate() {
            check_periodic(&format!("f[{}]", j + 1), c)?;
        }
        Ok(spec)
    }

    pub fn with_volterra(&self, volterra: bool) -> ProblemSpec {
        let mut spec = self.clone();
        spec.volterra = volterra;
        spec
    }
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Validation(format!(
            "`{name}` has {got} entries, expected {want}"
        )));
    }
    Ok(())
}

fn sample_points((nx, nt): (usize, usize)) -> impl Iterator<Item = (f64, f64)> {
    (0..nx).flat_map(move |i| {
        (0..nt).map(move |q| (i as f64 / (nx - 1) as f64, TAU * q as f64 / nt as f64))
    })
}

fn check_speed(j: usize, a: &Coefficient) -> Result<()> {
    let mut sign = 0.0;
    for (x, t) in sample_points(SPEED_SAMPLES) {
        let v = a
            .eval(x, t)
            .map_err(|e| Error::Validation(format!("a[{}] cannot be evaluated: {e}", j + 1)))?;
        if v.abs() < SPEED_FLOOR {
            return Err(Error::Validation(format!(
                "a[{}] vanishes near (x, t) = ({x}, {t}): value {v}",
                j + 1
            )));
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return Err(Error::Validation(format!(
                "a[{}] changes sign, so it vanishes somewhere; sign flip at (x, t) = ({x}, {t})",
                j + 1
            )));
        }
    }
    Ok(())
}

fn check_periodic(name: &str, c: &Coefficient) -> Result<()> {
    if c.constant().is_some() {
        return Ok(());
    }
    for (x, t) in sample_points(PERIOD_SAMPLES) {
        let eval = |t: f64| {
            c.eval(x, t)
                .map_err(|e| Error::Validation(format!("`{name}` cannot be evaluated: {e}")))
        };
        let v0 = eval(t)?;
        let v1 = eval(t + TAU)?;
        if (v1 - v0).abs() > PERIODICITY_TOLERANCE * v0.abs().max(1.0) {
            return Err(Error::Validation(format!(
                "`{name}` is not 2π-periodic in t: {v0} at (x, t) = ({x}, {t}) but {v1} one period later"
            )));
        }
    }
    Ok(())
}

/// JSON problem file. Matrix entries are indexed `[j][k]`; all entries are
/// expression strings in `x` and `t`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: usize,
    pub m: usize,
    pub a: Vec<String>,
    pub b: Vec<Vec<String>>,
    pub g: Vec<Vec<String>>,
    pub h: Vec<Vec<String>>,
    pub r: Vec<Vec<String>>,
    pub f: Vec<String>,
    #[serde(default = "default_volterra")]
    pub volterra: bool,
    #[serde(default)]
    pub description: String,
}

fn default_volterra() -> bool {
    true
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<ProblemFile> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("problem JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    /// Parses every expression and validates the result.
    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let n = self.n;
        let vector = |key: &str, v: &[String]| -> Result<Vec<Expr>> {
            check_len(key, v.len(), n)?;
            v.iter()
                .enumerate()
                .map(|(j, s)| parse_entry(&format!("{key}[{}]", j + 1), s))
                .collect()
        };
        let matrix = |key: &str, m: &[Vec<String>]| -> Result<Vec<Vec<Expr>>> {
            check_len(key, m.len(), n)?;
            m.iter()
                .enumerate()
                .map(|(j, row)| vector(&format!("{key}[{}]", j + 1), row))
                .collect()
        };
        ProblemSpec::new(ProblemData {
            n,
            m: self.m,
            a: vector("a", &self.a)?,
            b: matrix("b", &self.b)?,
            g: matrix("g", &self.g)?,
            h: matrix("h", &self.h)?,
            r: matrix("r", &self.r)?,
            f: vector("f", &self.f)?,
            volterra: self.volterra,
            description: self.description.clone(),
        })
    }

    /// Problem file describing `spec`, with expressions printed back to text.
    pub fn from_spec(spec: &ProblemSpec) -> ProblemFile {
        let n = spec.n();
        let vector = |c: fn(&ProblemSpec, usize) -> &Coefficient| -> Vec<String> {
            (0..n).map(|j| c(spec, j).expr().to_string()).collect()
        };
        let matrix = |c: fn(&ProblemSpec, usize, usize) -> &Coefficient| -> Vec<Vec<String>> {
            (0..n)
                .map(|j| (0..n).map(|k| c(spec, j, k).expr().to_string()).collect())
                .collect()
        };
        ProblemFile {
            n,
            m: spec.m(),
            a: vector(ProblemSpec::a),
            b: matrix(ProblemSpec::b),
            g: matrix(ProblemSpec::g),
            h: matrix(ProblemSpec::h),
            r: matrix(ProblemSpec::r),
            f: vector(ProblemSpec::f),
            volterra: spec.volterra(),
            description: spec.description().to_string(),
        }
    }
}

fn parse_entry(key: &str, source: &str) -> Result<Expr> {
    parse(source).map_err(|e| Error::Validation(format!("`{key}` = \"{source}\": {e}")))
}

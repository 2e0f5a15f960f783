//! Characteristic curves `ξ ↦ ω_j(ξ, x, t)` with `∂ξ ω = 1 / a_j(ξ, ω)` and
//! `ω_j(x, x, t) = t`, the exponential weights
//! `c_j(ξ, x, t) = exp ∫_x^ξ (b_jj / a_j)(η, ω_j(η)) dη` and `d_j = c_j / a_j`,
//! derivatives of `ω` with respect to its anchor, and the inverse map in time.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::problem::{ProblemSpec, SPEED_FLOOR};

/// Step control for tracing: `cells` x-cells per unit length, each split
/// into `substeps` RK4 steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOptions {
    pub cells: usize,
    pub substeps: usize,
}

impl TraceOptions {
    pub const DEFAULT_SUBSTEPS: usize = 4;

    pub fn for_grid(grid: &Grid) -> TraceOptions {
        TraceOptions {
            cells: grid.cells(),
            substeps: Self::DEFAULT_SUBSTEPS,
        }
    }

    pub fn with_cells(cells: usize) -> TraceOptions {
        TraceOptions {
            cells,
            substeps: Self::DEFAULT_SUBSTEPS,
        }
    }

    fn sub_intervals(&self, length: f64) -> usize {
        let steps = ((length * self.cells as f64) - 1e-9).ceil().max(1.0) as usize;
        self.substeps.max(1) * steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub xi: f64,
    pub omega: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicCurve {
    pub j: usize,
    pub x: f64,
    pub t: f64,
    /// Samples ordered from `ξ = x` to the endpoint.
    pub samples: Vec<CurveSample>,
    /// Signed RK4 step in ξ (zero for a degenerate curve).
    pub step: f64,
}

impl CharacteristicCurve {
    pub fn start(&self) -> &CurveSample {
        &self.samples[0]
    }

    pub fn end(&self) -> &CurveSample {
        self.samples
            .last()
            .expect("curves have at least one sample")
    }

    /// Trapezoid weights for `∫_{ξ_end}^{x} φ(ξ) dξ` over the samples, i.e.
    /// integration from the endpoint back to the anchor.
    pub fn weights_to_anchor(&self) -> Vec<f64> {
        let s = &self.samples;
        let mut w = vec![0.0; s.len()];
        for k in 0..s.len().saturating_sub(1) {
            let half = 0.5 * (s[k].xi - s[k + 1].xi);
            w[k] += half;
            w[k + 1] += half;
        }
        w
    }
}

/// Right-hand side of the characteristic system: `(1/a, b_jj/a)` and `a`.
#[inline]
fn rhs(p: &ProblemSpec, j: usize, xi: f64, omega: f64) -> Result<(f64, f64, f64)> {
    let a = p.a(j).eval(xi, omega)?;
    if a.abs() < SPEED_FLOOR {
        return Err(Error::Trace(format!(
            "speed a[{}] = {a} degenerate at (ξ, ω) = ({xi}, {omega})",
            j + 1
        )));
    }
    let bjj = p.b(j, j);
    let b = if bjj.is_zero() {
        0.0
    } else {
        bjj.eval(xi, omega)?
    };
    Ok((1.0 / a, b / a, a))
}

fn check_position(name: &str, v: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&v) {
        return Err(Error::Range(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Traces the `j`-th characteristic through `(x, t)` from `ξ = x` to `ξ = xi_end`
/// with classical RK4, accumulating `log c` alongside `ω`.
pub fn trace(
    p: &ProblemSpec,
    j: usize,
    x: f64,
    t: f64,
    xi_end: f64,
    opts: TraceOptions,
) -> Result<CharacteristicCurve> {
    let x = check_position("x", x)?;
    let xi_end = check_position("ξ_end", xi_end)?;
    let length = (xi_end - x).abs();
    let (_, _, a0) = rhs(p, j, x, t)?;
    let mut samples = vec![CurveSample {
        xi: x,
        omega: t,
        c: 1.0,
        d: 1.0 / a0,
    }];
    if length == 0.0 {
        return Ok(CharacteristicCurve {
            j,
            x,
            t,
            samples,
            step: 0.0,
        });
    }
    let nsub = opts.sub_intervals(length);
    let span = xi_end - x;
    let h = span / nsub as f64;
    samples.reserve(nsub);

    // ω is tracked as an offset from t with compensated summation so constant
    // speeds reproduce the straight line to rounding level.
    let (mut offset, mut comp) = (0.0f64, 0.0f64);
    let mut log_c = 0.0f64;
    let mut xi = x;
    let mut k1 = rhs(p, j, x, t)?;
    for s in 1..=nsub {
        let omega = t + offset;
        let k2 = rhs(p, j, xi + 0.5 * h, omega + 0.5 * h * k1.0)?;
        let k3 = rhs(p, j, xi + 0.5 * h, omega + 0.5 * h * k2.0)?;
        let xi_next = if s == nsub {
            xi_end
        } else {
            x + span * (s as f64 / nsub as f64)
        };
        let k4 = rhs(p, j, xi_next, omega + h * k3.0)?;
        let d_omega = h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let d_log = h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        // Kahan step
        let y = d_omega - comp;
        let sum = offset + y;
        comp = (sum - offset) - y;
        offset = sum;
        log_c += d_log;
        xi = xi_next;
        let omega = t + offset;
        k1 = rhs(p, j, xi, omega)?;
        let c = log_c.exp();
        samples.push(CurveSample {
            xi,
            omega,
            c,
            d: c / k1.2,
        });
    }
    Ok(CharacteristicCurve {
        j,
        x,
        t,
        samples,
        step: h,
    })
}

/// Composite trapezoid of `φ(ξ, ω)` along the curve from the anchor to the endpoint.
fn integrate_along<F>(curve: &CharacteristicCurve, phi: F) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let s = &curve.samples;
    let mut acc = 0.0;
    let mut prev = phi(s[0].xi, s[0].omega)?;
    for w in s.windows(2) {
        let cur = phi(w[1].xi, w[1].omega)?;
        acc += 0.5 * (w[1].xi - w[0].xi) * (prev + cur);
        prev = cur;
    }
    Ok(acc)
}

fn anchor_exponent(
    p: &ProblemSpec,
    j: usize,
    xi: f64,
    x: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<f64> {
    let curve = trace(p, j, x, t, xi, opts)?;
    let da_dt = p.da_dt(j)?;
    if da_dt.is_zero() {
        return Ok(0.0);
    }
    // ∫_ξ^x (∂_t a / a²) dη = -∫_x^ξ
    let forward = integrate_along(&curve, |eta, om| {
        let a = p.a(j).eval(eta, om)?;
        Ok(da_dt.eval(eta, om)? / (a * a))
    })?;
    Ok(-forward)
}

/// `∂ω_j(ξ, x, t)/∂t = exp ∫_ξ^x (∂_t a_j / a_j²)(η, ω_j(η)) dη`.
pub fn partial_t_omega(
    p: &ProblemSpec,
    j: usize,
    xi: f64,
    x: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<f64> {
    Ok(anchor_exponent(p, j, xi, x, t, opts)?.exp())
}

/// `∂ω_j(ξ, x, t)/∂x = -∂_t ω_j(ξ, x, t) / a_j(x, t)`.
pub fn partial_x_omega(
    p: &ProblemSpec,
    j: usize,
    xi: f64,
    x: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<f64> {
    let dt = partial_t_omega(p, j, xi, x, t, opts)?;
    let a = p.a(j).eval(x, t)?;
    Ok(-dt / a)
}

/// Single RK4 step for `ω` alone from `(xi0, omega0)` to `xi1`.
fn omega_step(p: &ProblemSpec, j: usize, xi0: f64, omega0: f64, xi1: f64) -> Result<f64> {
    let h = xi1 - xi0;
    let k1 = rhs(p, j, xi0, omega0)?.0;
    let k2 = rhs(p, j, xi0 + 0.5 * h, omega0 + 0.5 * h * k1)?.0;
    let k3 = rhs(p, j, xi0 + 0.5 * h, omega0 + 0.5 * h * k2)?.0;
    let k4 = rhs(p, j, xi1, omega0 + h * k3)?.0;
    Ok(omega0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Residual bound on `|ω(ξ) - z|` for [`inverse_omega`].
pub const INVERSE_TOLERANCE: f64 = 1e-11;

/// The position `ξ = ω̃_j(z, x, t)` at which the characteristic through
/// `(x, t)` reaches time `z`.
pub fn inverse_omega(
    p: &ProblemSpec,
    j: usize,
    z: f64,
    x: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<f64> {
    let left = trace(p, j, x, t, 0.0, opts)?;
    let right = trace(p, j, x, t, 1.0, opts)?;
    // Samples ordered by increasing ξ over the whole of [0, 1].
    let mut path: Vec<CurveSample> = left.samples.iter().rev().copied().collect();
    path.extend(right.samples.iter().skip(1).copied());

    let (lo, hi) = {
        let (a, b) = (path[0].omega, path[path.len() - 1].omega);
        (a.min(b), a.max(b))
    };
    let slack = INVERSE_TOLERANCE;
    if z < lo - slack || z > hi + slack {
        return Err(Error::Range(format!(
            "time {z} outside the range [{lo}, {hi}] of characteristic {} through ({x}, {t})",
            j + 1
        )));
    }
    let increasing = path[path.len() - 1].omega >= path[0].omega;
    let before = |s: &CurveSample| {
        if increasing {
            s.omega <= z
        } else {
            s.omega >= z
        }
    };
    // Bisection over the monotone samples for the enclosing segment.
    let (mut l, mut r) = (0usize, path.len() - 1);
    while r - l > 1 {
        let mid = (l + r) / 2;
        if before(&path[mid]) {
            l = mid;
        } else {
            r = mid;
        }
    }
    let (s0, s1) = (path[l], path[r]);
    if (s0.omega - z).abs() <= slack * 1e-2 {
        return Ok(s0.xi);
    }
    if (s1.omega - z).abs() <= slack * 1e-2 {
        return Ok(s1.xi);
    }
    let (xmin, xmax) = (s0.xi.min(s1.xi), s0.xi.max(s1.xi));
    let denom = s1.omega - s0.omega;
    let mut xi = if denom != 0.0 {
        (s0.xi + (z - s0.omega) / denom * (s1.xi - s0.xi)).clamp(xmin, xmax)
    } else {
        s0.xi
    };
    for _ in 0..60 {
        let omega = omega_step(p, j, s0.xi, s0.omega, xi)?;
        let resid = omega - z;
        if resid.abs() <= slack {
            return Ok(xi);
        }
        let a = p.a(j).eval(xi, omega)?;
        xi = (xi - resid * a).clamp(xmin, xmax);
    }
    Err(Error::Trace(format!(
        "Newton refinement of the inverse characteristic did not converge for z = {z}"
    )))
}

/// Derivative of `ω̃_k(τ, x, t)` with respect to its third argument `t`:
/// `-a_k(x, t) · exp ∫_t^τ ∂_x a_k(ω̃_k(ρ, x, t), ρ) dρ`.
///
/// The exponent is integrated by the trapezoid rule over the time samples of
/// the curve from `(x, t)` to the point where it reaches time `τ`.
pub fn partial3_inverse_omega(
    p: &ProblemSpec,
    k: usize,
    tau: f64,
    x: f64,
    t: f64,
    opts: TraceOptions,
) -> Result<f64> {
    let a_anchor = p.a(k).eval(x, t)?;
    let da_dx = p.da_dx(k)?;
    let xi_tau = inverse_omega(p, k, tau, x, t, opts)?;
    if da_dx.is_zero() {
        return Ok(-a_anchor);
    }
    let curve = trace(p, k, x, t, xi_tau, opts)?;
    let s = &curve.samples;
    let mut exponent = 0.0;
    let mut prev = da_dx.eval(s[0].xi, s[0].omega)?;
    for w in s.windows(2) {
        let cur = da_dx.eval(w[1].xi, w[1].omega)?;
        exponent += 0.5 * (w[1].omega - w[0].omega) * (prev + cur);
        prev = cur;
    }
    Ok(-a_anchor * exponent.exp())
}

/// Curves from every grid node `(x_i, t_q)` of component `j` to its boundary
/// `x_j`, filled on first use. Distinct keys may be inserted concurrently.
pub struct CurveCache {
    grid: Grid,
    n: usize,
    opts: TraceOptions,
    slots: Vec<OnceLock<Arc<CharacteristicCurve>>>,
}

impl CurveCache {
    pub fn new(p: &ProblemSpec, grid: Grid) -> CurveCache {
        CurveCache::with_options(p, grid, TraceOptions::for_grid(&grid))
    }

    pub fn with_options(p: &ProblemSpec, grid: Grid, opts: TraceOptions) -> CurveCache {
        let size = grid.size(p.n());
        CurveCache {
            grid,
            n: p.n(),
            opts,
            slots: (0..size).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn options(&self) -> TraceOptions {
        self.opts
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Curve anchored at node `(i, q)` of component `j`, traced to `x_j`.
    pub fn get(
        &self,
        p: &ProblemSpec,
        j: usize,
        i: usize,
        q: usize,
    ) -> Result<Arc<CharacteristicCurve>> {
        let idx = self.grid.flatten(self.n, j, i, q)?;
        let slot = &self.slots[idx];
        if let Some(c) = slot.get() {
            return Ok(Arc::clone(c));
        }
        let curve = Arc::new(trace(
            p,
            j,
            self.grid.x(i),
            self.grid.t(q),
            p.boundary(j),
            self.opts,
        )?);
        // A concurrent writer may have won; both traced the same deterministic curve.
        let _ = slot.set(curve);
        Ok(Arc::clone(slot.get().expect("slot was just filled")))
    }

    /// Traces every curve in parallel.
    pub fn fill(&self, p: &ProblemSpec) -> Result<()> {
        (0..self.slots.len()).into_par_iter().try_for_each(|idx| {
            let (j, i, q) = self.grid.unflatten(self.n, idx)?;
            self.get(p, j, i, q).map(|_| ())
        })
    }
}

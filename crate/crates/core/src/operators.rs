//! Discrete integral operators of the characteristic reformulation.
//!
//! For each component `j` and node `(x, t)` the continuous solution satisfies
//! `u = Ru + Bu + Gu + Hu + Ff` where, along the characteristic `ω_j` through
//! `(x, t)` and with the weights `c_j`, `d_j`:
//!
//! * `(Ru)_j = c_j(x_j) Σ_k ∫_0^1 r_jk(η, ω_j(x_j)) u_k(η, ω_j(x_j)) dη`
//! * `(Bu)_j = -Σ_{k≠j} ∫_{x_j}^x d_j b_jk(ξ, ω_j(ξ)) u_k(ξ, ω_j(ξ)) dξ`
//! * `(Gu)_j = -Σ_k ∫_{x_j}^x d_j ∫_0^ξ g_jk(y, ω_j(ξ)) u_k(y, ω_j(ξ)) dy dξ`
//! * `(Hu)_j = Σ_k ∫_{x_j}^x d_j h_jk(ξ, ω_j(ξ)) u_k(1 - x_k, ω_j(ξ)) dξ`
//! * `(Ff)_j = ∫_{x_j}^x d_j f_j(ξ, ω_j(ξ)) dξ`
//!
//! Outer integrals use the trapezoid rule on the RK4 samples of the cached
//! curve; inner x-integrals use the trapezoid rule on the x-grid, with the
//! partial last cell of a Volterra integral handled on the clipped segment.
//! Off-grid values of `u` are interpolated linearly in x and, in t, with the
//! configured [`TimeInterpolation`].
//!
//! Every operator is evaluated through a single visitor that reports
//! `(component, x-weights, t-weights, factor)` contributions, so applying an
//! operator and building its matrix row share one code path.

use rayon::prelude::*;

use crate::characteristics::{CurveCache, TraceOptions};
use crate::error::Result;
use crate::grid::{Grid, GridFunction, TimeInterpolation};
use crate::problem::ProblemSpec;

/// Selects which linear operators a visit includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub r: bool,
    pub b: bool,
    pub g: bool,
    pub h: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        r: true,
        b: true,
        g: true,
        h: true,
    };
    pub const R: Terms = Terms {
        r: true,
        b: false,
        g: false,
        h: false,
    };
    pub const B: Terms = Terms {
        r: false,
        b: true,
        g: false,
        h: false,
    };
    pub const G: Terms = Terms {
        r: false,
        b: false,
        g: true,
        h: false,
    };
    pub const H: Terms = Terms {
        r: false,
        b: false,
        g: false,
        h: true,
    };
}

/// A sparse linear functional on flattened grid values, plus a constant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stencil {
    /// `(flattened index, weight)`, sorted by index, indices distinct.
    pub entries: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Stencil {
    fn from_raw(mut raw: Vec<(usize, f64)>, constant: f64) -> Stencil {
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
        for (idx, w) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == idx => last.1 += w,
                _ => entries.push((idx, w)),
            }
        }
        entries.retain(|e| e.1 != 0.0);
        Stencil { entries, constant }
    }

    /// Linear part applied to flattened values (the constant is not added).
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * values[i]).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

type TWeights = [(usize, f64); 4];

trait Sink {
    fn add(&mut self, k: usize, xw: &[(usize, f64)], tw: &TWeights, factor: f64);
}

struct ApplySink<'a> {
    u: &'a GridFunction,
    acc: f64,
}

impl Sink for ApplySink<'_> {
    #[inline]
    fn add(&mut self, k: usize, xw: &[(usize, f64)], tw: &TWeights, factor: f64) {
        let mut v = 0.0;
        for &(i, wx) in xw {
            if wx == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for &(q, wt) in tw {
                if wt != 0.0 {
                    s += wt * self.u.get(k, i, q);
                }
            }
            v += wx * s;
        }
        self.acc += factor * v;
    }
}

struct StencilSink {
    grid: Grid,
    raw: Vec<(usize, f64)>,
}

impl Sink for StencilSink {
    #[inline]
    fn add(&mut self, k: usize, xw: &[(usize, f64)], tw: &TWeights, factor: f64) {
        for &(i, wx) in xw {
            if wx == 0.0 {
                continue;
            }
            for &(q, wt) in tw {
                if wt != 0.0 {
                    self.raw.push((self.grid.index(k, i, q), factor * wx * wt));
                }
            }
        }
    }
}

/// Discrete operators for one problem on one grid, sharing a curve cache.
pub struct Operators<'p> {
    p: &'p ProblemSpec,
    grid: Grid,
    cache: CurveCache,
    interp: TimeInterpolation,
    has_r: Vec<bool>,
    has_b: Vec<bool>,
    has_g: Vec<bool>,
    has_h: Vec<bool>,
}

impl<'p> Operators<'p> {
    pub fn new(p: &'p ProblemSpec, grid: Grid) -> Operators<'p> {
        Operators::with_options(
            p,
            grid,
            TimeInterpolation::default(),
            TraceOptions::for_grid(&grid),
        )
    }

    pub fn with_options(
        p: &'p ProblemSpec,
        grid: Grid,
        interp: TimeInterpolation,
        trace: TraceOptions,
    ) -> Operators<'p> {
        let n = p.n();
        let row_has = |pick: &dyn Fn(usize, usize) -> bool, skip_diag: bool| -> Vec<bool> {
            (0..n)
                .map(|j| (0..n).any(|k| !(skip_diag && k == j) && pick(j, k)))
                .collect()
        };
        Operators {
            p,
            grid,
            cache: CurveCache::with_options(p, grid, trace),
            interp,
            has_r: row_has(&|j, k| !p.r(j, k).is_zero(), false),
            has_b: row_has(&|j, k| !p.b(j, k).is_zero(), true),
            has_g: row_has(&|j, k| !p.g(j, k).is_zero(), false),
            has_h: row_has(&|j, k| !p.h(j, k).is_zero(), false),
        }
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.p
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn interpolation(&self) -> TimeInterpolation {
        self.interp
    }

    pub fn cache(&self) -> &CurveCache {
        &self.cache
    }

    /// Traces all curves up front (in parallel).
    pub fn prepare(&self) -> Result<()> {
        self.cache.fill(self.p)
    }

    /// Trapezoid weights of `∫_0^1` on the x-grid.
    fn x_trapezoid(&self, i: usize) -> f64 {
        let h = self.grid.hx();
        if i == 0 || i == self.grid.nx() - 1 {
            0.5 * h
        } else {
            h
        }
    }

    fn visit<S: Sink>(
        &self,
        terms: Terms,
        j: usize,
        i: usize,
        q: usize,
        sink: &mut S,
    ) -> Result<()> {
        let p = self.p;
        let n = p.n();
        let use_r = terms.r && self.has_r[j];
        let use_b = terms.b && self.has_b[j];
        let use_g = terms.g && self.has_g[j];
        let use_h = terms.h && self.has_h[j];
        if !(use_r || use_b || use_g || use_h) {
            return Ok(());
        }
        let grid = self.grid;
        let curve = self.cache.get(p, j, i, q)?;

        if use_r {
            let end = curve.end();
            let tw = grid.t_weights(end.omega, self.interp);
            for k in 0..n {
                let r = p.r(j, k);
                if r.is_zero() {
                    continue;
                }
                for ii in 0..grid.nx() {
                    let w = end.c * self.x_trapezoid(ii) * r.eval(grid.x(ii), end.omega)?;
                    sink.add(k, &[(ii, 1.0)], &tw, w);
                }
            }
        }

        if !(use_b || use_g || use_h) {
            return Ok(());
        }
        let weights = curve.weights_to_anchor();
        for (s, w_s) in curve.samples.iter().zip(weights) {
            if w_s == 0.0 {
                continue;
            }
            let base = w_s * s.d;
            let tw = grid.t_weights(s.omega, self.interp);
            let xi = s.xi.clamp(0.0, 1.0);
            if use_b {
                let xw = grid.x_weights(xi);
                for k in (0..n).filter(|&k| k != j) {
                    let b = p.b(j, k);
                    if !b.is_zero() {
                        sink.add(k, &xw, &tw, -base * b.eval(xi, s.omega)?);
                    }
                }
            }
            if use_h {
                for k in 0..n {
                    let h = p.h(j, k);
                    if !h.is_zero() {
                        // trace u_k(1 - x_k, ·) lives on an exact boundary column
                        let ib = if p.boundary(k) == 0.0 {
                            grid.nx() - 1
                        } else {
                            0
                        };
                        sink.add(k, &[(ib, 1.0)], &tw, base * h.eval(xi, s.omega)?);
                    }
                }
            }
            if use_g {
                self.visit_inner(j, xi, s.omega, -base, &tw, sink)?;
            }
        }
        Ok(())
    }

    /// Adds `scale · Σ_k ∫_0^{upper} g_jk(y, ω) u_k(y, ω) dy` with `upper = ξ`
    /// (Volterra) or `1` (Fredholm variant).
    fn visit_inner<S: Sink>(
        &self,
        j: usize,
        xi: f64,
        omega: f64,
        scale: f64,
        tw: &TWeights,
        sink: &mut S,
    ) -> Result<()> {
        let p = self.p;
        let grid = self.grid;
        let upper = if p.volterra() { xi } else { 1.0 };
        let cells = grid.cells();
        let hx = grid.hx();
        // last node with y_i <= upper
        let last = ((upper * cells as f64 + 1e-12).floor() as usize).min(cells);
        let partial = upper - grid.x(last);
        for k in 0..p.n() {
            let g = p.g(j, k);
            if g.is_zero() {
                continue;
            }
            for ii in 0..=last {
                let w = if last == 0 {
                    0.0
                } else if ii == 0 || ii == last {
                    0.5 * hx
                } else {
                    hx
                };
                let w = w + if ii == last && partial > 0.0 {
                    0.5 * partial
                } else {
                    0.0
                };
                if w != 0.0 {
                    sink.add(k, &[(ii, 1.0)], tw, scale * w * g.eval(grid.x(ii), omega)?);
                }
            }
            if partial > 0.0 {
                let xw = grid.x_weights(upper);
                sink.add(k, &xw, tw, scale * 0.5 * partial * g.eval(upper, omega)?);
            }
        }
        Ok(())
    }

    fn apply_terms(&self, terms: Terms, u: &GridFunction) -> Result<GridFunction> {
        let n = self.p.n();
        assert_eq!(
            u.n(),
            n,
            "grid function has {} components, problem has {n}",
            u.n()
        );
        assert_eq!(
            u.grid(),
            self.grid,
            "grid function lives on a different grid"
        );
        let grid = self.grid;
        let values = (0..grid.size(n))
            .into_par_iter()
            .map(|idx| {
                let (j, i, q) = grid.unflatten(n, idx)?;
                let mut sink = ApplySink { u, acc: 0.0 };
                self.visit(terms, j, i, q, &mut sink)?;
                Ok(sink.acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::from_values(n, grid, values)
    }

    pub fn apply_r(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(Terms::R, u)
    }

    pub fn apply_b(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(Terms::B, u)
    }

    pub fn apply_g(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(Terms::G, u)
    }

    pub fn apply_h(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(Terms::H, u)
    }

    /// `Ku = Ru + Bu + Gu + Hu`.
    pub fn apply_k(&self, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(Terms::ALL, u)
    }

    pub fn apply_selected(&self, terms: Terms, u: &GridFunction) -> Result<GridFunction> {
        self.apply_terms(terms, u)
    }

    /// `(Ff)_j(x, t) = ∫_{x_j}^x d_j f_j(ξ, ω_j(ξ)) dξ` at one node.
    pub fn forcing_at(&self, j: usize, i: usize, q: usize) -> Result<f64> {
        let f = self.p.f(j);
        if f.is_zero() {
            return Ok(0.0);
        }
        let curve = self.cache.get(self.p, j, i, q)?;
        let mut acc = 0.0;
        for (s, w) in curve.samples.iter().zip(curve.weights_to_anchor()) {
            if w != 0.0 {
                acc += w * s.d * f.eval(s.xi, s.omega)?;
            }
        }
        Ok(acc)
    }

    pub fn apply_f(&self) -> Result<GridFunction> {
        let n = self.p.n();
        let grid = self.grid;
        let values = (0..grid.size(n))
            .into_par_iter()
            .map(|idx| {
                let (j, i, q) = grid.unflatten(n, idx)?;
                self.forcing_at(j, i, q)
            })
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::from_values(n, grid, values)
    }

    /// Row of `K = R + B + G + H` at node `(j, i, q)` with `(Ff)` as constant.
    pub fn stencil_row(&self, j: usize, i: usize, q: usize) -> Result<Stencil> {
        self.stencil_row_terms(Terms::ALL, j, i, q)
    }

    pub fn stencil_row_terms(&self, terms: Terms, j: usize, i: usize, q: usize) -> Result<Stencil> {
        self.grid.flatten(self.p.n(), j, i, q)?;
        let mut sink = StencilSink {
            grid: self.grid,
            raw: Vec::new(),
        };
        self.visit(terms, j, i, q, &mut sink)?;
        Ok(Stencil::from_raw(sink.raw, self.forcing_at(j, i, q)?))
    }

    /// Sup norm of `u - (Ku + Ff)` over all nodes.
    pub fn residual(&self, u: &GridFunction) -> Result<f64> {
        let ku = self.apply_k(u)?;
        let ff = self.apply_f()?;
        Ok(u.values()
            .iter()
            .zip(ku.values())
            .zip(ff.values())
            .fold(0.0, |m, ((u, k), f)| m.max((u - k - f).abs())))
    }
}

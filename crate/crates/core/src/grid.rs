//! Space–time collocation grid on `[0,1] x [0, 2π)` and grid functions.
//!
//! The x-grid includes both endpoints; the t-grid is periodic and stores no
//! seam column, so node `Nt` is node `0`. Values of an `n`-component grid
//! function are stored component-major, then by x-index, then by t-index.

use std::f64::consts::TAU;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Slack allowed on x-queries outside `[0, 1]` before they are rejected.
pub const X_RANGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    nx: usize,
    nt: usize,
}

impl Grid {
    pub fn new(nx: usize, nt: usize) -> Result<Grid> {
        if nx < 3 {
            return Err(Error::Range(format!("Nx must be at least 3, got {nx}")));
        }
        if nt < 4 {
            return Err(Error::Range(format!("Nt must be at least 4, got {nt}")));
        }
        Ok(Grid { nx, nt })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Number of x-cells, `Nx - 1`.
    pub fn cells(&self) -> usize {
        self.nx - 1
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn ht(&self) -> f64 {
        TAU / self.nt as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx - 1 {
            1.0
        } else {
            i as f64 / self.cells() as f64
        }
    }

    pub fn t(&self, q: usize) -> f64 {
        TAU * q as f64 / self.nt as f64
    }

    /// Number of unknowns for an `n`-component function.
    pub fn size(&self, n: usize) -> usize {
        n * self.nx * self.nt
    }

    /// Linear index of `(component j, x-index i, t-index q)`, all zero based.
    pub fn flatten(&self, n: usize, j: usize, i: usize, q: usize) -> Result<usize> {
        if j >= n || i >= self.nx || q >= self.nt {
            return Err(Error::Range(format!(
                "node (j={j}, i={i}, q={q}) outside n={n}, Nx={}, Nt={}",
                self.nx, self.nt
            )));
        }
        Ok(self.index(j, i, q))
    }

    pub fn unflatten(&self, n: usize, idx: usize) -> Result<(usize, usize, usize)> {
        if idx >= self.size(n) {
            return Err(Error::Range(format!(
                "index {idx} outside 0..{}",
                self.size(n)
            )));
        }
        let q = idx % self.nt;
        let rest = idx / self.nt;
        Ok((rest / self.nx, rest % self.nx, q))
    }

    #[inline]
    pub(crate) fn index(&self, j: usize, i: usize, q: usize) -> usize {
        (j * self.nx + i) * self.nt + q
    }

    /// Checks an x-query, clamping it into `[0, 1]` when within tolerance.
    pub fn clamp_x(&self, x: f64) -> Result<f64> {
        if !(-X_RANGE_TOLERANCE..=1.0 + X_RANGE_TOLERANCE).contains(&x) {
            return Err(Error::Range(format!("x = {x} outside [0, 1]")));
        }
        Ok(x.clamp(0.0, 1.0))
    }

    /// Enclosing x-cell and the two linear weights for `x` (already clamped).
    #[inline]
    pub(crate) fn x_weights(&self, x: f64) -> [(usize, f64); 2] {
        let s = x * self.cells() as f64;
        let i0 = (s.floor() as usize).min(self.cells() - 1);
        let theta = s - i0 as f64;
        [(i0, 1.0 - theta), (i0 + 1, theta)]
    }

    /// Left t-node (periodically reduced) and fractional offset in `[0, 1)`.
    #[inline]
    pub(crate) fn t_cell(&self, t: f64) -> (usize, f64) {
        let reduced = t.rem_euclid(TAU);
        let s = reduced / self.ht();
        let q0 = s.floor();
        let theta = s - q0;
        ((q0 as usize) % self.nt, theta)
    }

    /// Periodic t-interpolation weights for `t`. Unused slots carry weight zero.
    #[inline]
    pub(crate) fn t_weights(&self, t: f64, kind: TimeInterpolation) -> [(usize, f64); 4] {
        let (q0, th) = self.t_cell(t);
        let nt = self.nt;
        match kind {
            TimeInterpolation::Linear => {
                [(q0, 1.0 - th), ((q0 + 1) % nt, th), (q0, 0.0), (q0, 0.0)]
            }
            TimeInterpolation::Cubic => {
                let wm = -th * (th - 1.0) * (th - 2.0) / 6.0;
                let w0 = (th + 1.0) * (th - 1.0) * (th - 2.0) / 2.0;
                let w1 = -(th + 1.0) * th * (th - 2.0) / 2.0;
                let w2 = (th + 1.0) * th * (th - 1.0) / 6.0;
                [
                    ((q0 + nt - 1) % nt, wm),
                    (q0, w0),
                    ((q0 + 1) % nt, w1),
                    ((q0 + 2) % nt, w2),
                ]
            }
        }
    }
}

/// Interpolation order in the periodic t-direction. The x-direction is
/// always linear on the enclosing cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeInterpolation {
    /// Two-point linear interpolation (bilinear overall).
    Linear,
    /// Four-point Lagrange interpolation on the periodic t-grid.
    #[default]
    Cubic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n: usize,
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(n: usize, grid: Grid) -> GridFunction {
        GridFunction {
            n,
            grid,
            values: vec![0.0; grid.size(n)],
        }
    }

    pub fn from_values(n: usize, grid: Grid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.size(n) {
            return Err(Error::Range(format!(
                "expected {} values for n={n} on a {}x{} grid, got {}",
                grid.size(n),
                grid.nx,
                grid.nt,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range(format!(
                "non-finite grid value at index {pos}"
            )));
        }
        Ok(GridFunction { n, grid, values })
    }

    /// Nodal samples of a single scalar function.
    pub fn sample<F>(grid: Grid, f: F) -> Result<GridFunction>
    where
        F: Fn(f64, f64) -> Result<f64>,
    {
        let mut values = Vec::with_capacity(grid.size(1));
        for i in 0..grid.nx {
            for q in 0..grid.nt {
                values.push(f(grid.x(i), grid.t(q))?);
            }
        }
        GridFunction::from_values(1, grid, values)
    }

    /// Samples each function as one component.
    pub fn sample_components<F>(grid: Grid, fs: &[F]) -> Result<GridFunction>
    where
        F: Fn(f64, f64) -> Result<f64>,
    {
        let parts = fs
            .iter()
            .map(|f| GridFunction::sample(grid, f))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::stack(&parts)
    }

    /// Samples each expression as one component.
    pub fn sample_exprs(grid: Grid, exprs: &[Expr]) -> Result<GridFunction> {
        let parts = exprs
            .iter()
            .map(|e| GridFunction::sample(grid, |x, t| e.eval(x, t)))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::stack(&parts)
    }

    /// Concatenates single-component functions into one multi-component function.
    pub fn stack(parts: &[GridFunction]) -> Result<GridFunction> {
        let grid = parts
            .first()
            .ok_or_else(|| Error::Range("no components to stack".into()))?
            .grid;
        let mut values = Vec::with_capacity(grid.size(parts.len()));
        for p in parts {
            if p.grid != grid {
                return Err(Error::Range("components live on different grids".into()));
            }
            values.extend_from_slice(&p.values);
        }
        Ok(GridFunction {
            n: values.len() / grid.size(1),
            grid,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize, q: usize) -> f64 {
        self.values[self.grid.index(j, i, q)]
    }

    #[inline]
    pub fn set(&mut self, j: usize, i: usize, q: usize, v: f64) {
        let idx = self.grid.index(j, i, q);
        self.values[idx] = v;
    }

    /// Maximum absolute nodal value over all components.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation of component `j` (zero based): linear in x on
    /// the enclosing cell, linear in t with periodic wraparound.
    pub fn interpolate(&self, j: usize, x: f64, t: f64) -> Result<f64> {
        self.interpolate_with(j, x, t, TimeInterpolation::Linear)
    }

    pub fn interpolate_with(
        &self,
        j: usize,
        x: f64,
        t: f64,
        kind: TimeInterpolation,
    ) -> Result<f64> {
        if j >= self.n {
            return Err(Error::Range(format!("component {j} outside 0..{}", self.n)));
        }
        let x = self.grid.clamp_x(x)?;
        let xw = self.grid.x_weights(x);
        let tw = self.grid.t_weights(t, kind);
        let mut acc = 0.0;
        for &(i, wx) in &xw {
            if wx == 0.0 {
                continue;
            }
            for &(q, wt) in &tw {
                if wt != 0.0 {
                    acc += wx * wt * self.get(j, i, q);
                }
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, alpha: f64) -> GridFunction {
        GridFunction {
            n: self.n,
            grid: self.grid,
            values: self.values.iter().map(|v| alpha * v).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &GridFunction) -> Result<GridFunction> {
        if self.n != other.n || self.grid != other.grid {
            return Err(Error::Range("grid functions have different shapes".into()));
        }
        Ok(GridFunction {
            n: self.n,
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    /// Writes rows `j,i,q,x,t,value` with a header. `j` is the one-based
    /// component number; `i` and `q` are zero-based node indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,i,q,x,t,value")?;
        for j in 0..self.n {
            for i in 0..self.grid.nx {
                for q in 0..self.grid.nt {
                    writeln!(
                        w,
                        "{},{},{},{:?},{:?},{:?}",
                        j + 1,
                        i,
                        q,
                        self.grid.x(i),
                        self.grid.t(q),
                        self.get(j, i, q)
                    )?;
                }
            }
        }
        Ok(())
    }
}

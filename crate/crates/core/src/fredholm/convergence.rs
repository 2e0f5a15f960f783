use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::alternative::SolveOptions;
use super::assemble::{assemble_with, AssemblyOptions};
use super::spectrum::{singular_spectrum_with, SpectrumOptions};
use crate::characteristics::TraceOptions;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Grid, GridFunction};
use crate::operators::Operators;
use crate::problem::ProblemSpec;

/// Relative size below which an error counts as rounding.
pub const ROUNDING_LEVEL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `max |u_h - u|` of the discrete solution against an exact one.
    Error,
    /// `max |u - Ku - Ff|` of a sampled candidate.
    Residual,
    /// Smallest singular value of `I - K`.
    SigmaMin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub nt: usize,
    pub metric: Metric,
    pub value: f64,
    /// `log₂` of the ratio to the previous row per halving of the step.
    pub order: Option<f64>,
    /// The value is at rounding level, so no order is meaningful.
    pub exact: bool,
}

/// Rejects grid lists that do not refine: `Nt` must double and `Nx - 1`
/// must grow by a factor in `[1.5, 2.5]` from one grid to the next.
pub fn check_refining(grids: &[Grid]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::Validation("no grids given".into()));
    }
    for w in grids.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ratio = b.cells() as f64 / a.cells() as f64;
        if b.nt() != 2 * a.nt() || !(1.5..=2.5).contains(&ratio) {
            return Err(Error::Validation(format!(
                "grid {}x{} does not refine {}x{} (Nt must double, Nx-1 roughly double)",
                b.nx(),
                b.nt(),
                a.nx(),
                a.nt()
            )));
        }
    }
    Ok(())
}

/// `max |u - (Ru + Bu + Gu + Hu + Ff)|` over the grid nodes.
pub fn residual(p: &ProblemSpec, grid: Grid, u: &GridFunction) -> Result<f64> {
    residual_with(p, grid, u, &AssemblyOptions::default())
}

pub fn residual_with(
    p: &ProblemSpec,
    grid: Grid,
    u: &GridFunction,
    opts: &AssemblyOptions,
) -> Result<f64> {
    if u.n() != p.n() || u.grid() != grid {
        return Err(Error::Validation(format!(
            "candidate has {} components on {}x{}, expected {} on {}x{}",
            u.n(),
            u.grid().nx(),
            u.grid().nt(),
            p.n(),
            grid.nx(),
            grid.nt()
        )));
    }
    let trace = TraceOptions {
        cells: grid.cells(),
        substeps: opts.substeps,
    };
    Operators::with_options(p, grid, opts.interpolation, trace).residual(u)
}

fn with_orders(grids: &[Grid], metric: Metric, values: Vec<(f64, bool)>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(values.len());
    for (idx, (&grid, (value, exact))) in grids.iter().zip(values).enumerate() {
        let order = match idx {
            0 => None,
            _ => {
                let prev = &rows[idx - 1];
                let steps = (grid.nt() as f64 / prev.nt as f64).log2();
                (!exact && !prev.exact && value > 0.0).then(|| (prev.value / value).log2() / steps)
            }
        };
        rows.push(ConvergenceRow {
            nx: grid.nx(),
            nt: grid.nt(),
            metric,
            value,
            order,
            exact,
        });
    }
    rows
}

/// Error against `exact` when given, otherwise the trend of `σ_min(I - K)`.
pub fn convergence_study(
    p: &ProblemSpec,
    exact: Option<&[Expr]>,
    grids: &[Grid],
) -> Result<Vec<ConvergenceRow>> {
    convergence_study_with(p, exact, grids, &SolveOptions::default())
}

pub fn convergence_study_with(
    p: &ProblemSpec,
    exact: Option<&[Expr]>,
    grids: &[Grid],
    opts: &SolveOptions,
) -> Result<Vec<ConvergenceRow>> {
    check_refining(grids)?;
    match exact {
        Some(exact) => {
            if exact.len() != p.n() {
                return Err(Error::Validation(format!(
                    "{} exact expressions given for {} components",
                    exact.len(),
                    p.n()
                )));
            }
            let values = grids
                .iter()
                .map(|&grid| solution_error(p, exact, grid, &opts.assembly))
                .collect::<Result<Vec<_>>>()?;
            Ok(with_orders(grids, Metric::Error, values))
        }
        None => {
            let spectrum = SpectrumOptions {
                count: 1,
                ..opts.spectrum
            };
            let values = grids
                .iter()
                .map(|&grid| {
                    let m = assemble_with(p, grid, opts.assembly)?;
                    let s = singular_spectrum_with(&m, &spectrum, Some(0.0))?;
                    Ok((s.sigma_min(), false))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(with_orders(grids, Metric::SigmaMin, values))
        }
    }
}

fn solution_error(
    p: &ProblemSpec,
    exact: &[Expr],
    grid: Grid,
    opts: &AssemblyOptions,
) -> Result<(f64, bool)> {
    let m = assemble_with(p, grid, *opts)?;
    let b = Mat::from_fn(m.size(), 1, |i, _| m.rhs()[i]);
    let x = m.matrix().partial_piv_lu().solve(&b);
    let u = m.to_grid_function((0..m.size()).map(|i| x[(i, 0)]).collect())?;
    let reference = GridFunction::sample_exprs(grid, exact)?;
    let err = u.axpy(-1.0, &reference)?.sup_norm();
    Ok((err, err <= ROUNDING_LEVEL * (1.0 + reference.sup_norm())))
}

/// Residual of a sampled candidate solution across grids.
pub fn residual_study(
    p: &ProblemSpec,
    candidate: &[Expr],
    grids: &[Grid],
) -> Result<Vec<ConvergenceRow>> {
    residual_study_with(p, candidate, grids, &AssemblyOptions::default())
}

pub fn residual_study_with(
    p: &ProblemSpec,
    candidate: &[Expr],
    grids: &[Grid],
    opts: &AssemblyOptions,
) -> Result<Vec<ConvergenceRow>> {
    check_refining(grids)?;
    let values = grids
        .iter()
        .map(|&grid| {
            let u = GridFunction::sample_exprs(grid, candidate)?;
            let r = residual_with(p, grid, &u, opts)?;
            Ok((r, r <= ROUNDING_LEVEL * (1.0 + u.sup_norm())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_orders(grids, Metric::Residual, values))
}

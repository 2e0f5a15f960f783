use std::time::Instant;

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_with, AssemblyOptions, OperatorMatrix};
use super::spectrum::{default_tau, full, partial, Spectrum, SpectrumMethod, SpectrumOptions};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::problem::ProblemSpec;

/// Which side of the discrete alternative a problem falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `σ_min > τ`: unique solution for the given forcing.
    Unique,
    /// `σ_min ≤ τ`: numerical kernel of positive dimension.
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Kernel tolerance; `100·N·ε·σ₁` when absent.
    pub tau: Option<f64>,
    pub assembly: AssemblyOptions,
    pub spectrum: SpectrumOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub assembly_seconds: f64,
    pub spectrum_seconds: f64,
    pub solve_seconds: f64,
}

/// Outcome of the discrete alternative for one problem on one grid.
#[derive(Debug, Clone, Serialize)]
pub struct FredholmReport {
    pub n: usize,
    pub nx: usize,
    pub nt: usize,
    pub size: usize,
    pub branch: Branch,
    pub tau: f64,
    pub tau_is_default: bool,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Descending; when `complete_spectrum` is false only `σ₁` and the
    /// resolved smallest values are listed.
    pub singular_values: Vec<f64>,
    pub complete_spectrum: bool,
    pub spectrum_method: SpectrumMethod,
    pub kernel_dim: usize,
    /// `max |u - Ku - Ff|` of the returned (least-squares) solution.
    pub residual: f64,
    /// `‖P_coker Ff‖₂`; present on the resonant branch only.
    pub defect: Option<f64>,
    /// `max ‖A v‖₂` over the unit kernel vectors.
    pub kernel_residual: Option<f64>,
    /// `max ‖Aᵀ w‖₂` over the unit cokernel vectors.
    pub cokernel_residual: Option<f64>,
    pub solution_norm: f64,
    pub k_norm_inf: f64,
    pub a_norm_inf: f64,
    pub timings: Timings,
    #[serde(skip)]
    pub solution: GridFunction,
    #[serde(skip)]
    pub kernel: Vec<GridFunction>,
    #[serde(skip)]
    pub cokernel: Vec<GridFunction>,
}

impl FredholmReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Assembles `I - K` and resolves the alternative with default options and
/// an optional kernel tolerance.
pub fn solve_alternative(p: &ProblemSpec, grid: Grid, tau: Option<f64>) -> Result<FredholmReport> {
    solve_alternative_with(
        p,
        grid,
        &SolveOptions {
            tau,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_alternative_with(
    p: &ProblemSpec,
    grid: Grid,
    opts: &SolveOptions,
) -> Result<FredholmReport> {
    if let Some(tau) = opts.tau {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Validation(format!("τ must be positive, got {tau}")));
        }
    }
    let start = Instant::now();
    let m = assemble_with(p, grid, opts.assembly)?;
    let assembly_seconds = start.elapsed().as_secs_f64();
    let mut report = resolve(&m, opts)?;
    report.timings.assembly_seconds = assembly_seconds;
    Ok(report)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn lu_solve(lu: &PartialPivLu<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = lu.solve(&rhs);
    let out: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spectrum(
            "LU solve produced non-finite values".into(),
        ));
    }
    Ok(out)
}

/// Resolves the alternative for an assembled system.
pub fn resolve(m: &OperatorMatrix, opts: &SolveOptions) -> Result<FredholmReport> {
    let size = m.size();
    let method = match (opts.spectrum.method, size) {
        (SpectrumMethod::Auto, s) if s <= super::spectrum::FULL_SVD_LIMIT => SpectrumMethod::Full,
        (SpectrumMethod::Auto, _) => SpectrumMethod::Partial,
        (other, _) => other,
    };
    let start = Instant::now();
    let lu = match method {
        SpectrumMethod::Full => None,
        _ => Some(m.matrix().partial_piv_lu()),
    };
    let spectrum: Spectrum = match &lu {
        None => full(m.matrix())?,
        Some(lu) => partial(m.matrix(), lu, &opts.spectrum, opts.tau)?,
    };
    let spectrum_seconds = start.elapsed().as_secs_f64();

    let tau = opts
        .tau
        .unwrap_or_else(|| default_tau(size, spectrum.sigma_max()));
    let kernel_dim = spectrum.count_below(tau)?;
    let rhs = m.rhs();

    let start = Instant::now();
    let (values, defect) = if kernel_dim == 0 {
        let x = match &lu {
            Some(lu) => lu_solve(lu, rhs)?,
            None => lu_solve(&m.matrix().partial_piv_lu(), rhs)?,
        };
        (x, None)
    } else if spectrum.is_complete() {
        // truncated SVD: Σ_{σ_i ≥ τ} (u_iᵀ b / σ_i) v_i
        let mut x = vec![0.0; size];
        for i in kernel_dim..size {
            let c = dot(&spectrum.left(i), rhs) / spectrum.smallest(i);
            for (xi, vi) in x.iter_mut().zip(spectrum.right(i)) {
                *xi += c * vi;
            }
        }
        let defect = (0..kernel_dim)
            .map(|i| dot(&spectrum.left(i), rhs).powi(2))
            .sum::<f64>()
            .sqrt();
        (x, Some(defect))
    } else {
        // project b off the cokernel, solve, then remove kernel components
        let lu = lu
            .as_ref()
            .expect("partial spectra keep their factorization");
        let mut b = rhs.to_vec();
        let mut defect2 = 0.0;
        for i in 0..kernel_dim {
            let w = spectrum.left(i);
            let c = dot(&w, &b);
            defect2 += c * c;
            b.iter_mut().zip(&w).for_each(|(bi, wi)| *bi -= c * wi);
        }
        let mut x = lu_solve(lu, &b)?;
        for i in 0..kernel_dim {
            let v = spectrum.right(i);
            let c = dot(&v, &x);
            x.iter_mut().zip(&v).for_each(|(xi, vi)| *xi -= c * vi);
        }
        (x, Some(defect2.sqrt()))
    };

    let residual = m.residual_inf(&values);
    let solution_norm = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut kernel = Vec::with_capacity(kernel_dim);
    let mut cokernel = Vec::with_capacity(kernel_dim);
    let (mut kernel_residual, mut cokernel_residual) = (None, None);
    if kernel_dim > 0 {
        let (mut kr, mut cr) = (0.0f64, 0.0f64);
        for i in 0..kernel_dim {
            let v = spectrum.right(i);
            let w = spectrum.left(i);
            kr = kr.max(norm2(&m.apply(&v)) / norm2(&v));
            let col = Mat::from_fn(size, 1, |r, _| w[r]);
            let back = m.matrix().transpose() * &col;
            cr = cr.max((0..size).map(|r| back[(r, 0)].powi(2)).sum::<f64>().sqrt() / norm2(&w));
            kernel.push(m.to_grid_function(v)?);
            cokernel.push(m.to_grid_function(w)?);
        }
        kernel_residual = Some(kr);
        cokernel_residual = Some(cr);
    }
    let solve_seconds = start.elapsed().as_secs_f64();
    let grid = m.grid();
    Ok(FredholmReport {
        n: m.n(),
        nx: grid.nx(),
        nt: grid.nt(),
        size,
        branch: if kernel_dim == 0 {
            Branch::Unique
        } else {
            Branch::Resonant
        },
        tau,
        tau_is_default: opts.tau.is_none(),
        sigma_max: spectrum.sigma_max(),
        sigma_min: spectrum.sigma_min(),
        singular_values: spectrum.values().to_vec(),
        complete_spectrum: spectrum.is_complete(),
        spectrum_method: method,
        kernel_dim,
        residual,
        defect,
        kernel_residual,
        cokernel_residual,
        solution_norm,
        k_norm_inf: m.k_norm_inf(),
        a_norm_inf: m.a_norm_inf(),
        timings: Timings {
            assembly_seconds: 0.0,
            spectrum_seconds,
            solve_seconds,
        },
        solution: m.to_grid_function(values)?,
        kernel,
        cokernel,
    })
}

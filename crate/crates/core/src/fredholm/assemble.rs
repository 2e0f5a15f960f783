use faer::Mat;
use rayon::prelude::*;

use crate::characteristics::TraceOptions;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, TimeInterpolation};
use crate::operators::{Operators, Stencil};
use crate::problem::ProblemSpec;

/// Largest dense system assembled unless configured otherwise.
pub const DEFAULT_DENSE_LIMIT: usize = 20_000;

/// Rows assembled per parallel batch; bounds the memory held by stencils.
const ROW_BATCH: usize = 512;

/// Assembly settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub dense_limit: usize,
    pub interpolation: TimeInterpolation,
    /// RK4 substeps per x-cell.
    pub substeps: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            dense_limit: DEFAULT_DENSE_LIMIT,
            interpolation: TimeInterpolation::default(),
            substeps: TraceOptions::DEFAULT_SUBSTEPS,
        }
    }
}

/// Dense `A = I - K` with `K = R + B + G + H`, and the discrete forcing `Ff`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    n: usize,
    grid: Grid,
    a: Mat<f64>,
    rhs: Vec<f64>,
    k_norm_inf: f64,
    a_norm_inf: f64,
}

impl OperatorMatrix {
    /// Component count of the underlying problem.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Order `N = n·Nx·Nt` of the system.
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Maximum absolute row sum of `K`.
    pub fn k_norm_inf(&self) -> f64 {
        self.k_norm_inf
    }

    /// Maximum absolute row sum of `A`.
    pub fn a_norm_inf(&self) -> f64 {
        self.a_norm_inf
    }

    /// `A·v` for a flattened vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.size(),
            "vector length must equal the system order"
        );
        let col = faer::Col::<f64>::from_fn(v.len(), |i| v[i]);
        let out = &self.a * &col;
        (0..out.nrows()).map(|i| out[i]).collect()
    }

    /// `max_r |(A·v)_r - rhs_r|`.
    pub fn residual_inf(&self, v: &[f64]) -> f64 {
        self.apply(v)
            .iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (av, b)| m.max((av - b).abs()))
    }

    /// Wraps a flattened vector as a grid function.
    pub fn to_grid_function(&self, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::from_values(self.n, self.grid, values)
    }
}

/// Assembles `I - K` and `Ff` with default options.
pub fn assemble(p: &ProblemSpec, grid: Grid) -> Result<OperatorMatrix> {
    assemble_with(p, grid, AssemblyOptions::default())
}

/// Assembles row by row from operator stencils; batches of rows are built in
/// parallel and written in index order, so the result does not depend on the
/// schedule.
pub fn assemble_with(p: &ProblemSpec, grid: Grid, opts: AssemblyOptions) -> Result<OperatorMatrix> {
    let n = p.n();
    let size = grid.size(n);
    if size > opts.dense_limit {
        return Err(Error::Capacity {
            size,
            limit: opts.dense_limit,
        });
    }
    let trace = TraceOptions {
        cells: grid.cells(),
        substeps: opts.substeps,
    };
    let ops = Operators::with_options(p, grid, opts.interpolation, trace);
    ops.prepare()?;

    let mut a = Mat::<f64>::identity(size, size);
    let mut rhs = vec![0.0; size];
    let mut k_norm_inf = 0.0f64;
    let mut a_norm_inf = 0.0f64;
    for start in (0..size).step_by(ROW_BATCH) {
        let end = (start + ROW_BATCH).min(size);
        let rows = (start..end)
            .into_par_iter()
            .map(|row| {
                let (j, i, q) = grid.unflatten(n, row)?;
                ops.stencil_row(j, i, q)
            })
            .collect::<Result<Vec<Stencil>>>()?;
        for (row, stencil) in (start..end).zip(rows) {
            rhs[row] = stencil.constant;
            let mut k_sum = 0.0;
            let mut a_sum = 1.0;
            for &(col, w) in &stencil.entries {
                k_sum += w.abs();
                a[(row, col)] -= w;
                if col == row {
                    a_sum += (1.0 - w).abs() - 1.0;
                } else {
                    a_sum += w.abs();
                }
            }
            if !a[(row, row)].is_finite() || !k_sum.is_finite() {
                return Err(Error::Validation(format!("non-finite entry in row {row}")));
            }
            k_norm_inf = k_norm_inf.max(k_sum);
            a_norm_inf = a_norm_inf.max(a_sum);
        }
    }
    Ok(OperatorMatrix {
        n,
        grid,
        a,
        rhs,
        k_norm_inf,
        a_norm_inf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin, EXAMPLE13, LEVY_PASS, MANUFACTURED};
    use crate::expr::parse;
    use crate::problem::ProblemData;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_coefficients_give_identity() {
        let p = ProblemSpec::new(ProblemData::with_speeds(
            1,
            vec![parse("1").unwrap(), parse("-2").unwrap()],
        ))
        .unwrap();
        let grid = Grid::new(5, 4).unwrap();
        let m = assemble(&p, grid).unwrap();
        let a = m.matrix();
        for r in 0..m.size() {
            for c in 0..m.size() {
                assert_eq!(a[(r, c)], if r == c { 1.0 } else { 0.0 });
            }
        }
        assert!(m.rhs().iter().all(|&v| v == 0.0));
        assert_eq!(m.k_norm_inf(), 0.0);
        assert_eq!(m.a_norm_inf(), 1.0);
    }

    #[test]
    fn matrix_matches_operator_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in [EXAMPLE13, MANUFACTURED, LEVY_PASS] {
            let p = builtin(name).unwrap().spec;
            let grid = Grid::new(7, 8).unwrap();
            let m = assemble(&p, grid).unwrap();
            let ops = Operators::new(&p, grid);
            for _ in 0..3 {
                let v: Vec<f64> = (0..m.size()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let u = m.to_grid_function(v.clone()).unwrap();
                let ku = ops.apply_k(&u).unwrap();
                let au = m.apply(&v);
                for r in 0..m.size() {
                    let want = v[r] - ku.values()[r];
                    assert!(
                        (au[r] - want).abs() <= 1e-12 * (1.0 + want.abs()),
                        "{name} row {r}"
                    );
                }
            }
            let ff = ops.apply_f().unwrap();
            assert_eq!(m.rhs(), ff.values());
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let p = builtin(LEVY_PASS).unwrap().spec;
        let grid = Grid::new(9, 8).unwrap();
        let a = assemble(&p, grid).unwrap();
        let b = assemble(&p, grid).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
    }

    #[test]
    fn capacity_limit_is_enforced() {
        let p = builtin(EXAMPLE13).unwrap().spec;
        let grid = Grid::new(9, 8).unwrap();
        let opts = AssemblyOptions {
            dense_limit: 100,
            ..AssemblyOptions::default()
        };
        assert_eq!(
            assemble_with(&p, grid, opts).unwrap_err(),
            Error::Capacity {
                size: 144,
                limit: 100
            }
        );
    }

    #[test]
    fn k_norm_is_grid_stable_for_example13() {
        let p = builtin(EXAMPLE13).unwrap().spec;
        let coarse = assemble(&p, Grid::new(16, 16).unwrap())
            .unwrap()
            .k_norm_inf();
        let fine = assemble(&p, Grid::new(32, 32).unwrap())
            .unwrap()
            .k_norm_inf();
        assert!(coarse > 0.0);
        assert!(
            ((fine - coarse) / coarse).abs() <= 0.1,
            "{coarse} vs {fine}"
        );
    }
}

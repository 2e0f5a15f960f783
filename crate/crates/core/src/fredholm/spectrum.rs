use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assemble::OperatorMatrix;
use crate::error::{Error, Result};

const SIGMA_MAX_TOLERANCE: f64 = 1e-13;
const SIGMA_MAX_ITERATIONS: usize = 300;

/// Largest order for which [`SpectrumMethod::Auto`] runs a full SVD.
pub const FULL_SVD_LIMIT: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    /// Full SVD up to [`FULL_SVD_LIMIT`], partial above.
    #[default]
    Auto,
    /// Dense SVD of the whole matrix.
    Full,
    /// Largest singular value by power iteration and the smallest singular
    /// triplets by LU-based inverse subspace iteration.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub method: SpectrumMethod,
    /// Initial number of smallest triplets resolved by the partial method.
    pub count: usize,
    /// Upper bound on the number of smallest triplets.
    pub max_count: usize,
    /// Relative change of the Ritz values at which iteration stops.
    pub tolerance: f64,
    /// Bound on `‖Aᵀu_i - σ_i v_i‖₂ / σ₁` for accepted triplets.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            method: SpectrumMethod::Auto,
            count: 8,
            max_count: 256,
            tolerance: 1e-12,
            residual_tolerance: 1e-9,
            max_iterations: 2000,
            seed: 0x5eed,
        }
    }
}

impl SpectrumOptions {
    fn resolved(&self, size: usize) -> SpectrumMethod {
        match self.method {
            SpectrumMethod::Auto if size <= FULL_SVD_LIMIT => SpectrumMethod::Full,
            SpectrumMethod::Auto => SpectrumMethod::Partial,
            m => m,
        }
    }
}

/// Singular values of `A` in descending order, with the singular vectors of
/// the smallest ones.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    complete: bool,
    /// Smallest values first.
    tail: Vec<f64>,
    /// Column `i` pairs with `tail[i]`.
    left: Mat<f64>,
    right: Mat<f64>,
    max_residual: f64,
}

impl Spectrum {
    /// Descending. When incomplete: `σ₁` followed by the resolved tail.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn sigma_max(&self) -> f64 {
        self.values[0]
    }

    pub fn sigma_min(&self) -> f64 {
        self.tail[0]
    }

    /// Number of smallest singular triplets available.
    pub fn resolved(&self) -> usize {
        self.tail.len()
    }

    /// The `i`-th smallest singular value.
    pub fn smallest(&self, i: usize) -> f64 {
        self.tail[i]
    }

    /// Left singular vector of the `i`-th smallest singular value.
    pub fn left(&self, i: usize) -> Vec<f64> {
        column(&self.left, i)
    }

    /// Right singular vector of the `i`-th smallest singular value.
    pub fn right(&self, i: usize) -> Vec<f64> {
        column(&self.right, i)
    }

    /// Largest `‖Aᵀu_i - σ_i v_i‖₂` over the resolved tail (zero for a full SVD
    /// up to rounding, not evaluated there).
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    /// Whether every singular value below `tau` is among the resolved ones.
    pub fn covers(&self, tau: f64) -> bool {
        self.complete || self.tail.last().is_some_and(|&s| s >= tau)
    }

    /// `#{σ < tau}`, or an error if the resolved tail does not reach `tau`.
    pub fn count_below(&self, tau: f64) -> Result<usize> {
        if !self.covers(tau) {
            return Err(Error::Spectrum(format!(
                "all {} resolved singular values lie below τ = {tau:e}",
                self.tail.len()
            )));
        }
        Ok(self.tail.iter().take_while(|&&s| s < tau).count())
    }
}

fn column(m: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Singular spectrum with default options.
pub fn singular_spectrum(m: &OperatorMatrix) -> Result<Spectrum> {
    singular_spectrum_with(m, &SpectrumOptions::default(), None)
}

/// Singular spectrum; the partial method enlarges its block until the
/// resolved tail reaches `cover` (default `100·N·ε·σ₁`).
pub fn singular_spectrum_with(
    m: &OperatorMatrix,
    opts: &SpectrumOptions,
    cover: Option<f64>,
) -> Result<Spectrum> {
    match opts.resolved(m.size()) {
        SpectrumMethod::Full => full(m.matrix()),
        _ => {
            let lu = m.matrix().partial_piv_lu();
            partial(m.matrix(), &lu, opts, cover)
        }
    }
}

/// Default kernel tolerance `100·N·ε·σ₁`.
pub fn default_tau(size: usize, sigma_max: f64) -> f64 {
    100.0 * size as f64 * f64::EPSILON * sigma_max
}

pub(crate) fn full(a: &Mat<f64>) -> Result<Spectrum> {
    let svd = a
        .svd()
        .map_err(|e| Error::Spectrum(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let size = a.nrows();
    let values: Vec<f64> = (0..size).map(|i| s[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spectrum("non-finite singular value".into()));
    }
    let tail: Vec<f64> = values.iter().rev().copied().collect();
    let (u, v) = (svd.U(), svd.V());
    let left = Mat::from_fn(size, size, |i, j| u[(i, size - 1 - j)]);
    let right = Mat::from_fn(size, size, |i, j| v[(i, size - 1 - j)]);
    Ok(Spectrum {
        values,
        complete: true,
        tail,
        left,
        right,
        max_residual: 0.0,
    })
}

fn random_block(size: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    Mat::from_fn(size, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn orthonormal(m: &Mat<f64>) -> Mat<f64> {
    m.qr().compute_thin_Q()
}

fn all_finite(m: &Mat<f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

/// `σ₁` by Golub–Kahan–Lanczos bidiagonalization with full
/// reorthogonalization, stopped when the largest singular value of the
/// bidiagonal settles to [`SIGMA_MAX_TOLERANCE`].
fn sigma_max(a: &Mat<f64>, opts: &SpectrumOptions) -> Result<f64> {
    let size = a.nrows();
    let steps = size.min(SIGMA_MAX_ITERATIONS);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let mut v = random_block(size, 1, &mut rng);
    v = &v * Scale(1.0 / v.norm_l2());
    let mut us: Vec<Mat<f64>> = Vec::with_capacity(steps);
    let mut vs: Vec<Mat<f64>> = Vec::with_capacity(steps);
    let (mut alphas, mut betas) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    let mut sigma = 0.0;
    for k in 0..steps {
        let mut u = a * &v;
        if let (Some(prev), Some(&beta)) = (us.last(), betas.last()) {
            u = &u - prev * Scale(beta);
        }
        reorthogonalize(&mut u, &us);
        let alpha = u.norm_l2();
        vs.push(v.clone());
        alphas.push(alpha);
        if alpha <= f64::MIN_POSITIVE {
            break;
        }
        u = &u * Scale(1.0 / alpha);
        let mut w = a.transpose() * &u - &v * Scale(alpha);
        us.push(u);
        reorthogonalize(&mut w, &vs);
        let beta = w.norm_l2();
        let order = k + 1;
        let b = Mat::from_fn(order, order, |i, j| {
            if i == j {
                alphas[i]
            } else if j == i + 1 {
                betas[i]
            } else {
                0.0
            }
        });
        let next = b
            .singular_values()
            .map_err(|e| Error::Spectrum(format!("SVD did not converge: {e:?}")))?[0];
        if (next - sigma).abs() <= SIGMA_MAX_TOLERANCE * next || beta <= f64::MIN_POSITIVE {
            return Ok(next);
        }
        sigma = next;
        betas.push(beta);
        v = &w * Scale(1.0 / beta);
    }
    Ok(sigma.max(alphas.iter().copied().fold(0.0, f64::max)))
}

fn reorthogonalize(x: &mut Mat<f64>, basis: &[Mat<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = (q.transpose() * &*x)[(0, 0)];
            *x = &*x - q * Scale(c);
        }
    }
}

pub(crate) fn partial(
    a: &Mat<f64>,
    lu: &PartialPivLu<f64>,
    opts: &SpectrumOptions,
    cover: Option<f64>,
) -> Result<Spectrum> {
    let size = a.nrows();
    let s1 = sigma_max(a, opts)?;
    let cover = cover.unwrap_or_else(|| default_tau(size, s1));
    let mut count = opts.count.clamp(1, size);
    loop {
        let block = (count + (count / 2).max(8)).min(size);
        if block == size {
            return full(a);
        }
        let (tail, left, right, max_residual) = smallest_triplets(a, lu, count, block, s1, opts)?;
        let covered = tail.last().is_some_and(|&s| s >= cover);
        if covered || count >= opts.max_count.min(size) {
            let mut values = Vec::with_capacity(tail.len() + 1);
            values.push(s1.max(tail[tail.len() - 1]));
            values.extend(tail.iter().rev());
            return Ok(Spectrum {
                values,
                complete: false,
                tail,
                left,
                right,
                max_residual,
            });
        }
        count = (2 * count).min(opts.max_count).min(size);
    }
}

type Triplets = (Vec<f64>, Mat<f64>, Mat<f64>, f64);

/// Block inverse iteration `V ← orth(A⁻¹A⁻ᵀV)`. Once the Ritz values settle,
/// Rayleigh–Ritz through the thin SVD of `AV` yields the triplets, accepted
/// when `‖Aᵀu_i - σ_i v_i‖₂ ≤ residual_tolerance·σ₁`.
fn smallest_triplets(
    a: &Mat<f64>,
    lu: &PartialPivLu<f64>,
    count: usize,
    block: usize,
    s1: f64,
    opts: &SpectrumOptions,
) -> Result<Triplets> {
    let size = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = orthonormal(&random_block(size, block, &mut rng));
    let mut previous = vec![f64::INFINITY; count];
    let mut iteration = 0;
    loop {
        iteration += 1;
        let z = lu.solve(lu.solve_transpose(&v));
        if !all_finite(&z) {
            return Err(Error::Spectrum(
                "matrix is singular to working precision; use the full method".into(),
            ));
        }
        // Ritz values of (AᵀA)⁻¹ on span(V)
        let h = v.transpose() * &z;
        let h = Mat::from_fn(block, block, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let lambdas = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Spectrum(format!("eigenvalue iteration failed: {e:?}")))?;
        // ascending eigenvalues → ascending singular values from the top
        let sigmas: Vec<f64> = lambdas
            .iter()
            .rev()
            .take(count)
            .map(|&l| 1.0 / l.max(f64::MIN_POSITIVE).sqrt())
            .collect();
        v = orthonormal(&z);
        let settled = sigmas
            .iter()
            .zip(&previous)
            .all(|(s, p)| (s - p).abs() <= opts.tolerance * s.max(f64::MIN_POSITIVE));
        previous = sigmas;
        let exhausted = iteration >= opts.max_iterations;
        if !(settled || exhausted) {
            continue;
        }
        let (triplets, rotated) = rayleigh_ritz(a, &v, count)?;
        if triplets.3 <= opts.residual_tolerance * s1 || exhausted {
            return Ok(triplets);
        }
        v = rotated;
    }
}

fn rayleigh_ritz(a: &Mat<f64>, v: &Mat<f64>, count: usize) -> Result<(Triplets, Mat<f64>)> {
    let (size, block) = (v.nrows(), v.ncols());
    let av = a * v;
    let svd = av
        .thin_svd()
        .map_err(|e| Error::Spectrum(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let (u_small, w) = (svd.U(), svd.V());
    let rotated = v * w;
    let tail: Vec<f64> = (0..count).map(|i| s[block - 1 - i]).collect();
    let left = Mat::from_fn(size, count, |i, j| u_small[(i, block - 1 - j)]);
    let right = Mat::from_fn(size, count, |i, j| rotated[(i, block - 1 - j)]);
    let back = a.transpose() * &left;
    let mut max_residual = 0.0f64;
    for (j, &sigma) in tail.iter().enumerate() {
        let r = (0..size)
            .map(|i| (back[(i, j)] - sigma * right[(i, j)]).powi(2))
            .sum::<f64>()
            .sqrt();
        max_residual = max_residual.max(r);
    }
    Ok(((tail, left, right, max_residual), rotated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin, EXAMPLE13, LEVY_PASS};
    use crate::expr::parse;
    use crate::fredholm::assemble::assemble;
    use crate::grid::Grid;
    use crate::problem::{ProblemData, ProblemSpec};

    #[test]
    fn identity_has_unit_spectrum() {
        let p = ProblemSpec::new(ProblemData::with_speeds(1, vec![parse("1").unwrap()])).unwrap();
        let m = assemble(&p, Grid::new(5, 4).unwrap()).unwrap();
        let s = singular_spectrum(&m).unwrap();
        assert!(s.is_complete());
        assert_eq!(s.values().len(), 20);
        assert!(s.values().iter().all(|&v| (v - 1.0).abs() <= 1e-14));
    }

    #[test]
    fn invariant_under_node_permutation() {
        let p = builtin(LEVY_PASS).unwrap().spec;
        let m = assemble(&p, Grid::new(5, 8).unwrap()).unwrap();
        let a = m.matrix();
        let size = m.size();
        // reverse t-order within each (j, i) and swap components
        let grid = m.grid();
        let perm: Vec<usize> = (0..size)
            .map(|idx| {
                let (j, i, q) = grid.unflatten(2, idx).unwrap();
                grid.flatten(2, 1 - j, i, grid.nt() - 1 - q).unwrap()
            })
            .collect();
        let b = Mat::from_fn(size, size, |r, c| a[(perm[r], perm[c])]);
        let sa = full(a).unwrap();
        let sb = full(&b).unwrap();
        for (x, y) in sa.values().iter().zip(sb.values()) {
            assert!((x - y).abs() <= 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn partial_agrees_with_full() {
        for name in [EXAMPLE13, LEVY_PASS] {
            let p = builtin(name).unwrap().spec;
            let m = assemble(&p, Grid::new(13, 12).unwrap()).unwrap();
            let f = full(m.matrix()).unwrap();
            let opts = SpectrumOptions {
                method: SpectrumMethod::Partial,
                ..SpectrumOptions::default()
            };
            let s = singular_spectrum_with(&m, &opts, Some(0.0)).unwrap();
            assert!(!s.is_complete());
            assert!((s.sigma_max() - f.sigma_max()).abs() <= 1e-9 * f.sigma_max());
            for i in 0..s.resolved() {
                let (a, b) = (s.smallest(i), f.smallest(i));
                assert!(
                    (a - b).abs() <= 1e-9 * (1.0 + b),
                    "{name} σ[{i}]: {a} vs {b}"
                );
                // right vectors agree up to sign where the value is isolated
                let gap_lo = if i == 0 {
                    f64::INFINITY
                } else {
                    b - f.smallest(i - 1)
                };
                let gap_hi = f.smallest(i + 1) - b;
                if gap_lo.min(gap_hi) > 1e-3 {
                    let (x, y) = (s.right(i), f.right(i));
                    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
                    assert!(
                        (dot.abs() - 1.0).abs() <= 1e-8,
                        "{name} v[{i}] overlap {dot}"
                    );
                }
            }
            assert!(
                s.max_residual() <= opts.residual_tolerance * s.sigma_max(),
                "{name}: residual {}",
                s.max_residual()
            );
        }
    }

    #[test]
    fn partial_grows_block_to_cover_tolerance() {
        let p = builtin(EXAMPLE13).unwrap().spec;
        let m = assemble(&p, Grid::new(13, 12).unwrap()).unwrap();
        let f = full(m.matrix()).unwrap();
        let tau = f.smallest(10) * 1.0001;
        let opts = SpectrumOptions {
            method: SpectrumMethod::Partial,
            count: 2,
            ..SpectrumOptions::default()
        };
        let s = singular_spectrum_with(&m, &opts, Some(tau)).unwrap();
        assert!(s.covers(tau));
        assert_eq!(s.count_below(tau).unwrap(), f.count_below(tau).unwrap());
    }

    #[test]
    fn default_tau_scales_with_size_and_norm() {
        assert_eq!(default_tau(10, 2.0), 2000.0 * f64::EPSILON);
    }
}

use serde::Serialize;

use crate::error::Result;
use crate::grid::Grid;
use crate::problem::ProblemSpec;

/// States the scope of the check in every report.
pub const LEVY_BANNER: &str =
    "necessary-condition screen: bounds |b_jk / (a_k - a_j)| on grid nodes; \
a pass does not prove that a continuous quotient b~_jk exists";

pub const DEFAULT_LEVY_TOL: f64 = 1e-8;

/// Default gap threshold `δ = 1e-6·max|a|` over the grid nodes.
pub fn default_levy_delta(p: &ProblemSpec, grid: Grid) -> Result<f64> {
    let mut amax = 0.0f64;
    for j in 0..p.n() {
        for i in 0..grid.nx() {
            for q in 0..grid.nt() {
                amax = amax.max(p.a(j).eval(grid.x(i), grid.t(q))?.abs());
            }
        }
    }
    Ok(1e-6 * amax)
}

/// Screen result for one ordered pair `(j, k)`, `j ≠ k`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyPair {
    pub j: usize,
    pub k: usize,
    pub pass: bool,
    /// `max |b_jk| / |a_k - a_j|` over nodes with `|a_k - a_j| ≥ δ`.
    pub bound: f64,
    /// Node `(x, t)` of the largest excess when the pair fails.
    pub witness: Option<(f64, f64)>,
    /// Largest `|b_jk| - (M + 1)|a_k - a_j| - tol` over the nodes.
    pub worst_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevyReport {
    pub banner: &'static str,
    pub delta: f64,
    pub tol: f64,
    pub pass: bool,
    pub pairs: Vec<LevyPair>,
}

impl LevyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Screens `b_jk = b̃_jk (a_k - a_j)` on the grid nodes: a pair passes iff
/// `|b_jk| ≤ (M + 1)|a_k - a_j| + tol` at every node.
pub fn check_levy(
    p: &ProblemSpec,
    grid: Grid,
    delta: Option<f64>,
    tol: Option<f64>,
) -> Result<LevyReport> {
    let delta = match delta {
        Some(d) => d,
        None => default_levy_delta(p, grid)?,
    };
    let tol = tol.unwrap_or(DEFAULT_LEVY_TOL);
    let n = p.n();
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let mut nodes = Vec::with_capacity(grid.nx() * grid.nt());
            for i in 0..grid.nx() {
                for q in 0..grid.nt() {
                    let (x, t) = (grid.x(i), grid.t(q));
                    let gap = (p.a(k).eval(x, t)? - p.a(j).eval(x, t)?).abs();
                    let b = p.b(j, k).eval(x, t)?.abs();
                    nodes.push((x, t, gap, b));
                }
            }
            let bound = nodes
                .iter()
                .filter(|n| n.2 >= delta)
                .fold(0.0f64, |m, n| m.max(n.3 / n.2));
            let mut worst_excess = f64::NEG_INFINITY;
            let mut worst_at = (0.0, 0.0);
            for &(x, t, gap, b) in &nodes {
                let excess = b - (bound + 1.0) * gap - tol;
                if excess > worst_excess {
                    worst_excess = excess;
                    worst_at = (x, t);
                }
            }
            let pass = worst_excess <= 0.0;
            pairs.push(LevyPair {
                j: j + 1,
                k: k + 1,
                pass,
                bound,
                witness: (!pass).then_some(worst_at),
                worst_excess,
            });
        }
    }
    Ok(LevyReport {
        banner: LEVY_BANNER,
        delta,
        tol,
        pass: pairs.iter().all(|p| p.pass),
        pairs,
    })
}

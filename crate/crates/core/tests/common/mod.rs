#![allow(dead_code)]

use hyperbolic_fredholm::{Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Expressions that are smooth on `[0.05, 0.95] x [0, 2π]`.
pub const CORPUS: [&str; 50] = [
    "2/pi",
    "x",
    "t",
    "1+2*3",
    "-x^2",
    "x^2 + t^2",
    "sin(t - (pi/2)*x)",
    "cos(x*t)",
    "t*exp(x*t)",
    "exp(-x)*sin(t)",
    "log(2 + sin(x + t))",
    "sqrt(1 + x^2)",
    "1/(2 + cos(t))",
    "tan(0.5*x)",
    "x^t",
    "2^x",
    "x^3 - 2*x + 1",
    "(x - t)/(3 + t)",
    "sin(x)*cos(t) - cos(x)*sin(t)",
    "exp(sin(t))",
    "log(x)",
    "sqrt(x)*t",
    "x/(1 + x^2)",
    "-(-(x))",
    "2^3^0.5",
    "(1 + x)^(-2)",
    "sin(sin(sin(x + t)))",
    "cos(2*pi*x)*exp(-t/5)",
    "e^x",
    "x*e - t/e",
    "abs(t - 10) * x",
    "1.5e-1*x + 2.5E1*t",
    "0.5*sin(3*t) + 0.25*cos(5*x)",
    "(x + 1)*(x + 2)*(x + 3)",
    "exp(x)/(1 + exp(x))",
    "log(1 + x*x + t*t)",
    "sqrt(2 + sin(t))^3",
    "tan(t/10)",
    "x^(1/3)",
    "(2 + sin(x + t))^(-1)",
    "-x*t + x^2*t^2/2",
    "sin(t)^2 + cos(t)^2",
    "exp(-(x - 0.5)^2)",
    "1 - 2*x*sin(t)",
    "(x - 0.5)*(t - pi)",
    "4*x*(1 - x)*cos(t)",
    "sin((pi/2)*x)*sin(3*(t - (pi/2)*x))",
    "cos((pi/2)*x)*sin(2*(t - (pi/2)*x))",
    "log(3 + cos(x))*sqrt(4 + sin(t))",
    "x^2^-1",
];

/// Deterministic random grid function with entries in `[-1, 1]`.
pub fn random_grid_function(n: usize, grid: Grid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.size(n))
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    GridFunction::from_values(n, grid, values).unwrap()
}

pub fn grids(list: &[(usize, usize)]) -> Vec<Grid> {
    list.iter()
        .map(|&(nx, nt)| Grid::new(nx, nt).unwrap())
        .collect()
}

/// Observed orders `log₂(e_k / e_{k+1})` for step halving.
pub fn orders(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

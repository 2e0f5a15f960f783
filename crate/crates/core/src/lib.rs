//! Time-periodic solutions of first-order integro-differential hyperbolic
//! systems with integral boundary conditions, computed through the integral
//! form obtained by integrating along characteristic curves.
//!
//! The crate assembles the discrete operator `I - K` on a periodic
//! space–time grid and reports which branch of the Fredholm alternative the
//! discrete problem falls into: a unique solution for the given forcing, or a
//! numerical kernel together with the solvability defect of the forcing.

pub mod builtins;
pub mod characteristics;
pub mod error;
pub mod expr;
pub mod fredholm;
pub mod grid;
pub mod operators;
pub mod problem;

pub use builtins::{builtin, Builtin};
pub use characteristics::{CharacteristicCurve, CurveCache, CurveSample, TraceOptions};
pub use error::{Error, Result};
pub use expr::{parse, Expr, Var};
pub use fredholm::{
    assemble, check_levy, convergence_study, residual, singular_spectrum, solve_alternative,
    Branch, ConvergenceRow, FredholmReport, LevyPair, LevyReport, OperatorMatrix, SolveOptions,
    Spectrum, SpectrumMethod,
};
pub use grid::{Grid, GridFunction, TimeInterpolation};
pub use operators::{Operators, Stencil, Terms};
pub use problem::{Coefficient, ProblemData, ProblemFile, ProblemSpec, Side};

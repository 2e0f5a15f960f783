//! The discrete operator `I - K`, its singular spectrum, the Fredholm
//! alternative as a report, residuals, the Levy screen and convergence studies.

mod alternative;
mod assemble;
mod convergence;
mod levy;
mod spectrum;

pub use alternative::{
    resolve, solve_alternative, solve_alternative_with, Branch, FredholmReport, SolveOptions,
    Timings,
};
pub use assemble::{assemble, assemble_with, AssemblyOptions, OperatorMatrix, DEFAULT_DENSE_LIMIT};
pub use convergence::{
    check_refining, convergence_study, convergence_study_with, residual, residual_study,
    residual_study_with, residual_with, ConvergenceRow, Metric, ROUNDING_LEVEL,
};
pub use levy::{
    check_levy, default_levy_delta, LevyPair, LevyReport, DEFAULT_LEVY_TOL, LEVY_BANNER,
};
pub use spectrum::{
    default_tau, singular_spectrum, singular_spectrum_with, Spectrum, SpectrumMethod,
    SpectrumOptions, FULL_SVD_LIMIT,
};

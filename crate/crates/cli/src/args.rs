use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "hypfred",
    version,
    about = "Time-periodic hyperbolic integro-differential systems: solve, spectrum, kernel and diagnostics"
)]
pub struct Cli {
    /// Worker threads for assembly and dense linear algebra (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Resolve the discrete alternative; writes report.json and solution.csv.
    /// Exit code 0 on the unique branch, 2 on the resonant branch.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the kernel and cokernel bases as CSV files.
        #[arg(long)]
        dump_kernel: bool,
    },
    /// Singular values of I - K; writes spectrum.json and spectrum.csv.
    Spectrum {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        spectrum: SpectrumArgs,
    },
    /// Numerical kernel and cokernel bases; writes kernel.json and one CSV per vector.
    Kernel {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Screen the coupling condition b_jk = b~_jk (a_k - a_j); writes levy.json.
    CheckLevy {
        #[command(flatten)]
        run: RunArgs,
        /// Gap threshold δ (default 1e-6·max|a|).
        #[arg(long)]
        delta: Option<f64>,
        /// Absolute tolerance (default 1e-8).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Refinement study: error against an exact solution, otherwise σ_min(I - K);
    /// writes converge.json and converge.csv.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Residual max|u - Ku - Ff| of a candidate solution across grids;
    /// writes residual.json and residual.csv.
    Residual {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Apply selected operators to sampled expressions; writes apply.csv.
    Apply {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated expressions, one per component.
        #[arg(long, value_delimiter = ',', required = true)]
        exact: Vec<String>,
        /// Operators to include, from the letters `r`, `b`, `g`, `h`.
        #[arg(long, default_value = "rbgh")]
        terms: String,
    },
    /// Trace one characteristic curve; writes curve.csv with columns ξ, ω, c, d.
    Trace {
        #[command(flatten)]
        run: RunArgs,
        /// Component, 1-based.
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        t: f64,
        /// End of the curve in space (default: the component's boundary).
        #[arg(long)]
        xi: Option<f64>,
    },
    /// List the built-in problems.
    ListBuiltins,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Problem file (JSON).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Built-in problem name (see `list-builtins`).
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    /// Spatial nodes, including both ends.
    #[arg(long, default_value_t = 33)]
    pub nx: usize,
    /// Time nodes over one period.
    #[arg(long, default_value_t = 32)]
    pub nt: usize,
    /// Kernel tolerance τ (default 100·N·ε·σ₁).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    Auto,
    Full,
    Partial,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    /// Smallest singular values to resolve with the partial method.
    #[arg(long, default_value_t = 8)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// Comma-separated expressions, one per component (default: the built-in's exact solution).
    #[arg(long, value_delimiter = ',')]
    pub exact: Vec<String>,
    /// Comma-separated grids `NXxNT`, each refining the previous (default: the `--nx`/`--nt` grid alone
    /// for `residual`, 17x16,33x32,65x64 for `converge`).
    #[arg(long, value_delimiter = ',')]
    pub grids: Vec<String>,
}

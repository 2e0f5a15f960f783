use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hyperbolic_fredholm::builtins::{self, Builtin};
use hyperbolic_fredholm::characteristics::trace;
use hyperbolic_fredholm::fredholm::{
    check_levy, convergence_study, default_tau, residual_study, singular_spectrum_with,
    solve_alternative, ConvergenceRow, SpectrumOptions,
};
use hyperbolic_fredholm::{
    assemble, parse, Expr, FredholmReport, Grid, GridFunction, Operators, ProblemFile, ProblemSpec,
    SpectrumMethod, Terms, TraceOptions,
};
use serde_json::json;

use crate::args::{Cli, Command, Method, RunArgs, SpectrumArgs, StudyArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_RESONANT: u8 = 2;

const DEFAULT_STUDY_GRIDS: [(usize, usize); 3] = [(17, 16), (33, 32), (65, 64)];

pub fn run(cli: Cli) -> Result<u8> {
    if let Some(threads) = cli.threads {
        set_threads(threads)?;
    }
    match cli.command {
        Command::Solve { run, dump_kernel } => solve(&run, dump_kernel),
        Command::Spectrum { run, spectrum } => spectrum_cmd(&run, &spectrum),
        Command::Kernel { run } => kernel(&run),
        Command::CheckLevy { run, delta, tol } => levy(&run, delta, tol),
        Command::Converge { run, study } => converge(&run, &study),
        Command::Residual { run, study } => residual(&run, &study),
        Command::Apply { run, exact, terms } => apply(&run, &exact, &terms),
        Command::Trace {
            run,
            component,
            x,
            t,
            xi,
        } => trace_cmd(&run, component, x, t, xi),
        Command::ListBuiltins => {
            for (name, summary) in builtins::list() {
                println!("{name:<24} {summary}");
            }
            Ok(EXIT_OK)
        }
    }
}

fn set_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    faer::set_global_parallelism(if threads == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(threads)
    });
    Ok(())
}

/// The problem named by `--problem` or `--builtin`, with the built-in's exact
/// solution when there is one.
struct Loaded {
    spec: ProblemSpec,
    exact: Option<Vec<Expr>>,
}

fn load(run: &RunArgs) -> Result<Loaded> {
    match (&run.source.problem, &run.source.builtin) {
        (Some(path), None) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec = ProblemFile::from_json(&text)
                .and_then(|f| f.to_spec())
                .with_context(|| format!("loading {}", path.display()))?;
            Ok(Loaded { spec, exact: None })
        }
        (None, Some(name)) => {
            let Builtin { spec, exact, .. } = builtins::builtin(name)?;
            Ok(Loaded { spec, exact })
        }
        _ => bail!("exactly one of --problem and --builtin is required"),
    }
}

fn grid(run: &RunArgs) -> Result<Grid> {
    Ok(Grid::new(run.nx, run.nt)?)
}

fn check_tau(tau: Option<f64>) -> Result<()> {
    match tau {
        Some(t) if !(t > 0.0 && t.is_finite()) => bail!("--tau must be positive, got {t}"),
        _ => Ok(()),
    }
}

fn out_dir(run: &RunArgs) -> Result<&Path> {
    fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    Ok(&run.out)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn write_grid_function(dir: &Path, name: &str, u: &GridFunction) -> Result<()> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut w = BufWriter::new(file);
    u.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_bases(dir: &Path, report: &FredholmReport) -> Result<()> {
    for (i, v) in report.kernel.iter().enumerate() {
        write_grid_function(dir, &format!("kernel_{}.csv", i + 1), v)?;
    }
    for (i, w) in report.cokernel.iter().enumerate() {
        write_grid_function(dir, &format!("cokernel_{}.csv", i + 1), w)?;
    }
    Ok(())
}

fn summarize(report: &FredholmReport) {
    println!(
        "{}x{} grid, N = {}: σ_max = {:.6e}, σ_min = {:.6e}, τ = {:.3e}{}",
        report.nx,
        report.nt,
        report.size,
        report.sigma_max,
        report.sigma_min,
        report.tau,
        if report.tau_is_default {
            " (default)"
        } else {
            ""
        }
    );
    match report.defect {
        None => println!(
            "unique branch: residual {:.3e}, max|u| {:.6e}",
            report.residual, report.solution_norm
        ),
        Some(defect) => println!(
            "resonant branch: kernel_dim {}, defect {:.3e}, kernel residual {:.3e}",
            report.kernel_dim,
            defect,
            report.kernel_residual.unwrap_or(0.0)
        ),
    }
}

fn solve(run: &RunArgs, dump_kernel: bool) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    check_tau(run.tau)?;
    let dir = out_dir(run)?;
    let report = solve_alternative(&loaded.spec, grid, run.tau)?;
    let mut text = report.to_json();
    text.push('\n');
    write_text(dir, "report.json", &text)?;
    write_grid_function(dir, "solution.csv", &report.solution)?;
    if dump_kernel {
        write_bases(dir, &report)?;
    }
    summarize(&report);
    Ok(if report.kernel_dim > 0 {
        EXIT_RESONANT
    } else {
        EXIT_OK
    })
}

fn spectrum_cmd(run: &RunArgs, args: &SpectrumArgs) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    check_tau(run.tau)?;
    let dir = out_dir(run)?;
    let m = assemble(&loaded.spec, grid)?;
    let method = match args.method {
        Method::Auto => SpectrumMethod::Auto,
        Method::Full => SpectrumMethod::Full,
        Method::Partial => SpectrumMethod::Partial,
    };
    let opts = SpectrumOptions {
        method,
        count: args.count.max(1),
        ..SpectrumOptions::default()
    };
    let s = singular_spectrum_with(&m, &opts, run.tau)?;
    let tau = run
        .tau
        .unwrap_or_else(|| default_tau(m.size(), s.sigma_max()));
    let below = s.count_below(tau)?;
    write_json(
        dir,
        "spectrum.json",
        &json!({
            "nx": grid.nx(),
            "nt": grid.nt(),
            "size": m.size(),
            "complete_spectrum": s.is_complete(),
            "sigma_max": s.sigma_max(),
            "sigma_min": s.sigma_min(),
            "tau": tau,
            "count_below_tau": below,
            "max_residual": s.max_residual(),
            "singular_values": s.values(),
        }),
    )?;
    let mut csv = String::from("index,sigma\n");
    for (i, v) in s.values().iter().enumerate() {
        csv.push_str(&format!("{},{:?}\n", i + 1, v));
    }
    write_text(dir, "spectrum.csv", &csv)?;
    println!(
        "σ_max = {:.6e}, σ_min = {:.6e}, {} below τ = {:.3e} ({} values{})",
        s.sigma_max(),
        s.sigma_min(),
        below,
        tau,
        s.values().len(),
        if s.is_complete() { "" } else { ", partial" }
    );
    Ok(EXIT_OK)
}

fn kernel(run: &RunArgs) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    check_tau(run.tau)?;
    let dir = out_dir(run)?;
    let report = solve_alternative(&loaded.spec, grid, run.tau)?;
    write_json(
        dir,
        "kernel.json",
        &json!({
            "nx": report.nx,
            "nt": report.nt,
            "size": report.size,
            "tau": report.tau,
            "kernel_dim": report.kernel_dim,
            "kernel_singular_values": report.singular_values.iter().rev().take(report.kernel_dim).collect::<Vec<_>>(),
            "kernel_residual": report.kernel_residual,
            "cokernel_residual": report.cokernel_residual,
            "defect": report.defect,
        }),
    )?;
    write_bases(dir, &report)?;
    println!("kernel_dim {} at τ = {:.3e}", report.kernel_dim, report.tau);
    Ok(EXIT_OK)
}

fn levy(run: &RunArgs, delta: Option<f64>, tol: Option<f64>) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    let dir = out_dir(run)?;
    let report = check_levy(&loaded.spec, grid, delta, tol)?;
    let mut text = report.to_json();
    text.push('\n');
    write_text(dir, "levy.json", &text)?;
    println!("{}", report.banner);
    for p in &report.pairs {
        match p.witness {
            None => println!("pair ({},{}): PASS bound {:.6e}", p.j, p.k, p.bound),
            Some((x, t)) => println!(
                "pair ({},{}): FAIL bound {:.6e}, excess {:.3e} at x = {x}, t = {t}",
                p.j, p.k, p.bound, p.worst_excess
            ),
        }
    }
    Ok(EXIT_OK)
}

fn parse_exprs(sources: &[String], n: usize) -> Result<Vec<Expr>> {
    if sources.len() != n {
        bail!("--exact needs {n} expressions, got {}", sources.len());
    }
    sources
        .iter()
        .enumerate()
        .map(|(j, s)| parse(s).with_context(|| format!("--exact component {}", j + 1)))
        .collect()
}

fn parse_grids(list: &[String]) -> Result<Vec<Grid>> {
    list.iter()
        .map(|item| {
            let (nx, nt) = item
                .split_once(['x', 'X'])
                .with_context(|| format!("grid `{item}` is not of the form NXxNT"))?;
            let nx = nx
                .trim()
                .parse()
                .with_context(|| format!("grid `{item}`: bad Nx"))?;
            let nt = nt
                .trim()
                .parse()
                .with_context(|| format!("grid `{item}`: bad Nt"))?;
            Ok(Grid::new(nx, nt)?)
        })
        .collect()
}

fn study_exact(loaded: &Loaded, study: &StudyArgs) -> Result<Option<Vec<Expr>>> {
    if study.exact.is_empty() {
        Ok(loaded.exact.clone())
    } else {
        parse_exprs(&study.exact, loaded.spec.n()).map(Some)
    }
}

fn write_rows(dir: &Path, stem: &str, rows: &[ConvergenceRow]) -> Result<()> {
    write_json(dir, &format!("{stem}.json"), &json!({ "rows": rows }))?;
    let mut csv = String::from("nx,nt,metric,value,order,exact\n");
    for r in rows {
        let metric = serde_json::to_value(r.metric)?;
        let order = r.order.map(|o| format!("{o:?}")).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{:?},{},{}\n",
            r.nx,
            r.nt,
            metric.as_str().unwrap_or_default(),
            r.value,
            order,
            r.exact
        ));
    }
    write_text(dir, &format!("{stem}.csv"), &csv)?;
    for r in rows {
        let order = match (r.order, r.exact) {
            (_, true) => "exact".to_string(),
            (Some(o), _) => format!("{o:.2}"),
            (None, _) => "-".to_string(),
        };
        println!(
            "{:>4} x {:<4} {:>14.6e}  order {order}",
            r.nx, r.nt, r.value
        );
    }
    Ok(())
}

fn converge(run: &RunArgs, study: &StudyArgs) -> Result<u8> {
    let loaded = load(run)?;
    let exact = study_exact(&loaded, study)?;
    let grids = if study.grids.is_empty() {
        DEFAULT_STUDY_GRIDS
            .iter()
            .map(|&(nx, nt)| Grid::new(nx, nt))
            .collect::<Result<_, _>>()?
    } else {
        parse_grids(&study.grids)?
    };
    let dir = out_dir(run)?;
    let rows = convergence_study(&loaded.spec, exact.as_deref(), &grids)?;
    write_rows(dir, "converge", &rows)?;
    Ok(EXIT_OK)
}

fn residual(run: &RunArgs, study: &StudyArgs) -> Result<u8> {
    let loaded = load(run)?;
    let Some(candidate) = study_exact(&loaded, study)? else {
        bail!("residual needs --exact (this problem has no built-in exact solution)");
    };
    let grids = if study.grids.is_empty() {
        vec![grid(run)?]
    } else {
        parse_grids(&study.grids)?
    };
    let dir = out_dir(run)?;
    let rows = residual_study(&loaded.spec, &candidate, &grids)?;
    write_rows(dir, "residual", &rows)?;
    Ok(EXIT_OK)
}

fn parse_terms(letters: &str) -> Result<Terms> {
    let mut terms = Terms {
        r: false,
        b: false,
        g: false,
        h: false,
    };
    for c in letters.chars() {
        match c.to_ascii_lowercase() {
            'r' => terms.r = true,
            'b' => terms.b = true,
            'g' => terms.g = true,
            'h' => terms.h = true,
            other => bail!("unknown operator `{other}` in --terms (use r, b, g, h)"),
        }
    }
    Ok(terms)
}

fn apply(run: &RunArgs, exact: &[String], letters: &str) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    let terms = parse_terms(letters)?;
    let u = GridFunction::sample_exprs(grid, &parse_exprs(exact, loaded.spec.n())?)?;
    let dir = out_dir(run)?;
    let ku = Operators::new(&loaded.spec, grid).apply_selected(terms, &u)?;
    write_grid_function(dir, "apply.csv", &ku)?;
    println!("max|u| {:.6e}, max|Ku| {:.6e}", u.sup_norm(), ku.sup_norm());
    Ok(EXIT_OK)
}

fn trace_cmd(run: &RunArgs, component: usize, x: f64, t: f64, xi: Option<f64>) -> Result<u8> {
    let loaded = load(run)?;
    let grid = grid(run)?;
    let n = loaded.spec.n();
    if component == 0 || component > n {
        bail!("--component must be in 1..={n}, got {component}");
    }
    let j = component - 1;
    let xi = xi.unwrap_or_else(|| loaded.spec.boundary(j));
    let dir = out_dir(run)?;
    let curve = trace(&loaded.spec, j, x, t, xi, TraceOptions::for_grid(&grid))?;
    let mut csv = String::from("xi,omega,c,d\n");
    for s in &curve.samples {
        csv.push_str(&format!("{:?},{:?},{:?},{:?}\n", s.xi, s.omega, s.c, s.d));
    }
    write_text(dir, "curve.csv", &csv)?;
    let end = curve.end();
    println!(
        "ω = {:.12}, c = {:.12}, d = {:.12} at ξ = {}",
        end.omega, end.c, end.d, end.xi
    );
    Ok(EXIT_OK)
}

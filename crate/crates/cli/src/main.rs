//! `spectra`: generate meshes, compute spectra and audit eigenvalue
//! inequalities from the command line.
//!
//! Exit status: 0 when every audited inequality holds, 2 when any fails,
//! 1 on errors.

mod inputs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spectra_core::audit::{self, AmbientCase, AuditRecord, AuditReport, ReportFormat};
use spectra_core::commutator::run_trials;
use spectra_core::curvature::curvature_data;
use spectra_core::dec::{dirichlet_laplacian, hodge_laplacian, EigenproblemPair};
use spectra_core::eigensolve::{smallest_eigenpairs_with, SolverOptions, SpectrumResult, DEFAULT_SEED, DEFAULT_TOL};
use spectra_core::heisenberg::{audit_kohn, kohn_problem, HeisenbergGrid};
use spectra_core::mesh::{generate, write_mesh, TriangleMesh};

use inputs::{read_potential, resolve_mesh, shape_from_params, thread_cap, CliError, ShapeKind};

#[derive(Debug, Parser)]
#[command(name = "spectra", version, about = "Discrete spectra and eigenvalue-inequality audits")]
struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for the eigensolver start blocks and random trials.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Relative residual tolerance of the eigensolver.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
    /// Lowest eigenpairs of the Hodge or Dirichlet Laplacian of a mesh.
    Spectrum(SpectrumArgs),
    /// Run an inequality catalog on a mesh.
    Audit(AuditArgs),
    /// Kohn sublaplacian on a Heisenberg box and its eigenvalue audit.
    Heisenberg(HeisenbergArgs),
    /// Random verification of the commutator identity.
    LemmaCheck(LemmaArgs),
}

#[derive(Debug, Subcommand)]
enum MeshAction {
    /// Generate a fixture mesh and write it as OFF.
    Gen {
        #[arg(long, value_enum)]
        shape: ShapeKind,
        /// Shape parameters as `key=value`, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        params: Vec<String>,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "mesh.off")]
        name: String,
    },
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// OFF file or fixture name (icosphere4, torus64, square64, cap4).
    #[arg(long)]
    mesh: String,
    /// Form degree (closed meshes).
    #[arg(long, default_value_t = 0)]
    p: u8,
    #[arg(short = 'k', default_value_t = 10)]
    k: usize,
    /// Dirichlet problem for Δ + q on a mesh with boundary.
    #[arg(long)]
    dirichlet: bool,
    /// Potential as CSV rows `vertex,value`.
    #[arg(long, requires = "dirichlet")]
    q: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Closed,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ambient {
    Euclidean,
    Sphere,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    mesh: String,
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 20)]
    j_max: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    ambient: Ambient,
    #[arg(long)]
    q: Option<PathBuf>,
    /// Coarser mesh for the discretization allowance (fixtures pick their own).
    #[arg(long)]
    coarse: Option<String>,
}

#[derive(Debug, Args)]
struct HeisenbergArgs {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Half extents `A T` of the box `[−A,A]^{2n} × [−T,T]`.
    #[arg(long = "box", num_args = 2, value_names = ["A", "T"], default_values_t = [1.0, 1.0])]
    extents: Vec<f64>,
    /// Interior nodes per axis.
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(short = 'k', default_value_t = 12)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    j_max: usize,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 2)]
    dim_min: usize,
    #[arg(long, default_value_t = 50)]
    dim_max: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Constructed-degeneracy cases (default: a tenth of the trials).
    #[arg(long)]
    degenerate: Option<usize>,
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if !(cli.tol > 0.0 && cli.tol < 1.0) {
        return Err(CliError::Config(format!("--tol must lie in (0, 1), got {}", cli.tol)));
    }
    let threads = thread_cap()?;
    let options = SolverOptions { tol: cli.tol, seed: cli.seed, ..SolverOptions::default() };
    let ctx = Context { out: &cli.out, options, threads };
    match &cli.command {
        Command::Mesh { action: MeshAction::Gen { shape, params, name } } => {
            let shape = shape_from_params(*shape, params)?;
            let mesh = generate(&shape)?;
            ctx.prepare()?;
            write_mesh(&mesh, cli.out.join(name))?;
            Ok(Outcome::Pass)
        }
        Command::Spectrum(args) => spectrum(&ctx, args),
        Command::Audit(args) => match args.suite {
            Suite::Closed => audit_closed(&ctx, args),
            Suite::Dirichlet => audit_dirichlet(&ctx, args),
        },
        Command::Heisenberg(args) => heisenberg(&ctx, args),
        Command::LemmaCheck(args) => lemma_check(&ctx, args, cli.seed),
    }
}

struct Context<'a> {
    out: &'a Path,
    options: SolverOptions,
    threads: usize,
}

impl Context<'_> {
    fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(self.out)?;
        Ok(())
    }

    fn write(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.out.join(name), text)?;
        Ok(())
    }

    fn emit(&self, stem: &str, report: &AuditReport) -> Result<Outcome, CliError> {
        audit::emit_report(report, ReportFormat::Json, self.out.join(format!("{stem}.json")))?;
        audit::emit_report(report, ReportFormat::Csv, self.out.join(format!("{stem}.csv")))?;
        let failed: Vec<&AuditRecord> = report.records.iter().filter(|r| !r.pass).collect();
        for r in &failed {
            eprintln!("FAIL {} p={} j={}: lhs {:e} > rhs {:e}", r.ineq, r.p, r.j, r.lhs, r.rhs);
        }
        Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::Fail })
    }

    /// Solves every problem, at most `threads` at a time; results keep the
    /// input order.
    fn solve_all(&self, problems: &[EigenproblemPair], k: usize) -> Result<Vec<SpectrumResult>, CliError> {
        let mut results = Vec::with_capacity(problems.len());
        for chunk in problems.chunks(self.threads) {
            let solved: Vec<_> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|p| s.spawn(move || smallest_eigenpairs_with(p, k.min(p.dim()), &self.options)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
            });
            for r in solved {
                results.push(r?);
            }
        }
        Ok(results)
    }
}

fn dirichlet_problem(mesh: &TriangleMesh, q: Option<&Path>) -> Result<(EigenproblemPair, Vec<f64>), CliError> {
    let potential = match q {
        Some(path) => read_potential(path, mesh.vertex_count())?,
        None => vec![0.0; mesh.vertex_count()],
    };
    Ok((dirichlet_laplacian(mesh, &potential)?, potential))
}

fn spectrum(ctx: &Context, args: &SpectrumArgs) -> Result<Outcome, CliError> {
    let resolved = resolve_mesh(&args.mesh)?;
    if args.k == 0 {
        return Err(CliError::Config("-k must be positive".into()));
    }
    let problem = if args.dirichlet {
        dirichlet_problem(&resolved.mesh, args.q.as_deref())?.0
    } else {
        hodge_laplacian(&resolved.mesh, args.p)?
    };
    ctx.prepare()?;
    let result = ctx.solve_all(std::slice::from_ref(&problem), args.k)?.remove(0);
    ctx.write("spectrum.json", &(result.to_json() + "\n"))?;
    Ok(Outcome::Pass)
}

fn closed_spectra(ctx: &Context, mesh: &TriangleMesh, k: usize) -> Result<Vec<SpectrumResult>, CliError> {
    let problems = (0..=2u8).map(|p| hodge_laplacian(mesh, p)).collect::<Result<Vec<_>, _>>()?;
    ctx.solve_all(&problems, k)
}

fn audit_closed(ctx: &Context, args: &AuditArgs) -> Result<Outcome, CliError> {
    let resolved = resolve_mesh(&args.mesh)?;
    let mesh = &resolved.mesh;
    if !mesh.is_closed() {
        return Err(CliError::Config("closed suite needs a mesh without boundary".into()));
    }
    let k = args.j_max + 2;
    let spectra = closed_spectra(ctx, mesh, k)?;
    let coarse = match &args.coarse {
        Some(name) => Some(resolve_mesh(name)?.mesh),
        None => resolved.coarse.map(|s| generate(&s)).transpose()?,
    };
    let allowance = match coarse {
        Some(c) => {
            let coarse_spectra = closed_spectra(ctx, &c, k)?;
            coarse_spectra
                .iter()
                .zip(&spectra)
                .map(|(a, b)| audit::richardson_allowance(&a.clamped_eigenvalues(), &b.clamped_eigenvalues()))
                .fold(0.0, f64::max)
        }
        None => 0.0,
    };
    let curv = curvature_data(mesh)?;
    let records = audit::audit_closed(mesh, &spectra, &curv, args.j_max, allowance)?;
    ctx.prepare()?;
    for s in &spectra {
        ctx.write(&format!("spectrum_p{}.json", s.degree), &(s.to_json() + "\n"))?;
    }
    ctx.emit("audit", &AuditReport::new(resolved.name, resolved.refinement, records))
}

fn audit_dirichlet(ctx: &Context, args: &AuditArgs) -> Result<Outcome, CliError> {
    let resolved = resolve_mesh(&args.mesh)?;
    let mesh = &resolved.mesh;
    let k = args.j_max + 2;
    let (problem, potential) = dirichlet_problem(mesh, args.q.as_deref())?;
    let coarse = match &args.coarse {
        Some(name) => Some(resolve_mesh(name)?.mesh),
        None => resolved.coarse.map(|s| generate(&s)).transpose()?,
    };
    let mut problems = vec![problem];
    if let Some(c) = &coarse {
        // the potential file indexes the fine mesh; the coarse run uses q = 0
        problems.push(dirichlet_problem(c, None)?.0);
    }
    let spectra = ctx.solve_all(&problems, k)?;
    let allowance = match (&coarse, args.q.is_none()) {
        (Some(_), true) => audit::richardson_allowance(&spectra[1].eigenvalues, &spectra[0].eigenvalues),
        _ => 0.0,
    };
    let ambient = match args.ambient {
        Ambient::Euclidean => AmbientCase::Euclidean,
        Ambient::Sphere => AmbientCase::Sphere,
    };
    let curv = curvature_data(mesh)?;
    let records = audit::audit_dirichlet(
        mesh,
        &spectra[0],
        &problems[0].interior_index_map,
        &curv,
        &potential,
        ambient,
        args.j_max,
        allowance,
    )?;
    ctx.prepare()?;
    ctx.write("spectrum.json", &(spectra[0].to_json() + "\n"))?;
    ctx.emit("audit", &AuditReport::new(resolved.name, resolved.refinement, records))
}

fn heisenberg(ctx: &Context, args: &HeisenbergArgs) -> Result<Outcome, CliError> {
    let grid = HeisenbergGrid::new(args.n, args.extents[0], args.extents[1], args.grid)?;
    if args.k < args.j_max + args.n {
        return Err(CliError::Config(format!("-k must be at least j_max + n = {}", args.j_max + args.n)));
    }
    let problem = kohn_problem(&grid)?;
    let spectrum = ctx.solve_all(std::slice::from_ref(&problem), args.k)?.remove(0);
    let records = audit_kohn(&spectrum, args.n, args.j_max)?;
    ctx.prepare()?;
    ctx.write("kohn_spectrum.json", &(spectrum.to_json() + "\n"))?;
    ctx.emit("kohn", &AuditReport::new(format!("heisenberg-n{}", args.n), args.grid, records))
}

fn lemma_check(ctx: &Context, args: &LemmaArgs, seed: u64) -> Result<Outcome, CliError> {
    if args.dim_min < 2 || args.dim_min > args.dim_max {
        return Err(CliError::Config(format!(
            "dimension range {}..={} must start at 2 or more",
            args.dim_min, args.dim_max
        )));
    }
    let degenerate = args.degenerate.unwrap_or(args.trials / 10);
    let summary = run_trials(args.dim_min..=args.dim_max, args.trials, degenerate, seed)?;
    let max_residual = summary.random.iter().map(|t| t.max_residual).fold(0.0, f64::max);
    let pass = summary.worst_identity_ratio <= 1e-9
        && summary.worst_degenerate_identity_ratio <= 1e-9
        && summary.worst_coupling_ratio <= 1e-10;
    let report = json!({
        "seed": seed,
        "dim_min": args.dim_min,
        "dim_max": args.dim_max,
        "trials": args.trials,
        "degenerate_cases": summary.degenerate_cases,
        "max_residual": max_residual,
        "max_identity_ratio": summary.worst_identity_ratio,
        "max_degenerate_identity_ratio": summary.worst_degenerate_identity_ratio,
        "max_coupling_ratio": summary.worst_coupling_ratio,
        "pass": pass,
    });
    let lines: String = summary.random.iter().map(|t| t.to_json_line() + "\n").collect();
    ctx.prepare()?;
    ctx.write("lemma.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    ctx.write("lemma_trials.jsonl", &lines)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

//! Config-driven front end for the convergence studies: runs presets or
//! custom experiments and writes CSV reports plus a provenance record.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{parse_file, parse_levels, FileConfig, RunSettings};
use jumpfem::experiment::{
    draw_sample, estimate_rmse, solve_level, ConvergenceReport, LevelPlan, MeshBranch,
    PreparedProblem,
};
use jumpfem::fem::{evaluate_on_grid, SolverKind, StoreMode};
use jumpfem::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "jumpfem",
    version,
    about = "Monte Carlo convergence studies for advection-diffusion problems with random discontinuous coefficients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study and write report.csv, samples.csv and run.json
    Run(RunArgs),
    /// Resolve the configuration and print the level plan without solving
    Validate(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML config file (sections [run] and [problem])
    #[arg(long)]
    config: Option<PathBuf>,
    /// named preset: 1d_matern_gig, 1d_brownian_uniform, 2d_heterogeneous,
    /// 2d_checkerboard
    #[arg(long)]
    preset: Option<String>,
    /// Monte Carlo samples (default 100)
    #[arg(long)]
    samples: Option<u64>,
    /// base seed expanded into per-sample streams (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads, 0 = available parallelism
    #[arg(long)]
    threads: Option<usize>,
    /// level selection, e.g. "1..6" or "1,3,5"
    #[arg(long)]
    levels: Option<String>,
    /// output directory (default "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// resolve and print the plan, then exit without solving
    #[arg(long)]
    dry_run: bool,
    /// dump the sample-0 meshes per level
    #[arg(long)]
    dump_mesh: bool,
    /// dump sample-0 adapted trajectories on the lattice per level
    #[arg(long)]
    dump_trajectory: bool,
    /// linear solver: direct (default) or bicgstab
    #[arg(long)]
    solver: Option<String>,
}

/// validation failures exit with 2, runtime failures with 1
struct Failure {
    exit: u8,
    message: String,
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        exit: 2,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        exit: 1,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => {
            let dry = args.dry_run;
            resolve(&args).and_then(|settings| execute(settings, &args, dry))
        }
        Command::Validate(args) => {
            resolve(&args).and_then(|settings| execute(settings, &args, true))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.exit)
        }
    }
}

fn resolve(args: &RunArgs) -> Result<RunSettings, Failure> {
    let mut file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| validation(format!("config file `{}`: {e}", path.display())))?;
            parse_file(&text).map_err(|e| validation(e.to_string()))?
        }
        None => FileConfig::default(),
    };
    if let Some(preset) = &args.preset {
        file.problem.preset = Some(preset.clone());
    }
    if file.problem.preset.is_none() && args.config.is_none() {
        return Err(validation(
            "invalid configuration for field `problem.preset`: pass --preset or --config",
        ));
    }
    if let Some(levels) = &args.levels {
        file.problem.levels = Some(parse_levels(levels).map_err(|e| validation(e.to_string()))?);
    }
    let spec = file
        .problem
        .resolve()
        .map_err(|e| validation(e.to_string()))?;
    spec.validate().map_err(|e| validation(e.to_string()))?;

    let samples = args.samples.or(file.run.samples).unwrap_or(100);
    if samples < 2 {
        return Err(validation(
            "invalid configuration for field `run.samples`: need at least 2 samples",
        ));
    }
    let solver = match args.solver.as_deref() {
        None => file.run.solver.unwrap_or_default(),
        Some("direct") => SolverKind::Direct,
        Some("bicgstab") => SolverKind::Bicgstab,
        Some(other) => {
            return Err(validation(format!(
                "invalid configuration for field `run.solver`: unknown solver `{other}`"
            )))
        }
    };
    Ok(RunSettings {
        spec,
        samples,
        seed: args.seed.or(file.run.seed).unwrap_or(0),
        threads: args.threads.or(file.run.threads).unwrap_or(0),
        out: args
            .out
            .as_ref()
            .map(|p| p.display().to_string())
            .or(file.run.out.clone())
            .unwrap_or_else(|| "out".into()),
        solver,
    })
}

fn core_failure(e: CoreError) -> Failure {
    match e {
        CoreError::Config { .. } => validation(e.to_string()),
        other => runtime(other.to_string()),
    }
}

fn execute(settings: RunSettings, args: &RunArgs, dry_run: bool) -> Result<(), Failure> {
    let prepared = PreparedProblem::with_solver(settings.spec.clone(), settings.solver)
        .map_err(core_failure)?;
    print_plan(&prepared.spec.name, &prepared.plan);
    if dry_run {
        return Ok(());
    }

    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| runtime(format!("thread pool: {e}")))?;
    let report = pool
        .install(|| estimate_rmse(&prepared, settings.samples, settings.seed))
        .map_err(core_failure)?;
    let wall = started.elapsed().as_secs_f64();

    print_report(&report);

    let out = Path::new(&settings.out);
    fs::create_dir_all(out).map_err(|e| runtime(format!("output directory: {e}")))?;
    fs::write(out.join("report.csv"), report.to_csv())
        .map_err(|e| runtime(format!("report.csv: {e}")))?;
    fs::write(out.join("samples.csv"), report.per_sample_csv())
        .map_err(|e| runtime(format!("samples.csv: {e}")))?;
    let provenance = Provenance::new(&settings, &prepared.plan, &report, wall);
    let json =
        serde_json::to_string_pretty(&provenance).map_err(|e| runtime(format!("run.json: {e}")))?;
    fs::write(out.join("run.json"), json).map_err(|e| runtime(format!("run.json: {e}")))?;

    if args.dump_mesh {
        dump_meshes(&prepared, &settings, out).map_err(core_failure)?;
    }
    if args.dump_trajectory {
        dump_trajectories(&prepared, &settings, out).map_err(core_failure)?;
    }
    println!(
        "wrote {} ({} samples, {:.1} s)",
        out.display(),
        settings.samples,
        wall
    );
    Ok(())
}

fn print_plan(name: &str, plan: &LevelPlan) {
    println!("problem: {name}");
    println!("level      h_bar          N        eps            dt");
    for level in plan.levels.iter().chain(std::iter::once(&plan.reference)) {
        let tag = if level.index == plan.reference.index {
            "ref"
        } else {
            ""
        };
        println!(
            "{:>5} {:>12.6e} {:>8} {:>12.6e} {:>12.6e} {}",
            level.index, level.h_bar, level.cutoff, level.bias, level.dt, tag
        );
    }
}

fn print_report(report: &ConvergenceReport) {
    println!("level   rmse_adapted   rmse_nonadapted");
    for l in &report.levels {
        println!(
            "{:>5} {:>14.6e} {:>16.6e}",
            l.level, l.rmse_adapted, l.rmse_nonadapted
        );
    }
    println!(
        "kappa (adapted)     = {:.4}  [log prefactor {:.4}]",
        report.fit_adapted.kappa, report.fit_adapted.log_prefactor
    );
    println!(
        "kappa (non-adapted) = {:.4}  [log prefactor {:.4}]",
        report.fit_nonadapted.kappa, report.fit_nonadapted.log_prefactor
    );
}

#[derive(Serialize)]
struct Provenance<'a> {
    package: PackageInfo,
    seed_scheme: &'static str,
    samples: u64,
    base_seed: u64,
    threads: usize,
    solver: SolverKind,
    problem: &'a jumpfem::experiment::ProblemSpec,
    plan: &'a LevelPlan,
    fits: Fits<'a>,
    levels: &'a [jumpfem::experiment::LevelReport],
    wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct PackageInfo {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Fits<'a> {
    adapted: &'a jumpfem::experiment::RateFit,
    nonadapted: &'a jumpfem::experiment::RateFit,
}

impl<'a> Provenance<'a> {
    fn new(
        settings: &'a RunSettings,
        plan: &'a LevelPlan,
        report: &'a ConvergenceReport,
        wall: f64,
    ) -> Self {
        Provenance {
            package: PackageInfo {
                name: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
            },
            seed_scheme: "chacha8: key = seed_from_u64(base_seed); sample i reads stream i, \
                          drawing partition, jump heights, then normal coordinates",
            samples: settings.samples,
            base_seed: settings.seed,
            threads: settings.threads,
            solver: settings.solver,
            problem: &settings.spec,
            plan,
            fits: Fits {
                adapted: &report.fit_adapted,
                nonadapted: &report.fit_nonadapted,
            },
            levels: &report.levels,
            wall_clock_seconds: wall,
        }
    }
}

fn dump_meshes(
    prepared: &PreparedProblem,
    settings: &RunSettings,
    out: &Path,
) -> Result<(), CoreError> {
    let draw = draw_sample(prepared, settings.seed, 0)?;
    // partition coordinates and jump heights for reproducibility audits
    let mut text = String::new();
    let (x_cuts, y_cuts) = draw.partition.cuts();
    text.push_str(&format!("dim {}\n", draw.partition.dim()));
    text.push_str("x_cuts");
    for c in x_cuts {
        text.push_str(&format!(" {c:.16e}"));
    }
    text.push('\n');
    if !y_cuts.is_empty() {
        text.push_str("y_cuts");
        for c in y_cuts {
            text.push_str(&format!(" {c:.16e}"));
        }
        text.push('\n');
    }
    text.push_str("heights");
    for h in &draw.heights.values {
        text.push_str(&format!(" {h:.16e}"));
    }
    text.push('\n');
    text.push_str(&format!("bias_budget {:.16e}\n", draw.heights.bias_budget));
    text.push_str(&format!("cap {:.16e}\n", draw.heights.cap));
    fs::write(out.join("partition_sample0.txt"), text)?;
    for level in prepared
        .plan
        .levels
        .iter()
        .chain(std::iter::once(&prepared.plan.reference))
    {
        for (branch, tag) in [
            (MeshBranch::Adapted, "adapted"),
            (MeshBranch::Uniform, "uniform"),
        ] {
            let mesh = match branch {
                MeshBranch::Adapted => match prepared.spec.dim {
                    1 => jumpfem::mesh::adapted_mesh_1d(&draw.partition, level.h_bar)?,
                    _ => jumpfem::mesh::adapted_mesh_2d(&draw.partition, level.h_bar)?,
                },
                MeshBranch::Uniform => {
                    let mut m = jumpfem::mesh::uniform_mesh(prepared.spec.dim, level.h_bar)?;
                    jumpfem::mesh::attach_partition(&mut m, &draw.partition)?;
                    m
                }
            };
            let path = out.join(format!("mesh_sample0_level{}_{tag}.txt", level.index));
            let mut file = fs::File::create(path)?;
            mesh.dump_text(&mut file)?;
        }
    }
    Ok(())
}

fn dump_trajectories(
    prepared: &PreparedProblem,
    settings: &RunSettings,
    out: &Path,
) -> Result<(), CoreError> {
    let draw = draw_sample(prepared, settings.seed, 0)?;
    for level in &prepared.plan.levels {
        let solution = solve_level(prepared, &draw, level, MeshBranch::Adapted, StoreMode::Full)?;
        let mut text = String::new();
        for (k, t) in solution.trajectory.times.iter().enumerate() {
            let values = evaluate_on_grid(
                &solution.mesh,
                &solution.system,
                &solution.trajectory,
                *t,
                &prepared.lattice,
            )?;
            text.push_str(&format!("{t:.16e}"));
            for v in values {
                text.push_str(&format!(",{v:.16e}"));
            }
            text.push('\n');
            let _ = k;
        }
        fs::write(
            out.join(format!(
                "trajectory_sample0_level{}_adapted.csv",
                level.index
            )),
            text,
        )?;
    }
    Ok(())
}

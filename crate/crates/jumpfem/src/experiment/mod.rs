//! Coupled Monte Carlo convergence studies.
//!
//! One seed drives one sample: a partition, one set of jump heights drawn at
//! the reference bias, and one maximal normal vector. Every discretization
//! level reuses that randomness (levels see the leading slice of the normal
//! vector), so the difference against the per-sample reference solution
//! measures discretization error alone. Samples are independent jobs keyed by
//! seed; results reduce in ascending seed order, which makes reports
//! byte-identical for any worker count.

mod presets;
mod regression;

pub use presets::{
    experiment_presets, preset, AdvectionSpec, InitialSpec, JumpLawSpec, PartitionLaw, ProblemSpec,
    SourceSpec, TrendSpec,
};
pub use regression::{fit_rate, RateFit};

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fem::{
    assemble, assemble_load, backward_euler, evaluate_on_grid, grid_norm, GridNorm, Lattice,
    SolverKind, StoreMode,
};
use crate::jump_model::{
    compose_coefficients, sample_jump_heights, sample_partition_1d, sample_partition_2d,
    JumpHeights, JumpSampler, Partition, Partition2dKind,
};
use crate::mesh::{adapted_mesh_1d, adapted_mesh_2d, attach_partition, uniform_mesh, Mesh};
use crate::random_field::{
    closed_form_spectrum, nystrom_spectrum, CovarianceSpec, FieldRealization, KLBasis,
};
use crate::{Error, Result};

/// One rung of the discretization ladder with its aligned parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub index: u32,
    pub h_bar: f64,
    /// Karhunen-Loeve cutoff N with tail mass at most h_bar^2
    pub cutoff: usize,
    /// jump-sampling bias budget, h_bar^s
    pub bias: f64,
    pub dt: f64,
}

/// The level ladder plus the strictly finer reference discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPlan {
    pub levels: Vec<Level>,
    pub reference: Level,
    pub bias_exponent: f64,
}

/// Align the error contributions at threshold `h_bar`:
/// tail^(1/2) <= h_bar, bias^(1/s) = h_bar, dt = T / ceil(T / h_bar).
pub fn align_parameters(
    h_bar: f64,
    basis: &KLBasis,
    bias_exponent: f64,
    horizon: f64,
) -> Result<(usize, f64, f64)> {
    if !(h_bar > 0.0) {
        return Err(Error::config("h_bar", "must be positive"));
    }
    let cutoff = basis.smallest_cutoff(h_bar * h_bar)?.max(1);
    let bias = h_bar.powf(bias_exponent);
    let dt = horizon / (horizon / h_bar).ceil().max(1.0);
    Ok((cutoff, bias, dt))
}

/// Problem with all per-run work done: the spectral basis at the reference
/// cutoff, the aligned level plan, the jump sampler at the reference bias and
/// the evaluation lattice.
pub struct PreparedProblem {
    pub spec: ProblemSpec,
    pub basis: Arc<KLBasis>,
    pub plan: LevelPlan,
    pub lattice: Lattice,
    pub solver: SolverKind,
    jump_sampler: Arc<JumpSampler>,
}

impl PreparedProblem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        Self::with_solver(spec, SolverKind::Direct)
    }

    pub fn with_solver(spec: ProblemSpec, solver: SolverKind) -> Result<Self> {
        spec.validate()?;
        crate::fem::set_deterministic_parallelism();

        let h_ref = spec.h_bar(spec.reference_level);
        let tail_target = h_ref * h_ref;
        let basis = match spec.covariance {
            CovarianceSpec::Matern { .. } => {
                let full =
                    nystrom_spectrum(&spec.covariance, spec.nystrom_nodes, spec.nystrom_nodes)?;
                let n_ref = full.smallest_cutoff(tail_target).map_err(|_| {
                    Error::config(
                        "problem.nystrom_nodes",
                        format!(
                            "tail target {tail_target:.3e} unreachable with {} quadrature nodes",
                            spec.nystrom_nodes
                        ),
                    )
                })?;
                full.truncate(n_ref.max(1))
            }
            _ => {
                let n_ref = closed_form_cutoff(&spec.covariance, tail_target, spec.cutoff_cap)?;
                closed_form_spectrum(&spec.covariance, n_ref)?
            }
        };
        let basis = Arc::new(basis);

        let mut levels = Vec::with_capacity(spec.levels.len());
        for &index in &spec.levels {
            let h_bar = spec.h_bar(index);
            let (cutoff, bias, dt) =
                align_parameters(h_bar, &basis, spec.bias_exponent, spec.horizon)?;
            levels.push(Level {
                index,
                h_bar,
                cutoff,
                bias,
                dt,
            });
        }
        let (cutoff, bias, dt) = align_parameters(h_ref, &basis, spec.bias_exponent, spec.horizon)?;
        let reference = Level {
            index: spec.reference_level,
            h_bar: h_ref,
            cutoff,
            bias,
            dt,
        };
        if levels.iter().any(|l| l.h_bar <= reference.h_bar) {
            return Err(Error::config(
                "problem.reference_level",
                "reference discretization must be strictly finer than every level",
            ));
        }
        let plan = LevelPlan {
            levels,
            reference,
            bias_exponent: spec.bias_exponent,
        };
        let jump_sampler = Arc::new(spec.jumps.with_bias(plan.reference.bias).build()?);
        let lattice = Lattice::new(spec.dim, spec.lattice_points);
        Ok(PreparedProblem {
            spec,
            basis,
            plan,
            lattice,
            solver,
            jump_sampler,
        })
    }
}

/// Smallest cutoff of a closed-form spectrum with tail mass below `target`.
fn closed_form_cutoff(spec: &CovarianceSpec, target: f64, cap: usize) -> Result<usize> {
    // probe the tail with geometrically growing cutoffs, then binary search
    let mut n = 16usize;
    loop {
        let basis = closed_form_spectrum(spec, n.min(cap))?;
        if basis.tail() <= target {
            return basis.smallest_cutoff(target);
        }
        if n >= cap {
            return Err(Error::config(
                "problem.cutoff_cap",
                format!("tail target {target:.3e} unreachable within cutoff cap {cap}"),
            ));
        }
        n *= 4;
    }
}

/// Randomness of one Monte Carlo sample, drawn in a fixed order from the
/// sample's own stream: partition, jump heights, normal coordinates.
pub struct SampleDraw {
    pub partition: Arc<Partition>,
    pub heights: JumpHeights,
    pub field: FieldRealization,
}

/// Stream `index` of the ChaCha8 generator keyed by `base_seed`.
pub fn sample_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

pub fn draw_sample(prepared: &PreparedProblem, base_seed: u64, index: u64) -> Result<SampleDraw> {
    let mut rng = sample_rng(base_seed, index);
    let partition = match prepared.spec.partition {
        PartitionLaw::Poisson1d { intensity } => sample_partition_1d(intensity, &mut rng)?,
        PartitionLaw::Heterogeneous2d => {
            sample_partition_2d(Partition2dKind::Heterogeneous, &mut rng)
        }
        PartitionLaw::Checkerboard2d => {
            sample_partition_2d(Partition2dKind::Checkerboard, &mut rng)
        }
    };
    let heights = sample_jump_heights(&prepared.jump_sampler, &partition, &mut rng)?;
    let z: Vec<f64> = (0..prepared.plan.reference.cutoff)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let field = FieldRealization::from_coordinates(&prepared.basis, z);
    Ok(SampleDraw {
        partition: Arc::new(partition),
        heights,
        field,
    })
}

/// Final-time lattice fields of one coupled sample.
pub struct CoupledSample {
    pub reference: Vec<f64>,
    /// per level: (sample-adapted, non-adapted)
    pub levels: Vec<(Vec<f64>, Vec<f64>)>,
    /// wall-clock seconds per level (both branches) and for the reference
    pub level_seconds: Vec<f64>,
    pub reference_seconds: f64,
}

/// Mesh family of one solve: interface-fitted or uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshBranch {
    Adapted,
    Uniform,
}

/// Everything one level solve produces; kept for diagnostics dumps.
pub struct LevelSolution {
    pub mesh: Mesh,
    pub system: crate::fem::SparseSystem,
    pub trajectory: crate::fem::Trajectory,
}

/// Solve one draw at every level plus the reference, all from the same
/// randomness.
pub fn run_coupled_sample(
    prepared: &PreparedProblem,
    base_seed: u64,
    index: u64,
) -> Result<CoupledSample> {
    let draw = draw_sample(prepared, base_seed, index)
        .map_err(|e| e.in_sample(index, prepared.plan.reference.index))?;
    let start = Instant::now();
    let reference = solve_branch(
        prepared,
        &draw,
        &prepared.plan.reference,
        MeshBranch::Adapted,
    )
    .map_err(|e| e.in_sample(index, prepared.plan.reference.index))?;
    let reference_seconds = start.elapsed().as_secs_f64();

    let mut levels = Vec::with_capacity(prepared.plan.levels.len());
    let mut level_seconds = Vec::with_capacity(prepared.plan.levels.len());
    for level in &prepared.plan.levels {
        let start = Instant::now();
        let adapted = solve_branch(prepared, &draw, level, MeshBranch::Adapted)
            .map_err(|e| e.in_sample(index, level.index))?;
        let nonadapted = solve_branch(prepared, &draw, level, MeshBranch::Uniform)
            .map_err(|e| e.in_sample(index, level.index))?;
        levels.push((adapted, nonadapted));
        level_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(CoupledSample {
        reference,
        levels,
        level_seconds,
        reference_seconds,
    })
}

/// Solve one draw at one level on the chosen mesh family.
pub fn solve_level(
    prepared: &PreparedProblem,
    draw: &SampleDraw,
    level: &Level,
    branch: MeshBranch,
    store: StoreMode,
) -> Result<LevelSolution> {
    let spec = &prepared.spec;
    let mesh: Mesh = match branch {
        MeshBranch::Adapted => match spec.dim {
            1 => adapted_mesh_1d(&draw.partition, level.h_bar)?,
            _ => adapted_mesh_2d(&draw.partition, level.h_bar)?,
        },
        MeshBranch::Uniform => {
            let mut mesh = uniform_mesh(spec.dim, level.h_bar)?;
            attach_partition(&mut mesh, &draw.partition)?;
            mesh
        }
    };
    let field = draw
        .field
        .truncate(level.cutoff.min(draw.field.coordinates().len()));
    let coeff = compose_coefficients(
        &field,
        Arc::clone(&draw.partition),
        &draw.heights,
        spec.trend.build(),
        spec.phi,
        spec.advection.build(),
        None,
    )?;
    let system = assemble(&mesh, &coeff)?;
    let initial = spec.initial;
    let c0 = crate::fem::nodal_interpolate(&mesh, &system, &|p| initial.eval(p));
    let source = spec.source.value();
    let load_vector = assemble_load(&mesh, &system, &|_p, _t| source, 0.0);
    let load = move |_t: f64| load_vector.clone();
    let trajectory = backward_euler(
        &system,
        &load,
        c0,
        level.dt,
        spec.horizon,
        prepared.solver,
        store,
    )?;
    Ok(LevelSolution {
        mesh,
        system,
        trajectory,
    })
}

fn solve_branch(
    prepared: &PreparedProblem,
    draw: &SampleDraw,
    level: &Level,
    branch: MeshBranch,
) -> Result<Vec<f64>> {
    let solution = solve_level(prepared, draw, level, branch, StoreMode::Ends)?;
    evaluate_on_grid(
        &solution.mesh,
        &solution.system,
        &solution.trajectory,
        prepared.spec.horizon,
        &prepared.lattice,
    )
}

/// Per-level RMSE estimates with Monte Carlo standard errors, the fitted
/// rates, and the per-sample squared errors for audits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelReport>,
    pub fit_adapted: RateFit,
    pub fit_nonadapted: RateFit,
    pub samples: u64,
    pub base_seed: u64,
    pub per_sample: Vec<SampleRecord>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u32,
    pub h_bar: f64,
    pub cutoff: usize,
    pub bias: f64,
    pub dt: f64,
    pub rmse_adapted: f64,
    pub se_adapted: f64,
    pub rmse_nonadapted: f64,
    pub se_nonadapted: f64,
    /// summed wall-clock seconds over samples; diagnostic only, never part
    /// of the deterministic CSV report
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: u64,
    pub level: u32,
    pub sq_error_adapted: f64,
    pub sq_error_nonadapted: f64,
}

/// RMSE and its standard error from per-sample squared errors, via the
/// delta method on the mean of squares.
pub fn reduce_rmse(squared_errors: &[f64]) -> (f64, f64) {
    let n = squared_errors.len() as f64;
    let mean = squared_errors.iter().sum::<f64>() / n;
    let var = squared_errors
        .iter()
        .map(|e| (e - mean) * (e - mean))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let se_mean = (var / n).sqrt();
    let rmse = mean.max(0.0).sqrt();
    let se = if rmse > 0.0 {
        se_mean / (2.0 * rmse)
    } else {
        0.0
    };
    (rmse, se)
}

/// Run `samples` coupled samples (in parallel over seeds) and estimate the
/// per-level RMSE against the per-sample reference, then fit the rates.
/// Any sample failure aborts the whole estimate with its (seed, level)
/// context; silently skipping samples would bias the estimate.
pub fn estimate_rmse(
    prepared: &PreparedProblem,
    samples: u64,
    base_seed: u64,
) -> Result<ConvergenceReport> {
    if samples < 2 {
        return Err(Error::config("run.samples", "need at least 2 samples"));
    }
    let outcomes: Vec<(Vec<(f64, f64)>, Vec<f64>)> = (0..samples)
        .into_par_iter()
        .map(|index| {
            let sample = run_coupled_sample(prepared, base_seed, index)?;
            let mut errors = Vec::with_capacity(sample.levels.len());
            for (adapted, nonadapted) in &sample.levels {
                let e_ad = lattice_error(prepared, &sample.reference, adapted);
                let e_non = lattice_error(prepared, &sample.reference, nonadapted);
                errors.push((e_ad * e_ad, e_non * e_non));
            }
            Ok((errors, sample.level_seconds))
        })
        .collect::<Result<_>>()?;

    let n_levels = prepared.plan.levels.len();
    let mut per_sample = Vec::with_capacity(samples as usize * n_levels);
    for (index, (errors, _)) in outcomes.iter().enumerate() {
        for (level, &(sq_ad, sq_non)) in prepared.plan.levels.iter().zip(errors) {
            per_sample.push(SampleRecord {
                sample: index as u64,
                level: level.index,
                sq_error_adapted: sq_ad,
                sq_error_nonadapted: sq_non,
            });
        }
    }

    let mut levels = Vec::with_capacity(n_levels);
    for (k, level) in prepared.plan.levels.iter().enumerate() {
        let sq_ad: Vec<f64> = outcomes.iter().map(|(e, _)| e[k].0).collect();
        let sq_non: Vec<f64> = outcomes.iter().map(|(e, _)| e[k].1).collect();
        let (rmse_adapted, se_adapted) = reduce_rmse(&sq_ad);
        let (rmse_nonadapted, se_nonadapted) = reduce_rmse(&sq_non);
        let seconds: f64 = outcomes.iter().map(|(_, s)| s[k]).sum();
        levels.push(LevelReport {
            level: level.index,
            h_bar: level.h_bar,
            cutoff: level.cutoff,
            bias: level.bias,
            dt: level.dt,
            rmse_adapted,
            se_adapted,
            rmse_nonadapted,
            se_nonadapted,
            seconds,
        });
    }

    let h_bars: Vec<f64> = levels.iter().map(|l| l.h_bar).collect();
    let fit_adapted = fit_rate(
        &h_bars,
        &levels.iter().map(|l| l.rmse_adapted).collect::<Vec<_>>(),
    )?;
    let fit_nonadapted = fit_rate(
        &h_bars,
        &levels.iter().map(|l| l.rmse_nonadapted).collect::<Vec<_>>(),
    )?;
    Ok(ConvergenceReport {
        levels,
        fit_adapted,
        fit_nonadapted,
        samples,
        base_seed,
        per_sample,
    })
}

fn lattice_error(prepared: &PreparedProblem, reference: &[f64], candidate: &[f64]) -> f64 {
    let diff: Vec<f64> = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| r - c)
        .collect();
    grid_norm(&prepared.lattice, &diff, GridNorm::H1)
}

fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl ConvergenceReport {
    /// Deterministic CSV: one row per level, then a summary row carrying the
    /// fitted rates (rmse columns) and log-prefactors (se columns).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "level,h_bar,N,eps,dt,rmse_adapted,se_adapted,rmse_nonadapted,se_nonadapted\n",
        );
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                l.level,
                format_value(l.h_bar),
                l.cutoff,
                format_value(l.bias),
                format_value(l.dt),
                format_value(l.rmse_adapted),
                format_value(l.se_adapted),
                format_value(l.rmse_nonadapted),
                format_value(l.se_nonadapted),
            ));
        }
        out.push_str(&format!(
            "kappa,,,,,{},{},{},{}\n",
            format_value(self.fit_adapted.kappa),
            format_value(self.fit_adapted.log_prefactor),
            format_value(self.fit_nonadapted.kappa),
            format_value(self.fit_nonadapted.log_prefactor),
        ));
        out
    }

    /// Deterministic CSV of the per-sample squared errors.
    pub fn per_sample_csv(&self) -> String {
        let mut out = String::from("sample,level,sq_error_adapted,sq_error_nonadapted\n");
        for r in &self.per_sample {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.sample,
                r.level,
                format_value(r.sq_error_adapted),
                format_value(r.sq_error_nonadapted),
            ));
        }
        out
    }
}

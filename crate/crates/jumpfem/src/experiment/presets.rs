//! Problem definitions: the four study presets plus the pieces a custom
//! configuration can mix.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::jump_model::{GigParams, PhiMap, ScalarField, VectorField};
use crate::random_field::CovarianceSpec;
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum PartitionLaw {
    /// 1D: tau = Poisson(intensity) + 2 sorted uniform break points
    Poisson1d { intensity: f64 },
    /// 2D: two vertical and two horizontal lines through (0.2, 0.8)^2
    Heterogeneous2d,
    /// 2D: center point uniform in [0.4, 0.6]^2
    Checkerboard2d,
}

impl PartitionLaw {
    pub fn dim(&self) -> usize {
        match self {
            PartitionLaw::Poisson1d { .. } => 1,
            _ => 2,
        }
    }
}

/// Jump-height law; the sampling-bias budget of the biased laws is supplied
/// by the level plan, not the preset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLawSpec {
    Uniform { lo: f64, hi: f64 },
    Gig { psi: f64, chi: f64, shape: f64 },
    CheckerboardReciprocal { lo: f64, hi: f64 },
}

impl JumpLawSpec {
    pub fn with_bias(&self, bias: f64) -> crate::jump_model::JumpLaw {
        match *self {
            JumpLawSpec::Uniform { lo, hi } => crate::jump_model::JumpLaw::Uniform { lo, hi },
            JumpLawSpec::Gig { psi, chi, shape } => crate::jump_model::JumpLaw::Gig {
                params: GigParams { psi, chi, shape },
                bias,
            },
            JumpLawSpec::CheckerboardReciprocal { lo, hi } => {
                crate::jump_model::JumpLaw::CheckerboardReciprocal { lo, hi }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrendSpec {
    Zero,
    Constant { value: f64 },
}

impl TrendSpec {
    pub fn build(&self) -> Option<ScalarField> {
        match *self {
            TrendSpec::Zero => None,
            TrendSpec::Constant { value } => Some(Arc::new(move |_p: Point| value)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdvectionSpec {
    None,
    /// b1(x) = amplitude * sin(2 pi x) e_x
    SineProfile1d {
        amplitude: f64,
    },
    /// b1(x, y) = amplitude * sin(pi x) sin(pi y) (1, 1)
    SineSine2d {
        amplitude: f64,
    },
}

impl AdvectionSpec {
    pub fn build(&self) -> Option<VectorField> {
        match *self {
            AdvectionSpec::None => None,
            AdvectionSpec::SineProfile1d { amplitude } => Some(Arc::new(move |p: Point| {
                [amplitude * (2.0 * std::f64::consts::PI * p[0]).sin(), 0.0]
            })),
            AdvectionSpec::SineSine2d { amplitude } => Some(Arc::new(move |p: Point| {
                let s = amplitude
                    * (std::f64::consts::PI * p[0]).sin()
                    * (std::f64::consts::PI * p[1]).sin();
                [s, s]
            })),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    /// scale * sin(pi x)
    SinePi1d { scale: f64 },
    /// scale * sin(pi x) sin(pi y)
    SineSine2d { scale: f64 },
}

impl InitialSpec {
    pub fn eval(&self, p: Point) -> f64 {
        let pi = std::f64::consts::PI;
        match *self {
            InitialSpec::SinePi1d { scale } => scale * (pi * p[0]).sin(),
            InitialSpec::SineSine2d { scale } => scale * (pi * p[0]).sin() * (pi * p[1]).sin(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialSpec::SinePi1d { .. } => 1,
            InitialSpec::SineSine2d { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Constant { value: f64 },
}

impl SourceSpec {
    pub fn value(&self) -> f64 {
        match *self {
            SourceSpec::Constant { value } => value,
        }
    }
}

/// Complete problem description: coefficients, discretization ladder and
/// evaluation lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub dim: usize,
    pub horizon: f64,
    pub covariance: CovarianceSpec,
    /// quadrature nodes for the Matern eigensolve; ignored for closed forms
    pub nystrom_nodes: usize,
    pub partition: PartitionLaw,
    pub jumps: JumpLawSpec,
    pub trend: TrendSpec,
    pub phi: PhiMap,
    pub advection: AdvectionSpec,
    pub initial: InitialSpec,
    pub source: SourceSpec,
    /// level indices of the study grid
    pub levels: Vec<u32>,
    pub reference_level: u32,
    /// h_bar at level l is h_base * 2^-l
    pub h_base: f64,
    /// lattice nodes per axis used for prolongation and error norms
    pub lattice_points: usize,
    /// L^s bias exponent for the jump sampling (s = 2 throughout)
    pub bias_exponent: f64,
    /// largest admissible Karhunen-Loeve cutoff for closed-form spectra
    pub cutoff_cap: usize,
}

impl ProblemSpec {
    pub fn h_bar(&self, level: u32) -> f64 {
        self.h_base * 2f64.powi(-(level as i32))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: &str| Err(Error::config(field, message));
        if self.dim != 1 && self.dim != 2 {
            return fail("problem.dim", "dimension must be 1 or 2");
        }
        if !(self.horizon > 0.0) {
            return fail("problem.horizon", "must be positive");
        }
        self.covariance.validate()?;
        if self.covariance.dim() != self.dim {
            return fail("problem.covariance", "covariance dimension mismatch");
        }
        if self.partition.dim() != self.dim {
            return fail("problem.partition", "partition dimension mismatch");
        }
        if self.initial.dim() != self.dim {
            return fail("problem.initial", "initial-condition dimension mismatch");
        }
        match self.advection {
            AdvectionSpec::SineProfile1d { .. } if self.dim != 1 => {
                return fail("problem.advection", "1d profile on a 2d problem")
            }
            AdvectionSpec::SineSine2d { .. } if self.dim != 2 => {
                return fail("problem.advection", "2d profile on a 1d problem")
            }
            _ => {}
        }
        if matches!(self.jumps, JumpLawSpec::CheckerboardReciprocal { .. })
            != matches!(self.partition, PartitionLaw::Checkerboard2d)
        {
            return fail(
                "problem.jumps",
                "reciprocal heights pair exactly with the checkerboard partition",
            );
        }
        if self.levels.is_empty() {
            return fail("problem.levels", "at least one level");
        }
        let mut sorted = self.levels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.levels.len() {
            return fail("problem.levels", "levels must be distinct");
        }
        if self.reference_level <= *self.levels.iter().max().unwrap() {
            return fail(
                "problem.reference_level",
                "reference must be strictly finer than every level",
            );
        }
        if !(self.h_base > 0.0) {
            return fail("problem.h_base", "must be positive");
        }
        if self.lattice_points < 2 {
            return fail("problem.lattice_points", "need at least 2 lattice nodes");
        }
        if self.bias_exponent != 2.0 {
            return fail("problem.bias_exponent", "the error alignment uses s = 2");
        }
        if self.cutoff_cap == 0 {
            return fail("problem.cutoff_cap", "must be positive");
        }
        if matches!(self.covariance, CovarianceSpec::Matern { .. }) && self.nystrom_nodes < 2 {
            return fail("problem.nystrom_nodes", "matern needs quadrature nodes");
        }
        Ok(())
    }
}

/// The four study configurations.
pub fn experiment_presets() -> Vec<ProblemSpec> {
    vec![
        ProblemSpec {
            name: "1d_matern_gig".into(),
            dim: 1,
            horizon: 1.0,
            covariance: CovarianceSpec::Matern {
                nu: 1.5,
                variance: 1.0,
                correlation: 0.05,
            },
            nystrom_nodes: 2048,
            partition: PartitionLaw::Poisson1d { intensity: 5.0 },
            jumps: JumpLawSpec::Gig {
                psi: 0.25,
                chi: 9.0,
                shape: -1.0,
            },
            trend: TrendSpec::Zero,
            phi: PhiMap::Exp,
            advection: AdvectionSpec::SineProfile1d { amplitude: 2.0 },
            initial: InitialSpec::SinePi1d { scale: 0.1 },
            source: SourceSpec::Constant { value: 1.0 },
            levels: (1..=6).collect(),
            reference_level: 8,
            h_base: 0.25,
            lattice_points: 1025,
            bias_exponent: 2.0,
            cutoff_cap: 2_000_000,
        },
        ProblemSpec {
            name: "1d_brownian_uniform".into(),
            dim: 1,
            horizon: 1.0,
            covariance: CovarianceSpec::Brownian,
            nystrom_nodes: 0,
            partition: PartitionLaw::Poisson1d { intensity: 5.0 },
            jumps: JumpLawSpec::Uniform { lo: 0.0, hi: 1.0 },
            trend: TrendSpec::Zero,
            phi: PhiMap::Exp,
            advection: AdvectionSpec::SineProfile1d { amplitude: 2.0 },
            initial: InitialSpec::SinePi1d { scale: 0.1 },
            source: SourceSpec::Constant { value: 1.0 },
            levels: (1..=6).collect(),
            reference_level: 8,
            h_base: 0.25,
            lattice_points: 1025,
            bias_exponent: 2.0,
            cutoff_cap: 2_000_000,
        },
        ProblemSpec {
            name: "2d_heterogeneous".into(),
            dim: 2,
            horizon: 1.0,
            covariance: CovarianceSpec::Sine2d {
                variance: 0.25,
                correlation: 0.02,
            },
            nystrom_nodes: 0,
            partition: PartitionLaw::Heterogeneous2d,
            jumps: JumpLawSpec::Uniform { lo: 0.0, hi: 10.0 },
            trend: TrendSpec::Zero,
            phi: PhiMap::Exp,
            advection: AdvectionSpec::SineSine2d { amplitude: 5.0 },
            initial: InitialSpec::SineSine2d { scale: 0.01 },
            source: SourceSpec::Constant { value: 1.0 },
            levels: (1..=5).collect(),
            reference_level: 7,
            h_base: 0.4,
            lattice_points: 257,
            bias_exponent: 2.0,
            cutoff_cap: 2_000_000,
        },
        ProblemSpec {
            name: "2d_checkerboard".into(),
            dim: 2,
            horizon: 1.0,
            covariance: CovarianceSpec::Sine2d {
                variance: 0.25,
                correlation: 0.02,
            },
            nystrom_nodes: 0,
            partition: PartitionLaw::Checkerboard2d,
            jumps: JumpLawSpec::CheckerboardReciprocal { lo: 1e-4, hi: 1e-2 },
            trend: TrendSpec::Zero,
            phi: PhiMap::Zero,
            advection: AdvectionSpec::SineSine2d { amplitude: 5.0 },
            initial: InitialSpec::SineSine2d { scale: 0.01 },
            source: SourceSpec::Constant { value: 1.0 },
            levels: (1..=5).collect(),
            reference_level: 7,
            h_base: 0.4,
            lattice_points: 257,
            bias_exponent: 2.0,
            cutoff_cap: 2_000_000,
        },
    ]
}

pub fn preset(name: &str) -> Option<ProblemSpec> {
    experiment_presets().into_iter().find(|p| p.name == name)
}

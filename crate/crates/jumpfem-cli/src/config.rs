//! Config-file schema and resolution into a [`ProblemSpec`] plus run
//! settings. The file is TOML: sections of key/value pairs; a problem is
//! either a named preset (with optional overrides) or fully inline.

use serde::{Deserialize, Serialize};

use jumpfem::experiment::{
    preset, AdvectionSpec, InitialSpec, JumpLawSpec, PartitionLaw, ProblemSpec, SourceSpec,
    TrendSpec,
};
use jumpfem::fem::SolverKind;
use jumpfem::jump_model::PhiMap;
use jumpfem::random_field::CovarianceSpec;

/// A configuration problem: either of these errors names the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "invalid configuration for field `{}`: {}",
            self.field, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub problem: ProblemSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub solver: Option<SolverKind>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub preset: Option<String>,
    // overrides (also the required fields of a fully inline problem)
    pub name: Option<String>,
    pub dim: Option<usize>,
    pub horizon: Option<f64>,
    pub covariance: Option<CovarianceSpec>,
    pub nystrom_nodes: Option<usize>,
    pub partition: Option<PartitionLaw>,
    pub jumps: Option<JumpLawSpec>,
    pub trend: Option<TrendSpec>,
    pub phi: Option<PhiMap>,
    pub advection: Option<AdvectionSpec>,
    pub initial: Option<InitialSpec>,
    pub source: Option<SourceSpec>,
    pub levels: Option<Vec<u32>>,
    pub reference_level: Option<u32>,
    pub h_base: Option<f64>,
    pub lattice_points: Option<usize>,
    pub bias_exponent: Option<f64>,
    pub cutoff_cap: Option<usize>,
}

impl ProblemSection {
    pub fn resolve(&self) -> Result<ProblemSpec, ConfigError> {
        let mut spec = match &self.preset {
            Some(name) => preset(name)
                .ok_or_else(|| bad("problem.preset", format!("unknown preset `{name}`")))?,
            None => self.inline_spec()?,
        };
        if let Some(v) = &self.name {
            spec.name = v.clone();
        }
        if let Some(v) = self.dim {
            spec.dim = v;
        }
        if let Some(v) = self.horizon {
            spec.horizon = v;
        }
        if let Some(v) = self.covariance {
            spec.covariance = v;
        }
        if let Some(v) = self.nystrom_nodes {
            spec.nystrom_nodes = v;
        }
        if let Some(v) = self.partition {
            spec.partition = v;
        }
        if let Some(v) = self.jumps {
            spec.jumps = v;
        }
        if let Some(v) = self.trend {
            spec.trend = v;
        }
        if let Some(v) = self.phi {
            spec.phi = v;
        }
        if let Some(v) = self.advection {
            spec.advection = v;
        }
        if let Some(v) = self.initial {
            spec.initial = v;
        }
        if let Some(v) = self.source {
            spec.source = v;
        }
        if let Some(v) = &self.levels {
            spec.levels = v.clone();
        }
        if let Some(v) = self.reference_level {
            spec.reference_level = v;
        }
        if let Some(v) = self.h_base {
            spec.h_base = v;
        }
        if let Some(v) = self.lattice_points {
            spec.lattice_points = v;
        }
        if let Some(v) = self.bias_exponent {
            spec.bias_exponent = v;
        }
        if let Some(v) = self.cutoff_cap {
            spec.cutoff_cap = v;
        }
        Ok(spec)
    }

    fn inline_spec(&self) -> Result<ProblemSpec, ConfigError> {
        macro_rules! required {
            ($field:ident) => {
                self.$field.clone().ok_or_else(|| {
                    bad(
                        concat!("problem.", stringify!($field)),
                        "required when no preset is named",
                    )
                })?
            };
        }
        Ok(ProblemSpec {
            name: self.name.clone().unwrap_or_else(|| "custom".into()),
            dim: required!(dim),
            horizon: required!(horizon),
            covariance: required!(covariance),
            nystrom_nodes: self.nystrom_nodes.unwrap_or(0),
            partition: required!(partition),
            jumps: required!(jumps),
            trend: self.trend.unwrap_or(TrendSpec::Zero),
            phi: self.phi.unwrap_or(PhiMap::Exp),
            advection: self.advection.unwrap_or(AdvectionSpec::None),
            initial: required!(initial),
            source: self.source.unwrap_or(SourceSpec::Constant { value: 1.0 }),
            levels: required!(levels),
            reference_level: required!(reference_level),
            h_base: required!(h_base),
            lattice_points: required!(lattice_points),
            bias_exponent: self.bias_exponent.unwrap_or(2.0),
            cutoff_cap: self.cutoff_cap.unwrap_or(2_000_000),
        })
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, Serialize)]
pub struct RunSettings {
    pub spec: ProblemSpec,
    pub samples: u64,
    pub seed: u64,
    pub threads: usize,
    pub out: String,
    pub solver: SolverKind,
}

pub fn parse_file(text: &str) -> Result<FileConfig, ConfigError> {
    toml::from_str(text).map_err(|e| bad("config", e.to_string()))
}

/// Parse a level range spec: "2", "1,3,5" or "1..4" (inclusive).
pub fn parse_levels(text: &str) -> Result<Vec<u32>, ConfigError> {
    let text = text.trim();
    let parse_one = |s: &str| -> Result<u32, ConfigError> {
        s.trim()
            .parse::<u32>()
            .map_err(|_| bad("levels", format!("cannot parse level `{s}`")))
    };
    if let Some((a, b)) = text.split_once("..") {
        let (lo, hi) = (parse_one(a)?, parse_one(b)?);
        if lo > hi {
            return Err(bad("levels", "empty level range"));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(parse_one).collect()
}

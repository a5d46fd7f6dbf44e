//! Scenario configuration: JSON-serializable descriptions of a model, a
//! conformal factor, a sampling window, and the checks to run.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use finsler::{Bump, ConformalFactor, FinslerModel, MetricSpec, RandersDrift, SampleSpec};
use serde::{Deserialize, Serialize};

/// Model family selector mirroring the engine's constructors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "kebab-case")]
pub enum ModelSpec {
    Euclidean {
        dim: usize,
    },
    /// Round 2-sphere in polar coordinates.
    Sphere {
        radius: f64,
    },
    Riemannian {
        dim: usize,
        metric: MetricSpec,
    },
    Randers {
        dim: usize,
        #[serde(default = "identity_metric")]
        metric: MetricSpec,
        drift: RandersDrift,
    },
    Quartic {
        dim: usize,
    },
}

fn identity_metric() -> MetricSpec {
    MetricSpec::Identity
}

impl ModelSpec {
    pub fn build(&self) -> Result<FinslerModel> {
        Ok(match self {
            ModelSpec::Euclidean { dim } => FinslerModel::euclidean(*dim),
            ModelSpec::Sphere { radius } => FinslerModel::sphere(*radius),
            ModelSpec::Riemannian { dim, metric } => {
                FinslerModel::riemannian(*dim, metric.clone())?
            }
            ModelSpec::Randers { dim, metric, drift } => {
                FinslerModel::randers(*dim, metric.clone(), drift.clone())?
            }
            ModelSpec::Quartic { dim } => FinslerModel::quartic(*dim),
        })
    }
}

/// Conformal factor σ(x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum SigmaSpec {
    Constant {
        value: f64,
    },
    Linear {
        gradient: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
}

impl SigmaSpec {
    pub fn build(&self) -> ConformalFactor {
        match self {
            SigmaSpec::Constant { value } => ConformalFactor::Constant(*value),
            SigmaSpec::Linear { gradient, offset } => ConformalFactor::Linear {
                gradient: gradient.clone(),
                offset: *offset,
            },
            SigmaSpec::Bump {
                amplitude,
                center,
                width,
            } => ConformalFactor::Bump(Bump {
                amplitude: *amplitude,
                center: center.clone(),
                width: *width,
            }),
        }
    }
}

/// Which verification checks to run, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Validate,
    TransformLaws,
    Invariants,
    Homothety,
    Conformality,
    Geodesic,
    Jacobi,
    Correspondence,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Validate => "validate",
            CheckKind::TransformLaws => "transform-laws",
            CheckKind::Invariants => "invariants",
            CheckKind::Homothety => "homothety",
            CheckKind::Conformality => "conformality",
            CheckKind::Geodesic => "geodesic",
            CheckKind::Jacobi => "jacobi",
            CheckKind::Correspondence => "correspondence",
        }
    }
}

/// Sampling window for support elements.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesSpec {
    pub count: usize,
    pub seed: u64,
    pub base_box: Vec<[f64; 2]>,
    pub fiber_radius: [f64; 2],
}

impl SamplesSpec {
    pub fn to_engine(&self, seed_override: Option<u64>) -> SampleSpec {
        SampleSpec {
            count: self.count,
            seed: seed_override.unwrap_or(self.seed),
            base_box: self.base_box.clone(),
            fiber_radius: self.fiber_radius,
        }
    }
}

/// Per-class tolerances; every field optional in the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Connection-level transformation laws (max relative residual).
    pub connection: f64,
    /// Curvature-level transformation laws.
    pub curvature: f64,
    /// Strict invariants.
    pub strict: f64,
    /// e^{2σ}-weighted invariants.
    pub sigma_weighted: f64,
    /// Homothety predicate threshold.
    pub homothety: f64,
    /// σ recovery in the conformality round trip.
    pub conformality: f64,
    /// Relative energy drift along an integrated geodesic.
    pub energy_drift: f64,
    /// Jacobi superposition residual.
    pub jacobi_linearity: f64,
    /// Route agreement in the correspondence checks.
    pub correspondence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            connection: 1e-8,
            curvature: 1e-5,
            strict: 1e-8,
            sigma_weighted: 1e-7,
            homothety: 1e-12,
            conformality: 1e-9,
            energy_drift: 1e-8,
            jacobi_linearity: 1e-9,
            correspondence: 1e-7,
        }
    }
}

impl Tolerances {
    /// Multiply every tolerance by `s` (for tolerance sweeps).
    pub fn scaled(&self, s: f64) -> Tolerances {
        Tolerances {
            connection: self.connection * s,
            curvature: self.curvature * s,
            strict: self.strict * s,
            sigma_weighted: self.sigma_weighted * s,
            homothety: self.homothety * s,
            conformality: self.conformality * s,
            energy_drift: self.energy_drift * s,
            jacobi_linearity: self.jacobi_linearity * s,
            correspondence: self.correspondence * s,
        }
    }
}

/// Initial data and grid for trajectory checks and subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    /// Initial support element; defaults to the first sampled one.
    #[serde(default)]
    pub initial: Option<InitialState>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Initial Jacobi value; defaults to the first coordinate direction.
    #[serde(default)]
    pub xi0: Option<Vec<f64>>,
    /// Initial covariant Jacobi rate; defaults to zero.
    #[serde(default)]
    pub dxi0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_step() -> f64 {
    1e-3
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        DynamicsSpec {
            initial: None,
            t_end: default_t_end(),
            step: default_step(),
            xi0: None,
            dxi0: None,
        }
    }
}

fn default_checks() -> Vec<CheckKind> {
    vec![
        CheckKind::Validate,
        CheckKind::TransformLaws,
        CheckKind::Invariants,
    ]
}

/// A complete verification scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    pub samples: SamplesSpec,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub dynamics: Option<DynamicsSpec>,
}

/// Parse a scenario file; schema violations are reported with the JSON
/// field path that caused them.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let scenario: Scenario = serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("{} (at field path `{}`)", e.inner(), e.path()))?;
    Ok(scenario)
}

//! A numerical engine for Finsler geometry on explicit charts.
//!
//! The engine evaluates a Lagrangian L(x, y) through truncated Taylor
//! arithmetic (jets) at a support element, and from its energy E = ½L²
//! derives the metric tensor, Cartan torsion, geodesic spray, the Barthel
//! nonlinear connection, the Cartan and Berwald linear connections, and
//! their curvature tensors — all as exact derivatives of the jet expansion,
//! with no finite differencing in the main path.
//!
//! Its centerpiece is the conformal-change machinery: given a base model
//! and a factor σ(x), it forms the lifted model e^{2σ}-scaling the energy,
//! computes closed-form difference blocks for every connection and
//! curvature, and verifies the predicted transformation law of each object
//! against an independent direct evaluation on the lifted model. A
//! companion invariant suite checks the objects that stay fixed (strictly,
//! with an e^{2σ} weight, or conditionally under vanishing hypotheses),
//! and trajectory-level checks do the same for geodesics and Jacobi
//! fields.
//!
//! # Layout
//!
//! - [`jets`]: truncated multivariate Taylor arithmetic and support
//!   elements on the slit tangent bundle.
//! - [`lagrangian`]: model families (Euclidean, Riemannian/sphere, Randers,
//!   quartic), conformal factors, lifting, and sampling.
//! - [`block`]: dense value- and jet-valued tensor blocks.
//! - [`tensors`]: metric, Cartan torsion, angular metric, fundamental form.
//! - [`connections`]: spray coefficients, Barthel/Cartan/Berwald
//!   connections, covariant derivatives.
//! - [`curvature`]: nonlinear-connection curvature, the three curvature
//!   tensors of each linear connection, Ricci contractions, the stretch
//!   obstruction tensor.
//! - [`conformal`]: difference blocks, transformation-law verification,
//!   invariant suite, homothety and conformality tests.
//! - [`dynamics`]: geodesic and Jacobi integration and conformal
//!   correspondence checks along trajectories.

pub mod block;
pub mod conformal;
pub mod connections;
pub mod curvature;
pub mod dynamics;
pub mod error;
pub mod jets;
pub mod lagrangian;
mod linalg;
pub(crate) mod site;
pub mod tensors;

pub use block::{JetBlock, TensorBlock, Variance};
pub use conformal::{
    conformal_deltas, conformality_test, homothety_test, invariant_suite, orientation_probe,
    verify_transformation_laws, verify_transformation_laws_between, ConformalDeltas,
    ConformalityReport, HomothetyReport, InvariantReport, InvariantSuiteReport, LawReport,
    LawSuiteReport, SigmaSnapshot, CONDITION_LIMIT,
};
pub use connections::{
    berwald_cartan_residual, connection_coefficients, covariant_derivative, spray_coefficients,
    ConnectionCoeffs, ConnectionKind, DerivativeKind, SprayData,
};
pub use curvature::{
    barthel_curvature, curvature_set, ricci_scalars, t_tensor, CurvatureSet, RicciSet,
};
pub use dynamics::{
    geodesic_correspondence, geodesic_integrate, jacobi_correspondence, jacobi_integrate,
    GeodesicCorrespondence, GeodesicRun, GeodesicState, JacobiCorrespondence, JacobiRun,
    JacobiState, StopReason,
};
pub use error::{FinslerError, Result};
pub use jets::{Jet, MultiIndex, SupportElement, DEFAULT_MAX_ORDER, MAX_ORDER_ENV};
pub use lagrangian::{
    conformal_lift, sample_support, validate_structure, Bump, ConformalFactor, FinslerModel,
    MetricSpec, RandersDrift, SampleSpec, StructureReport,
};
pub use tensors::{
    angular_metric, cartan_tensor, fundamental_form, metric_tensor, CartanData, FundamentalForm,
    MetricData,
};

/// Engine version reported in verification output.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

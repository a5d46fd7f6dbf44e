//! Finsler models: the energy function E(x, y) = L²/2 evaluated through
//! jets, conformal factors σ(x), the conformal lift, support-element
//! sampling, and structural validation (positive definiteness and fiber
//! homogeneity).

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::jets::{jet_eval, Jet, SupportElement};
use crate::linalg::sym_eigenvalues;

/// Base Riemannian metric a_ij(x) used by the riemannian and randers
/// families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MetricSpec {
    /// a = identity (flat space in Cartesian coordinates).
    Identity,
    /// Round 2-sphere of the given radius in polar coordinates (θ, φ):
    /// a = diag(r², r² sin²θ). Only valid with n = 2.
    Sphere { radius: f64 },
}

impl MetricSpec {
    /// Metric component jets a_ij from the base-coordinate jets.
    fn component(&self, x: &[Jet], i: usize, j: usize) -> Jet {
        let proto = &x[0];
        match self {
            MetricSpec::Identity => proto.constant_like(if i == j { 1.0 } else { 0.0 }),
            MetricSpec::Sphere { radius } => {
                let r2 = radius * radius;
                match (i, j) {
                    (0, 0) => proto.constant_like(r2),
                    (1, 1) => {
                        let s = x[0].sin();
                        s.mul(&s).scale(r2)
                    }
                    _ => proto.constant_like(0.0),
                }
            }
        }
    }
}

/// Smooth localized profile amplitude · exp(−‖x − center‖² / width²).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl Bump {
    fn eval_jet(&self, x: &[Jet]) -> Jet {
        let mut q = x[0].constant_like(0.0);
        for (xi, ci) in x.iter().zip(&self.center) {
            let d = xi.sub(&xi.constant_like(*ci));
            q = q.add(&d.mul(&d));
        }
        q.scale(-1.0 / (self.width * self.width))
            .exp()
            .scale(self.amplitude)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let q: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ci)| (xi - ci) * (xi - ci))
            .sum();
        self.amplitude * (-q / (self.width * self.width)).exp()
    }
}

/// Drift one-form b_i(x) of a randers model: a constant covector,
/// optionally modulated by a bump so the geometry picks up base-point
/// dependence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandersDrift {
    pub base: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<Bump>,
}

impl RandersDrift {
    fn component(&self, x: &[Jet], i: usize) -> Jet {
        let b = x[0].constant_like(self.base[i]);
        match &self.modulation {
            None => b,
            Some(bump) => {
                let m = bump.eval_jet(x);
                b.mul(&m.add(&x[0].constant_like(1.0)))
            }
        }
    }

    fn values(&self, x: &[f64]) -> Vec<f64> {
        let factor = match &self.modulation {
            None => 1.0,
            Some(bump) => 1.0 + bump.eval(x),
        };
        self.base.iter().map(|b| b * factor).collect()
    }
}

/// Conformal factor σ(x) — a function of the base point only.
#[derive(Clone)]
pub enum ConformalFactor {
    /// σ ≡ c. The lift is a homothety.
    Constant(f64),
    /// σ = gradient · x + offset.
    Linear { gradient: Vec<f64>, offset: f64 },
    /// Localized Gaussian profile.
    Bump(Bump),
    /// Arbitrary σ supplied as a jet program over the n base-coordinate
    /// jets.
    Custom(Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>),
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalFactor::Constant(c) => write!(f, "Constant({c})"),
            ConformalFactor::Linear { gradient, offset } => {
                write!(f, "Linear {{ gradient: {gradient:?}, offset: {offset} }}")
            }
            ConformalFactor::Bump(b) => write!(f, "Bump({b:?})"),
            ConformalFactor::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ConformalFactor {
    /// σ as a jet, built from the base-coordinate jets (the first n
    /// coordinates of the slit-bundle space, so ∂σ/∂y = 0 automatically).
    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        match self {
            ConformalFactor::Constant(c) => x[0].constant_like(*c),
            ConformalFactor::Linear { gradient, offset } => {
                let mut s = x[0].constant_like(*offset);
                for (xi, gi) in x.iter().zip(gradient) {
                    s = s.add(&xi.scale(*gi));
                }
                s
            }
            ConformalFactor::Bump(b) => b.eval_jet(x),
            ConformalFactor::Custom(f) => f(x),
        }
    }

    /// σ value at a base point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            ConformalFactor::Constant(c) => *c,
            ConformalFactor::Linear { gradient, offset } => {
                offset + x.iter().zip(gradient).map(|(a, b)| a * b).sum::<f64>()
            }
            ConformalFactor::Bump(b) => b.eval(x),
            ConformalFactor::Custom(_) => {
                let (v, _) = self.eval_with_gradient(x);
                v
            }
        }
    }

    /// σ and ∂σ/∂x at a base point, through order-1 jets.
    pub fn eval_with_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = x.len();
        let space = crate::jets::JetSpace::get(n, 1);
        let coords = Jet::coordinates(&space, x, 1);
        let jet = self.eval_jet(&coords);
        let grad = (0..n)
            .map(|v| {
                jet.partial(&crate::jets::MultiIndex::unit(n, v))
                    .expect("order-1 jet carries first partials")
            })
            .collect();
        (jet.value(), grad)
    }
}

/// Energy program of a custom model: receives the 2n slit-bundle
/// coordinate jets (x first, then y) and returns the jet of L².
pub type EnergyProgram = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;

#[derive(Clone)]
enum ModelKind {
    /// L² = Σ (yⁱ)².
    Euclidean,
    /// L² = a_ij(x) yⁱ yʲ.
    Riemannian(MetricSpec),
    /// L = √(a_ij yⁱ yʲ) + b_i(x) yⁱ, with ‖b‖_a < 1 for positive
    /// definiteness.
    Randers { metric: MetricSpec, drift: RandersDrift },
    /// L² = Σ (yⁱ)⁴ — deliberately *not* 2-homogeneous in E; used to
    /// exercise the structure validator.
    Quartic,
    /// L² supplied by the caller.
    Custom(EnergyProgram),
    /// e^{2σ} × base energy: the conformal lift.
    Lifted {
        base: Arc<FinslerModel>,
        sigma: ConformalFactor,
    },
}

/// A Finsler model: dimension plus the recipe for E(x, y).
#[derive(Clone)]
pub struct FinslerModel {
    dim: usize,
    kind: ModelKind,
}

impl fmt::Debug for FinslerModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinslerModel {{ n: {}, family: {} }}", self.dim, self.family())
    }
}

impl FinslerModel {
    pub fn euclidean(dim: usize) -> FinslerModel {
        FinslerModel {
            dim,
            kind: ModelKind::Euclidean,
        }
    }

    pub fn riemannian(dim: usize, metric: MetricSpec) -> Result<FinslerModel> {
        if matches!(metric, MetricSpec::Sphere { .. }) && dim != 2 {
            return Err(FinslerError::Config(
                "sphere metric is a 2-dimensional chart".into(),
            ));
        }
        Ok(FinslerModel {
            dim,
            kind: ModelKind::Riemannian(metric),
        })
    }

    /// Round sphere of the given radius, in polar coordinates.
    pub fn sphere(radius: f64) -> FinslerModel {
        FinslerModel {
            dim: 2,
            kind: ModelKind::Riemannian(MetricSpec::Sphere { radius }),
        }
    }

    pub fn randers(dim: usize, metric: MetricSpec, drift: RandersDrift) -> Result<FinslerModel> {
        if matches!(metric, MetricSpec::Sphere { .. }) && dim != 2 {
            return Err(FinslerError::Config(
                "sphere metric is a 2-dimensional chart".into(),
            ));
        }
        if drift.base.len() != dim {
            return Err(FinslerError::DimMismatch {
                expected: dim,
                got: drift.base.len(),
            });
        }
        Ok(FinslerModel {
            dim,
            kind: ModelKind::Randers { metric, drift },
        })
    }

    /// Quartic pseudo-model; fails the homogeneity check on purpose.
    pub fn quartic(dim: usize) -> FinslerModel {
        FinslerModel {
            dim,
            kind: ModelKind::Quartic,
        }
    }

    pub fn custom(dim: usize, energy_sq: EnergyProgram) -> FinslerModel {
        FinslerModel {
            dim,
            kind: ModelKind::Custom(energy_sq),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Short family label for reports.
    pub fn family(&self) -> &'static str {
        match &self.kind {
            ModelKind::Euclidean => "euclidean",
            ModelKind::Riemannian(_) => "riemannian",
            ModelKind::Randers { .. } => "randers",
            ModelKind::Quartic => "quartic",
            ModelKind::Custom(_) => "custom",
            ModelKind::Lifted { .. } => "conformal-lift",
        }
    }

    /// The conformal factor if this model is a lift, with its base model.
    pub fn as_lift(&self) -> Option<(&FinslerModel, &ConformalFactor)> {
        match &self.kind {
            ModelKind::Lifted { base, sigma } => Some((base, sigma)),
            _ => None,
        }
    }

    /// E = L²/2 as a jet of the given order at a support element.
    pub fn energy_jet(&self, u: &SupportElement, order: usize) -> Result<Jet> {
        if u.dim() != self.dim {
            return Err(FinslerError::DimMismatch {
                expected: self.dim,
                got: u.dim(),
            });
        }
        jet_eval(|coords| self.energy_from_coords(coords), u, order)
    }

    /// Energy program over prebuilt coordinate jets (x jets first, then y).
    pub(crate) fn energy_from_coords(&self, coords: &[Jet]) -> Jet {
        let n = self.dim;
        let (x, y) = coords.split_at(n);
        match &self.kind {
            ModelKind::Euclidean => {
                let mut e = y[0].mul(&y[0]);
                for yi in &y[1..] {
                    e = e.add(&yi.mul(yi));
                }
                e.scale(0.5)
            }
            ModelKind::Riemannian(metric) => {
                let mut e = x[0].constant_like(0.0);
                for i in 0..n {
                    for j in 0..n {
                        let a = metric.component(x, i, j);
                        e = e.add(&a.mul(&y[i]).mul(&y[j]));
                    }
                }
                e.scale(0.5)
            }
            ModelKind::Randers { metric, drift } => {
                let mut alpha2 = x[0].constant_like(0.0);
                for i in 0..n {
                    for j in 0..n {
                        let a = metric.component(x, i, j);
                        alpha2 = alpha2.add(&a.mul(&y[i]).mul(&y[j]));
                    }
                }
                let alpha = alpha2.sqrt();
                let mut beta = x[0].constant_like(0.0);
                for i in 0..n {
                    beta = beta.add(&drift.component(x, i).mul(&y[i]));
                }
                let l = alpha.add(&beta);
                l.mul(&l).scale(0.5)
            }
            ModelKind::Quartic => {
                let mut l2 = x[0].constant_like(0.0);
                for yi in y {
                    let sq = yi.mul(yi);
                    l2 = l2.add(&sq.mul(&sq));
                }
                l2.scale(0.5)
            }
            ModelKind::Custom(program) => program(coords).scale(0.5),
            ModelKind::Lifted { base, sigma } => {
                let e = base.energy_from_coords(coords);
                let factor = sigma.eval_jet(x).scale(2.0).exp();
                e.mul(&factor)
            }
        }
    }

    /// E value at plain coordinates (order-zero jet path).
    pub fn energy_value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let u = SupportElement::new(x.to_vec(), y.to_vec())?;
        Ok(self.energy_jet(&u, 0)?.value())
    }

    /// Whether a base point sits inside the model's coordinate chart
    /// (sphere polar coordinates degenerate at θ ∈ {0, π}).
    pub fn chart_ok(&self, x: &[f64]) -> bool {
        const MARGIN: f64 = 1e-2;
        match &self.kind {
            ModelKind::Riemannian(MetricSpec::Sphere { .. })
            | ModelKind::Randers {
                metric: MetricSpec::Sphere { .. },
                ..
            } => x[0] > MARGIN && x[0] < std::f64::consts::PI - MARGIN,
            ModelKind::Lifted { base, .. } => base.chart_ok(x),
            _ => true,
        }
    }

    /// Fiber directions worth probing during validation beyond random ones.
    /// For randers models the metric first degenerates opposite the drift,
    /// so aim straight at the weak spot.
    fn probe_directions(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match &self.kind {
            ModelKind::Randers { drift, .. } => {
                let b = drift.values(x);
                let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    vec![b.iter().map(|v| -v / norm).collect()]
                } else {
                    vec![]
                }
            }
            ModelKind::Lifted { base, .. } => base.probe_directions(x),
            _ => vec![],
        }
    }
}

/// Rescale a model by e^{2σ(x)} at the energy level. All downstream
/// geometry of the lifted model is computed by the same pipeline as the
/// base model's.
pub fn conformal_lift(model: &FinslerModel, sigma: &ConformalFactor) -> FinslerModel {
    FinslerModel {
        dim: model.dim,
        kind: ModelKind::Lifted {
            base: Arc::new(model.clone()),
            sigma: sigma.clone(),
        },
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Deterministic support-element sampling plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    /// Axis-aligned base box, one [lo, hi] pair per coordinate.
    pub base_box: Vec<[f64; 2]>,
    /// Fiber length drawn uniformly from [lo, hi]; direction is uniform on
    /// the sphere.
    pub fiber_radius: [f64; 2],
}

impl SampleSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.base_box.len() != dim {
            return Err(FinslerError::DimMismatch {
                expected: dim,
                got: self.base_box.len(),
            });
        }
        if self.base_box.iter().any(|[lo, hi]| !(lo <= hi)) {
            return Err(FinslerError::Config("base box has lo > hi".into()));
        }
        let [rlo, rhi] = self.fiber_radius;
        if !(0.0 < rlo && rlo <= rhi) {
            return Err(FinslerError::Config(
                "fiber radius range must satisfy 0 < lo <= hi".into(),
            ));
        }
        Ok(())
    }
}

/// Standard normal via Box–Muller, consuming exactly two uniforms.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Draw support elements inside the sampling window, rejecting base points
/// that leave the model's chart.
pub fn sample_support(model: &FinslerModel, spec: &SampleSpec) -> Result<Vec<SupportElement>> {
    spec.validate(model.dim())?;
    let n = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let mut x = vec![0.0; n];
        let mut tries = 0;
        loop {
            for (xi, [lo, hi]) in x.iter_mut().zip(&spec.base_box) {
                *xi = lo + rng.gen::<f64>() * (hi - lo);
            }
            if model.chart_ok(&x) {
                break;
            }
            tries += 1;
            if tries > 10_000 {
                return Err(FinslerError::Config(
                    "base box lies outside the model's coordinate chart".into(),
                ));
            }
        }
        let mut y: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let mut norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        while norm < 1e-12 {
            y = (0..n).map(|_| normal(&mut rng)).collect();
            norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let [rlo, rhi] = spec.fiber_radius;
        let r = rlo + rng.gen::<f64>() * (rhi - rlo);
        for v in &mut y {
            *v *= r / norm;
        }
        out.push(SupportElement::new(x, y)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Structure validation
// ---------------------------------------------------------------------------

/// Outcome of sampling-based structural checks on a model.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub samples_checked: usize,
    /// Smallest metric eigenvalue seen across all samples and probes.
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
    /// A support element witnessing the degeneracy, when one was found.
    pub degenerate_witness: Option<SupportElement>,
    /// max over samples of |y·∂̇E − 2E| / L — zero iff E is fiberwise
    /// 2-homogeneous.
    pub max_homogeneity_residual: f64,
    pub homogeneous: bool,
    /// Largest metric condition number seen (∞-safe: capped at 1e300).
    pub max_condition: f64,
}

impl StructureReport {
    pub fn ok(&self) -> bool {
        self.positive_definite && self.homogeneous
    }
}

/// Tolerance on the (exact-in-theory) homogeneity residual; jets make it
/// roundoff-level for genuine metrics.
pub const HOMOGENEITY_TOL: f64 = 1e-8;

/// Check positive definiteness of g and 2-homogeneity of E at each sample
/// (plus model-specific weak-spot probes).
pub fn validate_structure(
    model: &FinslerModel,
    samples: &[SupportElement],
) -> Result<StructureReport> {
    let n = model.dim();
    let mut min_eig = f64::INFINITY;
    let mut witness: Option<SupportElement> = None;
    let mut max_res: f64 = 0.0;
    let mut max_cond: f64 = 0.0;
    let mut checked = 0usize;

    let probe = |u: &SupportElement,
                     min_eig: &mut f64,
                     witness: &mut Option<SupportElement>,
                     max_res: &mut f64,
                     max_cond: &mut f64|
     -> Result<()> {
        let e = model.energy_jet(u, 2)?;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = e.partial_vars(&[n + i, n + j]);
            }
        }
        let eigs = sym_eigenvalues(&g, n);
        let (lo, hi) = eigs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &l| {
                (a.min(l), b.max(l))
            });
        if lo < *min_eig {
            *min_eig = lo;
            if lo <= 0.0 && witness.is_none() {
                *witness = Some(u.clone());
            }
        }
        let cond = if lo > 0.0 { hi / lo } else { 1e300 };
        *max_cond = max_cond.max(cond);

        // Euler's relation for degree 2: y·∂̇E = 2E. Normalize by L when
        // the energy is positive, so the residual is scale-free.
        let e0 = e.value();
        let mut radial = 0.0;
        for (i, yi) in u.y().iter().enumerate() {
            radial += yi * e.partial_vars(&[n + i]);
        }
        let scale = if e0 > 0.0 { (2.0 * e0).sqrt() } else { 1.0 };
        *max_res = max_res.max((radial - 2.0 * e0).abs() / scale);
        Ok(())
    };

    for u in samples {
        probe(u, &mut min_eig, &mut witness, &mut max_res, &mut max_cond)?;
        checked += 1;
        for dir in model.probe_directions(u.x()) {
            let probe_u = SupportElement::new(u.x().to_vec(), dir)?;
            probe(
                &probe_u,
                &mut min_eig,
                &mut witness,
                &mut max_res,
                &mut max_cond,
            )?;
            checked += 1;
        }
    }

    Ok(StructureReport {
        samples_checked: checked,
        min_eigenvalue: min_eig,
        positive_definite: min_eig > 0.0,
        degenerate_witness: witness,
        max_homogeneity_residual: max_res,
        homogeneous: max_res < HOMOGENEITY_TOL,
        max_condition: max_cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> SampleSpec {
        SampleSpec {
            count: 40,
            seed: 7,
            base_box: vec![[-1.0, 1.0]; n],
            fiber_radius: [0.5, 2.0],
        }
    }

    #[test]
    fn euclidean_is_positive_definite_and_homogeneous() {
        let model = FinslerModel::euclidean(3);
        let samples = sample_support(&model, &spec(3)).unwrap();
        let report = validate_structure(&model, &samples).unwrap();
        assert!(report.positive_definite);
        assert!(report.homogeneous, "residual {}", report.max_homogeneity_residual);
        assert!((report.min_eigenvalue - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mild_randers_passes_strong_drift_fails() {
        let metric = MetricSpec::Identity;
        let ok = FinslerModel::randers(
            2,
            metric.clone(),
            RandersDrift {
                base: vec![0.5, 0.0],
                modulation: None,
            },
        )
        .unwrap();
        let samples = sample_support(&ok, &spec(2)).unwrap();
        let report = validate_structure(&ok, &samples).unwrap();
        assert!(report.positive_definite, "min eig {}", report.min_eigenvalue);
        assert!(report.homogeneous);

        let bad = FinslerModel::randers(
            2,
            metric,
            RandersDrift {
                base: vec![1.5, 0.0],
                modulation: None,
            },
        )
        .unwrap();
        let samples = sample_support(&bad, &spec(2)).unwrap();
        let report = validate_structure(&bad, &samples).unwrap();
        assert!(!report.positive_definite);
        let witness = report.degenerate_witness.expect("witness expected");
        // The degeneracy shows up for fiber vectors opposing the drift.
        assert!(witness.y()[0] < 0.0);
    }

    #[test]
    fn quartic_fails_homogeneity_with_unit_scaled_residual() {
        let model = FinslerModel::quartic(2);
        let samples = sample_support(&model, &spec(2)).unwrap();
        let report = validate_structure(&model, &samples).unwrap();
        assert!(!report.homogeneous);
        // y·∂̇E − 2E = 2E for a quartic, so the L-normalized residual is L
        // itself — order of the fiber radius, nowhere near roundoff.
        assert!(report.max_homogeneity_residual > 0.2);
    }

    #[test]
    fn lift_multiplies_energy_by_exp_two_sigma() {
        let model = FinslerModel::euclidean(2);
        let sigma = ConformalFactor::Linear {
            gradient: vec![0.3, -0.7],
            offset: 0.1,
        };
        let lifted = conformal_lift(&model, &sigma);
        let u = SupportElement::new(vec![0.4, -0.2], vec![1.0, 2.0]).unwrap();
        let e = model.energy_value(u.x(), u.y()).unwrap();
        let el = lifted.energy_value(u.x(), u.y()).unwrap();
        let s = sigma.eval(u.x());
        assert!((el - e * (2.0 * s).exp()).abs() < 1e-12 * el.abs());
    }

    #[test]
    fn sphere_chart_rejects_poles_and_sampling_respects_it() {
        let model = FinslerModel::sphere(1.0);
        assert!(!model.chart_ok(&[0.0, 1.0]));
        assert!(model.chart_ok(&[1.0, 1.0]));
        let spec = SampleSpec {
            count: 25,
            seed: 3,
            base_box: vec![[-0.5, 3.0], [0.0, 6.0]],
            fiber_radius: [0.5, 1.5],
        };
        let samples = sample_support(&model, &spec).unwrap();
        assert!(samples.iter().all(|u| model.chart_ok(u.x())));
    }

    #[test]
    fn conformal_factor_gradient_matches_closed_form() {
        let sigma = ConformalFactor::Bump(Bump {
            amplitude: 0.4,
            center: vec![0.2, -0.1],
            width: 1.2,
        });
        let x = [0.5, 0.3];
        let (v, grad) = sigma.eval_with_gradient(&x);
        let w2 = 1.2 * 1.2;
        let q = (0.3f64).powi(2) + (0.4f64).powi(2);
        let want = 0.4 * (-q / w2).exp();
        assert!((v - want).abs() < 1e-14);
        assert!((grad[0] - want * (-2.0 * 0.3 / w2)).abs() < 1e-13);
        assert!((grad[1] - want * (-2.0 * 0.4 / w2)).abs() < 1e-13);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let model = FinslerModel::euclidean(3);
        let a = sample_support(&model, &spec(3)).unwrap();
        let b = sample_support(&model, &spec(3)).unwrap();
        assert_eq!(a, b);
        let mut other = spec(3);
        other.seed = 8;
        let c = sample_support(&model, &other).unwrap();
        assert_ne!(a, c);
    }
}

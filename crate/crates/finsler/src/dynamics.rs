//! Geodesic and Jacobi-field integration, and trajectory-level checks of
//! how conformal lifts act on the dynamics.
//!
//! Geodesics solve ẍ^h + 2G^h(x, ẋ) = 0 with a fixed-step fourth-order
//! Runge–Kutta scheme. Jacobi fields are integrated jointly with the base
//! curve in first-order covariant form: ξ̇^h = η^h − Γ^h_{mj}ξ^m ẋ^j,
//! η̇^h = −ℜ^h_{ij}ẋ^j ξ^i... with the curvature term M^h_i = R^h_{kij}ẋ^kẋ^j
//! obtained as the ẋ-contraction of the nonlinear-connection curvature.

use serde::Serialize;

use crate::conformal::{conformal_deltas, spray_difference_values};
use crate::error::{FinslerError, Result};
use crate::jets::SupportElement;
use crate::lagrangian::{conformal_lift, ConformalFactor, FinslerModel};
use crate::site::{engine_order, spray_values, SiteJets, ORDER_CONN, ORDER_CURV};

/// Fiber vectors shorter than this abort integration (the model is only
/// defined on the slit bundle).
const FIBER_FLOOR: f64 = 1e-8;

/// One recorded point of a geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// One recorded point of a Jacobi field; `dxi` is the covariant rate
/// Dξ/dt, not the plain time derivative.
#[derive(Debug, Clone, Serialize)]
pub struct JacobiState {
    pub t: f64,
    pub xi: Vec<f64>,
    pub dxi: Vec<f64>,
}

/// Why an integration ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    /// Reached the requested final time.
    Completed,
    /// Left the valid chart of the model.
    ChartExit { t: f64 },
    /// Fiber vector shrank below the slit-bundle floor.
    FiberCollapse { t: f64 },
    /// A stage evaluation produced a non-finite or degenerate state.
    NonFinite { t: f64 },
}

/// A completed (possibly truncated) geodesic integration.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicRun {
    pub states: Vec<GeodesicState>,
    pub stop: StopReason,
    pub step: f64,
    /// max |E(t) − E(0)| / E(0) over recorded states — the energy is a
    /// first integral, so this measures integrator quality.
    pub energy_drift: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|a| a.is_finite())
}

/// Integrate the geodesic equation from a support element for time `t_end`
/// with fixed step `step` (the final step is shortened to land exactly).
pub fn geodesic_integrate(
    model: &FinslerModel,
    u0: &SupportElement,
    t_end: f64,
    step: f64,
) -> Result<GeodesicRun> {
    if !(t_end > 0.0 && t_end.is_finite() && step > 0.0 && step.is_finite()) {
        return Err(FinslerError::Config(format!(
            "integration span and step must be positive and finite (got t_end = {t_end}, step = {step})"
        )));
    }
    if u0.dim() != model.dim() {
        return Err(FinslerError::DimMismatch {
            expected: model.dim(),
            got: u0.dim(),
        });
    }
    if !model.chart_ok(u0.x()) {
        return Err(FinslerError::Config(
            "initial base point lies outside the model's chart".into(),
        ));
    }
    let n = model.dim();
    let f = |z: &[f64]| -> Result<Vec<f64>> {
        let (x, y) = z.split_at(n);
        let g = spray_values(model, x, y)?;
        let mut dz = vec![0.0; 2 * n];
        dz[..n].copy_from_slice(y);
        for h in 0..n {
            dz[n + h] = -2.0 * g[h];
        }
        Ok(dz)
    };

    let mut z: Vec<f64> = u0.coords();
    let mut t = 0.0f64;
    let mut states = vec![GeodesicState {
        t,
        x: u0.x().to_vec(),
        y: u0.y().to_vec(),
    }];
    let mut stop = StopReason::Completed;
    while t < t_end * (1.0 - 1e-14) {
        let h = step.min(t_end - t);
        if norm(&z[n..]) < FIBER_FLOOR {
            stop = StopReason::FiberCollapse { t };
            break;
        }
        let next = match rk4(&f, &z, h) {
            Ok(next) => next,
            Err(_) => {
                stop = StopReason::NonFinite { t };
                break;
            }
        };
        if !all_finite(&next) {
            stop = StopReason::NonFinite { t };
            break;
        }
        t += h;
        if !model.chart_ok(&next[..n]) {
            stop = StopReason::ChartExit { t };
            break;
        }
        z = next;
        states.push(GeodesicState {
            t,
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        });
    }

    let e0 = model.energy_value(u0.x(), u0.y())?;
    let mut drift: f64 = 0.0;
    for s in &states {
        let e = model.energy_value(&s.x, &s.y)?;
        drift = drift.max((e - e0).abs() / e0);
    }
    Ok(GeodesicRun {
        states,
        stop,
        step,
        energy_drift: drift,
    })
}

fn rk4<F>(f: &F, z: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let add_scaled = |z: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        z.iter().zip(k).map(|(a, b)| a + s * b).collect()
    };
    let k1 = f(z)?;
    let k2 = f(&add_scaled(z, &k1, 0.5 * h))?;
    let k3 = f(&add_scaled(z, &k2, 0.5 * h))?;
    let k4 = f(&add_scaled(z, &k3, h))?;
    Ok(z.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Spray, Γ·ẋ, and the Jacobi operator M^h_i = ℜ^h_{ij}ẋ^j at one point of
/// the slit bundle.
fn stage_geometry(model: &FinslerModel, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = model.dim();
    let u = SupportElement::new(x.to_vec(), y.to_vec())?;
    let mut site = SiteJets::new(model, &u, ORDER_CONN)?;
    site.ensure_conn()?;
    let sp = site.spray_stage();
    let spray: Vec<f64> = (0..n).map(|h| sp.spray.get(&[h]).value()).collect();
    let cn = site.conn_stage();
    let mut gamma_dot = vec![0.0; n * n];
    for h in 0..n {
        for m in 0..n {
            gamma_dot[h * n + m] = (0..n)
                .map(|j| cn.gamma.get(&[h, m, j]).value() * y[j])
                .sum();
        }
    }
    // ℜ^h_ij = δ_i G^h_j − δ_j G^h_i, then M^h_i = ℜ^h_ij y^j
    // (positive on the round sphere, giving oscillatory Jacobi fields).
    let mut m_matrix = vec![0.0; n * n];
    for h in 0..n {
        for i in 0..n {
            m_matrix[h * n + i] = (0..n)
                .map(|j| {
                    y[j] * (site.delta_value(sp.g1.get(&[h, j]), i)
                        - site.delta_value(sp.g1.get(&[h, i]), j))
                })
                .sum();
        }
    }
    Ok((spray, gamma_dot, m_matrix))
}

/// A completed (possibly truncated) Jacobi integration, with the base
/// geodesic it was carried along.
#[derive(Debug, Clone, Serialize)]
pub struct JacobiRun {
    pub states: Vec<JacobiState>,
    pub base: Vec<GeodesicState>,
    pub stop: StopReason,
    pub step: f64,
}

/// Integrate the Jacobi equation D²ξ/dt² + M·ξ = 0 along a geodesic,
/// jointly re-advancing the base state for fourth-order accuracy. `dxi0` is
/// the initial covariant rate Dξ/dt(0). Refuses runs that do not satisfy
/// the geodesic equation.
pub fn jacobi_integrate(
    model: &FinslerModel,
    run: &GeodesicRun,
    xi0: &[f64],
    dxi0: &[f64],
) -> Result<JacobiRun> {
    engine_order(ORDER_CONN)?;
    let n = model.dim();
    if xi0.len() != n || dxi0.len() != n {
        return Err(FinslerError::DimMismatch {
            expected: n,
            got: xi0.len().max(dxi0.len()),
        });
    }
    if run.states.len() < 3 {
        return Err(FinslerError::Config(
            "base run too short for Jacobi integration (need at least 3 states)".into(),
        ));
    }
    // Spot-check that the supplied curve solves the geodesic equation:
    // central difference of y against −2G at interior nodes.
    let h = run.step;
    let stride = ((run.states.len() - 2) / 16).max(1);
    for w in (1..run.states.len() - 1).step_by(stride) {
        let (prev, mid, next) = (&run.states[w - 1], &run.states[w], &run.states[w + 1]);
        // Only check interior nodes on the uniform grid.
        if (next.t - prev.t - 2.0 * h).abs() > 1e-9 * h {
            continue;
        }
        let g = spray_values(model, &mid.x, &mid.y)?;
        let scale = 1.0f64.max(2.0 * g.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let tol = (100.0 * h * h * scale).max(1e-5 * scale);
        for i in 0..n {
            let ydot = (next.y[i] - prev.y[i]) / (2.0 * h);
            if (ydot + 2.0 * g[i]).abs() > tol {
                return Err(FinslerError::Config(format!(
                    "supplied curve is not a geodesic: residual {:.3e} at t = {:.4} exceeds {:.3e}",
                    (ydot + 2.0 * g[i]).abs(),
                    mid.t,
                    tol
                )));
            }
        }
    }

    let t_end = run.states.last().expect("nonempty").t;
    let first = &run.states[0];
    // Joint state (x, y, ξ, η).
    let f = |z: &[f64]| -> Result<Vec<f64>> {
        let x = &z[..n];
        let y = &z[n..2 * n];
        let xi = &z[2 * n..3 * n];
        let eta = &z[3 * n..];
        let (spray, gamma_dot, m_matrix) = stage_geometry(model, x, y)?;
        let mut dz = vec![0.0; 4 * n];
        dz[..n].copy_from_slice(y);
        for i in 0..n {
            dz[n + i] = -2.0 * spray[i];
            let mut dxi = eta[i];
            let mut deta = 0.0;
            for m in 0..n {
                dxi -= gamma_dot[i * n + m] * xi[m];
                deta -= m_matrix[i * n + m] * xi[m] + gamma_dot[i * n + m] * eta[m];
            }
            dz[2 * n + i] = dxi;
            dz[3 * n + i] = deta;
        }
        Ok(dz)
    };

    let mut z = Vec::with_capacity(4 * n);
    z.extend_from_slice(&first.x);
    z.extend_from_slice(&first.y);
    z.extend_from_slice(xi0);
    z.extend_from_slice(dxi0);
    let mut t = 0.0f64;
    let mut states = vec![JacobiState {
        t,
        xi: xi0.to_vec(),
        dxi: dxi0.to_vec(),
    }];
    let mut base = vec![GeodesicState {
        t,
        x: first.x.clone(),
        y: first.y.clone(),
    }];
    let mut stop = StopReason::Completed;
    while t < t_end * (1.0 - 1e-14) {
        let hs = h.min(t_end - t);
        if norm(&z[n..2 * n]) < FIBER_FLOOR {
            stop = StopReason::FiberCollapse { t };
            break;
        }
        let next = match rk4(&f, &z, hs) {
            Ok(next) => next,
            Err(_) => {
                stop = StopReason::NonFinite { t };
                break;
            }
        };
        if !all_finite(&next) {
            stop = StopReason::NonFinite { t };
            break;
        }
        t += hs;
        if !model.chart_ok(&next[..n]) {
            stop = StopReason::ChartExit { t };
            break;
        }
        z = next;
        states.push(JacobiState {
            t,
            xi: z[2 * n..3 * n].to_vec(),
            dxi: z[3 * n..].to_vec(),
        });
        base.push(GeodesicState {
            t,
            x: z[..n].to_vec(),
            y: z[n..2 * n].to_vec(),
        });
    }
    Ok(JacobiRun {
        states,
        base,
        stop,
        step: h,
    })
}

/// How a conformal lift acts on one geodesic: the residual of the lifted
/// geodesic equation along the base curve, measured through two routes.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicCorrespondence {
    /// max 2|B^h| along the curve (closed-form route).
    pub max_difference_formula: f64,
    /// max 2|G̃^h − G^h| along the curve (direct route).
    pub max_direct_residual: f64,
    /// Disagreement between the two routes, 2|（G̃ − G) + B|.
    pub max_route_disagreement: f64,
    /// True when the curve remains a lifted-model geodesic (both residuals
    /// within tolerance).
    pub preserved: bool,
    pub tolerance: f64,
    pub points_checked: usize,
}

/// Evaluate the lifted geodesic equation along a base geodesic. Along the
/// curve ẏ = −2G, so the lifted residual ẍ + 2G̃ equals 2(G̃ − G), which the
/// difference blocks predict as −2B.
pub fn geodesic_correspondence(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    run: &GeodesicRun,
    tol: f64,
) -> Result<GeodesicCorrespondence> {
    let lifted = conformal_lift(model, sigma);
    let stride = (run.states.len() / 1000).max(1);
    let mut max_formula: f64 = 0.0;
    let mut max_direct: f64 = 0.0;
    let mut max_disagreement: f64 = 0.0;
    let mut points = 0usize;
    for s in run.states.iter().step_by(stride) {
        let b = spray_difference_values(model, sigma, &s.x, &s.y)?;
        let g_base = spray_values(model, &s.x, &s.y)?;
        let g_lift = spray_values(&lifted, &s.x, &s.y)?;
        for h in 0..model.dim() {
            let direct = 2.0 * (g_lift[h] - g_base[h]);
            max_formula = max_formula.max(2.0 * b[h].abs());
            max_direct = max_direct.max(direct.abs());
            max_disagreement = max_disagreement.max((direct + 2.0 * b[h]).abs());
        }
        points += 1;
    }
    Ok(GeodesicCorrespondence {
        max_difference_formula: max_formula,
        max_direct_residual: max_direct,
        max_route_disagreement: max_disagreement,
        preserved: max_formula <= tol && max_direct <= tol,
        tolerance: tol,
        points_checked: points,
    })
}

/// Whether a conformal lift carries Jacobi fields of the base to Jacobi
/// fields of the lift along one geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct JacobiCorrespondence {
    /// max |H^h_{kij} ẋ^k ẋ^i| along the curve.
    pub hypothesis_curvature: f64,
    /// max |A^h_{ji} ẋ^i| along the curve (flow contraction of the Cartan
    /// coefficient difference).
    pub hypothesis_contraction: f64,
    pub hypothesis_points: usize,
    /// True when both hypotheses vanish within tolerance; only then is the
    /// trajectory comparison meaningful.
    pub applicable: bool,
    /// max |ξ_base − ξ_lift| over the common time grid (None when not
    /// applicable).
    pub max_xi_divergence: Option<f64>,
    /// Whether the base Jacobi field solves the lifted Jacobi equation
    /// within tolerance (None when not applicable).
    pub preserved: Option<bool>,
    pub tolerance: f64,
    pub note: Option<String>,
}

/// Check the Jacobi-field correspondence along a geodesic: first evaluate
/// the two vanishing hypotheses along the curve; if they hold, integrate
/// the Jacobi equation under both models and compare trajectories.
pub fn jacobi_correspondence(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    run: &GeodesicRun,
    xi0: &[f64],
    dxi0: &[f64],
    tol: f64,
) -> Result<JacobiCorrespondence> {
    engine_order(ORDER_CURV)?;
    let n = model.dim();
    let stride = (run.states.len() / 16).max(1);
    let mut hyp_curv: f64 = 0.0;
    let mut hyp_contr: f64 = 0.0;
    let mut points = 0usize;
    for s in run.states.iter().step_by(stride) {
        let u = SupportElement::new(s.x.clone(), s.y.clone())?;
        let deltas = conformal_deltas(model, sigma, &u)?;
        let cartan = crate::tensors::cartan_tensor(model, &u)?;
        for h in 0..n {
            for j in 0..n {
                let mut hyy = 0.0;
                for k in 0..n {
                    for i in 0..n {
                        hyy += deltas.h_cartan.get(&[h, k, i, j]) * s.y[k] * s.y[i];
                    }
                }
                hyp_curv = hyp_curv.max(hyy.abs());
                // A^h_{ji} ẋ^i = U^h_{ji} ẋ^i + C^h_{jm} ∂̇_iB^m ẋ^i,
                // and ∂̇_iB^m ẋ^i = 2B^m by homogeneity.
                let mut a_flow = 0.0;
                for i in 0..n {
                    a_flow += deltas.u.get(&[h, j, i]) * s.y[i];
                }
                for m in 0..n {
                    a_flow += 2.0 * cartan.mixed.get(&[h, j, m]) * deltas.b.get(&[m]);
                }
                hyp_contr = hyp_contr.max(a_flow.abs());
            }
        }
        points += 1;
    }
    let applicable = hyp_curv <= tol && hyp_contr <= tol;
    if !applicable {
        return Ok(JacobiCorrespondence {
            hypothesis_curvature: hyp_curv,
            hypothesis_contraction: hyp_contr,
            hypothesis_points: points,
            applicable: false,
            max_xi_divergence: None,
            preserved: None,
            tolerance: tol,
            note: Some(format!(
                "not applicable: hypotheses violated along the curve \
                 (curvature contraction {hyp_curv:.3e}, coefficient contraction {hyp_contr:.3e})"
            )),
        });
    }

    let lifted = conformal_lift(model, sigma);
    let base_jac = jacobi_integrate(model, run, xi0, dxi0)?;
    let lift_jac = jacobi_integrate(&lifted, run, xi0, dxi0)?;
    let mut divergence: f64 = 0.0;
    for (a, b) in base_jac.states.iter().zip(lift_jac.states.iter()) {
        for i in 0..n {
            divergence = divergence.max((a.xi[i] - b.xi[i]).abs());
        }
    }
    Ok(JacobiCorrespondence {
        hypothesis_curvature: hyp_curv,
        hypothesis_contraction: hyp_contr,
        hypothesis_points: points,
        applicable: true,
        max_xi_divergence: Some(divergence),
        preserved: Some(divergence <= tol),
        tolerance: tol,
        note: None,
    })
}

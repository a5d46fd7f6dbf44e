//! Spray and connection coefficients, plus covariant differentiation in the
//! adapted frame.
//!
//! Two linear connections are carried: the metrical one with horizontal
//! coefficients Γ^h_ij and vertical coefficients C^h_ij, and the
//! torsion-free one whose horizontal coefficients are the fiber Hessian
//! G^h_ij of the spray and whose vertical coefficients vanish. Both sit over
//! the same nonlinear connection G^h_i = ∂̇_i G^h.

use serde::{Deserialize, Serialize};

use crate::block::{JetBlock, TensorBlock, Variance};
use crate::error::{FinslerError, Result};
use crate::jets::{Jet, SupportElement};
use crate::lagrangian::FinslerModel;
use crate::site::{engine_order, SiteJets, ORDER_CONN, ORDER_SPRAY};

/// Spray coefficients and their first two fiber derivatives.
#[derive(Debug, Clone)]
pub struct SprayData {
    /// G^h.
    pub g: TensorBlock,
    /// Nonlinear connection G^h_i, layout [h][i].
    pub g_i: TensorBlock,
    /// Berwald coefficients G^h_ij, layout [h][i][j].
    pub g_ij: TensorBlock,
    pub site: SupportElement,
}

/// Spray coefficients G^h = ½ γ^h_ij y^i y^j together with the nonlinear
/// connection and the Berwald coefficients they generate.
pub fn spray_coefficients(model: &FinslerModel, u: &SupportElement) -> Result<SprayData> {
    let order = engine_order(ORDER_SPRAY)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_spray()?;
    let n = site.n;
    let sp = site.spray_stage();
    let g = TensorBlock::from_fn(n, vec![Variance::Upper], |idx| sp.spray.get(idx).value());
    let g_i = TensorBlock::from_fn(n, vec![Variance::Upper, Variance::Lower], |idx| {
        sp.g1.get(idx).value()
    });
    let g_ij = TensorBlock::from_fn(
        n,
        vec![Variance::Upper, Variance::Lower, Variance::Lower],
        |idx| sp.g2.get(idx).value(),
    );
    Ok(SprayData {
        g,
        g_i,
        g_ij,
        site: u.clone(),
    })
}

/// Which linear connection a coefficient table belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    /// Metrical connection: horizontal Γ^h_ij, vertical C^h_ij.
    Cartan,
    /// Torsion-free connection: horizontal G^h_ij, vertical zero.
    Berwald,
}

/// Coefficient tables of one linear connection over the nonlinear one.
#[derive(Debug, Clone)]
pub struct ConnectionCoeffs {
    pub kind: ConnectionKind,
    /// Horizontal coefficients, layout [h][i][j].
    pub h_coeffs: TensorBlock,
    /// Vertical coefficients, layout [h][i][j] (zero for Berwald).
    pub v_coeffs: TensorBlock,
    /// Nonlinear connection G^h_i underneath, layout [h][i].
    pub nonlinear: TensorBlock,
    pub site: SupportElement,
}

/// Coefficients of the requested linear connection at a support element.
pub fn connection_coefficients(
    model: &FinslerModel,
    u: &SupportElement,
    kind: ConnectionKind,
) -> Result<ConnectionCoeffs> {
    let order = engine_order(ORDER_CONN)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_conn()?;
    let n = site.n;
    let rank3 = vec![Variance::Upper, Variance::Lower, Variance::Lower];
    let (h_coeffs, v_coeffs) = match kind {
        ConnectionKind::Cartan => (
            TensorBlock::from_fn(n, rank3.clone(), |idx| {
                site.conn_stage().gamma.get(idx).value()
            }),
            TensorBlock::from_fn(n, rank3.clone(), |idx| {
                site.conn_stage().c_mix.get(idx).value()
            }),
        ),
        ConnectionKind::Berwald => (
            TensorBlock::from_fn(n, rank3.clone(), |idx| {
                site.spray_stage().g2.get(idx).value()
            }),
            TensorBlock::zeros(n, rank3.clone()),
        ),
    };
    let nonlinear = TensorBlock::from_fn(n, vec![Variance::Upper, Variance::Lower], |idx| {
        site.spray_stage().g1.get(idx).value()
    });
    Ok(ConnectionCoeffs {
        kind,
        h_coeffs,
        v_coeffs,
        nonlinear,
        site: u.clone(),
    })
}

/// Which covariant derivative to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeKind {
    /// Horizontal derivative of the metrical connection: δ_k plus Γ terms.
    HCartan,
    /// Vertical derivative of the metrical connection: ∂̇_k plus C terms.
    VCartan,
    /// Horizontal derivative of the torsion-free connection: δ_k plus G terms.
    HBerwald,
}

/// Read-only view of the per-site jet pipeline handed to field closures in
/// [`covariant_derivative`]. Field components must be built from these jets
/// (they all live in the same jet space, centered at the site).
pub struct SiteView<'a> {
    site: &'a SiteJets,
}

impl<'a> SiteView<'a> {
    pub fn dim(&self) -> usize {
        self.site.n
    }

    pub fn order(&self) -> usize {
        self.site.order
    }

    /// Coordinate jets: base variables first (0..n), fiber after (n..2n).
    pub fn coordinate_jets(&self) -> &[Jet] {
        &self.site.coords
    }

    /// Energy jet E = L²/2.
    pub fn energy_jet(&self) -> &Jet {
        &self.site.e
    }

    pub fn metric_jet(&self, i: usize, j: usize) -> &Jet {
        self.site.g.get(&[i, j])
    }

    pub fn metric_inverse_jet(&self, i: usize, j: usize) -> &Jet {
        self.site.ginv.get(&[i, j])
    }

    /// Mixed Cartan tensor jet C^h_ij.
    pub fn cartan_mixed_jet(&self, h: usize, i: usize, j: usize) -> &Jet {
        self.site.conn_stage().c_mix.get(&[h, i, j])
    }

    /// Lowered Cartan tensor jet C_ijk.
    pub fn cartan_lowered_jet(&self, i: usize, j: usize, k: usize) -> &Jet {
        self.site.conn_stage().c_low.get(&[i, j, k])
    }

    /// Nonlinear connection jet G^h_i.
    pub fn nonlinear_jet(&self, h: usize, i: usize) -> &Jet {
        self.site.spray_stage().g1.get(&[h, i])
    }

    /// Horizontal coefficient jet of the metrical connection, Γ^h_ij.
    pub fn gamma_jet(&self, h: usize, i: usize, j: usize) -> &Jet {
        self.site.conn_stage().gamma.get(&[h, i, j])
    }

    /// Adapted-frame horizontal derivative δ_j f = ∂_j f − G^m_j ∂̇_m f.
    pub fn horizontal_derivative(&self, f: &Jet, j: usize) -> Jet {
        self.site.delta_jet(f, j)
    }
}

/// Covariant derivative of a tensor field given by a component evaluator.
///
/// `variance` describes the field's slots; the result appends one lower
/// slot for the direction of differentiation. The evaluator receives a
/// [`SiteView`] and must return a [`JetBlock`] of matching rank whose
/// components carry at least one jet order.
pub fn covariant_derivative<F>(
    model: &FinslerModel,
    u: &SupportElement,
    kind: DerivativeKind,
    variance: Vec<Variance>,
    field: F,
) -> Result<TensorBlock>
where
    F: FnOnce(&SiteView) -> Result<JetBlock>,
{
    let order = engine_order(ORDER_CONN)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_conn()?;
    let n = site.n;
    let rank = variance.len();
    let block = field(&SiteView { site: &site })?;
    if block.dim() != n || block.rank() != rank {
        return Err(FinslerError::Config(format!(
            "field evaluator returned a block of dim {} rank {}, expected dim {} rank {}",
            block.dim(),
            block.rank(),
            n,
            rank
        )));
    }

    // Connection coefficient values for the slot corrections.
    let idx2 = |h: usize, i: usize, j: usize| (h * n + i) * n + j;
    let mut coeff = vec![0.0; n * n * n];
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                coeff[idx2(h, i, j)] = match kind {
                    DerivativeKind::HCartan => site.conn_stage().gamma.get(&[h, i, j]).value(),
                    DerivativeKind::VCartan => site.conn_stage().c_mix.get(&[h, i, j]).value(),
                    DerivativeKind::HBerwald => site.spray_stage().g2.get(&[h, i, j]).value(),
                };
            }
        }
    }

    let mut out_variance = variance.clone();
    out_variance.push(Variance::Lower);
    let out = TensorBlock::from_fn(n, out_variance, |idx| {
        let a = &idx[..rank];
        let k = idx[rank];
        let f = block.get(a);
        let mut val = match kind {
            DerivativeKind::HCartan | DerivativeKind::HBerwald => site.delta_value(f, k),
            DerivativeKind::VCartan => f.partial_vars(&[site.dy(k)]),
        };
        for (s, var) in variance.iter().enumerate() {
            let mut swapped = a.to_vec();
            for m in 0..n {
                swapped[s] = m;
                let fv = block.get(&swapped).value();
                match var {
                    Variance::Upper => val += fv * coeff[idx2(a[s], m, k)],
                    Variance::Lower => val -= fv * coeff[idx2(m, a[s], k)],
                }
            }
        }
        val
    });
    Ok(out)
}

/// Max-norm residual of the identity linking the two horizontal coefficient
/// tables: G^h_ij − Γ^h_ij − C^h_{ij|0}, where |0 is the h-Cartan derivative
/// contracted with the fiber vector.
pub fn berwald_cartan_residual(model: &FinslerModel, u: &SupportElement) -> Result<f64> {
    let order = engine_order(ORDER_CONN)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_conn()?;
    let n = site.n;
    let flow = site.cartan_mixed_flow_derivative();
    let idx2 = |h: usize, i: usize, j: usize| (h * n + i) * n + j;
    let mut residual: f64 = 0.0;
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                let g2 = site.spray_stage().g2.get(&[h, i, j]).value();
                let gamma = site.conn_stage().gamma.get(&[h, i, j]).value();
                residual = residual.max((g2 - gamma - flow[idx2(h, i, j)]).abs());
            }
        }
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{MetricSpec, RandersDrift};

    fn support(x: &[f64], y: &[f64]) -> SupportElement {
        SupportElement::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn randers() -> FinslerModel {
        FinslerModel::randers(
            2,
            MetricSpec::Identity,
            RandersDrift {
                base: vec![0.3, -0.1],
                modulation: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn nonlinear_connection_contracts_to_twice_the_spray() {
        // G^h_i y^i = 2 G^h by homogeneity.
        let model = randers();
        let u = support(&[0.2, 0.4], &[1.3, -0.8]);
        let d = spray_coefficients(&model, &u).unwrap();
        for h in 0..2 {
            let contracted: f64 = (0..2).map(|i| d.g_i.get(&[h, i]) * u.y()[i]).sum();
            let twice = 2.0 * d.g.get(&[h]);
            assert!((contracted - twice).abs() < 1e-10 * twice.abs().max(1.0));
        }
    }

    #[test]
    fn berwald_coefficients_contract_to_nonlinear_connection() {
        // G^h_ij y^j = G^h_i by homogeneity.
        let model = randers();
        let u = support(&[-0.5, 0.1], &[0.9, 1.4]);
        let d = spray_coefficients(&model, &u).unwrap();
        for h in 0..2 {
            for i in 0..2 {
                let contracted: f64 = (0..2).map(|j| d.g_ij.get(&[h, i, j]) * u.y()[j]).sum();
                let want = d.g_i.get(&[h, i]);
                assert!((contracted - want).abs() < 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sphere_cartan_connection_is_levi_civita() {
        let model = FinslerModel::sphere(1.0);
        let theta = 1.05;
        let u = support(&[theta, 0.4], &[0.6, -0.3]);
        let c = connection_coefficients(&model, &u, ConnectionKind::Cartan).unwrap();
        // Unit sphere Christoffels: Γ^θ_φφ = −sinθcosθ, Γ^φ_θφ = cotθ.
        assert!((c.h_coeffs.get(&[0, 1, 1]) + theta.sin() * theta.cos()).abs() < 1e-9);
        assert!((c.h_coeffs.get(&[1, 0, 1]) - theta.cos() / theta.sin()).abs() < 1e-9);
        assert!(c.v_coeffs.max_abs() < 1e-12, "Riemannian model: C = 0");
        // Berwald coefficients agree with Levi-Civita here as well.
        let b = connection_coefficients(&model, &u, ConnectionKind::Berwald).unwrap();
        assert!(b.h_coeffs.sub(&c.h_coeffs).max_abs() < 1e-9);
    }

    #[test]
    fn metric_is_h_parallel_for_cartan_connection() {
        // g_{ij|k} = 0 characterizes the metrical connection.
        let model = randers();
        let u = support(&[0.3, -0.2], &[1.1, 0.5]);
        let nabla_g = covariant_derivative(
            &model,
            &u,
            DerivativeKind::HCartan,
            vec![Variance::Lower, Variance::Lower],
            |view| {
                let n = view.dim();
                Ok(JetBlock::from_fn(n, 2, |idx| {
                    view.metric_jet(idx[0], idx[1]).clone()
                }))
            },
        )
        .unwrap();
        assert!(nabla_g.max_abs() < 1e-9, "max |g_ij|k| = {}", nabla_g.max_abs());
    }

    #[test]
    fn metric_is_v_parallel_for_cartan_connection() {
        // ∂̇_k g_ij = 2C_kij and each slot correction contributes −C_ijk, so
        // total symmetry of C makes the v-derivative vanish: g is v-parallel.
        let model = randers();
        let u = support(&[0.7, 0.2], &[0.4, 1.2]);
        let nabla_g = covariant_derivative(
            &model,
            &u,
            DerivativeKind::VCartan,
            vec![Variance::Lower, Variance::Lower],
            |view| {
                let n = view.dim();
                Ok(JetBlock::from_fn(n, 2, |idx| {
                    view.metric_jet(idx[0], idx[1]).clone()
                }))
            },
        )
        .unwrap();
        assert!(nabla_g.max_abs() < 1e-9, "max |g_ij‖k| = {}", nabla_g.max_abs());
    }

    #[test]
    fn berwald_cartan_identity_holds() {
        let model = randers();
        for (x, y) in [
            ([0.2, 0.4], [1.3, -0.8]),
            ([-0.6, 0.9], [0.5, 0.7]),
            ([0.0, 0.0], [1.0, 0.2]),
        ] {
            let u = support(&x, &y);
            let r = berwald_cartan_residual(&model, &u).unwrap();
            assert!(r < 1e-9, "residual {} at {:?}", r, (x, y));
        }
    }

    #[test]
    fn covariant_derivative_rejects_wrong_rank() {
        let model = FinslerModel::euclidean(2);
        let u = support(&[0.0, 0.0], &[1.0, 0.0]);
        let err = covariant_derivative(
            &model,
            &u,
            DerivativeKind::HCartan,
            vec![Variance::Upper],
            |view| {
                let n = view.dim();
                Ok(JetBlock::from_fn(n, 2, |idx| {
                    view.metric_jet(idx[0], idx[1]).clone()
                }))
            },
        );
        assert!(matches!(err, Err(FinslerError::Config(_))));
    }
}

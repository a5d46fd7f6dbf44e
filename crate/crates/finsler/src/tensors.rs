//! Pointwise metric-level objects: the fundamental tensor and its inverse,
//! the Cartan tensor in mixed and lowered form, the angular metric, and the
//! coordinate components of the fundamental 2-form.

use crate::block::{TensorBlock, Variance};
use crate::error::Result;
use crate::jets::SupportElement;
use crate::lagrangian::FinslerModel;
use crate::site::{engine_order, spray_values, SiteJets, ORDER_METRIC};

/// Fundamental tensor at a support element, with inverse and conditioning
/// diagnostics.
#[derive(Debug, Clone)]
pub struct MetricData {
    /// g_ij (two lower slots).
    pub g: TensorBlock,
    /// g^{ij} (two upper slots).
    pub g_inv: TensorBlock,
    pub min_eigenvalue: f64,
    pub condition: f64,
    pub site: SupportElement,
}

/// Fiber Hessian of the energy: g_ij = ∂̇_i ∂̇_j E, with its inverse.
pub fn metric_tensor(model: &FinslerModel, u: &SupportElement) -> Result<MetricData> {
    let order = engine_order(ORDER_METRIC)?;
    let site = SiteJets::new(model, u, order)?;
    let n = site.n;
    let g = TensorBlock::from_fn(n, vec![Variance::Lower, Variance::Lower], |idx| {
        site.g_value(idx[0], idx[1])
    });
    let g_inv = TensorBlock::from_fn(n, vec![Variance::Upper, Variance::Upper], |idx| {
        site.ginv_value(idx[0], idx[1])
    });
    Ok(MetricData {
        g,
        g_inv,
        min_eigenvalue: site.min_eigenvalue,
        condition: site.condition,
        site: u.clone(),
    })
}

/// Cartan tensor at a support element in both index positions, plus its
/// trace one-form.
#[derive(Debug, Clone)]
pub struct CartanData {
    /// C^h_ij.
    pub mixed: TensorBlock,
    /// C_ijk = ½ ∂̇_i g_jk (totally symmetric).
    pub lowered: TensorBlock,
    /// Trace C_i = C^m_mi.
    pub trace: TensorBlock,
    pub site: SupportElement,
}

/// Half the fiber derivative of the metric; zero exactly when the model is
/// Riemannian at the site.
pub fn cartan_tensor(model: &FinslerModel, u: &SupportElement) -> Result<CartanData> {
    let order = engine_order(3)?;
    let site = SiteJets::new(model, u, order)?;
    let n = site.n;
    // C_ijk = ½ ∂̇_i∂̇_j∂̇_k E straight from the energy jet.
    let lowered = TensorBlock::from_fn(
        n,
        vec![Variance::Lower, Variance::Lower, Variance::Lower],
        |idx| 0.5 * site.e.partial_vars(&[n + idx[0], n + idx[1], n + idx[2]]),
    );
    let mixed = TensorBlock::from_fn(
        n,
        vec![Variance::Upper, Variance::Lower, Variance::Lower],
        |idx| {
            (0..n)
                .map(|l| site.ginv_value(idx[0], l) * lowered.get(&[l, idx[1], idx[2]]))
                .sum()
        },
    );
    let trace = TensorBlock::from_fn(n, vec![Variance::Lower], |idx| {
        (0..n).map(|m| mixed.get(&[m, m, idx[0]])).sum()
    });
    Ok(CartanData {
        mixed,
        lowered,
        trace,
        site: u.clone(),
    })
}

/// Angular metric ħ_ij = g_ij − y_i y_j / L², the part of g transverse to
/// the support direction.
pub fn angular_metric(model: &FinslerModel, u: &SupportElement) -> Result<TensorBlock> {
    let order = engine_order(ORDER_METRIC)?;
    let site = SiteJets::new(model, u, order)?;
    let n = site.n;
    let l2 = site.l2_value();
    Ok(TensorBlock::from_fn(
        n,
        vec![Variance::Lower, Variance::Lower],
        |idx| {
            site.g_value(idx[0], idx[1])
                - site.y_low_value(idx[0]) * site.y_low_value(idx[1]) / l2
        },
    ))
}

/// Coordinate components of the fundamental 2-form Ω, plus the residual of
/// the spray characterization i_GΩ = −dE.
#[derive(Debug, Clone)]
pub struct FundamentalForm {
    /// Ω(∂̇_a, ∂_b) = g_ab.
    pub mixed: TensorBlock,
    /// Ω(∂_a, ∂_b) = ∂_a∂̇_bE − ∂_b∂̇_aE (antisymmetric).
    pub horizontal: TensorBlock,
    /// max over frame covectors of |i_GΩ + dE|.
    pub spray_residual: f64,
    pub site: SupportElement,
}

pub fn fundamental_form(model: &FinslerModel, u: &SupportElement) -> Result<FundamentalForm> {
    let order = engine_order(ORDER_METRIC)?;
    let site = SiteJets::new(model, u, order)?;
    let n = site.n;
    let mixed = TensorBlock::from_fn(n, vec![Variance::Lower, Variance::Lower], |idx| {
        site.g_value(idx[0], idx[1])
    });
    let horizontal = TensorBlock::from_fn(n, vec![Variance::Lower, Variance::Lower], |idx| {
        site.e.partial_vars(&[idx[0], n + idx[1]]) - site.e.partial_vars(&[idx[1], n + idx[0]])
    });

    // i_GΩ(∂_k) + dE(∂_k) = y^i Ω(∂_i, ∂_k) − 2G^i g_ik + ∂_k E, and on the
    // fiber frame i_GΩ(∂̇_k) + dE(∂̇_k) = −y^i g_ik + ∂̇_k E.
    let spray = spray_values(model, u.x(), u.y())?;
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let mut horizontal_part = site.e.partial_vars(&[k]);
        for i in 0..n {
            horizontal_part += u.y()[i] * horizontal.get(&[i, k]);
            horizontal_part -= 2.0 * spray[i] * site.g_value(i, k);
        }
        residual = residual.max(horizontal_part.abs());
        let mut fiber_part = site.e.partial_vars(&[n + k]);
        for i in 0..n {
            fiber_part -= u.y()[i] * site.g_value(i, k);
        }
        residual = residual.max(fiber_part.abs());
    }
    Ok(FundamentalForm {
        mixed,
        horizontal,
        spray_residual: residual,
        site: u.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{MetricSpec, RandersDrift};

    fn support(x: &[f64], y: &[f64]) -> SupportElement {
        SupportElement::new(x.to_vec(), y.to_vec()).unwrap()
    }

    fn randers_03() -> FinslerModel {
        FinslerModel::randers(
            2,
            MetricSpec::Identity,
            RandersDrift {
                base: vec![0.3, 0.0],
                modulation: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let model = FinslerModel::euclidean(3);
        let m = metric_tensor(&model, &support(&[0.1, 0.2, 0.3], &[0.4, -1.0, 2.0])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((m.g.get(&[i, j]) - want).abs() < 1e-14);
                assert!((m.g_inv.get(&[i, j]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn riemannian_metric_ignores_fiber_direction() {
        let model = FinslerModel::sphere(1.0);
        let a = metric_tensor(&model, &support(&[0.9, 0.2], &[1.0, 0.0])).unwrap();
        let b = metric_tensor(&model, &support(&[0.9, 0.2], &[-0.3, 2.0])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.g.get(&[i, j]) - b.g.get(&[i, j])).abs() < 1e-12);
            }
        }
        assert!((a.g.get(&[1, 1]) - 0.9f64.sin().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn metric_contracts_fiber_vector_to_l_squared() {
        let model = randers_03();
        let u = support(&[0.3, -0.6], &[1.2, 0.7]);
        let m = metric_tensor(&model, &u).unwrap();
        let mut gyy = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                gyy += m.g.get(&[i, j]) * u.y()[i] * u.y()[j];
            }
        }
        let l2 = 2.0 * model.energy_value(u.x(), u.y()).unwrap();
        assert!((gyy - l2).abs() <= 1e-10 * l2);
    }

    #[test]
    fn cartan_tensor_vanishes_on_riemannian_and_annihilates_y() {
        let sphere = FinslerModel::sphere(1.0);
        let u = support(&[1.1, 0.5], &[0.7, -0.4]);
        let c = cartan_tensor(&sphere, &u).unwrap();
        assert!(c.lowered.max_abs() < 1e-14);

        let randers = randers_03();
        let u = support(&[0.2, 0.5], &[0.8, 1.1]);
        let c = cartan_tensor(&randers, &u).unwrap();
        assert!(c.lowered.max_abs() > 1e-3, "randers must be non-Riemannian");
        // C^h_ij y^j = 0.
        for h in 0..2 {
            for i in 0..2 {
                let contracted: f64 =
                    (0..2).map(|j| c.mixed.get(&[h, i, j]) * u.y()[j]).sum();
                assert!(contracted.abs() < 1e-10);
            }
        }
        // Lowering the mixed form recovers the lowered form.
        let m = metric_tensor(&randers, &u).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let lowered: f64 =
                        (0..2).map(|h| m.g.get(&[i, h]) * c.mixed.get(&[h, j, k])).sum();
                    assert!((lowered - c.lowered.get(&[i, j, k])).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn angular_metric_kills_the_support_direction() {
        let model = FinslerModel::euclidean(2);
        let h = angular_metric(&model, &support(&[0.0, 0.0], &[0.0, 1.0])).unwrap();
        assert!((h.get(&[0, 0]) - 1.0).abs() < 1e-14);
        assert!(h.get(&[1, 1]).abs() < 1e-14);
        assert!(h.get(&[0, 1]).abs() < 1e-14);

        let randers = randers_03();
        let u = support(&[0.4, 0.8], &[1.0, -0.9]);
        let h = angular_metric(&randers, &u).unwrap();
        for i in 0..2 {
            let contracted: f64 = (0..2).map(|j| h.get(&[i, j]) * u.y()[j]).sum();
            assert!(contracted.abs() < 1e-12);
        }
    }

    #[test]
    fn fundamental_form_characterizes_the_spray() {
        let model = FinslerModel::sphere(1.0);
        let u = support(&[0.8, 0.3], &[0.5, 1.2]);
        let form = fundamental_form(&model, &u).unwrap();
        assert!(form.spray_residual < 1e-10, "residual {}", form.spray_residual);
        // Riemannian, x-dependent metric: Ω(∂,∂) = 𝔘(∂∂̇E) need not vanish,
        // but it must be antisymmetric.
        for a in 0..2 {
            for b in 0..2 {
                assert!(
                    (form.horizontal.get(&[a, b]) + form.horizontal.get(&[b, a])).abs() < 1e-12
                );
            }
        }
        let euclid = FinslerModel::euclidean(2);
        let form = fundamental_form(&euclid, &support(&[0.0, 0.0], &[1.0, 2.0])).unwrap();
        assert!(form.horizontal.max_abs() < 1e-14);
        assert!(form.spray_residual < 1e-14);
    }
}

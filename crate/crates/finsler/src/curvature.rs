//! Curvature blocks of the nonlinear connection and of both linear
//! connections, their Ricci-type contractions, and the T-tensor.

use crate::block::{TensorBlock, Variance};
use crate::connections::ConnectionKind;
use crate::error::Result;
use crate::jets::SupportElement;
use crate::lagrangian::FinslerModel;
use crate::site::{engine_order, SiteJets, ORDER_CONN, ORDER_CURV, ORDER_SPRAY};

/// Curvature ℜ^h_ij = δ_i G^h_j − δ_j G^h_i of the nonlinear connection,
/// layout [h][i][j]; equal to the flow contraction y^k R^h_kij of the
/// horizontal Cartan curvature.
pub fn barthel_curvature(model: &FinslerModel, u: &SupportElement) -> Result<TensorBlock> {
    let order = engine_order(ORDER_SPRAY)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_spray()?;
    let n = site.n;
    Ok(TensorBlock::from_fn(
        n,
        vec![Variance::Upper, Variance::Lower, Variance::Lower],
        |idx| {
            let sp = site.spray_stage();
            site.delta_value(sp.g1.get(&[idx[0], idx[2]]), idx[1])
                - site.delta_value(sp.g1.get(&[idx[0], idx[1]]), idx[2])
        },
    ))
}

/// The three curvature blocks of one linear connection, each with layout
/// [h][k][i][j]: horizontal `r`, mixed `p`, vertical `s`. For the Berwald
/// connection `s` is identically zero and `p` is the fiber derivative of
/// the Berwald coefficients.
#[derive(Debug, Clone)]
pub struct CurvatureSet {
    pub kind: ConnectionKind,
    pub r: TensorBlock,
    pub p: TensorBlock,
    pub s: TensorBlock,
    pub site: SupportElement,
}

pub fn curvature_set(
    model: &FinslerModel,
    u: &SupportElement,
    kind: ConnectionKind,
) -> Result<CurvatureSet> {
    let order = engine_order(ORDER_CURV)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_curv()?;
    let n = site.n;
    let cv = site.curv_values();
    let idx3 = |idx: &[usize]| ((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3];
    let rank4 = vec![
        Variance::Upper,
        Variance::Lower,
        Variance::Lower,
        Variance::Lower,
    ];
    let (r, p, s) = match kind {
        ConnectionKind::Cartan => (
            TensorBlock::from_fn(n, rank4.clone(), |idx| cv.r[idx3(idx)]),
            TensorBlock::from_fn(n, rank4.clone(), |idx| cv.p[idx3(idx)]),
            TensorBlock::from_fn(n, rank4.clone(), |idx| cv.s[idx3(idx)]),
        ),
        ConnectionKind::Berwald => (
            TensorBlock::from_fn(n, rank4.clone(), |idx| cv.rstar[idx3(idx)]),
            TensorBlock::from_fn(n, rank4.clone(), |idx| cv.pstar[idx3(idx)]),
            TensorBlock::zeros(n, rank4.clone()),
        ),
    };
    Ok(CurvatureSet {
        kind,
        r,
        p,
        s,
        site: u.clone(),
    })
}

/// Ricci-type contractions of a curvature set. The trace convention is
/// ric(k, j) = Σ_i R^i_{kij}; scalars contract with the inverse metric.
#[derive(Debug, Clone)]
pub struct RicciSet {
    pub kind: ConnectionKind,
    /// Horizontal Ricci tensor from `r`.
    pub ric_h: TensorBlock,
    /// Vertical Ricci tensor from `s`.
    pub ric_v: TensorBlock,
    pub sc_h: f64,
    pub sc_v: f64,
    /// L²·sc, the scale-weighted scalars.
    pub l2_sc_h: f64,
    pub l2_sc_v: f64,
    /// ric − ½·sc·g for each sector.
    pub einstein_h: TensorBlock,
    pub einstein_v: TensorBlock,
    /// ric_h − sc_h/(2(n−1))·g; absent when n = 1.
    pub f_h: Option<TensorBlock>,
    /// ric_v − sc_v/(2(n−2))·ħ; absent when n ≤ 2.
    pub f_v: Option<TensorBlock>,
    pub site: SupportElement,
}

/// Contract a curvature set into Ricci tensors, scalars, Einstein-type
/// tensors, and the trace-adjusted F-tensors.
pub fn ricci_scalars(model: &FinslerModel, set: &CurvatureSet) -> Result<RicciSet> {
    let order = engine_order(2)?;
    let site = SiteJets::new(model, &set.site, order)?;
    let n = site.n;
    let lower2 = vec![Variance::Lower, Variance::Lower];

    let contract = |block: &TensorBlock| {
        TensorBlock::from_fn(n, lower2.clone(), |idx| {
            (0..n).map(|c| block.get(&[c, idx[0], c, idx[1]])).sum()
        })
    };
    let ric_h = contract(&set.r);
    let ric_v = contract(&set.s);

    let scalar = |ric: &TensorBlock| {
        let mut sc = 0.0;
        for a in 0..n {
            for b in 0..n {
                sc += site.ginv_value(a, b) * ric.get(&[a, b]);
            }
        }
        sc
    };
    let sc_h = scalar(&ric_h);
    let sc_v = scalar(&ric_v);
    let l2 = site.l2_value();

    let g = TensorBlock::from_fn(n, lower2.clone(), |idx| site.g_value(idx[0], idx[1]));
    let combine = |ric: &TensorBlock, weight: f64, base: &TensorBlock| {
        TensorBlock::from_fn(n, lower2.clone(), |idx| {
            ric.get(idx) - weight * base.get(idx)
        })
    };
    let einstein_h = combine(&ric_h, 0.5 * sc_h, &g);
    let einstein_v = combine(&ric_v, 0.5 * sc_v, &g);

    let f_h = if n >= 2 {
        Some(combine(&ric_h, sc_h / (2.0 * (n as f64 - 1.0)), &g))
    } else {
        None
    };
    let f_v = if n >= 3 {
        let angular = TensorBlock::from_fn(n, lower2.clone(), |idx| {
            site.g_value(idx[0], idx[1])
                - site.y_low_value(idx[0]) * site.y_low_value(idx[1]) / l2
        });
        Some(combine(&ric_v, sc_v / (2.0 * (n as f64 - 2.0)), &angular))
    } else {
        None
    };

    Ok(RicciSet {
        kind: set.kind,
        ric_h,
        ric_v,
        sc_h,
        sc_v,
        l2_sc_h: l2 * sc_h,
        l2_sc_v: l2 * sc_v,
        einstein_h,
        einstein_v,
        f_h,
        f_v,
        site: set.site.clone(),
    })
}

/// T-tensor values over a site whose connection stage is built. Flat layout
/// ((l·n + i)·n + j)·n + k.
pub(crate) fn t_values(site: &SiteJets) -> Vec<f64> {
    let n = site.n;
    let l2 = site.l2_value();
    let cn = site.conn_stage();
    let cl = |i: usize, j: usize, k: usize| cn.c_low.get(&[i, j, k]).value();
    let cm = |h: usize, i: usize, j: usize| cn.c_mix.get(&[h, i, j]).value();
    let yl = |i: usize| site.y_low_value(i);
    let mut out = vec![0.0; n * n * n * n];
    let mut f = 0usize;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = cn.c_low.get(&[i, j, k]).partial_vars(&[site.dy(l)]);
                    for m in 0..n {
                        v -= cm(m, i, l) * cl(m, j, k)
                            + cm(m, j, l) * cl(i, m, k)
                            + cm(m, k, l) * cl(i, j, m);
                    }
                    v += (yl(l) * cl(i, j, k)
                        + yl(i) * cl(j, k, l)
                        + yl(j) * cl(k, l, i)
                        + yl(k) * cl(l, i, j))
                        / l2;
                    out[f] = v;
                    f += 1;
                }
            }
        }
    }
    out
}

/// Lowered T-tensor 𝕋_lijk: the v-covariant derivative of the lowered
/// Cartan tensor plus the scale terms
/// (y_l C_ijk + y_i C_jkl + y_j C_kli + y_k C_lij)/L². Totally symmetric.
pub fn t_tensor(model: &FinslerModel, u: &SupportElement) -> Result<TensorBlock> {
    let order = engine_order(ORDER_CONN)?;
    let mut site = SiteJets::new(model, u, order)?;
    site.ensure_conn()?;
    let n = site.n;
    let vals = t_values(&site);
    Ok(TensorBlock::from_fn(n, vec![Variance::Lower; 4], |idx| {
        vals[((idx[0] * n + idx[1]) * n + idx[2]) * n + idx[3]]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{MetricSpec, RandersDrift};

    fn support(x: &[f64], y: &[f64]) -> SupportElement {
        SupportElement::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn sphere_has_constant_curvature_one() {
        let model = FinslerModel::sphere(1.0);
        let theta = 0.9;
        let u = support(&[theta, 0.3], &[0.4, 1.1]);
        let set = curvature_set(&model, &u, ConnectionKind::Cartan).unwrap();
        // R^θ_φθφ = sin²θ on the unit sphere.
        let want = theta.sin().powi(2);
        assert!(
            (set.r.get(&[0, 1, 0, 1]) - want).abs() < 1e-9,
            "R^θ_φθφ = {}, want {}",
            set.r.get(&[0, 1, 0, 1]),
            want
        );
        // Full constant-curvature shape R^h_kij = g_kj δ^h_i − g_ki δ^h_j.
        let g = crate::tensors::metric_tensor(&model, &u).unwrap().g;
        for h in 0..2 {
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut want = 0.0;
                        if h == i {
                            want += g.get(&[k, j]);
                        }
                        if h == j {
                            want -= g.get(&[k, i]);
                        }
                        assert!(
                            (set.r.get(&[h, k, i, j]) - want).abs() < 1e-8,
                            "R^{h}_{k}{i}{j}"
                        );
                    }
                }
            }
        }
        // Riemannian: P and S vanish, Berwald curvature agrees with Cartan.
        assert!(set.p.max_abs() < 1e-9);
        assert!(set.s.max_abs() < 1e-12);
        let bset = curvature_set(&model, &u, ConnectionKind::Berwald).unwrap();
        assert!(bset.r.sub(&set.r).max_abs() < 1e-8);
    }

    #[test]
    fn sphere_ricci_scalar_is_two() {
        let model = FinslerModel::sphere(1.0);
        let u = support(&[1.2, -0.4], &[0.8, 0.5]);
        let set = curvature_set(&model, &u, ConnectionKind::Cartan).unwrap();
        let ricci = ricci_scalars(&model, &set).unwrap();
        assert!((ricci.sc_h - 2.0).abs() < 1e-8, "sc_h = {}", ricci.sc_h);
        // In dimension two both the Einstein tensor and the trace-adjusted
        // F-tensor vanish identically; the vertical F-tensor is absent.
        assert!(ricci.einstein_h.max_abs() < 1e-8);
        assert!(ricci.f_h.as_ref().unwrap().max_abs() < 1e-8);
        assert!(ricci.f_v.is_none());
        assert!(ricci.sc_v.abs() < 1e-12);
    }

    #[test]
    fn nonlinear_curvature_is_flow_contraction_of_cartan_r() {
        // ℜ^h_ij = y^k R^h_kij.
        let model = FinslerModel::sphere(1.0);
        let u = support(&[0.7, 0.2], &[0.6, -0.9]);
        let rr = barthel_curvature(&model, &u).unwrap();
        let set = curvature_set(&model, &u, ConnectionKind::Cartan).unwrap();
        for h in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let contracted: f64 =
                        (0..2).map(|k| u.y()[k] * set.r.get(&[h, k, i, j])).sum();
                    assert!(
                        (rr.get(&[h, i, j]) - contracted).abs() < 1e-9,
                        "ℜ^{h}_{i}{j}: {} vs {}",
                        rr.get(&[h, i, j]),
                        contracted
                    );
                }
            }
        }
    }

    #[test]
    fn constant_drift_randers_is_locally_minkowski_flat() {
        let model = FinslerModel::randers(
            2,
            MetricSpec::Identity,
            RandersDrift {
                base: vec![0.3, -0.2],
                modulation: None,
            },
        )
        .unwrap();
        let u = support(&[0.4, 0.9], &[1.0, 0.6]);
        let set = curvature_set(&model, &u, ConnectionKind::Cartan).unwrap();
        assert!(set.r.max_abs() < 1e-12);
        assert!(set.p.max_abs() < 1e-12);
        let bset = curvature_set(&model, &u, ConnectionKind::Berwald).unwrap();
        assert!(bset.r.max_abs() < 1e-12);
        assert!(bset.p.max_abs() < 1e-12);
    }

    #[test]
    fn t_tensor_vanishes_on_riemannian_and_is_totally_symmetric() {
        let sphere = FinslerModel::sphere(1.0);
        let u = support(&[1.0, 0.5], &[0.3, 0.8]);
        assert!(t_tensor(&sphere, &u).unwrap().max_abs() < 1e-12);

        let randers = FinslerModel::randers(
            2,
            MetricSpec::Identity,
            RandersDrift {
                base: vec![0.25, 0.1],
                modulation: None,
            },
        )
        .unwrap();
        let u = support(&[0.2, -0.3], &[1.1, 0.4]);
        let t = t_tensor(&randers, &u).unwrap();
        assert!(t.max_abs() > 1e-6, "randers T-tensor should not vanish");
        let perms: [[usize; 4]; 5] = [
            [1, 0, 2, 3],
            [0, 2, 1, 3],
            [0, 1, 3, 2],
            [3, 1, 2, 0],
            [2, 3, 0, 1],
        ];
        for l in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let base = [l, i, j, k];
                        for perm in perms {
                            let permuted = [base[perm[0]], base[perm[1]], base[perm[2]], base[perm[3]]];
                            assert!(
                                (t.get(&base) - t.get(&permuted)).abs() < 1e-9,
                                "T not symmetric under {:?}",
                                perm
                            );
                        }
                    }
                }
            }
        }
    }
}

//! Per-support-element evaluation pipeline.
//!
//! A [`SiteJets`] expands the model's energy as one deep jet at a support
//! element and then differentiates it into the metric, spray, connection,
//! and curvature blocks. Stages build lazily: metric data at construction,
//! spray/connection/curvature on demand, each guarded by the jet depth it
//! actually consumes.
//!
//! Variable layout inside the 2n-variable jet space: x-coordinates first
//! (indices 0..n), fiber coordinates after (indices n..2n).


use crate::block::JetBlock;
use crate::error::{FinslerError, Result};
use crate::jets::{Jet, JetSpace, SupportElement};
use crate::lagrangian::FinslerModel;
use crate::linalg::{invert, sym_eigenvalues};

/// Jet depth needed per stage. Metric: two fiber derivatives. Spray adds a
/// base derivative plus the two fiber derivatives that make G^h_ij.
/// Connections differentiate through δ once more; curvature differentiates
/// the connections; the conformal difference blocks consume the full
/// default depth.
pub(crate) const ORDER_METRIC: usize = 2;
pub(crate) const ORDER_SPRAY: usize = 5;
pub(crate) const ORDER_CONN: usize = 5;
pub(crate) const ORDER_CURV: usize = 6;

/// Jet depth an operation should run at, given the depth it requires.
/// Consults the configured cap (`FINSLER_MAX_JET_ORDER`) and errors when
/// the cap is below the requirement instead of silently degrading.
pub(crate) fn engine_order(required: usize) -> Result<usize> {
    let available = crate::jets::max_order_from_env();
    if available < required {
        return Err(FinslerError::OrderTooLow {
            required,
            available,
        });
    }
    Ok(required)
}

pub(crate) struct SprayStage {
    /// G^h, rank 1.
    pub spray: JetBlock,
    /// Nonlinear connection G^h_i = ∂̇_i G^h, layout [h][i].
    pub g1: JetBlock,
    /// Berwald coefficients G^h_ij = ∂̇_j G^h_i, layout [h][i][j].
    pub g2: JetBlock,
}

pub(crate) struct ConnStage {
    /// Lowered Cartan tensor C_ijk = ½ ∂̇_i g_jk (totally symmetric).
    pub c_low: JetBlock,
    /// Mixed Cartan tensor C^h_ij, layout [h][i][j].
    pub c_mix: JetBlock,
    /// Cartan horizontal coefficients Γ^h_ij, layout [h][i][j].
    pub gamma: JetBlock,
}

pub(crate) struct CurvValues {
    /// Nonlinear-connection curvature ℜ^h_ij = δ_j G^h_i − δ_i G^h_j.
    pub rr: Vec<f64>,
    /// Cartan horizontal curvature R^h_kij.
    pub r: Vec<f64>,
    /// Cartan mixed curvature P^h_kij.
    pub p: Vec<f64>,
    /// Cartan vertical curvature S^h_kij.
    pub s: Vec<f64>,
    /// Berwald horizontal curvature R*^h_kij.
    pub rstar: Vec<f64>,
    /// Berwald mixed curvature P*^h_kij = ∂̇_j G^h_ki.
    pub pstar: Vec<f64>,
}

pub(crate) struct SiteJets {
    pub n: usize,
    pub order: usize,
    pub u: SupportElement,
    /// Coordinate jets (x then y) at full order.
    pub coords: Vec<Jet>,
    /// Energy jet E = L²/2.
    pub e: Jet,
    /// Fiber gradient jets y_i = ∂̇_i E.
    pub ey: Vec<Jet>,
    /// Metric jets g_ij and inverse jets g^{ij}.
    pub g: JetBlock,
    pub ginv: JetBlock,
    pub min_eigenvalue: f64,
    pub condition: f64,
    spray: Option<SprayStage>,
    conn: Option<ConnStage>,
    curv: Option<CurvValues>,
}

impl SiteJets {
    pub fn new(model: &FinslerModel, u: &SupportElement, order: usize) -> Result<SiteJets> {
        if order < ORDER_METRIC {
            return Err(FinslerError::OrderTooLow {
                required: ORDER_METRIC,
                available: order,
            });
        }
        let n = model.dim();
        if u.dim() != n {
            return Err(FinslerError::DimMismatch {
                expected: n,
                got: u.dim(),
            });
        }
        let space = JetSpace::get(2 * n, order);
        let coords = Jet::coordinates(&space, &u.coords(), order);
        let e = model.energy_from_coords(&coords);
        e.check_finite()?;
        let ey: Vec<Jet> = (0..n).map(|i| e.derive(n + i)).collect();
        let g = JetBlock::from_fn(n, 2, |idx| ey[idx[0]].derive(n + idx[1]));
        let (ginv, min_eigenvalue, condition) = invert_metric_jets(&g, n)?;
        Ok(SiteJets {
            n,
            order,
            u: u.clone(),
            coords,
            e,
            ey,
            g,
            ginv,
            min_eigenvalue,
            condition,
            spray: None,
            conn: None,
            curv: None,
        })
    }

    #[inline]
    pub fn dx(&self, i: usize) -> usize {
        i
    }

    #[inline]
    pub fn dy(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn ensure_spray(&mut self) -> Result<()> {
        if self.spray.is_some() {
            return Ok(());
        }
        if self.order < ORDER_SPRAY {
            return Err(FinslerError::OrderTooLow {
                required: ORDER_SPRAY,
                available: self.order,
            });
        }
        let n = self.n;
        // ∂_k g_ij, layout [i][j][k].
        let dgx = JetBlock::from_fn(n, 3, |idx| self.g.get(&[idx[0], idx[1]]).derive(idx[2]));
        // Formal Christoffel symbols γ^h_ij with plain base derivatives.
        let gamma_formal = JetBlock::from_fn(n, 3, |idx| {
            let (h, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc: Option<Jet> = None;
            for l in 0..n {
                let term = dgx
                    .get(&[l, j, i])
                    .add(dgx.get(&[i, l, j]))
                    .sub(dgx.get(&[i, j, l]));
                let term = self.ginv.get(&[h, l]).mul(&term);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            acc.expect("n >= 1").scale(0.5)
        });
        // G^h = ½ γ^h_ij y^i y^j with y as coordinate jets, so fiber
        // derivatives of G are exact.
        let spray = JetBlock::from_fn(n, 1, |idx| {
            let h = idx[0];
            let mut acc: Option<Jet> = None;
            for i in 0..n {
                for j in 0..n {
                    let term = gamma_formal
                        .get(&[h, i, j])
                        .mul(&self.coords[self.dy(i)])
                        .mul(&self.coords[self.dy(j)]);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.add(&term),
                    });
                }
            }
            acc.expect("n >= 1").scale(0.5)
        });
        let g1 = JetBlock::from_fn(n, 2, |idx| spray.get(&[idx[0]]).derive(self.dy(idx[1])));
        let g2 = JetBlock::from_fn(n, 3, |idx| {
            g1.get(&[idx[0], idx[1]]).derive(self.dy(idx[2]))
        });
        self.spray = Some(SprayStage { spray, g1, g2 });
        Ok(())
    }

    pub fn spray_stage(&self) -> &SprayStage {
        self.spray.as_ref().expect("spray stage not built")
    }

    /// Horizontal (adapted-frame) derivative of a jet-carried quantity:
    /// δ_j f = ∂_j f − G^m_j ∂̇_m f. Result order is one less than the
    /// operands allow.
    pub fn delta_jet(&self, f: &Jet, j: usize) -> Jet {
        let g1 = &self.spray_stage().g1;
        let mut out = f.derive(self.dx(j));
        for m in 0..self.n {
            out = out.sub(&g1.get(&[m, j]).mul(&f.derive(self.dy(m))));
        }
        out
    }

    /// Value of δ_j f without building the derivative jet.
    pub fn delta_value(&self, f: &Jet, j: usize) -> f64 {
        let g1 = &self.spray_stage().g1;
        let mut out = f.partial_vars(&[self.dx(j)]);
        for m in 0..self.n {
            out -= g1.get(&[m, j]).value() * f.partial_vars(&[self.dy(m)]);
        }
        out
    }

    pub fn ensure_conn(&mut self) -> Result<()> {
        if self.conn.is_some() {
            return Ok(());
        }
        self.ensure_spray()?;
        if self.order < ORDER_CONN {
            return Err(FinslerError::OrderTooLow {
                required: ORDER_CONN,
                available: self.order,
            });
        }
        let n = self.n;
        let c_low = JetBlock::from_fn(n, 3, |idx| {
            self.g
                .get(&[idx[1], idx[2]])
                .derive(self.dy(idx[0]))
                .scale(0.5)
        });
        let c_mix = JetBlock::from_fn(n, 3, |idx| {
            let (h, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc: Option<Jet> = None;
            for l in 0..n {
                let term = self.ginv.get(&[h, l]).mul(c_low.get(&[l, i, j]));
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            acc.expect("n >= 1")
        });
        // δ_k g_ij, layout [i][j][k].
        let delta_g = JetBlock::from_fn(n, 3, |idx| {
            self.delta_jet(self.g.get(&[idx[0], idx[1]]), idx[2])
        });
        let gamma = JetBlock::from_fn(n, 3, |idx| {
            let (h, i, j) = (idx[0], idx[1], idx[2]);
            let mut acc: Option<Jet> = None;
            for l in 0..n {
                let term = delta_g
                    .get(&[l, j, i])
                    .add(delta_g.get(&[i, l, j]))
                    .sub(delta_g.get(&[i, j, l]));
                let term = self.ginv.get(&[h, l]).mul(&term);
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            acc.expect("n >= 1").scale(0.5)
        });
        self.conn = Some(ConnStage {
            c_low,
            c_mix,
            gamma,
        });
        Ok(())
    }

    pub fn conn_stage(&self) -> &ConnStage {
        self.conn.as_ref().expect("connection stage not built")
    }

    pub fn ensure_curv(&mut self) -> Result<()> {
        if self.curv.is_some() {
            return Ok(());
        }
        self.ensure_conn()?;
        if self.order < ORDER_CURV {
            return Err(FinslerError::OrderTooLow {
                required: ORDER_CURV,
                available: self.order,
            });
        }
        let n = self.n;
        let idx2 = |h: usize, i: usize, j: usize| (h * n + i) * n + j;
        let idx3 = |h: usize, k: usize, i: usize, j: usize| ((h * n + k) * n + i) * n + j;

        let (g2v, gammav, cv) = {
            let sp = self.spray_stage();
            let cn = self.conn_stage();
            let mut g2v = vec![0.0; n * n * n];
            let mut gammav = vec![0.0; n * n * n];
            let mut cvv = vec![0.0; n * n * n];
            for h in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        g2v[idx2(h, i, j)] = sp.g2.get(&[h, i, j]).value();
                        gammav[idx2(h, i, j)] = cn.gamma.get(&[h, i, j]).value();
                        cvv[idx2(h, i, j)] = cn.c_mix.get(&[h, i, j]).value();
                    }
                }
            }
            (g2v, gammav, cvv)
        };

        // ℜ^h_ij = δ_i G^h_j − δ_j G^h_i; with this orientation the flow
        // contraction identity ℜ^h_ij = y^k R^h_kij holds with a plus sign
        // and ℜ·y is positive on the round sphere.
        let mut rr = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let sp = self.spray_stage();
                    rr[idx2(h, i, j)] = self.delta_value(sp.g1.get(&[h, j]), i)
                        - self.delta_value(sp.g1.get(&[h, i]), j);
                }
            }
        }

        let mut r = vec![0.0; n * n * n * n];
        let mut p = vec![0.0; n * n * n * n];
        let mut s = vec![0.0; n * n * n * n];
        let mut rstar = vec![0.0; n * n * n * n];
        let mut pstar = vec![0.0; n * n * n * n];
        for h in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let cn = self.conn_stage();
                        let sp = self.spray_stage();
                        // Horizontal Cartan curvature.
                        let mut rv = self.delta_value(cn.gamma.get(&[h, k, j]), i)
                            - self.delta_value(cn.gamma.get(&[h, k, i]), j);
                        for m in 0..n {
                            rv += gammav[idx2(m, k, j)] * gammav[idx2(h, m, i)]
                                - gammav[idx2(m, k, i)] * gammav[idx2(h, m, j)];
                            rv += rr[idx2(m, i, j)] * cv[idx2(h, k, m)];
                        }
                        r[idx3(h, k, i, j)] = rv;

                        // Mixed Cartan curvature.
                        let mut pv = cn.gamma.get(&[h, k, i]).partial_vars(&[self.dy(j)])
                            - self.delta_value(cn.c_mix.get(&[h, k, j]), i);
                        for m in 0..n {
                            pv += gammav[idx2(m, k, i)] * cv[idx2(h, m, j)]
                                - cv[idx2(m, k, j)] * gammav[idx2(h, m, i)]
                                + g2v[idx2(m, i, j)] * cv[idx2(h, k, m)];
                        }
                        p[idx3(h, k, i, j)] = pv;

                        // Vertical Cartan curvature.
                        let mut sv = 0.0;
                        for m in 0..n {
                            sv += cv[idx2(m, k, j)] * cv[idx2(h, m, i)]
                                - cv[idx2(m, k, i)] * cv[idx2(h, m, j)];
                        }
                        s[idx3(h, k, i, j)] = sv;

                        // Berwald horizontal curvature.
                        let mut rsv = self.delta_value(sp.g2.get(&[h, k, j]), i)
                            - self.delta_value(sp.g2.get(&[h, k, i]), j);
                        for m in 0..n {
                            rsv += g2v[idx2(m, k, j)] * g2v[idx2(h, m, i)]
                                - g2v[idx2(m, k, i)] * g2v[idx2(h, m, j)];
                        }
                        rstar[idx3(h, k, i, j)] = rsv;

                        // Berwald mixed curvature: one more fiber derivative
                        // of the Berwald coefficients.
                        pstar[idx3(h, k, i, j)] =
                            sp.g2.get(&[h, k, i]).partial_vars(&[self.dy(j)]);
                    }
                }
            }
        }
        self.curv = Some(CurvValues {
            rr,
            r,
            p,
            s,
            rstar,
            pstar,
        });
        Ok(())
    }

    pub fn curv_values(&self) -> &CurvValues {
        self.curv.as_ref().expect("curvature stage not built")
    }

    /// Values of C^h_{im|0}: the h-Cartan covariant derivative of the mixed
    /// Cartan tensor contracted with the fiber vector. Layout [h][i][m]
    /// flattened as (h·n + i)·n + m. Requires the connection stage.
    pub fn cartan_mixed_flow_derivative(&self) -> Vec<f64> {
        let n = self.n;
        let sp = self.spray_stage();
        let cn = self.conn_stage();
        let idx2 = |h: usize, i: usize, j: usize| (h * n + i) * n + j;
        let mut g1v = vec![0.0; n * n];
        let mut cv = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                g1v[h * n + i] = sp.g1.get(&[h, i]).value();
                for m in 0..n {
                    cv[idx2(h, i, m)] = cn.c_mix.get(&[h, i, m]).value();
                }
            }
        }
        let y = self.u.y();
        let mut out = vec![0.0; n * n * n];
        for h in 0..n {
            for i in 0..n {
                for m in 0..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        v += y[k] * self.delta_value(cn.c_mix.get(&[h, i, m]), k);
                    }
                    for r in 0..n {
                        v += cv[idx2(r, i, m)] * g1v[h * n + r]
                            - cv[idx2(h, r, m)] * g1v[r * n + i]
                            - cv[idx2(h, i, r)] * g1v[r * n + m];
                    }
                    out[idx2(h, i, m)] = v;
                }
            }
        }
        out
    }

    /// Metric component values.
    pub fn g_value(&self, i: usize, j: usize) -> f64 {
        self.g.get(&[i, j]).value()
    }

    pub fn ginv_value(&self, i: usize, j: usize) -> f64 {
        self.ginv.get(&[i, j]).value()
    }

    /// Lowered fiber vector y_i = ∂̇_i E.
    pub fn y_low_value(&self, i: usize) -> f64 {
        self.ey[i].value()
    }

    /// L² = 2E at the site.
    pub fn l2_value(&self) -> f64 {
        2.0 * self.e.value()
    }
}

/// Invert a symmetric jet matrix. The value part is inverted by pivoted
/// elimination and checked positive definite; the derivative parts follow
/// from the finite Neumann series (I + g₀⁻¹N)⁻¹g₀⁻¹ with N = g − g₀, which
/// terminates exactly because N has no constant term.
fn invert_metric_jets(g: &JetBlock, n: usize) -> Result<(JetBlock, f64, f64)> {
    let mut g0 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g0[i * n + j] = g.get(&[i, j]).value();
        }
    }
    let eigs = sym_eigenvalues(&g0, n);
    let min_eig = eigs[0];
    if !(min_eig > 0.0) {
        return Err(FinslerError::DegenerateMetric {
            min_eigenvalue: min_eig,
        });
    }
    let condition = eigs[n - 1] / min_eig;
    let g0inv = invert(&g0, n).ok_or(FinslerError::DegenerateMetric {
        min_eigenvalue: min_eig,
    })?;

    let proto = g.get(&[0, 0]);
    let order = proto.order();
    // M = g₀⁻¹ (g − g₀): zero constant term, so Mᵏ vanishes beyond k = order.
    let m_block = JetBlock::from_fn(n, 2, |idx| {
        let (i, j) = (idx[0], idx[1]);
        let mut acc = proto.constant_like(0.0);
        for k in 0..n {
            let delta = g.get(&[k, j]).sub(&proto.constant_like(g0[k * n + j]));
            acc = acc.add(&delta.scale(g0inv[i * n + k]));
        }
        acc
    });
    let mut term = JetBlock::from_fn(n, 2, |idx| proto.constant_like(g0inv[idx[0] * n + idx[1]]));
    let mut out = term.clone();
    for _ in 1..=order {
        term = JetBlock::from_fn(n, 2, |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut acc = proto.constant_like(0.0);
            for k in 0..n {
                acc = acc.add(&m_block.get(&[i, k]).mul(term.get(&[k, j])));
            }
            acc.neg()
        });
        out = out.add(&term);
    }
    Ok((out, min_eig, condition))
}

/// Spray coefficient values G^h(x, y) through a shallow order-3 jet — the
/// fast path for trajectory integration, where only values are needed.
pub(crate) fn spray_values(model: &FinslerModel, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = model.dim();
    let u = SupportElement::new(x.to_vec(), y.to_vec())?;
    let space = JetSpace::get(2 * n, 3);
    let coords = Jet::coordinates(&space, &u.coords(), 3);
    let e = model.energy_from_coords(&coords);
    e.check_finite()?;
    let mut g0 = vec![0.0; n * n];
    let mut dg = vec![0.0; n * n * n]; // [i][j][k] = ∂_k g_ij
    for i in 0..n {
        for j in 0..n {
            g0[i * n + j] = e.partial_vars(&[n + i, n + j]);
            for k in 0..n {
                dg[(i * n + j) * n + k] = e.partial_vars(&[n + i, n + j, k]);
            }
        }
    }
    let eigs = sym_eigenvalues(&g0, n);
    if !(eigs[0] > 0.0) {
        return Err(FinslerError::DegenerateMetric {
            min_eigenvalue: eigs[0],
        });
    }
    let g0inv = invert(&g0, n).ok_or(FinslerError::DegenerateMetric {
        min_eigenvalue: eigs[0],
    })?;
    let mut spray = vec![0.0; n];
    for h in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut gamma = 0.0;
                for l in 0..n {
                    gamma += g0inv[h * n + l]
                        * (dg[(l * n + j) * n + i] + dg[(i * n + l) * n + j]
                            - dg[(i * n + j) * n + l]);
                }
                acc += 0.5 * gamma * y[i] * y[j];
            }
        }
        spray[h] = 0.5 * acc;
    }
    Ok(spray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{FinslerModel, MetricSpec, RandersDrift};

    fn site_for(model: &FinslerModel, x: &[f64], y: &[f64], order: usize) -> SiteJets {
        let u = SupportElement::new(x.to_vec(), y.to_vec()).unwrap();
        SiteJets::new(model, &u, order).unwrap()
    }

    #[test]
    fn metric_inverse_jets_invert_to_identity_in_all_coefficients() {
        let model = FinslerModel::randers(
            2,
            MetricSpec::Identity,
            RandersDrift {
                base: vec![0.3, 0.1],
                modulation: None,
            },
        )
        .unwrap();
        let site = site_for(&model, &[0.2, -0.4], &[1.1, 0.6], 6);
        let n = 2;
        for i in 0..n {
            for j in 0..n {
                let mut acc = site.g.get(&[0, 0]).constant_like(0.0);
                for k in 0..n {
                    acc = acc.add(&site.g.get(&[i, k]).mul(site.ginv.get(&[k, j])));
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((acc.value() - target).abs() < 1e-12);
                let d = acc.sub(&acc.constant_like(target));
                // All derivative coefficients of g·g⁻¹ must vanish too.
                for vars in [[0usize], [1], [2], [3]] {
                    assert!(d.partial_vars(&vars).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn euclidean_site_has_trivial_geometry() {
        let model = FinslerModel::euclidean(2);
        let mut site = site_for(&model, &[0.3, 0.7], &[1.0, -0.5], 6);
        site.ensure_curv().unwrap();
        let sp = site.spray_stage();
        for h in 0..2 {
            assert_eq!(sp.spray.get(&[h]).value(), 0.0);
            for i in 0..2 {
                assert_eq!(sp.g1.get(&[h, i]).value(), 0.0);
            }
        }
        let cv = site.curv_values();
        assert!(cv.r.iter().all(|v| v.abs() < 1e-14));
        assert!(cv.p.iter().all(|v| v.abs() < 1e-14));
        assert!(cv.s.iter().all(|v| v.abs() < 1e-14));
        assert!(cv.rstar.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn low_order_site_refuses_deep_stages() {
        let model = FinslerModel::euclidean(2);
        let u = SupportElement::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let mut site = SiteJets::new(&model, &u, 4).unwrap();
        match site.ensure_conn() {
            Err(FinslerError::OrderTooLow { required, available }) => {
                assert_eq!(required, ORDER_CONN);
                assert_eq!(available, 4);
            }
            other => panic!("expected OrderTooLow, got {:?}", other.err()),
        }
    }

    #[test]
    fn fast_spray_matches_jet_spray() {
        let model = FinslerModel::sphere(1.0);
        let x = [1.1, 0.4];
        let y = [0.3, 0.9];
        let fast = spray_values(&model, &x, &y).unwrap();
        let mut site = site_for(&model, &x, &y, 6);
        site.ensure_spray().unwrap();
        for h in 0..2 {
            let deep = site.spray_stage().spray.get(&[h]).value();
            assert!(
                (fast[h] - deep).abs() < 1e-12 * deep.abs().max(1.0),
                "component {h}: {} vs {}",
                fast[h],
                deep
            );
        }
    }

    #[test]
    fn sphere_spray_matches_christoffel_contraction() {
        // Unit sphere: G^θ = −½ sinθ cosθ (y^φ)², G^φ = cotθ y^θ y^φ.
        let model = FinslerModel::sphere(1.0);
        let (theta, y) = (0.8f64, [0.25, -0.7]);
        let spray = spray_values(&model, &[theta, 2.0], &y).unwrap();
        let want_theta = -0.5 * theta.sin() * theta.cos() * y[1] * y[1];
        let want_phi = (theta.cos() / theta.sin()) * y[0] * y[1];
        assert!((spray[0] - want_theta).abs() < 1e-12);
        assert!((spray[1] - want_phi).abs() < 1e-12);
    }
}

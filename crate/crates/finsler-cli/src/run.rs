//! Scenario execution: map configured checks onto engine calls and collect
//! rows into a verification report.

use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use finsler::{
    conformal_lift, conformality_test, geodesic_correspondence, geodesic_integrate,
    homothety_test, invariant_suite, jacobi_correspondence, jacobi_integrate, orientation_probe,
    sample_support, validate_structure, verify_transformation_laws, ConformalFactor,
    FinslerModel, GeodesicRun, StopReason, SupportElement,
};

use crate::report::{CheckRow, EngineInfo, ModelEcho, VerificationReport};
use crate::scenario::{CheckKind, DynamicsSpec, Scenario, Tolerances};

/// Execute the scenario's checks (optionally restricted to a subset) and
/// assemble the report. Checks run in the order listed in the config.
pub fn run_checks(
    scenario: &Scenario,
    seed_override: Option<u64>,
    tol_scale: f64,
    only: Option<&[CheckKind]>,
) -> Result<VerificationReport> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        bail!("--tol-scale must be positive and finite (got {tol_scale})");
    }
    let model = scenario.model.build()?;
    let sigma = scenario.sigma.as_ref().map(|s| s.build());
    let spec = scenario.samples.to_engine(seed_override);
    spec.validate(model.dim())?;
    let tol = scenario.tolerances.scaled(tol_scale);

    let selected: Vec<CheckKind> = match only {
        Some(o) => o.to_vec(),
        None => scenario.checks.clone(),
    };
    if selected.is_empty() {
        bail!("no checks selected: scenario lists {:?}", scenario.checks);
    }

    // Probe the sign convention once when a factor is present; a flipped
    // convention is a configuration error, not a failed check.
    let orientation = match &sigma {
        Some(s) => {
            let probe_samples = sample_support(&model, &spec)?;
            let u = probe_samples
                .first()
                .ok_or_else(|| anyhow!("sampling produced no support elements"))?;
            Some(orientation_probe(&model, s, u)?)
        }
        None => None,
    };

    let mut rows: Vec<CheckRow> = Vec::new();
    for kind in &selected {
        match kind {
            CheckKind::Validate => rows.push(check_validate(&model, &spec)?),
            CheckKind::TransformLaws => {
                let s = need_sigma(&sigma, *kind)?;
                rows.extend(check_transform_laws(&model, s, &spec, &tol)?)
            }
            CheckKind::Invariants => {
                let s = need_sigma(&sigma, *kind)?;
                rows.extend(check_invariants(&model, s, &spec, &tol)?)
            }
            CheckKind::Homothety => {
                let s = need_sigma(&sigma, *kind)?;
                rows.push(check_homothety(&model, s, &spec, &tol)?)
            }
            CheckKind::Conformality => {
                let s = need_sigma(&sigma, *kind)?;
                rows.push(check_conformality(&model, s, &spec, &tol)?)
            }
            CheckKind::Geodesic => {
                let (run, row) = check_geodesic(&model, scenario, &spec, &tol)?;
                drop(run);
                rows.push(row);
            }
            CheckKind::Jacobi => {
                let (run, _) = check_geodesic(&model, scenario, &spec, &tol)?;
                rows.push(check_jacobi_linearity(&model, &run, scenario, &tol)?)
            }
            CheckKind::Correspondence => {
                let s = need_sigma(&sigma, *kind)?;
                let (run, _) = check_geodesic(&model, scenario, &spec, &tol)?;
                rows.extend(check_correspondence(&model, s, &run, scenario, &tol)?)
            }
        }
    }

    let pass = rows.iter().all(|r| r.pass);
    Ok(VerificationReport {
        engine: EngineInfo {
            version: finsler::ENGINE_VERSION.to_string(),
            jet_order: finsler::jets::max_order_from_env(),
            orientation,
        },
        model: ModelEcho {
            family: model.family().to_string(),
            dim: model.dim(),
        },
        seed: spec.seed,
        checks: rows,
        pass,
    })
}

fn need_sigma<'a>(sigma: &'a Option<ConformalFactor>, kind: CheckKind) -> Result<&'a ConformalFactor> {
    sigma
        .as_ref()
        .ok_or_else(|| anyhow!("check `{}` needs a `sigma` entry in the scenario", kind.name()))
}

fn check_validate(model: &FinslerModel, spec: &finsler::SampleSpec) -> Result<CheckRow> {
    let samples = sample_support(model, spec)?;
    let report = validate_structure(model, &samples)?;
    Ok(CheckRow {
        check: "validate".into(),
        id: "slit-bundle-structure".into(),
        description: "metric positive definite and energy fiberwise 2-homogeneous at every sample"
            .into(),
        samples: report.samples_checked,
        max_abs: report.max_homogeneity_residual,
        max_rel: report.max_homogeneity_residual,
        tolerance: finsler::lagrangian::HOMOGENEITY_TOL,
        pass: report.ok(),
        note: Some(format!(
            "min eigenvalue {:e}, max condition {:e}",
            report.min_eigenvalue, report.max_condition
        )),
    })
}

fn check_transform_laws(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    spec: &finsler::SampleSpec,
    tol: &Tolerances,
) -> Result<Vec<CheckRow>> {
    let suite = verify_transformation_laws(model, sigma, spec, tol.connection, tol.curvature)?;
    let mut rows = Vec::with_capacity(suite.laws.len());
    for law in &suite.laws {
        rows.push(CheckRow {
            check: "transform-laws".into(),
            id: law.law.clone(),
            description: law.description.clone(),
            samples: law.samples,
            max_abs: law.max_abs,
            max_rel: law.max_rel,
            tolerance: law.tolerance,
            pass: law.pass,
            note: if suite.excluded_ill_conditioned > 0 {
                Some(format!(
                    "{} ill-conditioned samples excluded",
                    suite.excluded_ill_conditioned
                ))
            } else {
                None
            },
        });
    }
    Ok(rows)
}

fn check_invariants(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    spec: &finsler::SampleSpec,
    tol: &Tolerances,
) -> Result<Vec<CheckRow>> {
    let suite = invariant_suite(model, sigma, spec, tol.strict, tol.sigma_weighted)?;
    let mut rows = Vec::with_capacity(suite.items.len());
    for item in &suite.items {
        let mut note = item.note.clone();
        if let Some(rate) = item.hypothesis_rate {
            let extra = format!("hypothesis rate {rate}");
            note = Some(match note {
                Some(n) => format!("{n}; {extra}"),
                None => extra,
            });
        }
        rows.push(CheckRow {
            check: "invariants".into(),
            id: item.invariant.clone(),
            description: format!("{} invariant", item.class),
            samples: item.samples,
            max_abs: item.max_abs,
            max_rel: item.max_rel,
            tolerance: item.tolerance,
            pass: item.pass,
            note,
        });
    }
    Ok(rows)
}

fn check_homothety(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    spec: &finsler::SampleSpec,
    tol: &Tolerances,
) -> Result<CheckRow> {
    let report = homothety_test(model, sigma, spec, tol.homothety)?;
    let detail: Vec<String> = report
        .predicates
        .iter()
        .map(|p| format!("{} = {:e} ({})", p.name, p.max_value, p.holds))
        .collect();
    let max_value = report
        .predicates
        .iter()
        .map(|p| p.max_value)
        .fold(0.0f64, f64::max);
    Ok(CheckRow {
        check: "homothety".into(),
        id: "homothety-equivalence".into(),
        description: "five independent characterizations of a constant factor agree".into(),
        samples: report.samples,
        max_abs: max_value,
        max_rel: max_value,
        tolerance: report.threshold,
        pass: report.consistent,
        note: Some(format!(
            "is_homothety = {}; {}",
            report.is_homothety,
            detail.join("; ")
        )),
    })
}

fn check_conformality(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    spec: &finsler::SampleSpec,
    tol: &Tolerances,
) -> Result<CheckRow> {
    let lifted = conformal_lift(model, sigma);
    let report = conformality_test(model, &lifted, spec, tol.conformality)?;
    let mut max_err: f64 = 0.0;
    for est in &report.sigma_estimates {
        max_err = max_err.max((est.sigma - sigma.eval(&est.x)).abs());
    }
    let pass = report.conformal && max_err <= tol.conformality;
    Ok(CheckRow {
        check: "conformality".into(),
        id: "conformality-round-trip".into(),
        description: "the lifted model is recognized as conformal and σ is recovered at base points"
            .into(),
        samples: report.samples,
        max_abs: max_err.max(report.max_fiber_residual),
        max_rel: max_err.max(report.max_fiber_residual),
        tolerance: tol.conformality,
        pass,
        note: report
            .witness
            .as_ref()
            .map(|w| format!("fiber-dependence witness at x = {:?}", w.x())),
    })
}

/// Initial support element for trajectory checks: explicit config value or
/// the first sampled element.
fn initial_support(
    model: &FinslerModel,
    scenario: &Scenario,
    spec: &finsler::SampleSpec,
) -> Result<(SupportElement, DynamicsSpec)> {
    let dyn_spec = scenario.dynamics.clone().unwrap_or_default();
    let u = match &dyn_spec.initial {
        Some(init) => SupportElement::new(init.x.clone(), init.y.clone())?,
        None => sample_support(model, spec)?
            .into_iter()
            .next()
            .ok_or_else(|| anyhow!("sampling produced no support elements"))?,
    };
    Ok((u, dyn_spec))
}

fn check_geodesic(
    model: &FinslerModel,
    scenario: &Scenario,
    spec: &finsler::SampleSpec,
    tol: &Tolerances,
) -> Result<(GeodesicRun, CheckRow)> {
    let (u, dyn_spec) = initial_support(model, scenario, spec)?;
    let run = geodesic_integrate(model, &u, dyn_spec.t_end, dyn_spec.step)
        .context("geodesic integration")?;
    let healthy = !matches!(
        run.stop,
        StopReason::FiberCollapse { .. } | StopReason::NonFinite { .. }
    );
    let note = match &run.stop {
        StopReason::Completed => None,
        other => Some(format!("integration stopped early: {other:?}")),
    };
    let row = CheckRow {
        check: "geodesic".into(),
        id: "geodesic-energy-conservation".into(),
        description: "the energy is a first integral along integrated geodesics".into(),
        samples: run.states.len(),
        max_abs: run.energy_drift,
        max_rel: run.energy_drift,
        tolerance: tol.energy_drift,
        pass: healthy && run.energy_drift <= tol.energy_drift,
        note,
    };
    Ok((run, row))
}

fn jacobi_basis(model: &FinslerModel, dyn_spec: &DynamicsSpec) -> (Vec<f64>, Vec<f64>) {
    let n = model.dim();
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let xi0 = dyn_spec.xi0.clone().unwrap_or(e0);
    let dxi0 = dyn_spec.dxi0.clone().unwrap_or_else(|| vec![0.0; n]);
    (xi0, dxi0)
}

fn check_jacobi_linearity(
    model: &FinslerModel,
    run: &GeodesicRun,
    scenario: &Scenario,
    tol: &Tolerances,
) -> Result<CheckRow> {
    let n = model.dim();
    let dyn_spec = scenario.dynamics.clone().unwrap_or_default();
    let (xi_a, eta_a) = jacobi_basis(model, &dyn_spec);
    // Second basis field: last coordinate direction fed through the rate.
    let mut xi_b = vec![0.0; n];
    let mut eta_b = vec![0.0; n];
    eta_b[n - 1] = 1.0;
    if n > 1 {
        xi_b[n - 1] = 1.0;
    } else {
        xi_b[0] = 1.0;
    }
    let a = jacobi_integrate(model, run, &xi_a, &eta_a)?;
    let b = jacobi_integrate(model, run, &xi_b, &eta_b)?;
    let combo_xi: Vec<f64> = (0..n).map(|i| 2.0 * xi_a[i] + 3.0 * xi_b[i]).collect();
    let combo_eta: Vec<f64> = (0..n).map(|i| 2.0 * eta_a[i] + 3.0 * eta_b[i]).collect();
    let combo = jacobi_integrate(model, run, &combo_xi, &combo_eta)?;
    let mut residual: f64 = 0.0;
    for ((sa, sb), sc) in a.states.iter().zip(&b.states).zip(&combo.states) {
        for i in 0..n {
            residual = residual.max((sc.xi[i] - 2.0 * sa.xi[i] - 3.0 * sb.xi[i]).abs());
        }
    }
    Ok(CheckRow {
        check: "jacobi".into(),
        id: "jacobi-superposition".into(),
        description: "the Jacobi equation is linear: solutions superpose".into(),
        samples: combo.states.len(),
        max_abs: residual,
        max_rel: residual,
        tolerance: tol.jacobi_linearity,
        pass: residual <= tol.jacobi_linearity,
        note: None,
    })
}

fn check_correspondence(
    model: &FinslerModel,
    sigma: &ConformalFactor,
    run: &GeodesicRun,
    scenario: &Scenario,
    tol: &Tolerances,
) -> Result<Vec<CheckRow>> {
    let dyn_spec = scenario.dynamics.clone().unwrap_or_default();
    let geo = geodesic_correspondence(model, sigma, run, tol.correspondence)?;
    let scale = 1.0f64
        .max(geo.max_direct_residual)
        .max(geo.max_difference_formula);
    let route_rel = geo.max_route_disagreement / scale;
    let geo_row = CheckRow {
        check: "correspondence".into(),
        id: "geodesic-residual-route-agreement".into(),
        description:
            "the lifted geodesic residual along the base curve matches the closed-form difference"
                .into(),
        samples: geo.points_checked,
        max_abs: geo.max_route_disagreement,
        max_rel: route_rel,
        tolerance: tol.correspondence,
        pass: route_rel <= tol.correspondence,
        note: Some(format!("geodesic preserved = {}", geo.preserved)),
    };

    let (xi0, dxi0) = jacobi_basis(model, &dyn_spec);
    let jac = jacobi_correspondence(model, sigma, run, &xi0, &dxi0, tol.correspondence)?;
    let jac_row = if jac.applicable {
        let div = jac.max_xi_divergence.unwrap_or(f64::INFINITY);
        CheckRow {
            check: "correspondence".into(),
            id: "jacobi-field-transfer".into(),
            description:
                "when the difference blocks vanish along the curve, Jacobi fields carry over"
                    .into(),
            samples: jac.hypothesis_points,
            max_abs: div,
            max_rel: div,
            tolerance: tol.correspondence,
            pass: jac.preserved.unwrap_or(false),
            note: Some(format!(
                "hypotheses: curvature {:e}, contraction {:e}",
                jac.hypothesis_curvature, jac.hypothesis_contraction
            )),
        }
    } else {
        // Hypotheses fail along this curve: nothing to compare, so the row
        // passes vacuously with zero residual and the note says why.
        CheckRow {
            check: "correspondence".into(),
            id: "jacobi-field-transfer".into(),
            description:
                "when the difference blocks vanish along the curve, Jacobi fields carry over"
                    .into(),
            samples: jac.hypothesis_points,
            max_abs: 0.0,
            max_rel: 0.0,
            tolerance: tol.correspondence,
            pass: true,
            note: jac.note.clone(),
        }
    };
    Ok(vec![geo_row, jac_row])
}

// ---------------------------------------------------------------------------
// Trajectory output
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct JacobiLine<'a> {
    t: f64,
    x: &'a [f64],
    y: &'a [f64],
    xi: &'a [f64],
    dxi: &'a [f64],
}

/// Integrate the scenario's geodesic and stream it as JSON lines
/// (one state per line, stop reason last); optionally also as CSV.
pub fn write_geodesic(
    scenario: &Scenario,
    seed_override: Option<u64>,
    out: &mut dyn Write,
    csv: Option<&mut dyn Write>,
) -> Result<()> {
    let model = scenario.model.build()?;
    let spec = scenario.samples.to_engine(seed_override);
    spec.validate(model.dim())?;
    let (u, dyn_spec) = initial_support(&model, scenario, &spec)?;
    let run = geodesic_integrate(&model, &u, dyn_spec.t_end, dyn_spec.step)?;
    for state in &run.states {
        serde_json::to_writer(&mut *out, state)?;
        writeln!(out)?;
    }
    serde_json::to_writer(
        &mut *out,
        &serde_json::json!({ "stop": run.stop, "energy_drift": run.energy_drift }),
    )?;
    writeln!(out)?;
    if let Some(csv) = csv {
        let n = model.dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("y{i}")));
        writeln!(csv, "{}", header.join(","))?;
        for s in &run.states {
            let mut fields = vec![format!("{:.17e}", s.t)];
            fields.extend(s.x.iter().map(|v| format!("{v:.17e}")));
            fields.extend(s.y.iter().map(|v| format!("{v:.17e}")));
            writeln!(csv, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

/// Integrate the scenario's Jacobi field along its geodesic and stream
/// (t, x, y, xi, dxi) as JSON lines; optionally also as CSV.
pub fn write_jacobi(
    scenario: &Scenario,
    seed_override: Option<u64>,
    out: &mut dyn Write,
    csv: Option<&mut dyn Write>,
) -> Result<()> {
    let model = scenario.model.build()?;
    let spec = scenario.samples.to_engine(seed_override);
    spec.validate(model.dim())?;
    let (u, dyn_spec) = initial_support(&model, scenario, &spec)?;
    let run = geodesic_integrate(&model, &u, dyn_spec.t_end, dyn_spec.step)?;
    let (xi0, dxi0) = jacobi_basis(&model, &dyn_spec);
    let jac = jacobi_integrate(&model, &run, &xi0, &dxi0)?;
    for (state, base) in jac.states.iter().zip(&jac.base) {
        let line = JacobiLine {
            t: state.t,
            x: &base.x,
            y: &base.y,
            xi: &state.xi,
            dxi: &state.dxi,
        };
        serde_json::to_writer(&mut *out, &line)?;
        writeln!(out)?;
    }
    serde_json::to_writer(&mut *out, &serde_json::json!({ "stop": jac.stop }))?;
    writeln!(out)?;
    if let Some(csv) = csv {
        let n = model.dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("y{i}")));
        header.extend((0..n).map(|i| format!("xi{i}")));
        header.extend((0..n).map(|i| format!("dxi{i}")));
        writeln!(csv, "{}", header.join(","))?;
        for (state, base) in jac.states.iter().zip(&jac.base) {
            let mut fields = vec![format!("{:.17e}", state.t)];
            for group in [&base.x, &base.y, &state.xi, &state.dxi] {
                fields.extend(group.iter().map(|v| format!("{v:.17e}")));
            }
            writeln!(csv, "{}", fields.join(","))?;
        }
    }
    Ok(())
}

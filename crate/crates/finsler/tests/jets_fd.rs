//! Every jet coefficient of the energy up to order six must match a
//! high-order central-difference oracle, on every model family.

mod common;

use common::{fd_partial, multi_indices, rel_dev};
use finsler::{
    conformal_lift, Bump, ConformalFactor, FinslerModel, MetricSpec, MultiIndex, RandersDrift,
    SupportElement,
};

/// Compare ∂^α E for all |α| ≤ 6 at one support element. `hx`/`hy` are the
/// oracle base steps for base and fiber variables.
fn check_family(name: &str, model: &FinslerModel, x: &[f64], y: &[f64], hx: f64, hy: f64) {
    let n = model.dim();
    let u = SupportElement::new(x.to_vec(), y.to_vec()).unwrap();
    let jet = model.energy_jet(&u, 6).unwrap();
    let f = |coords: &[f64]| -> f64 {
        model
            .energy_value(&coords[..n], &coords[n..])
            .expect("energy evaluation inside probe region")
    };
    let at = u.coords();
    let steps: Vec<f64> = (0..2 * n).map(|v| if v < n { hx } else { hy }).collect();
    let mut worst: f64 = 0.0;
    let mut worst_alpha = String::new();
    for alpha in multi_indices(2 * n, 6) {
        let exact = jet.partial(&MultiIndex::new(alpha.clone())).unwrap();
        let approx = fd_partial(&f, &at, &alpha, &steps);
        let dev = rel_dev(exact, approx);
        if dev > worst {
            worst = dev;
            worst_alpha = format!("{alpha:?} (jet {exact:.6e}, fd {approx:.6e})");
        }
    }
    assert!(
        worst <= 1e-5,
        "{name}: worst coefficient deviation {worst:.3e} at {worst_alpha}"
    );
}

#[test]
fn euclidean_energy_jets_match_finite_differences() {
    let model = FinslerModel::euclidean(2);
    check_family("euclidean", &model, &[0.3, -0.7], &[0.9, 1.2], 0.1, 0.1);
}

#[test]
fn sphere_energy_jets_match_finite_differences() {
    let model = FinslerModel::sphere(1.0);
    check_family("sphere", &model, &[1.1, 0.4], &[0.8, 1.1], 0.1, 0.1);
}

#[test]
fn randers_energy_jets_match_finite_differences() {
    let model = FinslerModel::randers(
        2,
        MetricSpec::Identity,
        RandersDrift {
            base: vec![0.25, -0.1],
            modulation: Some(Bump {
                amplitude: 0.3,
                center: vec![0.1, -0.2],
                width: 1.5,
            }),
        },
    )
    .unwrap();
    check_family("randers", &model, &[0.3, 0.1], &[0.9, 1.1], 0.08, 0.06);
}

#[test]
fn quartic_energy_jets_match_finite_differences() {
    let model = FinslerModel::quartic(2);
    check_family("quartic", &model, &[0.0, 0.0], &[1.0, 1.2], 0.1, 0.06);
}

#[test]
fn lifted_energy_jets_match_finite_differences() {
    // A conformal lift is itself a model; its energy jets must satisfy the
    // same oracle.
    let base = FinslerModel::randers(
        2,
        MetricSpec::Identity,
        RandersDrift {
            base: vec![0.2, 0.0],
            modulation: None,
        },
    )
    .unwrap();
    let sigma = ConformalFactor::Bump(Bump {
        amplitude: 0.4,
        center: vec![0.3, -0.1],
        width: 1.2,
    });
    let model = conformal_lift(&base, &sigma);
    // The bump factor's short length scale needs a finer base step.
    check_family("lifted-randers", &model, &[0.2, 0.2], &[1.0, 0.9], 0.05, 0.05);
}

#[test]
fn three_dimensional_energy_jets_match_finite_differences() {
    let model = FinslerModel::randers(
        3,
        MetricSpec::Identity,
        RandersDrift {
            base: vec![0.3, 0.0, -0.15],
            modulation: None,
        },
    )
    .unwrap();
    check_family(
        "randers-3d",
        &model,
        &[0.1, -0.3, 0.2],
        &[0.9, 0.7, 1.0],
        0.08,
        0.06,
    );
}

//! Solver properties on library models.

use std::sync::Arc;

use proptest::prelude::*;

use popsplit::flat_metric::flat_distance;
use popsplit::harness::fit_order;
use popsplit::measure::DiscreteMeasure;
use popsplit::metric_space::{CompactSet, EpsilonNet, Point, Space};
use popsplit::model::{discretize_influx, discretize_kernel, library, ModelSpec};
use popsplit::solver::{simulate, SolverConfig};

fn division_model(growth: f64, division: f64, speed: f64) -> ModelSpec {
    let space = Arc::new(Space::interval(-1.0, 4.0).unwrap());
    let net = Arc::new(
        EpsilonNet::build(
            &space,
            CompactSet::Box {
                lower: vec![0.0],
                upper: vec![2.0],
            },
            0.2,
        )
        .unwrap(),
    );
    let kernel = discretize_kernel(space.clone(), &library::cell_division_kernel(division), net.clone());
    let influx = discretize_influx(space.clone(), &library::constant_point_influx(0.3, Point::real(0.1)), net.clone());
    ModelSpec::growth_only(space, net, library::constant_growth(growth))
        .unwrap()
        .with_kernel(kernel)
        .unwrap()
        .with_influx(influx)
        .unwrap()
        .with_transport(library::constant_velocity_transport(vec![speed]))
        .unwrap()
}

#[test]
fn time_regularity_constant_is_stable() {
    let model = division_model(-0.5, 0.5, 0.8);
    let mu0 = DiscreteMeasure::new(vec![Point::real(0.3), Point::real(1.1)], vec![1.0, 0.5]).unwrap();
    let constants: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let traj = simulate(&model, &mu0, &SolverConfig::new(dt, 1.0)).unwrap();
            traj.states
                .windows(2)
                .map(|w| flat_distance(&model.space, &w[0], &w[1]).unwrap() / dt)
                .fold(0.0, f64::max)
        })
        .collect();
    for w in constants.windows(2) {
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{constants:?}");
    }
}

#[test]
fn perturbation_ratio_is_stable() {
    let model = division_model(0.2, 0.7, 0.5);
    let mu0 = DiscreteMeasure::new(vec![Point::real(0.4), Point::real(1.5)], vec![1.0, 1.0]).unwrap();
    let cfg = SolverConfig::new(0.05, 1.0);
    let base = simulate(&model, &mu0, &cfg).unwrap();
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&delta| {
            // moving an atom by δ: ρ_F(μ0, ν0) = δ
            let nu0 = DiscreteMeasure::new(vec![Point::real(0.4 + delta), Point::real(1.5)], vec![1.0, 1.0]).unwrap();
            let d0 = flat_distance(&model.space, &mu0, &nu0).unwrap();
            let moved = simulate(&model, &nu0, &cfg).unwrap();
            flat_distance(&model.space, base.final_state(), moved.final_state()).unwrap() / d0
        })
        .collect();
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    assert!((hi - lo) / lo <= 0.1, "{ratios:?}");
}

#[test]
fn euler_error_is_first_order_with_births() {
    let model = division_model(-0.3, 0.3, 0.0);
    let mu0 = DiscreteMeasure::dirac(Point::real(1.6), 1.0).unwrap();
    let reference = simulate(&model, &mu0, &SolverConfig::new(0.00125, 1.0)).unwrap();
    let dts = [0.08, 0.04, 0.02, 0.01];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let t = simulate(&model, &mu0, &SolverConfig::new(dt, 1.0)).unwrap();
            flat_distance(&model.space, t.final_state(), reference.final_state()).unwrap()
        })
        .collect();
    let fit = fit_order(&dts, &errs).unwrap();
    assert!(fit.order > 0.85, "{fit:?} {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_stay_nonnegative_and_support_bounded(
        growth in -5.0f64..5.0,
        division in 0.0f64..3.0,
        speed in -0.5f64..0.5,
        x0 in 0.0f64..2.0,
        m0 in 0.1f64..3.0,
    ) {
        let model = division_model(growth, division, speed);
        let dt = 0.1;
        let mu0 = DiscreteMeasure::dirac(Point::real(x0), m0).unwrap();
        let traj = simulate(&model, &mu0, &SolverConfig::new(dt, 1.0)).unwrap();
        let l = model.net.len();
        for (k, (state, diag)) in traj.states.iter().zip(&traj.diagnostics).enumerate() {
            prop_assert!(state.weights().iter().all(|w| *w >= 0.0));
            prop_assert!(diag.support_size <= 1 + k * l);
        }
    }
}

//! Cells grow along the size axis, die at a constant rate and divide into two
//! halves. Prints total mass, mean size and support size over time.

use std::sync::Arc;

use popsplit::measure::{approximate_initial, DensitySource, SourceMeasure};
use popsplit::metric_space::{CompactSet, EpsilonNet, Space};
use popsplit::model::{discretize_kernel, library, validate_model, ModelSpec};
use popsplit::solver::{simulate, SolverConfig};

fn main() -> popsplit::Result<()> {
    let space = Arc::new(Space::interval(0.0, 4.0)?);
    let k = CompactSet::Box {
        lower: vec![0.0],
        upper: vec![2.0],
    };
    let net = Arc::new(EpsilonNet::build(&space, k, 0.05)?);

    let division = discretize_kernel(space.clone(), &library::cell_division_kernel(1.0), net.clone());
    let model = ModelSpec::growth_only(space.clone(), net.clone(), library::constant_growth(-1.2))?
        .with_kernel(division)?
        .with_transport(library::constant_velocity_transport(vec![0.5]))?;

    let cfg = SolverConfig::new(0.02, 3.0);
    let report = validate_model(&model, cfg.dt);
    print!("{report}");

    let newborns = DensitySource::new(Arc::new(|x| (-(x[0] - 0.6).powi(2) / 0.02).exp()), vec![0.2], vec![1.0], 200);
    let mu0 = approximate_initial(&space, &net, &SourceMeasure::EuclideanDensity(newborns))?;
    let traj = simulate(&model, &mu0, &cfg)?;

    println!("\n{:>5} {:>10} {:>10} {:>8}", "t", "mass", "mean size", "atoms");
    for (k, (t, mu)) in traj.times.iter().zip(&traj.states).enumerate() {
        if k % 15 != 0 && k + 1 != traj.len() {
            continue;
        }
        let mass = mu.total_mass();
        let mean = mu.integrate(|p| p.coords().map_or(0.0, |c| c[0])) / mass;
        println!("{t:>5.2} {mass:>10.5} {mean:>10.4} {:>8}", mu.len());
    }
    Ok(())
}

//! How far the transport and growth semigroups are from commuting.
//! The defect shrinks like t² and scales linearly with the influx.

use std::sync::Arc;

use popsplit::harness::fit_order;
use popsplit::measure::DiscreteMeasure;
use popsplit::metric_space::{CompactSet, EpsilonNet, Point, Space};
use popsplit::model::{discretize_influx, library, ModelSpec};
use popsplit::solver::commutator_defect;

fn model(influx: f64) -> popsplit::Result<ModelSpec> {
    let space = Arc::new(Space::interval(-1.0, 3.0)?);
    let k = CompactSet::Box {
        lower: vec![0.0],
        upper: vec![1.0],
    };
    let net = Arc::new(EpsilonNet::build(&space, k, 0.25)?);
    let n = discretize_influx(space.clone(), &library::constant_point_influx(influx, Point::real(0.5)), net.clone());
    ModelSpec::growth_only(space, net, library::constant_growth(0.5))?
        .with_transport(library::constant_velocity_transport(vec![1.0]))?
        .with_influx(n)
}

fn main() -> popsplit::Result<()> {
    let mu = DiscreteMeasure::dirac(Point::real(0.1), 1.0)?;
    let ts = [0.2, 0.1, 0.05, 0.025];
    let single = model(2.0)?.freeze(0.0, &mu);
    let double = model(4.0)?.freeze(0.0, &mu);
    let mut defects = Vec::new();
    println!("{:>6} {:>12} {:>12}", "t", "defect", "2× influx");
    for t in ts {
        let d = commutator_defect(&single, &mu, t, 64)?;
        let d2 = commutator_defect(&double, &mu, t, 64)?;
        println!("{t:>6} {d:>12.4e} {d2:>12.4e}");
        defects.push(d);
    }
    println!("log-log slope {:.3}", fit_order(&ts, &defects)?.order);
    Ok(())
}

//! A population on a small road network: individuals arrive at one edge
//! point and grow logistically in total mass.

use std::sync::Arc;

use popsplit::measure::DiscreteMeasure;
use popsplit::metric_space::{CompactSet, EpsilonNet, Point, Space, SpaceSpec};
use popsplit::model::{discretize_influx, library, ModelSpec};
use popsplit::solver::{simulate, SolverConfig};

fn main() -> popsplit::Result<()> {
    let roads = Arc::new(Space::new(SpaceSpec::Graph {
        vertices: None,
        edges: vec![(0, 1, 1.0), (1, 2, 0.8), (1, 3, 1.2), (2, 3, 0.5)],
    })?);
    let net = Arc::new(EpsilonNet::build(&roads, CompactSet::Whole, 0.25)?);
    let gate = Point::OnEdge { edge: 0, offset: 0.3 };
    let arrivals = discretize_influx(roads.clone(), &library::constant_point_influx(0.8, gate.clone()), net.clone());
    let growth = library::logistic_total_mass_growth(1.5, 4.0, 1.5)?;
    let model = ModelSpec::growth_only(roads.clone(), net.clone(), growth)?.with_influx(arrivals)?;

    let mu0 = DiscreteMeasure::new(vec![Point::OnEdge { edge: 1, offset: 0.8 }, Point::OnEdge { edge: 3, offset: 0.5 }], vec![0.2, 0.3])?;
    let traj = simulate(&model, &mu0, &SolverConfig::new(0.05, 6.0))?;

    let v0 = Point::OnEdge { edge: 0, offset: 0.0 };
    let v3 = Point::OnEdge { edge: 2, offset: 1.2 };
    println!("distance vertex 0 → vertex 3: {}", roads.distance(&v0, &v3)?);
    for (t, d) in traj.times.iter().zip(&traj.diagnostics).step_by(20) {
        println!("t = {t:.1}: mass {:.4}, atoms {}", d.total_mass, d.support_size);
    }
    let last = traj.final_state();
    let near_gate = last.integrate(|p| if roads.dist(p, &gate) < 0.3 { 1.0 } else { 0.0 });
    println!("final mass {:.4} (capacity 4 plus inflow), {:.1}% within 0.3 of the gate", last.total_mass(), 100.0 * near_gate / last.total_mass());
    Ok(())
}

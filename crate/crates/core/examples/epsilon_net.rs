//! ε-nets, the partition of unity built on them, and projecting initial
//! data onto net centers.

use popsplit::flat_metric::flat_distance;
use popsplit::measure::{approximate_initial, DensitySource, SourceMeasure};
use popsplit::metric_space::{CompactSet, EpsilonNet, Point, Space, SpaceSpec};
use std::sync::Arc;

fn main() -> popsplit::Result<()> {
    let line = Space::interval(0.0, 1.0)?;
    let net = EpsilonNet::build(&line, CompactSet::Whole, 0.25)?;
    let centers: Vec<String> = net.centers().iter().map(|c| c.to_string()).collect();
    println!("[0,1], ε = 0.25: {} centers {}", net.len(), centers.join(" "));
    println!("partition Lipschitz bound {:.1}", net.lipschitz_constant());
    for x in [0.0, 0.3, 0.51] {
        let phi = net.partition_of_unity(&line, &Point::real(x));
        let shown: Vec<String> = phi.iter().map(|v| format!("{v:.3}")).collect();
        println!("  φ({x}) = [{}], sum {:.3}", shown.join(", "), phi.iter().sum::<f64>());
    }

    // A star graph: a center at every vertex plus evenly spaced edge points.
    let star = Space::new(SpaceSpec::Graph {
        vertices: None,
        edges: vec![(0, 1, 1.0), (0, 2, 0.6), (0, 3, 0.3)],
    })?;
    let gnet = EpsilonNet::build(&star, CompactSet::Whole, 0.2)?;
    println!("\nstar graph, ε = 0.2: {} centers", gnet.len());

    // Initial data given as a density; the error is at most ε times its mass.
    let density = DensitySource::new(Arc::new(|x| 2.0 * x[0]), vec![0.0], vec![1.0], 400);
    let source = SourceMeasure::EuclideanDensity(density);
    let fine = source.to_discrete()?;
    for eps in [0.2, 0.1, 0.05] {
        let net = EpsilonNet::build(&line, CompactSet::Whole, eps)?;
        let mu0 = approximate_initial(&line, &net, &source)?;
        let err = flat_distance(&line, &fine, &mu0)?;
        println!("ε = {eps:<5} atoms {:>3}, ρ_F = {err:.4} ≤ ε·mass = {:.4}", mu0.len(), eps * fine.total_mass());
    }
    Ok(())
}

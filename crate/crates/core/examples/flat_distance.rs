//! Flat (bounded-Lipschitz) distance between discrete measures.

use popsplit::flat_metric::{flat_distance, flat_distance_oracle, FlatLp};
use popsplit::measure::DiscreteMeasure;
use popsplit::metric_space::{Point, Space, SpaceSpec};

fn main() -> popsplit::Result<()> {
    let line = Space::interval(-5.0, 5.0)?;

    // Equal masses: transport cost m·d, capped at 2m (delete and recreate).
    for d in [0.5, 1.0, 1.9, 3.0] {
        let a = DiscreteMeasure::dirac(Point::real(0.0), 1.5)?;
        let b = DiscreteMeasure::dirac(Point::real(d), 1.5)?;
        println!("1.5·δ_0 vs 1.5·δ_{d}: {:.6}", flat_distance(&line, &a, &b)?);
    }

    // Against the zero measure the distance is the total mass.
    let mu = DiscreteMeasure::new(
        vec![Point::real(-1.0), Point::real(0.2), Point::real(2.5)],
        vec![0.3, 1.2, 0.5],
    )?;
    println!("‖μ‖ = {} = {}", mu.total_mass(), flat_distance(&line, &mu, &DiscreteMeasure::zero())?);

    // Unbalanced masses on a finite metric, with the optimal test function.
    let space = Space::new(SpaceSpec::Finite {
        matrix: vec![
            vec![0.0, 0.4, 1.0, 2.5],
            vec![0.4, 0.0, 0.8, 2.1],
            vec![1.0, 0.8, 0.0, 1.5],
            vec![2.5, 2.1, 1.5, 0.0],
        ],
    })?;
    let mu = DiscreteMeasure::new(vec![Point::Index(0), Point::Index(3)], vec![2.0, 0.5])?;
    let nu = DiscreteMeasure::new(vec![Point::Index(1), Point::Index(2)], vec![1.0, 1.0])?;
    let lp = FlatLp::new(&space, &mu, &nu)?;
    let (value, psi) = lp.solve(1e-9)?;
    println!("\nfinite metric: LP {value:.9}, oracle {:.9}", flat_distance_oracle(&space, &mu, &nu)?);
    for ((p, c), s) in lp.points().iter().zip(lp.coefficients()).zip(&psi) {
        println!("  point {p}: μ-ν = {c:+.2}, ψ = {s:+.3}");
    }
    Ok(())
}

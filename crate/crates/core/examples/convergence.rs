//! Empirical convergence orders of the scheme in the time step and the net
//! radius, measured in the flat metric against closed-form solutions.

use popsplit::harness::config::{ReferenceChoice, RunConfig};
use popsplit::harness::{convergence_study, Axis, ConvergenceReport};
use serde_json::json;

fn show(r: &ConvergenceReport) {
    println!("{:?} ({})", r.axis, r.reference);
    for row in &r.rows {
        println!("  {:>8} {:.4e}", row.parameter, row.error);
    }
    if let Some(fit) = r.fit {
        println!("  order {:.3}, constant {:.3}", fit.order, fit.constant);
    }
}

fn main() -> popsplit::Result<()> {
    let cfg = RunConfig::from_value(json!({
        "schema": 1,
        "space": {"type": "euclidean_box", "dims": [[0.0, 1.0]]},
        "net": {"epsilon": 0.1},
        "model": {"growth": {"family": "constant", "rate": 1.0}},
        "initial": {"kind": "density", "shape": "tent", "mass": 1.0, "lower": [0.0], "upper": [1.0]},
        "solver": {"dt": 0.001, "t_end": 1.0}
    }))?;
    show(&convergence_study(&cfg, Axis::Dt, &[0.1, 0.05, 0.025, 0.0125], ReferenceChoice::Auto)?);
    show(&convergence_study(&cfg, Axis::Epsilon, &[0.2, 0.1, 0.05, 0.025], ReferenceChoice::Auto)?);

    // No closed form with cell division, so compare with a refined run.
    let mut v = cfg.to_value();
    v["model"]["kernel"] = json!({"family": "cell_division", "rate": 0.5});
    v["model"]["growth"] = json!({"family": "constant", "rate": -0.5});
    let dividing = RunConfig::from_value(v)?;
    show(&convergence_study(&dividing, Axis::Dt, &[0.1, 0.05, 0.025], ReferenceChoice::Auto)?);
    Ok(())
}

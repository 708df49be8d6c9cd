//! Named model components used by JSON run configs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SourceMeasure};
use crate::metric_space::Point;
use crate::model::{GrowthFn, LinearInflux, LinearKernel, MapEval, TransportMap, VectorField};

/// `c ≡ rate`.
pub fn constant_growth(rate: f64) -> GrowthFn {
    GrowthFn::new(Arc::new(move |_, _, _| rate), rate.abs())
}

/// `c(μ) = rate · (1 − μ(U)/capacity)`. The growth rate depends on the
/// measure, so the sup bound is declared by the caller.
pub fn logistic_total_mass_growth(rate: f64, capacity: f64, sup_bound: f64) -> Result<GrowthFn> {
    if !(capacity > 0.0) {
        return Err(Error::Model(format!("capacity must be positive, got {capacity}")));
    }
    Ok(GrowthFn::new(
        Arc::new(move |_, _, mu: &DiscreteMeasure| rate * (1.0 - mu.total_mass() / capacity)),
        sup_bound,
    ))
}

/// Binary fission: an individual at `x` produces two at `x/2` at the given
/// rate, `η(t, x) = 2·rate·δ_{x/2}`. Euclidean points only.
pub fn cell_division_kernel(rate: f64) -> LinearKernel {
    LinearKernel {
        eval: Arc::new(move |_, x| {
            let half = match x {
                Point::Coords(c) => Point::Coords(c.iter().map(|v| v / 2.0).collect()),
                other => other.clone(),
            };
            SourceMeasure::Discrete(DiscreteMeasure::from_parts_unchecked(vec![half], vec![2.0 * rate]))
        }),
        mass_bound: 2.0 * rate.abs(),
    }
}

/// `N(t) = rate · δ_point`.
pub fn constant_point_influx(rate: f64, point: Point) -> LinearInflux {
    LinearInflux {
        eval: Arc::new(move |_| {
            SourceMeasure::Discrete(DiscreteMeasure::from_parts_unchecked(vec![point.clone()], vec![rate]))
        }),
        mass_bound: rate.abs(),
    }
}

pub fn identity_transport() -> TransportMap {
    TransportMap::identity()
}

/// `X(t1, t0, x) = x + (t1 − t0) v`.
pub fn constant_velocity_transport(velocity: Vec<f64>) -> TransportMap {
    let speed = velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
    let map: MapEval = Arc::new(move |t1, t0, x, _| match x {
        Point::Coords(c) if c.len() == velocity.len() => Ok(Point::Coords(
            c.iter().zip(&velocity).map(|(xi, vi)| xi + (t1 - t0) * vi).collect(),
        )),
        _ => Err(Error::Transport(format!("velocity of dimension {} cannot move {x}", velocity.len()))),
    });
    TransportMap::explicit(map, 0.0, speed)
}

/// Flow of the affine field `b(x) = rate ⊙ x + offset`.
pub fn ode_flow(rate: Vec<f64>, offset: Vec<f64>, substeps: usize) -> TransportMap {
    let lipschitz = rate.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let field: VectorField = Arc::new(move |_, x, _| {
        x.iter()
            .enumerate()
            .map(|(i, xi)| rate.get(i).copied().unwrap_or(0.0) * xi + offset.get(i).copied().unwrap_or(0.0))
            .collect()
    });
    TransportMap::ode_flow(field, substeps, lipschitz, f64::INFINITY)
}

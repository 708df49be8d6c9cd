//! Closed-form solutions for the library cases with an exact answer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metric_space::{Point, Space};

use super::config::{GrowthConfig, InfluxConfig, ModelConfig, TransportConfig};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Reference {
    /// `e^{ct} μ0`.
    PureGrowth { rate: f64 },
    /// `μ0` shifted by `t·v`.
    PureTransport { velocity: Vec<f64> },
    /// `μ0 + n t δ_z`.
    ConstantInflux { rate: f64, point: Point },
    /// `e^{ct} μ0 + n (e^{ct} − 1)/c δ_z`.
    GrowthPlusInflux { growth: f64, rate: f64, point: Point },
}

pub const REFERENCE_NAMES: [&str; 4] = ["pure_growth", "pure_transport", "constant_influx", "growth_plus_influx"];

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::PureGrowth { .. } => REFERENCE_NAMES[0],
            Reference::PureTransport { .. } => REFERENCE_NAMES[1],
            Reference::ConstantInflux { .. } => REFERENCE_NAMES[2],
            Reference::GrowthPlusInflux { .. } => REFERENCE_NAMES[3],
        }
    }

    /// Recognizes models whose solution the library knows in closed form.
    pub fn detect(model: &ModelConfig) -> Option<Self> {
        if model.kernel.is_some() {
            return None;
        }
        let rate = match model.growth {
            GrowthConfig::Zero => 0.0,
            GrowthConfig::Constant { rate } => rate,
            GrowthConfig::Logistic { .. } => return None,
        };
        match (&model.transport, &model.influx) {
            (TransportConfig::Identity, None) => Some(Reference::PureGrowth { rate }),
            (TransportConfig::ConstantVelocity { velocity }, None) if rate == 0.0 => {
                Some(Reference::PureTransport { velocity: velocity.clone() })
            }
            (TransportConfig::Identity, Some(InfluxConfig::Point { rate: n, point })) if rate == 0.0 => {
                Some(Reference::ConstantInflux {
                    rate: *n,
                    point: point.clone(),
                })
            }
            (TransportConfig::Identity, Some(InfluxConfig::Point { rate: n, point })) => Some(Reference::GrowthPlusInflux {
                growth: rate,
                rate: *n,
                point: point.clone(),
            }),
            _ => None,
        }
    }

    pub fn at(&self, space: &Space, mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
        match self {
            Reference::PureGrowth { rate } => mu0.scaled((rate * t).exp()),
            Reference::PureTransport { velocity } => mu0.push_forward(space, |x| match x {
                Point::Coords(c) if c.len() == velocity.len() => {
                    Ok(Point::Coords(c.iter().zip(velocity).map(|(a, v)| a + t * v).collect()))
                }
                _ => Err(Error::Transport(format!("cannot shift {x}"))),
            }),
            Reference::ConstantInflux { rate, point } => Ok(mu0.sum(&DiscreteMeasure::dirac(point.clone(), rate * t)?)),
            Reference::GrowthPlusInflux { growth, rate, point } => {
                let born = if *growth == 0.0 {
                    rate * t
                } else {
                    rate * ((growth * t).exp() - 1.0) / growth
                };
                Ok(mu0.scaled((growth * t).exp())?.sum(&DiscreteMeasure::dirac(point.clone(), born)?))
            }
        }
    }
}

/// Looks a reference up by name, taking its parameters from `model`.
pub fn analytic_reference(name: &str, model: &ModelConfig, space: &Space, mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !REFERENCE_NAMES.contains(&name) {
        return Err(Error::InvalidInput(format!("unknown reference {name:?}")));
    }
    match Reference::detect(model) {
        Some(r) if r.name() == name => r.at(space, mu0, t),
        _ => Err(Error::InvalidInput(format!("model does not match reference {name:?}"))),
    }
}

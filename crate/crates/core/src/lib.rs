pub mod bayes;
pub mod error;
pub mod flat_metric;
pub mod harness;
pub mod measure;
pub mod metric_space;
pub mod model;
pub mod solver;

pub use error::{Error, Result};

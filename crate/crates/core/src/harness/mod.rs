//! Config-driven runs: simulation, convergence and commutator studies, and
//! grid posteriors, with CSV/JSON output and the command-line front end.

pub mod cli;
pub mod config;
pub mod convergence;
pub mod output;
pub mod reference;
pub mod study;

pub use config::RunConfig;
pub use convergence::{fit_order, OrderFit};
pub use reference::{analytic_reference, Reference};
pub use study::{convergence_study, run_bayes, run_commutator, run_simulation, Axis, ConvergenceReport};

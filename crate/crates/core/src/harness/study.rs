//! Convergence, commutator and inversion runs driven by a [`RunConfig`].

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::bayes::{
    posterior_grid, synthesize_data, uniform_prior, DataSet, ModelFamily, PosteriorGrid,
};
use crate::error::{Error, Result};
use crate::flat_metric::flat_distance;
use crate::measure::DiscreteMeasure;
use crate::model::{InfluxFiniteRange, ModelSpec};
use crate::solver::{commutator_defect, simulate, Trajectory};

use super::config::{set_json_path, ReferenceChoice, RunConfig};
use super::convergence::{fit_order, is_monotone, OrderFit};
use super::reference::Reference;

/// Refinement factor for self-convergence references.
pub const SELF_REFINEMENT: f64 = 8.0;

pub fn run_simulation(cfg: &RunConfig) -> Result<Trajectory> {
    let a = cfg.assemble()?;
    simulate(&a.model, &a.mu0, &cfg.solver)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Dt,
    Epsilon,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub parameter: f64,
    pub error: f64,
    pub final_support: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub axis: Axis,
    /// How the reference solution was obtained.
    pub reference: String,
    pub t_end: f64,
    pub rows: Vec<ConvergenceRow>,
    pub fit: Option<OrderFit>,
    pub monotone: bool,
    pub notes: Vec<String>,
}

impl ConvergenceReport {
    pub fn parameters(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.parameter).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

fn vary(cfg: &RunConfig, axis: Axis, v: f64) -> RunConfig {
    match axis {
        Axis::Dt => cfg.with_dt(v),
        Axis::Epsilon => cfg.with_epsilon(v),
    }
}

/// Error at `T` for each value of one discretization parameter, the others
/// held at their configured values.
///
/// With [`ReferenceChoice::Auto`] a closed-form solution is used when the model
/// has one; otherwise a run refined by [`SELF_REFINEMENT`] is the reference.
/// On the time axis the closed form starts from the net-approximated initial
/// data so that only the time error is measured; on the net axis it starts from
/// the source itself.
pub fn convergence_study(cfg: &RunConfig, axis: Axis, values: &[f64], choice: ReferenceChoice) -> Result<ConvergenceReport> {
    if values.is_empty() {
        return Err(Error::InvalidInput("convergence study needs parameter values".into()));
    }
    let analytic = match choice {
        ReferenceChoice::Auto => Reference::detect(&cfg.model),
        ReferenceChoice::SelfConvergence => None,
    };
    let t_end = cfg.solver.t_end;
    let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let self_reference = match analytic {
        Some(_) => None,
        None => {
            let rc = vary(cfg, axis, finest / SELF_REFINEMENT);
            Some(run_simulation(&rc)?.final_state().clone())
        }
    };
    let label = match (&analytic, axis) {
        (Some(r), Axis::Dt) => format!("analytic {} from the net initial data", r.name()),
        (Some(r), Axis::Epsilon) => format!("analytic {} from the source initial data", r.name()),
        (None, Axis::Dt) => format!("self-convergence against dt = {}", finest / SELF_REFINEMENT),
        (None, Axis::Epsilon) => format!("self-convergence against epsilon = {}", finest / SELF_REFINEMENT),
    };

    let rows: Vec<ConvergenceRow> = values
        .par_iter()
        .map(|&v| {
            let c = vary(cfg, axis, v);
            let a = c.assemble()?;
            let traj = simulate(&a.model, &a.mu0, &c.solver)?;
            let numeric = traj.final_state();
            let reference = match (&analytic, &self_reference) {
                (Some(r), _) => {
                    let start = match axis {
                        Axis::Dt => a.mu0.clone(),
                        Axis::Epsilon => a.source.to_discrete()?,
                    };
                    r.at(&a.space, &start, t_end)?
                }
                (None, Some(m)) => m.clone(),
                (None, None) => unreachable!("one reference is always prepared"),
            };
            Ok(ConvergenceRow {
                parameter: v,
                error: flat_distance(&a.space, numeric, &reference)?,
                final_support: numeric.len(),
            })
        })
        .collect::<Result<_>>()?;

    let h: Vec<f64> = rows.iter().map(|r| r.parameter).collect();
    let e: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let mut notes = Vec::new();
    let fit = if rows.len() < 3 {
        notes.push("fewer than 3 values: no order fitted".to_string());
        None
    } else if e.iter().any(|v| *v <= 0.0) {
        notes.push("an error is zero: no order fitted".to_string());
        None
    } else {
        Some(fit_order(&h, &e)?)
    };
    let monotone = is_monotone(&h, &e);
    if !monotone {
        notes.push("errors are not monotone in the parameter".to_string());
    }
    Ok(ConvergenceReport {
        axis,
        reference: label,
        t_end,
        rows,
        fit,
        monotone,
        notes,
    })
}

/// All axes requested by the config's `study` section.
pub fn run_studies(cfg: &RunConfig) -> Result<Vec<ConvergenceReport>> {
    let study = cfg
        .study
        .as_ref()
        .ok_or_else(|| Error::Config("converge needs a study section".into()))?;
    let mut out = Vec::new();
    if !study.dt.is_empty() {
        out.push(convergence_study(cfg, Axis::Dt, &study.dt, study.reference.clone())?);
    }
    if !study.epsilon.is_empty() {
        out.push(convergence_study(cfg, Axis::Epsilon, &study.epsilon, study.reference.clone())?);
    }
    if out.is_empty() {
        return Err(Error::Config("study lists no dt or epsilon values".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledDefects {
    pub scale: f64,
    pub defects: Vec<f64>,
    /// Scaled defect over the original one, per time.
    pub ratios: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub times: Vec<f64>,
    pub defects: Vec<f64>,
    /// Log-log slope; absent when a defect vanishes.
    pub slope: Option<f64>,
    pub note: Option<String>,
    pub scaled: Option<ScaledDefects>,
}

fn scale_influx(model: &ModelSpec, s: f64) -> ModelSpec {
    let inner = model.influx.clone();
    let len = inner.len();
    let mut m = model.clone();
    m.influx = InfluxFiniteRange::new(
        std::sync::Arc::new(move |t, mu| Ok(inner.n(t, mu)?.into_iter().map(|v| s * v).collect())),
        len,
        s.abs() * model.influx.mass_bound,
    );
    m
}

fn defects(model: &ModelSpec, mu: &DiscreteMeasure, times: &[f64], inner: usize) -> Result<Vec<f64>> {
    let frozen = model.freeze(0.0, mu);
    times.par_iter().map(|&t| commutator_defect(&frozen, mu, t, inner)).collect()
}

/// Commutator defects of the model frozen at `(0, μ0)`.
pub fn run_commutator(cfg: &RunConfig) -> Result<CommutatorReport> {
    let c = cfg
        .commutator
        .as_ref()
        .ok_or_else(|| Error::Config("commutator needs a commutator section".into()))?;
    let a = cfg.assemble()?;
    let d = defects(&a.model, &a.mu0, &c.times, c.inner_steps)?;
    let (slope, note) = if c.times.len() < 3 {
        (None, Some("fewer than 3 times: slope not fitted".to_string()))
    } else if d.iter().any(|v| *v <= 0.0) {
        (None, Some("a defect is zero: slope undefined".to_string()))
    } else {
        (Some(fit_order(&c.times, &d)?.order), None)
    };
    let scaled = match c.influx_scale {
        Some(s) => {
            let sd = defects(&scale_influx(&a.model, s), &a.mu0, &c.times, c.inner_steps)?;
            let ratios = sd.iter().zip(&d).map(|(x, y)| (*y > 0.0).then(|| x / y)).collect();
            Some(ScaledDefects {
                scale: s,
                defects: sd,
                ratios,
            })
        }
        None => None,
    };
    Ok(CommutatorReport {
        times: c.times.clone(),
        defects: d,
        slope,
        note,
        scaled,
    })
}

/// Parameters substituted into a base config at dotted JSON paths.
#[derive(Clone, Debug)]
pub struct ConfigFamily {
    base: Value,
    paths: Vec<String>,
}

impl ConfigFamily {
    pub fn new(cfg: &RunConfig, paths: Vec<String>) -> Result<Self> {
        let base = cfg.to_value();
        let fam = ConfigFamily { base, paths };
        // every path must exist and accept a number
        let probe: Vec<f64> = fam.paths.iter().map(|_| 0.0).collect();
        fam.config_at(&probe)?;
        Ok(fam)
    }

    pub fn config_at(&self, theta: &[f64]) -> Result<RunConfig> {
        let mut v = self.base.clone();
        for (p, x) in self.paths.iter().zip(theta) {
            set_json_path(&mut v, p, Value::from(*x))?;
        }
        // the inverse-problem section is irrelevant to a single forward solve
        if let Value::Object(map) = &mut v {
            map.remove("bayes");
        }
        RunConfig::from_value(v)
    }
}

impl ModelFamily for ConfigFamily {
    fn dimension(&self) -> usize {
        self.paths.len()
    }

    fn build(&self, theta: &[f64]) -> Result<(ModelSpec, DiscreteMeasure)> {
        let a = self.config_at(theta)?.assemble()?;
        Ok((a.model, a.mu0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BayesOutcome {
    pub data: DataSet,
    pub posterior: PosteriorGrid,
    pub mode: Vec<f64>,
    pub mean: Vec<f64>,
    pub normalization_residual: f64,
}

pub fn run_bayes(cfg: &RunConfig) -> Result<BayesOutcome> {
    let b = cfg
        .bayes
        .as_ref()
        .ok_or_else(|| Error::Config("bayes needs a bayes section".into()))?;
    let scheme = cfg
        .observation_scheme()?
        .ok_or_else(|| Error::Config("bayes needs an observation section".into()))?;
    let family = ConfigFamily::new(cfg, b.parameters.clone())?;
    let data = match (&b.data, &b.theta_true) {
        (Some(y), _) => DataSet::new(y.clone()).map_err(|e| Error::Config(e.to_string()))?,
        (None, Some(theta)) => synthesize_data(&family, theta, &scheme, &cfg.solver, cfg.seed)?,
        (None, None) => return Err(Error::Config("bayes needs theta_true or data".into())),
    };
    let prior = uniform_prior(&b.param_box);
    let posterior = posterior_grid(&data, &prior, &b.param_box, &family, &scheme, &cfg.solver)?;
    Ok(BayesOutcome {
        mode: posterior.mode().to_vec(),
        mean: posterior.mean(),
        normalization_residual: posterior.normalization_residual(),
        data,
        posterior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> serde_json::Value {
        json!({
            "schema": 1,
            "space": {"type": "euclidean_box", "dims": [[0.0, 1.0]]},
            "net": {"epsilon": 0.25},
            "model": {"growth": {"family": "constant", "rate": 1.0}},
            "initial": {"kind": "discrete", "points": [[0.5]], "weights": [1.0]},
            "solver": {"dt": 0.1, "t_end": 1.0}
        })
    }

    #[test]
    fn pure_growth_dt_study() {
        let cfg = RunConfig::from_value(base()).unwrap();
        let r = convergence_study(&cfg, Axis::Dt, &[0.1, 0.05, 0.025, 0.0125], ReferenceChoice::Auto).unwrap();
        assert!(r.reference.starts_with("analytic pure_growth"));
        let fit = r.fit.unwrap();
        assert!(fit.order >= 0.9, "{fit:?}");
        assert!(r.monotone);
    }

    #[test]
    fn self_convergence_is_labelled() {
        let mut v = base();
        v["model"]["kernel"] = json!({"family": "cell_division", "rate": 0.5});
        v["model"]["growth"] = json!({"family": "constant", "rate": -0.5});
        let cfg = RunConfig::from_value(v).unwrap();
        let r = convergence_study(&cfg, Axis::Dt, &[0.1, 0.05, 0.025], ReferenceChoice::Auto).unwrap();
        assert!(r.reference.starts_with("self-convergence"));
        assert_eq!(r.rows.len(), 3);
        assert!(r.fit.unwrap().order > 0.8);
    }

    #[test]
    fn identity_commutator_reports_no_slope() {
        let mut v = base();
        v["commutator"] = json!({"times": [0.2, 0.1, 0.05]});
        let cfg = RunConfig::from_value(v).unwrap();
        let r = run_commutator(&cfg).unwrap();
        assert!(r.defects.iter().all(|d| *d == 0.0));
        assert!(r.slope.is_none() && r.note.is_some());
    }

    #[test]
    fn bayes_from_config() {
        let mut v = base();
        v["observation"] = json!({"times": [0.5, 1.0], "observables": [{"kind": "total_mass"}], "noise": {"kind": "gaussian", "sigma": 0.05}});
        v["bayes"] = json!({"parameters": ["model.growth.rate"], "box": {"lower": [0.0], "upper": [2.0], "resolution": [21]}, "theta_true": [1.0]});
        let cfg = RunConfig::from_value(v).unwrap();
        let out = run_bayes(&cfg).unwrap();
        assert!(out.normalization_residual <= 1e-10);
        assert!((out.mean[0] - 1.0).abs() < 0.3, "{:?}", out.mean);
    }
}

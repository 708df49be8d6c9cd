//! JSON run configuration (`"schema": 1`) and model assembly from it.

use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bayes::{Noise, Observable, ObservationScheme, ParamBox};
use crate::error::{Error, Result};
use crate::measure::{approximate_initial, DensityFn, DensitySource, DiscreteMeasure, SourceMeasure};
use crate::metric_space::{CompactSet, EpsilonNet, Point, Space, SpaceSpec};
use crate::model::{discretize_influx, discretize_kernel, library, GrowthFn, ModelSpec, TransportMap};
use crate::solver::SolverConfig;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub epsilon: f64,
    #[serde(default = "whole")]
    pub k: CompactSet,
}

fn whole() -> CompactSet {
    CompactSet::Whole
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthConfig {
    Zero,
    Constant { rate: f64 },
    Logistic { rate: f64, capacity: f64, sup_bound: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    CellDivision { rate: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfluxConfig {
    Point { rate: f64, point: Point },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransportConfig {
    Identity,
    ConstantVelocity { velocity: Vec<f64> },
    /// Flow of `b(x) = rate ⊙ x + offset`.
    AffineFlow { rate: Vec<f64>, offset: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub growth: GrowthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influx: Option<InfluxConfig>,
    #[serde(default = "identity")]
    pub transport: TransportConfig,
}

fn identity() -> TransportConfig {
    TransportConfig::Identity
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityShape {
    Uniform { mass: f64 },
    /// Product of symmetric triangles peaking at the box center.
    Tent { mass: f64 },
    Gaussian { mass: f64, mean: f64, sd: f64 },
}

impl DensityShape {
    fn function(self, lower: Vec<f64>, upper: Vec<f64>) -> DensityFn {
        let volume: f64 = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
        match self {
            DensityShape::Uniform { mass } => Arc::new(move |_| mass / volume),
            DensityShape::Tent { mass } => Arc::new(move |x| {
                let mut v = mass;
                for ((xi, a), b) in x.iter().zip(&lower).zip(&upper) {
                    let half = (b - a) / 2.0;
                    v *= (1.0 - ((xi - (a + half)) / half).abs()).max(0.0) / half;
                }
                v
            }),
            DensityShape::Gaussian { mass, mean, sd } => Arc::new(move |x| {
                let q: f64 = x.iter().map(|xi| ((xi - mean) / sd).powi(2)).sum();
                let norm = (2.0 * std::f64::consts::PI).sqrt() * sd;
                mass * (-0.5 * q).exp() / norm.powi(x.len() as i32)
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialConfig {
    Discrete { points: Vec<Point>, weights: Vec<f64> },
    Density {
        #[serde(flatten)]
        shape: DensityShape,
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    /// `count` points drawn uniformly from `K` with the run seed, equal weights.
    Samples { count: usize, mass: f64 },
}

fn default_resolution() -> usize {
    400
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    TotalMass,
    TruncatedDistance { point: Point },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian { sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationConfig {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableConfig>,
    pub noise: NoiseConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceChoice {
    Auto,
    SelfConvergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub dt: Vec<f64>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default = "auto")]
    pub reference: ReferenceChoice,
}

fn auto() -> ReferenceChoice {
    ReferenceChoice::Auto
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorConfig {
    pub times: Vec<f64>,
    #[serde(default = "default_inner")]
    pub inner_steps: usize,
    /// Also report defects with the influx scaled by this factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influx_scale: Option<f64>,
}

fn default_inner() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorConfig {
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    /// Dotted paths into this config, one per parameter, e.g. `model.growth.rate`.
    pub parameters: Vec<String>,
    #[serde(rename = "box")]
    pub param_box: ParamBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<Vec<f64>>,
    /// Observation matrix `y[i][m]`; synthesized from `theta_true` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<f64>>>,
    #[serde(default = "uniform")]
    pub prior: PriorConfig,
}

fn uniform() -> PriorConfig {
    PriorConfig::Uniform
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u64,
    pub space: SpaceSpec,
    pub net: NetConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commutator: Option<CommutatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes: Option<BayesConfig>,
}

/// A config turned into runnable objects.
#[derive(Clone, Debug)]
pub struct Assembled {
    pub space: Arc<Space>,
    pub net: Arc<EpsilonNet>,
    pub model: ModelSpec,
    pub source: SourceMeasure,
    /// Initial data approximated on the net.
    pub mu0: DiscreteMeasure,
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self> {
        match value.get("schema").and_then(Value::as_u64) {
            Some(SCHEMA_VERSION) => {}
            Some(v) => return Err(Error::Config(format!("unsupported schema {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(Error::Config("missing \"schema\": 1".into())),
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Cheap structural checks; anything needing the space happens in [`assemble`].
    ///
    /// [`assemble`]: RunConfig::assemble
    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.net.epsilon.is_finite() && self.net.epsilon > 0.0) {
            return bad(format!("net.epsilon must be positive, got {}", self.net.epsilon));
        }
        self.solver.validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        if let Some(obs) = &self.observation {
            self.scheme_from(obs)?.check_solver(&self.solver).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(study) = &self.study {
            if study.dt.iter().chain(&study.epsilon).any(|v| !(*v > 0.0)) {
                return bad("study values must be positive".into());
            }
        }
        if let Some(c) = &self.commutator {
            if c.times.iter().any(|t| !(*t > 0.0)) {
                return bad("commutator times must be positive".into());
            }
        }
        if let Some(b) = &self.bayes {
            b.param_box.validate().map_err(|e| Error::Config(e.to_string()))?;
            if b.parameters.len() != b.param_box.dimension() {
                return bad("bayes.parameters must name one path per box axis".into());
            }
            if self.observation.is_none() {
                return bad("bayes needs an observation section".into());
            }
            match (&b.theta_true, &b.data) {
                (None, None) => return bad("bayes needs theta_true or data".into()),
                (Some(t), _) if !b.param_box.contains(t) => return bad("theta_true lies outside the box".into()),
                _ => {}
            }
        }
        Ok(())
    }

    fn scheme_from(&self, obs: &ObservationConfig) -> Result<ObservationScheme> {
        let space = Arc::new(Space::new(self.space.clone()).map_err(|e| Error::Config(e.to_string()))?);
        let observables = obs
            .observables
            .iter()
            .map(|o| match o {
                ObservableConfig::TotalMass => Ok(Observable::total_mass()),
                ObservableConfig::TruncatedDistance { point } => {
                    space.validate_point(point).map_err(|e| Error::Config(e.to_string()))?;
                    Ok(Observable::truncated_distance(space.clone(), point.clone()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let noise = match obs.noise {
            NoiseConfig::Gaussian { sigma } => Noise::Gaussian { sigma },
        };
        ObservationScheme::new(obs.times.clone(), observables, noise).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn observation_scheme(&self) -> Result<Option<ObservationScheme>> {
        self.observation.as_ref().map(|o| self.scheme_from(o)).transpose()
    }

    /// Copy with a different net radius.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        let mut c = self.clone();
        c.net.epsilon = epsilon;
        c
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        let mut c = self.clone();
        c.solver.dt = dt;
        c
    }

    pub fn assemble(&self) -> Result<Assembled> {
        let space = Arc::new(Space::new(self.space.clone())?);
        let net = Arc::new(EpsilonNet::build(&space, self.net.k.clone(), self.net.epsilon)?);
        let model = build_model(&self.model, space.clone(), net.clone(), self.solver.ode_substeps)?;
        let source = self.source(&space, &net)?;
        let mu0 = approximate_initial(&space, &net, &source)?;
        Ok(Assembled {
            space,
            net,
            model,
            source,
            mu0,
        })
    }

    fn source(&self, space: &Space, net: &EpsilonNet) -> Result<SourceMeasure> {
        Ok(match &self.initial {
            InitialConfig::Discrete { points, weights } => {
                let m = DiscreteMeasure::new(points.clone(), weights.clone())?;
                m.validate(space)?;
                SourceMeasure::Discrete(m)
            }
            InitialConfig::Density {
                shape,
                lower,
                upper,
                resolution,
            } => {
                if !space.is_euclidean() {
                    return Err(Error::Config("density initial data needs a Euclidean space".into()));
                }
                let f = shape.function(lower.clone(), upper.clone());
                SourceMeasure::EuclideanDensity(DensitySource::new(f, lower.clone(), upper.clone(), *resolution))
            }
            InitialConfig::Samples { count, mass } => {
                if *count == 0 || !(*mass >= 0.0) {
                    return Err(Error::Config("samples need count ≥ 1 and mass ≥ 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let points = (0..*count).map(|_| space.sample_in(net.compact_set(), &mut rng)).collect();
                SourceMeasure::SampleCloud {
                    points,
                    weight: mass / *count as f64,
                }
            }
        })
    }

    pub fn param_box(&self) -> Option<&ParamBox> {
        self.bayes.as_ref().map(|b| &b.param_box)
    }
}

pub fn build_model(cfg: &ModelConfig, space: Arc<Space>, net: Arc<EpsilonNet>, substeps: usize) -> Result<ModelSpec> {
    let growth = match cfg.growth {
        GrowthConfig::Zero => GrowthFn::zero(),
        GrowthConfig::Constant { rate } => library::constant_growth(rate),
        GrowthConfig::Logistic {
            rate,
            capacity,
            sup_bound,
        } => library::logistic_total_mass_growth(rate, capacity, sup_bound)?,
    };
    let transport = match &cfg.transport {
        TransportConfig::Identity => TransportMap::identity(),
        TransportConfig::ConstantVelocity { velocity } => library::constant_velocity_transport(velocity.clone()),
        TransportConfig::AffineFlow { rate, offset } => library::ode_flow(rate.clone(), offset.clone(), substeps),
    };
    let mut model = ModelSpec::growth_only(space.clone(), net.clone(), growth)?.with_transport(transport)?;
    if let Some(KernelConfig::CellDivision { rate }) = cfg.kernel {
        if !space.is_euclidean() {
            return Err(Error::Config("cell_division needs a Euclidean space".into()));
        }
        model = model.with_kernel(discretize_kernel(space.clone(), &library::cell_division_kernel(rate), net.clone()))?;
    }
    if let Some(InfluxConfig::Point { rate, point }) = &cfg.influx {
        space.validate_point(point)?;
        model = model.with_influx(discretize_influx(space, &library::constant_point_influx(*rate, point.clone()), net))?;
    }
    Ok(model)
}

/// Writes `value` at a dotted path (`a.b.0.c`) inside a JSON document.
pub fn set_json_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        let next = match cur {
            Value::Object(map) => map.get_mut(*part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(move |k| items.get_mut(k)),
            _ => None,
        };
        match next {
            Some(slot) if last => {
                *slot = value;
                return Ok(());
            }
            Some(slot) => cur = slot,
            None => return Err(Error::Config(format!("parameter path {path} does not exist in the config"))),
        }
    }
    Err(Error::Config("empty parameter path".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn growth_config() -> Value {
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
    fn parses_minimal_config() {
        let cfg = RunConfig::from_value(growth_config()).unwrap();
        assert_eq!(cfg.solver.merge_tol, 1e-9);
        assert_eq!(cfg.model.transport, TransportConfig::Identity);
        let a = cfg.assemble().unwrap();
        assert_eq!(a.net.len(), 9);
        assert_eq!(a.mu0.total_mass(), 1.0);
        let round = RunConfig::from_value(cfg.to_value()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut v = growth_config();
        v["schema"] = json!(2);
        assert!(matches!(RunConfig::from_value(v), Err(Error::Config(_))));

        let mut v = growth_config();
        v.as_object_mut().unwrap().remove("solver");
        assert!(matches!(RunConfig::from_value(v), Err(Error::Config(_))));

        let mut v = growth_config();
        v["model"]["growth"] = json!({"family": "exponential", "rate": 1.0});
        assert!(matches!(RunConfig::from_value(v), Err(Error::Config(_))));

        let mut v = growth_config();
        v["solver"]["dt"] = json!(-0.1);
        assert!(matches!(RunConfig::from_value(v), Err(Error::Config(_))));

        let mut v = growth_config();
        v["observation"] = json!({"times": [0.15], "observables": [{"kind": "total_mass"}], "noise": {"kind": "gaussian", "sigma": 0.1}});
        assert!(matches!(RunConfig::from_value(v), Err(Error::Config(_))));
    }

    #[test]
    fn json_path_substitution() {
        let mut v = growth_config();
        set_json_path(&mut v, "model.growth.rate", json!(0.3)).unwrap();
        set_json_path(&mut v, "space.dims.0.1", json!(2.0)).unwrap();
        assert_eq!(v["model"]["growth"]["rate"], json!(0.3));
        assert_eq!(v["space"]["dims"][0][1], json!(2.0));
        assert!(set_json_path(&mut v, "model.kernel.rate", json!(1.0)).is_err());
    }

    #[test]
    fn density_shapes_integrate_to_mass() {
        for shape in [
            DensityShape::Uniform { mass: 2.0 },
            DensityShape::Tent { mass: 2.0 },
        ] {
            let f = shape.function(vec![0.0], vec![1.0]);
            let src = DensitySource::new(f, vec![0.0], vec![1.0], 1000);
            assert!((src.quadrature().unwrap().total_mass() - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn samples_follow_seed() {
        let mut v = growth_config();
        v["initial"] = json!({"kind": "samples", "count": 20, "mass": 2.0});
        let a = RunConfig::from_value(v.clone()).unwrap().assemble().unwrap();
        let b = RunConfig::from_value(v.clone()).unwrap().assemble().unwrap();
        assert_eq!(a.mu0, b.mu0);
        assert!((a.mu0.total_mass() - 2.0).abs() < 1e-12);
        v["seed"] = json!(9);
        let c = RunConfig::from_value(v).unwrap().assemble().unwrap();
        assert_ne!(a.source.to_discrete().unwrap(), c.source.to_discrete().unwrap());
    }
}

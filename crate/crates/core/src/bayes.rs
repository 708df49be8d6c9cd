//! Grid-based Bayesian inversion for model parameters.
//!
//! Data are integrals of bounded-Lipschitz observables against the simulated
//! state at fixed times, plus noise. The posterior lives on the midpoints of
//! a regular grid over a parameter box and is normalized in log space.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat_metric::flat_distance;
use crate::measure::DiscreteMeasure;
use crate::metric_space::{Point, Space, SpaceSpec};
use crate::model::ModelSpec;
use crate::solver::{simulate, SolverConfig, Trajectory};

pub const MAX_GRID_DIMENSION: usize = 3;
pub const PRIOR_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let b = ParamBox { lower, upper, resolution };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lower.len();
        if d == 0 || d > MAX_GRID_DIMENSION {
            return Err(Error::InvalidInput(format!("parameter dimension must be 1..={MAX_GRID_DIMENSION}, got {d}")));
        }
        if self.upper.len() != d || self.resolution.len() != d {
            return Err(Error::InvalidInput("parameter box fields differ in dimension".into()));
        }
        for i in 0..d {
            let (lo, hi) = (self.lower[i], self.upper[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("axis {i}: need finite lower < upper, got [{lo}, {hi}]")));
            }
            if self.resolution[i] < 2 {
                return Err(Error::InvalidInput(format!("axis {i}: resolution must be at least 2")));
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dimension() && theta.iter().enumerate().all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    pub fn cell_widths(&self) -> Vec<f64> {
        (0..self.dimension())
            .map(|i| (self.upper[i] - self.lower[i]) / self.resolution[i] as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_widths().iter().product()
    }

    /// Cell midpoints, first axis varying slowest.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let h = self.cell_widths();
        let mut nodes: Vec<Vec<f64>> = vec![vec![]];
        for i in 0..self.dimension() {
            let axis: Vec<f64> = (0..self.resolution[i])
                .map(|j| self.lower[i] + (j as f64 + 0.5) * h[i])
                .collect();
            nodes = nodes
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        nodes
    }

    fn space(&self) -> Result<Space> {
        Space::new(SpaceSpec::EuclideanBox {
            dims: self.lower.iter().zip(&self.upper).map(|(a, b)| [*a, *b]).collect(),
        })
    }
}

pub type ObservableEval = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// A test function `g` with a declared bound on `max(sup|g|, Lip g)`.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    pub eval: ObservableEval,
    pub bl_norm: f64,
}

impl Observable {
    pub fn new(name: impl Into<String>, eval: ObservableEval, bl_norm: f64) -> Self {
        Observable {
            name: name.into(),
            eval,
            bl_norm,
        }
    }

    pub fn total_mass() -> Self {
        Observable::new("total_mass", Arc::new(|_| 1.0), 1.0)
    }

    /// `x ↦ min(d(x₀, x), 1)`; 1-Lipschitz and bounded by 1.
    pub fn truncated_distance(space: Arc<Space>, x0: Point) -> Self {
        Observable::new(
            "truncated_distance",
            Arc::new(move |x| space.dist(&x0, x).min(1.0)),
            1.0,
        )
    }
}

pub type DensityEval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Noise {
    /// Independent `N(0, σ²)` per entry. `σ = 0` is accepted for synthesizing
    /// noiseless data but has no likelihood.
    Gaussian { sigma: f64 },
    /// Joint density of the flattened residual (observables fastest).
    Custom {
        density: DensityEval,
        holder_exponent: f64,
        holder_constant: f64,
    },
}

impl Noise {
    fn validate(&self) -> Result<()> {
        match self {
            Noise::Gaussian { sigma } if !(sigma.is_finite() && *sigma >= 0.0) => {
                Err(Error::InvalidInput(format!("noise sigma must be nonnegative, got {sigma}")))
            }
            Noise::Custom { holder_exponent, .. } if !(*holder_exponent > 0.0 && *holder_exponent <= 1.0) => {
                Err(Error::InvalidInput("noise Hölder exponent must lie in (0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    /// `ln f(r)`.
    pub fn log_density(&self, residual: &[f64]) -> Result<f64> {
        match self {
            Noise::Gaussian { sigma } => {
                if *sigma <= 0.0 {
                    return Err(Error::InvalidInput("likelihood needs sigma > 0".into()));
                }
                let norm = -0.5 * (2.0 * PI).ln() - sigma.ln();
                Ok(residual.iter().map(|r| norm - 0.5 * (r / sigma).powi(2)).sum())
            }
            Noise::Custom { density, .. } => {
                let f = density(residual);
                if !(f >= 0.0) || !f.is_finite() {
                    return Err(Error::InvalidInput(format!("noise density returned {f}")));
                }
                Ok(f.ln())
            }
        }
    }
}

#[derive(Clone)]
pub struct ObservationScheme {
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub noise: Noise,
}

impl ObservationScheme {
    pub fn new(times: Vec<f64>, observables: Vec<Observable>, noise: Noise) -> Result<Self> {
        if times.is_empty() || observables.is_empty() {
            return Err(Error::InvalidInput("observation scheme needs times and observables".into()));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("observation times must be ascending and nonnegative".into()));
        }
        if let Some(g) = observables.iter().find(|g| !(g.bl_norm > 0.0)) {
            return Err(Error::InvalidInput(format!("observable {} needs a positive BL norm", g.name)));
        }
        noise.validate()?;
        Ok(ObservationScheme { times, observables, noise })
    }

    /// Every time must be a multiple of `dt` no later than `T`.
    pub fn check_solver(&self, solver: &SolverConfig) -> Result<()> {
        for &t in &self.times {
            let k = (t / solver.dt).round();
            if (t - k * solver.dt).abs() > 1e-9 * t.max(1.0) || t > solver.t_end * (1.0 + 1e-12) {
                return Err(Error::MissingObservationTime(t));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> usize {
        self.times.len() * self.observables.len()
    }

    /// `Σ_{i,m} ‖g_i‖_BL`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.times.len() as f64 * self.observables.iter().map(|g| g.bl_norm).sum::<f64>()
    }
}

/// Observation matrix, `y[i][m]` for observable `i` at time `t_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub y: Vec<Vec<f64>>,
}

impl DataSet {
    pub fn new(y: Vec<Vec<f64>>) -> Result<Self> {
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data must be finite".into()));
        }
        if y.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::InvalidInput("data rows differ in length".into()));
        }
        Ok(DataSet { y })
    }

    fn shape(&self) -> (usize, usize) {
        (self.y.len(), self.y.first().map_or(0, Vec::len))
    }

    /// Column-major flattening: observables vary fastest.
    pub fn flatten(&self) -> Vec<f64> {
        let (rows, cols) = self.shape();
        (0..cols).flat_map(|m| (0..rows).map(move |i| (i, m))).map(|(i, m)| self.y[i][m]).collect()
    }

    pub fn shifted(&self, delta: f64) -> Self {
        DataSet {
            y: self.y.iter().map(|r| r.iter().map(|v| v + delta).collect()).collect(),
        }
    }
}

/// Maps a parameter to a model and initial state.
pub trait ModelFamily: Send + Sync {
    fn dimension(&self) -> usize;

    fn build(&self, theta: &[f64]) -> Result<(ModelSpec, DiscreteMeasure)>;

    fn solve(&self, theta: &[f64], solver: &SolverConfig) -> Result<Trajectory> {
        if theta.len() != self.dimension() {
            return Err(Error::InvalidInput(format!(
                "parameter has dimension {}, family expects {}",
                theta.len(),
                self.dimension()
            )));
        }
        let (model, mu0) = self.build(theta)?;
        simulate(&model, &mu0, solver)
    }
}

/// `F(μ)_{i,m} = ∫ g_i dμ(t_m)`.
pub fn observe(traj: &Trajectory, scheme: &ObservationScheme) -> Result<DataSet> {
    let states: Vec<&DiscreteMeasure> = scheme
        .times
        .iter()
        .map(|&t| traj.state_at(t).ok_or(Error::MissingObservationTime(t)))
        .collect::<Result<_>>()?;
    let y = scheme
        .observables
        .iter()
        .map(|g| states.iter().map(|mu| mu.integrate(|x| (g.eval)(x))).collect())
        .collect();
    Ok(DataSet { y })
}

pub fn synthesize_data(
    family: &dyn ModelFamily,
    theta: &[f64],
    scheme: &ObservationScheme,
    solver: &SolverConfig,
    seed: u64,
) -> Result<DataSet> {
    scheme.check_solver(solver)?;
    let clean = observe(&family.solve(theta, solver)?, scheme)?;
    match &scheme.noise {
        Noise::Gaussian { sigma } if *sigma == 0.0 => Ok(clean),
        Noise::Gaussian { sigma } => {
            let normal = Normal::new(0.0, *sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (rows, cols) = clean.shape();
            let mut y = clean.y;
            // draw in the flattened order so the noise vector matches the density's layout
            for m in 0..cols {
                for row in y.iter_mut().take(rows) {
                    row[m] += normal.sample(&mut rng);
                }
            }
            Ok(DataSet { y })
        }
        Noise::Custom { .. } => Err(Error::InvalidInput("custom noise has no sampler".into())),
    }
}

/// `ln f(Y − F(G(θ)))` for precomputed predictions.
pub fn log_likelihood_of(data: &DataSet, predicted: &DataSet, noise: &Noise) -> Result<f64> {
    if data.shape() != predicted.shape() {
        return Err(Error::InvalidInput(format!(
            "data shape {:?} does not match observations {:?}",
            data.shape(),
            predicted.shape()
        )));
    }
    let r: Vec<f64> = data.flatten().iter().zip(predicted.flatten()).map(|(y, p)| y - p).collect();
    noise.log_density(&r)
}

pub fn log_likelihood(
    data: &DataSet,
    theta: &[f64],
    family: &dyn ModelFamily,
    scheme: &ObservationScheme,
    solver: &SolverConfig,
) -> Result<f64> {
    let predicted = observe(&family.solve(theta, solver)?, scheme)?;
    log_likelihood_of(data, &predicted, &scheme.noise)
}

pub fn likelihood(
    data: &DataSet,
    theta: &[f64],
    family: &dyn ModelFamily,
    scheme: &ObservationScheme,
    solver: &SolverConfig,
) -> Result<f64> {
    log_likelihood(data, theta, family, scheme, solver).map(f64::exp)
}

pub type PriorDensity = dyn Fn(&[f64]) -> f64 + Send + Sync;

pub fn uniform_prior(param: &ParamBox) -> impl Fn(&[f64]) -> f64 + Send + Sync {
    let v: f64 = param.lower.iter().zip(&param.upper).map(|(a, b)| b - a).product();
    move |_| 1.0 / v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosteriorGrid {
    pub param: ParamBox,
    pub nodes: Vec<Vec<f64>>,
    pub density: Vec<f64>,
    pub cell_volume: f64,
    /// `ln ∫ ℓ(Y|θ) π(θ) dθ` by midpoint quadrature.
    pub log_evidence: f64,
}

impl PosteriorGrid {
    pub fn normalization_residual(&self) -> f64 {
        (self.density.iter().sum::<f64>() * self.cell_volume - 1.0).abs()
    }

    pub fn mode(&self) -> &[f64] {
        let best = (0..self.density.len())
            .max_by(|&a, &b| self.density[a].total_cmp(&self.density[b]).then(b.cmp(&a)))
            .expect("grid has nodes");
        &self.nodes[best]
    }

    pub fn mean(&self) -> Vec<f64> {
        let d = self.param.dimension();
        let mut mean = vec![0.0; d];
        for (node, p) in self.nodes.iter().zip(&self.density) {
            for (m, v) in mean.iter_mut().zip(node) {
                *m += p * self.cell_volume * v;
            }
        }
        mean
    }

    fn as_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(
            self.nodes.iter().map(|n| Point::Coords(n.clone())).collect(),
            self.density.iter().map(|p| p * self.cell_volume).collect(),
        )
    }
}

fn prior_values(param: &ParamBox, prior: &PriorDensity) -> Result<Vec<f64>> {
    let nodes = param.nodes();
    let values: Vec<f64> = nodes.iter().map(|n| prior(n)).collect();
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("prior density must be finite and nonnegative".into()));
    }
    let mass: f64 = values.iter().sum::<f64>() * param.cell_volume();
    if (mass - 1.0).abs() > PRIOR_TOL {
        return Err(Error::InvalidInput(format!("prior integrates to {mass} on the box, expected 1")));
    }
    Ok(values)
}

/// Normalizes `ℓ·π` on the grid given per-node log-likelihoods.
pub fn posterior_from_log_likelihood(param: &ParamBox, prior: &PriorDensity, log_lik: &[f64]) -> Result<PosteriorGrid> {
    param.validate()?;
    let nodes = param.nodes();
    if log_lik.len() != nodes.len() {
        return Err(Error::InvalidInput("one log-likelihood per node required".into()));
    }
    let pri = prior_values(param, prior)?;
    let log_w: Vec<f64> = log_lik
        .iter()
        .zip(&pri)
        .map(|(l, p)| if *p > 0.0 { l + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    if log_w.iter().any(|v| v.is_nan()) {
        return Err(Error::DegeneratePosterior("log-likelihood is NaN".into()));
    }
    let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::DegeneratePosterior("every node has zero likelihood times prior".into()));
    }
    let vol = param.cell_volume();
    let rel: Vec<f64> = log_w.iter().map(|v| (v - top).exp()).collect();
    let z = rel.iter().sum::<f64>() * vol;
    Ok(PosteriorGrid {
        density: rel.iter().map(|r| r / z).collect(),
        nodes,
        cell_volume: vol,
        log_evidence: top + z.ln(),
        param: param.clone(),
    })
}

/// One forward solve per node, evaluated in parallel.
pub fn posterior_grid(
    data: &DataSet,
    prior: &PriorDensity,
    param: &ParamBox,
    family: &dyn ModelFamily,
    scheme: &ObservationScheme,
    solver: &SolverConfig,
) -> Result<PosteriorGrid> {
    param.validate()?;
    if param.dimension() != family.dimension() {
        return Err(Error::InvalidInput("parameter box and model family differ in dimension".into()));
    }
    scheme.check_solver(solver)?;
    prior_values(param, prior)?;
    let log_lik: Vec<f64> = param
        .nodes()
        .par_iter()
        .map(|theta| log_likelihood(data, theta, family, scheme, solver))
        .collect::<Result<_>>()?;
    posterior_from_log_likelihood(param, prior, &log_lik)
}

/// Flat distance on the parameter box between node masses `π·vol`.
pub fn posterior_flat_distance(p: &PosteriorGrid, q: &PosteriorGrid) -> Result<f64> {
    if p.param != q.param || p.nodes != q.nodes {
        return Err(Error::GridMismatch);
    }
    flat_distance(&p.param.space()?, &p.as_measure()?, &q.as_measure()?)
}

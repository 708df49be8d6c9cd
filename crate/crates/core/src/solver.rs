//! The splitting scheme: each step first moves every atom with the frozen
//! transport, then updates masses with one explicit Euler step of growth,
//! non-local births onto net centers, and influx.
//!
//! Also provides the two frozen one-parameter semigroups the scheme splits
//! (`S¹` transport, `S²` growth/birth/influx) for commutator experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat_metric::flat_distance;
use crate::measure::DiscreteMeasure;
use crate::metric_space::{Point, Space};
use crate::model::{validate_model, FrozenModel, ModelSpec, TransportMap};

fn default_merge_tol() -> f64 {
    1e-9
}

fn default_substeps() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_merge_tol")]
    pub merge_tol: f64,
    #[serde(default)]
    pub weight_tol: f64,
    #[serde(default = "default_substeps")]
    pub ode_substeps: usize,
    /// Run even when model validation fails.
    #[serde(default)]
    pub force: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            merge_tol: default_merge_tol(),
            weight_tol: 0.0,
            ode_substeps: default_substeps(),
            force: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidInput(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.dt > self.t_end * (1.0 + 1e-12) {
            return Err(Error::InvalidInput("dt exceeds the horizon".into()));
        }
        if !(self.merge_tol >= 0.0 && self.weight_tol >= 0.0) {
            return Err(Error::InvalidInput("tolerances must be nonnegative".into()));
        }
        if self.ode_substeps == 0 {
            return Err(Error::InvalidInput("ode_substeps must be at least 1".into()));
        }
        Ok(())
    }

    /// Step start times and lengths: `⌊T/dt⌋` full steps and, if needed, one
    /// shorter final step ending exactly at `T`.
    pub fn schedule(&self) -> Vec<(f64, f64)> {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        let full = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize
        };
        let mut steps: Vec<(f64, f64)> = (0..full).map(|k| (k as f64 * self.dt, self.dt)).collect();
        let covered = full as f64 * self.dt;
        let rest = self.t_end - covered;
        if rest > 1e-9 * self.t_end {
            steps.push((covered, rest));
        }
        steps
    }

    /// Times at which states are recorded, starting at 0.
    pub fn times(&self) -> Vec<f64> {
        let sched = self.schedule();
        let mut times = vec![0.0];
        let n = sched.len();
        for (k, (t, h)) in sched.into_iter().enumerate() {
            times.push(if k + 1 == n { self.t_end.max(t + h).min(self.t_end) } else { t + h });
        }
        if let Some(last) = times.last_mut() {
            *last = self.t_end;
        }
        times
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub support_size: usize,
    pub total_mass: f64,
}

/// Recorded states `μ_0, μ_1, …` at strictly increasing times from 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DiscreteMeasure>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl Trajectory {
    fn start(mu0: DiscreteMeasure) -> Self {
        let diag = StepDiagnostics {
            support_size: mu0.len(),
            total_mass: mu0.total_mass(),
        };
        Trajectory {
            times: vec![0.0],
            states: vec![mu0],
            diagnostics: vec![diag],
        }
    }

    fn record(&mut self, t: f64, mu: DiscreteMeasure) {
        self.diagnostics.push(StepDiagnostics {
            support_size: mu.len(),
            total_mass: mu.total_mass(),
        });
        self.times.push(t);
        self.states.push(mu);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn final_state(&self) -> &DiscreteMeasure {
        self.states.last().expect("trajectory has an initial state")
    }

    /// State recorded at time `t` (matched to `1e-9` relative).
    pub fn state_at(&self, t: f64) -> Option<&DiscreteMeasure> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|k| &self.states[k])
    }
}

/// Moves every atom: `x ↦ X(t + dt, t, x, μ_k)` with `X` frozen at `μ_k`.
pub fn transport_step(space: &Space, mu: &DiscreteMeasure, transport: &TransportMap, t: f64, dt: f64) -> Result<DiscreteMeasure> {
    if transport.is_identity() {
        return Ok(mu.clone());
    }
    mu.push_forward(space, |x| transport.apply(t + dt, t, x, mu))
}

/// Explicit Euler mass update on `supp(μ̄) ∪ {z_l}`.
///
/// `transported` is `μ_k` after the transport step, `frozen` is `μ_k` itself.
/// Atoms within `merge_tol` of a center are identified with it; centers that
/// receive mass and coincide with no atom are appended.
pub fn growth_step(
    transported: &DiscreteMeasure,
    model: &ModelSpec,
    frozen: &DiscreteMeasure,
    t: f64,
    dt: f64,
    merge_tol: f64,
) -> Result<DiscreteMeasure> {
    let space = &model.space;
    let net = &model.net;
    let mut points: Vec<Point> = transported.points().to_vec();
    let masses = transported.weights();
    let mut center_slot: Vec<Option<usize>> = vec![None; net.len()];
    for (i, p) in points.iter_mut().enumerate() {
        if let Some(l) = net.center_index(space, p, merge_tol) {
            if center_slot[l].is_none() {
                center_slot[l] = Some(i);
                *p = net.centers()[l].clone();
            }
        }
    }

    let per_atom: Vec<(f64, Vec<f64>)> = points
        .par_iter()
        .map(|x| Ok((model.growth.eval(t, x, frozen), model.kernel.beta(t, x, frozen)?)))
        .collect::<Result<_>>()?;

    let mut weights: Vec<f64> = masses
        .iter()
        .zip(&per_atom)
        .map(|(m, (c, _))| m + dt * c * m)
        .collect();

    let mut gains = model.influx.n(t, frozen)?;
    for (m, (_, beta)) in masses.iter().zip(&per_atom) {
        if *m != 0.0 {
            for (g, b) in gains.iter_mut().zip(beta) {
                *g += b * m;
            }
        }
    }
    for (l, g) in gains.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        match center_slot[l] {
            Some(i) => weights[i] += dt * g,
            None => {
                points.push(net.centers()[l].clone());
                weights.push(dt * g);
            }
        }
    }

    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NegativeMass {
            index: i,
            point: points[i].to_string(),
            weight: *w,
        });
    }
    Ok(DiscreteMeasure::from_parts_unchecked(points, weights))
}

/// Runs the scheme from `μ_0` to `T`, pruning after every growth step.
///
/// Refuses to start when [`validate_model`] fails, unless `config.force` is set.
pub fn simulate(model: &ModelSpec, mu0: &DiscreteMeasure, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    mu0.validate(&model.space)?;
    let report = validate_model(model, config.dt);
    if !report.passed() && !config.force {
        let failed: Vec<String> = report.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Validation(failed.join("; ")));
    }
    let transport = model.transport.clone().with_substeps(config.ode_substeps);
    let times = config.times();
    let mut traj = Trajectory::start(mu0.clone());
    let mut mu = mu0.clone();
    for (k, (t, h)) in config.schedule().into_iter().enumerate() {
        let step = || -> Result<DiscreteMeasure> {
            let moved = transport_step(&model.space, &mu, &transport, t, h)?;
            let grown = growth_step(&moved, model, &mu, t, h, config.merge_tol)?;
            Ok(grown.prune(&model.space, config.weight_tol, config.merge_tol))
        };
        let next = step().map_err(|e| e.at_step(k))?;
        traj.record(times[k + 1], next.clone());
        mu = next;
    }
    Ok(traj)
}

/// `S¹_t μ = X(t, ·)_# μ` for the frozen transport.
pub fn apply_s1(frozen: &FrozenModel, mu: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    mu.push_forward(frozen.space(), |x| frozen.transport(t, x))
}

pub const MIN_S2_STEPS: usize = 64;

/// `S²_t μ`: the frozen linear mass system on `supp(μ) ∪ {z_l}`,
///
/// ```text
/// dm_x/dt = c(x) m_x + [x = z_l] (Σ_y β_l(y) m_y + n_l),
/// ```
///
/// integrated with classical RK4 in `steps` (≥ 64) equal steps.
pub fn apply_s2(frozen: &FrozenModel, mu: &DiscreteMeasure, t: f64, steps: usize) -> Result<DiscreteMeasure> {
    if steps < MIN_S2_STEPS {
        return Err(Error::InvalidInput(format!("S2 needs at least {MIN_S2_STEPS} inner steps")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("time {t} must be nonnegative")));
    }
    let space = frozen.space();
    let net = frozen.net();
    let mut points: Vec<Point> = mu.points().to_vec();
    let mut m0: Vec<f64> = mu.weights().to_vec();
    let mut center_of: Vec<usize> = Vec::with_capacity(net.len());
    for z in net.centers() {
        match points.iter().position(|p| space.dist(p, z) <= 1e-12) {
            Some(i) => center_of.push(i),
            None => {
                points.push(z.clone());
                m0.push(0.0);
                center_of.push(points.len() - 1);
            }
        }
    }
    let c: Vec<f64> = points.iter().map(|x| frozen.c(x)).collect();
    let beta: Vec<Vec<f64>> = points.iter().map(|x| frozen.beta(x)).collect::<Result<_>>()?;
    let n = frozen.n()?;

    let rhs = |m: &[f64]| -> Vec<f64> {
        let mut d: Vec<f64> = m.iter().zip(&c).map(|(mi, ci)| ci * mi).collect();
        for (l, &j) in center_of.iter().enumerate() {
            let births: f64 = beta.iter().zip(m).map(|(b, mi)| b[l] * mi).sum();
            d[j] += births + n[l];
        }
        d
    };
    let h = t / steps as f64;
    let mut m = m0;
    for _ in 0..steps {
        let k1 = rhs(&m);
        let k2 = rhs(&axpy(&m, &k1, 0.5 * h));
        let k3 = rhs(&axpy(&m, &k2, 0.5 * h));
        let k4 = rhs(&axpy(&m, &k3, h));
        for i in 0..m.len() {
            m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    // RK4 can leave roundoff-sized negatives on atoms that only decay
    for v in m.iter_mut() {
        if *v < 0.0 && *v > -1e-14 {
            *v = 0.0;
        }
    }
    DiscreteMeasure::new(points, m)
}

fn axpy(x: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
}

/// `ρ_F(S¹_t S²_t μ, S²_t S¹_t μ)`.
pub fn commutator_defect(frozen: &FrozenModel, mu: &DiscreteMeasure, t: f64, steps: usize) -> Result<f64> {
    let growth_then_transport = apply_s1(frozen, &apply_s2(frozen, mu, t, steps)?, t)?;
    let transport_then_growth = apply_s2(frozen, &apply_s1(frozen, mu, t)?, t, steps)?;
    flat_distance(frozen.space(), &growth_then_transport, &transport_then_growth)
}

//! Model functions `c`, `η`, `N`, `X`, their finite-range form on an ε-net, and
//! sampled checks of the standing assumptions.
//!
//! Linear kernels and influxes (no dependence on the current measure) can be
//! discretized with [`discretize_kernel`] / [`discretize_influx`]. Nonlinear ones
//! must be supplied directly as [`KernelFiniteRange`] / [`InfluxFiniteRange`].

pub mod library;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, SourceMeasure};
use crate::metric_space::{EpsilonNet, Point, Space};

pub type GrowthEval = Arc<dyn Fn(f64, &Point, &DiscreteMeasure) -> f64 + Send + Sync>;
pub type KernelEval = Arc<dyn Fn(f64, &Point) -> SourceMeasure + Send + Sync>;
pub type InfluxEval = Arc<dyn Fn(f64) -> SourceMeasure + Send + Sync>;
pub type KernelCoefficients = Arc<dyn Fn(f64, &Point, &DiscreteMeasure) -> Result<Vec<f64>> + Send + Sync>;
pub type InfluxCoefficients = Arc<dyn Fn(f64, &DiscreteMeasure) -> Result<Vec<f64>> + Send + Sync>;
pub type MapEval = Arc<dyn Fn(f64, f64, &Point, &DiscreteMeasure) -> Result<Point> + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, &[f64], &DiscreteMeasure) -> Vec<f64> + Send + Sync>;

/// Growth/decay rate `c(t, x, μ)` with its declared regularity.
#[derive(Clone)]
pub struct GrowthFn {
    eval: GrowthEval,
    /// Declared `sup |c|`.
    pub sup_bound: f64,
    /// Declared Hölder exponent in time.
    pub holder_exponent: f64,
    pub holder_constant: f64,
}

impl GrowthFn {
    pub fn new(eval: GrowthEval, sup_bound: f64) -> Self {
        GrowthFn {
            eval,
            sup_bound,
            holder_exponent: 1.0,
            holder_constant: 0.0,
        }
    }

    pub fn with_holder(mut self, exponent: f64, constant: f64) -> Self {
        self.holder_exponent = exponent;
        self.holder_constant = constant;
        self
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_, _, _| 0.0), 0.0)
    }

    pub fn eval(&self, t: f64, x: &Point, mu: &DiscreteMeasure) -> f64 {
        (self.eval)(t, x, mu)
    }
}

impl fmt::Debug for GrowthFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrowthFn")
            .field("sup_bound", &self.sup_bound)
            .field("holder_exponent", &self.holder_exponent)
            .finish_non_exhaustive()
    }
}

/// A kernel `η(t, x)` that does not depend on the current measure.
#[derive(Clone)]
pub struct LinearKernel {
    pub eval: KernelEval,
    /// Declared bound on `‖η(t, x)‖_{BL*}`.
    pub mass_bound: f64,
}

/// An influx `N(t)` that does not depend on the current measure.
#[derive(Clone)]
pub struct LinearInflux {
    pub eval: InfluxEval,
    pub mass_bound: f64,
}

/// `η̂(t, x, μ) = Σ_l β_l(t, x, μ) δ_{z_l}`.
#[derive(Clone)]
pub struct KernelFiniteRange {
    coefficients: KernelCoefficients,
    len: usize,
    pub mass_bound: f64,
}

impl KernelFiniteRange {
    pub fn new(coefficients: KernelCoefficients, len: usize, mass_bound: f64) -> Self {
        KernelFiniteRange {
            coefficients,
            len,
            mass_bound,
        }
    }

    pub fn zero(len: usize) -> Self {
        Self::new(Arc::new(move |_, _, _| Ok(vec![0.0; len])), len, 0.0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `(β_1, …, β_L)` at `(t, x, μ)`; fails on a length mismatch or a
    /// negative coefficient.
    pub fn beta(&self, t: f64, x: &Point, mu: &DiscreteMeasure) -> Result<Vec<f64>> {
        let beta = (self.coefficients)(t, x, mu)?;
        check_coefficients("beta", &beta, self.len)?;
        Ok(beta)
    }
}

/// `N̂(t, μ) = Σ_l n_l(t, μ) δ_{z_l}`.
#[derive(Clone)]
pub struct InfluxFiniteRange {
    coefficients: InfluxCoefficients,
    len: usize,
    pub mass_bound: f64,
}

impl InfluxFiniteRange {
    pub fn new(coefficients: InfluxCoefficients, len: usize, mass_bound: f64) -> Self {
        InfluxFiniteRange {
            coefficients,
            len,
            mass_bound,
        }
    }

    pub fn zero(len: usize) -> Self {
        Self::new(Arc::new(move |_, _| Ok(vec![0.0; len])), len, 0.0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n(&self, t: f64, mu: &DiscreteMeasure) -> Result<Vec<f64>> {
        let n = (self.coefficients)(t, mu)?;
        check_coefficients("n", &n, self.len)?;
        Ok(n)
    }
}

fn check_coefficients(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::Model(format!("{name} has {} entries, net has {len} centers", v.len())));
    }
    if let Some((l, x)) = v.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Model(format!("{name}_{l} = {x} is not a nonnegative mass")));
    }
    Ok(())
}

/// `β_l = ∫ φ_l dη(t, x)`, the projection of a linear kernel onto the net.
pub fn discretize_kernel(space: Arc<Space>, kernel: &LinearKernel, net: Arc<EpsilonNet>) -> KernelFiniteRange {
    let eval = kernel.eval.clone();
    let len = net.len();
    let coefficients: KernelCoefficients = Arc::new(move |t, x, _mu| {
        let atoms = eval(t, x).to_discrete()?;
        project_onto_net(&space, &net, &atoms)
    });
    KernelFiniteRange::new(coefficients, len, kernel.mass_bound)
}

/// `n_l = ∫ φ_l dN(t)`.
pub fn discretize_influx(space: Arc<Space>, influx: &LinearInflux, net: Arc<EpsilonNet>) -> InfluxFiniteRange {
    let eval = influx.eval.clone();
    let len = net.len();
    let coefficients: InfluxCoefficients = Arc::new(move |t, _mu| {
        let atoms = eval(t).to_discrete()?;
        project_onto_net(&space, &net, &atoms)
    });
    InfluxFiniteRange::new(coefficients, len, influx.mass_bound)
}

fn project_onto_net(space: &Space, net: &EpsilonNet, atoms: &DiscreteMeasure) -> Result<Vec<f64>> {
    let mut coeff = vec![0.0; net.len()];
    let mut phi = vec![0.0; net.len()];
    for (y, m) in atoms.iter() {
        space.validate_point(y).map_err(|e| Error::Model(format!("kernel output: {e}")))?;
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::Model(format!("kernel output has mass {m} at {y}")));
        }
        if m == 0.0 {
            continue;
        }
        net.partition_into(space, y, &mut phi);
        for (c, p) in coeff.iter_mut().zip(&phi) {
            *c += m * p;
        }
    }
    Ok(coeff)
}

/// The measure `Σ_l coeff_l δ_{z_l}`.
pub fn on_centers(net: &EpsilonNet, coeff: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::from_parts_unchecked(net.centers().to_vec(), coeff.to_vec())
}

#[derive(Clone)]
pub enum TransportKind {
    Identity,
    /// `X(t1, t0, x, μ)` given in closed form.
    Explicit(MapEval),
    /// Flow of `ẋ = b(t, x, μ)` integrated with classical RK4 using `substeps`
    /// steps per call. Euclidean spaces only.
    OdeFlow { field: VectorField, substeps: usize },
}

/// Transport `X` with its declared Lipschitz data.
#[derive(Clone)]
pub struct TransportMap {
    pub kind: TransportKind,
    /// Declared rate `C` in `d(X(t,s,x), X(t,s,y)) ≤ e^{C(t−s)} d(x, y)`.
    pub lipschitz_rate: f64,
    /// Declared slope `C` in `d(X(t,s,x), x) ≤ C (t−s)`.
    pub speed_bound: f64,
}

impl fmt::Debug for TransportMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            TransportKind::Identity => "identity".to_string(),
            TransportKind::Explicit(_) => "explicit".to_string(),
            TransportKind::OdeFlow { substeps, .. } => format!("ode_flow({substeps} substeps)"),
        };
        f.debug_struct("TransportMap")
            .field("kind", &kind)
            .field("lipschitz_rate", &self.lipschitz_rate)
            .field("speed_bound", &self.speed_bound)
            .finish()
    }
}

impl TransportMap {
    pub fn identity() -> Self {
        TransportMap {
            kind: TransportKind::Identity,
            lipschitz_rate: 0.0,
            speed_bound: 0.0,
        }
    }

    pub fn explicit(map: MapEval, lipschitz_rate: f64, speed_bound: f64) -> Self {
        TransportMap {
            kind: TransportKind::Explicit(map),
            lipschitz_rate,
            speed_bound,
        }
    }

    pub fn ode_flow(field: VectorField, substeps: usize, lipschitz_rate: f64, speed_bound: f64) -> Self {
        TransportMap {
            kind: TransportKind::OdeFlow {
                field,
                substeps: substeps.max(1),
            },
            lipschitz_rate,
            speed_bound,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, TransportKind::Identity)
    }

    /// Same map with a different RK4 substep count (no effect on other kinds).
    pub fn with_substeps(mut self, n: usize) -> Self {
        if let TransportKind::OdeFlow { substeps, .. } = &mut self.kind {
            *substeps = n.max(1);
        }
        self
    }

    /// `X(t1, t0, x, μ)`.
    pub fn apply(&self, t1: f64, t0: f64, x: &Point, mu: &DiscreteMeasure) -> Result<Point> {
        match &self.kind {
            TransportKind::Identity => Ok(x.clone()),
            TransportKind::Explicit(map) => map(t1, t0, x, mu),
            TransportKind::OdeFlow { field, substeps } => {
                let Point::Coords(start) = x else {
                    return Err(Error::Transport(format!("ODE flow needs Euclidean points, got {x}")));
                };
                Ok(Point::Coords(rk4_flow(field.as_ref(), t0, t1, start, *substeps, mu)))
            }
        }
    }
}

fn rk4_flow(
    field: &(dyn Fn(f64, &[f64], &DiscreteMeasure) -> Vec<f64> + Send + Sync),
    t0: f64,
    t1: f64,
    start: &[f64],
    steps: usize,
    mu: &DiscreteMeasure,
) -> Vec<f64> {
    let h = (t1 - t0) / steps as f64;
    let mut x = start.to_vec();
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = field(t, &x, mu);
        let k2 = field(t + 0.5 * h, &axpy(&x, &k1, 0.5 * h), mu);
        let k3 = field(t + 0.5 * h, &axpy(&x, &k2, 0.5 * h), mu);
        let k4 = field(t + h, &axpy(&x, &k3, h), mu);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Declared Lipschitz-in-measure constants, reported but never checked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeasureLipschitz {
    pub growth: f64,
    pub kernel: f64,
    pub influx: f64,
    pub transport: f64,
}

/// Everything the scheme needs: space, net and the four model functions.
#[derive(Clone)]
pub struct ModelSpec {
    pub space: Arc<Space>,
    pub net: Arc<EpsilonNet>,
    pub growth: GrowthFn,
    pub kernel: KernelFiniteRange,
    pub influx: InfluxFiniteRange,
    pub transport: TransportMap,
    pub measure_lipschitz: MeasureLipschitz,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("centers", &self.net.len())
            .field("epsilon", &self.net.radius())
            .field("growth", &self.growth)
            .field("transport", &self.transport)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    pub fn new(
        space: Arc<Space>,
        net: Arc<EpsilonNet>,
        growth: GrowthFn,
        kernel: KernelFiniteRange,
        influx: InfluxFiniteRange,
        transport: TransportMap,
    ) -> Result<Self> {
        if kernel.len() != net.len() || influx.len() != net.len() {
            return Err(Error::Model(format!(
                "kernel/influx sized {}/{} for a net of {} centers",
                kernel.len(),
                influx.len(),
                net.len()
            )));
        }
        if matches!(transport.kind, TransportKind::OdeFlow { .. }) && !space.is_euclidean() {
            return Err(Error::Model("ODE flows need a Euclidean space".into()));
        }
        Ok(ModelSpec {
            space,
            net,
            growth,
            kernel,
            influx,
            transport,
            measure_lipschitz: MeasureLipschitz::default(),
        })
    }

    /// Growth-only model (zero kernel and influx, identity transport).
    pub fn growth_only(space: Arc<Space>, net: Arc<EpsilonNet>, growth: GrowthFn) -> Result<Self> {
        let l = net.len();
        Self::new(
            space,
            net,
            growth,
            KernelFiniteRange::zero(l),
            InfluxFiniteRange::zero(l),
            TransportMap::identity(),
        )
    }

    pub fn with_kernel(mut self, kernel: KernelFiniteRange) -> Result<Self> {
        if kernel.len() != self.net.len() {
            return Err(Error::Model("kernel size does not match the net".into()));
        }
        self.kernel = kernel;
        Ok(self)
    }

    pub fn with_influx(mut self, influx: InfluxFiniteRange) -> Result<Self> {
        if influx.len() != self.net.len() {
            return Err(Error::Model("influx size does not match the net".into()));
        }
        self.influx = influx;
        Ok(self)
    }

    pub fn with_transport(mut self, transport: TransportMap) -> Result<Self> {
        if matches!(transport.kind, TransportKind::OdeFlow { .. }) && !self.space.is_euclidean() {
            return Err(Error::Model("ODE flows need a Euclidean space".into()));
        }
        self.transport = transport;
        Ok(self)
    }

    /// Model functions evaluated at `(t0, μ)` and held fixed: the autonomous,
    /// linear model the two split semigroups act on.
    pub fn freeze(&self, t0: f64, mu: &DiscreteMeasure) -> FrozenModel {
        FrozenModel {
            model: self.clone(),
            t0,
            mu: mu.clone(),
        }
    }
}

/// Model functions frozen at `(t0, μ)`.
#[derive(Clone, Debug)]
pub struct FrozenModel {
    model: ModelSpec,
    t0: f64,
    mu: DiscreteMeasure,
}

impl FrozenModel {
    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn space(&self) -> &Space {
        &self.model.space
    }

    pub fn net(&self) -> &EpsilonNet {
        &self.model.net
    }

    pub fn c(&self, x: &Point) -> f64 {
        self.model.growth.eval(self.t0, x, &self.mu)
    }

    pub fn beta(&self, x: &Point) -> Result<Vec<f64>> {
        self.model.kernel.beta(self.t0, x, &self.mu)
    }

    pub fn n(&self) -> Result<Vec<f64>> {
        self.model.influx.n(self.t0, &self.mu)
    }

    /// `X(t, 0, x)` of the autonomous frozen transport.
    pub fn transport(&self, t: f64, x: &Point) -> Result<Point> {
        self.model.transport.apply(self.t0 + t, self.t0, x, &self.mu)
    }
}

/// Outcome of one assumption check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub declared_measure_lipschitz: MeasureLipschitz,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

pub const SEMIGROUP_TOL: f64 = 1e-8;
const MAX_SAMPLE_POINTS: usize = 24;

/// Sampled checks of the standing assumptions for a step size `dt`.
///
/// Samples are the (evenly thinned) net centers, times `{0, dt, 2dt}`, and the
/// measures `0` and the unit-mass uniform measure on the centers.
pub fn validate_model(model: &ModelSpec, dt: f64) -> ValidationReport {
    let mut report = ValidationReport {
        declared_measure_lipschitz: model.measure_lipschitz,
        ..Default::default()
    };
    let net = &model.net;
    let stride = (net.len() / MAX_SAMPLE_POINTS).max(1);
    let xs: Vec<&Point> = net.centers().iter().step_by(stride).collect();
    let times = [0.0, dt, 2.0 * dt];
    let uniform = on_centers(net, &vec![1.0 / net.len().max(1) as f64; net.len()]);
    let measures = [DiscreteMeasure::zero(), uniform];

    let sup = model.growth.sup_bound;
    report.push(
        "euler positivity",
        dt > 0.0 && dt * sup <= 0.5,
        format!("dt * sup|c| = {} (must be <= 0.5)", dt * sup),
    );

    let mut worst_c = 0.0f64;
    for &t in &times {
        for mu in &measures {
            for x in &xs {
                worst_c = worst_c.max(model.growth.eval(t, x, mu).abs());
            }
        }
    }
    report.push(
        "growth bound",
        worst_c <= sup * (1.0 + 1e-12),
        format!("sampled max |c| = {worst_c}, declared {sup}"),
    );

    let mut worst_dev = 0.0f64;
    let mut transport_err = None;
    'outer: for mu in &measures {
        for x in &xs {
            let direct = model.transport.apply(2.0 * dt, 0.0, x, mu);
            let composed = model
                .transport
                .apply(dt, 0.0, x, mu)
                .and_then(|mid| model.transport.apply(2.0 * dt, dt, &mid, mu));
            match (direct, composed) {
                (Ok(a), Ok(b)) => worst_dev = worst_dev.max(model.space.dist(&a, &b)),
                (Err(e), _) | (_, Err(e)) => {
                    transport_err = Some(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    match transport_err {
        Some(e) => report.push("transport semigroup", false, e),
        None => report.push(
            "transport semigroup",
            worst_dev <= SEMIGROUP_TOL,
            format!("max deviation {worst_dev:e} (tolerance {SEMIGROUP_TOL:e})"),
        ),
    }

    let mut coeff_problem: Option<String> = None;
    let mut worst_beta = 0.0f64;
    let mut worst_n = 0.0f64;
    for &t in &times {
        for mu in &measures {
            match model.influx.n(t, mu) {
                Ok(n) => worst_n = worst_n.max(n.iter().sum()),
                Err(e) => coeff_problem = Some(e.to_string()),
            }
            for x in &xs {
                match model.kernel.beta(t, x, mu) {
                    Ok(b) => worst_beta = worst_beta.max(b.iter().sum()),
                    Err(e) => coeff_problem = Some(e.to_string()),
                }
            }
        }
    }
    report.push(
        "nonnegative coefficients",
        coeff_problem.is_none(),
        coeff_problem.unwrap_or_else(|| "beta_l, n_l >= 0 on all samples".into()),
    );
    let kb = model.kernel.mass_bound;
    let ib = model.influx.mass_bound;
    report.push(
        "coefficient mass bounds",
        worst_beta <= kb * (1.0 + 1e-9) + 1e-12 && worst_n <= ib * (1.0 + 1e-9) + 1e-12,
        format!("sum beta <= {worst_beta} (declared {kb}), sum n <= {worst_n} (declared {ib})"),
    );

    let alpha = model.growth.holder_exponent;
    report.push(
        "time regularity exponent",
        alpha > 0.0 && alpha <= 1.0,
        format!("alpha = {alpha}"),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat_metric::flat_distance;
    use crate::measure::DensitySource;
    use crate::metric_space::CompactSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_setup(eps: f64) -> (Arc<Space>, Arc<EpsilonNet>) {
        let space = Arc::new(Space::interval(-1.0, 2.0).unwrap());
        let k = CompactSet::Box {
            lower: vec![0.0],
            upper: vec![1.0],
        };
        let net = Arc::new(EpsilonNet::build(&space, k, eps).unwrap());
        (space, net)
    }

    #[test]
    fn zero_kernel_gives_zero_coefficients() {
        let (space, net) = unit_setup(0.2);
        let zero = LinearKernel {
            eval: Arc::new(|_, _| SourceMeasure::Discrete(DiscreteMeasure::zero())),
            mass_bound: 0.0,
        };
        let hat = discretize_kernel(space, &zero, net.clone());
        let beta = hat.beta(0.0, &Point::real(0.3), &DiscreteMeasure::zero()).unwrap();
        assert_eq!(beta, vec![0.0; net.len()]);
    }

    #[test]
    fn cell_division_lands_on_isolated_center() {
        // finite space whose points are more than ε apart: φ_l(z_l) = 1
        let space = Arc::new(
            Space::new(crate::metric_space::SpaceSpec::Finite {
                matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            })
            .unwrap(),
        );
        let net = Arc::new(EpsilonNet::build(&space, CompactSet::Whole, 0.5).unwrap());
        let kernel = LinearKernel {
            eval: Arc::new(|_, _| SourceMeasure::Discrete(DiscreteMeasure::dirac(Point::Index(1), 2.0).unwrap())),
            mass_bound: 2.0,
        };
        let hat = discretize_kernel(space, &kernel, net);
        assert_eq!(hat.beta(0.0, &Point::Index(0), &DiscreteMeasure::zero()).unwrap(), vec![0.0, 2.0]);

        // Euclidean version: x/2 is a center with no neighbour inside ε
        let space = Arc::new(Space::interval(0.0, 1.0).unwrap());
        // ε = 2 on [0, 1]: centers {0, 1}, both balls cover x/2, so β = 2 φ(x/2)
        let net = Arc::new(EpsilonNet::build(&space, CompactSet::Whole, 2.0).unwrap());
        let x = Point::real(1.0);
        let hat = discretize_kernel(space.clone(), &library::cell_division_kernel(1.0), net.clone());
        let beta = hat.beta(0.0, &x, &DiscreteMeasure::zero()).unwrap();
        let phi = net.partition_of_unity(&space, &Point::real(0.5));
        for (b, p) in beta.iter().zip(&phi) {
            assert!((b - 2.0 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn midpoint_between_centers_splits_mass() {
        let (space, net) = unit_setup(0.2);
        let y = 0.05; // between centers 0.0 and 0.1
        let kernel = LinearKernel {
            eval: Arc::new(move |_, _| SourceMeasure::Discrete(DiscreteMeasure::dirac(Point::real(y), 1.0).unwrap())),
            mass_bound: 1.0,
        };
        let hat = discretize_kernel(space.clone(), &kernel, net.clone());
        let beta = hat.beta(0.0, &Point::real(0.5), &DiscreteMeasure::zero()).unwrap();
        assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((beta[0] - beta[1]).abs() < 1e-15 && beta[0] > 0.0);
        let phi = net.partition_of_unity(&space, &Point::real(y));
        assert_eq!(beta, phi);
    }

    #[test]
    fn influx_examples() {
        let (space, net) = unit_setup(0.2);
        let z1 = net.centers()[0].clone();
        let point = LinearInflux {
            eval: Arc::new(move |_| SourceMeasure::Discrete(DiscreteMeasure::dirac(z1.clone(), 3.0).unwrap())),
            mass_bound: 3.0,
        };
        let n = discretize_influx(space.clone(), &point, net.clone()).n(0.0, &DiscreteMeasure::zero()).unwrap();
        // z_1 = 0 has neighbours within ε, so the mass spreads but stays 3 in total
        assert!((n.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let phi0 = net.partition_of_unity(&space, &net.centers()[0]);
        for (a, p) in n.iter().zip(&phi0) {
            assert!((a - 3.0 * p).abs() < 1e-15);
        }

        let none = LinearInflux {
            eval: Arc::new(|_| SourceMeasure::Discrete(DiscreteMeasure::zero())),
            mass_bound: 0.0,
        };
        let n0 = discretize_influx(space.clone(), &none, net.clone()).n(0.0, &DiscreteMeasure::zero()).unwrap();
        assert!(n0.iter().all(|&v| v == 0.0));

        // spread density: midpoint rule at resolution R against 2R
        let density = |res: usize| LinearInflux {
            eval: Arc::new(move |_| {
                SourceMeasure::EuclideanDensity(DensitySource::new(
                    Arc::new(|x: &[f64]| 1.0 + x[0]),
                    vec![0.2],
                    vec![0.8],
                    res,
                ))
            }),
            mass_bound: 2.0,
        };
        let coarse = discretize_influx(space.clone(), &density(200), net.clone()).n(0.0, &DiscreteMeasure::zero()).unwrap();
        let fine = discretize_influx(space, &density(400), net).n(0.0, &DiscreteMeasure::zero()).unwrap();
        let total: f64 = coarse.iter().sum();
        assert!((total - (0.6 + (0.64 - 0.04) / 2.0)).abs() < 1e-9);
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn negative_kernel_output_is_a_model_error() {
        let (space, net) = unit_setup(0.2);
        let bad = LinearKernel {
            eval: Arc::new(|_, _| {
                SourceMeasure::EuclideanDensity(DensitySource::new(Arc::new(|_| -1.0), vec![0.0], vec![1.0], 4))
            }),
            mass_bound: 1.0,
        };
        let hat = discretize_kernel(space, &bad, net);
        assert!(hat.beta(0.0, &Point::real(0.5), &DiscreteMeasure::zero()).is_err());
    }

    #[test]
    fn finite_range_kernel_error_bound() {
        let (space, net) = unit_setup(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(1..5);
            let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let ws: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let eta = DiscreteMeasure::new(ys.iter().map(|&y| Point::real(y)).collect(), ws).unwrap();
            let eta_src = eta.clone();
            let kernel = LinearKernel {
                eval: Arc::new(move |_, _| SourceMeasure::Discrete(eta_src.clone())),
                mass_bound: eta.total_mass(),
            };
            let hat = discretize_kernel(space.clone(), &kernel, net.clone());
            let beta = hat.beta(0.0, &Point::real(0.0), &DiscreteMeasure::zero()).unwrap();
            let eta_hat = on_centers(&net, &beta);
            let d = flat_distance(&space, &eta, &eta_hat).unwrap();
            assert!(d <= net.radius() * eta.total_mass() + 1e-9);
            assert!(eta_hat.total_mass() <= (net.radius() + 1.0) * eta.total_mass() + 1e-12);
        }
    }

    #[test]
    fn rk4_flow_semigroup_and_accuracy() {
        let space = Space::interval(-10.0, 10.0).unwrap();
        let flow = library::ode_flow(vec![1.0], vec![0.0], 16);
        let mu = DiscreteMeasure::zero();
        let x0 = Point::real(1.0);
        let x1 = flow.apply(0.1, 0.0, &x0, &mu).unwrap();
        assert!((x1.coords().unwrap()[0] - 0.1f64.exp()).abs() <= 1e-10);
        let dt = 0.1;
        let direct = flow.apply(2.0 * dt, 0.0, &x0, &mu).unwrap();
        let mid = flow.apply(dt, 0.0, &x0, &mu).unwrap();
        let composed = flow.apply(2.0 * dt, dt, &mid, &mu).unwrap();
        assert!(space.dist(&direct, &composed) <= 1e-8);
    }

    #[test]
    fn ode_flow_lipschitz_in_space() {
        let space = Space::interval(-100.0, 100.0).unwrap();
        let flow = library::ode_flow(vec![0.7], vec![0.2], 32);
        let rate = flow.lipschitz_rate;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mu = DiscreteMeasure::zero();
        for _ in 0..200 {
            let a = Point::real(rng.gen_range(-2.0..2.0));
            let b = Point::real(rng.gen_range(-2.0..2.0));
            let t = rng.gen_range(0.0..1.5);
            let d0 = space.dist(&a, &b);
            if d0 == 0.0 {
                continue;
            }
            let d1 = space.dist(&flow.apply(t, 0.0, &a, &mu).unwrap(), &flow.apply(t, 0.0, &b, &mu).unwrap());
            assert!(d1 / d0 <= (rate * t).exp() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn validation_examples() {
        let (space, net) = unit_setup(0.2);
        let model = ModelSpec::growth_only(space.clone(), net.clone(), library::constant_growth(1.0)).unwrap();
        let report = validate_model(&model, 0.4);
        assert!(report.passed(), "{report}");
        let too_big = validate_model(&model, 0.6);
        assert!(!too_big.passed());
        assert_eq!(too_big.failures()[0].name, "euler positivity");

        let flow_model = ModelSpec::growth_only(space, net, library::constant_growth(1.0))
            .unwrap()
            .with_transport(library::ode_flow(vec![1.0], vec![0.0], 16))
            .unwrap();
        let report = validate_model(&flow_model, 0.1);
        assert!(report.checks.iter().any(|c| c.name == "transport semigroup" && c.passed), "{report}");

        let mut bad_alpha = model.clone();
        bad_alpha.growth = bad_alpha.growth.clone().with_holder(1.5, 1.0);
        assert!(!validate_model(&bad_alpha, 0.1).passed());
    }

    #[test]
    fn non_semigroup_transport_is_flagged() {
        let (space, net) = unit_setup(0.2);
        // X(t1, t0, x) = x + (t1 − t0)² composes badly
        let map: MapEval = Arc::new(|t1, t0, x, _| {
            let dt = t1 - t0;
            Ok(Point::real(x.coords().unwrap()[0] + dt * dt))
        });
        let model = ModelSpec::growth_only(space, net, GrowthFn::zero())
            .unwrap()
            .with_transport(TransportMap::explicit(map, 0.0, 1.0))
            .unwrap();
        let report = validate_model(&model, 0.1);
        assert!(report.failures().iter().any(|c| c.name == "transport semigroup"));
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let (space, net) = unit_setup(0.2);
        let r = ModelSpec::new(
            space,
            net.clone(),
            GrowthFn::zero(),
            KernelFiniteRange::zero(net.len() + 1),
            InfluxFiniteRange::zero(net.len()),
            TransportMap::identity(),
        );
        assert!(r.is_err());
    }
}

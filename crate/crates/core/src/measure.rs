//! Finite nonnegative discrete measures `Σ m_j δ_{x_j}` and the sources they are
//! built from.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::{EpsilonNet, Point, Space};

/// Weighted sum of Dirac masses. Weights are nonnegative; zero weights are kept
/// until [`prune`](DiscreteMeasure::prune) drops them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.points, raw.weights)
    }
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!("weight {w} is not a finite nonnegative mass")));
        }
        Ok(DiscreteMeasure { points, weights })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(point: Point, mass: f64) -> Result<Self> {
        Self::new(vec![point], vec![mass])
    }

    pub(crate) fn from_parts_unchecked(points: Vec<Point>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(points.len(), weights.len());
        DiscreteMeasure { points, weights }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        self.points.iter().try_for_each(|p| space.validate_point(p))
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫ ψ dμ = Σ_j m_j ψ(x_j)`.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, psi: F) -> f64 {
        self.iter().map(|(p, m)| m * psi(p)).sum()
    }

    /// `f_# μ`: moves every atom, keeps its weight. Coinciding images are not
    /// merged here.
    pub fn push_forward<F>(&self, space: &Space, mut f: F) -> Result<Self>
    where
        F: FnMut(&Point) -> Result<Point>,
    {
        let points = self
            .points
            .iter()
            .map(|p| {
                let q = f(p)?;
                space
                    .validate_point(&q)
                    .map_err(|e| Error::Transport(format!("image of {p}: {e}")))?;
                Ok(q)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteMeasure {
            points,
            weights: self.weights.clone(),
        })
    }

    /// `s · μ` for `s ≥ 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.points.clone(), self.weights.iter().map(|w| w * s).collect())
    }

    /// Sum of two measures as a concatenation of atoms.
    pub fn sum(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.points.extend(other.points.iter().cloned());
        out.weights.extend(other.weights.iter().copied());
        out
    }

    /// Merges atoms within `merge_tol` of an earlier kept atom (the earlier
    /// location wins) and then drops weights below `weight_tol`.
    pub fn prune(&self, space: &Space, weight_tol: f64, merge_tol: f64) -> Self {
        let mut points: Vec<Point> = Vec::with_capacity(self.len());
        let mut weights: Vec<f64> = Vec::with_capacity(self.len());
        for (p, m) in self.iter() {
            match points.iter().position(|q| space.dist(p, q) <= merge_tol) {
                Some(k) => weights[k] += m,
                None => {
                    points.push(p.clone());
                    weights.push(m);
                }
            }
        }
        let (points, weights) = points
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w >= weight_tol)
            .unzip();
        DiscreteMeasure { points, weights }
    }

    /// Projection onto the net: every atom in `K` is moved to the first center
    /// whose open ε-ball contains it, i.e. to `z_l` for the greedy cell
    /// `U_l = (B_ε(z_l) \ ∪_{i<l} B_ε(z_i)) ∩ K`. Mass outside `K` is dropped.
    /// Only centers that receive mass appear in the output, in center order.
    pub fn approximate_on_net(&self, space: &Space, net: &EpsilonNet) -> Result<Self> {
        let mut cell_mass = vec![0.0; net.len()];
        let mut hit = vec![false; net.len()];
        for (x, m) in self.iter() {
            space.validate_point(x)?;
            if !space.contains(net.compact_set(), x) {
                continue;
            }
            let l = net
                .centers()
                .iter()
                .position(|z| space.dist(x, z) < net.radius())
                .ok_or_else(|| Error::InvalidInput(format!("{x} is in K but not covered by the net")))?;
            cell_mass[l] += m;
            hit[l] = true;
        }
        let (points, weights) = net
            .centers()
            .iter()
            .zip(cell_mass)
            .zip(hit)
            .filter(|(_, h)| *h)
            .map(|((z, m), _)| (z.clone(), m))
            .unzip();
        Ok(DiscreteMeasure { points, weights })
    }
}

impl fmt::Display for DiscreteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.iter().map(|(p, m)| format!("{m}·δ{p}")).collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A density on an axis-aligned box, integrated by the midpoint rule on a
/// `resolution^d` sub-grid.
#[derive(Clone)]
pub struct DensitySource {
    pub density: DensityFn,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
}

impl fmt::Debug for DensitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensitySource")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("resolution", &self.resolution)
            .finish_non_exhaustive()
    }
}

impl DensitySource {
    pub fn new(density: DensityFn, lower: Vec<f64>, upper: Vec<f64>, resolution: usize) -> Self {
        DensitySource {
            density,
            lower,
            upper,
            resolution,
        }
    }

    /// Midpoint-rule atoms: one per sub-cell, weight `density(mid) · volume`.
    pub fn quadrature(&self) -> Result<DiscreteMeasure> {
        if self.resolution == 0 {
            return Err(Error::Quadrature("resolution must be at least 1".into()));
        }
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::Quadrature("density box bounds mismatch".into()));
        }
        let r = self.resolution;
        let widths: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) / r as f64)
            .collect();
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Quadrature("density box must have positive width".into()));
        }
        let volume: f64 = widths.iter().product();
        let dim = self.lower.len();
        let count = r.pow(dim as u32);
        let mut points = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        for _ in 0..count {
            let mid: Vec<f64> = (0..dim)
                .map(|a| self.lower[a] + (idx[a] as f64 + 0.5) * widths[a])
                .collect();
            let rho = (self.density)(&mid);
            if !rho.is_finite() || rho < 0.0 {
                return Err(Error::Quadrature(format!("density is {rho} at {mid:?}")));
            }
            points.push(Point::Coords(mid));
            weights.push(rho * volume);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < r {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(DiscreteMeasure { points, weights })
    }
}

/// Input forms accepted for initial data and kernel outputs.
#[derive(Clone, Debug)]
pub enum SourceMeasure {
    Discrete(DiscreteMeasure),
    EuclideanDensity(DensitySource),
    /// Every point carries the same weight.
    SampleCloud { points: Vec<Point>, weight: f64 },
}

impl SourceMeasure {
    /// Atomic form of the source (exact for discrete inputs, midpoint
    /// quadrature for densities).
    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        match self {
            SourceMeasure::Discrete(m) => Ok(m.clone()),
            SourceMeasure::EuclideanDensity(d) => d.quadrature(),
            SourceMeasure::SampleCloud { points, weight } => {
                DiscreteMeasure::new(points.clone(), vec![*weight; points.len()])
            }
        }
    }
}

/// `μ_0 = Σ_l μ(U_{ε,l}) δ_{z_l}` for the greedy disjoint cells of the net.
pub fn approximate_initial(space: &Space, net: &EpsilonNet, source: &SourceMeasure) -> Result<DiscreteMeasure> {
    let atoms = source.to_discrete()?;
    atoms.approximate_on_net(space, net)
}

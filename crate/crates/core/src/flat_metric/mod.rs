//! Flat (bounded-Lipschitz dual) distance between discrete measures.
//!
//! For atoms `p_1..p_n` of `μ − ν` with signed masses `c_i`, the distance is the
//! value of
//!
//! ```text
//! max Σ c_i ψ_i   s.t.  −1 ≤ ψ_i ≤ 1,   ψ_i − ψ_j ≤ d(p_i, p_j)
//! ```
//!
//! [`flat_distance`] solves it with the in-crate simplex, adding Lipschitz rows
//! lazily (nearest neighbours first, then any row the current optimum
//! violates). [`flat_distance_oracle`] enumerates vertices of the full
//! polytope and is meant for cross-checking on tiny instances.

pub mod simplex;

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::metric_space::{Point, Space};

/// Atoms closer than this are treated as one point.
pub const SUPPORT_MERGE_TOL: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Largest support the vertex-enumeration oracle accepts.
pub const ORACLE_MAX_POINTS: usize = 6;

const SEED_NEIGHBOURS: usize = 6;

/// The flat-distance LP for one pair of measures.
#[derive(Clone, Debug)]
pub struct FlatLp {
    points: Vec<Point>,
    coefficients: Vec<f64>,
    distances: Vec<Vec<f64>>,
}

impl FlatLp {
    pub fn new(space: &Space, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Self> {
        mu.validate(space)?;
        nu.validate(space)?;
        let mut points: Vec<Point> = Vec::new();
        let mut coefficients: Vec<f64> = Vec::new();
        let signed = mu.iter().map(|(p, m)| (p, m)).chain(nu.iter().map(|(p, m)| (p, -m)));
        for (p, c) in signed {
            match points.iter().position(|q| space.dist(p, q) <= SUPPORT_MERGE_TOL) {
                Some(k) => coefficients[k] += c,
                None => {
                    points.push(p.clone());
                    coefficients.push(c);
                }
            }
        }
        let distances = points
            .iter()
            .map(|p| points.iter().map(|q| space.dist(p, q)).collect())
            .collect();
        Ok(FlatLp {
            points,
            coefficients,
            distances,
        })
    }

    /// Builds the LP directly from signed coefficients and a distance matrix.
    pub fn from_parts(coefficients: Vec<f64>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let n = coefficients.len();
        if distances.len() != n || distances.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("distance matrix does not match coefficients".into()));
        }
        Ok(FlatLp {
            points: (0..n).map(Point::Index).collect(),
            coefficients,
            distances,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn distances(&self) -> &[Vec<f64>] {
        &self.distances
    }

    /// Optimal value and an optimal test function `ψ`.
    pub fn solve(&self, tol: f64) -> Result<(f64, Vec<f64>)> {
        let n = self.len();
        let scale = self.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        if n == 0 || scale == 0.0 {
            return Ok((0.0, vec![0.0; n]));
        }
        let c: Vec<f64> = self.coefficients.iter().map(|v| v / scale).collect();

        // Substituting u = ψ + 1 gives 0 ≤ u_i ≤ 2 and u_i − u_j ≤ d_ij, a
        // system with nonnegative right-hand side that the origin satisfies.
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut active = vec![vec![false; n]; n];
        for i in 0..n {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| self.distances[i][a].total_cmp(&self.distances[i][b]));
            for &j in order.iter().take(SEED_NEIGHBOURS) {
                if self.distances[i][j] < 2.0 && !active[i][j] {
                    active[i][j] = true;
                    active[j][i] = true;
                    pairs.push((i, j));
                    pairs.push((j, i));
                }
            }
        }

        for _round in 0..=n * n {
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n + pairs.len());
            let mut rhs: Vec<f64> = Vec::with_capacity(n + pairs.len());
            for i in 0..n {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                rows.push(row);
                rhs.push(2.0);
            }
            for &(i, j) in &pairs {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row[j] = -1.0;
                rows.push(row);
                rhs.push(self.distances[i][j]);
            }
            let sol = simplex::maximize(&c, &rows, &rhs)?;
            let psi: Vec<f64> = sol.x.iter().map(|u| u - 1.0).collect();

            let mut added = false;
            for i in 0..n {
                for j in 0..n {
                    if i != j && !active[i][j] && psi[i] - psi[j] > self.distances[i][j] + tol * 1e-3 {
                        active[i][j] = true;
                        active[j][i] = true;
                        pairs.push((i, j));
                        pairs.push((j, i));
                        added = true;
                    }
                }
            }
            if !added {
                let value: f64 = self.coefficients.iter().zip(&psi).map(|(c, p)| c * p).sum();
                return Ok((value.max(0.0), psi));
            }
        }
        Err(Error::Lp("constraint generation did not settle".into()))
    }

    /// Maximum over all vertices of the feasible polytope.
    pub fn solve_by_enumeration(&self) -> Result<f64> {
        let n = self.len();
        if n > ORACLE_MAX_POINTS {
            return Err(Error::OracleSize {
                max: ORACLE_MAX_POINTS,
                got: n,
            });
        }
        if n == 0 {
            return Ok(0.0);
        }
        // Every constraint as (a, b) with a·ψ ≤ b.
        let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            cons.push((up, 1.0));
            let mut down = vec![0.0; n];
            down[i] = -1.0;
            cons.push((down, 1.0));
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let mut a = vec![0.0; n];
                    a[i] = 1.0;
                    a[j] = -1.0;
                    cons.push((a, self.distances[i][j]));
                }
            }
        }

        let mut best = f64::NEG_INFINITY;
        let mut subset: Vec<usize> = (0..n).collect();
        loop {
            if let Some(psi) = solve_square(&cons, &subset) {
                let feasible = cons
                    .iter()
                    .all(|(a, b)| a.iter().zip(&psi).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-9);
                if feasible {
                    let v: f64 = self.coefficients.iter().zip(&psi).map(|(c, p)| c * p).sum();
                    best = best.max(v);
                }
            }
            if !next_combination(&mut subset, cons.len()) {
                break;
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Lp("no vertex found".into()))
        }
    }
}

fn solve_square(cons: &[(Vec<f64>, f64)], subset: &[usize]) -> Option<Vec<f64>> {
    let n = subset.len();
    let mut a: Vec<Vec<f64>> = subset
        .iter()
        .map(|&k| {
            let mut row = cons[k].0.clone();
            row.push(cons[k].1);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `ρ_F(μ, ν)` with the default tolerance.
pub fn flat_distance(space: &Space, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    flat_distance_tol(space, mu, nu, DEFAULT_TOL)
}

pub fn flat_distance_tol(space: &Space, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    FlatLp::new(space, mu, nu)?.solve(tol).map(|(v, _)| v)
}

/// Vertex-enumeration value of the same LP; union support of at most
/// [`ORACLE_MAX_POINTS`].
pub fn flat_distance_oracle(space: &Space, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    FlatLp::new(space, mu, nu)?.solve_by_enumeration()
}

/// `‖μ‖_{BL*}`, which for a nonnegative measure is its total mass.
pub fn flat_norm(mu: &DiscreteMeasure) -> f64 {
    mu.total_mass()
}

//! State spaces, finite ε-nets and the Lipschitz partition of unity built on them.
//!
//! Three kinds of Polish space are supported: an axis-aligned Euclidean box, a
//! connected metric graph (points live on edges), and a finite metric given by a
//! distance matrix. A [`Space`] is validated once at construction and is
//! immutable afterwards.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cutoff level of the partition of unity.
pub const PARTITION_CUTOFF: f64 = 0.5;

const TRIANGLE_SLACK: f64 = 1e-12;

/// Serializable description of a state space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SpaceSpec {
    /// `dims[a] = [lower, upper]` for each axis.
    EuclideanBox { dims: Vec<[f64; 2]> },
    /// Undirected edges `[u, v, length]`. The vertex count defaults to one past
    /// the largest vertex id.
    Graph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertices: Option<usize>,
        edges: Vec<(usize, usize, f64)>,
    },
    Finite { matrix: Vec<Vec<f64>> },
}

/// A point of a [`Space`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Index(usize),
    Coords(Vec<f64>),
    OnEdge { edge: usize, offset: f64 },
}

impl Point {
    /// A point of the real line.
    pub fn real(x: f64) -> Self {
        Point::Coords(vec![x])
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            _ => None,
        }
    }

    /// Flat list of numeric components, used for CSV output.
    pub fn components(&self) -> Vec<f64> {
        match self {
            Point::Index(i) => vec![*i as f64],
            Point::Coords(c) => c.clone(),
            Point::OnEdge { edge, offset } => vec![*edge as f64, *offset],
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Index(i) => write!(f, "#{i}"),
            Point::Coords(c) => write!(f, "{c:?}"),
            Point::OnEdge { edge, offset } => write!(f, "edge {edge} @ {offset}"),
        }
    }
}

/// The compact set `K` an ε-net covers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CompactSet {
    /// Axis-aligned box inside a Euclidean space.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// The whole space (graph and finite spaces, or the full Euclidean box).
    Whole,
}

#[derive(Clone, Debug)]
enum Kind {
    Euclidean {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Graph {
        edges: Vec<(usize, usize, f64)>,
        vertex_dist: Vec<Vec<f64>>,
    },
    Finite {
        matrix: Vec<Vec<f64>>,
    },
}

/// A validated metric space.
#[derive(Clone, Debug)]
pub struct Space {
    spec: SpaceSpec,
    kind: Kind,
}

impl Space {
    pub fn new(spec: SpaceSpec) -> Result<Self> {
        let kind = match &spec {
            SpaceSpec::EuclideanBox { dims } => {
                if dims.is_empty() {
                    return Err(Error::InvalidInput("euclidean box needs at least one axis".into()));
                }
                for (a, [lo, hi]) in dims.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::InvalidInput(format!(
                            "axis {a}: bounds [{lo}, {hi}] must be finite with lower < upper"
                        )));
                    }
                }
                Kind::Euclidean {
                    lower: dims.iter().map(|d| d[0]).collect(),
                    upper: dims.iter().map(|d| d[1]).collect(),
                }
            }
            SpaceSpec::Graph { vertices, edges } => {
                let n = match vertices {
                    Some(n) => *n,
                    None => edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0),
                };
                if n == 0 || edges.is_empty() {
                    return Err(Error::InvalidInput("graph needs at least one edge".into()));
                }
                for (e, &(u, v, len)) in edges.iter().enumerate() {
                    if u >= n || v >= n {
                        return Err(Error::InvalidInput(format!("edge {e}: vertex out of range")));
                    }
                    if !(len.is_finite() && len > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "edge {e}: length {len} must be positive"
                        )));
                    }
                }
                let vertex_dist = all_pairs_dijkstra(n, edges);
                if vertex_dist[0].iter().any(|d| d.is_infinite()) {
                    return Err(Error::InvalidInput("graph is not connected".into()));
                }
                Kind::Graph {
                    edges: edges.clone(),
                    vertex_dist,
                }
            }
            SpaceSpec::Finite { matrix } => {
                validate_distance_matrix(matrix)?;
                Kind::Finite {
                    matrix: matrix.clone(),
                }
            }
        };
        Ok(Space { spec, kind })
    }

    /// The real interval `[lower, upper]`.
    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Space::new(SpaceSpec::EuclideanBox {
            dims: vec![[lower, upper]],
        })
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    /// Euclidean dimension, `None` for graph and finite spaces.
    pub fn dimension(&self) -> Option<usize> {
        match &self.kind {
            Kind::Euclidean { lower, .. } => Some(lower.len()),
            _ => None,
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, Kind::Euclidean { .. })
    }

    /// Number of numeric columns a point occupies in CSV output.
    pub fn point_width(&self) -> usize {
        match &self.kind {
            Kind::Euclidean { lower, .. } => lower.len(),
            Kind::Graph { .. } => 2,
            Kind::Finite { .. } => 1,
        }
    }

    pub fn point_columns(&self) -> Vec<String> {
        match &self.kind {
            Kind::Euclidean { lower, .. } => (0..lower.len()).map(|a| format!("x{a}")).collect(),
            Kind::Graph { .. } => vec!["edge".into(), "offset".into()],
            Kind::Finite { .. } => vec!["index".into()],
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match (&self.kind, p) {
            (Kind::Euclidean { lower, upper }, Point::Coords(c)) => {
                if c.len() != lower.len() {
                    return Err(Error::InvalidPoint(format!(
                        "{p}: expected {} coordinates",
                        lower.len()
                    )));
                }
                for (a, &x) in c.iter().enumerate() {
                    let slack = 1e-12 * (1.0 + lower[a].abs().max(upper[a].abs()));
                    if !x.is_finite() || x < lower[a] - slack || x > upper[a] + slack {
                        return Err(Error::InvalidPoint(format!(
                            "{p}: coordinate {a} outside [{}, {}]",
                            lower[a], upper[a]
                        )));
                    }
                }
                Ok(())
            }
            (Kind::Graph { edges, .. }, Point::OnEdge { edge, offset }) => {
                let Some(&(_, _, len)) = edges.get(*edge) else {
                    return Err(Error::InvalidPoint(format!("{p}: no such edge")));
                };
                if !(offset.is_finite() && *offset >= 0.0 && *offset <= len) {
                    return Err(Error::InvalidPoint(format!("{p}: offset outside [0, {len}]")));
                }
                Ok(())
            }
            (Kind::Finite { matrix }, Point::Index(i)) => {
                if *i >= matrix.len() {
                    return Err(Error::InvalidPoint(format!("{p}: index out of range")));
                }
                Ok(())
            }
            _ => Err(Error::InvalidPoint(format!("{p}: wrong point kind for space"))),
        }
    }

    /// Checked distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        Ok(self.dist(p, q))
    }

    /// Distance between points already known to be valid.
    ///
    /// Mismatched point kinds yield `f64::INFINITY`.
    pub fn dist(&self, p: &Point, q: &Point) -> f64 {
        match (&self.kind, p, q) {
            (Kind::Euclidean { .. }, Point::Coords(a), Point::Coords(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            (
                Kind::Graph { edges, vertex_dist },
                Point::OnEdge { edge: e1, offset: s1 },
                Point::OnEdge { edge: e2, offset: s2 },
            ) => {
                let (u1, v1, l1) = edges[*e1];
                let (u2, v2, l2) = edges[*e2];
                let to1 = [(u1, *s1), (v1, l1 - s1)];
                let to2 = [(u2, *s2), (v2, l2 - s2)];
                let mut best = f64::INFINITY;
                for &(a, da) in &to1 {
                    for &(b, db) in &to2 {
                        best = best.min(da + vertex_dist[a][b] + db);
                    }
                }
                if e1 == e2 {
                    best = best.min((s1 - s2).abs());
                }
                best
            }
            (Kind::Finite { matrix }, Point::Index(i), Point::Index(j)) => matrix[*i][*j],
            _ => f64::INFINITY,
        }
    }

    /// Whether `p` lies in `k`.
    pub fn contains(&self, k: &CompactSet, p: &Point) -> bool {
        match (k, p) {
            (CompactSet::Whole, _) => self.validate_point(p).is_ok(),
            (CompactSet::Box { lower, upper }, Point::Coords(c)) => {
                c.len() == lower.len()
                    && c.iter()
                        .enumerate()
                        .all(|(a, &x)| x >= lower[a] && x <= upper[a])
            }
            _ => false,
        }
    }

    /// Checks that `k` is a nonempty compact subset of this space.
    pub fn validate_compact_set(&self, k: &CompactSet) -> Result<()> {
        match (&self.kind, k) {
            (_, CompactSet::Whole) => Ok(()),
            (Kind::Euclidean { lower, upper }, CompactSet::Box { lower: kl, upper: ku }) => {
                if kl.len() != lower.len() || ku.len() != lower.len() {
                    return Err(Error::InvalidInput("K box dimension mismatch".into()));
                }
                for a in 0..lower.len() {
                    if !(kl[a] <= ku[a]) {
                        return Err(Error::InvalidInput(format!("K box axis {a} is empty")));
                    }
                    if kl[a] < lower[a] || ku[a] > upper[a] {
                        return Err(Error::InvalidInput(format!(
                            "K box axis {a} leaves the ambient box"
                        )));
                    }
                }
                Ok(())
            }
            _ => Err(Error::InvalidInput(
                "box-shaped K is only available in Euclidean spaces".into(),
            )),
        }
    }

    /// Uniform-ish random point of `k`: uniform on boxes, length-weighted on
    /// graphs, uniform over indices on finite spaces.
    pub fn sample_in<R: Rng + ?Sized>(&self, k: &CompactSet, rng: &mut R) -> Point {
        match (&self.kind, k) {
            (Kind::Euclidean { .. }, CompactSet::Box { lower, upper }) => Point::Coords(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect(),
            ),
            _ => self.sample(rng),
        }
    }

    /// Random point of the whole space.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            Kind::Euclidean { lower, upper } => Point::Coords(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(&lo, &hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect(),
            ),
            Kind::Graph { edges, .. } => {
                let total: f64 = edges.iter().map(|e| e.2).sum();
                let mut target = rng.gen::<f64>() * total;
                let mut chosen = edges.len() - 1;
                for (e, &(_, _, len)) in edges.iter().enumerate() {
                    if target < len {
                        chosen = e;
                        break;
                    }
                    target -= len;
                }
                let len = edges[chosen].2;
                Point::OnEdge {
                    edge: chosen,
                    offset: (rng.gen::<f64>() * len).min(len),
                }
            }
            Kind::Finite { matrix } => Point::Index(rng.gen_range(0..matrix.len())),
        }
    }
}

fn validate_distance_matrix(m: &[Vec<f64>]) -> Result<()> {
    let n = m.len();
    if n == 0 {
        return Err(Error::InvalidInput("finite metric needs at least one point".into()));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!("distance matrix row {i} is not length {n}")));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidInput(format!("d({i},{i}) must be 0")));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::InvalidInput(format!("d({i},{j}) = {d} is not a distance")));
            }
            if i != j && d == 0.0 {
                return Err(Error::InvalidInput(format!("d({i},{j}) = 0 for distinct points")));
            }
            if d != m[j][i] {
                return Err(Error::InvalidInput(format!("distance matrix not symmetric at ({i},{j})")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m[i][k] > m[i][j] + m[j][k] + TRIANGLE_SLACK * (1.0 + m[i][k]) {
                    return Err(Error::InvalidInput(format!(
                        "triangle inequality fails for ({i},{j},{k})"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn all_pairs_dijkstra(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, len) in edges {
        adj[u].push((v, len));
        adj[v].push((u, len));
    }
    (0..n)
        .map(|src| {
            let mut dist = vec![f64::INFINITY; n];
            let mut heap = BinaryHeap::new();
            dist[src] = 0.0;
            heap.push(Frontier(0.0, src));
            while let Some(Frontier(d, u)) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &(v, len) in &adj[u] {
                    let nd = d + len;
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Frontier(nd, v));
                    }
                }
            }
            dist
        })
        .collect()
}

/// Finite set of centers whose ε/2-neighbourhoods cover `K`, together with the
/// partition of unity subordinate to the ε-balls around them.
#[derive(Clone, Debug)]
pub struct EpsilonNet {
    centers: Vec<Point>,
    radius: f64,
    k: CompactSet,
    cutoff: f64,
    lipschitz: f64,
}

impl EpsilonNet {
    /// Builds an ε/2-dense net of `k`.
    ///
    /// Euclidean boxes use a tensor grid with axis step at most `ε/(2√d)`, graphs
    /// place one center per vertex plus evenly spaced interior points with gap
    /// at most `ε/2` on every edge, and finite spaces use every point.
    pub fn build(space: &Space, k: CompactSet, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        space.validate_compact_set(&k)?;
        let centers = match &space.kind {
            Kind::Euclidean { lower, upper } => {
                let (lo, hi) = match &k {
                    CompactSet::Box { lower, upper } => (lower.clone(), upper.clone()),
                    CompactSet::Whole => (lower.clone(), upper.clone()),
                };
                let d = lo.len() as f64;
                let step = epsilon / (2.0 * d.sqrt());
                let axes: Vec<Vec<f64>> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&a, &b)| {
                        let width = b - a;
                        let cells = (width / step - 1e-9).ceil().max(0.0) as usize;
                        if cells == 0 {
                            vec![a]
                        } else {
                            (0..=cells)
                                .map(|i| a + i as f64 * width / cells as f64)
                                .collect()
                        }
                    })
                    .collect();
                tensor_grid(&axes).into_iter().map(Point::Coords).collect()
            }
            Kind::Graph { edges, vertex_dist } => {
                let n = vertex_dist.len();
                let mut vertex_center: Vec<Option<Point>> = vec![None; n];
                for (e, &(u, v, len)) in edges.iter().enumerate() {
                    vertex_center[u].get_or_insert(Point::OnEdge { edge: e, offset: 0.0 });
                    vertex_center[v].get_or_insert(Point::OnEdge { edge: e, offset: len });
                }
                let mut centers: Vec<Point> = vertex_center.into_iter().flatten().collect();
                for (e, &(_, _, len)) in edges.iter().enumerate() {
                    let cells = (len / (epsilon / 2.0) - 1e-9).ceil().max(1.0) as usize;
                    for i in 1..cells {
                        centers.push(Point::OnEdge {
                            edge: e,
                            offset: i as f64 * len / cells as f64,
                        });
                    }
                }
                centers
            }
            Kind::Finite { matrix } => (0..matrix.len()).map(Point::Index).collect(),
        };
        let lipschitz = partition_lipschitz_bound(space, &centers, epsilon, PARTITION_CUTOFF);
        Ok(EpsilonNet {
            centers,
            radius: epsilon,
            k,
            cutoff: PARTITION_CUTOFF,
            lipschitz,
        })
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn compact_set(&self) -> &CompactSet {
        &self.k
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// A Lipschitz constant valid for every `φ_l` on the whole space.
    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }

    /// Evaluates `(φ_1(x), …, φ_L(x))`.
    ///
    /// With hats `h_l(x) = max(0, 1 − d(x, z_l)/ε)` and `S = Σ h_l`,
    /// `φ_l = h_l / max(S, τ)`: the family sums to one wherever `S ≥ τ`, which
    /// holds on `K`, and the sum decays to zero towards the edge of the covered
    /// region.
    pub fn partition_of_unity(&self, space: &Space, x: &Point) -> Vec<f64> {
        let mut phi = vec![0.0; self.centers.len()];
        self.partition_into(space, x, &mut phi);
        phi
    }

    /// [`partition_of_unity`](Self::partition_of_unity) into a caller-provided buffer.
    pub fn partition_into(&self, space: &Space, x: &Point, phi: &mut [f64]) {
        let mut total = 0.0;
        for (slot, z) in phi.iter_mut().zip(&self.centers) {
            let h = (1.0 - space.dist(x, z) / self.radius).max(0.0);
            *slot = h;
            total += h;
        }
        if total > 0.0 {
            let denom = total.max(self.cutoff);
            for slot in phi.iter_mut() {
                *slot /= denom;
            }
        }
    }

    /// Index of the first center within `tol` of `x`.
    pub fn center_index(&self, space: &Space, x: &Point, tol: f64) -> Option<usize> {
        self.centers.iter().position(|z| space.dist(x, z) <= tol)
    }
}

fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

// φ_l = h_l · g(S) with g(S) = min(1/S, 1/τ), so
// |Δφ_l| ≤ |Δh_l|/τ + |ΔS|/τ² ≤ (1/τ + A/τ²)·d/ε for d < ε,
// where A bounds the number of centers active at either point. Active centers
// lie within 4ε of any one of them. For d ≥ ε the trivial bound 1 ≤ d/ε applies.
fn partition_lipschitz_bound(space: &Space, centers: &[Point], epsilon: f64, cutoff: f64) -> f64 {
    let crowd = centers
        .iter()
        .map(|a| {
            centers
                .iter()
                .filter(|b| space.dist(a, b) < 4.0 * epsilon)
                .count()
        })
        .max()
        .unwrap_or(0) as f64;
    (1.0 / cutoff + crowd / (cutoff * cutoff)) / epsilon
}

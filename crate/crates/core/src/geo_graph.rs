//! k-nearest-neighbour graphs over geolocated nodes with Gaussian edge
//! weights and the combinatorial Laplacian `L = D - W`.

use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Default neighbour count used by the experiments.
pub const DEFAULT_K: usize = 10;

const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Geolocated nodes. Coordinates are `(latitude, longitude)` in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable<T> {
    coords: Vec<(T, T)>,
    labels: Vec<String>,
}

impl<T: Real> NodeTable<T> {
    pub fn new(coords: Vec<(T, T)>, labels: Vec<String>) -> Result<Self> {
        if coords.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates but {} labels",
                coords.len(),
                labels.len()
            )));
        }
        if coords.len() < 2 {
            return invalid("a node table needs at least two nodes");
        }
        for (i, &(lat, lon)) in coords.iter().enumerate() {
            if !lat.is_finite() || !lon.is_finite() {
                return invalid(format!("node {i}: non-finite coordinate"));
            }
            if lat.abs() > T::lit(90.0) || lon.abs() > T::lit(180.0) {
                return invalid(format!(
                    "node {i}: coordinate ({lat}, {lon}) outside latitude/longitude range"
                ));
            }
        }
        Ok(Self { coords, labels })
    }

    /// Nodes labelled `0..n`.
    pub fn unlabeled(coords: Vec<(T, T)>) -> Result<Self> {
        let labels = (0..coords.len()).map(|i| i.to_string()).collect();
        Self::new(coords, labels)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(T, T)] {
        &self.coords
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn cast<U: Real>(&self) -> NodeTable<U> {
        NodeTable {
            coords: self
                .coords
                .iter()
                .map(|&(a, b)| (U::lit(a.as_f64()), U::lit(b.as_f64())))
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Euclidean distance on the raw `(latitude, longitude)` degree pairs.
    #[default]
    EuclideanDegrees,
    /// Great-circle distance in kilometres.
    HaversineKm,
}

impl Metric {
    pub fn distance<T: Real>(self, a: (T, T), b: (T, T)) -> T {
        match self {
            Metric::EuclideanDegrees => {
                let (dx, dy) = (a.0 - b.0, a.1 - b.1);
                (dx * dx + dy * dy).sqrt()
            }
            Metric::HaversineKm => {
                let to_rad = T::lit(std::f64::consts::PI / 180.0);
                let (lat1, lat2) = (a.0 * to_rad, b.0 * to_rad);
                let dlat = lat2 - lat1;
                let dlon = (b.1 - a.1) * to_rad;
                let half = T::lit(0.5);
                let h = (dlat * half).sin().powi(2)
                    + lat1.cos() * lat2.cos() * (dlon * half).sin().powi(2);
                T::lit(2.0 * EARTH_RADIUS_KM) * h.sqrt().min(T::one()).asin()
            }
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" | "euclidean-degrees" => Ok(Metric::EuclideanDegrees),
            "haversine" | "haversine-km" => Ok(Metric::HaversineKm),
            other => invalid(format!("unknown metric {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub i: usize,
    pub j: usize,
    pub distance: T,
}

/// Undirected edges with `i < j`, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet<T> {
    n_nodes: usize,
    edges: Vec<Edge<T>>,
}

impl<T: Real> EdgeSet<T> {
    /// Normalises orientation, sorts, and rejects self-loops and duplicates.
    pub fn new(n_nodes: usize, mut edges: Vec<Edge<T>>) -> Result<Self> {
        for e in &mut edges {
            if e.i == e.j {
                return invalid(format!("self-loop at node {}", e.i));
            }
            if e.i.max(e.j) >= n_nodes {
                return invalid(format!("edge ({}, {}) references a missing node", e.i, e.j));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
            if !(e.distance >= T::zero()) || !e.distance.is_finite() {
                return invalid(format!("edge ({}, {}) has invalid distance", e.i, e.j));
            }
        }
        edges.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        if let Some(w) = edges.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return invalid(format!("duplicate edge ({}, {})", w[0].i, w[0].j));
        }
        Ok(Self { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }
}

/// Symmetrised kNN edge set: `(i, j)` is kept when either endpoint lists the
/// other among its `k` nearest. Ties at equal distance go to the lower index.
pub fn knn_edges<T: Real>(nodes: &NodeTable<T>, k: usize, metric: Metric) -> Result<EdgeSet<T>> {
    let n = nodes.len();
    if k == 0 || k >= n {
        return invalid(format!("k = {k} must satisfy 1 <= k < N = {n}"));
    }
    let coords = nodes.coords();
    let mut chosen: Vec<(usize, usize, T)> = Vec::with_capacity(n * k);
    let mut row: Vec<(T, usize)> = Vec::with_capacity(n - 1);
    let by_dist_then_index = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    for i in 0..n {
        row.clear();
        row.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (metric.distance(coords[i], coords[j]), j)),
        );
        if k < row.len() {
            row.select_nth_unstable_by(k - 1, by_dist_then_index);
        }
        for &(d, j) in &row[..k] {
            chosen.push((i.min(j), i.max(j), d));
        }
    }
    chosen.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    chosen.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    EdgeSet::new(
        n,
        chosen
            .into_iter()
            .map(|(i, j, distance)| Edge { i, j, distance })
            .collect(),
    )
}

/// Kernel bandwidth `σ = Σ d(i,j) / (|E| + N)` over undirected edges.
pub fn kernel_sigma<T: Real>(edges: &EdgeSet<T>, n_nodes: usize) -> Result<T> {
    if edges.is_empty() {
        return invalid("kernel bandwidth needs at least one edge");
    }
    let total: T = edges.edges().iter().map(|e| e.distance).sum();
    let sigma = total / T::from_usize_exact(edges.len() + n_nodes);
    if sigma <= T::zero() {
        return Err(Error::DegenerateKernel);
    }
    Ok(sigma)
}

/// Symmetric adjacency with `W(i,j) = exp(-d(i,j)^2 / σ^2)`.
pub fn gaussian_weights<T: Real>(edges: &EdgeSet<T>, sigma: T) -> Result<CsrMatrix<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return invalid(format!("sigma = {sigma} must be positive and finite"));
    }
    let s2 = sigma * sigma;
    let mut triplets = Vec::with_capacity(2 * edges.len());
    for e in edges.edges() {
        let w = (-(e.distance * e.distance) / s2).exp();
        triplets.push((e.i, e.j, w));
        triplets.push((e.j, e.i, w));
    }
    CsrMatrix::from_triplets(edges.n_nodes(), &triplets)
}

/// Combinatorial Laplacian `D - W`.
pub fn laplacian<T: Real>(w: &CsrMatrix<T>) -> Result<CsrMatrix<T>> {
    if !w.is_symmetric() {
        return invalid("adjacency matrix is not symmetric");
    }
    let n = w.dim();
    let mut triplets = Vec::with_capacity(w.nnz() + n);
    let mut degree = vec![T::zero(); n];
    for (i, j, v) in w.iter() {
        if i == j && v != T::zero() {
            return invalid(format!("adjacency has nonzero diagonal at {i}"));
        }
        if v < T::zero() {
            return invalid(format!("negative weight at ({i}, {j})"));
        }
        if i != j {
            degree[i] = degree[i] + v;
            triplets.push((i, j, -v));
        }
    }
    for (i, d) in degree.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    CsrMatrix::from_triplets(n, &triplets)
}

/// Undirected weighted graph with its Laplacian.
#[derive(Debug, Clone)]
pub struct GeoGraph<T> {
    adjacency: CsrMatrix<T>,
    degree: Vec<T>,
    laplacian: CsrMatrix<T>,
    sigma: T,
    k: usize,
}

impl<T: Real> GeoGraph<T> {
    /// kNN graph with Gaussian weights and the bandwidth rule above.
    pub fn build(nodes: &NodeTable<T>, k: usize, metric: Metric) -> Result<Self> {
        let edges = knn_edges(nodes, k, metric)?;
        let sigma = kernel_sigma(&edges, nodes.len())?;
        let w = gaussian_weights(&edges, sigma)?;
        Self::from_adjacency(w, sigma, k)
    }

    pub fn from_adjacency(adjacency: CsrMatrix<T>, sigma: T, k: usize) -> Result<Self> {
        let laplacian = laplacian(&adjacency)?;
        let degree = adjacency.row_sums();
        Ok(Self {
            adjacency,
            degree,
            laplacian,
            sigma,
            k,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.dim()
    }

    pub fn adjacency(&self) -> &CsrMatrix<T> {
        &self.adjacency
    }

    pub fn degree(&self) -> &[T] {
        &self.degree
    }

    pub fn laplacian(&self) -> &CsrMatrix<T> {
        &self.laplacian
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().filter(|&(i, j, _)| i < j).count()
    }

    /// Number of connected components (edges with positive weight).
    pub fn n_components(&self) -> usize {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, w) in self.adjacency.row(u) {
                    if w > T::zero() && !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// Plain-text edge list: `N k sigma` header, then `i j weight` per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {:.16e}", self.n_nodes(), self.k, self.sigma.as_f64())?;
        for (i, j, w) in self.adjacency.iter().filter(|&(i, j, _)| i < j) {
            writeln!(out, "{i} {j} {:.16e}", w.as_f64())?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let parse_err = |line: usize, message: String| Error::Parse {
            path: "<edge list>".into(),
            line: line as u64 + 1,
            message,
        };
        let (n, k, sigma) = loop {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, "missing header".into()))?;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(no, "header must be `N k sigma`".into()));
            }
            let n: usize = f[0].parse().map_err(|_| parse_err(no, "bad N".into()))?;
            let k: usize = f[1].parse().map_err(|_| parse_err(no, "bad k".into()))?;
            let s: f64 = f[2].parse().map_err(|_| parse_err(no, "bad sigma".into()))?;
            break (n, k, T::lit(s));
        };
        let mut triplets = Vec::new();
        for (no, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(no, "edge line must be `i j weight`".into()));
            }
            let i: usize = f[0].parse().map_err(|_| parse_err(no, "bad i".into()))?;
            let j: usize = f[1].parse().map_err(|_| parse_err(no, "bad j".into()))?;
            let w: f64 = f[2].parse().map_err(|_| parse_err(no, "bad weight".into()))?;
            if i == j || i >= n || j >= n || !(w > 0.0) {
                return Err(parse_err(no, format!("invalid edge ({i}, {j}, {w})")));
            }
            triplets.push((i, j, T::lit(w)));
            triplets.push((j, i, T::lit(w)));
        }
        let w = CsrMatrix::from_triplets(n, &triplets)?;
        Self::from_adjacency(w, sigma, k)
    }
}

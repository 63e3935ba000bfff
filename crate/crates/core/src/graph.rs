//! Weighted undirected graphs and k-nearest-neighbour construction.

use std::collections::VecDeque;

use ndarray::Array2;
use crate::error::{Error, Result};

/// Relative slack under which two distances count as tied for the k-th
/// neighbour slot.
const TIE_TOLERANCE: f64 = 1e-12;

/// A connected, undirected graph with a symmetric nonnegative adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Array2<f64>,
    coords: Option<Vec<Vec<f64>>>,
}

impl Graph {
    /// Validates and wraps an adjacency matrix.
    pub fn from_adjacency(adjacency: Array2<f64>, coords: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let (rows, cols) = adjacency.dim();
        if rows != cols {
            return Err(Error::shape("Graph::from_adjacency", "square adjacency", format!("{rows}x{cols}")));
        }
        if rows == 0 {
            return Err(Error::InvalidInput("graph must have at least one node".into()));
        }
        if let Some(c) = &coords {
            if c.len() != rows {
                return Err(Error::shape("Graph::from_adjacency coords", rows, c.len()));
            }
        }
        for i in 0..rows {
            if adjacency[[i, i]] != 0.0 {
                return Err(Error::InvalidInput(format!("adjacency has nonzero diagonal at node {i}")));
            }
            for j in 0..rows {
                let w = adjacency[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidInput(format!("adjacency weight ({i}, {j}) = {w} is not a finite nonnegative value")));
                }
                if w != adjacency[[j, i]] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        let graph = Self { adjacency, coords };
        let components = graph.components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.adjacency.rows().into_iter().map(|r| r.sum()).collect()
    }

    /// Indices `j` with a positive edge weight to `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency
            .row(i)
            .into_iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, _)| j)
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.adjacency[[i, j]];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn combinatorial_laplacian(&self) -> Array2<f64> {
        let mut lap = -self.adjacency.clone();
        for (i, d) in self.degrees().into_iter().enumerate() {
            lap[[i, i]] = d;
        }
        lap
    }

    /// Connected components by breadth-first search, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for v in 0..n {
                    if !seen[v] && self.adjacency[[u, v]] > 0.0 {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Builds a Gaussian-weighted k-NN graph.
///
/// `j` is linked to `i` when its distance is within the `k`-th smallest
/// distance from `i` (ties at the cutoff are all kept), and the edge set is
/// the union over both endpoints. Weights are `exp(-d² / σ²)`; when `sigma`
/// is `None`, `σ²` is the mean squared length of the retained edges.
pub fn build_knn_graph(coords: &[Vec<f64>], k: usize, sigma: Option<f64>) -> Result<Graph> {
    let n = coords.len();
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    if n < k + 1 {
        return Err(Error::config("k", format!("need at least k+1 = {} points, got {n}", k + 1)));
    }
    if let Some(s) = sigma {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::config("sigma", format!("must be positive, got {s}")));
        }
    }
    let dim = coords[0].len();
    if dim == 0 {
        return Err(Error::InvalidInput("points must have at least one coordinate".into()));
    }
    for (i, p) in coords.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::shape("build_knn_graph point dimension", dim, format!("{} at point {i}", p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coordinates of point {i}")));
        }
    }

    let mut dist2 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = squared_distance(&coords[i], &coords[j]);
            if d == 0.0 {
                return Err(Error::DuplicatePoint(i, j));
            }
            dist2[[i, j]] = d;
            dist2[[j, i]] = d;
        }
    }

    let mut linked = Array2::<bool>::from_elem((n, n), false);
    for i in 0..n {
        let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist2[[i, j]]).collect();
        others.sort_by(f64::total_cmp);
        let cutoff = others[k - 1] * (1.0 + TIE_TOLERANCE);
        for j in (0..n).filter(|&j| j != i) {
            if dist2[[i, j]] <= cutoff {
                linked[[i, j]] = true;
                linked[[j, i]] = true;
            }
        }
    }

    let sigma2 = match sigma {
        Some(s) => s * s,
        None => {
            let (mut sum, mut count) = (0.0, 0usize);
            for i in 0..n {
                for j in (i + 1)..n {
                    if linked[[i, j]] {
                        sum += dist2[[i, j]];
                        count += 1;
                    }
                }
            }
            sum / count as f64
        }
    };

    let adjacency = Array2::from_shape_fn((n, n), |(i, j)| {
        if linked[[i, j]] {
            (-dist2[[i, j]] / sigma2).exp()
        } else {
            0.0
        }
    });
    Graph::from_adjacency(adjacency, Some(coords.to_vec()))
}

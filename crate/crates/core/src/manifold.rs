//! Isomap network: symmetric k-NN graph over signatures, Dijkstra geodesics, and
//! classical MDS down to two dimensions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Row-major `n x n` matrix of pairwise Euclidean distances.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Undirected k-NN graph. Edge weights are the Euclidean signature distances.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    pub k: usize,
    /// Sorted neighbor lists; symmetric, no self-loops.
    pub neighbors: Vec<Vec<usize>>,
    /// Full signature-space distance matrix, row-major.
    pub distances: Vec<f64>,
}

impl NeighborGraph {
    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.n() + j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i == j || self.has_edge(i, j) {
            return;
        }
        for (a, b) in [(i, j), (j, i)] {
            let pos = self.neighbors[a].binary_search(&b).unwrap_err();
            self.neighbors[a].insert(pos, b);
        }
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for &v in &self.neighbors[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Joins components with minimum-distance bridging edges chosen along a minimum
    /// spanning tree of the component graph. Returns the added edges.
    pub fn connect_components(&mut self) -> Vec<(usize, usize)> {
        let comps = self.components();
        if comps.len() <= 1 {
            return Vec::new();
        }
        let mut candidates = Vec::new();
        for a in 0..comps.len() {
            for b in a + 1..comps.len() {
                let mut best: Option<(f64, usize, usize)> = None;
                for &i in &comps[a] {
                    for &j in &comps[b] {
                        let (lo, hi) = (i.min(j), i.max(j));
                        let d = self.distance(lo, hi);
                        if best.map_or(true, |(bd, bi, bj)| (d, lo, hi) < (bd, bi, bj)) {
                            best = Some((d, lo, hi));
                        }
                    }
                }
                let (d, i, j) = best.expect("components are nonempty");
                candidates.push((d, i, j, a, b));
            }
        }
        candidates.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then(x.1.cmp(&y.1))
                .then(x.2.cmp(&y.2))
        });
        let mut parent: Vec<usize> = (0..comps.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let mut added = Vec::new();
        for (_, i, j, a, b) in candidates {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
                self.add_edge(i, j);
                added.push((i, j));
            }
        }
        added.sort_unstable();
        added
    }
}

/// Directed k-NN by Euclidean distance (ties to the smaller index), symmetrized by union.
pub fn knn_graph(signatures: &[Vec<f64>], k: usize) -> Result<NeighborGraph> {
    let n = signatures.len();
    if k < 1 || k + 1 > n {
        return Err(Error::Param(format!("k = {k} must lie in 1..={}", n.saturating_sub(1))));
    }
    let distances = pairwise_distances(signatures);
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| {
            distances[i * n + a]
                .total_cmp(&distances[i * n + b])
                .then(a.cmp(&b))
        });
        for &j in &others[..k] {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
    }
    for ns in &mut neighbors {
        ns.sort_unstable();
        ns.dedup();
    }
    Ok(NeighborGraph {
        k,
        neighbors,
        distances,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &NeighborGraph, source: usize) -> Vec<f64> {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Visit {
        dist: 0.0,
        node: source,
    });
    while let Some(Visit { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        for &v in &g.neighbors[u] {
            let nd = d + g.distance(u, v);
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Visit { dist: nd, node: v });
            }
        }
    }
    dist
}

#[derive(Clone, Debug)]
pub struct Geodesics {
    /// Row-major `n x n` shortest-path lengths.
    pub distances: Vec<f64>,
    /// Edges added to make the graph connected.
    pub bridges: Vec<(usize, usize)>,
}

/// All-pairs shortest paths; a disconnected graph is first joined by
/// [`NeighborGraph::connect_components`] on a copy.
pub fn geodesics(g: &NeighborGraph) -> Geodesics {
    let mut work;
    let mut graph = g;
    let mut bridges = Vec::new();
    if g.components().len() > 1 {
        work = g.clone();
        bridges = work.connect_components();
        graph = &work;
    }
    let n = graph.n();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(graph, s)).collect();
    let mut distances = vec![0.0; n * n];
    // symmetrize exactly: take the row computed from the smaller endpoint
    for i in 0..n {
        for j in 0..n {
            distances[i * n + j] = if i <= j { rows[i][j] } else { rows[j][i] };
        }
    }
    Geodesics { distances, bridges }
}

/// Classical multidimensional scaling into two dimensions.
///
/// `B = -1/2 J D^2 J` with `J = I - 11^T/n`; coordinates are the top two eigenvectors
/// scaled by the square roots of their eigenvalues.
pub fn mds_embed(distances: &[f64], n: usize) -> Result<Vec<[f64; 2]>> {
    if distances.len() != n * n {
        return Err(Error::Param("distance matrix size mismatch".into()));
    }
    if n < 2 {
        return Err(Error::Embed(format!("{n} points cannot span two dimensions")));
    }
    let sq = DMatrix::from_fn(n, n, |i, j| {
        let d = distances[i * n + j];
        d * d
    });
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let col_means: Vec<f64> = (0..n).map(|j| sq.column(j).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - col_means[j] + grand)
    });
    let b = DMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]));
    let eig = linalg::symmetric_eigen(&b, 1e-12)?;
    let scale: f64 = eig.values.iter().map(|v| v.abs()).sum();
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    if eig.values[0] <= floor || eig.values[1] <= floor {
        return Err(Error::Embed(format!(
            "need two positive eigenvalues, top two are {:e} and {:e}",
            eig.values[0], eig.values[1]
        )));
    }
    let s0 = eig.values[0].sqrt();
    let s1 = eig.values[1].sqrt();
    Ok((0..n)
        .map(|i| [eig.vectors[(i, 0)] * s0, eig.vectors[(i, 1)] * s1])
        .collect())
}

/// Which distance drives seed selection and nearest-seed assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceSpace {
    /// Euclidean distance between 2-D Isomap coordinates.
    #[default]
    Embedded,
    /// Graph geodesic distance.
    Geodesic,
    /// Euclidean distance between raw signatures.
    Signature,
}

impl std::str::FromStr for DistanceSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" => Ok(Self::Embedded),
            "geodesic" => Ok(Self::Geodesic),
            "signature" => Ok(Self::Signature),
            _ => Err(Error::Param(format!("unknown distance space {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddedGraph {
    /// k-NN graph after connectivity repair.
    pub graph: NeighborGraph,
    pub coords: Vec<[f64; 2]>,
    pub geodesics: Vec<f64>,
    pub bridges: Vec<(usize, usize)>,
}

impl EmbeddedGraph {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn embedded_distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    pub fn distance(&self, space: DistanceSpace, i: usize, j: usize) -> f64 {
        match space {
            DistanceSpace::Embedded => self.embedded_distance(i, j),
            DistanceSpace::Geodesic => self.geodesics[i * self.n() + j],
            DistanceSpace::Signature => self.graph.distance(i, j),
        }
    }
}

pub fn build_isomap(signatures: &[Vec<f64>], k: usize) -> Result<EmbeddedGraph> {
    let mut graph = knn_graph(signatures, k)?;
    let bridges = graph.connect_components();
    let geo = geodesics(&graph);
    let coords = mds_embed(&geo.distances, graph.n())?;
    Ok(EmbeddedGraph {
        graph,
        coords,
        geodesics: geo.distances,
        bridges,
    })
}

//! Network measures on the unweighted k-NN graph: betweenness (bridges between the
//! expression clusters), eigenvector centrality (cluster cores), and repeated
//! unit-capacity max-flow/min-cut between the two seeds.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FaceId;
use crate::error::{Error, Result};

/// Undirected adjacency as sorted neighbor lists.
pub type Adjacency = [Vec<usize>];

/// Shortest-path betweenness (Brandes), unnormalized, each unordered pair counted once.
pub fn betweenness(adj: &Adjacency) -> Vec<f64> {
    let n = adj.len();
    let per_source: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut stack = Vec::with_capacity(n);
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut sigma = vec![0.0f64; n];
            let mut dist = vec![usize::MAX; n];
            sigma[s] = 1.0;
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                stack.push(v);
                for &w in &adj[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
            let mut delta = vec![0.0f64; n];
            while let Some(w) = stack.pop() {
                for &v in &preds[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            delta[s] = 0.0;
            delta
        })
        .collect();
    let mut b = vec![0.0; n];
    for delta in &per_source {
        for (acc, d) in b.iter_mut().zip(delta) {
            *acc += d;
        }
    }
    b.iter_mut().for_each(|x| *x /= 2.0);
    b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigencentrality {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// Power iteration ran on `A + I` because plain `A` oscillated.
    pub shifted: bool,
    pub converged: bool,
}

const POWER_TOLERANCE: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 10_000;

fn power_iteration(adj: &Adjacency, shift: f64) -> (Vec<f64>, usize, bool) {
    let n = adj.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for it in 1..=POWER_MAX_ITERATIONS {
        let mut y: Vec<f64> = (0..n)
            .map(|i| shift * x[i] + adj[i].iter().map(|&j| x[j]).sum::<f64>())
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (x, it, false);
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let diff = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        x = y;
        if diff < POWER_TOLERANCE {
            return (x, it, true);
        }
    }
    (x, POWER_MAX_ITERATIONS, false)
}

/// Dominant adjacency eigenvector by power iteration from the uniform vector.
///
/// Bipartite graphs make the iteration on `A` oscillate; the fallback iterates on
/// `A + I`, which has the same eigenvectors and a strictly dominant top eigenvalue.
pub fn eigencentrality(adj: &Adjacency) -> Eigencentrality {
    if adj.is_empty() {
        return Eigencentrality {
            scores: Vec::new(),
            iterations: 0,
            shifted: false,
            converged: true,
        };
    }
    let (mut x, mut iterations, mut converged) = power_iteration(adj, 0.0);
    let mut shifted = false;
    if !converged {
        (x, iterations, converged) = power_iteration(adj, 1.0);
        shifted = true;
    }
    x.iter_mut().for_each(|v| *v = v.abs());
    Eigencentrality {
        scores: x,
        iterations,
        shifted,
        converged,
    }
}

/// Indices of the `count` largest scores; ties go to the smaller index.
pub fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityReport {
    pub betweenness: Vec<f64>,
    pub eigencentrality: Vec<f64>,
    pub eigen_shifted: bool,
    pub eigen_converged: bool,
    pub top_b: Vec<FaceId>,
    pub top_ec: Vec<FaceId>,
    pub overlap: Vec<FaceId>,
}

pub fn centrality_report(adj: &Adjacency) -> CentralityReport {
    let b = betweenness(adj);
    let ec = eigencentrality(adj);
    let to_ids = |v: Vec<usize>| v.into_iter().map(FaceId::from_index).collect::<Vec<_>>();
    let top_b = to_ids(top_indices(&b, 2));
    let top_ec = to_ids(top_indices(&ec.scores, 2));
    let mut overlap: Vec<FaceId> = top_b.iter().filter(|id| top_ec.contains(id)).copied().collect();
    overlap.sort();
    CentralityReport {
        betweenness: b,
        eigencentrality: ec.scores,
        eigen_shifted: ec.shifted,
        eigen_converged: ec.converged,
        top_b,
        top_ec,
        overlap,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxFlow {
    pub value: usize,
    /// `(u, v, |net flow|)` for every edge `u < v`, lexicographic.
    pub edge_flows: Vec<(usize, usize, u8)>,
    /// Saturated edges leaving the source side of the final residual graph.
    pub cut: Vec<(usize, usize)>,
    /// Source side of the cut.
    pub source_side: Vec<usize>,
}

/// Unit-capacity undirected max flow by BFS augmenting paths.
///
/// Every undirected edge carries at most one unit in either direction; the minimum cut
/// is read off the residual reachability from `source`.
pub fn max_flow_min_cut(adj: &Adjacency, source: usize, sink: usize) -> Result<MaxFlow> {
    let n = adj.len();
    if source >= n || sink >= n || source == sink {
        return Err(Error::Param(format!(
            "source {source} and sink {sink} must be distinct nodes of a {n}-node graph"
        )));
    }
    // net flow along (u -> adj[u][slot]); antisymmetric with the reverse slot
    let mut flow: Vec<Vec<i8>> = adj.iter().map(|ns| vec![0; ns.len()]).collect();
    let reverse_slot = |u: usize, v: usize| adj[v].binary_search(&u).expect("adjacency is symmetric");
    let mut value = 0;
    loop {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            if u == sink {
                break;
            }
            for (slot, &v) in adj[u].iter().enumerate() {
                if !seen[v] && flow[u][slot] < 1 {
                    seen[v] = true;
                    parent[v] = Some((u, slot));
                    queue.push_back(v);
                }
            }
        }
        if !seen[sink] {
            let side: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
            let mut cut = Vec::new();
            let mut edge_flows = Vec::new();
            for u in 0..n {
                for (slot, &v) in adj[u].iter().enumerate() {
                    if u < v {
                        edge_flows.push((u, v, flow[u][slot].unsigned_abs()));
                    }
                    if seen[u] && !seen[v] {
                        cut.push((u.min(v), u.max(v)));
                    }
                }
            }
            cut.sort_unstable();
            return Ok(MaxFlow {
                value,
                edge_flows,
                cut,
                source_side: side,
            });
        }
        let mut v = sink;
        while let Some((u, slot)) = parent[v] {
            flow[u][slot] += 1;
            flow[v][reverse_slot(u, v)] -= 1;
            v = u;
        }
        value += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRound {
    pub max_flow_value: usize,
    pub cut_edges: Vec<(FaceId, FaceId)>,
    /// Edge carrying the most flow; ties go to the lexicographically smallest edge.
    pub max_flow_edge: (FaceId, FaceId),
    /// Flow on `max_flow_edge` over the total flow leaving the source.
    pub flow_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCutResult {
    pub source: FaceId,
    pub sink: FaceId,
    pub rounds: Vec<FlowRound>,
    /// Max flow between the seeds once the recorded rounds' cuts are removed.
    pub residual_flow: usize,
}

/// Runs max-flow/min-cut between `source` and `sink`, records the busiest edge, removes
/// the cut edges, and repeats until the flow is zero or `rounds` rounds have run.
pub fn repetitive_flow_analysis(
    adj: &Adjacency,
    source: FaceId,
    sink: FaceId,
    rounds: usize,
) -> Result<FlowCutResult> {
    if rounds == 0 {
        return Err(Error::Param("rounds must be at least 1".into()));
    }
    let mut graph: Vec<Vec<usize>> = adj.to_vec();
    let (s, t) = (source.index(), sink.index());
    let mut records = Vec::new();
    let mut residual = 0;
    for round in 0..=rounds {
        let mf = max_flow_min_cut(&graph, s, t)?;
        if mf.value == 0 || round == rounds {
            residual = mf.value;
            break;
        }
        let (u, v, f) = mf
            .edge_flows
            .iter()
            .copied()
            .fold(None::<(usize, usize, u8)>, |best, e| match best {
                Some(b) if b.2 >= e.2 => Some(b),
                _ => Some(e),
            })
            .expect("positive flow uses at least one edge");
        records.push(FlowRound {
            max_flow_value: mf.value,
            cut_edges: mf
                .cut
                .iter()
                .map(|&(a, b)| (FaceId::from_index(a), FaceId::from_index(b)))
                .collect(),
            max_flow_edge: (FaceId::from_index(u), FaceId::from_index(v)),
            flow_fraction: f64::from(f) / mf.value as f64,
        });
        for &(a, b) in &mf.cut {
            graph[a].retain(|&x| x != b);
            graph[b].retain(|&x| x != a);
        }
    }
    Ok(FlowCutResult {
        source,
        sink,
        rounds: records,
        residual_flow: residual,
    })
}

/// Faces named by the top-2 betweenness list, the top-2 eigencentrality list, and the
/// max-flow edge endpoints, ranked by how many lists name them and then by betweenness.
pub fn significant_faces(
    cent: &CentralityReport,
    flow: &FlowCutResult,
    m: usize,
) -> Result<Vec<FaceId>> {
    if m == 0 {
        return Err(Error::Param("m must be positive".into()));
    }
    let flow_ends: Vec<FaceId> = flow
        .rounds
        .iter()
        .flat_map(|r| [r.max_flow_edge.0, r.max_flow_edge.1])
        .collect();
    let lists = [&cent.top_b, &cent.top_ec, &flow_ends];
    let b_rank = top_indices(&cent.betweenness, cent.betweenness.len());
    let rank_of = |id: FaceId| b_rank.iter().position(|&i| i == id.index()).unwrap_or(usize::MAX);

    let mut candidates: Vec<FaceId> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    candidates.sort();
    candidates.dedup();
    let hits = |id: FaceId| lists.iter().filter(|l| l.contains(&id)).count();
    candidates.sort_by(|&a, &b| hits(b).cmp(&hits(a)).then(rank_of(a).cmp(&rank_of(b))));
    candidates.truncate(m);
    Ok(candidates)
}

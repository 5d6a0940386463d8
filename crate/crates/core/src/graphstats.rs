//! Baseline structural features of cascade graphs.
//!
//! Path and connectivity metrics are computed on the undirected simple view
//! of the cascade. The spanning-tree count uses the matrix-tree theorem: a
//! reduced-Laplacian determinant on small graphs, a Laplacian eigenvalue
//! product in log space on large ones.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cascade::CascadeGraph;
use crate::error::{Error, Result};

/// Undirected simple graph over `0..n`.
#[derive(Debug, Clone, Default)]
pub struct SimpleGraph {
    adj: Vec<BTreeSet<usize>>,
}

impl SimpleGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        self.adj[a].insert(b);
        self.adj[b].insert(a);
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    /// Undirected simple projection of a cascade; node 0 is the root.
    pub fn from_cascade(c: &CascadeGraph) -> Self {
        let index: std::collections::HashMap<&str, usize> = c
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let mut g = Self::new(c.node_count());
        for e in c.edges() {
            g.add_edge(index[e.src.as_str()], index[e.dst.as_str()]);
        }
        g
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for w in self.neighbors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Unweighted all-pairs diameter and average shortest path length
/// (sum over ordered pairs divided by `n(n-1)`).
pub fn diameter_apl(g: &SimpleGraph) -> Result<(usize, f64)> {
    let n = g.node_count();
    if n <= 1 {
        return Ok((0, 0.0));
    }
    let mut diameter = 0usize;
    let mut total = 0u64;
    for src in 0..n {
        for d in g.bfs_distances(src).into_iter() {
            match d {
                Some(d) => {
                    diameter = diameter.max(d);
                    total += d as u64;
                }
                None => return Err(Error::DisconnectedGraph),
            }
        }
    }
    let apl = total as f64 / (n as f64 * (n as f64 - 1.0));
    Ok((diameter, apl))
}

/// Mean of per-node clustering coefficients `2 * triangles / (d (d-1))`,
/// with 0 for degree < 2.
pub fn avg_clustering(g: &SimpleGraph) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for v in 0..n {
        let d = g.degree(v);
        if d < 2 {
            continue;
        }
        let neigh: Vec<usize> = g.neighbors(v).collect();
        let mut triangles = 0usize;
        for (i, &a) in neigh.iter().enumerate() {
            for &b in &neigh[i + 1..] {
                if g.has_edge(a, b) {
                    triangles += 1;
                }
            }
        }
        sum += 2.0 * triangles as f64 / (d as f64 * (d as f64 - 1.0));
    }
    sum / n as f64
}

/// Exact maximum clique size via Bron-Kerbosch with pivoting.
pub fn clique_number(g: &SimpleGraph) -> usize {
    let n = g.node_count();
    if n == 0 {
        return 0;
    }
    let mut best = 1usize;
    let p: BTreeSet<usize> = (0..n).collect();
    bron_kerbosch(g, 0, p, BTreeSet::new(), &mut best);
    best
}

fn bron_kerbosch(
    g: &SimpleGraph,
    r_len: usize,
    mut p: BTreeSet<usize>,
    mut x: BTreeSet<usize>,
    best: &mut usize,
) {
    if p.is_empty() && x.is_empty() {
        *best = (*best).max(r_len);
        return;
    }
    if r_len + p.len() <= *best {
        return; // cannot beat the incumbent
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .copied()
        .max_by_key(|&u| g.adj[u].intersection(&p).count())
        .unwrap();
    let candidates: Vec<usize> = p.difference(&g.adj[pivot]).copied().collect();
    for v in candidates {
        let p_next: BTreeSet<usize> = p.intersection(&g.adj[v]).copied().collect();
        let x_next: BTreeSet<usize> = x.intersection(&g.adj[v]).copied().collect();
        bron_kerbosch(g, r_len + 1, p_next, x_next, best);
        p.remove(&v);
        x.insert(v);
    }
}

/// Matrix-tree count `t(G)`, as a log value plus the rounded count when it
/// fits integer precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanningTreeCount {
    pub log: f64,
    pub exact: Option<u64>,
}

const DETERMINANT_NODE_LIMIT: usize = 64;

pub fn count_spanning_trees(g: &SimpleGraph) -> Result<SpanningTreeCount> {
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let n = g.node_count();
    if n <= 1 {
        return Ok(SpanningTreeCount { log: 0.0, exact: Some(1) });
    }
    if n <= DETERMINANT_NODE_LIMIT {
        // Determinant of the Laplacian with the last row/column removed.
        let mut reduced = DMatrix::<f64>::zeros(n - 1, n - 1);
        for v in 0..n - 1 {
            reduced[(v, v)] = g.degree(v) as f64;
            for w in g.neighbors(v) {
                if w < n - 1 {
                    reduced[(v, w)] = -1.0;
                }
            }
        }
        let det = reduced.lu().determinant();
        if det.is_finite() && det < 2f64.powi(53) {
            let rounded = det.round().max(1.0);
            return Ok(SpanningTreeCount {
                log: rounded.ln(),
                exact: Some(rounded as u64),
            });
        }
        return Ok(SpanningTreeCount { log: det.ln(), exact: None });
    }
    // Product of nonzero Laplacian eigenvalues over n, in log space.
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        lap[(v, v)] = g.degree(v) as f64;
        for w in g.neighbors(v) {
            lap[(v, w)] = -1.0;
        }
    }
    let mut eigvals: Vec<f64> = lap.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigvals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Connected graph: exactly one zero eigenvalue, dropped here.
    let log: f64 = eigvals[1..].iter().map(|&l| l.max(f64::MIN_POSITIVE).ln()).sum::<f64>()
        - (n as f64).ln();
    Ok(SpanningTreeCount { log, exact: None })
}

/// The eight classical cascade-graph features used by the baseline
/// prediction arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFeatures {
    /// Edges per time unit over the observed span; 0 when the span is 0.
    pub edge_growth_rate: f64,
    pub node_count: usize,
    pub root_degree: usize,
    pub avg_path_length: f64,
    pub diameter: usize,
    /// `ln t(G)` from the matrix-tree theorem.
    pub log_spanning_trees: f64,
    pub avg_clustering: f64,
    pub clique_number: usize,
}

impl BaselineFeatures {
    pub const ARITY: usize = 8;

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.edge_growth_rate,
            self.node_count as f64,
            self.root_degree as f64,
            self.avg_path_length,
            self.diameter as f64,
            self.log_spanning_trees,
            self.avg_clustering,
            self.clique_number as f64,
        ]
    }

    pub fn names() -> [&'static str; Self::ARITY] {
        [
            "edge_growth_rate",
            "node_count",
            "root_degree",
            "avg_path_length",
            "diameter",
            "log_spanning_trees",
            "avg_clustering",
            "clique_number",
        ]
    }
}

pub fn baseline_features(c: &CascadeGraph) -> Result<BaselineFeatures> {
    let g = SimpleGraph::from_cascade(c);
    let span = c.time_span();
    let edge_growth_rate = if span > 0 {
        c.edge_count() as f64 / span as f64
    } else {
        0.0
    };
    let (diameter, apl) = diameter_apl(&g)?;
    let st = count_spanning_trees(&g)?;
    Ok(BaselineFeatures {
        edge_growth_rate,
        node_count: c.node_count(),
        root_degree: g.degree(0),
        avg_path_length: apl,
        diameter,
        log_spanning_trees: st.log,
        avg_clustering: avg_clustering(&g),
        clique_number: clique_number(&g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::toy_cascade;
    use approx::assert_abs_diff_eq;

    fn complete(n: usize) -> SimpleGraph {
        let mut g = SimpleGraph::new(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    #[test]
    fn spanning_trees_known_values() {
        assert_eq!(count_spanning_trees(&complete(3)).unwrap().exact, Some(3));
        assert_eq!(count_spanning_trees(&complete(4)).unwrap().exact, Some(16));
        // Cayley: t(K_n) = n^(n-2)
        assert_eq!(count_spanning_trees(&complete(6)).unwrap().exact, Some(1296));
        let mut path = SimpleGraph::new(4);
        path.add_edge(0, 1);
        path.add_edge(1, 2);
        path.add_edge(2, 3);
        assert_eq!(count_spanning_trees(&path).unwrap().exact, Some(1));
    }

    #[test]
    fn spanning_trees_eigen_path_matches_determinant() {
        // Ring of 80 nodes: t(C_n) = n, checked through the eigenvalue route.
        let n = 80;
        let mut ring = SimpleGraph::new(n);
        for v in 0..n {
            ring.add_edge(v, (v + 1) % n);
        }
        let st = count_spanning_trees(&ring).unwrap();
        assert!(st.exact.is_none());
        assert_abs_diff_eq!(st.log, (n as f64).ln(), epsilon = 1e-6);
    }

    #[test]
    fn disconnected_errors() {
        let mut g = SimpleGraph::new(3);
        g.add_edge(0, 1);
        assert!(matches!(count_spanning_trees(&g), Err(Error::DisconnectedGraph)));
        assert!(matches!(diameter_apl(&g), Err(Error::DisconnectedGraph)));
    }

    #[test]
    fn diameter_apl_small() {
        let mut single = SimpleGraph::new(2);
        single.add_edge(0, 1);
        assert_eq!(diameter_apl(&single).unwrap(), (1, 1.0));
        let mut path3 = SimpleGraph::new(3);
        path3.add_edge(0, 1);
        path3.add_edge(1, 2);
        let (d, apl) = diameter_apl(&path3).unwrap();
        assert_eq!(d, 2);
        assert_abs_diff_eq!(apl, 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn clustering_and_cliques() {
        assert_abs_diff_eq!(avg_clustering(&complete(3)), 1.0, epsilon = 1e-12);
        let mut star = SimpleGraph::new(4);
        for leaf in 1..4 {
            star.add_edge(0, leaf);
        }
        assert_abs_diff_eq!(avg_clustering(&star), 0.0, epsilon = 1e-12);
        assert_eq!(clique_number(&star), 2);
        assert_eq!(clique_number(&complete(3)), 3);
        assert_eq!(clique_number(&SimpleGraph::new(1)), 1);
    }

    #[test]
    fn toy_cascade_metrics() {
        let g = SimpleGraph::from_cascade(&toy_cascade());
        let (d, apl) = diameter_apl(&g).unwrap();
        assert_eq!(d, 3);
        assert_abs_diff_eq!(apl, 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(avg_clustering(&g), 1.0 / 3.0, epsilon = 1e-12);
        assert_eq!(clique_number(&g), 3);
        // One triangle (A, B, D) hanging off a tree: dropping any triangle
        // edge leaves a spanning tree.
        assert_eq!(count_spanning_trees(&g).unwrap().exact, Some(3));
    }

    #[test]
    fn baseline_features_single_edge() {
        let c = toy_cascade().truncate(1);
        let f = baseline_features(&c).unwrap();
        assert_eq!(f.node_count, 2);
        assert_eq!(f.root_degree, 1);
        assert_eq!(f.diameter, 1);
        assert_abs_diff_eq!(f.avg_path_length, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.log_spanning_trees, 0.0, epsilon = 1e-12);
        assert_eq!(f.avg_clustering, 0.0);
        assert_eq!(f.clique_number, 2);
        assert_eq!(f.edge_growth_rate, 0.0); // single edge has zero span
    }

    #[test]
    fn baseline_features_toy() {
        let f = baseline_features(&toy_cascade()).unwrap();
        // 5 edges between t=2 and t=5.
        assert_abs_diff_eq!(f.edge_growth_rate, 5.0 / 3.0, epsilon = 1e-12);
        assert_eq!(f.node_count, 5);
        assert_eq!(f.root_degree, 2);
        assert_eq!(f.diameter, 3);
        assert_eq!(f.clique_number, 3);
        assert_eq!(f.to_vec().len(), BaselineFeatures::ARITY);
    }
}

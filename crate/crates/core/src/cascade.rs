//! Follower graphs, action logs, and cascade graph construction.
//!
//! A cascade graph is rebuilt from a timestamped action log against a static
//! follower graph: the earliest actor is the root, and every later actor `v`
//! receives an influence edge from each strictly-earlier actor `u` that `v`
//! follows. Actors with no observable influencer attach to the root, since a
//! repost always carries the origin of the item.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed relationship graph; an edge `u -> v` means `v` follows `u`, so
/// content propagates from `u` to `v`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FollowerGraph {
    nodes: BTreeSet<String>,
    out: BTreeMap<String, BTreeSet<String>>,
    edge_count: usize,
}

impl FollowerGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, user: &str) {
        self.nodes.insert(user.to_owned());
    }

    /// Adds `src -> dst`. Self-loops and duplicates are ignored.
    pub fn add_edge(&mut self, src: &str, dst: &str) {
        if src == dst {
            return;
        }
        self.nodes.insert(src.to_owned());
        self.nodes.insert(dst.to_owned());
        if self
            .out
            .entry(src.to_owned())
            .or_default()
            .insert(dst.to_owned())
        {
            self.edge_count += 1;
        }
    }

    pub fn contains_edge(&self, src: &str, dst: &str) -> bool {
        self.out.get(src).is_some_and(|s| s.contains(dst))
    }

    /// Users that follow `user` (propagation targets).
    pub fn followers(&self, user: &str) -> impl Iterator<Item = &str> {
        self.out
            .get(user)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn out_degree(&self, user: &str) -> usize {
        self.out.get(user).map_or(0, |s| s.len())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.out
            .iter()
            .flat_map(|(u, vs)| vs.iter().map(move |v| (u.as_str(), v.as_str())))
    }

    /// Parses the one-edge-per-line `src<TAB>dst` format. `#` starts a comment.
    pub fn from_tsv(reader: impl BufRead) -> Result<Self> {
        let mut g = Self::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next()) {
                (Some(src), Some(dst)) if !src.is_empty() && !dst.is_empty() => {
                    if src == dst {
                        return Err(Error::Data(format!(
                            "self-loop at line {}: {src}",
                            lineno + 1
                        )));
                    }
                    g.add_edge(src.trim(), dst.trim());
                }
                _ => {
                    return Err(Error::Data(format!(
                        "malformed follower edge at line {}",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(g)
    }

    pub fn to_tsv(&self, mut w: impl std::io::Write) -> Result<()> {
        for (src, dst) in self.edges() {
            writeln!(w, "{src}\t{dst}")?;
        }
        Ok(())
    }
}

/// One user performing the cascaded action at an opaque integer timestamp.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEvent {
    pub cascade_id: String,
    pub user: String,
    pub ts: i64,
}

/// Parses a JSON-lines action log, grouping events by cascade id.
pub fn parse_actions_jsonl(reader: impl BufRead) -> Result<BTreeMap<String, Vec<ActionEvent>>> {
    let mut by_cascade: BTreeMap<String, Vec<ActionEvent>> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: ActionEvent = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("bad action at line {}: {e}", lineno + 1)))?;
        by_cascade.entry(ev.cascade_id.clone()).or_default().push(ev);
    }
    Ok(by_cascade)
}

pub fn write_actions_jsonl(
    events: &[ActionEvent],
    mut w: impl std::io::Write,
) -> Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        writeln!(w)?;
    }
    Ok(())
}

/// A directed propagation edge, timestamped at the destination's action time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CascadeEdge {
    pub ts: i64,
    pub src: String,
    pub dst: String,
}

/// Timestamped acyclic propagation graph with a designated root.
///
/// Edges are kept sorted by `(timestamp, src, dst)`; every non-root node is
/// reachable from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeGraph {
    root: String,
    nodes: Vec<String>,
    edges: Vec<CascadeEdge>,
}

impl CascadeGraph {
    /// Assembles a cascade from parts, re-sorting edges. Used by decoders and
    /// generators that already guarantee the structural invariants.
    pub(crate) fn from_parts(root: String, nodes: Vec<String>, mut edges: Vec<CascadeEdge>) -> Self {
        edges.sort();
        Self { root, nodes, edges }
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges in `(timestamp, src, dst)` order.
    pub fn edges(&self) -> &[CascadeEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Observed time span between the first and last edge; 0 for < 2 edges.
    pub fn time_span(&self) -> i64 {
        match (self.edges.first(), self.edges.last()) {
            (Some(a), Some(b)) => b.ts - a.ts,
            _ => 0,
        }
    }

    /// Outgoing edges of `node` in `(timestamp, dst)` order.
    pub fn out_edges(&self, node: &str) -> Vec<&CascadeEdge> {
        let mut out: Vec<&CascadeEdge> = self.edges.iter().filter(|e| e.src == node).collect();
        out.sort_by(|a, b| (a.ts, &a.dst).cmp(&(b.ts, &b.dst)));
        out
    }

    /// Returns the subgraph induced by the first `min(tau1, |edges|)` edges
    /// plus their endpoints; the root is always kept.
    pub fn truncate(&self, tau1: usize) -> CascadeGraph {
        let keep = tau1.min(self.edges.len());
        let edges: Vec<CascadeEdge> = self.edges[..keep].to_vec();
        let mut endpoint: BTreeSet<&str> = BTreeSet::new();
        for e in &edges {
            endpoint.insert(&e.src);
            endpoint.insert(&e.dst);
        }
        let nodes: Vec<String> = self
            .nodes
            .iter()
            .filter(|n| n.as_str() == self.root || endpoint.contains(n.as_str()))
            .cloned()
            .collect();
        CascadeGraph {
            root: self.root.clone(),
            nodes,
            edges,
        }
    }
}

/// Reconstructs the cascade graph for one cascade's events against a follower
/// graph.
///
/// The earliest actor is the root. Each later actor `v` at time `t` gets an
/// edge from every strictly-earlier actor `u` with `u -> v` in the follower
/// graph; when no such actor exists, `v` attaches to the root at time `t`.
/// Timestamp ties are ordered by user id for determinism.
pub fn build_cascade(fg: &FollowerGraph, events: &[ActionEvent]) -> Result<CascadeGraph> {
    if events.is_empty() {
        return Err(Error::EmptyCascade);
    }
    let mut sorted: Vec<&ActionEvent> = events.iter().collect();
    sorted.sort_by(|a, b| (a.ts, &a.user).cmp(&(b.ts, &b.user)));
    let mut seen: HashMap<&str, i64> = HashMap::new();
    for ev in &sorted {
        if seen.insert(&ev.user, ev.ts).is_some() {
            return Err(Error::DuplicateActor(ev.user.clone()));
        }
    }

    let root = sorted[0].user.clone();
    let nodes: Vec<String> = sorted.iter().map(|e| e.user.clone()).collect();
    let mut edges: Vec<CascadeEdge> = Vec::new();
    for (i, ev) in sorted.iter().enumerate().skip(1) {
        let mut influenced = false;
        for earlier in &sorted[..i] {
            if earlier.ts < ev.ts && fg.contains_edge(&earlier.user, &ev.user) {
                edges.push(CascadeEdge {
                    ts: ev.ts,
                    src: earlier.user.clone(),
                    dst: ev.user.clone(),
                });
                influenced = true;
            }
        }
        if !influenced {
            edges.push(CascadeEdge {
                ts: ev.ts,
                src: root.clone(),
                dst: ev.user.clone(),
            });
        }
    }
    Ok(CascadeGraph::from_parts(root, nodes, edges))
}

//! Planar road network used as the source of candidate sites and, optionally,
//! as the metric for network distances.

use std::collections::{HashMap, HashSet};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    /// Forces the node to count as a junction regardless of its degree
    /// (dead ends, corners of a study area, ...).
    #[serde(default)]
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub id: u64,
    pub endpoints: [u64; 2],
    /// Intermediate shape vertices running from `endpoints[0]` to
    /// `endpoints[1]`. Empty for a straight segment.
    #[serde(default)]
    pub polyline: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<RoadNode>,
    pub edges: Vec<RoadEdge>,
}

impl RoadNetwork {
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::Validation(format!("duplicate road node id {}", n.id)));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::Validation(format!("road node {} has non-finite coordinates", n.id)));
            }
        }
        let mut edge_ids = HashSet::new();
        for e in &self.edges {
            if !edge_ids.insert(e.id) {
                return Err(Error::Validation(format!("duplicate road edge id {}", e.id)));
            }
            for end in e.endpoints {
                if !ids.contains(&end) {
                    return Err(Error::Validation(format!(
                        "road edge {} references unknown node {end}",
                        e.id
                    )));
                }
            }
            if e.polyline.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                return Err(Error::Validation(format!("road edge {} has non-finite geometry", e.id)));
            }
        }
        Ok(())
    }

    fn node_lookup(&self) -> HashMap<u64, &RoadNode> {
        self.nodes.iter().map(|n| (n.id, n)).collect()
    }

    pub fn degrees(&self) -> HashMap<u64, usize> {
        let mut deg: HashMap<u64, usize> = self.nodes.iter().map(|n| (n.id, 0)).collect();
        for e in &self.edges {
            for end in e.endpoints {
                *deg.entry(end).or_default() += 1;
            }
        }
        deg
    }

    /// Nodes of degree at least three, plus nodes flagged terminal, in id order.
    pub fn junctions(&self) -> Vec<&RoadNode> {
        let deg = self.degrees();
        let mut out: Vec<&RoadNode> = self
            .nodes
            .iter()
            .filter(|n| n.terminal || deg.get(&n.id).copied().unwrap_or(0) >= 3)
            .collect();
        out.sort_by_key(|n| n.id);
        out
    }

    /// Full vertex list of an edge, oriented from its lower-id endpoint.
    pub fn oriented_geometry(&self, edge: &RoadEdge) -> Result<Vec<(f64, f64)>> {
        let lookup = self.node_lookup();
        let node = |id: u64| {
            lookup
                .get(&id)
                .map(|n| (n.x, n.y))
                .ok_or_else(|| Error::Validation(format!("unknown road node {id}")))
        };
        let mut pts = Vec::with_capacity(edge.polyline.len() + 2);
        pts.push(node(edge.endpoints[0])?);
        pts.extend(edge.polyline.iter().map(|p| (p[0], p[1])));
        pts.push(node(edge.endpoints[1])?);
        if edge.endpoints[1] < edge.endpoints[0] {
            pts.reverse();
        }
        Ok(pts)
    }

    pub fn edge_length(&self, edge: &RoadEdge) -> Result<f64> {
        Ok(polyline_length(&self.oriented_geometry(edge)?))
    }

    /// Undirected graph weighted by edge arc length, with the node-id to
    /// graph-index map.
    pub(crate) fn graph(&self) -> Result<(UnGraph<u64, f64>, HashMap<u64, NodeIndex>)> {
        let mut g = UnGraph::new_undirected();
        let mut index = HashMap::new();
        for n in &self.nodes {
            index.insert(n.id, g.add_node(n.id));
        }
        for e in &self.edges {
            let len = self.edge_length(e)?;
            g.add_edge(index[&e.endpoints[0]], index[&e.endpoints[1]], len);
        }
        Ok((g, index))
    }

    /// Shortest-path lengths from `source` to every reachable node.
    pub(crate) fn shortest_paths(
        graph: &UnGraph<u64, f64>,
        source: NodeIndex,
    ) -> HashMap<NodeIndex, f64> {
        dijkstra(graph, source, None, |e| *e.weight()).into_iter().collect()
    }

    /// Nearest node (by straight-line distance) to a planar point. Ties go
    /// to the smaller node id.
    pub fn nearest_node(&self, x: f64, y: f64) -> Option<(&RoadNode, f64)> {
        self.nodes
            .iter()
            .map(|n| (n, (n.x - x).hypot(n.y - y)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)))
    }
}

pub fn polyline_length(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum()
}

/// Point at arc length `s` along a polyline (clamped to its ends).
pub fn point_at_arc_length(pts: &[(f64, f64)], s: f64) -> (f64, f64) {
    let mut remaining = s.max(0.0);
    for w in pts.windows(2) {
        let seg = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        if remaining <= seg && seg > 0.0 {
            let t = remaining / seg;
            return (w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1));
        }
        remaining -= seg;
    }
    *pts.last().expect("polyline has at least one vertex")
}

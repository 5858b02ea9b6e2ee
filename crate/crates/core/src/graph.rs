//! Detection graphs, lifted multicut instances and their labelings.
//!
//! Nodes are dense ids `0..n`, one per detection in input order. Regular
//! edges (`E`) carry connectivity, lifted edges (`F`) only carry cost: two
//! nodes joined by a lifted edge are in the same cluster exactly when some
//! path of joined regular edges connects them.

use std::collections::{BTreeMap, HashSet};

use petgraph::unionfind::UnionFind;

use crate::detection::Detection;
use crate::error::{Error, Result};

/// Undirected edge with `u < v` and a real cost. Positive cost rewards joining.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, cost: f64) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Edge { u, v, cost }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Regular,
    Lifted,
}

/// Graph `G = (V, E)` plus lifted edges `F` with costs on `E ∪ F`.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticutInstance {
    num_nodes: usize,
    edges: Vec<Edge>,
    lifted: Vec<Edge>,
}

impl MulticutInstance {
    /// Validates node ranges, self-loops, duplicates within and across `E`
    /// and `F`, and cost finiteness. Endpoints are canonicalized to `u < v`.
    pub fn new(num_nodes: usize, edges: Vec<Edge>, lifted: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edges.len() + lifted.len());
        let canon = |e: Edge| Edge::new(e.u, e.v, e.cost);
        let edges: Vec<Edge> = edges.into_iter().map(canon).collect();
        let lifted: Vec<Edge> = lifted.into_iter().map(canon).collect();
        for (kind, e) in edges
            .iter()
            .map(|e| ("regular", e))
            .chain(lifted.iter().map(|e| ("lifted", e)))
        {
            if e.u == e.v {
                return Err(Error::InvalidInstance(format!(
                    "{kind} edge is a self-loop on node {}",
                    e.u
                )));
            }
            if e.v >= num_nodes {
                return Err(Error::InvalidInstance(format!(
                    "{kind} edge ({}, {}) out of range for {num_nodes} nodes",
                    e.u, e.v
                )));
            }
            if !e.cost.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "{kind} edge ({}, {}) has non-finite cost",
                    e.u, e.v
                )));
            }
            if !seen.insert(e.pair()) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate pair ({}, {})",
                    e.u, e.v
                )));
            }
        }
        Ok(MulticutInstance {
            num_nodes,
            edges,
            lifted,
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        MulticutInstance {
            num_nodes,
            edges: Vec::new(),
            lifted: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn lifted_edges(&self) -> &[Edge] {
        &self.lifted
    }

    /// All edges of `E ∪ F` tagged with their kind and index within that kind.
    pub fn all_edges(&self) -> impl Iterator<Item = (EdgeKind, usize, &Edge)> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| (EdgeKind::Regular, i, e))
            .chain(
                self.lifted
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (EdgeKind::Lifted, i, e)),
            )
    }

    /// Returns a copy with new costs, keeping the edge sets.
    pub fn with_costs(&self, regular: &[f64], lifted: &[f64]) -> Result<Self> {
        if regular.len() != self.edges.len() || lifted.len() != self.lifted.len() {
            return Err(Error::InvalidInstance(format!(
                "cost vectors have lengths {}/{}, instance has {}/{} edges",
                regular.len(),
                lifted.len(),
                self.edges.len(),
                self.lifted.len()
            )));
        }
        if let Some(c) = regular.iter().chain(lifted).find(|c| !c.is_finite()) {
            return Err(Error::InvalidInstance(format!("non-finite cost {c}")));
        }
        let set = |es: &[Edge], cs: &[f64]| {
            es.iter()
                .zip(cs)
                .map(|(e, &c)| Edge { cost: c, ..*e })
                .collect()
        };
        Ok(MulticutInstance {
            num_nodes: self.num_nodes,
            edges: set(&self.edges, regular),
            lifted: set(&self.lifted, lifted),
        })
    }

    /// Same instance with the lifted edge set removed.
    pub fn without_lifted(&self) -> Self {
        MulticutInstance {
            num_nodes: self.num_nodes,
            edges: self.edges.clone(),
            lifted: Vec::new(),
        }
    }

    /// Regular-edge adjacency lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        adj
    }
}

/// Cut labels for every edge of an instance, aligned with its edge order.
/// `true` means cut (`y_e = 1`), `false` means join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLabeling {
    pub regular: Vec<bool>,
    pub lifted: Vec<bool>,
}

impl EdgeLabeling {
    pub fn uniform(instance: &MulticutInstance, cut: bool) -> Self {
        EdgeLabeling {
            regular: vec![cut; instance.edges().len()],
            lifted: vec![cut; instance.lifted_edges().len()],
        }
    }

    pub fn label(&self, kind: EdgeKind, index: usize) -> bool {
        match kind {
            EdgeKind::Regular => self.regular[index],
            EdgeKind::Lifted => self.lifted[index],
        }
    }

    /// Label of the pair `(a, b)` if it is an edge of `instance`.
    pub fn get(&self, instance: &MulticutInstance, a: usize, b: usize) -> Option<bool> {
        let key = if a < b { (a, b) } else { (b, a) };
        instance
            .all_edges()
            .find(|(_, _, e)| e.pair() == key)
            .map(|(kind, i, _)| self.label(kind, i))
    }

    pub fn matches(&self, instance: &MulticutInstance) -> bool {
        self.regular.len() == instance.edges().len() && self.lifted.len() == instance.lifted_edges().len()
    }
}

/// Node partition with contiguous component ids numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    component_of: Vec<usize>,
}

impl Partition {
    /// Canonicalizes arbitrary labels: the first node gets component 0, the
    /// next unseen label gets 1, and so on.
    pub fn from_labels<L: Ord + Copy>(labels: &[L]) -> Self {
        let mut map = BTreeMap::new();
        let component_of = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { component_of }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            component_of: (0..n).collect(),
        }
    }

    pub fn single_block(n: usize) -> Self {
        Partition {
            component_of: vec![0; n],
        }
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component_of[node]
    }

    pub fn labels(&self) -> &[usize] {
        &self.component_of
    }

    pub fn len(&self) -> usize {
        self.component_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.component_of.is_empty()
    }

    pub fn num_components(&self) -> usize {
        self.component_of.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of each component, each list sorted ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_components()];
        for (node, &c) in self.component_of.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        self.component_of[a] == self.component_of[b]
    }
}

/// Connected components of the join subgraph of `G`. Lifted labels are ignored.
pub fn labeling_to_partition(instance: &MulticutInstance, labeling: &EdgeLabeling) -> Partition {
    let mut uf = UnionFind::<usize>::new(instance.num_nodes());
    for (e, &cut) in instance.edges().iter().zip(&labeling.regular) {
        if !cut {
            uf.union(e.u, e.v);
        }
    }
    Partition::from_labels(&uf.into_labeling())
}

/// Builds the detection graph with zero costs.
///
/// Regular edges connect every pair whose frame distance lies in
/// `0..=max_frame_gap` (same-frame pairs included); lifted edges connect
/// every pair whose frame distance equals one of `lifted_gaps`.
pub fn build_graph(
    detections: &[Detection],
    max_frame_gap: u32,
    lifted_gaps: &[u32],
) -> Result<MulticutInstance> {
    if max_frame_gap < 1 {
        return Err(Error::InvalidGraphParams("max_frame_gap must be >= 1".into()));
    }
    if let Some(g) = lifted_gaps.iter().find(|&&g| g <= max_frame_gap) {
        return Err(Error::InvalidGraphParams(format!(
            "lifted gap {g} must exceed max_frame_gap {max_frame_gap}"
        )));
    }
    let mut lifted_set: Vec<u32> = lifted_gaps.to_vec();
    lifted_set.sort_unstable();
    lifted_set.dedup();

    let mut by_frame: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, d) in detections.iter().enumerate() {
        by_frame.entry(d.frame).or_default().push(i);
    }

    let mut edges = Vec::new();
    let mut lifted = Vec::new();
    for (&fa, nodes_a) in &by_frame {
        for (i, &a) in nodes_a.iter().enumerate() {
            for &b in &nodes_a[i + 1..] {
                edges.push(Edge::new(a, b, 0.0));
            }
        }
        for (_, nodes_b) in by_frame.range(fa + 1..=fa + max_frame_gap) {
            for &a in nodes_a {
                for &b in nodes_b {
                    edges.push(Edge::new(a, b, 0.0));
                }
            }
        }
        for &gap in &lifted_set {
            if let Some(nodes_b) = by_frame.get(&(fa + gap)) {
                for &a in nodes_a {
                    for &b in nodes_b {
                        lifted.push(Edge::new(a, b, 0.0));
                    }
                }
            }
        }
    }
    edges.sort_by_key(Edge::pair);
    lifted.sort_by_key(Edge::pair);
    MulticutInstance::new(detections.len(), edges, lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn one_per_frame(frames: u32) -> Vec<Detection> {
        (1..=frames)
            .map(|f| Detection::new(f, BBox::new(0.0, 0.0, 10.0, 10.0).unwrap(), 1.0).unwrap())
            .collect()
    }

    #[test]
    fn three_frames_gap_two() {
        let g = build_graph(&one_per_frame(3), 2, &[]).unwrap();
        let pairs: Vec<_> = g.edges().iter().map(Edge::pair).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(g.lifted_edges().is_empty());
    }

    #[test]
    fn twelve_frames_with_lifted_gap_ten() {
        let dets = one_per_frame(12);
        let g = build_graph(&dets, 1, &[10]).unwrap();
        // brute-force enumeration of all pairs by frame distance
        let mut regular = 0;
        let mut lifted = Vec::new();
        for i in 0..dets.len() {
            for j in i + 1..dets.len() {
                let d = dets[j].frame - dets[i].frame;
                if d <= 1 {
                    regular += 1;
                }
                if d == 10 {
                    lifted.push((dets[i].frame, dets[j].frame));
                }
            }
        }
        assert_eq!(regular, 11);
        assert_eq!(lifted, vec![(1, 11), (2, 12)]);
        assert_eq!(g.edges().len(), 11);
        assert_eq!(g.lifted_edges().len(), 2);
        let lp: Vec<_> = g.lifted_edges().iter().map(Edge::pair).collect();
        assert_eq!(lp, vec![(0, 10), (1, 11)]);
    }

    #[test]
    fn empty_detections() {
        let g = build_graph(&[], 3, &[10, 20]).unwrap();
        assert_eq!(g.num_nodes(), 0);
        assert!(g.edges().is_empty());
        assert!(g.lifted_edges().is_empty());
    }

    #[test]
    fn same_frame_pairs_are_regular_edges() {
        let mut dets = one_per_frame(1);
        dets.push(dets[0].clone());
        let g = build_graph(&dets, 1, &[]).unwrap();
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn rejects_lifted_gap_within_regular_range() {
        assert!(build_graph(&one_per_frame(4), 3, &[3]).is_err());
        assert!(build_graph(&one_per_frame(4), 3, &[2, 10]).is_err());
        assert!(build_graph(&one_per_frame(4), 0, &[]).is_err());
    }

    #[test]
    fn instance_rejects_bad_edges() {
        assert!(MulticutInstance::new(2, vec![Edge::new(0, 0, 1.0)], vec![]).is_err());
        assert!(MulticutInstance::new(2, vec![Edge::new(0, 2, 1.0)], vec![]).is_err());
        assert!(MulticutInstance::new(2, vec![Edge::new(0, 1, f64::NAN)], vec![]).is_err());
        assert!(
            MulticutInstance::new(3, vec![Edge::new(0, 1, 1.0)], vec![Edge::new(1, 0, 2.0)]).is_err()
        );
        assert!(
            MulticutInstance::new(3, vec![Edge::new(0, 1, 1.0), Edge::new(1, 0, 2.0)], vec![]).is_err()
        );
    }

    fn path3() -> MulticutInstance {
        MulticutInstance::new(3, vec![Edge::new(0, 1, 0.0), Edge::new(1, 2, 0.0)], vec![]).unwrap()
    }

    #[test]
    fn partition_of_all_join_and_all_cut() {
        let g = path3();
        let all_join = labeling_to_partition(&g, &EdgeLabeling::uniform(&g, false));
        assert_eq!(all_join.num_components(), 1);
        let all_cut = labeling_to_partition(&g, &EdgeLabeling::uniform(&g, true));
        assert_eq!(all_cut, Partition::singletons(3));
    }

    #[test]
    fn partition_of_path_with_one_cut() {
        let g = path3();
        let lab = EdgeLabeling {
            regular: vec![false, true],
            lifted: vec![],
        };
        let p = labeling_to_partition(&g, &lab);
        assert_eq!(p.components(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn lifted_join_never_merges() {
        let g = MulticutInstance::new(3, vec![Edge::new(0, 1, 0.0)], vec![Edge::new(0, 2, 0.0)]).unwrap();
        let p = labeling_to_partition(&g, &EdgeLabeling::uniform(&g, false));
        assert_eq!(p.components(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn canonical_labels_follow_first_appearance() {
        let p = Partition::from_labels(&[7, 3, 7, 9]);
        assert_eq!(p.labels(), &[0, 1, 0, 2]);
    }
}

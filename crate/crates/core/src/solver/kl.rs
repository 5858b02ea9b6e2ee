use std::collections::{BTreeMap, VecDeque};

use super::{connected_refinement, partition_objective, Solution};
use crate::graph::{EdgeKind, MulticutInstance, Partition};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
struct Incident {
    other: usize,
    cost: f64,
    regular: bool,
}

struct Search<'a> {
    instance: &'a MulticutInstance,
    incident: Vec<Vec<Incident>>,
    label: Vec<usize>,
    members: Vec<Vec<usize>>,
}

/// Local search from `initial`: single-node moves to neighbouring clusters,
/// splits of a node into its own cluster, merges of adjacent clusters, and
/// Kernighan-Lin exchange sequences between two adjacent clusters.
///
/// Only strictly improving steps are taken, with the objective evaluated on
/// the partition into connected clusters, so the search terminates and never
/// returns something worse than `initial` (after making its clusters
/// connected in `G`).
pub fn solve_kl(instance: &MulticutInstance, initial: &Partition) -> Solution {
    assert_eq!(initial.len(), instance.num_nodes(), "partition does not cover the instance");
    let start = connected_refinement(instance, initial);
    let mut incident = vec![Vec::new(); instance.num_nodes()];
    for (kind, _, e) in instance.all_edges() {
        let regular = kind == EdgeKind::Regular;
        incident[e.u].push(Incident {
            other: e.v,
            cost: e.cost,
            regular,
        });
        incident[e.v].push(Incident {
            other: e.u,
            cost: e.cost,
            regular,
        });
    }
    let mut search = Search {
        instance,
        incident,
        label: start.labels().to_vec(),
        members: start.components(),
    };
    loop {
        let mut improved = search.node_moves();
        improved |= search.merges();
        if !improved {
            improved = search.exchanges();
        }
        if !improved {
            break;
        }
    }
    let partition = Partition::from_labels(&search.label);
    let objective = partition_objective(instance, &partition);
    Solution { partition, objective }
}

impl Search<'_> {
    fn node_count(&self) -> usize {
        self.label.len()
    }

    /// Per-cluster sum of `v`'s incident costs and whether a regular edge reaches it.
    fn cluster_sums(&self, v: usize) -> BTreeMap<usize, (f64, bool)> {
        let mut sums = BTreeMap::new();
        for inc in &self.incident[v] {
            let slot = sums.entry(self.label[inc.other]).or_insert((0.0, false));
            slot.0 += inc.cost;
            slot.1 |= inc.regular;
        }
        sums
    }

    /// Components of `nodes` under regular edges, each sorted.
    fn components_of(&self, nodes: &[usize]) -> Vec<Vec<usize>> {
        let mut local: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, &v) in nodes.iter().enumerate() {
            local.insert(v, i);
        }
        let mut seen = vec![false; nodes.len()];
        let mut out = Vec::new();
        for start in 0..nodes.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![nodes[start]];
            let mut queue = VecDeque::from([nodes[start]]);
            while let Some(x) = queue.pop_front() {
                for inc in self.incident[x].iter().filter(|i| i.regular) {
                    if let Some(&j) = local.get(&inc.other) {
                        if !seen[j] {
                            seen[j] = true;
                            comp.push(inc.other);
                            queue.push_back(inc.other);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Cost of edges running between different parts (all of which become cut).
    fn cross_cost(&self, parts: &[Vec<usize>]) -> f64 {
        if parts.len() < 2 {
            return 0.0;
        }
        let mut part_of = BTreeMap::new();
        for (p, nodes) in parts.iter().enumerate() {
            for &v in nodes {
                part_of.insert(v, p);
            }
        }
        let mut total = 0.0;
        for (&v, &p) in &part_of {
            for inc in &self.incident[v] {
                if inc.other > v {
                    if let Some(&q) = part_of.get(&inc.other) {
                        if q != p {
                            total += inc.cost;
                        }
                    }
                }
            }
        }
        total
    }

    fn new_cluster(&mut self, nodes: Vec<usize>) -> usize {
        let id = self.members.len();
        for &v in &nodes {
            self.label[v] = id;
        }
        self.members.push(nodes);
        id
    }

    /// Replaces cluster `c` by its connected pieces.
    fn reassign_pieces(&mut self, c: usize, pieces: Vec<Vec<usize>>) {
        let mut pieces = pieces.into_iter();
        self.members[c] = pieces.next().unwrap_or_default();
        for piece in pieces {
            self.new_cluster(piece);
        }
    }

    fn node_moves(&mut self) -> bool {
        let mut improved = false;
        for v in 0..self.node_count() {
            let from = self.label[v];
            let sums = self.cluster_sums(v);
            let stay = sums.get(&from).map_or(0.0, |s| s.0);
            // (delta, target); target None = split into a fresh cluster
            let mut best: Option<(f64, Option<usize>)> = None;
            let mut consider = |delta: f64, target: Option<usize>| {
                if best.map_or(true, |(d, _)| delta < d) {
                    best = Some((delta, target));
                }
            };
            for (&c, &(sum, regular)) in &sums {
                if c != from && regular {
                    consider(stay - sum, Some(c));
                }
            }
            if self.members[from].len() > 1 {
                consider(stay, None);
            }
            let Some((delta, target)) = best else { continue };
            if delta >= -EPS {
                continue;
            }
            let rest: Vec<usize> = self.members[from].iter().copied().filter(|&u| u != v).collect();
            let pieces = self.components_of(&rest);
            let exact = delta + self.cross_cost(&pieces);
            if exact >= -EPS {
                continue;
            }
            match target {
                Some(c) => {
                    self.label[v] = c;
                    self.members[c].push(v);
                }
                None => {
                    self.new_cluster(vec![v]);
                }
            }
            self.reassign_pieces(from, pieces);
            improved = true;
        }
        improved
    }

    /// Inter-cluster cost sums, keyed by ordered cluster pair.
    fn pair_weights(&self) -> BTreeMap<(usize, usize), (f64, bool)> {
        let mut w = BTreeMap::new();
        for (kind, _, e) in self.instance.all_edges() {
            let (a, b) = (self.label[e.u], self.label[e.v]);
            if a == b {
                continue;
            }
            let slot = w.entry((a.min(b), a.max(b))).or_insert((0.0, false));
            slot.0 += e.cost;
            slot.1 |= kind == EdgeKind::Regular;
        }
        w
    }

    fn merges(&mut self) -> bool {
        let mut improved = false;
        loop {
            let best = self
                .pair_weights()
                .into_iter()
                .filter(|(_, (w, regular))| *regular && *w > EPS)
                .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then_with(|| y.0.cmp(&x.0)));
            let Some(((a, b), _)) = best else { break };
            let moved = std::mem::take(&mut self.members[b]);
            for &v in &moved {
                self.label[v] = a;
            }
            self.members[a].extend(moved);
            improved = true;
        }
        improved
    }

    /// Kernighan-Lin exchange between every pair of adjacent clusters: move
    /// nodes one at a time to the other side (best gain first, each node at
    /// most once), then keep the best prefix if it improves the objective.
    fn exchanges(&mut self) -> bool {
        let pairs: Vec<(usize, usize)> = self
            .pair_weights()
            .into_iter()
            .filter(|(_, (_, regular))| *regular)
            .map(|(p, _)| p)
            .collect();
        let mut improved = false;
        for (a, b) in pairs {
            if self.members[a].is_empty() || self.members[b].is_empty() {
                continue;
            }
            // pair may have been touched by an earlier exchange in this pass
            if self.members[a].iter().any(|&v| self.label[v] != a)
                || self.members[b].iter().any(|&v| self.label[v] != b)
            {
                continue;
            }
            improved |= self.exchange(a, b);
        }
        improved
    }

    fn exchange(&mut self, a: usize, b: usize) -> bool {
        let nodes: Vec<usize> = self.members[a].iter().chain(&self.members[b]).copied().collect();
        let before = self.local_objective(&nodes);
        let original: Vec<(usize, usize)> = nodes.iter().map(|&v| (v, self.label[v])).collect();

        // gain bookkeeping: sum of incident cost into a and into b
        let mut into: BTreeMap<usize, (f64, f64)> = nodes.iter().map(|&v| (v, (0.0, 0.0))).collect();
        for &v in &nodes {
            let mut s = (0.0, 0.0);
            for inc in &self.incident[v] {
                if self.label[inc.other] == a {
                    s.0 += inc.cost;
                } else if self.label[inc.other] == b {
                    s.1 += inc.cost;
                }
            }
            into.insert(v, s);
        }
        let mut moved = BTreeMap::new();
        let mut sequence = Vec::new();
        let mut cumulative = 0.0;
        let mut best = (0.0, 0usize);
        for _ in 0..nodes.len() {
            let mut pick: Option<(f64, usize)> = None;
            for &v in &nodes {
                if moved.contains_key(&v) {
                    continue;
                }
                let (to_a, to_b) = into[&v];
                let delta = if self.label[v] == a { to_a - to_b } else { to_b - to_a };
                if pick.map_or(true, |(d, _)| delta < d) {
                    pick = Some((delta, v));
                }
            }
            let Some((delta, v)) = pick else { break };
            let (from, to) = if self.label[v] == a { (a, b) } else { (b, a) };
            self.label[v] = to;
            moved.insert(v, ());
            sequence.push(v);
            cumulative += delta;
            for inc in &self.incident[v] {
                if let Some(s) = into.get_mut(&inc.other) {
                    if from == a {
                        s.0 -= inc.cost;
                        s.1 += inc.cost;
                    } else {
                        s.1 -= inc.cost;
                        s.0 += inc.cost;
                    }
                }
            }
            if cumulative < best.0 - EPS {
                best = (cumulative, sequence.len());
            }
        }
        // undo moves past the best prefix
        for &v in &sequence[best.1..] {
            self.label[v] = if self.label[v] == a { b } else { a };
        }
        if best.1 == 0 {
            return false;
        }
        let side_a: Vec<usize> = nodes.iter().copied().filter(|&v| self.label[v] == a).collect();
        let side_b: Vec<usize> = nodes.iter().copied().filter(|&v| self.label[v] == b).collect();
        let mut pieces_a = self.components_of(&side_a);
        let pieces_b = self.components_of(&side_b);
        // relabel pieces before scoring so the local objective sees real clusters
        let all_pieces: Vec<Vec<usize>> = pieces_a.iter().chain(&pieces_b).cloned().collect();
        let mut scratch_ids = Vec::new();
        for piece in &all_pieces {
            let id = self.members.len() + scratch_ids.len();
            scratch_ids.push(id);
            for &v in piece {
                self.label[v] = id;
            }
        }
        let after = self.local_objective(&nodes);
        if after < before - EPS {
            let first_a = if pieces_a.is_empty() { Vec::new() } else { pieces_a.remove(0) };
            let mut rest: Vec<Vec<usize>> = pieces_a;
            let mut pb = pieces_b.into_iter();
            let first_b = pb.next().unwrap_or_default();
            rest.extend(pb);
            for &v in &first_a {
                self.label[v] = a;
            }
            for &v in &first_b {
                self.label[v] = b;
            }
            self.members[a] = first_a;
            self.members[b] = first_b;
            for piece in rest {
                self.new_cluster(piece);
            }
            true
        } else {
            for (v, l) in original {
                self.label[v] = l;
            }
            false
        }
    }

    /// Objective contribution of every edge touching `nodes`.
    fn local_objective(&self, nodes: &[usize]) -> f64 {
        let inside: std::collections::BTreeSet<usize> = nodes.iter().copied().collect();
        let mut total = 0.0;
        for &v in nodes {
            for inc in &self.incident[v] {
                let counted_twice = inside.contains(&inc.other);
                if counted_twice && inc.other < v {
                    continue;
                }
                if self.label[v] != self.label[inc.other] {
                    total += inc.cost;
                }
            }
        }
        total
    }
}

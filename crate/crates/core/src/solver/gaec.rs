use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use super::Solution;
use crate::graph::{MulticutInstance, Partition};

#[derive(Debug, Clone, Copy)]
struct Link {
    cost: f64,
    regular: bool,
}

#[derive(Debug, PartialEq)]
struct Candidate {
    weight: f64,
    pair: (usize, usize),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then_with(|| Reverse(self.pair).cmp(&Reverse(other.pair)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy additive edge contraction for lifted multicuts.
///
/// Starts from singletons and repeatedly merges the pair of clusters joined
/// by a regular edge whose summed inter-cluster cost (regular and lifted) is
/// largest, as long as that sum is positive. Lifted costs ride along and
/// become contractible once their clusters touch through a regular edge.
pub fn solve_gaec(instance: &MulticutInstance) -> Solution {
    solve_gaec_traced(instance).0
}

/// Like [`solve_gaec`] and also returns the objective after every step,
/// starting with the all-singleton objective.
pub fn solve_gaec_traced(instance: &MulticutInstance) -> (Solution, Vec<f64>) {
    let n = instance.num_nodes();
    let mut links: Vec<BTreeMap<usize, Link>> = vec![BTreeMap::new(); n];
    for (kind, _, e) in instance.all_edges() {
        let regular = kind == crate::graph::EdgeKind::Regular;
        links[e.u].insert(e.v, Link { cost: e.cost, regular });
        links[e.v].insert(e.u, Link { cost: e.cost, regular });
    }

    let mut heap = BinaryHeap::new();
    for (u, m) in links.iter().enumerate() {
        for (&v, link) in m.range(u + 1..) {
            if link.regular && link.cost > 0.0 {
                heap.push(Candidate {
                    weight: link.cost,
                    pair: (u, v),
                });
            }
        }
    }

    let mut alive = vec![true; n];
    let mut merged_into = petgraph::unionfind::UnionFind::<usize>::new(n);
    let mut objective: f64 = instance.all_edges().map(|(_, _, e)| e.cost).sum();
    let mut trace = vec![objective];

    while let Some(Candidate { weight, pair: (a, b) }) = heap.pop() {
        if !alive[a] || !alive[b] {
            continue;
        }
        match links[a].get(&b) {
            Some(l) if l.regular && l.cost == weight => {}
            _ => continue,
        }
        // keep `a` (the smaller id), fold `b` into it
        let absorbed = std::mem::take(&mut links[b]);
        alive[b] = false;
        links[a].remove(&b);
        for (c, link) in absorbed {
            if c == a {
                continue;
            }
            links[c].remove(&b);
            let merged = {
                let slot = links[a].entry(c).or_insert(Link {
                    cost: 0.0,
                    regular: false,
                });
                slot.cost += link.cost;
                slot.regular |= link.regular;
                *slot
            };
            links[c].insert(a, merged);
        }
        for (&c, link) in &links[a] {
            if link.regular && link.cost > 0.0 {
                heap.push(Candidate {
                    weight: link.cost,
                    pair: (a.min(c), a.max(c)),
                });
            }
        }
        merged_into.union(a, b);
        objective -= weight;
        trace.push(objective);
    }

    let partition = Partition::from_labels(&merged_into.into_labeling());
    let objective = super::partition_objective(instance, &partition);
    (Solution { partition, objective }, trace)
}

//! Minimum cost (lifted) multicut: objective, feasibility and solvers.
//!
//! Objective is `Σ c_e y_e` over `E ∪ F` with `y_e = 1` for cut edges, so a
//! positive cost is a reward for joining and a negative cost a reward for
//! cutting. Every solver works on partitions whose clusters are connected in
//! `G`, so their induced labelings are feasible by construction.

mod bruteforce;
mod feasibility;
mod format;
mod gaec;
mod kl;

pub use bruteforce::{solve_bruteforce, BRUTE_FORCE_MAX_NODES};
pub use feasibility::{is_feasible, partition_to_labeling, FeasibilityReport, Violation};
pub use format::{read_instance, parse_instance, write_instance};
pub use gaec::{solve_gaec, solve_gaec_traced};
pub use kl::solve_kl;

use crate::graph::{EdgeLabeling, MulticutInstance, Partition};

/// A partition together with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub partition: Partition,
    pub objective: f64,
}

/// `Σ c_e y_e` over regular and lifted edges.
pub fn objective(instance: &MulticutInstance, labeling: &EdgeLabeling) -> f64 {
    instance
        .all_edges()
        .filter(|(kind, i, _)| labeling.label(*kind, *i))
        .map(|(_, _, e)| e.cost)
        .sum()
}

/// Objective of the labeling induced by `partition`.
pub fn partition_objective(instance: &MulticutInstance, partition: &Partition) -> f64 {
    instance
        .all_edges()
        .filter(|(_, _, e)| !partition.same_component(e.u, e.v))
        .map(|(_, _, e)| e.cost)
        .sum()
}

/// GAEC followed by local search, the default solve for tracking.
pub fn solve(instance: &MulticutInstance) -> Solution {
    let start = solve_gaec(instance);
    solve_kl(instance, &start.partition)
}

/// Refines `partition` so every cluster is connected through regular edges.
pub(crate) fn connected_refinement(instance: &MulticutInstance, partition: &Partition) -> Partition {
    let mut uf = petgraph::unionfind::UnionFind::<usize>::new(instance.num_nodes());
    for e in instance.edges() {
        if partition.same_component(e.u, e.v) {
            uf.union(e.u, e.v);
        }
    }
    Partition::from_labels(&uf.into_labeling())
}

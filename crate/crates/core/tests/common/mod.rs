#![allow(dead_code)]

use std::collections::VecDeque;

use liftrack::{Edge, EdgeLabeling, MulticutInstance};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random instance: each pair becomes an edge with probability `density`;
/// a fifth of the chosen pairs are lifted. Costs uniform in [-3, 3].
pub fn random_instance(seed: u64, n: usize, density: f64) -> MulticutInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut lifted = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                let cost = rng.gen_range(-3.0..3.0);
                if rng.gen_bool(0.2) {
                    lifted.push(Edge::new(u, v, cost));
                } else {
                    edges.push(Edge::new(u, v, cost));
                }
            }
        }
    }
    MulticutInstance::new(n, edges, lifted).unwrap()
}

pub fn random_labeling(rng: &mut ChaCha8Rng, g: &MulticutInstance, p_cut: f64) -> EdgeLabeling {
    EdgeLabeling {
        regular: g.edges().iter().map(|_| rng.gen_bool(p_cut)).collect(),
        lifted: g.lifted_edges().iter().map(|_| rng.gen_bool(p_cut)).collect(),
    }
}

/// Component id per node of the join subgraph, by breadth-first search.
pub fn bfs_components(g: &MulticutInstance, lab: &EdgeLabeling) -> Vec<usize> {
    let n = g.num_nodes();
    let mut adj = vec![Vec::new(); n];
    for (e, &cut) in g.edges().iter().zip(&lab.regular) {
        if !cut {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = next;
                    q.push_back(y);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Independent partition-consistency check: every edge label equals
/// "endpoints in different BFS components".
pub fn consistent_with_components(g: &MulticutInstance, lab: &EdgeLabeling) -> bool {
    let comp = bfs_components(g, lab);
    g.edges()
        .iter()
        .zip(&lab.regular)
        .chain(g.lifted_edges().iter().zip(&lab.lifted))
        .all(|(e, &cut)| cut == (comp[e.u] != comp[e.v]))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

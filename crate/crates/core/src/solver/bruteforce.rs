use super::Solution;
use crate::error::{Error, Result};
use crate::graph::{MulticutInstance, Partition};

/// Largest instance the exhaustive solver accepts (Bell(12) ≈ 4.2M partitions).
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Exact solve by enumerating every set partition.
///
/// Partitions are visited as restricted growth strings in lexicographic
/// order and only those whose blocks are connected in `G` are scored, so
/// each feasible labeling is seen once. Ties keep the first (smallest)
/// assignment vector.
pub fn solve_bruteforce(instance: &MulticutInstance) -> Result<Solution> {
    let n = instance.num_nodes();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::TooManyNodes {
            max: BRUTE_FORCE_MAX_NODES,
            got: n,
        });
    }
    if n == 0 {
        return Ok(Solution {
            partition: Partition::singletons(0),
            objective: 0.0,
        });
    }
    let regular: Vec<(usize, usize)> = instance.edges().iter().map(|e| e.pair()).collect();
    let costed: Vec<(usize, usize, f64)> = instance
        .all_edges()
        .map(|(_, _, e)| (e.u, e.v, e.cost))
        .collect();

    let mut rgs = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut parent = [0usize; BRUTE_FORCE_MAX_NODES];

    loop {
        let blocks = rgs.iter().max().unwrap() + 1;
        if blocks_connected(&rgs, blocks, &regular, &mut parent) {
            let obj: f64 = costed
                .iter()
                .filter(|(u, v, _)| rgs[*u] != rgs[*v])
                .map(|(_, _, c)| c)
                .sum();
            if best.as_ref().map_or(true, |(b, _)| obj < *b) {
                best = Some((obj, rgs.clone()));
            }
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }
    let (objective, labels) = best.expect("the singleton partition is always feasible");
    Ok(Solution {
        partition: Partition::from_labels(&labels),
        objective,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn blocks_connected(rgs: &[usize], blocks: usize, regular: &[(usize, usize)], parent: &mut [usize]) -> bool {
    let n = rgs.len();
    for (i, p) in parent.iter_mut().enumerate().take(n) {
        *p = i;
    }
    let mut merges = 0;
    for &(u, v) in regular {
        if rgs[u] == rgs[v] {
            let (a, b) = (find(parent, u), find(parent, v));
            if a != b {
                parent[a] = b;
                merges += 1;
            }
        }
    }
    n - merges == blocks
}

/// Advances to the next restricted growth string; false after the last one.
fn next_rgs(rgs: &mut [usize]) -> bool {
    let n = rgs.len();
    for i in (1..n).rev() {
        let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
        if rgs[i] <= prefix_max {
            rgs[i] += 1;
            for x in rgs[i + 1..].iter_mut() {
                *x = 0;
            }
            return true;
        }
    }
    false
}

//! Solves a small lifted multicut instance with the heuristic and the exact
//! solver and checks the result.
//!
//! ```text
//! cargo run --release --example solve_multicut
//! ```

use liftrack::solver::{is_feasible, partition_to_labeling, solve, solve_bruteforce};
use liftrack::{Edge, MulticutInstance};

fn main() -> anyhow::Result<()> {
    // Two chains 0-1-2 and 3-4-5 linked by a weakly attractive edge 2-3. The
    // lifted edge 0-5 says the chain ends are different objects.
    let edges = vec![
        Edge::new(0, 1, 2.0),
        Edge::new(1, 2, 1.5),
        Edge::new(2, 3, 0.4),
        Edge::new(3, 4, 2.0),
        Edge::new(4, 5, 1.0),
    ];
    let lifted = vec![Edge::new(0, 5, -3.0), Edge::new(1, 4, -1.0)];
    let instance = MulticutInstance::new(6, edges, lifted)?;

    let heuristic = solve(&instance);
    let exact = solve_bruteforce(&instance)?;
    println!("heuristic {:?} objective {}", heuristic.partition.components(), heuristic.objective);
    println!("exact     {:?} objective {}", exact.partition.components(), exact.objective);

    let report = is_feasible(&instance, &partition_to_labeling(&instance, &heuristic.partition));
    println!("feasible: {}", report.is_feasible());
    Ok(())
}

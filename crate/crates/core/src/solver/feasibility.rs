use crate::graph::{labeling_to_partition, EdgeKind, EdgeLabeling, MulticutInstance, Partition};

/// An edge whose label disagrees with the connectivity of the join subgraph.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: EdgeKind,
    pub index: usize,
    pub u: usize,
    pub v: usize,
    /// Label found in the labeling (`true` = cut).
    pub cut: bool,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            EdgeKind::Regular => "regular",
            EdgeKind::Lifted => "lifted",
        };
        if self.cut {
            write!(
                f,
                "{kind} edge ({}, {}) is cut but its endpoints are joined by a path",
                self.u, self.v
            )
        } else {
            write!(
                f,
                "{kind} edge ({}, {}) is joined but no join path connects its endpoints",
                self.u, self.v
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that a labeling is induced by some partition.
///
/// An edge `uv ∈ E ∪ F` must be cut exactly when `u` and `v` fall in
/// different components of the join subgraph of `G`. This one test covers the
/// cycle, lifted path and lifted cut inequalities at once.
pub fn is_feasible(instance: &MulticutInstance, labeling: &EdgeLabeling) -> FeasibilityReport {
    assert!(labeling.matches(instance), "labeling does not match the instance");
    let partition = labeling_to_partition(instance, labeling);
    let violations = instance
        .all_edges()
        .filter_map(|(kind, index, e)| {
            let cut = labeling.label(kind, index);
            let separated = !partition.same_component(e.u, e.v);
            (cut != separated).then_some(Violation {
                kind,
                index,
                u: e.u,
                v: e.v,
                cut,
            })
        })
        .collect();
    FeasibilityReport { violations }
}

/// Labels an edge cut iff its endpoints lie in different components.
///
/// The result is feasible when every component is connected in `G`; use
/// this on solver output, which maintains that invariant.
pub fn partition_to_labeling(instance: &MulticutInstance, partition: &Partition) -> EdgeLabeling {
    let cut = |e: &crate::graph::Edge| !partition.same_component(e.u, e.v);
    EdgeLabeling {
        regular: instance.edges().iter().map(cut).collect(),
        lifted: instance.lifted_edges().iter().map(cut).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::solver::fixtures::triangle;

    #[test]
    fn triangle_with_one_cut_is_infeasible() {
        let g = triangle();
        let lab = EdgeLabeling {
            regular: vec![true, false, false],
            lifted: vec![],
        };
        let report = is_feasible(&g, &lab);
        assert!(!report.is_feasible());
        assert_eq!(report.violations.len(), 1);
        assert_eq!((report.violations[0].u, report.violations[0].v), (0, 1));
        assert!(report.violations[0].cut);
    }

    #[test]
    fn lifted_cut_with_join_path_is_infeasible() {
        let g = MulticutInstance::new(
            3,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)],
            vec![Edge::new(0, 2, -1.0)],
        )
        .unwrap();
        let lab = EdgeLabeling {
            regular: vec![false, false],
            lifted: vec![true],
        };
        let report = is_feasible(&g, &lab);
        assert!(!report.is_feasible());
        assert_eq!(report.violations[0].kind, EdgeKind::Lifted);
    }

    #[test]
    fn lifted_join_without_path_is_infeasible() {
        let g = MulticutInstance::new(
            3,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0)],
            vec![Edge::new(0, 2, 1.0)],
        )
        .unwrap();
        let lab = EdgeLabeling {
            regular: vec![true, true],
            lifted: vec![false],
        };
        assert!(!is_feasible(&g, &lab).is_feasible());
    }

    #[test]
    fn singleton_and_one_block_labelings() {
        let g = triangle();
        assert_eq!(
            partition_to_labeling(&g, &Partition::singletons(3)),
            EdgeLabeling::uniform(&g, true)
        );
        assert_eq!(
            partition_to_labeling(&g, &Partition::single_block(3)),
            EdgeLabeling::uniform(&g, false)
        );
    }

    #[test]
    fn triangle_a_c_versus_b() {
        // edge order in the fixture: ab, bc, ac
        let g = triangle();
        let p = Partition::from_labels(&[0, 1, 0]);
        let lab = partition_to_labeling(&g, &p);
        assert_eq!(lab.regular, vec![true, true, false]);
        assert!(is_feasible(&g, &lab).is_feasible());
    }
}

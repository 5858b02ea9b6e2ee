//! Edge affinities: self-supervised labels from match-table overlap, logistic
//! regression over overlap and latent-distance features, and signed costs.

mod logistic;
mod match_table;

pub use logistic::{
    edge_cost, fit_logistic, fit_logistic_traced, logit, sigmoid, AffinityModel, FeatureSet, L2_WEIGHT, P_CLAMP,
};
pub use match_table::{MatchTable, FALLBACK_MAX_GAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeKind, MulticutInstance};

/// Overlap thresholds for self-supervised labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    /// Pairs below this overlap are labeled different.
    pub t_low: f64,
    /// Pairs above this overlap are labeled same.
    pub t_high: f64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig { t_low: 0.1, t_high: 0.7 }
    }
}

impl AffinityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.t_low && self.t_low < self.t_high && self.t_high <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= t_low < t_high <= 1, got {} and {}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }

    /// `Some(true)` above `t_high`, `Some(false)` below `t_low`, else `None`.
    pub fn label(&self, overlap: f64) -> Option<bool> {
        if overlap > self.t_high {
            Some(true)
        } else if overlap < self.t_low {
            Some(false)
        } else {
            None
        }
    }
}

/// Labels every pair whose overlap falls outside the dead zone; pairs absent
/// from the table have overlap 0 and are labeled different.
pub fn generate_labels(
    table: &MatchTable,
    pairs: impl IntoIterator<Item = (usize, usize)>,
    config: &AffinityConfig,
) -> Result<Vec<((usize, usize), bool)>> {
    config.validate()?;
    Ok(pairs
        .into_iter()
        .filter_map(|(a, b)| config.label(table.get(a, b)).map(|y| ((a, b), y)))
        .collect())
}

/// Raw signals available for a detection pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSignal {
    pub overlap: f64,
    pub distance: f64,
}

/// Fits a model on labeled pairs using `signal` to build their features.
pub fn fit_affinity(
    labels: &[((usize, usize), bool)],
    set: FeatureSet,
    signal: impl Fn(usize, usize) -> Option<PairSignal>,
) -> Result<AffinityModel> {
    let mut xs = Vec::with_capacity(labels.len());
    let mut ys = Vec::with_capacity(labels.len());
    for &((a, b), y) in labels {
        let s = signal(a, b).ok_or(Error::MissingFeatures(a, b))?;
        xs.push(set.vector(s.overlap, s.distance));
        ys.push(y);
    }
    fit_logistic(&xs, &ys, set)
}

/// Returns `instance` with costs: regular edges from `nearby`, lifted edges
/// from `lifted`, and a fixed `logit(P_CLAMP)` on same-frame edges.
pub fn assemble_costs(
    instance: &MulticutInstance,
    frames: &[u32],
    nearby: &AffinityModel,
    lifted: &AffinityModel,
    signal: impl Fn(usize, usize) -> Option<PairSignal>,
) -> Result<MulticutInstance> {
    if frames.len() != instance.num_nodes() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} frames", instance.num_nodes()),
            got: format!("{} frames", frames.len()),
        });
    }
    let cost = |kind: EdgeKind, e: &Edge| -> Result<f64> {
        let (a, b) = e.pair();
        if kind == EdgeKind::Regular && frames[a] == frames[b] {
            return Ok(edge_cost(0.0));
        }
        let s = signal(a, b).ok_or(Error::MissingFeatures(a, b))?;
        let model = match kind {
            EdgeKind::Regular => nearby,
            EdgeKind::Lifted => lifted,
        };
        Ok(edge_cost(model.p_same(s.overlap, s.distance)))
    };
    let regular = instance
        .edges()
        .iter()
        .map(|e| cost(EdgeKind::Regular, e))
        .collect::<Result<Vec<_>>>()?;
    let lifted_costs = instance
        .lifted_edges()
        .iter()
        .map(|e| cost(EdgeKind::Lifted, e))
        .collect::<Result<Vec<_>>>()?;
    instance.with_costs(&regular, &lifted_costs)
}

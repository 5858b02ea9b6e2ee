use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// L2 weight on the non-bias coefficients.
pub const L2_WEIGHT: f64 = 1e-4;

/// Probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]` before the logit.
pub const P_CLAMP: f64 = 1e-6;

const MAX_ITERATIONS: usize = 200;

/// Which edge signals enter the feature vector. A bias term is always first,
/// then overlap, latent distance and their product, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSet {
    pub overlap: bool,
    pub distance: bool,
    pub product: bool,
}

impl FeatureSet {
    pub const OVERLAP: FeatureSet = FeatureSet {
        overlap: true,
        distance: false,
        product: false,
    };
    pub const DISTANCE: FeatureSet = FeatureSet {
        overlap: false,
        distance: true,
        product: false,
    };
    pub const OVERLAP_DISTANCE: FeatureSet = FeatureSet {
        overlap: true,
        distance: true,
        product: false,
    };
    pub const COMBINED: FeatureSet = FeatureSet {
        overlap: true,
        distance: true,
        product: true,
    };

    pub fn dim(&self) -> usize {
        1 + self.overlap as usize + self.distance as usize + self.product as usize
    }

    pub fn vector(&self, overlap: f64, distance: f64) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.dim());
        f.push(1.0);
        if self.overlap {
            f.push(overlap);
        }
        if self.distance {
            f.push(distance);
        }
        if self.product {
            f.push(overlap * distance);
        }
        f
    }

    /// Human-readable name, e.g. `IoU_DM + d + IoU_DM*d`.
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.overlap {
            parts.push("IoU_DM");
        }
        if self.distance {
            parts.push("d");
        }
        if self.product {
            parts.push("IoU_DM*d");
        }
        if parts.is_empty() {
            "bias".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// Fitted logistic model over a [`FeatureSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityModel {
    pub beta: Vec<f64>,
    pub features: FeatureSet,
}

impl AffinityModel {
    pub fn predict_p_same(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.beta.len(),
                got: features.len(),
            });
        }
        Ok(sigmoid(dot(&self.beta, features)))
    }

    pub fn p_same(&self, overlap: f64, distance: f64) -> f64 {
        sigmoid(dot(&self.beta, &self.features.vector(overlap, distance)))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Signed edge cost: positive favours joining the endpoints.
pub fn edge_cost(p_same: f64) -> f64 {
    logit(p_same.clamp(P_CLAMP, 1.0 - P_CLAMP))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Penalized negative mean log-likelihood.
fn penalized_loss(beta: &[f64], xs: &[Vec<f64>], ys: &[bool]) -> f64 {
    let nll: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = dot(beta, x);
            softplus(z) - if y { z } else { 0.0 }
        })
        .sum::<f64>()
        / xs.len() as f64;
    nll + 0.5 * L2_WEIGHT * beta[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Fits `β` by Newton ascent on the L2-penalized mean log-likelihood with
/// backtracking, so the training loss never increases.
pub fn fit_logistic(features: &[Vec<f64>], labels: &[bool], set: FeatureSet) -> Result<AffinityModel> {
    fit_logistic_traced(features, labels, set).map(|(m, _)| m)
}

/// [`fit_logistic`] returning the penalized loss after every iteration,
/// starting with the loss at `β = 0`.
pub fn fit_logistic_traced(
    features: &[Vec<f64>],
    labels: &[bool],
    set: FeatureSet,
) -> Result<(AffinityModel, Vec<f64>)> {
    let dim = set.dim();
    if features.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", features.len()),
            got: format!("{} labels", labels.len()),
        });
    }
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite feature value".into()));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::DegenerateData(format!(
            "need both labels, got {positives} same and {} different",
            labels.len() - positives
        )));
    }

    let n = features.len() as f64;
    let mut beta = vec![0.0; dim];
    let mut loss = penalized_loss(&beta, features, labels);
    let mut trace = vec![loss];
    for _ in 0..MAX_ITERATIONS {
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for (x, &y) in features.iter().zip(labels) {
            let p = sigmoid(dot(&beta, x));
            let r = p - if y { 1.0 } else { 0.0 };
            let w = p * (1.0 - p);
            for a in 0..dim {
                grad[a] += r * x[a] / n;
                for b in 0..dim {
                    hess[a][b] += w * x[a] * x[b] / n;
                }
            }
        }
        for k in 1..dim {
            grad[k] += L2_WEIGHT * beta[k];
            hess[k][k] += L2_WEIGHT;
        }
        hess[0][0] += 1e-12;
        let Some(step) = solve_linear(hess, grad.clone()) else {
            break;
        };
        let decrement = dot(&grad, &step);
        if !(decrement > 1e-20) {
            break;
        }
        let mut t = 1.0;
        let accepted = loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            let cand_loss = penalized_loss(&cand, features, labels);
            if cand_loss <= loss - 1e-4 * t * decrement {
                break Some((cand, cand_loss));
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        let Some((b, l)) = accepted else { break };
        beta = b;
        loss = l;
        trace.push(loss);
    }
    Ok((AffinityModel { beta, features: set }, trace))
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

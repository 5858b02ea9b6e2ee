use std::collections::{BTreeMap, BTreeSet, HashMap};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use super::records::MotRecord;
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// Default overlap needed for a hypothesis to match a ground-truth box.
pub const MATCH_IOU: f64 = 0.5;

const MT_RATIO: f64 = 0.8;
const ML_RATIO: f64 = 0.2;

/// CLEAR MOT summary. `motp` is the mean IoU over matched pairs (higher is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotReport {
    pub mota: f64,
    pub motp: f64,
    pub ids: usize,
    pub mt: usize,
    pub ml: usize,
    pub fp: usize,
    pub fn_: usize,
    pub idf1: f64,
    pub matches: usize,
    pub gt_boxes: usize,
    pub gt_tracks: usize,
}

/// Maximum-weight assignment on a `rows x cols` grid. Pairs with weight
/// `None` are never returned.
fn assign(rows: usize, cols: usize, weight: impl Fn(usize, usize) -> Option<i64>) -> Vec<(usize, usize)> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let transpose = rows > cols;
    let (r, c) = if transpose { (cols, rows) } else { (rows, cols) };
    let w = |i: usize, j: usize| if transpose { weight(j, i) } else { weight(i, j) };
    let m = Matrix::from_fn(r, c, |(i, j)| w(i, j).unwrap_or(0));
    let (_, cols_of) = kuhn_munkres(&m);
    cols_of
        .into_iter()
        .enumerate()
        .filter(|&(i, j)| w(i, j).is_some())
        .map(|(i, j)| if transpose { (j, i) } else { (i, j) })
        .collect()
}

type Frame = BTreeMap<i64, BBox>;

fn by_frame(records: &[MotRecord]) -> BTreeMap<u32, Frame> {
    let mut out: BTreeMap<u32, Frame> = BTreeMap::new();
    for r in records {
        out.entry(r.frame).or_default().insert(r.id, r.bbox);
    }
    out
}

/// Per-frame matching with persistence: a pair matched in an earlier frame is
/// kept while its overlap stays at or above the threshold; remaining boxes are
/// assigned to maximize the number of matches, then total IoU.
pub fn evaluate_clear_mot(gt: &[MotRecord], hyp: &[MotRecord], iou_threshold: f64) -> Result<MotReport> {
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    if let Some(r) = gt.iter().find(|r| r.id <= 0) {
        return Err(Error::InvalidConfig(format!(
            "ground truth ids must be positive, frame {} has id {}",
            r.frame, r.id
        )));
    }
    let gt_frames = by_frame(gt);
    let hyp_frames = by_frame(hyp);
    let frames: BTreeSet<u32> = gt_frames.keys().chain(hyp_frames.keys()).copied().collect();
    let empty = Frame::new();

    let mut last_match: HashMap<i64, i64> = HashMap::new();
    let mut covered: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    let (mut fp, mut fn_, mut ids, mut matches, mut gt_boxes) = (0, 0, 0, 0, 0);
    let mut iou_sum = 0.0;

    for f in frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let h = hyp_frames.get(&f).unwrap_or(&empty);
        gt_boxes += g.len();
        let mut pairs: Vec<(i64, i64, f64)> = Vec::new();
        let mut used_h: BTreeSet<i64> = BTreeSet::new();
        let mut open_g: Vec<(i64, BBox)> = Vec::new();
        for (&gid, gb) in g {
            let kept = last_match.get(&gid).and_then(|hid| {
                let hb = h.get(hid)?;
                let v = iou(gb, hb);
                (v >= iou_threshold && !used_h.contains(hid)).then_some((*hid, v))
            });
            match kept {
                Some((hid, v)) => {
                    used_h.insert(hid);
                    pairs.push((gid, hid, v));
                }
                None => open_g.push((gid, *gb)),
            }
        }
        let open_h: Vec<(i64, BBox)> = h.iter().filter(|(k, _)| !used_h.contains(k)).map(|(&k, &b)| (k, b)).collect();
        let scale = 1_000_000.0;
        let bonus = (scale as i64) * (open_g.len().max(open_h.len()) as i64 + 1);
        for (i, j) in assign(open_g.len(), open_h.len(), |i, j| {
            let v = iou(&open_g[i].1, &open_h[j].1);
            (v >= iou_threshold).then(|| bonus + (v * scale).round() as i64)
        }) {
            let v = iou(&open_g[i].1, &open_h[j].1);
            pairs.push((open_g[i].0, open_h[j].0, v));
        }

        for &(gid, hid, v) in &pairs {
            if let Some(prev) = last_match.insert(gid, hid) {
                if prev != hid {
                    ids += 1;
                }
            }
            iou_sum += v;
            covered.entry(gid).or_default().0 += 1;
        }
        for gid in g.keys() {
            covered.entry(*gid).or_default().1 += 1;
        }
        matches += pairs.len();
        fn_ += g.len() - pairs.len();
        fp += h.len() - pairs.len();
    }

    let (mut mt, mut ml) = (0, 0);
    for &(hit, total) in covered.values() {
        let ratio = hit as f64 / total as f64;
        if ratio >= MT_RATIO {
            mt += 1;
        } else if ratio <= ML_RATIO {
            ml += 1;
        }
    }
    let idf1 = identity_f1(&gt_frames, &hyp_frames, iou_threshold, gt.len(), hyp.len());
    Ok(MotReport {
        mota: 1.0 - (fp + fn_ + ids) as f64 / gt_boxes as f64,
        motp: if matches > 0 { iou_sum / matches as f64 } else { 0.0 },
        ids,
        mt,
        ml,
        fp,
        fn_,
        idf1,
        matches,
        gt_boxes,
        gt_tracks: covered.len(),
    })
}

/// IDF1 from a one-to-one matching of whole trajectories maximizing the
/// number of frames where the paired boxes overlap enough.
fn identity_f1(
    gt: &BTreeMap<u32, Frame>,
    hyp: &BTreeMap<u32, Frame>,
    iou_threshold: f64,
    gt_total: usize,
    hyp_total: usize,
) -> f64 {
    let gt_ids: Vec<i64> = gt.values().flat_map(|f| f.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let hyp_ids: Vec<i64> = hyp.values().flat_map(|f| f.keys().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let gi: HashMap<i64, usize> = gt_ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let hi: HashMap<i64, usize> = hyp_ids.iter().enumerate().map(|(i, &h)| (h, i)).collect();
    let mut overlap = vec![vec![0i64; hyp_ids.len()]; gt_ids.len()];
    for (f, g) in gt {
        let Some(h) = hyp.get(f) else { continue };
        for (gid, gb) in g {
            for (hid, hb) in h {
                if iou(gb, hb) >= iou_threshold {
                    overlap[gi[gid]][hi[hid]] += 1;
                }
            }
        }
    }
    let idtp: i64 = assign(gt_ids.len(), hyp_ids.len(), |i, j| Some(overlap[i][j]))
        .into_iter()
        .map(|(i, j)| overlap[i][j])
        .sum();
    2.0 * idtp as f64 / (gt_total + hyp_total) as f64
}

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;

use crate::affinity::MatchTable;
use crate::detection::Detection;
use crate::graph::Partition;

/// Detections that almost certainly show the same object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tracklet {
    pub label: usize,
    /// Detection indices, ascending.
    pub members: Vec<usize>,
}

/// Links detections `1..=max_gap` frames apart whose match overlap exceeds
/// `threshold`. Within each pair of frames, links are taken greedily by
/// decreasing overlap so every detection keeps at most one partner there.
/// Connected components become tracklets, labeled by smallest member.
pub fn pregroup(detections: &[Detection], matches: &MatchTable, threshold: f64, max_gap: u32) -> Vec<Tracklet> {
    let mut by_frames: BTreeMap<(u32, u32), Vec<(f64, usize, usize)>> = BTreeMap::new();
    for ((a, b), v) in matches.iter() {
        if a >= detections.len() || b >= detections.len() || v <= threshold {
            continue;
        }
        let (fa, fb) = (detections[a].frame, detections[b].frame);
        let gap = fa.abs_diff(fb);
        if gap == 0 || gap > max_gap {
            continue;
        }
        let (a, b) = if fa < fb { (a, b) } else { (b, a) };
        by_frames.entry((fa.min(fb), fa.max(fb))).or_default().push((v, a, b));
    }
    let mut uf = UnionFind::<usize>::new(detections.len());
    for links in by_frames.values_mut() {
        links.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut used = std::collections::HashSet::new();
        for &(_, a, b) in links.iter() {
            if used.contains(&a) || used.contains(&b) {
                continue;
            }
            used.insert(a);
            used.insert(b);
            uf.union(a, b);
        }
    }
    let roots = uf.into_labeling();
    Partition::from_labels(&roots)
        .components()
        .into_iter()
        .enumerate()
        .map(|(label, members)| Tracklet { label, members })
        .collect()
}

/// Tracklet label of each detection.
pub fn tracklet_labels(tracklets: &[Tracklet], num_detections: usize) -> Vec<usize> {
    let mut labels = vec![usize::MAX; num_detections];
    for t in tracklets {
        for &m in &t.members {
            labels[m] = t.label;
        }
    }
    labels
}

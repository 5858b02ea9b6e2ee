use std::collections::BTreeMap;

use crate::detection::Detection;
use crate::geometry::BBox;
use crate::graph::Partition;
use crate::mot::MotRecord;

/// One identity: a box for every frame of a contiguous range.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub boxes: BTreeMap<u32, BBox>,
    /// Frames taken from a detection rather than interpolated.
    pub observed: Vec<u32>,
}

impl Track {
    pub fn first_frame(&self) -> Option<u32> {
        self.boxes.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.boxes.keys().next_back().copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

impl TrackSet {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Records ordered by frame, then track id.
    pub fn to_records(&self) -> Vec<MotRecord> {
        let mut out: Vec<MotRecord> = self
            .tracks
            .iter()
            .flat_map(|t| t.boxes.iter().map(|(&f, &b)| MotRecord::new(f, t.id as i64, b, 1.0)))
            .collect();
        out.sort_by_key(|r| (r.frame, r.id));
        out
    }

    /// Groups records by id; for repeated `(id, frame)` the first record wins.
    pub fn from_records(records: &[MotRecord]) -> TrackSet {
        let mut by_id: BTreeMap<i64, BTreeMap<u32, BBox>> = BTreeMap::new();
        for r in records {
            by_id.entry(r.id).or_default().entry(r.frame).or_insert(r.bbox);
        }
        TrackSet {
            tracks: by_id
                .into_iter()
                .map(|(id, boxes)| Track {
                    id: id as u64,
                    observed: boxes.keys().copied().collect(),
                    boxes,
                })
                .collect(),
        }
    }
}

/// Turns clusters into tracks: clusters with fewer than `min_size`
/// detections are dropped, each frame keeps its highest-scoring detection
/// (lower index on ties), and gaps are filled by linear interpolation of the
/// four box coordinates. Tracks are numbered from 1 by first frame.
pub fn clusters_to_tracks(detections: &[Detection], partition: &Partition, min_size: usize) -> TrackSet {
    let mut tracks: Vec<Track> = Vec::new();
    for members in partition.components() {
        if members.len() < min_size {
            continue;
        }
        let mut best: BTreeMap<u32, usize> = BTreeMap::new();
        for &m in &members {
            let f = detections[m].frame;
            match best.get(&f) {
                Some(&cur) if detections[cur].score >= detections[m].score => {}
                _ => {
                    best.insert(f, m);
                }
            }
        }
        let mut boxes = BTreeMap::new();
        let keyframes: Vec<(u32, BBox)> = best.iter().map(|(&f, &d)| (f, detections[d].bbox)).collect();
        for w in keyframes.windows(2) {
            let ((f0, b0), (f1, b1)) = (w[0], w[1]);
            for f in f0..f1 {
                boxes.insert(f, b0.lerp(&b1, (f - f0) as f64 / (f1 - f0) as f64));
            }
        }
        if let Some(&(f, b)) = keyframes.last() {
            boxes.insert(f, b);
        }
        tracks.push(Track {
            id: 0,
            boxes,
            observed: keyframes.iter().map(|&(f, _)| f).collect(),
        });
    }
    tracks.sort_by_key(|t| (t.first_frame(), t.last_frame()));
    for (i, t) in tracks.iter_mut().enumerate() {
        t.id = i as u64 + 1;
    }
    TrackSet { tracks }
}

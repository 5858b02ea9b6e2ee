use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::detection::{index_within_frame, Detection};
use crate::error::{Error, Result};
use crate::geometry::iou;

/// Largest frame distance covered by the box-overlap fallback.
pub const FALLBACK_MAX_GAP: u32 = 5;

/// Symmetric point-match overlap between detection pairs, keyed by
/// detection index. Pairs that are absent read as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchTable {
    entries: BTreeMap<(usize, usize), f64>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl MatchTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the overlap for an unordered pair, replacing any earlier value.
    pub fn insert(&mut self, a: usize, b: usize, overlap: f64) -> Result<()> {
        if a == b {
            return Err(Error::InvalidConfig(format!("match table pair ({a}, {a}) is a self-match")));
        }
        if !(0.0..=1.0).contains(&overlap) {
            return Err(Error::InvalidConfig(format!("match overlap {overlap} outside [0, 1]")));
        }
        self.entries.insert(key(a, b), overlap);
        Ok(())
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries.get(&key(a, b)).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.entries.contains_key(&key(a, b))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pairs in ascending order with `a < b`.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Fallback estimator: plain box IoU for pairs at frame distance
    /// `1..=max_gap`. Zero overlaps are not stored.
    pub fn from_box_overlap(detections: &[Detection], max_gap: u32) -> Self {
        let mut order: Vec<usize> = (0..detections.len()).collect();
        order.sort_by_key(|&i| detections[i].frame);
        let mut table = MatchTable::new();
        for (pos, &i) in order.iter().enumerate() {
            let fi = detections[i].frame;
            for &j in &order[pos + 1..] {
                let gap = detections[j].frame - fi;
                if gap > max_gap {
                    break;
                }
                if gap == 0 {
                    continue;
                }
                let v = iou(&detections[i].bbox, &detections[j].bbox);
                if v > 0.0 {
                    table.entries.insert(key(i, j), v);
                }
            }
        }
        table
    }

    /// Parses lines `frame_a idx_a frame_b idx_b overlap`, where `idx` is the
    /// 0-based position of a detection among those of its frame. Blank lines
    /// and `#` comments are ignored.
    pub fn parse(text: &str, detections: &[Detection], origin: &Path) -> Result<Self> {
        let lookup = frame_index_lookup(detections);
        let mut table = MatchTable::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(origin, lineno + 1, m);
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("bad integer {s:?}: {e}")));
            let (fa, ia, fb, ib) = (int(fields[0])?, int(fields[1])?, int(fields[2])?, int(fields[3])?);
            let overlap: f64 = fields[4]
                .parse()
                .map_err(|e| err(format!("bad overlap {:?}: {e}", fields[4])))?;
            let find = |f: u64, i: u64| {
                lookup
                    .get(&(f, i))
                    .copied()
                    .ok_or_else(|| err(format!("no detection {i} in frame {f}")))
            };
            let (a, b) = (find(fa, ia)?, find(fb, ib)?);
            table.insert(a, b, overlap).map_err(|e| err(e.to_string()))?;
        }
        Ok(table)
    }

    pub fn read(path: &Path, detections: &[Detection]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, detections, path)
    }

    /// Serializes in the text format read by [`MatchTable::parse`].
    pub fn to_text(&self, detections: &[Detection]) -> String {
        let idx = index_within_frame(detections);
        let mut out = String::new();
        for ((a, b), v) in self.iter() {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                detections[a].frame, idx[a], detections[b].frame, idx[b], v
            );
        }
        out
    }

    pub fn write(&self, path: &Path, detections: &[Detection]) -> Result<()> {
        std::fs::write(path, self.to_text(detections)).map_err(|e| Error::io(path, e))
    }
}

fn frame_index_lookup(detections: &[Detection]) -> HashMap<(u64, u64), usize> {
    index_within_frame(detections)
        .into_iter()
        .enumerate()
        .map(|(i, k)| ((detections[i].frame as u64, k as u64), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn det(frame: u32, left: f64) -> Detection {
        Detection::new(frame, BBox::new(left, 0.0, 10.0, 10.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn symmetric_with_zero_default() {
        let mut t = MatchTable::new();
        t.insert(3, 1, 0.8).unwrap();
        assert_eq!(t.get(1, 3), 0.8);
        assert_eq!(t.get(3, 1), 0.8);
        assert_eq!(t.get(0, 1), 0.0);
        assert!(t.insert(1, 1, 0.5).is_err());
        assert!(t.insert(1, 2, 1.5).is_err());
    }

    #[test]
    fn fallback_respects_gap() {
        let dets = vec![det(1, 0.0), det(1, 5.0), det(2, 0.0), det(7, 0.0), det(8, 0.0)];
        let t = MatchTable::from_box_overlap(&dets, FALLBACK_MAX_GAP);
        assert_eq!(t.get(0, 2), 1.0);
        assert_eq!(t.get(2, 3), 1.0);
        assert!(!t.contains(0, 1));
        assert!(!t.contains(0, 3));
        assert!((t.get(1, 2) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn text_roundtrip() {
        let dets = vec![det(1, 0.0), det(1, 5.0), det(2, 0.0), det(2, 30.0)];
        let mut t = MatchTable::new();
        t.insert(0, 2, 0.9).unwrap();
        t.insert(1, 3, 0.125).unwrap();
        let text = t.to_text(&dets);
        assert_eq!(text, "1 0 2 0 0.9\n1 1 2 1 0.125\n");
        let back = MatchTable::parse(&text, &dets, Path::new("m.txt")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dets = vec![det(1, 0.0), det(2, 0.0)];
        let err = MatchTable::parse("# header\n1 0 2 0 0.5\n1 0 2 5 0.5\n", &dets, Path::new("m.txt")).unwrap_err();
        assert!(err.to_string().starts_with("m.txt:3:"), "{err}");
        let err = MatchTable::parse("1 0 2 0 1.5\n", &dets, Path::new("m.txt")).unwrap_err();
        assert!(err.to_string().starts_with("m.txt:1:"), "{err}");
    }
}

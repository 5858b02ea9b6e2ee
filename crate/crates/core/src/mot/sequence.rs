//! One sequence on disk:
//!
//! - `det.txt`: detections in MOTChallenge format (id `-1`)
//! - `patches.bin`: one image patch per detection line, optional
//! - `matches.txt`: point-match overlaps, optional; box IoU is used when absent
//! - `gt.txt`: ground truth, optional

use std::path::Path;

use super::patches::{read_patches, write_patches};
use super::records::{read_mot, write_mot, MotRecord};
use crate::affinity::{MatchTable, FALLBACK_MAX_GAP};
use crate::detection::Detection;
use crate::error::{Error, Result};

pub const DETECTIONS_FILE: &str = "det.txt";
pub const PATCHES_FILE: &str = "patches.bin";
pub const MATCHES_FILE: &str = "matches.txt";
pub const GROUND_TRUTH_FILE: &str = "gt.txt";

#[derive(Debug, Clone)]
pub struct SequenceData {
    pub detections: Vec<Detection>,
    pub matches: MatchTable,
    pub gt: Option<Vec<MotRecord>>,
}

pub fn load_sequence(dir: &Path) -> Result<SequenceData> {
    let records = read_mot(&dir.join(DETECTIONS_FILE))?;
    let mut detections = records
        .iter()
        .map(|r| Detection::new(r.frame, r.bbox, r.conf))
        .collect::<Result<Vec<_>>>()?;
    let patch_path = dir.join(PATCHES_FILE);
    if patch_path.exists() {
        let patches = read_patches(&patch_path)?;
        if patches.len() != detections.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} patches in {}", detections.len(), patch_path.display()),
                got: format!("{} patches", patches.len()),
            });
        }
        for (d, p) in detections.iter_mut().zip(patches) {
            d.image = Some(p);
        }
    }
    let match_path = dir.join(MATCHES_FILE);
    let matches = if match_path.exists() {
        MatchTable::read(&match_path, &detections)?
    } else {
        MatchTable::from_box_overlap(&detections, FALLBACK_MAX_GAP)
    };
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let gt = if gt_path.exists() { Some(read_mot(&gt_path)?) } else { None };
    Ok(SequenceData { detections, matches, gt })
}

/// Writes every part that is present; patches only when all detections have one.
pub fn save_sequence(dir: &Path, data: &SequenceData) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records: Vec<MotRecord> = data
        .detections
        .iter()
        .map(|d| MotRecord::new(d.frame, -1, d.bbox, d.score))
        .collect();
    write_mot(&records, &dir.join(DETECTIONS_FILE))?;
    let patches: Option<Vec<_>> = data.detections.iter().map(|d| d.image.as_ref()).collect();
    if let Some(p) = patches.filter(|p| !p.is_empty()) {
        write_patches(&dir.join(PATCHES_FILE), &p)?;
    }
    data.matches.write(&dir.join(MATCHES_FILE), &data.detections)?;
    if let Some(gt) = &data.gt {
        write_mot(gt, &dir.join(GROUND_TRUTH_FILE))?;
    }
    Ok(())
}

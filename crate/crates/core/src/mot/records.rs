use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// One line of a MOTChallenge CSV file:
/// `frame,id,left,top,width,height,conf,x,y,z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotRecord {
    pub frame: u32,
    /// `-1` for raw detections.
    pub id: i64,
    pub bbox: BBox,
    pub conf: f64,
    /// Passed through untouched.
    pub world: [f64; 3],
}

impl MotRecord {
    pub fn new(frame: u32, id: i64, bbox: BBox, conf: f64) -> Self {
        MotRecord {
            frame,
            id,
            bbox,
            conf,
            world: [-1.0; 3],
        }
    }
}

pub fn parse_mot(text: &str, origin: &Path) -> Result<Vec<MotRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::parse(origin, lineno + 1, m);
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 10 {
            return Err(err(format!("expected 10 fields, found {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|e| err(format!("field {}: bad number {:?}: {e}", i + 1, fields[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("field {}: non-finite value", i + 1)))
            }
        };
        let frame: u32 = fields[0]
            .parse()
            .map_err(|e| err(format!("bad frame {:?}: {e}", fields[0])))?;
        if frame == 0 {
            return Err(err("frames are numbered from 1".into()));
        }
        let id: i64 = fields[1].parse().map_err(|e| err(format!("bad id {:?}: {e}", fields[1])))?;
        let bbox = BBox::new(num(2)?, num(3)?, num(4)?, num(5)?).map_err(|e| err(e.to_string()))?;
        out.push(MotRecord {
            frame,
            id,
            bbox,
            conf: num(6)?,
            world: [num(7)?, num(8)?, num(9)?],
        });
    }
    Ok(out)
}

pub fn read_mot(path: &Path) -> Result<Vec<MotRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mot(&text, path)
}

/// Formats records with the shortest representation that reads back exactly.
pub fn format_mot(records: &[MotRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let b = &r.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.frame, r.id, b.left, b.top, b.width, b.height, r.conf, r.world[0], r.world[1], r.world[2]
        );
    }
    out
}

pub fn write_mot(records: &[MotRecord], path: &Path) -> Result<()> {
    std::fs::write(path, format_mot(records)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_mapping() {
        let r = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n", Path::new("d.txt")).unwrap();
        assert_eq!(r, vec![MotRecord::new(1, -1, BBox::new(10.0, 20.0, 30.0, 40.0).unwrap(), 0.9)]);
    }

    #[test]
    fn canonical_roundtrip() {
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n2,7,10.5,20.25,31,40,1,3.5,-2,0\n";
        let r = parse_mot(text, Path::new("d.txt")).unwrap();
        assert_eq!(format_mot(&r), text);
    }

    #[test]
    fn rejects_bad_lines() {
        let e = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n1,-1,10,20,0,40,0.9,-1,-1,-1\n", Path::new("d.txt"));
        assert!(e.unwrap_err().to_string().starts_with("d.txt:2:"));
        assert!(parse_mot("1,-1,10,20,30\n", Path::new("d.txt")).is_err());
        assert!(parse_mot("0,-1,10,20,30,40,0.9,-1,-1,-1\n", Path::new("d.txt")).is_err());
        assert!(parse_mot("1,x,10,20,30,40,0.9,-1,-1,-1\n", Path::new("d.txt")).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_is_lossless(
            frame in 1u32..10_000,
            id in -1i64..1000,
            l in -1e4f64..1e4, t in -1e4f64..1e4,
            w in 1e-3f64..1e4, h in 1e-3f64..1e4,
            conf in -10f64..10.0,
        ) {
            let r = MotRecord::new(frame, id, BBox::new(l, t, w, h).unwrap(), conf);
            let text = format_mot(std::slice::from_ref(&r));
            let back = parse_mot(&text, Path::new("p")).unwrap();
            prop_assert_eq!(back, vec![r]);
        }
    }
}

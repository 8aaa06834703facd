//! Detection records, JSON-Lines replay and the detector interface.
//!
//! No network runs here: detections come from a file written by whatever
//! model produced them, one JSON object per line:
//!
//! ```text
//! {"frame_id": "000042", "class_id": 0, "score": 0.93, "bbox": [x, y, w, h], "polygon": [[x1, y1, x2, y2, ...], ...]}
//! ```
//!
//! `bbox` is top-left corner plus size in pixels. `polygon` is optional and
//! holds one flat coordinate list per mask piece.

use std::io::{BufRead, BufReader};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::compose::PseudoRgbImage;
use crate::error::{Error, Result};
use crate::geometry::{BBox, Polygon};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_id: String,
    pub class_id: u32,
    pub score: f64,
    pub bbox: BBox,
    pub mask: Option<Vec<Polygon>>,
}

impl Detection {
    /// Checks score range, box size and mask pieces.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::ScoreRange {
                line: 0,
                score: self.score,
            });
        }
        self.bbox.validate()?;
        if let Some(mask) = &self.mask {
            for poly in mask {
                if poly.len() < 3 {
                    return Err(Error::DegeneratePolygon(poly.len()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    frame_id: String,
    #[serde(default)]
    class_id: u32,
    score: f64,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon: Option<Vec<Vec<f64>>>,
}

impl Record {
    fn into_detection(self, line: usize) -> Result<Detection> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::ScoreRange {
                line,
                score: self.score,
            });
        }
        let [x, y, w, h] = self.bbox;
        let bbox = BBox::checked(x, y, w, h)
            .map_err(|e| Error::BadBox(format!("line {line}: {e}")))?;
        let mask = match self.polygon {
            None => None,
            Some(pieces) => Some(
                pieces
                    .into_iter()
                    .map(|flat| {
                        if flat.len() % 2 != 0 {
                            return Err(Error::parse(line, "polygon has an odd coordinate count"));
                        }
                        if flat.len() < 6 {
                            return Err(Error::DegeneratePolygon(flat.len() / 2));
                        }
                        Ok(flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect())
                    })
                    .collect::<Result<Vec<Polygon>>>()?,
            ),
        };
        Ok(Detection {
            frame_id: self.frame_id,
            class_id: self.class_id,
            score: self.score,
            bbox,
            mask,
        })
    }

    fn from_detection(d: &Detection) -> Self {
        Self {
            frame_id: d.frame_id.clone(),
            class_id: d.class_id,
            score: d.score,
            bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
            polygon: d
                .mask
                .as_ref()
                .map(|m| m.iter().map(|p| p.iter().flatten().copied().collect()).collect()),
        }
    }
}

/// Detections grouped by frame, frames in order of first appearance and
/// detections in file order within a frame.
pub type DetectionSet = IndexMap<String, Vec<Detection>>;

pub fn read_detections(path: &Path) -> Result<DetectionSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_detections(BufReader::new(file))
}

pub fn parse_detections<R: BufRead>(reader: R) -> Result<DetectionSet> {
    let mut set = DetectionSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io("<detections>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let det = record.into_detection(line_no)?;
        set.entry(det.frame_id.clone()).or_default().push(det);
    }
    Ok(set)
}

/// JSON-Lines in the format [`read_detections`] reads.
pub fn write_detections<'a>(dets: impl IntoIterator<Item = &'a Detection>) -> String {
    let mut out = String::new();
    for d in dets {
        out.push_str(&serde_json::to_string(&Record::from_detection(d)).expect("record serialises"));
        out.push('\n');
    }
    out
}

/// Anything that turns a pseudo-RGB frame into detections. Implementations
/// must return the same output for the same input.
pub trait Detector {
    fn detect(&self, image: &PseudoRgbImage, frame_id: &str) -> Vec<Detection>;
}

/// Replays detections recorded in a file.
#[derive(Debug, Clone, Default)]
pub struct FileReplayDetector {
    frames: DetectionSet,
}

impl FileReplayDetector {
    pub fn new(frames: DetectionSet) -> Self {
        Self { frames }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        read_detections(path).map(Self::new)
    }

    pub fn frames(&self) -> &DetectionSet {
        &self.frames
    }
}

impl Detector for FileReplayDetector {
    fn detect(&self, _image: &PseudoRgbImage, frame_id: &str) -> Vec<Detection> {
        match self.frames.get(frame_id) {
            Some(dets) => dets.clone(),
            None => {
                log::warn!("no replay detections for frame {frame_id:?}");
                Vec::new()
            }
        }
    }
}

/// Returns the same boxes for every frame.
#[derive(Debug, Clone, Default)]
pub struct StubDetector {
    template: Vec<Detection>,
}

impl StubDetector {
    pub fn new(template: Vec<Detection>) -> Self {
        Self { template }
    }
}

impl Detector for StubDetector {
    fn detect(&self, _image: &PseudoRgbImage, frame_id: &str) -> Vec<Detection> {
        self.template
            .iter()
            .cloned()
            .map(|mut d| {
                d.frame_id = frame_id.to_string();
                d
            })
            .collect()
    }
}

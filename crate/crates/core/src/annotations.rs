//! Instance labels: LabelMe JSON in, YOLO segmentation text in and out,
//! dataset splits.
//!
//! A car cut in two by an occluder or by the azimuth seam is still one
//! instance. LabelMe expresses that with a shared `group_id`; in YOLO-seg
//! text, which allows one vertex sequence per line, the pieces are chained
//! into a single closed sequence with bridge edges:
//!
//! ```text
//! P0 s0 | P1 s1 | ... | Pk sk | s(k-1) ... s0
//! ```
//!
//! Each piece `Pi` is written in full and closed by repeating its first
//! vertex `si`; after the last piece the sequence walks back through the
//! earlier start vertices. Every bridge is traversed once in each direction,
//! so it adds no area under even-odd filling. A single-piece instance is
//! written as a plain polygon with no repeated vertex.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{clamp_polygon, BBox, Polygon, Vertex};

/// Class id of `car`, the one class the dataset labels.
pub const CAR_CLASS_ID: u32 = 0;

/// Label/class-id mapping. `car` is always 0; other labels are passed
/// through and numbered in order of first appearance.
#[derive(Debug, Clone)]
pub struct ClassMap {
    names: Vec<String>,
}

impl Default for ClassMap {
    fn default() -> Self {
        Self {
            names: vec!["car".to_string()],
        }
    }
}

impl ClassMap {
    pub fn id_for(&mut self, label: &str) -> u32 {
        if let Some(i) = self.names.iter().position(|n| n == label) {
            return i as u32;
        }
        self.names.push(label.to_string());
        (self.names.len() - 1) as u32
    }

    pub fn label_for(&self, id: u32) -> String {
        self.names
            .get(id as usize)
            .cloned()
            .unwrap_or_else(|| format!("class_{id}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAnnotation {
    pub label: String,
    pub class_id: u32,
    pub polygons: Vec<Polygon>,
    /// Tight hull of every vertex of every polygon.
    pub bbox: BBox,
}

/// Drops repeated consecutive vertices and an explicit closing vertex.
fn tidy(poly: &mut Polygon) {
    poly.dedup();
    while poly.len() > 1 && poly.first() == poly.last() {
        poly.pop();
    }
}

impl InstanceAnnotation {
    pub fn new(label: impl Into<String>, class_id: u32, mut polygons: Vec<Polygon>) -> Result<Self> {
        if polygons.is_empty() {
            return Err(Error::DegeneratePolygon(0));
        }
        for poly in polygons.iter_mut() {
            tidy(poly);
            if poly.len() < 3 {
                return Err(Error::DegeneratePolygon(poly.len()));
            }
        }
        let bbox = BBox::hull(polygons.iter().flatten()).expect("non-empty polygons");
        Ok(Self {
            label: label.into(),
            class_id,
            polygons,
            bbox,
        })
    }

    /// Clamps vertices into the image and recomputes the box.
    pub fn clamped(mut self, width: f64, height: f64) -> Self {
        for poly in self.polygons.iter_mut() {
            clamp_polygon(poly, width, height);
        }
        self.bbox = BBox::hull(self.polygons.iter().flatten()).expect("non-empty polygons");
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.polygons.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct LabelMeShape {
    label: String,
    points: Vec<Vertex>,
    #[serde(default)]
    group_id: Option<i64>,
    #[serde(default = "default_shape_type")]
    shape_type: String,
    #[serde(default)]
    flags: serde_json::Map<String, serde_json::Value>,
}

fn default_shape_type() -> String {
    "polygon".into()
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(rename_all = "camelCase")]
struct LabelMeFile {
    #[serde(default)]
    version: Option<String>,
    #[serde(default)]
    flags: serde_json::Map<String, serde_json::Value>,
    shapes: Vec<LabelMeShape>,
    #[serde(default)]
    image_path: Option<String>,
    #[serde(default)]
    image_data: Option<String>,
    image_height: u32,
    image_width: u32,
}

/// A parsed LabelMe document.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMeDocument {
    pub width: u32,
    pub height: u32,
    pub image_path: Option<String>,
    pub instances: Vec<InstanceAnnotation>,
}

pub fn parse_labelme(path: &Path) -> Result<Vec<InstanceAnnotation>> {
    Ok(read_labelme(path, &mut ClassMap::default())?.instances)
}

pub fn read_labelme(path: &Path, classes: &mut ClassMap) -> Result<LabelMeDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labelme_str(&text, classes)
}

/// Shapes sharing a non-null `group_id` become one instance, in order of the
/// group's first shape; the instance takes that shape's label.
pub fn parse_labelme_str(json: &str, classes: &mut ClassMap) -> Result<LabelMeDocument> {
    let file: LabelMeFile = serde_json::from_str(json).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if file.image_width == 0 || file.image_height == 0 {
        return Err(Error::parse(0, "imageWidth and imageHeight must be positive"));
    }
    let (w, h) = (file.image_width as f64, file.image_height as f64);

    // (label, pieces) per instance, in order of first appearance.
    let mut groups: Vec<(String, Vec<Polygon>)> = Vec::new();
    let mut by_group: HashMap<i64, usize> = HashMap::new();
    for shape in file.shapes {
        let poly = match shape.shape_type.as_str() {
            "rectangle" if shape.points.len() == 2 => {
                let hull = BBox::hull(&shape.points).unwrap();
                hull.to_polygon()
            }
            _ => shape.points,
        };
        match shape.group_id {
            Some(g) => match by_group.get(&g) {
                Some(&i) => groups[i].1.push(poly),
                None => {
                    by_group.insert(g, groups.len());
                    groups.push((shape.label, vec![poly]));
                }
            },
            None => groups.push((shape.label, vec![poly])),
        }
    }

    let instances = groups
        .into_iter()
        .map(|(label, polys)| {
            let class_id = classes.id_for(&label);
            InstanceAnnotation::new(label, class_id, polys).map(|a| a.clamped(w, h))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(LabelMeDocument {
        width: file.image_width,
        height: file.image_height,
        image_path: file.image_path,
        instances,
    })
}

/// LabelMe JSON for a set of instances. Multi-piece instances get a shared
/// `group_id` (numbered from 1); single pieces get `null`.
pub fn to_labelme(
    annos: &[InstanceAnnotation],
    width: u32,
    height: u32,
    image_path: Option<&str>,
) -> String {
    let mut shapes = Vec::new();
    let mut next_group = 1;
    for a in annos {
        let group_id = if a.polygons.len() > 1 {
            next_group += 1;
            Some(next_group - 1)
        } else {
            None
        };
        for poly in &a.polygons {
            shapes.push(LabelMeShape {
                label: a.label.clone(),
                points: poly.clone(),
                group_id,
                shape_type: default_shape_type(),
                flags: Default::default(),
            });
        }
    }
    let file = LabelMeFile {
        version: Some("5.2.1".into()),
        flags: Default::default(),
        shapes,
        image_path: image_path.map(str::to_string),
        image_data: None,
        image_height: height,
        image_width: width,
    };
    serde_json::to_string_pretty(&file).expect("LabelMe document serialises")
}

/// Normalised coordinates are written with six decimals; work in integer
/// millionths so repeated vertices compare exactly.
const QUANT: f64 = 1e6;

type QVertex = (i64, i64);

fn quantize(v: &Vertex, width: f64, height: f64) -> QVertex {
    let q = |c: f64, extent: f64| ((c / extent).clamp(0.0, 1.0) * QUANT).round() as i64;
    (q(v[0], width), q(v[1], height))
}

fn push_vertex(line: &mut String, v: QVertex) {
    for c in [v.0, v.1] {
        let _ = write!(line, " {}.{:06}", c / 1_000_000, c % 1_000_000);
    }
}

/// One line per instance, see the module docs for the multi-piece layout.
pub fn to_yolo_seg(annos: &[InstanceAnnotation], width: u32, height: u32) -> String {
    let (w, h) = (width as f64, height as f64);
    let mut out = String::new();
    for a in annos {
        let mut pieces: Vec<Vec<QVertex>> = a
            .polygons
            .iter()
            .map(|p| {
                let mut q: Vec<QVertex> = p.iter().map(|v| quantize(v, w, h)).collect();
                q.dedup();
                while q.len() > 1 && q.first() == q.last() {
                    q.pop();
                }
                q
            })
            .collect();

        let _ = write!(out, "{}", a.class_id);
        if pieces.len() == 1 {
            for &v in &pieces[0] {
                push_vertex(&mut out, v);
            }
        } else {
            // Each start vertex must occur once in its piece and differ from
            // every earlier start, or the reader would split in the wrong
            // place. Rotate a piece when its first vertex does not qualify.
            let mut starts: Vec<QVertex> = Vec::with_capacity(pieces.len());
            for piece in pieces.iter_mut() {
                let pick = (0..piece.len()).find(|&i| {
                    let v = piece[i];
                    !starts.contains(&v) && piece.iter().filter(|&&u| u == v).count() == 1
                });
                if let Some(i) = pick {
                    piece.rotate_left(i);
                }
                starts.push(piece[0]);
            }
            for piece in &pieces {
                for &v in piece {
                    push_vertex(&mut out, v);
                }
                push_vertex(&mut out, piece[0]);
            }
            for &s in starts.iter().rev().skip(1) {
                push_vertex(&mut out, s);
            }
        }
        out.push('\n');
    }
    out
}

/// Splits a bridged vertex sequence back into pieces.
fn split_bridged(seq: &[Vertex]) -> Vec<Polygon> {
    let mut pieces = Vec::new();
    let mut starts: Vec<Vertex> = Vec::new();
    let mut i = 0;
    while i < seq.len() {
        let v = seq[i];
        if starts.contains(&v) {
            // Return trail.
            break;
        }
        match seq[i + 1..].iter().position(|u| *u == v) {
            Some(off) => {
                let j = i + 1 + off;
                pieces.push(seq[i..j].to_vec());
                starts.push(v);
                i = j + 1;
            }
            None => {
                pieces.push(seq[i..].to_vec());
                break;
            }
        }
    }
    pieces
}

pub fn parse_yolo_seg(text: &str, width: u32, height: u32) -> Result<Vec<InstanceAnnotation>> {
    parse_yolo_seg_with(text, width, height, &ClassMap::default())
}

pub fn parse_yolo_seg_with(
    text: &str,
    width: u32,
    height: u32,
    classes: &ClassMap,
) -> Result<Vec<InstanceAnnotation>> {
    let (w, h) = (width as f64, height as f64);
    let mut annos = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut tokens = raw.split_whitespace();
        let Some(first) = tokens.next() else {
            continue;
        };
        let class_id: u32 = first
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad class id {first:?}")))?;
        let coords = tokens
            .map(|t| {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad coordinate {t:?}")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::parse(line_no, format!("coordinate {v} outside [0, 1]")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if coords.len() % 2 != 0 {
            return Err(Error::parse(line_no, "odd number of coordinates"));
        }
        let seq: Vec<Vertex> = coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let polygons = split_bridged(&seq)
            .into_iter()
            .map(|p| p.into_iter().map(|v| [v[0] * w, v[1] * h]).collect())
            .collect();
        annos.push(InstanceAnnotation::new(classes.label_for(class_id), class_id, polygons)?);
    }
    Ok(annos)
}

/// Disjoint train/val/test partition of frame ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn sets(&self) -> [(&'static str, &[String]); 3] {
        [
            ("Train", &self.train),
            ("Validation", &self.val),
            ("Test", &self.test),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("split serialises")
    }
}

/// Shuffles `ids` with xoshiro256++ (seeded through SplitMix64 from `seed`)
/// using Fisher-Yates, then cuts it. Validation and test get
/// `floor(n * ratio / 100)` ids each, train gets the rest.
///
/// Duplicate ids are collapsed to their first occurrence.
pub fn split_dataset(ids: &[String], ratios: [u32; 3], seed: u64) -> Result<DatasetSplit> {
    let sum: u32 = ratios.iter().sum();
    if sum != 100 {
        return Err(Error::BadRatios(sum));
    }
    let mut seen = HashSet::new();
    let mut pool: Vec<String> = ids.iter().filter(|id| seen.insert(*id)).cloned().collect();

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for i in (1..pool.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        pool.swap(i, j);
    }

    let n = pool.len();
    let n_val = n * ratios[1] as usize / 100;
    let n_test = n * ratios[2] as usize / 100;
    let n_train = n - n_val - n_test;
    let test = pool.split_off(n_train + n_val);
    let val = pool.split_off(n_train);
    Ok(DatasetSplit {
        train: pool,
        val,
        test,
    })
}

/// One row of the dataset summary table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SetStats {
    pub set: &'static str,
    pub images: usize,
    pub instances: usize,
}

pub fn dataset_stats(
    split: &DatasetSplit,
    annos: &HashMap<String, Vec<InstanceAnnotation>>,
) -> Result<Vec<SetStats>> {
    split
        .sets()
        .into_iter()
        .map(|(set, ids)| {
            let mut instances = 0;
            for id in ids {
                instances += annos
                    .get(id)
                    .ok_or_else(|| Error::UnknownId(id.clone()))?
                    .len();
            }
            Ok(SetStats {
                set,
                images: ids.len(),
                instances,
            })
        })
        .collect()
}

/// `Set | Images | Instances` table.
pub fn format_stats_table(rows: &[SetStats]) -> String {
    let mut out = format!("{:<10} | {:>6} | {:>9}\n", "Set", "Images", "Instances");
    for r in rows {
        let _ = writeln!(out, "{:<10} | {:>6} | {:>9}", r.set, r.images, r.instances);
    }
    out
}

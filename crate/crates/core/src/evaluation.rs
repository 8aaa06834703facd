//! Detection and instance-segmentation metrics: precision and recall at the
//! best-F1 confidence, AP at IoU 0.50 and mean AP over IoU 0.50:0.05:0.95,
//! for the box and the mask branch.
//!
//! AP is 101-point interpolated: the precision envelope is made
//! non-increasing in recall and sampled at recall 0.00, 0.01, ..., 1.00.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde::Serialize;

use crate::annotations::InstanceAnnotation;
use crate::detections::Detection;
use crate::geometry::{iou, BBox, Polygon};
use crate::raster::{pixel_iou, rasterize, ColumnMode};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Box,
    Mask,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Box => "box",
            Branch::Mask => "mask",
        })
    }
}

/// A labelled instance to be found.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub class_id: u32,
    pub bbox: BBox,
    pub polygons: Vec<Polygon>,
}

impl From<&InstanceAnnotation> for GroundTruth {
    fn from(a: &InstanceAnnotation) -> Self {
        Self {
            class_id: a.class_id,
            bbox: a.bbox,
            polygons: a.polygons.clone(),
        }
    }
}

impl From<&Detection> for GroundTruth {
    fn from(d: &Detection) -> Self {
        Self {
            class_id: d.class_id,
            bbox: d.bbox,
            polygons: d.mask.clone().unwrap_or_else(|| vec![d.bbox.to_polygon()]),
        }
    }
}

/// Image geometry for the mask branch and the seam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalGeometry {
    pub width: usize,
    pub height: usize,
    /// Treat the x axis as a 360-degree panorama of `width` columns.
    pub wrap: bool,
}

impl EvalGeometry {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            wrap: false,
        }
    }

    fn wrap_width(&self) -> Option<f64> {
        self.wrap.then_some(self.width as f64)
    }

    fn column_mode(&self) -> ColumnMode {
        if self.wrap {
            ColumnMode::Wrap
        } else {
            ColumnMode::Clip
        }
    }
}

/// Pixel IoU of two polygon sets rasterised on a `width x height` grid.
/// An empty mask has IoU 0 with anything.
pub fn mask_iou(a: &[Polygon], b: &[Polygon], width: usize, height: usize) -> f64 {
    let pa = rasterize(a, width, height, ColumnMode::Clip);
    let pb = rasterize(b, width, height, ColumnMode::Clip);
    if pa.is_empty() || pb.is_empty() {
        return 0.0;
    }
    pixel_iou(&pa, &pb)
}

fn det_polygons(d: &Detection) -> Vec<Polygon> {
    d.mask.clone().unwrap_or_else(|| vec![d.bbox.to_polygon()])
}

/// IoU of every detection (rows) against every ground truth (columns);
/// pairs of different classes get 0.
pub fn iou_table(
    dets: &[Detection],
    gts: &[GroundTruth],
    branch: Branch,
    geom: &EvalGeometry,
) -> Vec<Vec<f64>> {
    match branch {
        Branch::Box => dets
            .iter()
            .map(|d| {
                gts.iter()
                    .map(|g| {
                        if d.class_id == g.class_id {
                            iou(&d.bbox, &g.bbox, geom.wrap_width())
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect(),
        Branch::Mask => {
            let mode = geom.column_mode();
            let raster = |p: &[Polygon]| rasterize(p, geom.width, geom.height, mode);
            let gt_px: Vec<Vec<u32>> = gts.iter().map(|g| raster(&g.polygons)).collect();
            dets.iter()
                .map(|d| {
                    let dp = raster(&det_polygons(d));
                    gts.iter()
                        .zip(&gt_px)
                        .map(|(g, gp)| {
                            if d.class_id != g.class_id || dp.is_empty() || gp.is_empty() {
                                0.0
                            } else {
                                pixel_iou(&dp, gp)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Outcome of matching one frame at one IoU threshold. Detections appear in
/// descending score order (ties in input order).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub scores: Vec<f64>,
    pub det_tp: Vec<bool>,
    /// Input index of each reordered detection.
    pub det_index: Vec<usize>,
    pub gt_matched: Vec<bool>,
}

impl MatchResult {
    pub fn tp_count(&self) -> usize {
        self.det_tp.iter().filter(|&&t| t).count()
    }
}

fn score_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    order
}

/// Greedy by score: each detection takes the unmatched ground truth with
/// the highest IoU at or above `thresh` (lowest index on ties).
fn greedy(order: &[usize], scores: &[f64], ious: &[Vec<f64>], n_gt: usize, thresh: f64) -> MatchResult {
    let mut gt_matched = vec![false; n_gt];
    let mut det_tp = Vec::with_capacity(order.len());
    for &d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &v) in ious[d].iter().enumerate() {
            if gt_matched[g] || v < thresh {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            gt_matched[g] = true;
        }
        det_tp.push(best.is_some());
    }
    MatchResult {
        scores: order.iter().map(|&d| scores[d]).collect(),
        det_tp,
        det_index: order.to_vec(),
        gt_matched,
    }
}

pub fn match_predictions(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_thresh: f64,
    branch: Branch,
    geom: &EvalGeometry,
) -> MatchResult {
    let ious = iou_table(dets, gts, branch, geom);
    let scores: Vec<f64> = dets.iter().map(|d| d.score).collect();
    greedy(&score_order(dets), &scores, &ious, gts.len(), iou_thresh)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub confidence: f64,
}

/// Cumulative precision/recall, one point per distinct confidence, highest
/// confidence first. Input is `(score, is_tp)` in any order.
pub fn pr_curve(flags: &[(f64, bool)], n_gt: usize) -> Vec<PrPoint> {
    let mut sorted = flags.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut curve = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let conf = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == conf {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push(PrPoint {
            precision: tp as f64 / (tp + fp) as f64,
            recall: if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 },
            confidence: conf,
        });
    }
    curve
}

/// 101-point interpolated AP of a curve from [`pr_curve`].
pub fn average_precision(curve: &[PrPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    // Envelope: best precision at this recall or beyond.
    let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    let mut k = 0;
    for step in 0..=100 {
        let r = step as f64 / 100.0;
        while k < curve.len() && curve[k].recall < r {
            k += 1;
        }
        if k == curve.len() {
            break;
        }
        sum += envelope[k];
    }
    sum / 101.0
}

/// The confidence with the best F1 on a curve (first on ties), or zeros.
fn best_f1(curve: &[PrPoint]) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, 0.0);
    let mut best_f1 = -1.0;
    for p in curve {
        let denom = p.precision + p.recall;
        let f1 = if denom > 0.0 { 2.0 * p.precision * p.recall / denom } else { 0.0 };
        if f1 > best_f1 {
            best_f1 = f1;
            best = (p.precision, p.recall, p.confidence);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub class_id: u32,
    pub n_gt: usize,
    pub n_det: usize,
    pub precision: f64,
    pub recall: f64,
    pub confidence: f64,
    pub ap50: f64,
    pub map50_95: f64,
    pub ap_per_threshold: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub branch: Branch,
    pub precision: f64,
    pub recall: f64,
    pub ap50: f64,
    pub map50_95: f64,
    /// AP at 0.50, 0.55, ..., 0.95.
    pub ap_per_threshold: Vec<f64>,
    pub per_class: Vec<ClassReport>,
    pub frames: usize,
    pub n_gt: usize,
    pub n_det: usize,
    pub warnings: Vec<String>,
}

/// Per-frame detections and ground truth keyed by frame id.
pub type FrameMap<T> = IndexMap<String, Vec<T>>;

/// Scores every frame in the union of both maps. Frames missing from one
/// side count as having no detections or no ground truth.
pub fn evaluate(
    dets: &FrameMap<Detection>,
    gts: &FrameMap<GroundTruth>,
    branch: Branch,
    geom: &EvalGeometry,
) -> EvalReport {
    let thresholds = iou_thresholds();
    let mut frame_ids: Vec<&String> = gts.keys().collect();
    frame_ids.extend(dets.keys().filter(|k| !gts.contains_key(*k)));

    let classes: BTreeSet<u32> = gts.values().flatten().map(|g| g.class_id).collect();

    // (class, threshold) -> flags; class -> gt count / det count.
    let mut flags: IndexMap<u32, Vec<Vec<(f64, bool)>>> = IndexMap::new();
    let mut n_gt_by_class: IndexMap<u32, usize> = IndexMap::new();
    let mut n_det_by_class: IndexMap<u32, usize> = IndexMap::new();
    for &c in &classes {
        flags.insert(c, vec![Vec::new(); thresholds.len()]);
        n_gt_by_class.insert(c, 0);
        n_det_by_class.insert(c, 0);
    }

    let empty_d: Vec<Detection> = Vec::new();
    let empty_g: Vec<GroundTruth> = Vec::new();
    for id in &frame_ids {
        let fd = dets.get(*id).unwrap_or(&empty_d);
        let fg = gts.get(*id).unwrap_or(&empty_g);
        for &c in &classes {
            let cd: Vec<Detection> = fd.iter().filter(|d| d.class_id == c).cloned().collect();
            let cg: Vec<GroundTruth> = fg.iter().filter(|g| g.class_id == c).cloned().collect();
            *n_gt_by_class.get_mut(&c).unwrap() += cg.len();
            *n_det_by_class.get_mut(&c).unwrap() += cd.len();
            if cd.is_empty() {
                continue;
            }
            let ious = iou_table(&cd, &cg, branch, geom);
            let scores: Vec<f64> = cd.iter().map(|d| d.score).collect();
            let order = score_order(&cd);
            for (t, &thresh) in thresholds.iter().enumerate() {
                let m = greedy(&order, &scores, &ious, cg.len(), thresh);
                flags[&c][t].extend(m.scores.iter().copied().zip(m.det_tp.iter().copied()));
            }
        }
    }

    let mut per_class = Vec::new();
    for &c in &classes {
        let n_gt = n_gt_by_class[&c];
        let aps: Vec<f64> = flags[&c]
            .iter()
            .map(|f| average_precision(&pr_curve(f, n_gt)))
            .collect();
        let (precision, recall, confidence) = best_f1(&pr_curve(&flags[&c][0], n_gt));
        per_class.push(ClassReport {
            class_id: c,
            n_gt,
            n_det: n_det_by_class[&c],
            precision,
            recall,
            confidence,
            ap50: aps[0],
            map50_95: aps.iter().sum::<f64>() / aps.len() as f64,
            ap_per_threshold: aps,
        });
    }

    let mut warnings = Vec::new();
    let n_gt: usize = per_class.iter().map(|c| c.n_gt).sum();
    let n_det: usize = dets.values().map(Vec::len).sum();
    if per_class.is_empty() {
        let msg = "no ground truth instances; recall is undefined and reported as 0".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
        return EvalReport {
            branch,
            precision: 0.0,
            recall: 0.0,
            ap50: 0.0,
            map50_95: 0.0,
            ap_per_threshold: vec![0.0; thresholds.len()],
            per_class,
            frames: frame_ids.len(),
            n_gt,
            n_det,
            warnings,
        };
    }
    let unscored = dets
        .values()
        .flatten()
        .filter(|d| !classes.contains(&d.class_id))
        .count();
    if unscored > 0 {
        warnings.push(format!("{unscored} detections of classes without ground truth were ignored"));
    }

    let k = per_class.len() as f64;
    let mean = |f: &dyn Fn(&ClassReport) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let ap_per_threshold: Vec<f64> = (0..thresholds.len())
        .map(|t| mean(&|c| c.ap_per_threshold[t]))
        .collect();
    EvalReport {
        branch,
        precision: mean(&|c| c.precision),
        recall: mean(&|c| c.recall),
        ap50: ap_per_threshold[0],
        map50_95: ap_per_threshold.iter().sum::<f64>() / ap_per_threshold.len() as f64,
        ap_per_threshold,
        per_class,
        frames: frame_ids.len(),
        n_gt,
        n_det,
        warnings,
    }
}

/// `Precision | Recall | mAP @0.5 | mAP@0.5-0.95` table, one row per report.
pub fn format_report_table(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "{:<6} | {:>9} | {:>6} | {:>8} | {:>12}\n",
        "Branch", "Precision", "Recall", "mAP @0.5", "mAP@0.5-0.95"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<6} | {:>9.3} | {:>6.3} | {:>8.3} | {:>12.3}",
            r.branch.to_string(),
            r.precision,
            r.recall,
            r.ap50,
            r.map50_95
        );
    }
    out
}

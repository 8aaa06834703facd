//! Two-stage, score-gated IoU tracker in the ByteTrack / BoT-SORT family.
//!
//! Each step predicts every live track, matches confident detections
//! against confirmed and lost tracks, then tries the weaker detections on
//! whatever is left. Confident leftovers seed new tracks; tracks that go
//! unmatched for more than `track_buffer` frames are removed. Association is
//! IoU only, with no camera-motion compensation or appearance features.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assignment::{assign, CostMatrix};
use crate::detections::Detection;
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::kalman::{kf_init, kf_predict, kf_update, KalmanState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Detections scoring at least this enter the first association.
    pub assoc_thresh_first: f64,
    /// Detections below this (and at least `score_floor`) enter the second.
    pub assoc_thresh_second: f64,
    /// Minimum score for an unmatched detection to start a track.
    pub new_track_thresh: f64,
    /// Frames a lost track survives before removal.
    pub track_buffer: u32,
    /// Largest association cost (1 - IoU) accepted for a match; 0.8 admits
    /// pairs with IoU of 0.2 or more.
    pub match_thresh: f64,
    /// Detections below this are ignored.
    pub score_floor: f64,
    /// Image width when boxes live on a 360-degree panorama.
    pub wrap_width: Option<f64>,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            assoc_thresh_first: 0.7,
            assoc_thresh_second: 0.7,
            new_track_thresh: 0.75,
            track_buffer: 20,
            match_thresh: 0.8,
            score_floor: 0.1,
            wrap_width: None,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("assoc_thresh_first", self.assoc_thresh_first),
            ("assoc_thresh_second", self.assoc_thresh_second),
            ("new_track_thresh", self.new_track_thresh),
            ("match_thresh", self.match_thresh),
            ("score_floor", self.score_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.track_buffer < 1 {
            return Err(Error::Config("track_buffer must be at least 1".into()));
        }
        if let Some(w) = self.wrap_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!("wrap_width must be positive, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: KalmanState,
    pub status: TrackStatus,
    pub frames_since_update: u32,
    pub last_score: f64,
    pub class_id: u32,
}

/// One reported track for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    pub score: f64,
    pub status: TrackStatus,
    pub class_id: u32,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    frame_count: u64,
    removed_last_step: Vec<Track>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            frame_count: 0,
            removed_last_step: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live tracks (tentative, confirmed or lost).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Tracks removed by the most recent step, with status `Removed`.
    pub fn removed_last_step(&self) -> &[Track] {
        &self.removed_last_step
    }

    pub fn frame_count(&self) -> u64 {
        self.frame_count
    }

    fn cost(&self, track_idx: &[usize], det_idx: &[usize], dets: &[Detection]) -> CostMatrix {
        CostMatrix::from_fn(track_idx.len(), det_idx.len(), |r, c| {
            let t = &self.tracks[track_idx[r]];
            1.0 - iou(&t.state.bbox(), &dets[det_idx[c]].bbox, self.cfg.wrap_width)
        })
    }

    /// Matches `track_idx` against `det_idx`, applies the updates, and
    /// returns the unmatched tracks and detections.
    fn associate(
        &mut self,
        track_idx: &[usize],
        det_idx: &[usize],
        dets: &[Detection],
        matched: &mut [bool],
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let cost = self.cost(track_idx, det_idx, dets);
        let a = assign(&cost, 1.0 - self.cfg.match_thresh);
        for &(r, c) in &a.matches {
            let ti = track_idx[r];
            self.apply_update(ti, &dets[det_idx[c]])?;
            matched[ti] = true;
        }
        Ok((
            a.unmatched_rows.iter().map(|&r| track_idx[r]).collect(),
            a.unmatched_cols.iter().map(|&c| det_idx[c]).collect(),
        ))
    }

    fn apply_update(&mut self, ti: usize, det: &Detection) -> Result<()> {
        let wrap = self.cfg.wrap_width;
        let track = &mut self.tracks[ti];
        let mut measured = det.bbox;
        if let Some(width) = wrap {
            // Measure on the same turn as the prediction.
            let turns = ((track.state.mean[0] - measured.center().0) / width).round();
            measured = measured.shifted_x(turns * width);
        }
        track.state = kf_update(&track.state, &measured)?;
        if let Some(width) = wrap {
            let cx = track.state.mean[0];
            track.state.shift_x(cx.rem_euclid(width) - cx);
        }
        track.status = TrackStatus::Confirmed;
        track.frames_since_update = 0;
        track.last_score = det.score;
        track.class_id = det.class_id;
        Ok(())
    }

    /// Advances the tracker by one frame and returns the confirmed tracks
    /// matched in it, sorted by id.
    pub fn step(&mut self, detections: &[Detection]) -> Result<Vec<TrackOutput>> {
        self.frame_count += 1;
        self.removed_last_step.clear();

        let high: Vec<usize> = (0..detections.len())
            .filter(|&i| detections[i].score >= self.cfg.assoc_thresh_first)
            .collect();
        let low: Vec<usize> = (0..detections.len())
            .filter(|&i| {
                let s = detections[i].score;
                s < self.cfg.assoc_thresh_second
                    && s >= self.cfg.score_floor
                    && s < self.cfg.assoc_thresh_first
            })
            .collect();

        for t in self.tracks.iter_mut() {
            t.state = kf_predict(&t.state);
        }

        let mut matched = vec![false; self.tracks.len()];
        let pool: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| matches!(self.tracks[i].status, TrackStatus::Confirmed | TrackStatus::Lost))
            .collect();
        let tentative: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].status == TrackStatus::Tentative)
            .collect();

        // First association: confident detections.
        let (left_tracks, left_high) = self.associate(&pool, &high, detections, &mut matched)?;
        // Second association: weak detections on what is left.
        self.associate(&left_tracks, &low, detections, &mut matched)?;
        // Tentative tracks get one chance at the confident leftovers.
        let (_, fresh) = self.associate(&tentative, &left_high, detections, &mut matched)?;

        // Lifecycle of everything that did not match.
        let buffer = self.cfg.track_buffer;
        let mut kept = Vec::with_capacity(self.tracks.len());
        for (mut t, hit) in std::mem::take(&mut self.tracks).into_iter().zip(matched) {
            if !hit {
                t.frames_since_update += 1;
                if t.status == TrackStatus::Tentative || t.frames_since_update > buffer {
                    t.status = TrackStatus::Removed;
                    self.removed_last_step.push(t);
                    continue;
                }
                t.status = TrackStatus::Lost;
            }
            kept.push(t);
        }
        self.tracks = kept;

        // New tracks. On the very first frame they start confirmed.
        let status = if self.frame_count == 1 {
            TrackStatus::Confirmed
        } else {
            TrackStatus::Tentative
        };
        for &di in &fresh {
            let det = &detections[di];
            if det.score < self.cfg.new_track_thresh {
                continue;
            }
            let mut bbox = det.bbox;
            if let Some(width) = self.cfg.wrap_width {
                let cx = bbox.center().0;
                bbox = bbox.shifted_x(cx.rem_euclid(width) - cx);
            }
            self.tracks.push(Track {
                id: self.next_id,
                state: kf_init(&bbox)?,
                status,
                frames_since_update: 0,
                last_score: det.score,
                class_id: det.class_id,
            });
            self.next_id += 1;
        }

        let mut out: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed && t.frames_since_update == 0)
            .map(|t| TrackOutput {
                id: t.id,
                bbox: t.state.bbox(),
                score: t.last_score,
                status: t.status,
                class_id: t.class_id,
            })
            .collect();
        out.sort_by_key(|o| o.id);
        Ok(out)
    }
}

/// Header of the track CSV.
pub const MOT_HEADER: &str = "frame,id,x,y,w,h,score";

/// Appends `frame,id,x,y,w,h,score` rows; `frame` is 1-based.
pub fn write_mot_rows(out: &mut String, frame: usize, tracks: &[TrackOutput]) {
    for t in tracks {
        let _ = writeln!(
            out,
            "{frame},{},{:.2},{:.2},{:.2},{:.2},{:.4}",
            t.id, t.bbox.x, t.bbox.y, t.bbox.w, t.bbox.h, t.score
        );
    }
}

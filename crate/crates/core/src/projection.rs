//! Spherical projection between sensor-frame points and range-image pixels.
//!
//! Columns follow azimuth: column 0 sits at the rear seam (azimuth +/-pi),
//! azimuth decreases left to right and the forward direction (azimuth 0)
//! lands on column `width / 2`. Rows are spaced uniformly in elevation from
//! `elevation_max_deg` (row 0) down to `elevation_min_deg`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{LidarFrame, RawPoint, DEFAULT_HEIGHT, DEFAULT_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    pub width: usize,
    pub height: usize,
    pub elevation_max_deg: f64,
    pub elevation_min_deg: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            elevation_max_deg: 22.5,
            elevation_min_deg: -22.5,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!(
                "projection grid must be at least 1x1, got {}x{}",
                self.width, self.height
            )));
        }
        let (hi, lo) = (self.elevation_max_deg, self.elevation_min_deg);
        if !(hi.is_finite() && lo.is_finite() && hi > lo) {
            return Err(Error::Config(format!(
                "elevation_max ({hi}) must exceed elevation_min ({lo})"
            )));
        }
        if hi > 90.0 || lo < -90.0 {
            return Err(Error::Config("elevation limits must lie in [-90, 90]".into()));
        }
        Ok(())
    }

    fn elevation_span(&self) -> (f64, f64) {
        (
            self.elevation_max_deg.to_radians(),
            self.elevation_min_deg.to_radians(),
        )
    }

    /// Azimuth of a column's centre, in radians.
    pub fn column_azimuth(&self, col: f64) -> f64 {
        PI - col / self.width as f64 * TAU
    }

    /// Elevation of a row's centre, in radians.
    pub fn row_elevation(&self, row: f64) -> f64 {
        let (hi, lo) = self.elevation_span();
        hi - row / self.height as f64 * (hi - lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelHit {
    pub row: usize,
    pub col: usize,
    pub range_mm: u32,
}

pub fn project_point(p: [f64; 3], cfg: &ProjectionConfig) -> Result<PixelHit> {
    let [x, y, z] = p;
    let norm = (x * x + y * y + z * z).sqrt();
    if !norm.is_finite() {
        return Err(Error::OutOfFov);
    }
    let range_mm = (norm * 1000.0).round();
    if range_mm < 1.0 {
        return Err(Error::ZeroRange);
    }
    if range_mm > u32::MAX as f64 {
        return Err(Error::OutOfFov);
    }

    let azimuth = y.atan2(x);
    let turn = (PI - azimuth).rem_euclid(TAU) / TAU;
    let col = ((turn * cfg.width as f64).floor() as usize).min(cfg.width - 1);

    let (hi, lo) = cfg.elevation_span();
    let elevation = (z / norm).clamp(-1.0, 1.0).asin();
    if elevation > hi || elevation < lo {
        return Err(Error::OutOfFov);
    }
    // elevation == lo lands on `height`; fold it into the last row.
    let row = (((hi - elevation) / (hi - lo) * cfg.height as f64).floor() as usize)
        .min(cfg.height - 1);

    Ok(PixelHit {
        row,
        col,
        range_mm: range_mm as u32,
    })
}

/// Point at the centre of pixel `(row, col)` at the given range.
pub fn unproject_pixel(
    row: usize,
    col: usize,
    range_mm: u32,
    cfg: &ProjectionConfig,
) -> Result<[f64; 3]> {
    if row >= cfg.height || col >= cfg.width {
        return Err(Error::InvalidPixel {
            row,
            col,
            height: cfg.height,
            width: cfg.width,
        });
    }
    if range_mm == 0 {
        return Err(Error::ZeroRange);
    }
    let r = range_mm as f64 / 1000.0;
    let azimuth = cfg.column_azimuth(col as f64 + 0.5);
    let elevation = cfg.row_elevation(row as f64 + 0.5);
    let horizontal = r * elevation.cos();
    Ok([
        horizontal * azimuth.cos(),
        horizontal * azimuth.sin(),
        r * elevation.sin(),
    ])
}

/// Result of rasterising an unstructured cloud.
#[derive(Debug, Clone)]
pub struct SriBuild {
    pub frame: LidarFrame,
    /// Points outside the vertical field of view (or at zero range).
    pub dropped: usize,
}

/// Bins points into a range image with no interpolation or hole filling.
///
/// When several points hit one pixel the nearest wins. Exact range ties are
/// settled on `(reflectivity, nir, signal)`, smallest first, so the output
/// does not depend on input order.
pub fn pointcloud_to_sri(points: &[RawPoint], cfg: &ProjectionConfig) -> Result<SriBuild> {
    cfg.validate()?;
    let mut frame = LidarFrame::empty(cfg.width, cfg.height)?;
    let mut dropped = 0;
    for p in points {
        let hit = match project_point(p.position(), cfg) {
            Ok(hit) => hit,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        let idx = hit.row * cfg.width + hit.col;
        let incoming = (hit.range_mm, p.reflectivity, p.nir, p.signal);
        let current = frame.range()[idx];
        let replace = current == 0
            || incoming
                < (
                    current,
                    frame.reflectivity()[idx],
                    frame.nir()[idx],
                    frame.signal()[idx],
                );
        if replace {
            frame.set_pixel(idx, hit.range_mm, p.reflectivity, p.nir, p.signal);
        }
    }
    Ok(SriBuild { frame, dropped })
}

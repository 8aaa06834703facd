//! Channel normalisation and pseudo-RGB composition.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{nearest_rank, Channel, LidarFrame};
use crate::imageio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    /// Per-frame min/max of valid pixels onto 0..=255.
    Minmax,
    /// Per-frame percentile window onto 0..=255, values outside clipped.
    PercentileClip,
    /// Global: divide by a fixed divisor and saturate.
    FixedScale,
}

/// Which LiDAR channel feeds each colour plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelOrder {
    pub red: Channel,
    pub green: Channel,
    pub blue: Channel,
}

impl Default for ChannelOrder {
    fn default() -> Self {
        Self {
            red: Channel::Reflectivity,
            green: Channel::Nir,
            blue: Channel::Signal,
        }
    }
}

impl ChannelOrder {
    pub fn as_array(&self) -> [Channel; 3] {
        [self.red, self.green, self.blue]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub method: NormalizationMethod,
    /// Lower percentile for `percentile_clip`.
    pub clip_low: f64,
    /// Upper percentile for `percentile_clip`.
    pub clip_high: f64,
    /// Channel units per output level for `fixed_scale`.
    pub fixed_divisor: f64,
    pub channel_order: ChannelOrder,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            method: NormalizationMethod::PercentileClip,
            clip_low: 1.0,
            clip_high: 99.0,
            fixed_divisor: 256.0,
            channel_order: ChannelOrder::default(),
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.clip_low, self.clip_high);
        if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!(
                "clip percentiles must satisfy 0 <= low < high <= 100, got {lo}, {hi}"
            )));
        }
        if !(self.fixed_divisor.is_finite() && self.fixed_divisor > 0.0) {
            return Err(Error::Config(format!(
                "fixed_divisor must be positive, got {}",
                self.fixed_divisor
            )));
        }
        if self.channel_order.as_array().contains(&Channel::Range) {
            return Err(Error::Config(
                "channel_order takes reflectivity, nir or signal".into(),
            ));
        }
        Ok(())
    }
}

/// 8-bit, three-plane image with the same grid as its source frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoRgbImage {
    width: usize,
    height: usize,
    /// Interleaved RGB, row-major.
    data: Vec<u8>,
}

impl PseudoRgbImage {
    pub fn from_planes(width: usize, height: usize, planes: [&[u8]; 3]) -> Result<Self> {
        let n = width * height;
        if planes.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "colour planes must have {n} pixels"
            )));
        }
        let mut data = Vec::with_capacity(n * 3);
        for ((r, g), b) in planes[0].iter().zip(planes[1]).zip(planes[2]) {
            data.extend_from_slice(&[*r, *g, *b]);
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Black image.
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// One colour plane (0 = R, 1 = G, 2 = B).
    pub fn plane(&self, c: usize) -> Vec<u8> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        imageio::write_rgb8(path, self.width, self.height, &self.data)
    }
}

/// Nearest-rank percentile of the masked values via a 16-bit histogram.
fn masked_percentiles(plane: &[u16], valid: &[bool], ps: [f64; 2]) -> Option<[u16; 2]> {
    let mut hist = vec![0u32; 1 << 16];
    let mut n = 0usize;
    for (&v, &ok) in plane.iter().zip(valid) {
        if ok {
            hist[v as usize] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let ranks = ps.map(|p| nearest_rank(p, n));
    let mut out = [0u16; 2];
    let mut filled = 0;
    let mut cum = 0usize;
    for (v, &count) in hist.iter().enumerate() {
        cum += count as usize;
        while filled < 2 && cum >= ranks[filled] {
            out[filled] = v as u16;
            filled += 1;
        }
        if filled == 2 {
            break;
        }
    }
    Some(out)
}

fn masked_min_max(plane: &[u16], valid: &[bool]) -> Option<(u16, u16)> {
    plane
        .iter()
        .zip(valid)
        .filter(|(_, &ok)| ok)
        .fold(None, |acc, (&v, _)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn affine(plane: &[u16], valid: &[bool], lo: u16, hi: u16) -> Vec<u8> {
    if hi <= lo {
        return vec![0; plane.len()];
    }
    // Integer round-half-up of (v - lo) * 255 / (hi - lo).
    let span = (hi - lo) as u64;
    plane
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| {
            if !ok {
                0
            } else {
                let clipped = (v.clamp(lo, hi) - lo) as u64;
                ((clipped * 510 + span) / (2 * span)) as u8
            }
        })
        .collect()
}

/// Maps a 16-bit plane to 8 bits. Holes map to 0; valid pixels map
/// monotonically. A flat plane (min == max) maps to all zeros.
pub fn normalize_channel(
    plane: &[u16],
    valid: &[bool],
    cfg: &NormalizationConfig,
) -> Result<Vec<u8>> {
    if plane.len() != valid.len() {
        return Err(Error::DimensionMismatch(format!(
            "plane has {} pixels but mask has {}",
            plane.len(),
            valid.len()
        )));
    }
    Ok(match cfg.method {
        NormalizationMethod::Minmax => match masked_min_max(plane, valid) {
            Some((lo, hi)) => affine(plane, valid, lo, hi),
            None => vec![0; plane.len()],
        },
        NormalizationMethod::PercentileClip => {
            match masked_percentiles(plane, valid, [cfg.clip_low, cfg.clip_high]) {
                Some([lo, hi]) => affine(plane, valid, lo, hi),
                None => vec![0; plane.len()],
            }
        }
        NormalizationMethod::FixedScale => plane
            .iter()
            .zip(valid)
            .map(|(&v, &ok)| {
                if ok {
                    (v as f64 / cfg.fixed_divisor).floor().min(255.0) as u8
                } else {
                    0
                }
            })
            .collect(),
    })
}

/// Normalises the three channels named by `cfg.channel_order` into R, G, B.
pub fn compose_pseudo_rgb(frame: &LidarFrame, cfg: &NormalizationConfig) -> Result<PseudoRgbImage> {
    cfg.validate()?;
    let valid = frame.valid_mask();
    let mut planes = Vec::with_capacity(3);
    for channel in cfg.channel_order.as_array() {
        let plane = frame
            .intensity(channel)
            .ok_or_else(|| Error::Config(format!("{channel} cannot feed a colour plane")))?;
        planes.push(normalize_channel(plane, &valid, cfg)?);
    }
    let img = PseudoRgbImage::from_planes(
        frame.width(),
        frame.height(),
        [&planes[0], &planes[1], &planes[2]],
    )?;
    assert_eq!((img.width(), img.height()), (frame.width(), frame.height()));
    Ok(img)
}

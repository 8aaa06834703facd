//! Structured LiDAR frames: four co-registered planes on an H x W grid.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio;

pub const DEFAULT_WIDTH: usize = 2048;
pub const DEFAULT_HEIGHT: usize = 128;
/// Millimetres per unit of a 16-bit range plane on disk.
pub const DEFAULT_RANGE_SCALE_MM: u32 = 4;

pub const RANGE_FILE: &str = "range.png";
pub const REFLECTIVITY_FILE: &str = "reflect.png";
pub const NIR_FILE: &str = "nir.png";
pub const SIGNAL_FILE: &str = "signal.png";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Range,
    Reflectivity,
    Nir,
    Signal,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Range,
        Channel::Reflectivity,
        Channel::Nir,
        Channel::Signal,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            Channel::Range => RANGE_FILE,
            Channel::Reflectivity => REFLECTIVITY_FILE,
            Channel::Nir => NIR_FILE,
            Channel::Signal => SIGNAL_FILE,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Range => "range",
            Channel::Reflectivity => "reflectivity",
            Channel::Nir => "nir",
            Channel::Signal => "signal",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(Channel::Range),
            "reflectivity" | "reflect" => Ok(Channel::Reflectivity),
            "nir" => Ok(Channel::Nir),
            "signal" => Ok(Channel::Signal),
            other => Err(Error::Config(format!("unknown channel {other:?}"))),
        }
    }
}

/// One sensor sweep as a spherical range image.
///
/// Pixels with `range == 0` are holes: the sensor got no return there. Their
/// other channels are kept but excluded from every statistic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LidarFrame {
    width: usize,
    height: usize,
    range: Vec<u32>,
    reflectivity: Vec<u16>,
    nir: Vec<u16>,
    signal: Vec<u16>,
}

impl LidarFrame {
    pub fn new(
        width: usize,
        height: usize,
        range: Vec<u32>,
        reflectivity: Vec<u16>,
        nir: Vec<u16>,
        signal: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frame must be at least 1x1, got {width}x{height}"
            )));
        }
        let n = width * height;
        for (name, len) in [
            ("range", range.len()),
            ("reflectivity", reflectivity.len()),
            ("nir", nir.len()),
            ("signal", signal.len()),
        ] {
            if len != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} plane has {len} pixels, expected {width}x{height}"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            range,
            reflectivity,
            nir,
            signal,
        })
    }

    /// An all-hole frame.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![0; n], vec![0; n], vec![0; n], vec![0; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Range in millimetres, 0 marks a hole.
    pub fn range(&self) -> &[u32] {
        &self.range
    }

    pub fn reflectivity(&self) -> &[u16] {
        &self.reflectivity
    }

    pub fn nir(&self) -> &[u16] {
        &self.nir
    }

    pub fn signal(&self) -> &[u16] {
        &self.signal
    }

    /// One of the three intensity planes. `None` for [`Channel::Range`],
    /// which is not 16-bit in memory.
    pub fn intensity(&self, channel: Channel) -> Option<&[u16]> {
        match channel {
            Channel::Range => None,
            Channel::Reflectivity => Some(&self.reflectivity),
            Channel::Nir => Some(&self.nir),
            Channel::Signal => Some(&self.signal),
        }
    }

    /// Channel value at a flat pixel index, widened to `u32`.
    pub fn value(&self, channel: Channel, idx: usize) -> u32 {
        match channel {
            Channel::Range => self.range[idx],
            Channel::Reflectivity => self.reflectivity[idx] as u32,
            Channel::Nir => self.nir[idx] as u32,
            Channel::Signal => self.signal[idx] as u32,
        }
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.range[idx] != 0
    }

    /// `true` for pixels that carry a return.
    pub fn valid_mask(&self) -> Vec<bool> {
        self.range.iter().map(|&r| r != 0).collect()
    }

    pub fn hole_count(&self) -> usize {
        self.range.iter().filter(|&&r| r == 0).count()
    }

    pub(crate) fn set_pixel(&mut self, idx: usize, range: u32, refl: u16, nir: u16, signal: u16) {
        self.range[idx] = range;
        self.reflectivity[idx] = refl;
        self.nir[idx] = nir;
        self.signal[idx] = signal;
    }
}

/// A return from an unstructured cloud, position in metres in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub reflectivity: u16,
    pub nir: u16,
    pub signal: u16,
}

impl RawPoint {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_origin(&self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.z == 0.0
    }
}

/// Loads a frame directory, interpreting the range plane at
/// [`DEFAULT_RANGE_SCALE_MM`].
pub fn load_frame(dir: &Path) -> Result<LidarFrame> {
    load_frame_scaled(dir, DEFAULT_RANGE_SCALE_MM)
}

/// Loads `range.png`, `reflect.png`, `nir.png` and `signal.png` from `dir`.
/// Dimensions come from the files.
pub fn load_frame_scaled(dir: &Path, range_scale_mm: u32) -> Result<LidarFrame> {
    if range_scale_mm == 0 {
        return Err(Error::Config("range scale must be positive".into()));
    }
    let mut planes = Vec::with_capacity(4);
    for channel in Channel::ALL {
        let path = dir.join(channel.file_name());
        if !path.is_file() {
            return Err(Error::MissingChannel(path));
        }
        planes.push((channel, imageio::read_gray16(&path)?));
    }
    let (w, h) = (planes[0].1.width, planes[0].1.height);
    for (channel, img) in &planes[1..] {
        if img.width != w || img.height != h {
            return Err(Error::DimensionMismatch(format!(
                "{} is {}x{} but {} is {w}x{h}",
                channel.file_name(),
                img.width,
                img.height,
                RANGE_FILE
            )));
        }
    }
    let mut it = planes.into_iter().map(|(_, img)| img.data);
    let range = it
        .next()
        .unwrap()
        .into_iter()
        .map(|v| v as u32 * range_scale_mm)
        .collect();
    let refl = it.next().unwrap();
    let nir = it.next().unwrap();
    let signal = it.next().unwrap();
    LidarFrame::new(w, h, range, refl, nir, signal)
}

/// Writes the four planes as 16-bit PNGs. Range is divided by
/// `range_scale_mm`, rounded, and saturated to `u16`; a non-zero range never
/// rounds down to a hole.
pub fn save_frame(frame: &LidarFrame, dir: &Path, range_scale_mm: u32) -> Result<()> {
    if range_scale_mm == 0 {
        return Err(Error::Config("range scale must be positive".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let half = range_scale_mm / 2;
    let range: Vec<u16> = frame
        .range()
        .iter()
        .map(|&mm| match mm {
            0 => 0,
            mm => ((mm + half) / range_scale_mm).clamp(1, u16::MAX as u32) as u16,
        })
        .collect();
    let (w, h) = (frame.width(), frame.height());
    imageio::write_gray16(&dir.join(RANGE_FILE), w, h, &range)?;
    imageio::write_gray16(&dir.join(REFLECTIVITY_FILE), w, h, frame.reflectivity())?;
    imageio::write_gray16(&dir.join(NIR_FILE), w, h, frame.nir())?;
    imageio::write_gray16(&dir.join(SIGNAL_FILE), w, h, frame.signal())
}

#[derive(Debug, Deserialize)]
struct PointRow {
    x: f64,
    y: f64,
    z: f64,
    reflectivity: u16,
    nir: u16,
    signal: u16,
}

/// Reads a point CSV with header `x,y,z,reflectivity,nir,signal`. Rows at the
/// origin carry no return and are dropped.
pub fn load_points(path: &Path) -> Result<Vec<RawPoint>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_points(file)
}

pub fn read_points<R: std::io::Read>(reader: R) -> Result<Vec<RawPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    let expected = ["x", "y", "z", "reflectivity", "nir", "signal"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    let mut points = Vec::new();
    for (i, row) in rdr.deserialize::<PointRow>().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        let p = RawPoint {
            x: row.x,
            y: row.y,
            z: row.z,
            reflectivity: row.reflectivity,
            nir: row.nir,
            signal: row.signal,
        };
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(Error::parse(line, "non-finite coordinate"));
        }
        if !p.is_origin() {
            points.push(p);
        }
    }
    Ok(points)
}

/// Writes points in the format [`load_points`] reads.
pub fn write_points<W: std::io::Write>(writer: W, points: &[RawPoint]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::io("<points>", std::io::Error::other(e));
    for p in points {
        wtr.serialize(p).map_err(io_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<points>", e))
}

/// Summary of the valid pixels of one channel. Percentiles are nearest-rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub min: u32,
    pub max: u32,
    pub p01: u32,
    pub p99: u32,
    pub valid_count: usize,
}

/// 1-based nearest rank for percentile `p` (0..=100) over `n > 0` values.
pub fn nearest_rank(p: f64, n: usize) -> usize {
    ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n)
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile_sorted<T: Copy>(sorted: &[T], p: f64) -> T {
    sorted[nearest_rank(p, sorted.len()) - 1]
}

pub fn channel_stats(frame: &LidarFrame, channel: Channel) -> Result<ChannelStats> {
    let mut values: Vec<u32> = (0..frame.len())
        .filter(|&i| frame.is_valid(i))
        .map(|i| frame.value(channel, i))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyChannel);
    }
    values.sort_unstable();
    Ok(ChannelStats {
        min: values[0],
        max: *values.last().unwrap(),
        p01: percentile_sorted(&values, 1.0),
        p99: percentile_sorted(&values, 99.0),
        valid_count: values.len(),
    })
}

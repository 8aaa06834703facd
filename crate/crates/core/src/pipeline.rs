//! Per-frame orchestration (load, compose, detect, track, serialise) and
//! the three-stage timing report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::compose::{compose_pseudo_rgb, PseudoRgbImage};
use crate::config::PipelineConfig;
use crate::detections::Detector;
use crate::error::{Error, Result};
use crate::frame::{load_frame_scaled, LidarFrame};
use crate::tracker::{write_mot_rows, TrackOutput, Tracker, MOT_HEADER};

/// Frame directories under `root`, sorted by name. The directory name is the
/// frame id.
pub fn list_frames(root: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut frames = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            frames.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    frames.sort();
    Ok(frames)
}

/// Wall-clock time of one frame's stages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimes {
    /// Frame load and pseudo-RGB composition.
    pub preprocess: Duration,
    pub inference: Duration,
    /// Tracker step and MOT serialisation.
    pub postprocess: Duration,
}

impl StageTimes {
    pub fn total(&self) -> Duration {
        self.preprocess + self.inference + self.postprocess
    }
}

pub struct FrameOutput {
    pub frame: LidarFrame,
    pub image: PseudoRgbImage,
    pub tracks: Vec<TrackOutput>,
    pub times: StageTimes,
}

/// Stateful runner: frames must be fed in order.
pub struct Pipeline<'d> {
    cfg: PipelineConfig,
    detector: &'d dyn Detector,
    tracker: Tracker,
    frames_done: usize,
    mot: String,
}

impl<'d> Pipeline<'d> {
    pub fn new(cfg: PipelineConfig, detector: &'d dyn Detector) -> Result<Self> {
        cfg.validate()?;
        let tracker = Tracker::new(cfg.tracker.clone())?;
        let mut mot = String::from(MOT_HEADER);
        mot.push('\n');
        Ok(Self {
            cfg,
            detector,
            tracker,
            frames_done: 0,
            mot,
        })
    }

    pub fn run_frame(&mut self, frame_id: &str, dir: &Path) -> Result<FrameOutput> {
        let t0 = Instant::now();
        let frame = load_frame_scaled(dir, self.cfg.frame.range_scale_mm)?;
        let image = compose_pseudo_rgb(&frame, &self.cfg.normalization)?;
        let t1 = Instant::now();
        let detections = self.detector.detect(&image, frame_id);
        let t2 = Instant::now();
        let tracks = self.tracker.step(&detections)?;
        self.frames_done += 1;
        write_mot_rows(&mut self.mot, self.frames_done, &tracks);
        let t3 = Instant::now();
        Ok(FrameOutput {
            frame,
            image,
            tracks,
            times: StageTimes {
                preprocess: t1 - t0,
                inference: t2 - t1,
                postprocess: t3 - t2,
            },
        })
    }

    /// MOT CSV so far, header included.
    pub fn mot_csv(&self) -> &str {
        &self.mot
    }

    pub fn into_mot_csv(self) -> String {
        self.mot
    }
}

/// Runs every frame in order and returns the MOT CSV. When `overlay_dir` is
/// set, each frame's pseudo-RGB image with track boxes is written there as
/// `<frame id>.png`.
pub fn track_sequence(
    frames: &[(String, PathBuf)],
    detector: &dyn Detector,
    cfg: &PipelineConfig,
    overlay_dir: Option<&Path>,
) -> Result<String> {
    let mut p = Pipeline::new(cfg.clone(), detector)?;
    if let Some(dir) = overlay_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for (id, dir) in frames {
        let mut out = p.run_frame(id, dir)?;
        if let Some(odir) = overlay_dir {
            draw_tracks(&mut out.image, &out.tracks);
            out.image.save_png(&odir.join(format!("{id}.png")))?;
        }
    }
    Ok(p.into_mot_csv())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageSummary {
    pub median_ms: f64,
    pub p95_ms: f64,
}

fn summarize(ms: &mut [f64]) -> StageSummary {
    ms.sort_by(f64::total_cmp);
    let n = ms.len();
    let median = if n % 2 == 1 {
        ms[n / 2]
    } else {
        (ms[n / 2 - 1] + ms[n / 2]) / 2.0
    };
    let p95 = ms[crate::frame::nearest_rank(95.0, n) - 1];
    StageSummary {
        median_ms: median,
        p95_ms: p95,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub frames: usize,
    pub warmup: usize,
    pub preprocess: StageSummary,
    pub inference: StageSummary,
    pub postprocess: StageSummary,
    pub total: StageSummary,
}

impl TimingReport {
    pub fn from_samples(samples: &[StageTimes], warmup: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientFrames {
                needed: 1,
                available: 0,
            });
        }
        let ms = |f: &dyn Fn(&StageTimes) -> Duration| -> Vec<f64> {
            samples.iter().map(|s| f(s).as_secs_f64() * 1e3).collect()
        };
        Ok(Self {
            frames: samples.len(),
            warmup,
            preprocess: summarize(&mut ms(&|s| s.preprocess)),
            inference: summarize(&mut ms(&|s| s.inference)),
            postprocess: summarize(&mut ms(&|s| s.postprocess)),
            total: summarize(&mut ms(&|s| s.total())),
        })
    }

    /// Stage medians as `pre+inf+post` in milliseconds, one decimal.
    pub fn decomposition(&self) -> String {
        format!(
            "{:.1}+{:.1}+{:.1}",
            self.preprocess.median_ms, self.inference.median_ms, self.postprocess.median_ms
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Runs the first `warmup` frames untimed, then `repetitions` timed frames
/// cycling through the rest, all through one tracker.
pub fn bench(
    frames: &[(String, PathBuf)],
    detector: &dyn Detector,
    cfg: &PipelineConfig,
) -> Result<TimingReport> {
    let warmup = cfg.timing.warmup;
    if frames.len() < warmup + 1 {
        return Err(Error::InsufficientFrames {
            needed: warmup + 1,
            available: frames.len(),
        });
    }
    let mut p = Pipeline::new(cfg.clone(), detector)?;
    for (id, dir) in &frames[..warmup] {
        p.run_frame(id, dir)?;
    }
    let timed = &frames[warmup..];
    let mut samples = Vec::with_capacity(cfg.timing.repetitions);
    for (id, dir) in timed.iter().cycle().take(cfg.timing.repetitions) {
        samples.push(p.run_frame(id, dir)?.times);
    }
    TimingReport::from_samples(&samples, warmup)
}

/// 3x5 bitmaps of the digits 0-9, one row per entry, high bit on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

fn track_colour(id: u64) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 6] = [
        [255, 64, 64],
        [64, 255, 64],
        [64, 160, 255],
        [255, 255, 64],
        [255, 64, 255],
        [64, 255, 255],
    ];
    PALETTE[(id % PALETTE.len() as u64) as usize]
}

fn put(img: &mut PseudoRgbImage, x: i64, y: i64, rgb: [u8; 3]) {
    if y < 0 || y >= img.height() as i64 {
        return;
    }
    let w = img.width() as i64;
    img.set_pixel(y as usize, x.rem_euclid(w) as usize, rgb);
}

/// Draws each track's box outline and id. Columns wrap around the image.
pub fn draw_tracks(img: &mut PseudoRgbImage, tracks: &[TrackOutput]) {
    for t in tracks {
        let rgb = track_colour(t.id);
        let x0 = t.bbox.x.round() as i64;
        let y0 = t.bbox.y.round() as i64;
        let x1 = (t.bbox.right().round() as i64 - 1).max(x0);
        let y1 = (t.bbox.bottom().round() as i64 - 1).max(y0);
        for x in x0..=x1 {
            put(img, x, y0, rgb);
            put(img, x, y1, rgb);
        }
        for y in y0..=y1 {
            put(img, x0, y, rgb);
            put(img, x1, y, rgb);
        }
        // Label above the box, or inside when there is no room.
        let ty = if y0 >= 6 { y0 - 6 } else { y0 + 1 };
        for (k, ch) in t.id.to_string().bytes().enumerate() {
            let glyph = DIGITS[(ch - b'0') as usize];
            let gx = x0 + 4 * k as i64;
            for (r, bits) in glyph.iter().enumerate() {
                for c in 0..3 {
                    if bits & (0b100 >> c) != 0 {
                        put(img, gx + c, ty + r as i64, rgb);
                    }
                }
            }
        }
    }
}

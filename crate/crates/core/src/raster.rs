//! Even-odd scanline rasterisation of polygon sets.
//!
//! A pixel `(col, row)` is inside when its centre `(col + 0.5, row + 0.5)`
//! is, with left/top edges inclusive and right/bottom edges exclusive, the
//! same convention as a box covering `[x, x + w) x [y, y + h)`.

use crate::geometry::Polygon;

/// How columns outside `[0, width)` are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnMode {
    Clip,
    /// Columns wrap modulo the width (panoramic images).
    Wrap,
}

/// Flat indices (`row * width + col`) of covered pixels, sorted and unique.
/// Pieces are unioned; each piece is filled even-odd on its own.
pub fn rasterize(polygons: &[Polygon], width: usize, height: usize, mode: ColumnMode) -> Vec<u32> {
    let mut pixels = Vec::new();
    let mut xs = Vec::new();
    for poly in polygons {
        if poly.len() < 3 {
            continue;
        }
        let (ymin, ymax) = poly
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[1]), hi.max(v[1])));
        let first_row = ((ymin - 0.5).ceil().max(0.0)) as usize;
        let last_row = ((ymax - 0.5).ceil() as i64 - 1).min(height as i64 - 1);
        if last_row < first_row as i64 {
            continue;
        }
        for row in first_row..=last_row as usize {
            let yc = row as f64 + 0.5;
            xs.clear();
            for (i, a) in poly.iter().enumerate() {
                let b = &poly[(i + 1) % poly.len()];
                if (a[1] <= yc && yc < b[1]) || (b[1] <= yc && yc < a[1]) {
                    xs.push(a[0] + (yc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
                }
            }
            xs.sort_by(f64::total_cmp);
            for span in xs.chunks_exact(2) {
                let c0 = (span[0] - 0.5).ceil() as i64;
                let c1 = (span[1] - 0.5).ceil() as i64;
                let base = (row * width) as u32;
                match mode {
                    ColumnMode::Clip => {
                        let (c0, c1) = (c0.max(0), c1.min(width as i64));
                        pixels.extend((c0..c1).map(|c| base + c as u32));
                    }
                    ColumnMode::Wrap => {
                        // A span wider than the image covers the whole row.
                        let c1 = c1.min(c0 + width as i64);
                        pixels.extend(
                            (c0..c1).map(|c| base + c.rem_euclid(width as i64) as u32),
                        );
                    }
                }
            }
        }
    }
    pixels.sort_unstable();
    pixels.dedup();
    pixels
}

/// IoU of two sorted, unique pixel sets. Zero when both are empty.
pub fn pixel_iou(a: &[u32], b: &[u32]) -> f64 {
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

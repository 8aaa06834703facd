//! Boxes, polygons and box IoU.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel coordinate `[x, y]`.
pub type Vertex = [f64; 2];

/// Closed polygon; the last vertex connects back to the first.
pub type Polygon = Vec<Vertex>;

/// Axis-aligned box, `(x, y)` is the top-left corner, all values in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Builds a box and rejects non-finite values or non-positive sizes.
    pub fn checked(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self::new(x, y, w, h);
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) {
            return Err(Error::BadBox(format!("non-finite value in {self:?}")));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::BadBox(format!(
                "width and height must be positive, got {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Tight hull of a set of vertices. `None` for an empty iterator.
    pub fn hull<'a>(vertices: impl IntoIterator<Item = &'a Vertex>) -> Option<Self> {
        let mut it = vertices.into_iter();
        let first = it.next()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first[0], first[1], first[0], first[1]);
        for v in it {
            x0 = x0.min(v[0]);
            y0 = y0.min(v[1]);
            x1 = x1.max(v[0]);
            y1 = y1.max(v[1]);
        }
        Some(Self::new(x0, y0, x1 - x0, y1 - y0))
    }

    /// The four corners, clockwise from top-left.
    pub fn to_polygon(&self) -> Polygon {
        vec![
            [self.x, self.y],
            [self.right(), self.y],
            [self.right(), self.bottom()],
            [self.x, self.bottom()],
        ]
    }

    pub fn shifted_x(&self, dx: f64) -> Self {
        Self::new(self.x + dx, self.y, self.w, self.h)
    }

    fn intersection(&self, other: &Self) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    fn plain_iou(&self, other: &Self) -> f64 {
        let inter = self.intersection(other);
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Intersection over union.
///
/// With `wrap_width` set the x axis is a circle of that circumference (the
/// azimuth seam of a panoramic range image), and the result is the best IoU
/// over the placements of `b` shifted by whole turns.
pub fn iou(a: &BBox, b: &BBox, wrap_width: Option<f64>) -> f64 {
    match wrap_width {
        Some(width) if width > 0.0 => {
            // Bring b to the turn nearest a, then check the neighbours.
            let turns = ((a.center().0 - b.center().0) / width).round();
            let base = b.shifted_x(turns * width);
            [-width, 0.0, width]
                .iter()
                .map(|dx| a.plain_iou(&base.shifted_x(*dx)))
                .fold(0.0, f64::max)
        }
        _ => a.plain_iou(b),
    }
}

/// Clamps every vertex into `[0, width] x [0, height]`.
pub fn clamp_polygon(poly: &mut Polygon, width: f64, height: f64) {
    for v in poly.iter_mut() {
        v[0] = v[0].clamp(0.0, width);
        v[1] = v[1].clamp(0.0, height);
    }
}

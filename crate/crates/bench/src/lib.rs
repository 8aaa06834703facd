//! Deterministic synthetic inputs for the benchmarks.

use licar_core::{BBox, Detection, LidarFrame, RawPoint};
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

struct Noise(Xoshiro256PlusPlus);

impl Noise {
    fn new(seed: u64) -> Self {
        Self(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform in [0, 1).
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// A full frame with smooth structure, noise and about 6% holes.
pub fn frame(width: usize, height: usize, seed: u64) -> LidarFrame {
    let n = width * height;
    let mut noise = Noise::new(seed);
    let mut plane = |k: u64, scale: f64| -> Vec<u16> {
        (0..n)
            .map(|i| {
                let (r, c) = ((i / width) as f64, (i % width) as f64);
                let base = 1.0 + (c * 0.01 + k as f64).sin() * (r * 0.05).cos();
                (base * scale * (0.9 + 0.2 * noise.unit())) as u16
            })
            .collect()
    };
    let (refl, nir, signal) = (plane(1, 8000.0), plane(2, 1500.0), plane(3, 20000.0));
    let range = (0..n)
        .map(|_| {
            let hole = noise.unit() < 0.06;
            let r = 1000 + (noise.unit() * 80_000.0) as u32;
            if hole {
                0
            } else {
                r
            }
        })
        .collect();
    LidarFrame::new(width, height, range, refl, nir, signal)
        .expect("planes match")
}

/// Points spread over the sphere and a little beyond the vertical field.
pub fn points(n: usize, seed: u64) -> Vec<RawPoint> {
    let mut noise = Noise::new(seed);
    (0..n)
        .map(|_| {
            let az = noise.unit() * std::f64::consts::TAU;
            let el = (noise.unit() - 0.5) * 50f64.to_radians();
            let r = 1.0 + noise.unit() * 100.0;
            RawPoint {
                x: r * el.cos() * az.cos(),
                y: r * el.cos() * az.sin(),
                z: r * el.sin(),
                reflectivity: (noise.unit() * 65535.0) as u16,
                nir: 100,
                signal: 200,
            }
        })
        .collect()
}

/// `count` car-sized boxes spread across a 2048-column panorama, drifting by
/// `frame` pixels.
pub fn detections(count: usize, frame: usize, seed: u64) -> Vec<Detection> {
    // Same lanes and scores every frame; only x drifts.
    let mut noise = Noise::new(seed);
    (0..count)
        .map(|k| {
            let x = (k as f64 * 2048.0 / count as f64 + frame as f64) % 2000.0;
            let y = 20.0 + noise.unit() * 60.0;
            Detection {
                frame_id: format!("{frame:06}"),
                class_id: 0,
                score: 0.5 + 0.5 * noise.unit(),
                bbox: BBox::new(x, y, 60.0, 30.0),
                mask: Some(vec![BBox::new(x + 2.0, y + 2.0, 56.0, 26.0).to_polygon()]),
            }
        })
        .collect()
}

//! The 8-state filter against four independent 2-state (position, velocity)
//! filters, one per box coordinate, sharing the height-scaled noise.

use licar_core::kalman::{MIN_SIZE, STD_WEIGHT_POSITION, STD_WEIGHT_VELOCITY};
use licar_core::{kf_init, kf_predict, kf_update, BBox, KalmanState};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug)]
struct Scalar {
    x: f64,
    v: f64,
    pxx: f64,
    pxv: f64,
    pvv: f64,
}

#[derive(Clone, Copy, Debug)]
struct Oracle([Scalar; 4]);

impl Oracle {
    fn new(b: &BBox) -> Self {
        let z = measure(b);
        let s = b.h.max(1.0);
        let p = (2.0 * STD_WEIGHT_POSITION * s).powi(2);
        let v = (10.0 * STD_WEIGHT_VELOCITY * s).powi(2);
        Oracle(z.map(|x| Scalar { x, v: 0.0, pxx: p, pxv: 0.0, pvv: v }))
    }

    fn predict(&mut self) {
        let s = self.0[3].x.max(1.0);
        let q = (STD_WEIGHT_POSITION * s).powi(2);
        let qv = (STD_WEIGHT_VELOCITY * s).powi(2);
        for c in &mut self.0 {
            c.x += c.v;
            c.pxx += 2.0 * c.pxv + c.pvv + q;
            c.pxv += c.pvv;
            c.pvv += qv;
        }
    }

    fn update(&mut self, b: &BBox) {
        let r = (STD_WEIGHT_POSITION * self.0[3].x.max(1.0)).powi(2);
        for (c, z) in self.0.iter_mut().zip(measure(b)) {
            let s = c.pxx + r;
            let (kx, kv) = (c.pxx / s, c.pxv / s);
            let y = z - c.x;
            c.x += kx * y;
            c.v += kv * y;
            let (pxx, pxv, pvv) = (c.pxx, c.pxv, c.pvv);
            c.pxx = pxx - kx * pxx;
            c.pxv = pxv - kx * pxv;
            c.pvv = pvv - kv * pxv;
        }
    }
}

fn measure(b: &BBox) -> [f64; 4] {
    [b.x + b.w / 2.0, b.y + b.h / 2.0, b.w, b.h]
}

fn disagreement(s: &KalmanState, o: &Oracle, tol: f64) -> Option<String> {
    let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + b.abs());
    for (i, c) in o.0.iter().enumerate() {
        let pairs = [
            (s.mean[i], c.x),
            (s.mean[i + 4], c.v),
            (s.covariance[(i, i)], c.pxx),
            (s.covariance[(i, i + 4)], c.pxv),
            (s.covariance[(i + 4, i + 4)], c.pvv),
        ];
        if let Some((a, b)) = pairs.iter().find(|(a, b)| !close(*a, *b)) {
            return Some(format!("coordinate {i}: {a} vs {b}"));
        }
    }
    None
}

fn assert_agrees(s: &KalmanState, o: &Oracle, step: usize) {
    if let Some(d) = disagreement(s, o, 1e-9) {
        panic!("step {step}: {d}");
    }
}

#[test]
fn constant_velocity_track_matches_scalar_filters() {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rng = StdRng::seed_from_u64(4);
    let (vx, vy) = (2.5, -0.4);
    let truth = |f: usize| BBox::new(100.0 + vx * f as f64, 60.0 + vy * f as f64, 70.0, 30.0);
    let mut s = kf_init(&truth(0)).unwrap();
    let mut o = Oracle::new(&truth(0));
    for f in 1..=50 {
        s = kf_predict(&s);
        o.predict();
        assert_agrees(&s, &o, f);
        let b = truth(f);
        let m = BBox::new(b.x + noise.sample(&mut rng), b.y + noise.sample(&mut rng), b.w, b.h);
        s = kf_update(&s, &m).unwrap();
        o.update(&m);
        assert_agrees(&s, &o, f);
    }
}

#[test]
fn noiseless_track_prediction_error_after_burn_in() {
    let truth = |f: usize| BBox::new(10.0 + 3.0 * f as f64, 40.0 - 0.5 * f as f64, 60.0, 24.0);
    let mut s = kf_init(&truth(0)).unwrap();
    for f in 1..=50 {
        s = kf_predict(&s);
        if f > 10 {
            let (cx, cy) = s.bbox().center();
            let (tx, ty) = truth(f).center();
            assert!((cx - tx).abs() < 0.5 && (cy - ty).abs() < 0.5, "frame {f}");
        }
        s = kf_update(&s, &truth(f)).unwrap();
    }
}

fn arb_box() -> impl Strategy<Value = BBox> {
    (-300.0f64..300.0, -50.0f64..150.0, 0.5f64..200.0, 0.5f64..100.0)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, w, h))
}

proptest! {
    #[test]
    fn interleavings_match_oracle_and_stay_spd(
        start in arb_box(),
        ops in prop::collection::vec(prop::option::of(arb_box()), 1..60),
    ) {
        let mut s = kf_init(&start).unwrap();
        let mut o = Oracle::new(&start);
        for (i, op) in ops.iter().enumerate() {
            match op {
                None => {
                    s = kf_predict(&s);
                    o.predict();
                }
                Some(b) => {
                    s = kf_update(&s, b).unwrap();
                    o.update(b);
                }
            }
            prop_assert!(s.is_spd(), "step {}", i);
            // The state clamps width and height; the oracle does not.
            if o.0[2].x <= MIN_SIZE || o.0[3].x <= MIN_SIZE {
                break;
            }
            let d = disagreement(&s, &o, 1e-6);
            prop_assert!(d.is_none(), "step {}: {:?}", i, d);
        }
    }
}

#[test]
fn random_interleavings_stay_spd() {
    let mut rng = StdRng::seed_from_u64(12);
    let mut s = kf_init(&BBox::new(0.0, 0.0, 20.0, 10.0)).unwrap();
    for i in 0..10_000 {
        if rng.random_bool(0.5) {
            s = kf_predict(&s);
        } else {
            let b = BBox::new(
                rng.random_range(-500.0..500.0),
                rng.random_range(-50.0..150.0),
                rng.random_range(0.5..200.0),
                rng.random_range(0.5..100.0),
            );
            s = kf_update(&s, &b).unwrap();
        }
        assert!(s.is_spd(), "step {i}");
    }
}

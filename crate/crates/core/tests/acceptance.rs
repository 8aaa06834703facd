//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use licar_core::annotations::{parse_labelme_str, parse_yolo_seg, to_labelme, to_yolo_seg, ClassMap};
use licar_core::assignment::{min_cost_matching, CostMatrix};
use licar_core::evaluation::{evaluate, Branch, EvalGeometry, FrameMap, GroundTruth};
use licar_core::frame::save_frame;
use licar_core::pipeline::{bench, list_frames};
use licar_core::projection::{project_point, unproject_pixel, ProjectionConfig};
use licar_core::tracker::{TrackStatus, Tracker, TrackerConfig};
use licar_core::{
    kf_init, kf_predict, kf_update, split_dataset, BBox, Detection, FileReplayDetector, LidarFrame,
    PipelineConfig,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:.2?}"))
}

fn det(frame: &str, class_id: u32, score: f64, b: BBox) -> Detection {
    Detection {
        frame_id: frame.to_string(),
        class_id,
        score,
        bbox: b,
        mask: None,
    }
}

fn split_counts() -> Outcome {
    let ids: Vec<String> = (0..400).map(|i| format!("frame_{i:04}")).collect();
    let t = Instant::now();
    for seed in 0..25u64 {
        let s = split_dataset(&ids, [85, 10, 5], seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)).map_err(|e| e.to_string())?;
        let got = (s.train.len(), s.val.len(), s.test.len());
        ensure(got == (340, 40, 20), || format!("seed {seed}: {got:?}"))?;
    }
    let el = t.elapsed();
    within(el, Duration::from_secs(1))?;
    Ok(format!("340/40/20 for 25 seeds in {el:.2?}"))
}

fn brute_force_min(cost: &CostMatrix) -> f64 {
    let (n, m) = (cost.rows(), cost.cols());
    let (small, big, t) = if n <= m { (n, m, false) } else { (m, n, true) };
    let at = |i: usize, j: usize| if t { cost.get(j, i) } else { cost.get(i, j) };
    // Every injective map of the smaller side into the larger.
    fn go(i: usize, small: usize, big: usize, used: &mut Vec<bool>, acc: f64, at: &dyn Fn(usize, usize) -> f64, best: &mut f64) {
        if i == small {
            *best = best.min(acc);
            return;
        }
        for j in 0..big {
            if !used[j] {
                used[j] = true;
                go(i + 1, small, big, used, acc + at(i, j), at, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, small, big, &mut vec![false; big], 0.0, &at, &mut best);
    best
}

fn assignment_optimality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let t = Instant::now();
    for k in 0..1000 {
        let rows = rng.random_range(1..=7);
        let cols = rng.random_range(1..=7);
        // Integer costs keep every sum exact; small ranges force ties.
        let hi = if k % 2 == 0 { 1000 } else { 4 };
        let cost = CostMatrix::from_fn(rows, cols, |_, _| rng.random_range(0..hi) as f64);
        let pairs = min_cost_matching(&cost);
        ensure(pairs.len() == rows.min(cols), || format!("matrix {k}: {} pairs", pairs.len()))?;
        let mut rs: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut cs: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        rs.dedup();
        cs.sort_unstable();
        cs.dedup();
        ensure(rs.len() == pairs.len() && cs.len() == pairs.len(), || format!("matrix {k}: not a matching"))?;
        let total: f64 = pairs.iter().map(|&(r, c)| cost.get(r, c)).sum();
        let best = brute_force_min(&cost);
        ensure(total == best, || format!("matrix {k} ({rows}x{cols}): {total} vs optimum {best}"))?;
    }
    let el = t.elapsed();
    within(el, Duration::from_secs(10))?;
    Ok(format!("1000 matrices match brute force in {el:.2?}"))
}

fn projection_round_trip() -> Outcome {
    let cfg = ProjectionConfig::default();
    let half_col = PI / cfg.width as f64;
    let (emax, emin) = (cfg.elevation_max_deg.to_radians(), cfg.elevation_min_deg.to_radians());
    let half_row = (emax - emin) / cfg.height as f64 / 2.0;
    let mut rng = StdRng::seed_from_u64(5);
    let t = Instant::now();
    for i in 0..100_000 {
        let az = rng.random_range(-PI..PI);
        let el = rng.random_range(emin..emax);
        let r = rng.random_range(0.5..120.0);
        let p = [r * el.cos() * az.cos(), r * el.cos() * az.sin(), r * el.sin()];
        let hit = project_point(p, &cfg).map_err(|e| format!("point {i}: {e}"))?;
        let q = unproject_pixel(hit.row, hit.col, hit.range_mm, &cfg).map_err(|e| format!("point {i}: {e}"))?;
        let again = project_point(q, &cfg).map_err(|e| format!("point {i}: {e}"))?;
        ensure(again == hit, || format!("point {i}: {hit:?} -> {again:?}"))?;
        let rq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        ensure((rq - r).abs() <= 1e-3, || format!("point {i}: range {r} -> {rq}"))?;
        let daz = (q[1].atan2(q[0]) - az + PI).rem_euclid(TAU) - PI;
        let del = (q[2] / rq).asin() - el;
        ensure(daz.abs() <= half_col + 1e-12 && del.abs() <= half_row + 1e-12, || {
            format!("point {i}: ray off by ({daz:e}, {del:e})")
        })?;
    }
    let el = t.elapsed();
    within(el, Duration::from_secs(5))?;
    Ok(format!("100000 points in {el:.2?}"))
}

/// Integer box `[x, y, w, h]`.
type IBox = [i64; 4];

fn to_bbox(b: IBox) -> BBox {
    BBox::new(b[0] as f64, b[1] as f64, b[2] as f64, b[3] as f64)
}

fn inter_union(a: IBox, b: IBox) -> (i64, i64) {
    let w = ((a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0])).max(0);
    let h = ((a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1])).max(0);
    let i = w * h;
    (i, a[2] * a[3] + b[2] * b[3] - i)
}

/// Ground truth `(class, box)` and detections `(class, score, box)` of one frame.
type SceneFrame = (Vec<(u32, IBox)>, Vec<(u32, f64, IBox)>);

struct Scene {
    frames: Vec<SceneFrame>,
}

fn random_box(rng: &mut StdRng) -> IBox {
    let w = rng.random_range(4..30);
    let h = rng.random_range(4..30);
    [rng.random_range(0..200 - w), rng.random_range(0..100 - h), w, h]
}

fn random_scene(rng: &mut StdRng) -> Scene {
    let frames = (0..rng.random_range(1..5))
        .map(|_| {
            let gts: Vec<(u32, IBox)> = (0..rng.random_range(0..6))
                .map(|_| (rng.random_range(0..2), random_box(rng)))
                .collect();
            let mut dets = Vec::new();
            for &(c, b) in &gts {
                if rng.random_bool(0.8) {
                    let mut j = b;
                    for v in &mut j {
                        *v += rng.random_range(-3..=3);
                    }
                    j[2] = j[2].max(1);
                    j[3] = j[3].max(1);
                    j[0] = j[0].clamp(0, 200 - j[2]);
                    j[1] = j[1].clamp(0, 100 - j[3]);
                    let cls = if rng.random_bool(0.9) { c } else { 1 - c };
                    dets.push((cls, rng.random_range(1..=20) as f64 * 0.05, j));
                }
            }
            for _ in 0..rng.random_range(0..3) {
                dets.push((rng.random_range(0..2), rng.random_range(1..=20) as f64 * 0.05, random_box(rng)));
            }
            (gts, dets)
        })
        .collect();
    Scene { frames }
}

/// AP per threshold percentage (50, 55, ..., 95), averaged over the classes
/// present in the ground truth, counted from scratch with integer IoU tests.
fn recount_ap(scene: &Scene) -> Vec<f64> {
    let mut classes: Vec<u32> = scene.frames.iter().flat_map(|f| f.0.iter().map(|g| g.0)).collect();
    classes.sort_unstable();
    classes.dedup();
    (0..10)
        .map(|k| {
            let t = 50 + 5 * k as i64;
            let mut total = 0.0;
            for &c in &classes {
                let mut flags: Vec<(f64, bool)> = Vec::new();
                let mut n_gt = 0usize;
                for (gts, dets) in &scene.frames {
                    let g: Vec<IBox> = gts.iter().filter(|x| x.0 == c).map(|x| x.1).collect();
                    n_gt += g.len();
                    let mut d: Vec<(f64, IBox)> = dets.iter().filter(|x| x.0 == c).map(|x| (x.1, x.2)).collect();
                    d.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                    let mut taken = vec![false; g.len()];
                    for (s, db) in d {
                        let mut best: Option<(usize, (i64, i64))> = None;
                        for (gi, &gb) in g.iter().enumerate() {
                            let (i, u) = inter_union(db, gb);
                            if taken[gi] || 100 * i < t * u {
                                continue;
                            }
                            if best.is_none_or(|(_, (bi, bu))| i * bu > bi * u) {
                                best = Some((gi, (i, u)));
                            }
                        }
                        if let Some((gi, _)) = best {
                            taken[gi] = true;
                        }
                        flags.push((s, best.is_some()));
                    }
                }
                flags.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                // (tp, fp) after each complete score group.
                let mut points: Vec<(usize, usize)> = Vec::new();
                let (mut tp, mut fp) = (0, 0);
                for (i, f) in flags.iter().enumerate() {
                    if f.1 {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                    if i + 1 == flags.len() || flags[i + 1].0 != f.0 {
                        points.push((tp, fp));
                    }
                }
                let mut sum = 0.0;
                for r in 0..=100usize {
                    let best = points
                        .iter()
                        .filter(|(tp, _)| tp * 100 >= r * n_gt)
                        .map(|&(tp, fp)| tp as f64 / (tp + fp) as f64)
                        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
                    sum += best.unwrap_or(0.0);
                }
                total += sum / 101.0;
            }
            total / classes.len() as f64
        })
        .collect()
}

fn scene_maps(scene: &Scene) -> (FrameMap<Detection>, FrameMap<GroundTruth>) {
    let mut dm = FrameMap::new();
    let mut gm = FrameMap::new();
    for (i, (gts, dets)) in scene.frames.iter().enumerate() {
        let id = format!("{i}");
        gm.insert(
            id.clone(),
            gts.iter()
                .map(|&(c, b)| GroundTruth {
                    class_id: c,
                    bbox: to_bbox(b),
                    polygons: vec![to_bbox(b).to_polygon()],
                })
                .collect(),
        );
        dm.insert(id.clone(), dets.iter().map(|&(c, s, b)| det(&id, c, s, to_bbox(b))).collect());
    }
    (dm, gm)
}

fn evaluation_oracle() -> Outcome {
    // Ground truth scored against itself.
    let mut rng = StdRng::seed_from_u64(3);
    let mut gm = FrameMap::new();
    let mut dm = FrameMap::new();
    for f in 0..6 {
        let id = format!("{f}");
        let boxes: Vec<IBox> = (0..4).map(|_| random_box(&mut rng)).collect();
        let gts: Vec<GroundTruth> = boxes
            .iter()
            .map(|&b| GroundTruth { class_id: 0, bbox: to_bbox(b), polygons: vec![to_bbox(b).to_polygon()] })
            .collect();
        dm.insert(
            id.clone(),
            gts.iter()
                .map(|g| Detection { mask: Some(g.polygons.clone()), ..det(&id, 0, 0.9, g.bbox) })
                .collect(),
        );
        gm.insert(id, gts);
    }
    let geom = EvalGeometry::new(200, 100);
    for branch in [Branch::Box, Branch::Mask] {
        let r = evaluate(&dm, &gm, branch, &geom);
        let v = [r.precision, r.recall, r.ap50, r.map50_95];
        ensure(v == [1.0; 4], || format!("{branch} self-evaluation gave {v:?}"))?;
    }

    // Random scenes against the recount.
    let mut scenes = 0;
    while scenes < 50 {
        let scene = random_scene(&mut rng);
        if scene.frames.iter().all(|f| f.0.is_empty()) {
            continue;
        }
        scenes += 1;
        let want = recount_ap(&scene);
        let (dm, gm) = scene_maps(&scene);
        for branch in [Branch::Box, Branch::Mask] {
            let r = evaluate(&dm, &gm, branch, &geom);
            for (k, (a, b)) in r.ap_per_threshold.iter().zip(&want).enumerate() {
                ensure((a - b).abs() <= 1e-9, || format!("scene {scenes} {branch} t{k}: {a} vs {b}"))?;
            }
            let m = want.iter().sum::<f64>() / 10.0;
            ensure((r.map50_95 - m).abs() <= 1e-9, || format!("scene {scenes} {branch}: mAP {} vs {m}", r.map50_95))?;
        }
    }

    // One detection at IoU 0.57: a hit at 0.50 and 0.55 only.
    let mut gm = FrameMap::new();
    let mut dm = FrameMap::new();
    gm.insert("a".to_string(), vec![GroundTruth::from(&det("a", 0, 1.0, BBox::new(0.0, 0.0, 100.0, 100.0)))]);
    dm.insert("a".to_string(), vec![det("a", 0, 0.8, BBox::new(0.0, 0.0, 100.0, 57.0))]);
    for branch in [Branch::Box, Branch::Mask] {
        let r = evaluate(&dm, &gm, branch, &EvalGeometry::new(200, 200));
        ensure((r.map50_95 - 0.2).abs() <= 1e-9, || format!("{branch}: IoU 0.57 gave {}", r.map50_95))?;
    }
    Ok("self-evaluation exact, 50 scenes agree with recount, IoU 0.57 -> 0.2".into())
}

fn tracker_lifecycle() -> Outcome {
    let cfg = TrackerConfig::default();
    let mut rng = StdRng::seed_from_u64(21);
    let noise = Normal::new(0.0, 1.0).unwrap();

    // Five car-sized objects in separate lanes at constant velocity, over
    // several noise seeds.
    let mut switches = 0;
    for seed in 0..10 {
        let starts: Vec<(f64, f64, f64)> = (0..5)
            .map(|k| (200.0 + 300.0 * k as f64, 4.0 + 24.0 * k as f64, rng.random_range(-3.0..3.0)))
            .collect();
        let mut tracker = Tracker::new(cfg.clone()).map_err(|e| e.to_string())?;
        let mut owner: HashMap<usize, u64> = HashMap::new();
        for f in 0..100 {
            let truth: Vec<BBox> = starts
                .iter()
                .map(|&(x, y, v)| BBox::new(x + v * f as f64, y, 80.0, 32.0))
                .collect();
            let dets: Vec<Detection> = truth
                .iter()
                .map(|b| {
                    let mut n = || noise.sample(&mut rng);
                    det("s", 0, 0.9, BBox::new(b.x + n(), b.y + n(), b.w + n(), b.h + n()))
                })
                .collect();
            let out = tracker.step(&dets).map_err(|e| e.to_string())?;
            ensure(out.len() == 5, || format!("seed {seed} frame {f}: {} tracks reported", out.len()))?;
            for (k, t) in truth.iter().enumerate() {
                let best = out
                    .iter()
                    .max_by(|a, b| licar_core::iou(&a.bbox, t, None).total_cmp(&licar_core::iou(&b.bbox, t, None)))
                    .unwrap();
                if owner.insert(k, best.id).is_some_and(|prev| prev != best.id) {
                    switches += 1;
                }
            }
        }
    }
    ensure(switches == 0, || format!("{switches} id switches"))?;

    // Starvation: gone exactly when frames_since_update exceeds the buffer.
    let mut tracker = Tracker::new(cfg.clone()).map_err(|e| e.to_string())?;
    let b = BBox::new(50.0, 20.0, 30.0, 15.0);
    for _ in 0..10 {
        tracker.step(&[det("s", 0, 0.9, b)]).map_err(|e| e.to_string())?;
    }
    for miss in 1..=cfg.track_buffer + 1 {
        tracker.step(&[]).map_err(|e| e.to_string())?;
        let alive = tracker.tracks().iter().find(|t| t.id == 1);
        if miss <= cfg.track_buffer {
            ensure(
                alive.is_some_and(|t| t.status == TrackStatus::Lost && t.frames_since_update == miss),
                || format!("track missing or wrong after {miss} misses"),
            )?;
        } else {
            ensure(alive.is_none(), || format!("track survived {miss} misses"))?;
            ensure(tracker.removed_last_step().iter().any(|t| t.id == 1), || "removal not reported".into())?;
        }
    }

    // Below the spawn threshold nothing is ever created.
    let mut tracker = Tracker::new(cfg).map_err(|e| e.to_string())?;
    for _ in 0..50 {
        let out = tracker.step(&[det("s", 0, 0.72, b)]).map_err(|e| e.to_string())?;
        ensure(out.is_empty() && tracker.tracks().is_empty(), || "score 0.72 spawned a track".into())?;
    }
    Ok("0 id switches over 10 x 100 frames, removal at miss 21, 0.72 never spawns".into())
}

fn kalman_convergence() -> Outcome {
    let target = BBox::new(300.0, 40.0, 60.0, 24.0);
    let mut s = kf_init(&BBox::new(310.0, 44.0, 55.0, 26.0)).map_err(|e| e.to_string())?;
    let mut settled = None;
    for k in 1..=100 {
        s = kf_update(&kf_predict(&s), &target).map_err(|e| e.to_string())?;
        let v = s.velocity().iter().map(|x| x * x).sum::<f64>().sqrt();
        if v < 1e-3 && settled.is_none() {
            settled = Some(k);
        }
    }
    let v = s.velocity().iter().map(|x| x * x).sum::<f64>().sqrt();
    ensure(v < 1e-3, || format!("velocity norm {v} after 100 updates"))?;

    let mut rng = StdRng::seed_from_u64(99);
    let mut s = kf_init(&BBox::new(0.0, 0.0, 20.0, 10.0)).map_err(|e| e.to_string())?;
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
            s = kf_update(&s, &b).map_err(|e| format!("step {i}: {e}"))?;
        }
        ensure(s.is_spd(), || format!("covariance not SPD after step {i}"))?;
    }
    Ok(format!(
        "velocity < 1e-3 after {} updates, SPD through 10000 steps",
        settled.unwrap_or(100)
    ))
}

fn realtime_budget() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (w, h) = (2048usize, 128usize);
    let mut rng = StdRng::seed_from_u64(8);
    let frames_dir = dir.path().join("frames");
    let mut jsonl = String::new();
    for f in 0..20 {
        let n = w * h;
        let mut plane = |scale: f64| -> Vec<u16> {
            (0..n)
                .map(|i| {
                    let (r, c) = ((i / w) as f64, (i % w) as f64);
                    let base = (c * 0.01 + f as f64 * 0.1).sin() * (r * 0.05).cos();
                    ((base + 1.0) * scale + rng.random_range(0.0..scale * 0.2)) as u16
                })
                .collect()
        };
        let refl = plane(8000.0);
        let nir = plane(1500.0);
        let signal = plane(20000.0);
        let range: Vec<u32> = (0..n).map(|i| if i % 17 == 0 { 0 } else { 2000 + (i % 5000) as u32 * 8 }).collect();
        let frame = LidarFrame::new(w, h, range, refl, nir, signal).map_err(|e| e.to_string())?;
        let id = format!("{f:04}");
        save_frame(&frame, &frames_dir.join(&id), 4).map_err(|e| e.to_string())?;
        for k in 0..8 {
            let x = (k as f64 * 250.0 + f as f64 * 3.0) % 2000.0;
            jsonl.push_str(&format!(
                "{{\"frame_id\":\"{id}\",\"score\":0.9,\"bbox\":[{x},40,60,30],\"polygon\":[[{x},40,{r},40,{r},70,{x},70]]}}\n",
                r = x + 60.0
            ));
        }
    }
    let dets = dir.path().join("dets.jsonl");
    std::fs::write(&dets, jsonl).map_err(|e| e.to_string())?;

    let mut cfg = PipelineConfig::default();
    cfg.timing.warmup = 5;
    cfg.timing.repetitions = 60;
    let frames = list_frames(&frames_dir).map_err(|e| e.to_string())?;
    let detector = FileReplayDetector::from_file(&dets).map_err(|e| e.to_string())?;
    let report = bench(&frames, &detector, &cfg).map_err(|e| e.to_string())?;
    let med = report.total.median_ms;
    ensure(med < 33.3, || format!("median {med:.2} ms per frame ({})", report.decomposition()))?;
    Ok(format!(
        "median {med:.2} ms per 2048x128 frame, pre+inf+post {}",
        report.decomposition()
    ))
}

fn annotation_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(17);
    let (w, h) = (2048u32, 128u32);
    let mut multi = 0;
    for doc_idx in 0..200 {
        let mut shapes = Vec::new();
        let n_inst = rng.random_range(1..6);
        for g in 0..n_inst {
            let pieces = if rng.random_bool(0.4) { rng.random_range(2..4) } else { 1 };
            if pieces > 1 {
                multi += 1;
            }
            for _ in 0..pieces {
                let cx = rng.random_range(20.0..2028.0);
                let cy = rng.random_range(10.0..118.0);
                let nv = rng.random_range(3..9);
                let pts: Vec<[f64; 2]> = (0..nv)
                    .map(|k| {
                        let a = TAU * k as f64 / nv as f64;
                        let r = rng.random_range(3.0..9.0);
                        [cx + r * a.cos(), cy + r * a.sin()]
                    })
                    .collect();
                shapes.push(serde_json::json!({
                    "label": "car", "points": pts,
                    "group_id": if pieces > 1 { Some(g) } else { None },
                    "shape_type": "polygon",
                }));
            }
        }
        let doc = serde_json::json!({"shapes": shapes, "imageWidth": w, "imageHeight": h}).to_string();
        let mut classes = ClassMap::default();
        let first = parse_labelme_str(&doc, &mut classes).map_err(|e| e.to_string())?.instances;
        ensure(first.len() == n_inst, || format!("doc {doc_idx}: {} instances", first.len()))?;
        // Through LabelMe export and back, then YOLO-seg and back.
        let lm = to_labelme(&first, w, h, None);
        let second = parse_labelme_str(&lm, &mut classes).map_err(|e| e.to_string())?.instances;
        let third = parse_yolo_seg(&to_yolo_seg(&second, w, h), w, h).map_err(|e| e.to_string())?;
        ensure(third.len() == first.len(), || format!("doc {doc_idx}: instance count changed"))?;
        for (i, (a, b)) in first.iter().zip(&third).enumerate() {
            ensure(a.polygons.len() == b.polygons.len(), || format!("doc {doc_idx} instance {i}: piece count"))?;
            for (pa, pb) in a.polygons.iter().zip(&b.polygons) {
                let n = pa.len();
                let close = |u: &[f64; 2], v: &[f64; 2]| {
                    (u[0] - v[0]).abs() / w as f64 <= 1e-6 && (u[1] - v[1]).abs() / h as f64 <= 1e-6
                };
                let ok = pb.len() == n && (0..n).any(|r| (0..n).all(|k| close(&pa[(k + r) % n], &pb[k])));
                ensure(ok, || format!("doc {doc_idx} instance {i}: vertices moved"))?;
            }
        }
    }
    Ok(format!("200 documents, {multi} multi-piece instances preserved"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("dataset split", split_counts),
        ("assignment optimality", assignment_optimality),
        ("projection round trip", projection_round_trip),
        ("evaluation oracle", evaluation_oracle),
        ("tracker lifecycle", tracker_lifecycle),
        ("kalman convergence", kalman_convergence),
        ("real-time budget", realtime_budget),
        ("annotation round trip", annotation_round_trip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.2?}]", t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{:.2?}]", t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use landing_core::detection::{DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_IOU_THRESHOLD};
use landing_core::{confidence_filter, iou, nms, BoundingBox, Detection, DetectionFrame};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// IoU straight from corner coordinates.
fn reference_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax0, ax1, ay0, ay1) = (
        a.x - a.w / 2.0,
        a.x + a.w / 2.0,
        a.y - a.h / 2.0,
        a.y + a.h / 2.0,
    );
    let (bx0, bx1, by0, by1) = (
        b.x - b.w / 2.0,
        b.x + b.w / 2.0,
        b.y - b.h / 2.0,
        b.y + b.h / 2.0,
    );
    let ix = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let iy = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = ix * iy;
    let union = a.w * a.h + b.w * b.h - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Kept set as the fixpoint of "no higher-ranked kept box overlaps me",
/// evaluated by repeated full passes over all pairs.
fn reference_nms(frame: &DetectionFrame, thr: f64) -> Vec<usize> {
    let d = &frame.detections;
    let n = d.len();
    let outranks = |j: usize, i: usize| {
        d[j].confidence > d[i].confidence || (d[j].confidence == d[i].confidence && j < i)
    };
    let mut kept = vec![true; n];
    loop {
        let next: Vec<bool> = (0..n)
            .map(|i| {
                !(0..n).any(|j| {
                    j != i
                        && kept[j]
                        && outranks(j, i)
                        && reference_iou(&d[i].bbox, &d[j].bbox) > thr
                })
            })
            .collect();
        if next == kept {
            break;
        }
        kept = next;
    }
    (0..n).filter(|&i| kept[i]).collect()
}

fn random_frame<R: Rng>(rng: &mut R, max: usize) -> DetectionFrame {
    let n = rng.random_range(0..=max);
    let dets = (0..n)
        .map(|_| {
            let b = BoundingBox::new(
                rng.random_range(0.0..200.0),
                rng.random_range(0.0..200.0),
                rng.random_range(5.0..80.0),
                rng.random_range(5.0..80.0),
            );
            // Coarse confidences so ties happen.
            Detection::new(b, (rng.random_range(0..20) as f64) / 20.0)
        })
        .collect();
    DetectionFrame::new(0.0, dets)
}

#[test]
fn nms_matches_fixpoint_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let frame = random_frame(&mut rng, 50);
        let filtered = confidence_filter(&frame, DEFAULT_CONFIDENCE_THRESHOLD);
        let got = nms(&filtered, DEFAULT_IOU_THRESHOLD);
        let want: Vec<Detection> = reference_nms(&filtered, DEFAULT_IOU_THRESHOLD)
            .into_iter()
            .map(|i| filtered.detections[i])
            .collect();
        let mut g = got.detections.clone();
        let mut w = want.clone();
        let key = |d: &Detection| {
            (
                d.bbox.x.to_bits(),
                d.bbox.y.to_bits(),
                d.bbox.w.to_bits(),
                d.bbox.h.to_bits(),
                d.confidence.to_bits(),
            )
        };
        g.sort_by_key(key);
        w.sort_by_key(key);
        assert_eq!(g, w);
    }
}

#[test]
fn iou_matches_pixel_grid_count() {
    // Integer-aligned boxes: count shared unit cells.
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..500 {
        let mut cells = || {
            let x0 = rng.random_range(0..40i32);
            let y0 = rng.random_range(0..40i32);
            let w = rng.random_range(1..30i32);
            let h = rng.random_range(1..30i32);
            (x0, y0, w, h)
        };
        let (a, b) = (cells(), cells());
        let inside = |(x0, y0, w, h): (i32, i32, i32, i32), x: i32, y: i32| {
            x >= x0 && x < x0 + w && y >= y0 && y < y0 + h
        };
        let (mut inter, mut union) = (0, 0);
        for x in 0..80 {
            for y in 0..80 {
                let (ia, ib) = (inside(a, x, y), inside(b, x, y));
                inter += (ia && ib) as i32;
                union += (ia || ib) as i32;
            }
        }
        let bb = |(x0, y0, w, h): (i32, i32, i32, i32)| {
            BoundingBox::from_extents(x0 as f64, y0 as f64, (x0 + w) as f64, (y0 + h) as f64)
        };
        let got = iou(&bb(a), &bb(b));
        assert!((got - inter as f64 / union as f64).abs() < 1e-12);
    }
}

#[test]
fn nms_f32() {
    let f = DetectionFrame::<f32>::new(
        0.0,
        vec![
            Detection::new(BoundingBox::new(10.0, 10.0, 10.0, 10.0), 0.9),
            Detection::new(BoundingBox::new(11.0, 10.0, 10.0, 10.0), 0.8),
            Detection::new(BoundingBox::new(40.0, 10.0, 10.0, 10.0), 0.7),
        ],
    );
    let out = nms(&f, 0.4);
    assert_eq!(out.len(), 2);
    assert_eq!(out.detections[0].confidence, 0.9);
}

fn arb_box() -> impl Strategy<Value = BoundingBox> {
    (0.0..300.0f64, 0.0..300.0f64, 0.5..100.0f64, 0.5..100.0f64)
        .prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
}

fn arb_frame() -> impl Strategy<Value = DetectionFrame> {
    prop::collection::vec((arb_box(), 0.0..=1.0f64), 0..30).prop_map(|v| {
        DetectionFrame::new(
            0.0,
            v.into_iter().map(|(b, c)| Detection::new(b, c)).collect(),
        )
    })
}

proptest! {
    #[test]
    fn iou_symmetric(a in arb_box(), b in arb_box()) {
        prop_assert_eq!(iou(&a, &b).to_bits(), iou(&b, &a).to_bits());
    }

    #[test]
    fn iou_self_is_one(a in arb_box()) {
        prop_assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_translation_invariant(a in arb_box(), b in arb_box(), dx in -500.0..500.0f64, dy in -500.0..500.0f64) {
        let shift = |r: &BoundingBox| BoundingBox::new(r.x + dx, r.y + dy, r.w, r.h);
        prop_assert!((iou(&a, &b) - iou(&shift(&a), &shift(&b))).abs() < 1e-12);
    }

    #[test]
    fn nms_confidences_non_increasing(f in arb_frame(), thr in 0.0..1.0f64) {
        let out = nms(&f, thr);
        prop_assert!(out.detections.windows(2).all(|w| w[0].confidence >= w[1].confidence));
    }

    #[test]
    fn nms_idempotent(f in arb_frame(), thr in 0.0..1.0f64) {
        let once = nms(&f, thr);
        prop_assert_eq!(nms(&once, thr), once);
    }

    #[test]
    fn filter_then_nms_never_grows(f in arb_frame()) {
        let out = nms(&confidence_filter(&f, DEFAULT_CONFIDENCE_THRESHOLD), DEFAULT_IOU_THRESHOLD);
        prop_assert!(out.len() <= f.len());
    }

    #[test]
    fn suppressed_have_witness(f in arb_frame(), thr in 0.0..1.0f64) {
        let out = nms(&f, thr);
        let mut remaining = out.detections.clone();
        for d in &f.detections {
            if let Some(pos) = remaining.iter().position(|k| k == d) {
                remaining.swap_remove(pos);
                continue;
            }
            prop_assert!(out
                .detections
                .iter()
                .any(|k| k.confidence >= d.confidence && iou(&k.bbox, &d.bbox) > thr));
        }
    }
}

mod common;

use landing_core::geometry::tags::{observe_corners, planar_board};
use landing_core::geometry::{homography_from_points, GeometryError};
use landing_core::{calibrate_intrinsics, project, solve_pnp, CameraIntrinsics, Pose, WorldPoint};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn orthonormality_defect(pose: &Pose) -> f64 {
    let r = pose.rotation();
    (r.transpose() * r - Matrix3::identity())
        .abs()
        .max()
        .max((r.determinant() - 1.0).abs())
}

#[test]
fn pnp_round_trip_on_tag_wall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tags = common::wall();
    let k = common::intrinsics();
    for _ in 0..1000 {
        let truth = common::random_wall_pose(&mut rng);
        let corners = observe_corners(&tags, &truth, &k).unwrap();
        assert_eq!(corners.len(), 24);
        let est = solve_pnp(&corners, &k).unwrap();
        assert!(est.rotation_error(&truth) < 1e-6);
        assert!(est.translation_error(&truth) < 1e-6);
        assert!(orthonormality_defect(&est) < 1e-9);
    }
}

#[test]
fn pnp_round_trip_random_intrinsics_non_planar() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let k = CameraIntrinsics::with_skew(
            rng.random_range(400.0..900.0),
            rng.random_range(400.0..900.0),
            rng.random_range(280.0..360.0),
            rng.random_range(200.0..280.0),
            rng.random_range(-2.0..2.0),
        )
        .unwrap();
        let truth = common::random_pose(&mut rng, 0.5, Vector3::new(0.1, -0.2, 4.0));
        let n = rng.random_range(6..15);
        let corners: Vec<_> = (0..n)
            .map(|i| {
                let w = WorldPoint::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let px = project(&w, &truth, &k).unwrap().pixel;
                landing_core::Correspondence::new(w, px, i as u32, 0)
            })
            .collect();
        let est = solve_pnp(&corners, &k).unwrap();
        assert!(
            est.rotation_error(&truth) < 1e-6,
            "{}",
            est.rotation_error(&truth)
        );
        assert!(est.translation_error(&truth) < 1e-6);
    }
}

#[test]
fn pnp_noise_monte_carlo_at_one_meter() {
    // Tag wall viewed head-on from 1 m; σ = 0.5 px corner noise.
    let tags = common::wall();
    let k = common::intrinsics();
    let truth = Pose::from_center(
        landing_core::sim::forward_camera_rotation(),
        &WorldPoint::new(0.0, 3.0, 1.1),
    )
    .unwrap();
    let clean = observe_corners(&tags, &truth, &k).unwrap();
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut errors: Vec<f64> = (0..100u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noisy = clean.clone();
            for c in &mut noisy {
                c.pixel.u += noise.sample(&mut rng);
                c.pixel.v += noise.sample(&mut rng);
            }
            let est = solve_pnp(&noisy, &k).unwrap();
            est.camera_center().distance(&truth.camera_center())
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    assert!(errors[94] < 5e-3, "95th percentile {} m", errors[94]);
}

#[test]
fn homography_matches_projective_map() {
    // Independent oracle: apply a known H directly.
    let h = Matrix3::new(1.2, 0.1, 30.0, -0.05, 0.9, 12.0, 1e-4, -2e-4, 1.0);
    let map = |x: f64, y: f64| {
        let p = h * Vector3::new(x, y, 1.0);
        (p.x / p.z, p.y / p.z)
    };
    let src = [
        (0.0, 0.0),
        (100.0, 5.0),
        (90.0, 120.0),
        (-10.0, 80.0),
        (40.0, 40.0),
    ];
    let dst: Vec<_> = src.iter().map(|&(x, y)| map(x, y)).collect();
    let est = homography_from_points(&src, &dst).unwrap();
    assert!((est - h).abs().max() < 1e-9);
}

fn board_views<R: Rng>(
    rng: &mut R,
    k: &CameraIntrinsics,
    count: usize,
) -> Vec<Vec<landing_core::Correspondence>> {
    let board = planar_board(0.2, 0.3);
    (0..count)
        .map(|_| {
            let t = Vector3::new(
                rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
                rng.random_range(1.2..2.0),
            );
            let pose = common::random_pose(rng, 0.6, t);
            observe_corners(&board, &pose, k).unwrap()
        })
        .collect()
}

#[test]
fn calibration_exact_for_any_view_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for views in 3..=8 {
        for _ in 0..10 {
            let truth = CameraIntrinsics::new(
                rng.random_range(400.0..900.0),
                rng.random_range(400.0..900.0),
                rng.random_range(280.0..360.0),
                rng.random_range(200.0..280.0),
            )
            .unwrap();
            let data = board_views(&mut rng, &truth, views);
            let est = calibrate_intrinsics(&data).unwrap();
            for (a, b) in [
                (est.fx(), truth.fx()),
                (est.fy(), truth.fy()),
                (est.cx(), truth.cx()),
                (est.cy(), truth.cy()),
            ] {
                assert!(((a - b) / b).abs() < 1e-6, "{views} views: {a} vs {b}");
            }
        }
    }
}

#[test]
fn calibration_rejects_two_views() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let data = board_views(&mut rng, &common::intrinsics(), 2);
    assert!(matches!(
        calibrate_intrinsics(&data),
        Err(GeometryError::InsufficientViews(2))
    ));
}

#[test]
fn f32_pnp_round_trip() {
    let k = CameraIntrinsics::<f32>::new(600.0, 600.0, 320.0, 240.0).unwrap();
    let truth =
        Pose::<f32>::from_axis_angle(Vector3::new(0.1, -0.2, 0.05), Vector3::new(0.1, 0.0, 2.0));
    let corners: Vec<_> = planar_board(0.2, 0.3)
        .iter()
        .flat_map(|t| t.corners())
        .enumerate()
        .map(|(i, w)| {
            let w = WorldPoint::<f32>::new(w.x as f32, w.y as f32, w.z as f32);
            let px = project(&w, &truth, &k).unwrap().pixel;
            landing_core::Correspondence::new(w, px, i as u32 / 4, (i % 4) as u8)
        })
        .collect();
    let est = solve_pnp(&corners, &k).unwrap();
    assert!(est.rotation_error(&truth) < 1e-3);
    assert!(est.translation_error(&truth) < 1e-3);
}

fn arb_pose() -> impl Strategy<Value = Pose> {
    (
        prop::array::uniform3(-1.0..1.0f64),
        0.0..3.0f64,
        prop::array::uniform3(-0.5..0.5f64),
    )
        .prop_filter_map("non-zero axis", |(axis, angle, t)| {
            let axis = Vector3::from(axis);
            (axis.norm() > 1e-3).then(|| {
                Pose::from_axis_angle(
                    axis.normalize() * angle,
                    Vector3::new(t[0], t[1], t[2] + 3.0),
                )
            })
        })
}

fn arb_intrinsics() -> impl Strategy<Value = CameraIntrinsics> {
    (
        300.0..1000.0f64,
        300.0..1000.0f64,
        200.0..400.0f64,
        150.0..300.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(fx, fy, cx, cy, s)| CameraIntrinsics::with_skew(fx, fy, cx, cy, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_consistency(
        pose in arb_pose(),
        k in arb_intrinsics(),
        p in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let w = WorldPoint::new(p[0], p[1], p[2]);
        let r = project(&w, &pose, &k).unwrap();
        let rhs = k.matrix() * pose.matrix() * Vector3::new(p[0], p[1], p[2]).push(1.0);
        let lhs = Vector3::new(r.pixel.u, r.pixel.v, 1.0) * r.depth_scale;
        prop_assert!((lhs - rhs).abs().max() < 1e-9);
    }

    #[test]
    fn pose_constructors_stay_orthonormal(pose in arb_pose()) {
        prop_assert!(orthonormality_defect(&pose) < 1e-9);
        let c = pose.camera_center();
        let again = Pose::from_center(*pose.rotation(), &c).unwrap();
        prop_assert!(orthonormality_defect(&again) < 1e-9);
        prop_assert!(again.translation_error(&pose) < 1e-9);
    }

    #[test]
    fn pnp_invariant_to_ordering(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = common::intrinsics();
        let truth = common::random_wall_pose(&mut rng);
        let mut corners = observe_corners(&common::wall(), &truth, &k).unwrap();
        let noise = Normal::new(0.0, 0.5).unwrap();
        for c in &mut corners {
            c.pixel.u += noise.sample(&mut rng);
            c.pixel.v += noise.sample(&mut rng);
        }
        let a = solve_pnp(&corners, &k).unwrap();
        let mut shuffled = corners.clone();
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let b = solve_pnp(&shuffled, &k).unwrap();
        prop_assert!(a.rotation_error(&b) < 1e-9);
        prop_assert!(a.translation_error(&b) < 1e-9);
    }
}

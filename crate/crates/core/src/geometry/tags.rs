//! Fiducial tag layouts and their corner points.
//!
//! Corners are listed counter-clockwise in the tag frame starting from
//! `(-s/2, -s/2)`, where the tag frame has `+z` along the tag normal,
//! `+x` horizontal (or world `+x` for floor tags) rotated by `roll_deg`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{project, CameraIntrinsics, Correspondence, GeometryError, Pose, WorldPoint};

/// One entry of a tag-layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSpec {
    pub id: u32,
    pub family: String,
    pub side_m: f64,
    pub center_xyz_m: [f64; 3],
    pub normal_xyz: [f64; 3],
    pub roll_deg: f64,
}

impl TagSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.side_m > 0.0) {
            return Err(format!("tag {}: side_m must be positive", self.id));
        }
        let n = Vector3::from(self.normal_xyz);
        if !(n.norm() > 1e-12) {
            return Err(format!("tag {}: normal_xyz must be non-zero", self.id));
        }
        Ok(())
    }

    /// In-plane axes `(x, y)` of the tag frame, right-handed with the normal.
    fn axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = Vector3::from(self.normal_xyz).normalize();
        let up = Vector3::z();
        let reference = if n.cross(&up).norm() < 1e-6 {
            Vector3::y()
        } else {
            up
        };
        let x0 = reference.cross(&n).normalize();
        let y0 = n.cross(&x0);
        let (s, c) = self.roll_deg.to_radians().sin_cos();
        (x0 * c + y0 * s, -x0 * s + y0 * c)
    }

    pub fn corners(&self) -> [WorldPoint; 4] {
        let (ax, ay) = self.axes();
        let center = Vector3::from(self.center_xyz_m);
        let h = self.side_m / 2.0;
        let local = [(-h, -h), (h, -h), (h, h), (-h, h)];
        local.map(|(a, b)| WorldPoint::from_vector(&(center + ax * a + ay * b)))
    }
}

/// Projects every corner of `tags` through the camera, tagging each with its
/// id and corner index.
pub fn observe_corners(
    tags: &[TagSpec],
    pose: &Pose,
    intrinsics: &CameraIntrinsics,
) -> Result<Vec<Correspondence>, GeometryError> {
    let mut out = Vec::with_capacity(tags.len() * 4);
    for tag in tags {
        for (i, corner) in tag.corners().iter().enumerate() {
            let p = project(corner, pose, intrinsics)?;
            if p.depth_scale <= 0.0 {
                return Err(GeometryError::PointAtCameraPlane { z: p.depth_scale });
            }
            out.push(Correspondence::new(*corner, p.pixel, tag.id, i as u8));
        }
    }
    Ok(out)
}

/// Six 36h11 tags (ids 0–5) in a 3×2 grid on the wall `y = wall_y`, facing `-y`.
pub fn wall_layout(wall_y: f64, side_m: f64, spacing_x: f64, rows_z: [f64; 2]) -> Vec<TagSpec> {
    let mut tags = Vec::with_capacity(6);
    for (r, &z) in rows_z.iter().enumerate() {
        for c in 0..3 {
            tags.push(TagSpec {
                id: (r * 3 + c) as u32,
                family: "36h11".into(),
                side_m,
                center_xyz_m: [(c as f64 - 1.0) * spacing_x, wall_y, z],
                normal_xyz: [0.0, -1.0, 0.0],
                roll_deg: 0.0,
            });
        }
    }
    tags
}

/// Landing pad tag lying on the floor, facing up.
pub fn floor_tag(id: u32, side_m: f64, center: [f64; 3]) -> TagSpec {
    TagSpec {
        id,
        family: "36h11".into(),
        side_m,
        center_xyz_m: center,
        normal_xyz: [0.0, 0.0, 1.0],
        roll_deg: 0.0,
    }
}

/// Planar target for calibration: the six-tag wall rebuilt in a frame where
/// the tags lie on `z = 0`.
pub fn planar_board(side_m: f64, spacing: f64) -> Vec<TagSpec> {
    let mut tags = Vec::with_capacity(6);
    for r in 0..2 {
        for c in 0..3 {
            tags.push(TagSpec {
                id: (r * 3 + c) as u32,
                family: "36h11".into(),
                side_m,
                center_xyz_m: [(c as f64 - 1.0) * spacing, (r as f64 - 0.5) * spacing, 0.0],
                normal_xyz: [0.0, 0.0, 1.0],
                roll_deg: 0.0,
            });
        }
    }
    tags
}

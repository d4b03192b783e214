use serde::{Deserialize, Serialize};

use super::PointCloud;
use crate::geometry::{AbsoluteBox, Vec2};

/// Planar rigid motion: rotate by `theta` about the origin, then translate by `(tx, ty)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl RigidTransform2D {
    pub const IDENTITY: RigidTransform2D = RigidTransform2D {
        theta: 0.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self { theta, tx, ty }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { theta: 0.0, tx, ty }
    }

    pub fn rotation(theta: f64) -> Self {
        Self {
            theta,
            tx: 0.0,
            ty: 0.0,
        }
    }

    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) + Vec2::new(self.tx, self.ty)
    }

    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        v.rotate(self.theta)
    }

    pub fn apply_box(&self, b: &AbsoluteBox) -> AbsoluteBox {
        let c = self.apply_point(b.center());
        AbsoluteBox::new(c.x, c.y, b.w, b.l, b.theta + self.theta)
    }

    pub fn inverse(&self) -> Self {
        let t = Vec2::new(self.tx, self.ty).rotate(-self.theta);
        Self {
            theta: -self.theta,
            tx: -t.x,
            ty: -t.y,
        }
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform2D) -> Self {
        let t = self.apply_point(Vec2::new(other.tx, other.ty));
        Self {
            theta: self.theta + other.theta,
            tx: t.x,
            ty: t.y,
        }
    }
}

/// Moves positions by the full transform and rotates velocities; everything else is kept.
pub fn apply_transform(cloud: &PointCloud, transform: &RigidTransform2D) -> PointCloud {
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let pos = transform.apply_point(p.position());
            let vel = transform.apply_vector(p.velocity());
            let mut q = *p;
            q.x = pos.x;
            q.y = pos.y;
            q.vx = vel.x;
            q.vy = vel.y;
            q
        })
        .collect();
    PointCloud {
        frame_id: cloud.frame_id.clone(),
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ClassLabel, RadarPoint};
    use std::f64::consts::FRAC_PI_2;

    fn point(x: f64, y: f64, vx: f64, vy: f64) -> RadarPoint {
        RadarPoint {
            x,
            y,
            vx,
            vy,
            rcs: 3.5,
            t: 0.25,
            instance_id: Some(7),
            label: ClassLabel::Car,
        }
    }

    #[test]
    fn identity_leaves_cloud_unchanged() {
        let cloud = PointCloud::new("a", vec![point(1.0, 2.0, 3.0, 4.0)]);
        assert_eq!(apply_transform(&cloud, &RigidTransform2D::IDENTITY), cloud);
    }

    #[test]
    fn quarter_turn() {
        let cloud = PointCloud::new("a", vec![point(1.0, 0.0, 1.0, 0.0)]);
        let out = apply_transform(&cloud, &RigidTransform2D::rotation(FRAC_PI_2));
        let p = out.points[0];
        assert!(p.x.abs() < 1e-15 && (p.y - 1.0).abs() < 1e-15);
        assert!(p.vx.abs() < 1e-15 && (p.vy - 1.0).abs() < 1e-15);
        assert_eq!((p.rcs, p.t, p.instance_id), (3.5, 0.25, Some(7)));
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = RigidTransform2D::new(1.1, -4.0, 7.5);
        let id = t.compose(&t.inverse());
        assert!(id.theta.abs() < 1e-12 && id.tx.abs() < 1e-12 && id.ty.abs() < 1e-12);
        let cloud = PointCloud::new("a", vec![point(12.0, -3.0, 2.0, 1.0)]);
        let back = apply_transform(&apply_transform(&cloud, &t), &t.inverse());
        let (p, q) = (cloud.points[0], back.points[0]);
        for (a, b) in [(p.x, q.x), (p.y, q.y), (p.vx, q.vx), (p.vy, q.vy)] {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

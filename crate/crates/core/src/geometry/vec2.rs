use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A planar vector or point in the bird's-eye-view plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Unsigned angle in `[0, π]` between two vectors; 0 when either is zero.
    pub fn unsigned_angle_to(self, other: Vec2) -> f64 {
        if self.norm_sq() == 0.0 || other.norm_sq() == 0.0 {
            return 0.0;
        }
        self.cross(other).abs().atan2(self.dot(other))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Reduces an angle to `[0, π)`.
pub fn canonical_angle(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `[-π, π)`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = (angle + PI).rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        -PI
    } else {
        r - PI
    }
}

/// Smallest absolute difference between two angles taken modulo π.
pub fn axial_angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_angle_range() {
        assert_eq!(canonical_angle(0.0), 0.0);
        assert!((canonical_angle(-0.25 * PI) - 0.75 * PI).abs() < 1e-15);
        assert!((canonical_angle(1.5 * PI) - 0.5 * PI).abs() < 1e-15);
        assert!(canonical_angle(-1e-300) < PI);
    }

    #[test]
    fn wrap_pi_range() {
        assert_eq!(wrap_pi(PI), -PI);
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_pi(-PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unsigned_angle_handles_zero_vectors() {
        assert_eq!(Vec2::ZERO.unsigned_angle_to(Vec2::new(1.0, 0.0)), 0.0);
        let a = Vec2::new(1.0, 0.0).unsigned_angle_to(Vec2::new(-1.0, 0.0));
        assert!((a - PI).abs() < 1e-15);
    }
}

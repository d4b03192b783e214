use serde::{Deserialize, Serialize};

use super::vec2::{canonical_angle, wrap_pi, Vec2};
use crate::error::{Error, Result};

/// Oriented rectangle in the ego frame: center, width across, length along `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsoluteBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub l: f64,
    pub theta: f64,
}

impl AbsoluteBox {
    /// Builds a box with `theta` reduced to `[0, π)`.
    pub fn new(x: f64, y: f64, w: f64, l: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            w,
            l,
            theta: canonical_angle(theta),
        }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit vector along the length axis.
    pub fn direction(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    pub fn area(&self) -> f64 {
        self.w * self.l
    }

    /// Corners in counterclockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let c = self.center();
        let u = self.direction() * (0.5 * self.l);
        let v = self.direction().perp() * (0.5 * self.w);
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center();
        let u = self.direction();
        d.dot(u).abs() <= 0.5 * self.l && d.dot(u.perp()).abs() <= 0.5 * self.w
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.x, self.y, self.w, self.l, self.theta]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.w > 0.0 && self.l > 0.0
    }
}

/// Box anchored at its owning radar point `p0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationInvariantBox {
    pub dx: f64,
    pub dy: f64,
    pub w: f64,
    pub l: f64,
    pub theta: f64,
}

/// Box anchored at `p0` and oriented relative to the baseline `p0 → p_nn`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullyInvariantBox {
    pub d: f64,
    pub phi: f64,
    pub w: f64,
    pub l: f64,
    pub theta_nn: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    Absolute,
    TranslationInvariant,
    FullyInvariant,
}

/// A box in one of the three parameterizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EncodedBox {
    Absolute(AbsoluteBox),
    TranslationInvariant(TranslationInvariantBox),
    FullyInvariant(FullyInvariantBox),
}

impl EncodedBox {
    pub fn mode(&self) -> BoxMode {
        match self {
            EncodedBox::Absolute(_) => BoxMode::Absolute,
            EncodedBox::TranslationInvariant(_) => BoxMode::TranslationInvariant,
            EncodedBox::FullyInvariant(_) => BoxMode::FullyInvariant,
        }
    }

    /// The 5-tuple regressed by the detection head.
    pub fn to_array(&self) -> [f64; 5] {
        match *self {
            EncodedBox::Absolute(b) => b.to_array(),
            EncodedBox::TranslationInvariant(b) => [b.dx, b.dy, b.w, b.l, b.theta],
            EncodedBox::FullyInvariant(b) => [b.d, b.phi, b.w, b.l, b.theta_nn],
        }
    }

    /// Reads a raw 5-tuple without canonicalizing, so network outputs pass through untouched.
    pub fn from_array(mode: BoxMode, v: [f64; 5]) -> Self {
        match mode {
            BoxMode::Absolute => EncodedBox::Absolute(AbsoluteBox {
                x: v[0],
                y: v[1],
                w: v[2],
                l: v[3],
                theta: v[4],
            }),
            BoxMode::TranslationInvariant => {
                EncodedBox::TranslationInvariant(TranslationInvariantBox {
                    dx: v[0],
                    dy: v[1],
                    w: v[2],
                    l: v[3],
                    theta: v[4],
                })
            }
            BoxMode::FullyInvariant => EncodedBox::FullyInvariant(FullyInvariantBox {
                d: v[0],
                phi: v[1],
                w: v[2],
                l: v[3],
                theta_nn: v[4],
            }),
        }
    }
}

fn baseline_angle(p0: Vec2, p_nn: Vec2) -> Result<f64> {
    let b = p_nn - p0;
    if b.norm_sq() == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok(b.angle())
}

/// Expresses `b` relative to the reference points `p0` (owner) and `p_nn` (its nearest neighbor).
pub fn encode_box(b: &AbsoluteBox, p0: Vec2, p_nn: Vec2, mode: BoxMode) -> Result<EncodedBox> {
    match mode {
        BoxMode::Absolute => Ok(EncodedBox::Absolute(*b)),
        BoxMode::TranslationInvariant => {
            let rel = b.center() - p0;
            Ok(EncodedBox::TranslationInvariant(TranslationInvariantBox {
                dx: rel.x,
                dy: rel.y,
                w: b.w,
                l: b.l,
                theta: canonical_angle(b.theta),
            }))
        }
        BoxMode::FullyInvariant => {
            let base = baseline_angle(p0, p_nn)?;
            let rel = b.center() - p0;
            let d = rel.norm();
            let phi = if d == 0.0 { 0.0 } else { wrap_pi(rel.angle() - base) };
            Ok(EncodedBox::FullyInvariant(FullyInvariantBox {
                d,
                phi,
                w: b.w,
                l: b.l,
                theta_nn: canonical_angle(b.theta - base),
            }))
        }
    }
}

/// Restores the absolute box from an encoding and the same reference points used to encode it.
pub fn decode_box(encoded: &EncodedBox, p0: Vec2, p_nn: Vec2) -> Result<AbsoluteBox> {
    match *encoded {
        EncodedBox::Absolute(b) => Ok(AbsoluteBox::new(b.x, b.y, b.w, b.l, b.theta)),
        EncodedBox::TranslationInvariant(b) => Ok(AbsoluteBox::new(
            p0.x + b.dx,
            p0.y + b.dy,
            b.w,
            b.l,
            b.theta,
        )),
        EncodedBox::FullyInvariant(b) => {
            let base = baseline_angle(p0, p_nn)?;
            let c = p0 + Vec2::from_angle(base + b.phi) * b.d;
            Ok(AbsoluteBox::new(c.x, c.y, b.w, b.l, b.theta_nn + base))
        }
    }
}

//! Vectors, unit directions and the Phong reflection primitives.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|d| - 1` accepted by operations that require a unit vector.
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Serialized as `[x, y, z]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::from_array(a)
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A unit vector in scene space.
///
/// The forward axis is `-z` and `+y` is up; see [`crate::equirect`] for how
/// directions map onto environment-map pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction(Vec3);

impl Direction {
    pub const FORWARD: Direction = Direction(Vec3::new(0.0, 0.0, -1.0));
    pub const UP: Direction = Direction(Vec3::new(0.0, 1.0, 0.0));
    /// Toward a camera placed on `+z` looking down the forward axis.
    pub const TOWARD_VIEWER: Direction = Direction(Vec3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`. Fails for zero-length or non-finite input.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::domain(format!("cannot normalize {v:?}")));
        }
        Ok(Direction(v * (1.0 / n)))
    }

    /// Wraps `v` without normalizing. Fails when `v` is not unit length.
    pub fn from_unit(v: Vec3) -> Result<Self> {
        if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::domain(format!("{v:?} is not a unit vector")));
        }
        Ok(Direction(v))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Direction(v)
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vec3::new(x, y, z))
    }

    pub fn vec(self) -> Vec3 {
        self.0
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn z(self) -> f64 {
        self.0.z
    }

    pub fn dot(self, o: Direction) -> f64 {
        self.0.dot(o.0)
    }

    /// Angle to `o` in radians, stable for nearly parallel vectors.
    pub fn angle_to(self, o: Direction) -> f64 {
        let chord = (self.0 - o.0).norm();
        2.0 * (0.5 * chord).min(1.0).asin()
    }
}

impl Neg for Direction {
    type Output = Direction;
    fn neg(self) -> Direction {
        Direction(-self.0)
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        Direction::new(Vec3::from_array(a))
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.0.to_array()
    }
}

/// Mirror direction `R = 2(L·N)N - L`.
pub fn reflect(l: Direction, n: Direction) -> Direction {
    let ln = l.dot(n);
    let r = n.0 * (2.0 * ln) - l.0;
    // |R| = 1 exactly in real arithmetic; renormalize away the rounding.
    Direction(r * (1.0 / r.norm()))
}

/// Phong specular lobe `k_s max(R·V, 0)^α`.
pub fn phong_specular(r: Direction, v: Direction, ks: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!("roughness exponent must be > 0, got {alpha}")));
    }
    Ok(ks * phong_lobe(r.dot(v), alpha))
}

/// `max(c, 0)^α` for a cosine `c`.
#[inline]
pub(crate) fn phong_lobe(cos: f64, alpha: f64) -> f64 {
    if cos <= 0.0 {
        0.0
    } else {
        cos.min(1.0).powf(alpha)
    }
}

/// Integral of `max(cos θ, 0)^α` over the sphere, `2π / (α + 1)`.
pub fn lobe_solid_angle(alpha: f64) -> f64 {
    2.0 * std::f64::consts::PI / (alpha + 1.0)
}

/// Angle at which the lobe `cos^α` decays to `ratio` of its peak.
pub fn lobe_cutoff(alpha: f64, ratio: f64) -> f64 {
    ratio.powf(1.0 / alpha).clamp(-1.0, 1.0).acos()
}

/// Orthonormal frame `(right, up)` completing `forward`.
pub(crate) fn frame(forward: Direction) -> (Vec3, Vec3) {
    let f = forward.vec();
    let helper = if f.y.abs() < 0.9 {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let right = helper.cross(f);
    let right = right * (1.0 / right.norm());
    let up = f.cross(right);
    (right, up)
}

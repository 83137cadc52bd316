//! Scalar abstraction and small vector math shared by the geometry and
//! BVH modules.
//!
//! Everything runs in `f32` by default to emulate RT-core precision; the
//! same code instantiated with `f64` is the debug mode used by the 32/64
//! agreement checks.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Floating point scalar the geometry pipeline is generic over.
///
/// Implemented for `f32` (default, emulates the RT core) and `f64`
/// (debug cross-checks only).
pub trait Real:
    Copy
    + PartialOrd
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;
    const TWO: Self;
    const INFINITY: Self;

    /// Rounds a 64-bit value into this type. Exact for `f64`.
    fn from_f64(v: f64) -> Self;
    fn from_f32(v: f32) -> Self;
    fn to_f64(self) -> f64;
    /// IEEE minNum: ignores a NaN operand.
    fn min2(self, other: Self) -> Self;
    /// IEEE maxNum: ignores a NaN operand.
    fn max2(self, other: Self) -> Self;
}

impl Real for f32 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const TWO: Self = 2.0;
    const INFINITY: Self = f32::INFINITY;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn min2(self, other: Self) -> Self {
        self.min(other)
    }
    #[inline]
    fn max2(self, other: Self) -> Self {
        self.max(other)
    }
}

impl Real for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    const TWO: Self = 2.0;
    const INFINITY: Self = f64::INFINITY;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn from_f32(v: f32) -> Self {
        v as f64
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn min2(self, other: Self) -> Self {
        self.min(other)
    }
    #[inline]
    fn max2(self, other: Self) -> Self {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T: Real> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3<T>) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3<T>) -> Vec3<T> {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    #[inline]
    pub fn axis(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Vec3<T>;
    #[inline]
    fn sub(self, o: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Vec3<T>;
    #[inline]
    fn add(self, o: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T: Real> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    /// Empty box; growing it with any point yields that point.
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::new(T::INFINITY, T::INFINITY, T::INFINITY),
            max: Vec3::new(-T::INFINITY, -T::INFINITY, -T::INFINITY),
        }
    }

    #[inline]
    pub fn grow_point(&mut self, p: Vec3<T>) {
        self.min.x = self.min.x.min2(p.x);
        self.min.y = self.min.y.min2(p.y);
        self.min.z = self.min.z.min2(p.z);
        self.max.x = self.max.x.max2(p.x);
        self.max.y = self.max.y.max2(p.y);
        self.max.z = self.max.z.max2(p.z);
    }

    #[inline]
    pub fn grow(&mut self, o: &Aabb<T>) {
        self.grow_point(o.min);
        self.grow_point(o.max);
    }

    pub fn contains(&self, o: &Aabb<T>) -> bool {
        self.min.x <= o.min.x
            && self.min.y <= o.min.y
            && self.min.z <= o.min.z
            && self.max.x >= o.max.x
            && self.max.y >= o.max.y
            && self.max.z >= o.max.z
    }

    /// Index of the longest extent (0 = x, 1 = y, 2 = z).
    pub fn longest_axis(&self) -> usize {
        let dx = self.max.x - self.min.x;
        let dy = self.max.y - self.min.y;
        let dz = self.max.z - self.min.z;
        if dx >= dy && dx >= dz {
            0
        } else if dy >= dz {
            1
        } else {
            2
        }
    }

    #[inline]
    pub fn centroid_axis(&self, axis: usize) -> T {
        match axis {
            0 => self.min.x + self.max.x,
            1 => self.min.y + self.max.y,
            _ => self.min.z + self.max.z,
        }
    }
}

/// Unit in the last place at magnitude `|x|`: the spacing of
/// representable `f32` values there.
pub fn ulp_at_f32(x: f32) -> f32 {
    let x = x.abs();
    if !x.is_finite() {
        return f32::INFINITY;
    }
    let exp = (x.to_bits() >> 23) & 0xff;
    if exp == 0 {
        // subnormal range: fixed spacing
        return f32::from_bits(1);
    }
    2f32.powi(exp as i32 - 127 - 23)
}

/// Number of representable `f32` values between `a` and `b` (0 when equal).
///
/// Uses the standard order-preserving mapping of IEEE bit patterns to
/// integers, so it is meaningful across signs and exact at boundaries.
pub fn ulp_distance_f32(a: f32, b: f32) -> u32 {
    fn key(x: f32) -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0x8000_0000 {
            bits
        } else {
            -(bits & 0x7fff_ffff)
        }
    }
    key(a).abs_diff(key(b)).min(u32::MAX as u64) as u32
}

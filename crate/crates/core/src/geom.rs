//! Small 3-vector and capsule distance toolkit.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Unit vector along `axis` (0, 1 or 2), scaled by `sign`.
    pub fn axis(axis: usize, sign: T) -> Self {
        let mut v = [T::zero(); 3];
        v[axis] = sign;
        Self::from_array(v)
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// Returns `None` for (near) zero vectors.
    pub fn try_normalize(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn normalized(self) -> Self {
        self.try_normalize().expect("normalizing a zero vector")
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn component_min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    /// Rotation about the unit `axis` by `angle` radians (Rodrigues).
    pub fn rotate_about(self, axis: Self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        self * c + axis.cross(self) * s + axis * (axis.dot(self) * (T::one() - c))
    }

    /// Removes the component along the unit vector `n`.
    pub fn reject_from(self, n: Self) -> Self {
        self - n * self.dot(n)
    }

    /// Some unit vector perpendicular to the unit vector `self`.
    pub fn any_perpendicular(self) -> Self {
        let helper = if self.x.abs() < T::lit(0.9) {
            Self::axis(0, T::one())
        } else {
            Self::axis(1, T::one())
        };
        self.cross(helper).normalized()
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.as_f64()),
            U::lit(self.y.as_f64()),
            U::lit(self.z.as_f64()),
        )
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Serialize for Vec3<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for Vec3<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[T; 3]>::deserialize(d).map(Self::from_array)
    }
}

/// Uniform draw in `[lo, hi)`; returns `lo` exactly when the range is empty.
#[inline]
pub fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

/// Uniformly distributed unit vector perpendicular to the unit vector `d`.
pub fn random_perpendicular<T: Real, R: Rng + ?Sized>(rng: &mut R, d: Vec3<T>) -> Vec3<T> {
    let e1 = d.any_perpendicular();
    let e2 = d.cross(e1);
    let phi = uniform(rng, T::zero(), T::TAU());
    let (s, c) = phi.sin_cos();
    (e1 * c + e2 * s).normalized()
}

/// Squared distance from `p` to the segment `[a, b]`.
pub fn point_segment_dist_sq<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    let t = if len_sq > T::zero() {
        ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (p - (a + ab * t)).norm_sq()
}

/// Squared distance between segments `[p1, q1]` and `[p2, q2]`.
///
/// Closest-point computation on the two parameterized segments, clamping
/// to the unit square; handles degenerate (point) segments.
pub fn segment_segment_dist_sq<T: Real>(
    p1: Vec3<T>,
    q1: Vec3<T>,
    p2: Vec3<T>,
    q2: Vec3<T>,
) -> T {
    let zero = T::zero();
    let one = T::one();
    let eps = T::epsilon();
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);

    let (s, t);
    if a <= eps && e <= eps {
        return r.norm_sq();
    }
    if a <= eps {
        s = zero;
        t = (f / e).max(zero).min(one);
    } else {
        let c = d1.dot(r);
        if e <= eps {
            t = zero;
            s = (-c / a).max(zero).min(one);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > zero {
                ((b * f - c * e) / denom).max(zero).min(one)
            } else {
                zero
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < zero {
                t0 = zero;
                s0 = (-c / a).max(zero).min(one);
            } else if t0 > one {
                t0 = one;
                s0 = ((b - c) / a).max(zero).min(one);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm_sq()
}

/// Squared distance from segment `[a, b]` to the axis-aligned box `[lo, hi]`.
///
/// The point-to-box distance along the segment is convex in the segment
/// parameter, so a golden-section search converges to the minimum.
pub fn segment_box_dist_sq<T: Real>(a: Vec3<T>, b: Vec3<T>, lo: Vec3<T>, hi: Vec3<T>) -> T {
    let box_dist = |t: T| {
        let p = a + (b - a) * t;
        let clamped = p.component_max(lo).component_min(hi);
        (p - clamped).norm_sq()
    };
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let (mut l, mut r) = (T::zero(), T::one());
    let mut m1 = r - (r - l) * inv_phi;
    let mut m2 = l + (r - l) * inv_phi;
    let (mut f1, mut f2) = (box_dist(m1), box_dist(m2));
    for _ in 0..48 {
        if f1 <= f2 {
            r = m2;
            m2 = m1;
            f2 = f1;
            m1 = r - (r - l) * inv_phi;
            f1 = box_dist(m1);
        } else {
            l = m1;
            m1 = m2;
            f1 = f2;
            m2 = l + (r - l) * inv_phi;
            f2 = box_dist(m2);
        }
    }
    f1.min(f2).min(box_dist(T::zero())).min(box_dist(T::one()))
}

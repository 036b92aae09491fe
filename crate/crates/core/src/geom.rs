//! Plain `[S; 3]` vector helpers.
//!
//! Positions, offsets, and centroids are raw 3-arrays; these free functions
//! cover the handful of operations the pipeline needs.

use crate::scalar::Scalar;

/// A 3D point or vector in meters.
pub type Vec3<S> = [S; 3];

#[inline]
pub fn add<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> Vec3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Squared Euclidean distance. Preferred for radius predicates: comparing
/// squared quantities keeps the strict `< r` test exact (both sides squared,
/// no square root applied).
#[inline]
pub fn dist_sq<S: Scalar>(a: Vec3<S>, b: Vec3<S>) -> S {
    let d = sub(a, b);
    dot(d, d)
}

#[inline]
pub fn norm<S: Scalar>(v: Vec3<S>) -> S {
    dot(v, v).sqrt()
}

#[inline]
pub fn is_finite<S: Scalar>(v: Vec3<S>) -> bool {
    v[0].is_finite() && v[1].is_finite() && v[2].is_finite()
}

//! Convex polyhedral regions cut out by tagged half-spaces.
//!
//! A region is the intersection of `n . p <= d` constraints. Each constraint
//! carries a tag naming what lies across it (another region, the boundary plane
//! `z = 0`, or the outside of the clip body), which is what the cone builders
//! and the flux checks key on.

use serde::{Deserialize, Serialize};

use crate::geom::Vector3;
use crate::scalar::{CompensatedSum, Real};

/// What lies on the far side of a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceTag {
    Region(usize),
    Gamma,
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpace<T> {
    /// Unit outward normal.
    pub normal: Vector3<T>,
    pub offset: T,
    pub tag: FaceTag,
}

impl<T: Real> HalfSpace<T> {
    /// `normal . p <= offset`; the normal is normalized (offset rescaled with it).
    pub fn new(normal: Vector3<T>, offset: T, tag: FaceTag) -> Self {
        let len = normal.norm();
        Self { normal: normal / len, offset: offset / len, tag }
    }

    pub fn through_origin(normal: Vector3<T>, tag: FaceTag) -> Self {
        Self::new(normal, T::zero(), tag)
    }

    /// The upper half-space `z >= 0`.
    pub fn above_gamma() -> Self {
        Self::new(-Vector3::unit_z(), T::zero(), FaceTag::Gamma)
    }

    #[inline]
    pub fn signed_distance(&self, p: &Vector3<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    fn coincides(&self, o: &Self, tol: T) -> bool {
        self.normal.dot(&o.normal) > T::one() - tol && (self.offset - o.offset).abs() < tol
    }
}

/// A planar convex face with its outward normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Face<T> {
    pub polygon: Vec<Vector3<T>>,
    pub normal: Vector3<T>,
    pub tag: FaceTag,
}

impl<T: Real> Face<T> {
    pub fn area(&self) -> T {
        polygon_area(&self.polygon)
    }
}

/// Area of a planar polygon (Newell's formula).
pub fn polygon_area<T: Real>(poly: &[Vector3<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let mut acc = Vector3::zero();
    let o = poly[0];
    for k in 1..poly.len() - 1 {
        acc += (poly[k] - o).cross(&(poly[k + 1] - o));
    }
    acc.norm() / T::lit(2.0)
}

/// Sutherland–Hodgman step: keeps the part of `poly` with `signed_distance <= eps`.
pub fn clip_polygon<T: Real>(poly: &[Vector3<T>], h: &HalfSpace<T>, eps: T) -> Vec<Vector3<T>> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let (sa, sb) = (h.signed_distance(&a), h.signed_distance(&b));
        let (ina, inb) = (sa <= eps, sb <= eps);
        if ina {
            out.push(a);
        }
        if ina != inb && (sa - sb).abs() > T::zero() {
            let t = sa / (sa - sb);
            let p = a + (b - a) * t;
            if !(ina && sa.abs() <= eps) && !(inb && sb.abs() <= eps) {
                out.push(p);
            }
        }
    }
    out
}

/// Square of half-width `half` in the plane of `h`, counter-clockwise about its normal.
pub fn plane_square<T: Real>(h: &HalfSpace<T>, half: T) -> Vec<Vector3<T>> {
    let n = h.normal;
    let seed = if n.x.abs() < T::lit(0.6) { Vector3::unit_x() } else { Vector3::unit_y() };
    let u = (seed - n * n.dot(&seed)).normalized().expect("non-parallel seed");
    let v = n.cross(&u);
    let c = n * h.offset;
    vec![c + (u + v) * half, c + (v - u) * half, c - (u + v) * half, c + (u - v) * half]
}

/// Intersection of half-spaces.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexRegion<T> {
    pub halfspaces: Vec<HalfSpace<T>>,
}

const PLANE_TOL: f64 = 1e-12;

impl<T: Real> ConvexRegion<T> {
    pub fn new(halfspaces: Vec<HalfSpace<T>>) -> Self {
        Self { halfspaces }
    }

    pub fn with(mut self, extra: impl IntoIterator<Item = HalfSpace<T>>) -> Self {
        self.halfspaces.extend(extra);
        self
    }

    pub fn contains(&self, p: &Vector3<T>, tol: T) -> bool {
        self.halfspaces.iter().all(|h| h.signed_distance(p) <= tol)
    }

    /// Boundary faces; `extent` must bound the region.
    ///
    /// Coincident constraints produce a single face; a `Gamma` tag wins over
    /// the others so boundary-plane patches are never mislabelled.
    pub fn faces(&self, extent: T) -> Vec<Face<T>> {
        let tol = T::lit(PLANE_TOL);
        let eps = tol * extent.max(T::one());
        let hs = &self.halfspaces;
        let mut faces = Vec::new();
        for (i, h) in hs.iter().enumerate() {
            let shadowed = hs.iter().enumerate().any(|(j, g)| {
                j != i
                    && g.coincides(h, tol)
                    && ((g.tag == FaceTag::Gamma && h.tag != FaceTag::Gamma)
                        || ((g.tag == FaceTag::Gamma) == (h.tag == FaceTag::Gamma) && j < i))
            });
            if shadowed {
                continue;
            }
            let mut poly = plane_square(h, T::lit(2.0) * extent);
            for (j, g) in hs.iter().enumerate() {
                if j == i || g.coincides(h, tol) {
                    continue;
                }
                poly = clip_polygon(&poly, g, eps);
                if poly.len() < 3 {
                    break;
                }
            }
            if poly.len() >= 3 && polygon_area(&poly) > eps * extent {
                faces.push(Face { polygon: poly, normal: h.normal, tag: h.tag });
            }
        }
        faces
    }

    /// `sum_faces (w . n) area`; vanishes for a closed boundary.
    pub fn flux(&self, w: &Vector3<T>, extent: T) -> T {
        let mut s = CompensatedSum::new();
        for f in self.faces(extent) {
            s.add(w.dot(&f.normal) * f.area());
        }
        s.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type V = Vector3<f64>;

    fn unit_cube() -> ConvexRegion<f64> {
        let mut hs = Vec::new();
        for axis in [V::unit_x(), V::unit_y(), V::unit_z()] {
            hs.push(HalfSpace::new(axis, 1.0, FaceTag::Outer));
            hs.push(HalfSpace::new(-axis, 0.0, FaceTag::Outer));
        }
        ConvexRegion::new(hs)
    }

    #[test]
    fn cube_has_six_unit_faces() {
        let faces = unit_cube().faces(2.0);
        assert_eq!(faces.len(), 6);
        for f in &faces {
            assert!((f.area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_plane_prefers_gamma() {
        let r = unit_cube().with([HalfSpace::above_gamma()]);
        let faces = r.faces(2.0);
        assert_eq!(faces.len(), 6);
        assert!(faces.iter().any(|f| f.tag == FaceTag::Gamma));
    }

    #[test]
    fn orientation_follows_normal() {
        let h = HalfSpace::new(V::new(0.3, -0.2, 0.9), 0.1, FaceTag::Outer);
        let sq = plane_square(&h, 1.0);
        let turn = (sq[1] - sq[0]).cross(&(sq[2] - sq[1]));
        assert!(turn.dot(&h.normal) > 0.0);
        for p in &sq {
            assert!(h.signed_distance(p).abs() < 1e-14);
        }
    }

    #[test]
    fn tetrahedron_flux_and_missing_face() {
        let pts = [V::zero(), V::unit_x(), V::unit_y(), V::unit_z()];
        let hs = vec![
            HalfSpace::new(-V::unit_x(), 0.0, FaceTag::Outer),
            HalfSpace::new(-V::unit_y(), 0.0, FaceTag::Outer),
            HalfSpace::new(-V::unit_z(), 0.0, FaceTag::Outer),
            HalfSpace::new(V::new(1.0, 1.0, 1.0), 1.0, FaceTag::Outer),
        ];
        let r = ConvexRegion::new(hs);
        for p in &pts {
            assert!(r.contains(p, 1e-12));
        }
        let w = V::new(0.3, -1.2, 0.7);
        assert!(r.flux(&w, 2.0).abs() < 1e-14);
        let faces = r.faces(2.0);
        let dropped = &faces[0];
        let partial: f64 = faces[1..].iter().map(|f| w.dot(&f.normal) * f.area()).sum();
        assert!((partial.abs() - (w.dot(&dropped.normal) * dropped.area()).abs()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn constant_field_flux_vanishes(
            w in proptest::array::uniform3(-2.0f64..2.0),
            n in proptest::array::uniform3(-1.0f64..1.0),
            d in 0.05f64..0.9,
        ) {
            let n = V::new(n[0], n[1], n[2]);
            prop_assume!(n.norm() > 0.1);
            let r = unit_cube().with([HalfSpace::new(n, d * n.norm(), FaceTag::Outer)]);
            let w = V::new(w[0], w[1], w[2]);
            prop_assert!(r.flux(&w, 2.0).abs() < 1e-12);
        }
    }
}

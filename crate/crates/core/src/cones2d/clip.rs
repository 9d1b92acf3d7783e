use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{cone_geometry, t_plus_vertices, ConeGeometry};
use super::product::build_product;
use super::ConeSpec;
use crate::error::{domain, Error, Result};
use crate::geom::{ConvexRegion, Face, FaceTag, HalfSpace, MeshBuilder, TriMesh, Vector3};
use crate::scalar::Real;

pub const BALL_LONGITUDES: usize = 32;
pub const BALL_LATITUDES: usize = 15;

const WELD_TOL: f64 = 1e-10;

/// Compact body the cone is cut to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClipRegion<T> {
    /// Triangular prism over the boundary triangle under the tetrahedral cone's
    /// upper vertices, capped at their height; the cone's folds end exactly on it.
    SimplexCanonical,
    /// The regular tetrahedron spanned by the cone's four unit vertices.
    Simplex,
    /// Right prism around the spine with equilateral cross-section whose
    /// vertices lie on the folds.
    Prism { axis: Vector3<T>, half_height: T, apothem: T },
    /// Polytope circumscribed about the ball of this radius.
    Ball { radius: T },
    /// Slab `0 <= y <= length` of a product, rays cut at this radius.
    Slab { radius: T },
}

impl<T: Real> ClipRegion<T> {
    /// Prism with apothem 1/2 and half-height `2 a / tan(beta) + 1`.
    pub fn default_prism(spec: &ConeSpec<T>) -> Result<Self> {
        let beta = match spec {
            ConeSpec::YBeta { beta } | ConeSpec::YBarBeta { beta } => *beta,
            _ => return Err(Error::IncompatibleClip(format!("{} takes no prism", spec.name()))),
        };
        spec.validate()?;
        if !(beta > T::zero()) {
            return Err(Error::IncompatibleClip("no prism around a spine lying in the boundary plane".into()));
        }
        let apothem = T::lit(0.5);
        let half_height = T::lit(2.0) * apothem / beta.tan() + T::one();
        let (s, c) = beta.sin_cos();
        Ok(ClipRegion::Prism { axis: Vector3::new(c, T::zero(), s), half_height, apothem })
    }

    /// The clip each cone family is built with by default.
    pub fn default_for(spec: &ConeSpec<T>) -> Result<Self> {
        match spec {
            ConeSpec::TPlus => Ok(ClipRegion::SimplexCanonical),
            ConeSpec::YBeta { .. } | ConeSpec::YBarBeta { .. } => Self::default_prism(spec),
            ConeSpec::WBeta { .. } => Ok(ClipRegion::Ball { radius: T::one() }),
            ConeSpec::Product { .. } => Ok(ClipRegion::Slab { radius: T::one() }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClipRegion::SimplexCanonical => "simplex-canonical",
            ClipRegion::Simplex => "simplex",
            ClipRegion::Prism { .. } => "prism",
            ClipRegion::Ball { .. } => "ball",
            ClipRegion::Slab { .. } => "slab",
        }
    }
}

fn incompatible<T: Real, R>(spec: &ConeSpec<T>, clip: &ClipRegion<T>) -> Result<R> {
    Err(Error::IncompatibleClip(format!("{} cannot be clipped to {}", spec.name(), clip.name())))
}

/// Outer half-spaces of the clip body and a bound on its extent.
fn clip_halfspaces<T: Real>(geom: &ConeGeometry<T>, clip: &ClipRegion<T>) -> Result<(Vec<HalfSpace<T>>, T)> {
    let outer = |n: Vector3<T>, d: T| HalfSpace::new(n, d, FaceTag::Outer);
    match (geom.spec, *clip) {
        (ConeSpec::TPlus, ClipRegion::SimplexCanonical) => {
            let v = t_plus_vertices::<T>();
            let mut hs = vec![outer(Vector3::unit_z(), T::one() / T::lit(3.0))];
            for f in &geom.gamma_rays {
                hs.push(outer(-*f, T::SQRT_2() / T::lit(3.0)));
            }
            Ok((hs, T::lit(2.0) + v[0].norm()))
        }
        (ConeSpec::TPlus, ClipRegion::Simplex) => {
            let hs = t_plus_vertices::<T>().iter().map(|v| outer(-*v, T::one() / T::lit(3.0))).collect();
            Ok((hs, T::lit(2.0)))
        }
        (ConeSpec::YBeta { beta } | ConeSpec::YBarBeta { beta }, ClipRegion::Prism { axis, half_height, apothem }) => {
            let spine = geom.spines[0];
            let tol = T::lit(1e-12);
            if axis.max_abs_diff(&spine) > tol {
                return Err(Error::IncompatibleClip(format!("prism axis {axis:?} is not the spine {spine:?}")));
            }
            if !(apothem > T::zero() && half_height > T::zero()) {
                return domain("prism dimensions must be positive");
            }
            let (s, c) = beta.sin_cos();
            if !(half_height * s - T::lit(2.0) * apothem * c > T::zero()) {
                return Err(Error::IncompatibleClip("prism bases would cross the boundary plane".into()));
            }
            let mut hs = vec![outer(spine, half_height), outer(-spine, half_height)];
            for d in &geom.fold_directions {
                hs.push(outer(-*d, apothem));
            }
            Ok((hs, half_height + T::lit(2.0) * apothem + T::one()))
        }
        (ConeSpec::WBeta { .. }, ClipRegion::Ball { radius }) => {
            if !(radius > T::zero()) {
                return domain("ball radius must be positive");
            }
            Ok((ball_polytope(radius), T::lit(1.5) * radius))
        }
        (spec, clip) => incompatible(&spec, &clip),
    }
}

/// Tangent planes of the sphere at a longitude/latitude grid plus both poles;
/// symmetric under `x -> -x` and `y -> -y`.
fn ball_polytope<T: Real>(radius: T) -> Vec<HalfSpace<T>> {
    let mut hs = vec![
        HalfSpace::new(Vector3::unit_z(), radius, FaceTag::Outer),
        HalfSpace::new(-Vector3::unit_z(), radius, FaceTag::Outer),
    ];
    for j in 0..BALL_LATITUDES {
        let lat = -T::FRAC_PI_2() + T::PI() * T::from_usize_lossy(j + 1) / T::from_usize_lossy(BALL_LATITUDES + 1);
        let (sl, cl) = lat.sin_cos();
        for k in 0..BALL_LONGITUDES {
            let lon = T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(BALL_LONGITUDES);
            let (so, co) = lon.sin_cos();
            hs.push(HalfSpace::new(Vector3::new(cl * co, cl * so, sl), radius, FaceTag::Outer));
        }
    }
    hs
}

/// The clipped regions of a cone.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    pub regions: Vec<ConvexRegion<T>>,
    pub cone_gamma: Vec<bool>,
    pub extent: T,
}

impl<T: Real> Partition<T> {
    pub fn new(geom: &ConeGeometry<T>, clip: &ClipRegion<T>) -> Result<Self> {
        let (outer, extent) = clip_halfspaces(geom, clip)?;
        let regions = geom.regions.iter().map(|r| r.clone().with(outer.iter().copied())).collect();
        Ok(Self { regions, cone_gamma: geom.cone_gamma.clone(), extent })
    }

    /// Boundary faces of every region with outward normals.
    pub fn region_faces(&self) -> Vec<Vec<Face<T>>> {
        self.regions.par_iter().map(|r| r.faces(self.extent)).collect()
    }
}

/// Which region a triangle bounds and what lies across it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleLabel {
    pub region: usize,
    pub across: FaceTag,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeMesh<T> {
    pub mesh: TriMesh<T>,
    /// Per-triangle labels; absent for products, which have no region partition.
    pub labels: Option<Vec<TriangleLabel>>,
}

fn mesh_faces<T: Real>(faces: &[Vec<Face<T>>], cone_gamma: &[bool], refine: usize) -> Result<ConeMesh<T>> {
    let mut b = MeshBuilder::new(T::lit(WELD_TOL));
    let mut labels = Vec::new();
    for (a, fs) in faces.iter().enumerate() {
        for f in fs {
            let (keep, on_gamma) = match f.tag {
                FaceTag::Region(other) => (other > a || faces.get(other).map_or(true, |o| o.is_empty()), false),
                FaceTag::Gamma => (cone_gamma[a], true),
                FaceTag::Outer => (false, false),
            };
            if !keep {
                continue;
            }
            let before = b.triangle_count();
            b.convex_polygon(&f.polygon, refine, on_gamma);
            labels.extend((before..b.triangle_count()).map(|_| TriangleLabel { region: a, across: f.tag }));
        }
    }
    Ok(ConeMesh { mesh: b.finish()?, labels: Some(labels) })
}

/// Triangulates a cone inside a clip body; `refine` only subdivides the planar pieces.
pub fn build<T: Real>(spec: &ConeSpec<T>, clip: &ClipRegion<T>, refine: usize) -> Result<ConeMesh<T>> {
    if refine == 0 {
        return domain("refine must be at least 1");
    }
    if let ConeSpec::Product { cone, length } = spec {
        return match clip {
            ClipRegion::Slab { radius } => Ok(ConeMesh { mesh: build_product(cone, *length, *radius, refine)?, labels: None }),
            _ => incompatible(spec, clip),
        };
    }
    if let (ConeSpec::YBeta { beta } | ConeSpec::YBarBeta { beta }, ClipRegion::Prism { .. }) = (spec, clip) {
        if !(*beta > T::zero()) {
            spec.validate()?;
            return Err(Error::IncompatibleClip("no prism around a spine lying in the boundary plane".into()));
        }
    }
    let geom = cone_geometry(spec)?;
    let part = Partition::new(&geom, clip)?;
    mesh_faces(&part.region_faces(), &part.cone_gamma, refine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::energy;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn j(spec: ConeSpec<f64>, clip: ClipRegion<f64>, refine: usize, alpha: f64) -> f64 {
        energy(&build(&spec, &clip, refine).unwrap().mesh, alpha).unwrap().j_alpha
    }

    #[test]
    fn t_plus_canonical_energy() {
        for alpha in [0.0, 0.5, (2.0f64 / 3.0).sqrt(), 1.0] {
            let e = j(ConeSpec::TPlus, ClipRegion::SimplexCanonical, 1, alpha);
            assert!((e - 4.0 * SQRT_2 / 3.0).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn t_plus_simplex_energy() {
        // sloping folds of area sqrt2/3 each, vertical folds down to the simplex faces
        let e = j(ConeSpec::TPlus, ClipRegion::Simplex, 2, 0.3);
        assert!((e - 5.0 * SQRT_2 / 4.0).abs() < 1e-12, "{e}");
    }

    #[test]
    fn vertical_half_y() {
        let spec = ConeSpec::YBeta { beta: FRAC_PI_2 };
        let clip = ClipRegion::default_prism(&spec).unwrap();
        let m = build(&spec, &clip, 1).unwrap().mesh;
        let e = energy(&m, 0.4).unwrap();
        assert!((e.area_off_gamma - 3.0).abs() < 1e-12);
        assert!((e.area_on_gamma - 3f64.sqrt() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_is_stable() {
        for spec in [ConeSpec::TPlus, ConeSpec::YBeta { beta: 0.7 }, ConeSpec::YBarBeta { beta: 0.7 }, ConeSpec::WBeta { beta: 0.4 }] {
            let clip = ClipRegion::default_for(&spec).unwrap();
            let a = j(spec, clip, 1, 0.7);
            let b = j(spec, clip, 2, 0.7);
            assert!((a - b).abs() < 1e-12, "{}: {a} vs {b}", spec.name());
        }
    }

    #[test]
    fn labels_cover_every_triangle() {
        let cm = build(&ConeSpec::WBeta { beta: 0.4 }, &ClipRegion::Ball { radius: 1.0 }, 1).unwrap();
        let labels = cm.labels.unwrap();
        assert_eq!(labels.len(), cm.mesh.triangles.len());
        for (l, flag) in labels.iter().zip(&cm.mesh.gamma_flags) {
            assert_eq!(l.across == FaceTag::Gamma, *flag);
            assert!(l.across != FaceTag::Outer);
        }
        assert!(!labels.iter().any(|l| matches!((l.region, l.across), (0, FaceTag::Region(1)))));
    }

    #[test]
    fn w_mesh_is_mirror_symmetric() {
        let m = build(&ConeSpec::WBeta { beta: 0.5 }, &ClipRegion::Ball { radius: 1.0 }, 1).unwrap().mesh;
        for p in &m.vertices {
            let q = Vector3::new(-p.x, p.y, p.z);
            assert!(m.vertices.iter().any(|v| v.max_abs_diff(&q) < 1e-12), "{p:?}");
        }
    }

    #[test]
    fn incompatible_clips() {
        let y = ConeSpec::YBeta { beta: 0.5 };
        assert!(matches!(build(&ConeSpec::<f64>::TPlus, &ClipRegion::Ball { radius: 1.0 }, 1), Err(Error::IncompatibleClip(_))));
        assert!(matches!(build(&y, &ClipRegion::SimplexCanonical, 1), Err(Error::IncompatibleClip(_))));
        assert!(matches!(ClipRegion::default_prism(&ConeSpec::YBeta { beta: 0.0 }), Err(Error::IncompatibleClip(_))));
        let tilted = ClipRegion::Prism { axis: Vector3::unit_z(), half_height: 3.0, apothem: 0.5 };
        assert!(matches!(build(&y, &tilted, 1), Err(Error::IncompatibleClip(_))));
        let (s, c) = 0.5f64.sin_cos();
        let low = ClipRegion::Prism { axis: Vector3::new(c, 0.0, s), half_height: 0.5, apothem: 0.5 };
        assert!(matches!(build(&y, &low, 1), Err(Error::IncompatibleClip(_))));
        assert!(build(&ConeSpec::YBeta { beta: 1.7 }, &ClipRegion::Ball { radius: 1.0 }, 1).is_err());
    }
}

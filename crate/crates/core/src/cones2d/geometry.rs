use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConeSpec, RAY_MATCH_TOL};
use crate::error::{domain, Error, Result};
use crate::geom::{ConvexRegion, FaceTag, HalfSpace, RotationY, Vector3};
use crate::scalar::Real;
use crate::spherenet::HemisphereNet;

/// Planar angular sector between two unit directions, of opening `< pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector<T> {
    pub a: Vector3<T>,
    pub b: Vector3<T>,
}

impl<T: Real> Sector<T> {
    pub fn opening(&self) -> T {
        self.a.angle_to(&self.b)
    }

    /// Unit tangent at endpoint `from` pointing into the sector, if `from` is an endpoint.
    pub fn tangent_from(&self, from: &Vector3<T>) -> Option<Vector3<T>> {
        let tol = T::lit(RAY_MATCH_TOL);
        let other = if self.a.max_abs_diff(from) <= tol {
            self.b
        } else if self.b.max_abs_diff(from) <= tol {
            self.a
        } else {
            return None;
        };
        (other - *from * other.dot(from)).normalized()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldKind {
    Sloping,
    Vertical,
}

/// Interface between two regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fold<T> {
    /// `(i, j)` with `i < j`.
    pub regions: [usize; 2],
    /// Unit normal pointing from region `i` into region `j`.
    pub normal: Vector3<T>,
    pub kind: FoldKind,
    pub sectors: Vec<Sector<T>>,
}

/// Part of the boundary plane that belongs to the cone, lying under `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSector<T> {
    pub region: usize,
    pub pieces: Vec<Sector<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeGeometry<T> {
    pub spec: ConeSpec<T>,
    /// Each region intersected with `z >= 0`, faces tagged by what lies across.
    pub regions: Vec<ConvexRegion<T>>,
    /// Whether the boundary-plane face of each region belongs to the cone.
    pub cone_gamma: Vec<bool>,
    pub folds: Vec<Fold<T>>,
    pub gamma_rays: Vec<Vector3<T>>,
    pub spines: Vec<Vector3<T>>,
    pub gamma_sectors: Vec<GammaSector<T>>,
    /// `(i, j)`: region `i` over bare boundary next to region `j` over a boundary sector.
    pub gamma_pairs: Vec<[usize; 2]>,
    /// Directions of the folds orthogonal to the spine (tilted Y cones only).
    pub fold_directions: Vec<Vector3<T>>,
}

impl<T: Real> ConeGeometry<T> {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn fold(&self, i: usize, j: usize) -> Option<&Fold<T>> {
        let key = [i.min(j), i.max(j)];
        self.folds.iter().find(|f| f.regions == key)
    }
}

fn unit<T: Real>(v: Vector3<T>) -> Result<Vector3<T>> {
    v.normalized().ok_or_else(|| Error::Domain("degenerate direction".into()))
}

fn v3<T: Real>(x: T, y: T, z: T) -> Vector3<T> {
    Vector3::new(x, y, z)
}

fn azimuth<T: Real>(v: &Vector3<T>) -> T {
    let a = v.y.atan2(v.x);
    if a < T::zero() {
        a + T::TAU()
    } else {
        a
    }
}

fn on_circle<T: Real>(phi: T) -> Vector3<T> {
    v3(phi.cos(), phi.sin(), T::zero())
}

/// Boundary sector swept counter-clockwise from `from` to `to`, cut into pieces of opening `< pi`.
fn gamma_sector<T: Real>(region: usize, from: &Vector3<T>, to: &Vector3<T>) -> GammaSector<T> {
    let start = azimuth(from);
    let mut span = azimuth(to) - start;
    if span <= T::zero() {
        span = span + T::TAU();
    }
    let max_piece = T::lit(0.9) * T::PI();
    let mut k = 1;
    while span / T::from_usize_lossy(k) > max_piece {
        k += 1;
    }
    let point = |m: usize| {
        if m == 0 {
            *from
        } else if m == k {
            *to
        } else {
            on_circle(start + span * T::from_usize_lossy(m) / T::from_usize_lossy(k))
        }
    };
    GammaSector { region, pieces: (0..k).map(|m| Sector { a: point(m), b: point(m + 1) }).collect() }
}

/// Sector from `a` to `b`, split at `mid` when the opening is too close to `pi`.
fn fold_sectors<T: Real>(a: Vector3<T>, b: Vector3<T>, mid: Vector3<T>) -> Vec<Sector<T>> {
    if a.angle_to(&b) > T::lit(0.9) * T::PI() {
        vec![Sector { a, b: mid }, Sector { a: mid, b }]
    } else {
        vec![Sector { a, b }]
    }
}

struct Raw<T> {
    regions: Vec<Vec<HalfSpace<T>>>,
    cone_gamma: Vec<bool>,
    sectors: BTreeMap<[usize; 2], Vec<Sector<T>>>,
    gamma_rays: Vec<Vector3<T>>,
    spines: Vec<Vector3<T>>,
    gamma_sectors: Vec<GammaSector<T>>,
    gamma_pairs: Vec<[usize; 2]>,
    fold_directions: Vec<Vector3<T>>,
}

/// The four unit vertices of the tetrahedral cone, the last one pointing straight down.
pub(crate) fn t_plus_vertices<T: Real>() -> [Vector3<T>; 4] {
    let third = T::one() / T::lit(3.0);
    let s2 = T::SQRT_2();
    let s23 = (T::lit(2.0) / T::lit(3.0)).sqrt();
    [
        v3(T::lit(2.0) * s2 / T::lit(3.0), T::zero(), third),
        v3(-s2 / T::lit(3.0), s23, third),
        v3(-s2 / T::lit(3.0), -s23, third),
        v3(T::zero(), T::zero(), -T::one()),
    ]
}

fn t_plus<T: Real>() -> Result<Raw<T>> {
    let v = t_plus_vertices::<T>();
    let feet: Vec<Vector3<T>> = v[..3].iter().map(|p| unit(v3(p.x, p.y, T::zero()))).collect::<Result<_>>()?;
    let mut regions = Vec::new();
    for i in 0..4 {
        let gens: Vec<usize> = (0..4).filter(|&k| k != i).collect();
        let mut hs = Vec::new();
        for (a, b, l) in [(gens[0], gens[1], gens[2]), (gens[0], gens[2], gens[1]), (gens[1], gens[2], gens[0])] {
            let mut n = v[a].cross(&v[b]);
            if n.dot(&v[l]) > T::zero() {
                n = -n;
            }
            hs.push(HalfSpace::through_origin(n, FaceTag::Region(l)));
        }
        hs.push(HalfSpace::above_gamma());
        regions.push(hs);
    }
    let mut sectors = BTreeMap::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let k = 3 - i - j;
            sectors.insert([i, j], vec![Sector { a: feet[k], b: v[k] }]);
        }
        let others: Vec<usize> = (0..3).filter(|&k| k != i).collect();
        sectors.insert([i, 3], vec![Sector { a: v[others[0]], b: v[others[1]] }]);
    }
    Ok(Raw {
        regions,
        cone_gamma: vec![false; 4],
        sectors,
        gamma_rays: feet,
        spines: v[..3].to_vec(),
        gamma_sectors: Vec::new(),
        gamma_pairs: vec![[0, 3], [1, 3], [2, 3]],
        fold_directions: Vec::new(),
    })
}

/// Unit rays of the planar Y in the `xy` plane.
pub(crate) fn planar_y<T: Real>() -> [Vector3<T>; 3] {
    let h = T::lit(3.0).sqrt() / T::lit(2.0);
    let m = -T::lit(0.5);
    [v3(T::one(), T::zero(), T::zero()), v3(m, h, T::zero()), v3(m, -h, T::zero())]
}

fn tilted_y<T: Real>(beta: T, reflected: bool) -> Result<Raw<T>> {
    if !(beta > T::zero()) {
        return domain("tilted Y cone degenerates at beta = 0 (spine inside the boundary plane)");
    }
    let rot = RotationY::new(beta)?;
    let spine = rot.spine();
    let sign = if reflected { -T::one() } else { T::one() };
    let d: Vec<Vector3<T>> = planar_y::<T>().iter().map(|p| *p * sign).collect();
    let mut regions = Vec::new();
    for i in 0..3 {
        let mut hs = Vec::new();
        for k in (0..3).filter(|&k| k != i) {
            let j = 3 - i - k;
            let mut n = Vector3::unit_z().cross(&d[k]);
            if n.dot(&d[j]) > T::zero() {
                n = -n;
            }
            hs.push(HalfSpace::through_origin(rot.apply(&n), FaceTag::Region(j)));
        }
        hs.push(HalfSpace::above_gamma());
        regions.push(hs);
    }
    let rd: Vec<Vector3<T>> = d.iter().map(|x| rot.apply(x)).collect();
    let (sb, _) = beta.sin_cos();
    let q: Vec<Vector3<T>> = rd.iter().map(|r| unit(*r * sb - spine * r.z)).collect::<Result<_>>()?;
    let mut sectors = BTreeMap::new();
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        sectors.insert([i.min(j), i.max(j)], vec![Sector { a: q[k], b: spine }]);
    }
    let (gamma_sectors, cone_gamma, gamma_pairs) = if reflected {
        (
            vec![gamma_sector(1, &q[2], &q[0]), gamma_sector(2, &q[0], &q[1])],
            vec![false, true, true],
            vec![[0, 1], [0, 2]],
        )
    } else {
        (vec![gamma_sector(0, &q[1], &q[2])], vec![true, false, false], vec![[1, 0], [2, 0]])
    };
    Ok(Raw {
        regions,
        cone_gamma,
        sectors,
        gamma_rays: q,
        spines: vec![spine],
        gamma_sectors,
        gamma_pairs,
        fold_directions: rd,
    })
}

/// Unit normals of the four sloping folds of the W cone.
pub(crate) fn w_sloping_normals<T: Real>(beta: T) -> [Vector3<T>; 4] {
    let (s, c) = beta.sin_cos();
    let h = T::lit(3.0).sqrt() / T::lit(2.0);
    let (a, b) = (h * s, h * c);
    let half = T::lit(0.5);
    [v3(-a, half, b), v3(-a, -half, b), v3(a, -half, b), v3(a, half, b)]
}

fn w_beta<T: Real>(beta: T) -> Result<Raw<T>> {
    RotationY::new(beta)?;
    let s = w_sloping_normals::<T>(beta);
    let (sb, cb) = beta.sin_cos();
    let k = T::lit(3.0).sqrt() * sb;
    let q = [
        unit(v3(T::one(), k, T::zero()))?,
        unit(v3(T::one(), -k, T::zero()))?,
        unit(v3(-T::one(), -k, T::zero()))?,
        unit(v3(-T::one(), k, T::zero()))?,
    ];
    let spines = [v3(cb, T::zero(), sb), v3(-cb, T::zero(), sb)];
    let r = |n: Vector3<T>, j: usize| HalfSpace::through_origin(n, FaceTag::Region(j));
    let y = Vector3::<T>::unit_y();
    let g = HalfSpace::above_gamma();
    let regions = vec![
        vec![r(s[0], 2), r(s[1], 3), g],
        vec![r(s[2], 3), r(s[3], 2), g],
        vec![r(-y, 3), r(-s[0], 0), r(-s[3], 1), g],
        vec![r(y, 2), r(-s[1], 0), r(-s[2], 1), g],
    ];
    let mut sectors = BTreeMap::new();
    sectors.insert([0, 2], vec![Sector { a: q[0], b: spines[0] }]);
    sectors.insert([0, 3], vec![Sector { a: q[1], b: spines[0] }]);
    sectors.insert([1, 3], vec![Sector { a: q[2], b: spines[1] }]);
    sectors.insert([1, 2], vec![Sector { a: q[3], b: spines[1] }]);
    sectors.insert([2, 3], fold_sectors(spines[0], spines[1], Vector3::unit_z()));
    Ok(Raw {
        regions,
        cone_gamma: vec![false, false, true, true],
        sectors,
        gamma_rays: q.to_vec(),
        spines: spines.to_vec(),
        gamma_sectors: vec![gamma_sector(2, &q[0], &q[3]), gamma_sector(3, &q[2], &q[1])],
        gamma_pairs: vec![[0, 2], [1, 2], [0, 3], [1, 3]],
        fold_directions: Vec::new(),
    })
}

/// Regions, folds and boundary data of a non-product cone.
pub fn cone_geometry<T: Real>(spec: &ConeSpec<T>) -> Result<ConeGeometry<T>> {
    spec.validate()?;
    let raw = match *spec {
        ConeSpec::TPlus => t_plus()?,
        ConeSpec::YBeta { beta } => tilted_y(beta, false)?,
        ConeSpec::YBarBeta { beta } => tilted_y(beta, true)?,
        ConeSpec::WBeta { beta } => w_beta(beta)?,
        ConeSpec::Product { .. } => return domain("product cones carry no region partition"),
    };
    let vertical_tol = T::lit(1e-12);
    let mut folds = Vec::new();
    for (i, hs) in raw.regions.iter().enumerate() {
        for h in hs {
            if let FaceTag::Region(j) = h.tag {
                if j <= i {
                    continue;
                }
                let sectors = raw
                    .sectors
                    .get(&[i, j])
                    .cloned()
                    .ok_or_else(|| Error::Labeling(format!("interface ({i}, {j}) has no fold sector")))?;
                let kind = if h.normal.z.abs() <= vertical_tol { FoldKind::Vertical } else { FoldKind::Sloping };
                folds.push(Fold { regions: [i, j], normal: h.normal, kind, sectors });
            }
        }
    }
    if folds.len() != raw.sectors.len() {
        return Err(Error::Labeling("fold sectors without a matching interface".into()));
    }
    Ok(ConeGeometry {
        spec: *spec,
        regions: raw.regions.into_iter().map(ConvexRegion::new).collect(),
        cone_gamma: raw.cone_gamma,
        folds,
        gamma_rays: raw.gamma_rays,
        spines: raw.spines,
        gamma_sectors: raw.gamma_sectors,
        gamma_pairs: raw.gamma_pairs,
        fold_directions: raw.fold_directions,
    })
}

/// Directions of the half-lines where the cone meets the boundary plane.
pub fn gamma_rays<T: Real>(spec: &ConeSpec<T>) -> Result<Vec<Vector3<T>>> {
    Ok(cone_geometry(spec)?.gamma_rays)
}

/// Trace of the folds on the unit sphere.
pub fn hemisphere_net<T: Real>(geom: &ConeGeometry<T>) -> Result<HemisphereNet<T>> {
    let tol = T::lit(RAY_MATCH_TOL);
    let mut nodes: Vec<Vector3<T>> = Vec::new();
    let mut node = |p: Vector3<T>| {
        if let Some(i) = nodes.iter().position(|q| q.max_abs_diff(&p) <= tol) {
            i
        } else {
            nodes.push(p);
            nodes.len() - 1
        }
    };
    let mut arcs = Vec::new();
    for f in &geom.folds {
        for s in &f.sectors {
            arcs.push([node(s.a), node(s.b)]);
        }
    }
    HemisphereNet::new(nodes, arcs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherenet::junction_check;
    use proptest::prelude::*;

    fn region_hits(geom: &ConeGeometry<f64>, p: &Vector3<f64>) -> usize {
        geom.regions.iter().filter(|r| r.contains(p, 0.0)).count()
    }

    fn specs(beta: f64) -> Vec<ConeSpec<f64>> {
        vec![
            ConeSpec::TPlus,
            ConeSpec::YBeta { beta },
            ConeSpec::YBarBeta { beta },
            ConeSpec::WBeta { beta },
        ]
    }

    #[test]
    fn t_plus_rays_and_spines() {
        let g = cone_geometry(&ConeSpec::<f64>::TPlus).unwrap();
        assert_eq!(g.gamma_rays.len(), 3);
        for i in 0..3 {
            let j = (i + 1) % 3;
            assert!((g.gamma_rays[i].dot(&g.gamma_rays[j]) + 0.5).abs() < 1e-15);
        }
        assert_eq!(g.folds.len(), 6);
        assert_eq!(g.folds.iter().filter(|f| f.kind == FoldKind::Vertical).count(), 3);
        for f in g.folds.iter().filter(|f| f.kind == FoldKind::Sloping) {
            assert!((f.normal.z.abs() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn y_rays_match_parametrization() {
        for k in 1..=20 {
            let beta = std::f64::consts::FRAC_PI_2 * k as f64 / 20.0;
            let q = gamma_rays(&ConeSpec::YBeta { beta }).unwrap();
            let s = 3f64.sqrt() * beta.sin();
            let n = (1.0 + s * s).sqrt();
            assert!(q[0].max_abs_diff(&Vector3::unit_x()) < 1e-15);
            assert!(q[1].max_abs_diff(&v3(-1.0 / n, s / n, 0.0)) < 1e-15);
            assert!(q[2].max_abs_diff(&v3(-1.0 / n, -s / n, 0.0)) < 1e-15);
            let qb = gamma_rays(&ConeSpec::YBarBeta { beta }).unwrap();
            assert!(qb[0].max_abs_diff(&-Vector3::unit_x()) < 1e-15);
            assert!(qb[1].max_abs_diff(&v3(1.0 / n, -s / n, 0.0)) < 1e-15);
        }
        let q = gamma_rays(&ConeSpec::YBeta { beta: std::f64::consts::FRAC_PI_2 }).unwrap();
        assert!(q[1].max_abs_diff(&v3(-0.5, 3f64.sqrt() / 2.0, 0.0)) < 1e-15);
    }

    #[test]
    fn y_fold_normals_are_rotated_planar_normals() {
        for k in 1..=20 {
            let beta = std::f64::consts::FRAC_PI_2 * k as f64 / 20.0;
            let g = cone_geometry(&ConeSpec::YBeta { beta }).unwrap();
            let rot = RotationY::new(beta).unwrap();
            let p = planar_y::<f64>();
            for f in &g.folds {
                let [i, j] = f.regions;
                // region i sits around -p_i, so the planar normal toward j is along p_i - p_j
                let planar = (p[i] - p[j]).normalized().unwrap();
                assert!(f.normal.max_abs_diff(&rot.apply(&planar)) < 1e-12, "beta {beta} fold {i}{j}");
            }
        }
    }

    #[test]
    fn w_rays_are_symmetric() {
        let q = gamma_rays(&ConeSpec::WBeta { beta: 0.4 }).unwrap();
        assert_eq!(q.len(), 4);
        for r in &q {
            for m in [v3(-r.x, r.y, r.z), v3(r.x, -r.y, r.z)] {
                assert!(q.iter().any(|s| s.max_abs_diff(&m) < 1e-15));
            }
        }
        let g = cone_geometry(&ConeSpec::WBeta { beta: 0.4 }).unwrap();
        assert!(g.fold(0, 1).is_none());
        assert_eq!(g.folds.len(), 5);
    }

    #[test]
    fn folds_lie_in_their_planes() {
        for spec in specs(0.5) {
            let g = cone_geometry(&spec).unwrap();
            for f in &g.folds {
                for s in &f.sectors {
                    assert!(s.opening() < std::f64::consts::PI);
                    assert!(f.normal.dot(&s.a).abs() < 1e-14 && f.normal.dot(&s.b).abs() < 1e-14);
                    let mid = (s.a + s.b).normalized().unwrap();
                    for (r, side) in [(f.regions[0], -1e-9), (f.regions[1], 1e-9)] {
                        let probe = mid + f.normal * side + Vector3::unit_z() * 1e-12;
                        assert!(g.regions[r].contains(&probe, 0.0), "{} fold {:?}", spec.name(), f.regions);
                    }
                }
            }
            for gs in &g.gamma_sectors {
                for s in &gs.pieces {
                    let mid = (s.a + s.b).normalized().unwrap() + Vector3::unit_z() * 1e-9;
                    assert!(g.regions[gs.region].contains(&mid, 0.0));
                }
            }
        }
    }

    #[test]
    fn nets_have_regular_junctions() {
        for beta in [0.2, 0.6, 1.2] {
            for spec in specs(beta) {
                let g = cone_geometry(&spec).unwrap();
                let net = hemisphere_net(&g).unwrap();
                let report = junction_check(&net);
                assert!(report.pass, "{} {beta}: {:?}", spec.name(), report.failures);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(cone_geometry(&ConeSpec::YBeta { beta: 0.0 }).is_err());
        assert!(cone_geometry(&ConeSpec::YBeta { beta: 2.0 }).is_err());
        assert!(cone_geometry(&ConeSpec::WBeta { beta: -0.1 }).is_err());
        let w0 = cone_geometry(&ConeSpec::WBeta { beta: 0.0 }).unwrap();
        assert_eq!(w0.fold(2, 3).unwrap().sectors.len(), 2);
    }

    proptest! {
        #[test]
        fn regions_partition_the_half_space(
            beta in 0.05f64..1.5,
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.001f64..1.0,
        ) {
            let p = v3(x, y, z);
            for spec in specs(beta) {
                let g = cone_geometry(&spec).unwrap();
                let near_fold = g.folds.iter().any(|f| f.normal.dot(&p).abs() < 1e-9)
                    || g.regions.iter().flat_map(|r| r.halfspaces.iter()).any(|h| h.signed_distance(&p).abs() < 1e-9);
                prop_assume!(!near_fold);
                prop_assert_eq!(region_hits(&g, &p), 1, "{} at {:?}", spec.name(), p);
            }
        }
    }
}

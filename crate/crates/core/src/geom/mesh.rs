use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geom::Vector3;
use crate::scalar::{CompensatedSum, Real};

/// Lowest admissible vertex height.
pub const Z_FLOOR: f64 = -1e-12;
/// Height tolerance for a vertex to count as lying in the boundary plane.
pub const GAMMA_Z_TOL: f64 = 1e-9;
/// Triangles with area at or below this are degenerate.
pub const DEGENERATE_AREA: f64 = 1e-16;

/// Half the norm of `(b - a) x (c - a)`.
pub fn triangle_area<T: Real>(a: &Vector3<T>, b: &Vector3<T>, c: &Vector3<T>) -> T {
    (*b - *a).cross(&(*c - *a)).norm() / T::lit(2.0)
}

/// Triangulated surface in the closed upper half-space.
///
/// Each triangle carries a flag telling whether it lies in the boundary plane
/// (and is therefore weighted by `alpha` in the energy).
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<T> {
    pub vertices: Vec<Vector3<T>>,
    pub triangles: Vec<[usize; 3]>,
    pub gamma_flags: Vec<bool>,
}

/// Energy split into the part off the boundary plane and the part on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlidingEnergy<T> {
    pub area_off_gamma: T,
    pub area_on_gamma: T,
    pub j_alpha: T,
    pub alpha: T,
}

impl<T: Real> SlidingEnergy<T> {
    pub fn from_areas(area_off_gamma: T, area_on_gamma: T, alpha: T) -> Self {
        Self { area_off_gamma, area_on_gamma, j_alpha: area_off_gamma + alpha * area_on_gamma, alpha }
    }
}

pub(crate) fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha >= T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        domain(format!("alpha = {alpha} outside [0, 1]"))
    }
}

impl<T: Real> TriMesh<T> {
    pub fn new(vertices: Vec<Vector3<T>>, triangles: Vec<[usize; 3]>, gamma_flags: Vec<bool>) -> Result<Self> {
        let mesh = Self { vertices, triangles, gamma_flags };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh and derives the flags: a triangle is on the boundary plane
    /// iff all three of its vertices are.
    pub fn with_derived_flags(vertices: Vec<Vector3<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let tol = T::lit(GAMMA_Z_TOL);
        let flags = triangles
            .iter()
            .map(|t| t.iter().all(|&i| vertices.get(i).map_or(false, |v| v.z.abs() <= tol)))
            .collect();
        Self::new(vertices, triangles, flags)
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new(), triangles: Vec::new(), gamma_flags: Vec::new() }
    }

    pub fn triangle(&self, t: usize) -> [Vector3<T>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area_of(&self, t: usize) -> T {
        let [a, b, c] = self.triangle(t);
        triangle_area(&a, &b, &c)
    }

    /// Checks index ranges, the half-space constraint and the flag rule.
    pub fn validate_structure(&self) -> Result<()> {
        if self.gamma_flags.len() != self.triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} flags for {} triangles",
                self.gamma_flags.len(),
                self.triangles.len()
            )));
        }
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
            }
            if v.z < T::lit(Z_FLOOR) {
                return Err(Error::InvalidMesh(format!("vertex {i} below the boundary plane (z = {})", v.z)));
            }
        }
        let ztol = T::lit(GAMMA_Z_TOL);
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!("triangle {t} references vertex {bad} of {n}")));
            }
            if self.gamma_flags[t] && tri.iter().any(|&i| self.vertices[i].z.abs() > ztol) {
                return Err(Error::InvalidMesh(format!("triangle {t} flagged on-plane but leaves z = 0")));
            }
        }
        Ok(())
    }

    /// Full invariant check, including the non-degeneracy of every triangle.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        for t in 0..self.triangles.len() {
            if self.area_of(t) <= T::lit(DEGENERATE_AREA) {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }
        Ok(())
    }

    /// Area split, compensated summation, no validation.
    pub(crate) fn areas_unchecked(&self) -> (T, T) {
        let mut off = CompensatedSum::new();
        let mut on = CompensatedSum::new();
        for t in 0..self.triangles.len() {
            let a = self.area_of(t);
            if self.gamma_flags[t] {
                on.add(a);
            } else {
                off.add(a);
            }
        }
        (off.value(), on.value())
    }

    pub(crate) fn energy_unchecked(&self, alpha: T) -> SlidingEnergy<T> {
        let (off, on) = self.areas_unchecked();
        SlidingEnergy::from_areas(off, on, alpha)
    }

    /// Edges used by exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_default() += 1;
            }
        }
        let mut edges: Vec<_> = count.into_iter().filter(|&(_, c)| c == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        edges
    }

    /// Vertices lying on a boundary edge that is not contained in the plane.
    pub fn boundary_vertices_off_gamma(&self) -> Vec<bool> {
        let tol = T::lit(GAMMA_Z_TOL);
        let mut pinned = vec![false; self.vertices.len()];
        for [a, b] in self.boundary_edges() {
            let in_gamma = self.vertices[a].z.abs() <= tol && self.vertices[b].z.abs() <= tol;
            if !in_gamma {
                pinned[a] = true;
                pinned[b] = true;
            }
        }
        pinned
    }

    pub fn min_edge_length(&self) -> T {
        let mut m = T::infinity();
        for tri in &self.triangles {
            for k in 0..3 {
                m = m.min(self.vertices[tri[k]].distance(&self.vertices[tri[(k + 1) % 3]]));
            }
        }
        m
    }

    /// Concatenates another mesh (no welding).
    pub fn append(&mut self, other: &Self) {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        self.gamma_flags.extend_from_slice(&other.gamma_flags);
    }

    pub fn cast<U: Real>(&self) -> TriMesh<U> {
        TriMesh {
            vertices: self.vertices.iter().map(|v| v.cast()).collect(),
            triangles: self.triangles.clone(),
            gamma_flags: self.gamma_flags.clone(),
        }
    }
}

/// Weighted area of a mesh with boundary-plane weight `alpha`.
pub fn energy<T: Real>(mesh: &TriMesh<T>, alpha: T) -> Result<SlidingEnergy<T>> {
    check_alpha(alpha)?;
    mesh.validate()?;
    Ok(mesh.energy_unchecked(alpha))
}

/// Incremental mesh assembly with vertex welding.
pub struct MeshBuilder<T> {
    vertices: Vec<Vector3<T>>,
    triangles: Vec<[usize; 3]>,
    flags: Vec<bool>,
    cells: HashMap<[i64; 3], Vec<usize>>,
    weld_tol: T,
}

impl<T: Real> MeshBuilder<T> {
    pub fn new(weld_tol: T) -> Self {
        Self { vertices: Vec::new(), triangles: Vec::new(), flags: Vec::new(), cells: HashMap::new(), weld_tol }
    }

    fn cell(&self, p: &Vector3<T>) -> [i64; 3] {
        let h = self.weld_tol * T::lit(4.0);
        let f = |x: T| (x / h).floor().to_i64().unwrap_or(i64::MAX);
        [f(p.x), f(p.y), f(p.z)]
    }

    /// Returns the index of an existing vertex within the weld tolerance, or inserts `p`.
    pub fn vertex(&mut self, p: Vector3<T>) -> usize {
        let c = self.cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &i in ids {
                            if self.vertices[i].max_abs_diff(&p) <= self.weld_tol {
                                return i;
                            }
                        }
                    }
                }
            }
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.cells.entry(c).or_default().push(id);
        id
    }

    pub fn triangle(&mut self, a: Vector3<T>, b: Vector3<T>, c: Vector3<T>, on_gamma: bool) {
        if triangle_area(&a, &b, &c) <= T::lit(DEGENERATE_AREA) {
            return;
        }
        let tri = [self.vertex(a), self.vertex(b), self.vertex(c)];
        self.triangles.push(tri);
        self.flags.push(on_gamma);
    }

    /// Adds triangle `abc` split into `n * n` congruent sub-triangles.
    pub fn subdivided_triangle(&mut self, a: Vector3<T>, b: Vector3<T>, c: Vector3<T>, n: usize, on_gamma: bool) {
        let n = n.max(1);
        let nf = T::from_usize_lossy(n);
        let at = |i: usize, j: usize| -> Vector3<T> {
            // i steps toward b, j steps toward c
            let (u, v) = (T::from_usize_lossy(i) / nf, T::from_usize_lossy(j) / nf);
            a + (b - a) * u + (c - a) * v
        };
        for i in 0..n {
            for j in 0..(n - i) {
                self.triangle(at(i, j), at(i + 1, j), at(i, j + 1), on_gamma);
                if i + j + 1 < n {
                    self.triangle(at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), on_gamma);
                }
            }
        }
    }

    /// Centroid fan of a convex polygon, each fan triangle subdivided `n` times.
    pub fn convex_polygon(&mut self, poly: &[Vector3<T>], n: usize, on_gamma: bool) {
        if poly.len() < 3 {
            return;
        }
        let mut centroid = Vector3::zero();
        for p in poly {
            centroid += *p;
        }
        let centroid = centroid / T::from_usize_lossy(poly.len());
        for k in 0..poly.len() {
            let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
            self.subdivided_triangle(centroid, p, q, n, on_gamma);
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn finish(self) -> Result<TriMesh<T>> {
        TriMesh::new(self.vertices, self.triangles, self.flags)
    }
}

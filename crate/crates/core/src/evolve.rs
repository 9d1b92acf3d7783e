//! Projected gradient descent of the weighted area on a triangulation.
//!
//! Boundary vertices off the plane are pinned, vertices in the plane slide in
//! it, and the rest move freely in `z >= 0`. A free vertex held on the plane by
//! the floor for a few consecutive sweeps starts sliding, and triangles whose
//! three vertices all slide become boundary-plane triangles. Edges that shrink
//! to a sliver are collapsed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geom::{check_alpha, MeshBuilder, TriMesh, Vector3, DEGENERATE_AREA, GAMMA_Z_TOL};
use crate::scalar::{CompensatedSum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexStatus {
    Pinned,
    Free,
    /// Confined to the boundary plane.
    Sliding,
}

impl VertexStatus {
    fn rank(self) -> u8 {
        match self {
            VertexStatus::Free => 0,
            VertexStatus::Sliding => 1,
            VertexStatus::Pinned => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig<T> {
    pub alpha: T,
    /// Initial per-vertex step; it doubles after every accepted move and is
    /// otherwise bounded only by the quarter-edge rule.
    pub step: T,
    pub max_iters: usize,
    /// Stop once a sweep lowers the energy by less than this.
    pub tol: T,
    /// Extra pinned vertices, on top of the off-plane boundary.
    pub pins: Option<Vec<bool>>,
    /// Consecutive floor contacts after which a free vertex starts sliding.
    pub contact_iters: usize,
    /// Edges shorter than this fraction of their endpoints' initial edge scale are collapsed.
    pub collapse_ratio: T,
}

impl<T: Real> EvolveConfig<T> {
    pub fn new(alpha: T) -> Self {
        Self {
            alpha,
            step: T::lit(0.05),
            max_iters: 20_000,
            tol: T::lit(1e-10),
            pins: None,
            contact_iters: 5,
            collapse_ratio: T::lit(1e-2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveTrace<T> {
    /// Energy before the first sweep and after every sweep.
    pub energies: Vec<T>,
    /// Vertex indices match the input; collapsed vertices are left unreferenced.
    pub final_mesh: TriMesh<T>,
    pub gamma_contact_area: T,
    pub iterations: usize,
    pub collapsed_edges: usize,
    /// Stopped by the iteration cap rather than by the tolerance.
    pub hit_max_iters: bool,
}

/// Status of every vertex: off-plane boundary (and extra pins) pinned, plane vertices sliding.
pub fn vertex_status<T: Real>(mesh: &TriMesh<T>, pins: Option<&[bool]>) -> Result<Vec<VertexStatus>> {
    if let Some(p) = pins {
        if p.len() != mesh.vertices.len() {
            return domain(format!("{} pins for {} vertices", p.len(), mesh.vertices.len()));
        }
    }
    let boundary = mesh.boundary_vertices_off_gamma();
    let tol = T::lit(GAMMA_Z_TOL);
    Ok(mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if boundary[i] || pins.map_or(false, |p| p[i]) {
                VertexStatus::Pinned
            } else if v.z.abs() <= tol {
                VertexStatus::Sliding
            } else {
                VertexStatus::Free
            }
        })
        .collect())
}

fn project<T: Real>(g: Vector3<T>, s: VertexStatus) -> Vector3<T> {
    match s {
        VertexStatus::Pinned => Vector3::zero(),
        VertexStatus::Sliding => Vector3::new(g.x, g.y, T::zero()),
        VertexStatus::Free => g,
    }
}

fn doubled_area<T: Real>(a: Vector3<T>, b: Vector3<T>, c: Vector3<T>) -> T {
    (b - a).cross(&(c - a)).norm()
}

fn live<T: Real>(a: Vector3<T>, b: Vector3<T>, c: Vector3<T>) -> bool {
    doubled_area(a, b, c) > T::lit(2.0 * DEGENERATE_AREA)
}

struct Workspace {
    triangles: Vec<[usize; 3]>,
    /// `(triangle, corner)` pairs at every vertex.
    incident: Vec<Vec<(usize, usize)>>,
}

impl Workspace {
    fn new(n: usize, triangles: Vec<[usize; 3]>) -> Self {
        let mut ws = Self { triangles, incident: Vec::new() };
        ws.reindex(n);
        ws
    }

    fn reindex(&mut self, n: usize) {
        self.incident = vec![Vec::new(); n];
        for (t, tri) in self.triangles.iter().enumerate() {
            for (k, &v) in tri.iter().enumerate() {
                self.incident[v].push((t, k));
            }
        }
    }

    fn energy<T: Real>(&self, x: &[Vector3<T>], flags: &[bool], alpha: T) -> T {
        let mut off = CompensatedSum::new();
        let mut on = CompensatedSum::new();
        for (tri, &f) in self.triangles.iter().zip(flags) {
            let a = doubled_area(x[tri[0]], x[tri[1]], x[tri[2]]) / T::lit(2.0);
            if f {
                on.add(a);
            } else {
                off.add(a);
            }
        }
        off.value() + alpha * on.value()
    }

    fn weighted_area<T: Real>(&self, x: &[Vector3<T>], t: usize, flags: &[bool], alpha: T) -> T {
        let tri = self.triangles[t];
        let a = doubled_area(x[tri[0]], x[tri[1]], x[tri[2]]) / T::lit(2.0);
        if flags[t] {
            alpha * a
        } else {
            a
        }
    }

    fn local_energy<T: Real>(&self, x: &[Vector3<T>], v: usize, flags: &[bool], alpha: T) -> T {
        self.incident[v].iter().fold(T::zero(), |acc, &(t, _)| acc + self.weighted_area(x, t, flags, alpha))
    }

    /// Per-vertex gather of the triangle area gradients; order-independent across threads.
    fn gradient<T: Real>(&self, x: &[Vector3<T>], flags: &[bool], alpha: T, status: &[VertexStatus]) -> Vec<Vector3<T>> {
        let half = T::lit(0.5);
        (0..x.len())
            .into_par_iter()
            .map(|v| {
                if status[v] == VertexStatus::Pinned {
                    return Vector3::zero();
                }
                let mut g = Vector3::zero();
                for &(t, k) in &self.incident[v] {
                    let tri = self.triangles[t];
                    let (a, b, c) = (x[tri[k]], x[tri[(k + 1) % 3]], x[tri[(k + 2) % 3]]);
                    let n = (b - a).cross(&(c - a));
                    let len = n.norm();
                    // collapsed triangles have no well-defined normal
                    if len <= T::lit(2.0 * DEGENERATE_AREA) {
                        continue;
                    }
                    let w = if flags[t] { alpha } else { T::one() };
                    g += (n / len).cross(&(c - b)) * (half * w);
                }
                project(g, status[v])
            })
            .collect()
    }

    /// Backtracking step of one vertex along its projected descent direction,
    /// at most a quarter of its shortest live edge. Returns the accepted step.
    #[allow(clippy::too_many_arguments)]
    fn relax_vertex<T: Real>(
        &self,
        x: &mut [Vector3<T>],
        v: usize,
        g: Vector3<T>,
        step: T,
        status: VertexStatus,
        flags: &[bool],
        alpha: T,
    ) -> Option<T> {
        let mut edge = T::infinity();
        for &(t, k) in &self.incident[v] {
            let tri = self.triangles[t];
            let (a, b, c) = (x[tri[k]], x[tri[(k + 1) % 3]], x[tri[(k + 2) % 3]]);
            if live(a, b, c) {
                edge = edge.min(a.distance(&b)).min(a.distance(&c));
            }
        }
        if !edge.is_finite() {
            return None;
        }
        let p = x[v];
        let before = self.local_energy(x, v, flags, alpha);
        let mut s = step.min(edge / (T::lit(4.0) * g.norm()));
        while s > T::lit(1e-18) {
            let mut q = p - g * s;
            if status == VertexStatus::Free {
                // land on the plane rather than creep toward it
                let near = q.z < p.z && (p.z - q.z) * T::lit(4.0) >= p.z && q.z * T::lit(4.0) < edge;
                if q.z < T::zero() || near {
                    q.z = T::zero();
                }
            }
            x[v] = q;
            let after = self.local_energy(x, v, flags, alpha);
            if after < before && after <= before - T::lit(1e-4) * g.dot(&(p - q)) {
                return Some(s);
            }
            s = s / T::lit(2.0);
        }
        x[v] = p;
        None
    }

    /// Merges the endpoints of sliver edges into the more constrained one when
    /// that does not raise the energy. Returns the number of merges.
    fn collapse_short_edges<T: Real>(
        &mut self,
        x: &mut [Vector3<T>],
        status: &mut [VertexStatus],
        flags: &mut Vec<bool>,
        scale: &mut [T],
        ratio: T,
        alpha: T,
    ) -> usize {
        let mut merged = 0;
        let mut removed = vec![false; self.triangles.len()];
        for t in 0..self.triangles.len() {
            if removed[t] {
                continue;
            }
            for k in 0..3 {
                let tri = self.triangles[t];
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if x[a].distance(&x[b]) >= ratio * scale[a].min(scale[b]) {
                    continue;
                }
                let (keep, gone) = match status[a].rank().cmp(&status[b].rank()) {
                    std::cmp::Ordering::Less => (b, a),
                    std::cmp::Ordering::Greater => (a, b),
                    std::cmp::Ordering::Equal if status[a] == VertexStatus::Pinned => continue,
                    std::cmp::Ordering::Equal => (a.min(b), a.max(b)),
                };
                let mut around: Vec<usize> =
                    self.incident[keep].iter().chain(&self.incident[gone]).map(|&(t, _)| t).filter(|&t| !removed[t]).collect();
                around.sort_unstable();
                around.dedup();
                let before = around.iter().fold(T::zero(), |s, &u| s + self.weighted_area(x, u, flags, alpha));
                let after = around.iter().fold(T::zero(), |s, &u| {
                    let tri = self.triangles[u].map(|v| if v == gone { keep } else { v });
                    let w = if flags[u] { alpha } else { T::one() };
                    s + w * doubled_area(x[tri[0]], x[tri[1]], x[tri[2]]) / T::lit(2.0)
                });
                if after > before {
                    continue;
                }
                for &(u, c) in &self.incident[gone] {
                    self.triangles[u][c] = keep;
                    let tri = self.triangles[u];
                    if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                        removed[u] = true;
                    }
                }
                let moved = std::mem::take(&mut self.incident[gone]);
                self.incident[keep].extend(moved);
                scale[keep] = scale[keep].min(scale[gone]);
                // the merged-away vertex is left behind, frozen and unreferenced
                status[gone] = VertexStatus::Pinned;
                merged += 1;
                break;
            }
        }
        if merged > 0 {
            let mut tris = Vec::with_capacity(self.triangles.len());
            let mut kept = Vec::with_capacity(flags.len());
            for (t, tri) in self.triangles.iter().enumerate() {
                if !removed[t] {
                    tris.push(*tri);
                    kept.push(flags[t]);
                }
            }
            self.triangles = tris;
            *flags = kept;
            self.reindex(x.len());
        }
        merged
    }
}

/// Gradient of the weighted area with respect to every vertex, with pinned
/// vertices zeroed and sliding vertices restricted to the plane.
pub fn energy_gradient<T: Real>(mesh: &TriMesh<T>, alpha: T, status: &[VertexStatus]) -> Result<Vec<Vector3<T>>> {
    check_alpha(alpha)?;
    mesh.validate_structure()?;
    if status.len() != mesh.vertices.len() {
        return domain("one status per vertex required");
    }
    let ws = Workspace::new(mesh.vertices.len(), mesh.triangles.clone());
    Ok(ws.gradient(&mesh.vertices, &mesh.gamma_flags, alpha, status))
}

fn finish_mesh<T: Real>(x: Vec<Vector3<T>>, triangles: &[[usize; 3]], flags: &[bool]) -> Result<TriMesh<T>> {
    // collapsed triangles carry no area; drop them so the result validates
    let mut tris = Vec::with_capacity(triangles.len());
    let mut kept = Vec::with_capacity(flags.len());
    for (tri, &f) in triangles.iter().zip(flags) {
        if live(x[tri[0]], x[tri[1]], x[tri[2]]) {
            tris.push(*tri);
            kept.push(f);
        }
    }
    TriMesh::new(x, tris, kept)
}

/// Monotone descent: each sweep takes one backtracking step per vertex along
/// the projected gradient, then updates contacts and collapses slivers.
pub fn descend<T: Real>(mesh: &TriMesh<T>, cfg: &EvolveConfig<T>) -> Result<EvolveTrace<T>> {
    check_alpha(cfg.alpha)?;
    mesh.validate()?;
    if !(cfg.step > T::zero()) || !(cfg.tol >= T::zero()) || !(cfg.collapse_ratio >= T::zero()) {
        return domain("step must be positive, tol and collapse ratio non-negative");
    }
    let mut status = vertex_status(mesh, cfg.pins.as_deref())?;
    if !status.contains(&VertexStatus::Pinned) {
        return domain("no pinned vertices: the deformation must have compact support");
    }
    let alpha = cfg.alpha;
    let n = mesh.vertices.len();
    let mut ws = Workspace::new(n, mesh.triangles.clone());
    let mut x = mesh.vertices.clone();
    for (p, s) in x.iter_mut().zip(&status) {
        if *s == VertexStatus::Sliding {
            p.z = T::zero();
        }
    }
    let mut scale = vec![T::infinity(); n];
    for tri in &ws.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let l = x[a].distance(&x[b]);
            scale[a] = scale[a].min(l);
            scale[b] = scale[b].min(l);
        }
    }
    let mut flags = mesh.gamma_flags.clone();
    let mut floor_hits = vec![0usize; n];
    let mut steps = vec![cfg.step; n];
    let mut e = ws.energy(&x, &flags, alpha);
    let mut energies = vec![e];
    let mut iterations = 0;
    let mut collapsed_edges = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        let g = ws.gradient(&x, &flags, alpha, &status);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergent("non-finite gradient".into()));
        }
        let mut moved = false;
        for v in 0..n {
            if g[v] == Vector3::zero() {
                continue;
            }
            match ws.relax_vertex(&mut x, v, g[v], steps[v], status[v], &flags, alpha) {
                Some(s) => {
                    steps[v] = s * T::lit(2.0);
                    moved = true;
                }
                None => steps[v] = cfg.step,
            }
        }
        let floor = T::lit(GAMMA_Z_TOL);
        for i in 0..n {
            if status[i] != VertexStatus::Free || x[i].z > floor {
                continue;
            }
            // settle vertices resting on the plane within tolerance, unless that costs energy
            let before = ws.local_energy(&x, i, &flags, alpha);
            let z = x[i].z;
            x[i].z = T::zero();
            if ws.local_energy(&x, i, &flags, alpha) > before {
                x[i].z = z;
            }
        }
        for (i, q) in x.iter().enumerate() {
            if status[i] == VertexStatus::Free {
                if q.z <= floor {
                    floor_hits[i] += 1;
                    if floor_hits[i] >= cfg.contact_iters && q.z == T::zero() {
                        status[i] = VertexStatus::Sliding;
                    }
                } else {
                    floor_hits[i] = 0;
                }
            }
        }
        for (t, tri) in ws.triangles.iter().enumerate() {
            if !flags[t] && tri.iter().all(|&v| status[v] == VertexStatus::Sliding) {
                flags[t] = true;
            }
        }
        if cfg.collapse_ratio > T::zero() {
            let merged = ws.collapse_short_edges(&mut x, &mut status, &mut flags, &mut scale, cfg.collapse_ratio, alpha);
            collapsed_edges += merged;
            moved |= merged > 0;
        }
        // every accepted move, flag and merge lowers the energy; the min only
        // absorbs last-bit differences of the full resummation
        let e_new = ws.energy(&x, &flags, alpha).min(e);
        let drop = e - e_new;
        e = e_new;
        energies.push(e);
        if !moved || drop < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_mesh = finish_mesh(x, &ws.triangles, &flags)?;
    let gamma_contact_area = final_mesh.energy_unchecked(T::zero()).area_on_gamma;
    Ok(EvolveTrace { energies, final_mesh, gamma_contact_area, iterations, collapsed_edges, hit_max_iters: !converged })
}

/// Moves every free vertex along its surface normal by a seeded Gaussian
/// amplitude (clamped to `z >= 0`); pinned and sliding vertices stay put.
pub fn jitter<T: Real>(mesh: &TriMesh<T>, amplitude: T, seed: u64) -> Result<TriMesh<T>> {
    let status = vertex_status(mesh, None)?;
    let mut normals = vec![Vector3::<T>::zero(); mesh.vertices.len()];
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle(t);
        let n = (b - a).cross(&(c - a));
        for &v in &mesh.triangles[t] {
            // sheets meeting at a fold have unrelated orientations; align them
            let acc = normals[v];
            normals[v] = if acc.dot(&n) < T::zero() { acc - n } else { acc + n };
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = mesh.clone();
    for ((p, s), n) in out.vertices.iter_mut().zip(&status).zip(&normals) {
        let z: f64 = StandardNormal.sample(&mut rng);
        if *s != VertexStatus::Free {
            continue;
        }
        if let Some(n) = n.normalized() {
            *p += n * (amplitude * T::lit(z));
            p.z = p.z.max(T::zero());
        }
    }
    out.validate()?;
    Ok(out)
}

/// Largest relative gap between central differences of the energy and the
/// analytic projected gradient, over up to 50 random movable vertices.
pub fn gradient_check<T: Real>(mesh: &TriMesh<T>, alpha: T, h: T) -> Result<T> {
    check_alpha(alpha)?;
    if !(h >= T::lit(1e-7) && h <= T::lit(1e-4)) {
        return domain(format!("finite-difference step {h} outside [1e-7, 1e-4]"));
    }
    mesh.validate()?;
    let status = vertex_status(mesh, None)?;
    let ws = Workspace::new(mesh.vertices.len(), mesh.triangles.clone());
    let g = ws.gradient(&mesh.vertices, &mesh.gamma_flags, alpha, &status);
    let mut movable: Vec<usize> = (0..status.len()).filter(|&i| status[i] != VertexStatus::Pinned).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    rand::seq::SliceRandom::shuffle(movable.as_mut_slice(), &mut rng);
    movable.truncate(50);
    let mut worst = T::zero();
    let mut scale = T::zero();
    let mut x = mesh.vertices.clone();
    for &v in &movable {
        let axes = if status[v] == VertexStatus::Sliding { 2 } else { 3 };
        for k in 0..axes {
            let orig = x[v];
            let bump = |p: &mut Vector3<T>, d: T| match k {
                0 => p.x = p.x + d,
                1 => p.y = p.y + d,
                _ => p.z = p.z + d,
            };
            bump(&mut x[v], h);
            let up = ws.energy(&x, &mesh.gamma_flags, alpha);
            x[v] = orig;
            bump(&mut x[v], -h);
            let down = ws.energy(&x, &mesh.gamma_flags, alpha);
            x[v] = orig;
            let fd = (up - down) / (T::lit(2.0) * h);
            worst = worst.max((fd - g[v][k]).abs());
            scale = scale.max(g[v][k].abs());
        }
    }
    Ok(if scale > T::zero() { worst / scale } else { worst })
}

/// Ring grading of the vertex-cone start mesh: innermost station, station count, strips per fold.
pub const START_INNER: f64 = 1e-3;
pub const START_RINGS: usize = 20;
pub const START_ACROSS: usize = 4;
pub const START_JITTER: f64 = 1e-3;

/// Jittered graded vertex-cone mesh used as the starting point of the descent.
pub fn t_plus_start<T: Real>(seed: u64) -> Result<TriMesh<T>> {
    let m = graded_t_plus_mesh(T::lit(START_INNER), START_RINGS, START_ACROSS)?;
    jitter(&m, T::lit(START_JITTER), seed)
}

/// The canonical vertex cone, triangulated on rings graded geometrically
/// toward the vertex: `rings` stations from `inner` out to the clip, each
/// fold strip split `across` times.
pub fn graded_t_plus_mesh<T: Real>(inner: T, rings: usize, across: usize) -> Result<TriMesh<T>> {
    graded_mesh(None, inner, rings, across)
}

/// The pinched competitor with contact radius `x0`, on the same kind of graded rings.
pub fn graded_competitor_mesh<T: Real>(x0: T, rings: usize, across: usize) -> Result<TriMesh<T>> {
    let p = crate::compete::CompetitorParams::from_x0(x0)?;
    graded_mesh(Some(p), x0, rings, across)
}

fn graded_mesh<T: Real>(
    competitor: Option<crate::compete::CompetitorParams<T>>,
    inner: T,
    rings: usize,
    across: usize,
) -> Result<TriMesh<T>> {
    let top = crate::compete::x_top::<T>();
    if !(inner > T::zero() && inner < top) || rings < 2 || across == 0 {
        return domain("graded mesh needs 0 < inner < top, rings >= 2, across >= 1");
    }
    let ratio = (top / inner).ln();
    let mut xs = if competitor.is_some() { Vec::new() } else { vec![T::zero()] };
    xs.extend((0..rings).map(|k| {
        if k + 1 == rings {
            top
        } else {
            inner * (ratio * T::from_usize_lossy(k) / T::from_usize_lossy(rings - 1)).exp()
        }
    }));
    let slope = T::one() / T::lit(2.0).sqrt();
    let zs: Vec<T> = match &competitor {
        None => xs.iter().map(|&x| x * slope).collect(),
        Some(p) => xs.iter().enumerate().map(|(k, &x)| if k == 0 { T::zero() } else { p.z(x).max(T::zero()) }).collect(),
    };
    let u = crate::compete::corner_directions::<T>();
    let two = T::lit(2.0);
    let m = T::from_usize_lossy(across);
    let frac = |j: usize| T::from_usize_lossy(j) / m;
    let mut b = MeshBuilder::new(inner * T::lit(1e-6));
    for i in 0..3 {
        let (d0, d1) = (u[i], u[(i + 1) % 3]);
        let fold = |k: usize, j: usize| {
            let mut q = (d0 + (d1 - d0) * frac(j)) * (two * xs[k]);
            q.z = zs[k];
            q
        };
        // walls are single strips so a descending corner folds its wall flat
        let wall = |k: usize, j: usize| {
            let mut q = d0 * (two * xs[k]);
            q.z = zs[k] * T::from_usize_lossy(j);
            q
        };
        let parts: [(&dyn Fn(usize, usize) -> Vector3<T>, usize, bool); 2] =
            [(&fold, across, competitor.is_none()), (&wall, 1, true)];
        for (p, cols, fan) in parts {
            for k in 0..xs.len() - 1 {
                for j in 0..cols {
                    if k == 0 && fan {
                        // the whole first station is a single point
                        b.triangle(p(0, 0), p(1, j), p(1, j + 1), false);
                    } else {
                        b.triangle(p(k, j), p(k + 1, j), p(k + 1, j + 1), false);
                        b.triangle(p(k, j), p(k + 1, j + 1), p(k, j + 1), false);
                    }
                }
            }
        }
    }
    if competitor.is_some() {
        b.subdivided_triangle(u[0] * (two * inner), u[1] * (two * inner), u[2] * (two * inner), across, true);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones2d::{build, ClipRegion, ConeSpec};
    use crate::geom::energy;

    fn flat_square(n: usize) -> TriMesh<f64> {
        let mut b = MeshBuilder::new(1e-12);
        let p = |i: usize, j: usize| Vector3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0);
        for i in 0..n {
            for j in 0..n {
                b.triangle(p(i, j), p(i + 1, j), p(i + 1, j + 1), true);
                b.triangle(p(i, j), p(i + 1, j + 1), p(i, j + 1), true);
            }
        }
        b.finish().unwrap()
    }

    fn bumpy_sheet(n: usize) -> TriMesh<f64> {
        let mut b = MeshBuilder::new(1e-12);
        let p = |i: usize, j: usize| {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            Vector3::new(x, y, 0.3 + 0.1 * (3.0 * x).sin() * (2.0 * y).cos())
        };
        for i in 0..n {
            for j in 0..n {
                b.triangle(p(i, j), p(i + 1, j), p(i + 1, j + 1), false);
                b.triangle(p(i, j), p(i + 1, j + 1), p(i, j + 1), false);
            }
        }
        b.finish().unwrap()
    }

    #[test]
    fn flat_square_is_stationary() {
        let m = flat_square(6);
        let boundary: Vec<bool> = m.vertices.iter().map(|v| v.x == 0.0 || v.x == 1.0 || v.y == 0.0 || v.y == 1.0).collect();
        let mut cfg = EvolveConfig::new(0.4);
        cfg.pins = Some(boundary.clone());
        let status = vertex_status(&m, Some(&boundary)).unwrap();
        let g = energy_gradient(&m, 0.4, &status).unwrap();
        assert!(g.iter().all(|v| v.norm() < 1e-15));
        let t = descend(&m, &cfg).unwrap();
        assert!(t.energies.iter().all(|e| (e - 0.4).abs() < 1e-15));
        assert!(descend(&m, &EvolveConfig::new(0.4)).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = jitter(&bumpy_sheet(8), 1e-2, 3).unwrap();
        for alpha in [0.0, 0.6, 1.0] {
            assert!(gradient_check(&m, alpha, 1e-5).unwrap() <= 1e-5);
        }
        let t = jitter(&build(&ConeSpec::TPlus, &ClipRegion::SimplexCanonical, 4).unwrap().mesh, 1e-3, 42).unwrap();
        assert!(gradient_check(&t, 0.6, 1e-5).unwrap() <= 1e-5);
        assert!(gradient_check(&t, 0.6, 1e-3).is_err());
    }

    #[test]
    fn projections() {
        let m = build(&ConeSpec::TPlus, &ClipRegion::SimplexCanonical, 3).unwrap().mesh;
        let status = vertex_status(&m, None).unwrap();
        let g = energy_gradient(&m, 0.6, &status).unwrap();
        for (s, v) in status.iter().zip(&g) {
            match s {
                VertexStatus::Pinned => assert_eq!(*v, Vector3::zero()),
                VertexStatus::Sliding => assert_eq!(v.z, 0.0),
                VertexStatus::Free => {}
            }
        }
        assert!(status.contains(&VertexStatus::Sliding));
    }

    #[test]
    fn sheet_relaxes_monotonically_and_keeps_pins() {
        let m = bumpy_sheet(6);
        let mut cfg = EvolveConfig::new(0.5);
        cfg.max_iters = 300;
        let t = descend(&m, &cfg).unwrap();
        assert!(t.energies.windows(2).all(|w| w[1] <= w[0]));
        assert!(*t.energies.last().unwrap() < t.energies[0]);
        let status = vertex_status(&m, None).unwrap();
        for (i, s) in status.iter().enumerate() {
            if *s == VertexStatus::Pinned {
                assert_eq!(t.final_mesh.vertices[i], m.vertices[i]);
            }
        }
        let final_e = energy(&t.final_mesh, 0.5).unwrap().j_alpha;
        assert!((final_e - t.energies.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let m = jitter(&bumpy_sheet(5), 1e-2, 9).unwrap();
        let mut cfg = EvolveConfig::new(0.3);
        cfg.max_iters = 100;
        let a = descend(&m, &cfg).unwrap();
        let b = descend(&m, &cfg).unwrap();
        assert_eq!(a.energies, b.energies);
    }

    #[test]
    fn graded_meshes() {
        let cone = 4.0 * 2f64.sqrt() / 3.0;
        let m = graded_t_plus_mesh(1e-3, 20, 4).unwrap();
        assert!((energy(&m, 0.3).unwrap().j_alpha - cone).abs() < 1e-12);
        let status = vertex_status(&m, None).unwrap();
        assert_eq!(status[0], VertexStatus::Sliding);
        assert!(status.contains(&VertexStatus::Pinned) && status.contains(&VertexStatus::Free));
        let g = energy_gradient(&m, 0.6, &status).unwrap();
        assert!(g.iter().all(|v| v.norm() < 1e-12), "the cone is stationary");
        for x0 in [0.003f64, 0.05] {
            let c = graded_competitor_mesh(x0, 30, 4).unwrap();
            let q = crate::compete::competitor_energy(x0, 0.6).unwrap().j_competitor_quadrature;
            assert!((energy(&c, 0.6).unwrap().j_alpha - q).abs() < 5e-3 * x0);
        }
        assert!(graded_t_plus_mesh(0.0, 20, 4).is_err());
        assert!(graded_t_plus_mesh(1e-3, 1, 4).is_err());
    }

    #[test]
    fn jitter_respects_constraints() {
        let m = graded_t_plus_mesh(1e-3, 10, 3).unwrap();
        let status = vertex_status(&m, None).unwrap();
        let a = jitter(&m, 1e-3, 42).unwrap();
        assert_eq!(a, jitter(&m, 1e-3, 42).unwrap());
        assert_ne!(a, jitter(&m, 1e-3, 43).unwrap());
        let mut moved = 0;
        for ((p, q), s) in m.vertices.iter().zip(&a.vertices).zip(&status) {
            assert!(q.z >= 0.0);
            match s {
                VertexStatus::Free => moved += usize::from(p != q),
                _ => assert_eq!(p, q),
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn slivers_collapse() {
        // a tent whose apex sits almost on one rim vertex
        let mut x = vec![Vector3::new(1.0 - 1e-6, 0.0, 0.501)];
        x.extend((0..6).map(|k| {
            let t = std::f64::consts::PI * k as f64 / 3.0;
            Vector3::new(t.cos(), t.sin(), 0.5)
        }));
        let tris: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
        let mut ws = Workspace::new(7, tris);
        let mut status = vec![VertexStatus::Free];
        status.extend([VertexStatus::Pinned; 6]);
        let mut flags = vec![false; 6];
        let mut scale = vec![1.0; 7];
        let before = ws.energy(&x, &flags, 0.5);
        assert_eq!(ws.collapse_short_edges(&mut x, &mut status, &mut flags, &mut scale, 1e-2, 0.5), 1);
        assert_eq!(ws.triangles.len(), 4);
        assert!(ws.triangles.iter().all(|t| !t.contains(&0)));
        let hexagon = 6.0 * 3f64.sqrt() / 4.0;
        let after = ws.energy(&x, &flags, 0.5);
        assert!(after < before && (after - hexagon).abs() < 1e-12);
        // pinned pairs never merge
        assert_eq!(ws.collapse_short_edges(&mut x, &mut status, &mut flags, &mut vec![1e9; 7], 1.0, 0.5), 0);
    }

    #[test]
    fn t_plus_stays_put_above_threshold() {
        let m = t_plus_start::<f64>(42).unwrap();
        let mut cfg = EvolveConfig::new(0.95);
        cfg.max_iters = 2000;
        let t = descend(&m, &cfg).unwrap();
        let cone = 4.0 * 2f64.sqrt() / 3.0;
        assert!(*t.energies.last().unwrap() >= cone - 1e-6);
        let e = energy(&t.final_mesh, 0.95).unwrap().j_alpha;
        assert!((e - t.energies.last().unwrap()).abs() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn traces_are_monotone(alpha in 0.0f64..=1.0, seed in 0u64..1000, amp in 1e-4f64..2e-2) {
            let m = jitter(&bumpy_sheet(5), amp, seed).unwrap();
            let mut cfg = EvolveConfig::new(alpha);
            cfg.max_iters = 60;
            let t = descend(&m, &cfg).unwrap();
            proptest::prop_assert!(t.energies.windows(2).all(|w| w[1] <= w[0]));
            let e = energy(&t.final_mesh, alpha).unwrap().j_alpha;
            proptest::prop_assert!((e - t.energies.last().unwrap()).abs() < 1e-12);
        }
    }
}

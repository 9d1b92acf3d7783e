use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones1d::{Cone1D, RAY_TOL};
use crate::error::{domain, Result};
use crate::geom::{check_alpha, energy, MeshBuilder, TriMesh, Vector3};
use crate::scalar::{compensated_sum, Real};

/// Smooth compactly supported bump `amplitude * exp(1 - 1/(1 - u^2))`, `u = (y - center)/width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump<T> {
    pub amplitude: T,
    pub center: T,
    pub width: T,
}

impl<T: Real> Bump<T> {
    pub fn eval(&self, y: T) -> T {
        let u = (y - self.center) / self.width;
        let s = T::one() - u * u;
        if s <= T::zero() {
            T::zero()
        } else {
            self.amplitude * (T::one() - T::one() / s).exp()
        }
    }
}

fn ray_dir<T: Real>(phi: T) -> Vector3<T> {
    let (s, c) = phi.sin_cos();
    Vector3::new(c, T::zero(), s)
}

fn on_boundary<T: Real>(phi: T) -> bool {
    phi <= T::lit(RAY_TOL) || phi >= T::PI() - T::lit(RAY_TOL)
}

/// `cone x [0, length]` along `y`, rays cut at `radius`; each ray strip is an
/// `n x n` grid of quads split into triangles.
fn product_mesh<T: Real>(
    cone: &Cone1D<T>,
    length: T,
    radius: T,
    n: usize,
    bump: Option<&Bump<T>>,
) -> Result<TriMesh<T>> {
    cone.validate()?;
    if !(length > T::zero() && radius > T::zero()) {
        return domain("product length and radius must be positive");
    }
    if n == 0 {
        return domain("refine must be at least 1");
    }
    let nf = T::from_usize_lossy(n);
    let mut b = MeshBuilder::new(T::lit(1e-12));
    for phi in cone.rays() {
        let dir = ray_dir(phi);
        let flat = on_boundary(phi);
        // in-plane normal to the ray, pointing up
        let mut normal = Vector3::new(-dir.z, T::zero(), dir.x);
        if normal.z < T::zero() || (normal.z == T::zero() && normal.x < T::zero()) {
            normal = -normal;
        }
        let at = |i: usize, k: usize| {
            let r = radius * T::from_usize_lossy(i) / nf;
            let y = length * T::from_usize_lossy(k) / nf;
            let mut p = dir * r + Vector3::unit_y() * y;
            if let (Some(bump), false) = (bump, flat) {
                p += normal * (bump.eval(y) * (T::PI() * r / radius).sin());
            }
            p
        };
        for i in 0..n {
            for k in 0..n {
                b.triangle(at(i, k), at(i + 1, k), at(i + 1, k + 1), flat);
                b.triangle(at(i, k), at(i + 1, k + 1), at(i, k + 1), flat);
            }
        }
    }
    b.finish()
}

pub fn build_product<T: Real>(cone: &Cone1D<T>, length: T, radius: T, refine: usize) -> Result<TriMesh<T>> {
    product_mesh(cone, length, radius, refine, None)
}

/// Product mesh whose off-boundary rays are pushed out of their plane by `bump(y)`,
/// vanishing at both ends of each ray.
pub fn perturbed_product<T: Real>(
    cone: &Cone1D<T>,
    length: T,
    radius: T,
    refine: usize,
    bump: &Bump<T>,
) -> Result<TriMesh<T>> {
    product_mesh(cone, length, radius, refine, Some(bump))
}

fn slab<T: Real>(mesh: &TriMesh<T>, axis: &Vector3<T>) -> (T, T) {
    mesh.vertices.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
        let s = v.dot(axis);
        (lo.min(s), hi.max(s))
    })
}

fn unit_axis<T: Real>(axis: &Vector3<T>) -> Result<Vector3<T>> {
    match axis.normalized() {
        Some(a) => Ok(a),
        None => domain("slicing axis must be non-zero"),
    }
}

fn slice_unchecked<T: Real>(mesh: &TriMesh<T>, axis: &Vector3<T>, t: T, alpha: T) -> T {
    compensated_sum(mesh.triangles.iter().zip(&mesh.gamma_flags).map(|(tri, &flag)| {
        let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        let s = [p[0].dot(axis) - t, p[1].dot(axis) - t, p[2].dot(axis) - t];
        // a vertex on the plane counts as above, so shared edges are cut once
        let mut hits = Vec::with_capacity(2);
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            if (s[a] >= T::zero()) != (s[b] >= T::zero()) {
                let w = s[a] / (s[a] - s[b]);
                hits.push(p[a] + (p[b] - p[a]) * w);
            }
        }
        if hits.len() == 2 {
            let len = hits[0].distance(&hits[1]);
            if flag {
                alpha * len
            } else {
                len
            }
        } else {
            T::zero()
        }
    }))
}

/// Weighted length of the section of `mesh` by the plane `axis . p = t`.
pub fn slice_energy_profile<T: Real>(mesh: &TriMesh<T>, axis: &Vector3<T>, t: T, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let axis = unit_axis(axis)?;
    let (lo, hi) = slab(mesh, &axis);
    if !(t > lo && t < hi) {
        return domain(format!("t = {t} outside the slab ({lo}, {hi})"));
    }
    Ok(slice_unchecked(mesh, &axis, t, alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FubiniReport<T> {
    /// Midpoint-rule integral of the section energies.
    pub integral: T,
    /// Energy of the mesh itself.
    pub direct: T,
}

pub fn fubini_check<T: Real>(mesh: &TriMesh<T>, axis: &Vector3<T>, alpha: T, n_slices: usize) -> Result<FubiniReport<T>> {
    let direct = energy(mesh, alpha)?.j_alpha;
    let axis = unit_axis(axis)?;
    if n_slices == 0 {
        return domain("need at least one slice");
    }
    let (lo, hi) = slab(mesh, &axis);
    let h = (hi - lo) / T::from_usize_lossy(n_slices);
    let slices: Vec<T> = (0..n_slices)
        .into_par_iter()
        .map(|k| slice_unchecked(mesh, &axis, lo + h * (T::from_usize_lossy(k) + T::lit(0.5)), alpha))
        .collect();
    Ok(FubiniReport { integral: compensated_sum(slices) * h, direct })
}

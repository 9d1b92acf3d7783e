//! Vectors, rotations, triangle meshes and convex polytopes.

mod mesh;
pub mod off;
mod polytope;
mod rotation;
mod vector;

pub use mesh::{
    energy, triangle_area, MeshBuilder, SlidingEnergy, TriMesh, DEGENERATE_AREA, GAMMA_Z_TOL, Z_FLOOR,
};
pub(crate) use mesh::check_alpha;
pub use polytope::{clip_polygon, plane_square, polygon_area, ConvexRegion, Face, FaceTag, HalfSpace};
pub use rotation::{reflect_x, RotationY};
pub use vector::Vector3;

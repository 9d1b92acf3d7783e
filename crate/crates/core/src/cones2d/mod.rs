//! Two-dimensional sliding cones in the half-space `z >= 0`.
//!
//! Each non-product cone is described by a partition of the half-space into
//! convex polyhedral regions; folds are the interfaces between regions and
//! boundary sectors are the parts of `z = 0` that belong to the cone.

mod clip;
mod geometry;
mod product;
mod profile;

pub use clip::{build, ClipRegion, ConeMesh, Partition, TriangleLabel, BALL_LATITUDES, BALL_LONGITUDES};
pub use geometry::{cone_geometry, gamma_rays, hemisphere_net, ConeGeometry, Fold, FoldKind, GammaSector, Sector};
pub use product::{
    build_product, fubini_check, perturbed_product, slice_energy_profile, Bump, FubiniReport,
};
pub use profile::{
    boundary_profile_check, profile_kind, required_alpha, ContactThreshold, ProfileReport, RayProfile, Relation,
    RequiredAlpha,
};

use serde::{Deserialize, Serialize};

use crate::cones1d::Cone1D;
use crate::error::{domain, Result};
use crate::scalar::Real;

/// Ray identity tolerance on direction cosines.
pub const RAY_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum ConeSpec<T> {
    /// Tetrahedral cone with one vertex pointing into the boundary plane.
    TPlus,
    /// Y cone tilted so its spine makes angle `beta` with the boundary plane.
    YBeta { beta: T },
    /// Reflected Y cone, tilted the same way.
    YBarBeta { beta: T },
    /// Two tilted Y cones joined by a vertical fold.
    WBeta { beta: T },
    /// A one-dimensional cone times a segment of the `y` axis.
    Product { cone: Cone1D<T>, length: T },
}

impl<T: Real> ConeSpec<T> {
    pub fn beta(&self) -> Option<T> {
        match *self {
            ConeSpec::YBeta { beta } | ConeSpec::YBarBeta { beta } | ConeSpec::WBeta { beta } => Some(beta),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(beta) = self.beta() {
            if !(beta >= T::zero() && beta <= T::FRAC_PI_2()) {
                return domain(format!("beta = {beta} outside [0, pi/2]"));
            }
        }
        if let ConeSpec::Product { cone, length } = self {
            cone.validate()?;
            if !(*length > T::zero() && length.is_finite()) {
                return domain(format!("product length {length} must be positive"));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConeSpec::TPlus => "t-plus",
            ConeSpec::YBeta { .. } => "y-beta",
            ConeSpec::YBarBeta { .. } => "ybar-beta",
            ConeSpec::WBeta { .. } => "w-beta",
            ConeSpec::Product { .. } => "product",
        }
    }
}

use serde::{Deserialize, Serialize};

use super::geometry::{cone_geometry, FoldKind};
use super::ConeSpec;
use crate::cones1d::{classify_branches, BranchCone, Cone1D, Verdict, CONDITION_TOL, RAY_TOL};
use crate::error::Result;
use crate::geom::{check_alpha, Vector3};
use crate::scalar::Real;
use crate::spherenet::normal_section;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// The weight must equal the value.
    Equal,
    /// The weight must be at least the value.
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequiredAlpha<T> {
    pub alpha: T,
    pub relation: Relation,
    /// For the W family: whether the calibration exists at this tilt.
    pub admissible: Option<bool>,
}

/// Weight for which the cone can be sliding minimal.
pub fn required_alpha<T: Real>(spec: &ConeSpec<T>) -> Result<Option<RequiredAlpha<T>>> {
    spec.validate()?;
    let h = T::lit(3.0).sqrt() / T::lit(2.0);
    Ok(match *spec {
        ConeSpec::TPlus => Some(RequiredAlpha {
            alpha: (T::lit(2.0) / T::lit(3.0)).sqrt(),
            relation: Relation::AtLeast,
            admissible: None,
        }),
        ConeSpec::YBeta { beta } | ConeSpec::YBarBeta { beta } => {
            Some(RequiredAlpha { alpha: h * beta.cos(), relation: Relation::Equal, admissible: None })
        }
        ConeSpec::WBeta { beta } => Some(RequiredAlpha {
            alpha: h * beta.cos(),
            relation: Relation::Equal,
            admissible: Some(beta.sin() <= T::one() / T::lit(3.0).sqrt() + T::lit(1e-12)),
        }),
        ConeSpec::Product { .. } => None,
    })
}

/// Names the one-dimensional profile a branch cone is an instance of, if any.
pub fn profile_kind<T: Real>(cone: &BranchCone<T>) -> Option<Cone1D<T>> {
    let tol = T::lit(RAY_TOL);
    let pi = T::PI();
    let in_gamma = |r: T| r <= tol || r >= pi - tol;
    let vertical = |r: T| (r - T::FRAC_PI_2()).abs() <= tol;
    let rays = cone.rays();
    let (on, off): (Vec<T>, Vec<T>) = rays.iter().partition(|&&r| in_gamma(r));
    match (on.len(), off.len()) {
        (0, 1) if vertical(off[0]) => Some(Cone1D::Vertical),
        (2, 0) => Some(Cone1D::Gamma),
        (2, 1) if vertical(off[0]) => Some(Cone1D::GammaPlusVertical),
        (1, 1) => {
            let theta = if on[0] > T::FRAC_PI_2() { off[0] } else { pi - off[0] };
            (theta <= T::FRAC_PI_2() + tol).then(|| Cone1D::SlopedPlusHorizontal(theta.min(T::FRAC_PI_2())))
        }
        (0, 2) if (off[0] + off[1] - pi).abs() <= T::lit(CONDITION_TOL) => Some(Cone1D::Vee(off[0])),
        _ => None,
    }
}

/// Blow-up of the cone at one boundary ray.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayProfile<T> {
    pub ray: Vector3<T>,
    /// Angles of the cross-section's branches, measured from the boundary plane.
    pub section: Vec<T>,
    pub profile: Option<Cone1D<T>>,
    /// Cosine of the fold's angle with the boundary plane, for a sloped profile.
    pub cos_gamma: Option<T>,
    pub verdict: Verdict<T>,
    pub pass: bool,
}

/// A sloping fold that a competitor could bend down onto the boundary plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactThreshold<T> {
    pub fold: [usize; 2],
    pub cos_gamma: T,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport<T> {
    pub alpha: T,
    pub rays: Vec<RayProfile<T>>,
    pub contact_thresholds: Vec<ContactThreshold<T>>,
    pub pass: bool,
}

/// Checks that every boundary ray carries a minimal one-dimensional profile.
pub fn boundary_profile_check<T: Real>(spec: &ConeSpec<T>, alpha: T) -> Result<ProfileReport<T>> {
    check_alpha(alpha)?;
    let geom = cone_geometry(spec)?;
    let mut rays = Vec::new();
    for q in &geom.gamma_rays {
        let dirs: Vec<Vector3<T>> = geom
            .folds
            .iter()
            .flat_map(|f| f.sectors.iter())
            .chain(geom.gamma_sectors.iter().flat_map(|g| g.pieces.iter()))
            .filter_map(|s| s.tangent_from(q))
            .collect();
        let section = normal_section(q, &dirs)?;
        let profile = profile_kind(&section);
        let cos_gamma = match profile {
            Some(Cone1D::SlopedPlusHorizontal(theta)) => Some(theta.cos()),
            _ => None,
        };
        let verdict = classify_branches(&section, alpha)?;
        let pass = verdict.is_minimal();
        rays.push(RayProfile { ray: *q, section: section.rays().to_vec(), profile, cos_gamma, verdict, pass });
    }
    let mut contact_thresholds = Vec::new();
    if let ConeSpec::TPlus = spec {
        // no sloping fold touches the boundary, but bending one down is the competitor to beat
        for f in geom.folds.iter().filter(|f| f.kind == FoldKind::Sloping) {
            let cos_gamma = f.normal.z.abs();
            contact_thresholds.push(ContactThreshold {
                fold: f.regions,
                cos_gamma,
                relation: Relation::AtLeast,
                pass: alpha >= cos_gamma - T::lit(CONDITION_TOL),
            });
        }
    }
    let pass = rays.iter().all(|r| r.pass) && contact_thresholds.iter().all(|c| c.pass);
    Ok(ProfileReport { alpha, rays, contact_thresholds, pass })
}

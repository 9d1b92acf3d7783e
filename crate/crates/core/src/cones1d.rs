//! One-dimensional cones in the closed upper half-plane and their minimality.
//!
//! Angles are measured from the positive boundary direction; `0` and `pi`
//! denote rays lying in the boundary line.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geom::check_alpha;
use crate::roots::golden_section_min;
use crate::scalar::Real;

/// Tolerance for the exact equalities in the minimality conditions.
pub const CONDITION_TOL: f64 = 1e-12;
/// Angular tolerance deciding whether a ray lies in the boundary line or is vertical.
pub const RAY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "theta", rename_all = "snake_case")]
pub enum Cone1D<T> {
    /// The whole boundary line.
    Gamma,
    /// A single vertical half-line.
    Vertical,
    GammaPlusVertical,
    /// Ray at angle `theta` plus the boundary half-line on the opposite side.
    SlopedPlusHorizontal(T),
    /// Ray at `theta` and its mirror image across the vertical axis.
    Vee(T),
}

impl<T: Real> Cone1D<T> {
    pub fn theta(&self) -> Option<T> {
        match *self {
            Cone1D::SlopedPlusHorizontal(t) | Cone1D::Vee(t) => Some(t),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.theta() {
            Some(t) if !(t > T::zero() && t <= T::FRAC_PI_2()) => domain(format!("theta = {t} outside (0, pi/2]")),
            _ => Ok(()),
        }
    }

    /// Ray angles in `[0, pi]`, increasing.
    pub fn rays(&self) -> Vec<T> {
        let pi = T::PI();
        match *self {
            Cone1D::Gamma => vec![T::zero(), pi],
            Cone1D::Vertical => vec![T::FRAC_PI_2()],
            Cone1D::GammaPlusVertical => vec![T::zero(), T::FRAC_PI_2(), pi],
            Cone1D::SlopedPlusHorizontal(t) => vec![t, pi],
            Cone1D::Vee(t) => vec![t, pi - t],
        }
    }
}

/// A weight together with its critical contact angle `arccos(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaAlpha<T> {
    pub alpha: T,
    pub theta_alpha: T,
}

impl<T: Real> ThetaAlpha<T> {
    pub fn new(alpha: T) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, theta_alpha: alpha.acos() })
    }
}

/// Finite union of distinct rays from the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCone<T> {
    rays: Vec<T>,
}

impl<T: Real> BranchCone<T> {
    pub fn new(rays: Vec<T>) -> Result<Self> {
        if rays.is_empty() || rays.len() > 6 {
            return domain(format!("{} rays; expected 1..=6", rays.len()));
        }
        if rays.iter().any(|&r| !(r >= T::zero() && r <= T::PI())) {
            return domain("ray angles must lie in [0, pi]");
        }
        if rays.windows(2).any(|w| w[1] <= w[0]) {
            return domain("ray angles must be strictly increasing");
        }
        Ok(Self { rays })
    }

    pub fn rays(&self) -> &[T] {
        &self.rays
    }
}

fn in_gamma<T: Real>(r: T) -> bool {
    let tol = T::lit(RAY_TOL);
    r <= tol || r >= T::PI() - tol
}

fn is_vertical<T: Real>(r: T) -> bool {
    (r - T::FRAC_PI_2()).abs() <= T::lit(RAY_TOL)
}

fn check_segment_domain<T: Real>(theta: T, alpha: T) -> Result<()> {
    check_alpha(alpha)?;
    Cone1D::SlopedPlusHorizontal(theta).validate()
}

/// Weighted length of the broken line `(-1,0) -> (x,0) -> (cos theta, sin theta)`.
pub fn two_segment_energy<T: Real>(theta: T, x: T, alpha: T) -> Result<T> {
    check_segment_domain(theta, alpha)?;
    if !(x > -T::one() && x < T::one()) {
        return domain(format!("x = {x} outside (-1, 1)"));
    }
    let (s, c) = theta.sin_cos();
    Ok(alpha * (T::one() + x) + ((x - c).powi(2) + s * s).sqrt())
}

/// First and second `x`-derivatives of [`two_segment_energy`] at `x = 0`.
pub fn two_segment_derivatives<T: Real>(theta: T, alpha: T) -> Result<(T, T)> {
    check_segment_domain(theta, alpha)?;
    let (s, c) = theta.sin_cos();
    Ok((alpha - c, s * s))
}

/// Catalog minimality test.
pub fn is_minimal<T: Real>(cone: &Cone1D<T>, alpha: T) -> bool {
    let tol = T::lit(CONDITION_TOL);
    match *cone {
        Cone1D::Gamma | Cone1D::Vertical | Cone1D::GammaPlusVertical => true,
        Cone1D::SlopedPlusHorizontal(t) => (t.cos() - alpha).abs() <= tol,
        Cone1D::Vee(t) => {
            let ta = alpha.max(T::zero()).min(T::one()).acos();
            ta - tol <= t && t <= T::FRAC_PI_6() + tol
        }
    }
}

/// Which better competitor rules a cone out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Two branches meeting below 120 degrees are joined into a triple junction.
    PinchY,
    /// A branch is pushed down so part of it lies in the boundary.
    PushToGamma,
    /// Off-boundary branches are projected onto the boundary.
    ProjectToGamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict<T> {
    Minimal { cone: Cone1D<T> },
    NonMinimal { witness: Witness },
}

impl<T> Verdict<T> {
    pub fn is_minimal(&self) -> bool {
        matches!(self, Verdict::Minimal { .. })
    }
}

/// Case analysis on the number of branches and how many lie in the boundary.
pub fn classify_branches<T: Real>(cone: &BranchCone<T>, alpha: T) -> Result<Verdict<T>> {
    check_alpha(alpha)?;
    let rays = cone.rays();
    let pi = T::PI();
    let tol = T::lit(RAY_TOL);
    let (on, off): (Vec<T>, Vec<T>) = rays.iter().partition(|&&r| in_gamma(r));
    let minimal = |c: Cone1D<T>| {
        if is_minimal(&c, alpha) {
            Verdict::Minimal { cone: c }
        } else {
            Verdict::NonMinimal { witness: Witness::PushToGamma }
        }
    };
    let non = |w| Ok(Verdict::NonMinimal { witness: w });

    match (rays.len(), on.len()) {
        (1, 0) if is_vertical(off[0]) => Ok(Verdict::Minimal { cone: Cone1D::Vertical }),
        (1, 0) => non(Witness::PushToGamma),
        (1, _) => non(Witness::ProjectToGamma),
        (2, 2) => Ok(Verdict::Minimal { cone: Cone1D::Gamma }),
        (2, 1) => {
            // angle to the empty half of the boundary
            let theta = if on[0] > pi / T::lit(2.0) { off[0] } else { pi - off[0] };
            if theta > T::FRAC_PI_2() + tol {
                return non(Witness::PushToGamma);
            }
            Ok(minimal(Cone1D::SlopedPlusHorizontal(theta.min(T::FRAC_PI_2()))))
        }
        (2, _) => {
            let (a, b) = (off[0], off[1]);
            if (a + b - pi).abs() > T::lit(CONDITION_TOL) {
                // the vertex can slide along the boundary
                return non(Witness::PushToGamma);
            }
            if a > T::FRAC_PI_6() + T::lit(CONDITION_TOL) {
                return non(Witness::PinchY);
            }
            Ok(minimal(Cone1D::Vee(a)))
        }
        (3, 0) => non(Witness::PinchY),
        (3, 2) if is_vertical(off[0]) => Ok(Verdict::Minimal { cone: Cone1D::GammaPlusVertical }),
        (3, 2) => non(Witness::ProjectToGamma),
        (3, _) => {
            // one boundary ray: a sloped ray within a right angle of it is pushed down
            let g = on[0];
            if off.iter().any(|&r| (r - g).abs() < T::FRAC_PI_2()) {
                non(Witness::PushToGamma)
            } else {
                non(Witness::PinchY)
            }
        }
        (_, _) if off.len() >= 3 => non(Witness::PinchY),
        _ => non(Witness::ProjectToGamma),
    }
}

/// Minimizer of [`two_segment_energy`] over `x in [-0.999, cos theta]`:
/// uniform grid, then golden-section refinement in the best cell.
///
/// Comparisons use energy differences to a reference point, written without
/// cancellation, so the argmin is resolved well below `sqrt(eps)`.
pub fn brute_force_minimum<T: Real>(theta: T, alpha: T, grid_n: usize) -> Result<(T, T)> {
    check_segment_domain(theta, alpha)?;
    if grid_n < 1000 {
        return domain(format!("grid_n = {grid_n} < 1000"));
    }
    let (s, c) = theta.sin_cos();
    let lo = T::lit(-0.999);
    let hi = c;
    let dist = |x: T| ((x - c).powi(2) + s * s).sqrt();
    // J(x) - J(xr) without cancellation
    let rel_to = |xr: T| {
        let dr = dist(xr);
        move |x: T| {
            let dx = x - xr;
            alpha * dx + dx * (x + xr - T::lit(2.0) * c) / (dist(x) + dr)
        }
    };
    let n = T::from_usize_lossy(grid_n);
    let at = |i: usize| lo + (hi - lo) * T::from_usize_lossy(i) / n;
    let rel0 = rel_to(T::zero().max(lo).min(hi));
    let best = (0..=grid_n).map(|i| (i, rel0(at(i)))).fold((0, T::infinity()), |b, p| if p.1 < b.1 { p } else { b }).0;
    let a = at(best.saturating_sub(1));
    let b = at((best + 1).min(grid_n));
    let (x, _) = golden_section_min(rel_to(at(best)), a, b, T::lit(1e-13));
    let j = alpha * (T::one() + x) + dist(x);
    Ok((x, j))
}

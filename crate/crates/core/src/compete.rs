//! Pinched competitors for the half-tetrahedral cone.
//!
//! The sloping folds are bent along `z(x) = x/sqrt2 + c ln(3x/sqrt2)` so that
//! they touch the boundary plane in an equilateral triangle of apothem `x0`,
//! where `z(x0) = 0`; `x` is the distance from the origin along a fold's
//! apothem direction and runs up to `sqrt2/3`, where `z = 1/3`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geom::{check_alpha, MeshBuilder, TriMesh, Vector3};
use crate::quadrature::{integrate, QuadConfig};
use crate::roots::bisect_newton;
use crate::scalar::Real;

/// Outer end of the profile, `sqrt2/3`.
pub fn x_top<T: Real>() -> T {
    T::SQRT_2() / T::lit(3.0)
}

/// Energy of the uncut half-tetrahedral cone in its canonical clip, `4 sqrt2 / 3`.
pub fn cone_energy<T: Real>() -> T {
    T::lit(4.0) * T::SQRT_2() / T::lit(3.0)
}

/// Weight at and above which no competitor of the family wins, `sqrt(2/3)`.
pub fn threshold_alpha<T: Real>() -> T {
    (T::lit(2.0) / T::lit(3.0)).sqrt()
}

fn log_scaled<T: Real>(x: T) -> T {
    (T::lit(3.0) / T::SQRT_2() * x).ln()
}

/// Profile height and slope at `x`.
pub fn profile<T: Real>(x: T, c: T) -> Result<(T, T)> {
    if !(x > T::zero()) || !(c >= T::zero()) {
        return domain(format!("profile needs x > 0 and c >= 0 (x = {x}, c = {c})"));
    }
    Ok((x / T::SQRT_2() + c * log_scaled(x), T::one() / T::SQRT_2() + c / x))
}

fn check_x0<T: Real>(x0: T) -> Result<()> {
    if !(x0 > T::zero() && x0 < x_top()) {
        return domain(format!("x0 = {x0} outside (0, sqrt2/3)"));
    }
    Ok(())
}

/// Bending strength that puts the contact at `x0`.
pub fn c_from_x0<T: Real>(x0: T) -> Result<T> {
    check_x0(x0)?;
    let l = log_scaled(x0);
    let c = -x0 / (T::SQRT_2() * l);
    if !(l < T::zero()) || !c.is_finite() {
        return Err(Error::Divergent(format!("c diverges as x0 = {x0} approaches sqrt2/3")));
    }
    Ok(c)
}

/// Contact abscissa for bending strength `c`: root of the (strictly
/// increasing) profile, bracketed in `ln x` then polished.
pub fn solve_x0<T: Real>(c: T) -> Result<T> {
    if !(c > T::zero() && c.is_finite()) {
        return domain(format!("c = {c} must be positive and finite"));
    }
    let shift = (T::lit(3.0) / T::SQRT_2()).ln();
    let f = |u: T| u.exp() / T::SQRT_2() + c * (u + shift);
    let df = |u: T| u.exp() / T::SQRT_2() + c;
    let hi = x_top::<T>().ln();
    let u = bisect_newton(f, df, T::lit(-740.0), hi, T::lit(1e-15))?;
    Ok(u.exp())
}

/// A consistent `(x0, c)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitorParams<T> {
    pub x0: T,
    pub c: T,
}

impl<T: Real> CompetitorParams<T> {
    pub fn from_x0(x0: T) -> Result<Self> {
        Ok(Self { x0, c: c_from_x0(x0)? })
    }

    pub fn from_c(c: T) -> Result<Self> {
        Ok(Self { x0: solve_x0(c)?, c })
    }

    pub fn z(&self, x: T) -> T {
        x / T::SQRT_2() + self.c * log_scaled(x)
    }
}

/// Areas of one bent fold and one vertical fold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldAreas<T> {
    pub area_b: T,
    pub area_v: T,
    pub area_v_closed: T,
    pub area_b_bound: T,
}

fn quad_cfg<T: Real>() -> QuadConfig<T> {
    QuadConfig::default()
}

pub fn fold_areas<T: Real>(x0: T) -> Result<FoldAreas<T>> {
    let p = CompetitorParams::from_x0(x0)?;
    let c = p.c;
    let top = x_top::<T>();
    let two = T::lit(2.0);
    let sqrt3 = T::lit(3.0).sqrt();

    let slope = |x: T| T::one() / T::SQRT_2() + c / x;
    let area_b = integrate(|x: T| two * sqrt3 * x * (T::one() + slope(x).powi(2)).sqrt(), x0, top, &quad_cfg())?.value;
    let area_v = integrate(|x: T| two * p.z(x), x0, top, &quad_cfg())?.value;

    let v_anti = |x: T| x * x / (two * T::SQRT_2()) + c * x * log_scaled(x) - c * x;
    let area_v_closed = two * (v_anti(top) - v_anti(x0));

    let b_anti = |x: T| {
        (T::lit(1.5)).sqrt() * x * x / two + c / sqrt3 * x + (T::lit(2.0) / T::lit(3.0)).sqrt() * c * c * log_scaled(x)
    };
    let area_b_bound = two * sqrt3 * (b_anti(top) - b_anti(x0));
    Ok(FoldAreas { area_b, area_v, area_v_closed, area_b_bound })
}

/// `-sqrt2 - sqrt2 / ln(3 x0 / sqrt2) + alpha sqrt3`, from `ln(3 x0 / sqrt2)` directly.
pub fn gap_bracket_from_log<T: Real>(log_scaled_x0: T, alpha: T) -> T {
    -T::SQRT_2() - T::SQRT_2() / log_scaled_x0 + alpha * T::lit(3.0).sqrt()
}

pub fn gap_bracket<T: Real>(x0: T, alpha: T) -> T {
    gap_bracket_from_log(log_scaled(x0), alpha)
}

/// Upper bound on the energy change `J(M_c) - J(cone)`.
pub fn gap_bound<T: Real>(x0: T, alpha: T) -> T {
    T::lit(3.0) * x0 * x0 * gap_bracket(x0, alpha)
}

/// Largest weight for which the competitor at `x0` beats the cone.
pub fn threshold<T: Real>(x0: T) -> T {
    threshold_from_log(log_scaled(x0))
}

pub fn threshold_from_log<T: Real>(log_scaled_x0: T) -> T {
    threshold_alpha::<T>() * (T::one() + T::one() / log_scaled_x0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport<T> {
    pub alpha: T,
    pub x0: T,
    pub c: T,
    pub areas: FoldAreas<T>,
    pub j_competitor_quadrature: T,
    pub j_competitor_bound: T,
    pub j_cone: T,
    pub gap_bound: T,
}

pub fn competitor_energy<T: Real>(x0: T, alpha: T) -> Result<GapReport<T>> {
    check_alpha(alpha)?;
    let c = c_from_x0(x0)?;
    let areas = fold_areas(x0)?;
    let three = T::lit(3.0);
    let gamma_area = three * three.sqrt() * x0 * x0;
    Ok(GapReport {
        alpha,
        x0,
        c,
        areas,
        j_competitor_quadrature: three * areas.area_b + three * areas.area_v + alpha * gamma_area,
        j_competitor_bound: three * areas.area_b_bound + three * areas.area_v_closed + alpha * gamma_area,
        j_cone: cone_energy(),
        gap_bound: gap_bound(x0, alpha),
    })
}

/// Outcome of the threshold search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetterCompetitor<T> {
    pub x0: T,
    /// `ln x0`; meaningful even when `x0` itself is far below any mesh scale.
    pub log_x0: T,
    pub bracket: T,
    pub gap_bound: T,
    /// The energy gap is large enough for the quadrature comparison to be meaningful.
    pub quadrature_confirmed: bool,
    pub report: Option<GapReport<T>>,
}

pub const SEARCH_LO: f64 = 1e-8;
pub const SEARCH_HI: f64 = 0.4;
pub const SEARCH_POINTS: usize = 400;
/// Gaps below this fraction of the cone energy are certified by the bracket sign alone.
pub const RESOLVABLE_GAP: f64 = 1e-12;

/// Largest `x0` on a log grid whose competitor provably beats the cone.
///
/// When the winning window lies below the grid (weights just under the
/// threshold) the contact size is placed at half the analytic window edge in
/// log space and certified by the sign of the closed-form bracket.
pub fn find_better_competitor<T: Real>(alpha: T) -> Result<Option<BetterCompetitor<T>>> {
    check_alpha(alpha)?;
    let a0 = threshold_alpha::<T>();
    if alpha >= a0 - T::lit(1e-12) {
        return Ok(None);
    }
    let (lo, hi) = (T::lit(SEARCH_LO).ln(), T::lit(SEARCH_HI).ln());
    let n = SEARCH_POINTS;
    let grid_hit = (0..n)
        .into_par_iter()
        .map(|k| (lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1)).exp())
        .filter(|&x0| alpha <= threshold(x0) && gap_bound(x0, alpha) < T::zero())
        .reduce_with(|a, b| a.max(b));

    let (x0, log_x0) = match grid_hit {
        Some(x0) => (x0, x0.ln()),
        None => {
            let edge = -T::one() / (T::one() - alpha / a0);
            let log_x0 = x_top::<T>().ln() + edge + T::lit(0.5).ln();
            (log_x0.exp(), log_x0)
        }
    };
    let shift = (T::lit(3.0) / T::SQRT_2()).ln();
    let bracket = gap_bracket_from_log(log_x0 + shift, alpha);
    if !(bracket < T::zero()) {
        return Err(Error::Divergent(format!("bracket {bracket} not negative at ln x0 = {log_x0}")));
    }
    let gap = T::lit(3.0) * (T::lit(2.0) * log_x0).exp() * bracket;
    let resolvable = gap.abs() > T::lit(RESOLVABLE_GAP) * cone_energy::<T>();
    let report = if resolvable { Some(competitor_energy(x0, alpha)?) } else { None };
    if let Some(r) = &report {
        if !(r.j_competitor_quadrature < r.j_cone) {
            return Err(Error::Divergent(format!(
                "bound predicts a gain but quadrature gives {} >= {}",
                r.j_competitor_quadrature, r.j_cone
            )));
        }
    }
    Ok(Some(BetterCompetitor { x0, log_x0, bracket, gap_bound: gap, quadrature_confirmed: resolvable, report }))
}

/// Competitor reports on `n` log-spaced contact sizes over the search window.
pub fn sweep<T: Real>(alpha: T, n: usize) -> Result<Vec<GapReport<T>>> {
    check_alpha(alpha)?;
    if n < 2 {
        return domain("need at least two sweep points");
    }
    let (lo, hi) = (T::lit(SEARCH_LO).ln(), T::lit(SEARCH_HI).ln());
    (0..n)
        .into_par_iter()
        .map(|k| competitor_energy((lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(n - 1)).exp(), alpha))
        .collect()
}

/// Horizontal unit directions from the origin to the three corners of the contact triangle.
pub fn corner_directions<T: Real>() -> [Vector3<T>; 3] {
    let h = T::lit(3.0).sqrt() / T::lit(2.0);
    let m = -T::lit(0.5);
    [Vector3::new(T::one(), T::zero(), T::zero()), Vector3::new(m, h, T::zero()), Vector3::new(m, -h, T::zero())]
}

/// Triangulated competitor with `samples` log-spaced stations on `[x0, sqrt2/3]`.
///
/// Every strip is a planar trapezoid, so the mesh is exact on the stations.
pub fn competitor_mesh<T: Real>(x0: T, samples: usize) -> Result<TriMesh<T>> {
    let p = CompetitorParams::from_x0(x0)?;
    if samples < 2 {
        return domain("need at least two stations");
    }
    let top = x_top::<T>();
    let ratio = (top / x0).ln();
    let xs: Vec<T> = (0..samples)
        .map(|k| if k + 1 == samples { top } else { x0 * (ratio * T::from_usize_lossy(k) / T::from_usize_lossy(samples - 1)).exp() })
        .collect();
    let zs: Vec<T> = xs.iter().enumerate().map(|(k, &x)| if k == 0 { T::zero() } else { p.z(x).max(T::zero()) }).collect();
    let u = corner_directions::<T>();
    let two = T::lit(2.0);
    let lift = |d: &Vector3<T>, k: usize, on_top: bool| {
        let mut q = *d * (two * xs[k]);
        if on_top {
            q.z = zs[k];
        }
        q
    };
    let mut b = MeshBuilder::new(T::lit(1e-12));
    for i in 0..3 {
        let (d0, d1) = (&u[i], &u[(i + 1) % 3]);
        for k in 0..samples - 1 {
            // bent fold between corners i and i+1
            b.triangle(lift(d0, k, true), lift(d1, k, true), lift(d1, k + 1, true), false);
            b.triangle(lift(d0, k, true), lift(d1, k + 1, true), lift(d0, k + 1, true), false);
            // vertical fold under corner i
            b.triangle(lift(d0, k, false), lift(d0, k + 1, false), lift(d0, k + 1, true), false);
            b.triangle(lift(d0, k, false), lift(d0, k + 1, true), lift(d0, k, true), false);
        }
    }
    b.triangle(u[0] * (two * x0), u[1] * (two * x0), u[2] * (two * x0), true);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::energy;
    use proptest::prelude::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn profile_reference_values() {
        assert_eq!(profile(0.3, 0.0).unwrap(), (0.3 / SQRT2, 1.0 / SQRT2));
        let (z, _) = profile(SQRT2 / 3.0, 0.7).unwrap();
        assert!((z - 1.0 / 3.0).abs() < 1e-15);
        let (z, dz) = profile(0.2, 0.05).unwrap();
        let want = 0.2 / SQRT2 + 0.05 * (3.0 / SQRT2 * 0.2f64).ln();
        assert!((z - want).abs() < 1e-15 && (z - 0.098_551_395_535).abs() < 1e-11);
        assert!((dz - (1.0 / SQRT2 + 0.25)).abs() < 1e-15);
        assert!(profile(0.0, 0.1).is_err());
        assert!(profile(0.1, -0.1).is_err());
    }

    #[test]
    fn c_and_x0_round_trip() {
        let x0 = SQRT2 / 3.0 * (-1.0f64).exp();
        assert!((c_from_x0(x0).unwrap() - x0 / SQRT2).abs() < 1e-16);
        for k in 1..=20 {
            let x0 = 0.46 * k as f64 / 20.0;
            let c = c_from_x0(x0).unwrap();
            let p = CompetitorParams { x0, c };
            assert!(p.z(x0).abs() < 1e-12);
            assert!((p.z(SQRT2 / 3.0) - 1.0 / 3.0).abs() < 1e-12);
            assert!((solve_x0(c).unwrap() - x0).abs() < 1e-10);
        }
        assert!((solve_x0(c_from_x0(0.1f64).unwrap()).unwrap() - 0.1).abs() < 1e-10);
        assert!(solve_x0(1e-6).unwrap() < solve_x0(1e-3).unwrap());
        assert!(solve_x0(0.0).is_err());
    }

    #[test]
    fn c_diverges_at_the_top() {
        let near = c_from_x0(SQRT2 / 3.0 * (1.0 - 1e-9)).unwrap();
        assert!(near > 1e7);
        assert!(matches!(c_from_x0(SQRT2 / 3.0), Err(Error::Domain(_))));
        assert!(c_from_x0(SQRT2 / 3.0 - 1e-17).is_err());
    }

    #[test]
    fn cone_limit_areas() {
        // c = 0: both folds planar
        let a = fold_areas(1e-9).unwrap();
        assert!((3.0 * (a.area_b + a.area_v) - 4.0 * SQRT2 / 3.0).abs() < 1e-6);
        let r = competitor_energy(1e-9, 0.4).unwrap();
        assert!((r.j_competitor_quadrature - 4.0 * SQRT2 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn bounds_and_closed_forms() {
        for x0 in [0.01f64, 0.05, 0.1, 0.2, 0.4] {
            let a = fold_areas(x0).unwrap();
            assert!(a.area_b <= a.area_b_bound + 1e-12, "x0 = {x0}");
            assert!((a.area_v - a.area_v_closed).abs() < 1e-11, "x0 = {x0}");
            for alpha in [0.0f64, 0.6, 1.0] {
                let r = competitor_energy(x0, alpha).unwrap();
                assert!(r.j_competitor_quadrature <= r.j_competitor_bound + 1e-10);
                assert!((r.gap_bound - (r.j_competitor_bound - r.j_cone)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gap_reference_values() {
        let g = gap_bound(0.01, 0.6);
        let want = 3e-4 * (-SQRT2 - SQRT2 / (0.03 / SQRT2f()).ln() + 0.6 * 3f64.sqrt());
        assert!((g - want).abs() < 1e-18);
        assert!(g < 0.0 && (g + 2.39e-6).abs() < 1e-8);
        assert!((gap_bracket(0.01f64, 0.75) - 0.251).abs() < 1e-3);
    }

    #[allow(non_snake_case)]
    fn SQRT2f() -> f64 {
        SQRT2
    }

    #[test]
    fn search_examples() {
        let r = find_better_competitor(0.5).unwrap().unwrap();
        assert!(r.x0 > 0.01 && r.x0 < 0.05 && r.quadrature_confirmed);
        assert!(find_better_competitor(0.9).unwrap().is_none());
        assert!(find_better_competitor((2.0f64 / 3.0).sqrt()).unwrap().is_none());
        let deep = find_better_competitor(0.81).unwrap().unwrap();
        assert!(deep.bracket < 0.0 && !deep.quadrature_confirmed && deep.log_x0 < -100.0);
    }

    #[test]
    fn threshold_sup_in_log_space() {
        let t0 = (2.0f64 / 3.0).sqrt();
        assert!((t0 - threshold_from_log(-1e7)).abs() < 1e-6);
        // at a literal 1e-300 the window is still ~1e-3 below the supremum
        assert!(t0 - threshold(1e-300) > 1e-3);
    }

    #[test]
    fn mesh_matches_quadrature() {
        for x0 in [0.02f64, 0.1] {
            let m = competitor_mesh(x0, 400).unwrap();
            let e = energy(&m, 0.6).unwrap();
            let r = competitor_energy(x0, 0.6).unwrap();
            assert!((e.j_alpha - r.j_competitor_quadrature).abs() < 1e-6, "{x0}: {} vs {}", e.j_alpha, r.j_competitor_quadrature);
            assert!((e.area_on_gamma - 3.0 * 3f64.sqrt() * x0 * x0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gap_increases_with_alpha(x0 in 1e-6f64..0.45, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(gap_bound(x0, lo) < gap_bound(x0, hi));
        }

        #[test]
        fn threshold_decreases_in_x0(a in 1e-12f64..0.17, b in 1e-12f64..0.17) {
            prop_assume!((a - b).abs() > 1e-12 * a.max(b));
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(threshold(lo) > threshold(hi));
            prop_assert!(threshold(lo) < (2.0f64 / 3.0).sqrt());
        }

        #[test]
        fn negative_bound_implies_better_quadrature(x0 in 0.005f64..0.3, alpha in 0.0f64..0.8) {
            let r = competitor_energy(x0, alpha).unwrap();
            if r.gap_bound < -1e-10 {
                prop_assert!(r.j_competitor_bound < r.j_cone);
                prop_assert!(r.j_competitor_quadrature < r.j_cone);
            }
        }
    }

    #[test]
    fn sweep_matches_pointwise_reports() {
        let rows = sweep(0.6, 9).unwrap();
        assert_eq!(rows.len(), 9);
        assert!((rows[0].x0 - SEARCH_LO).abs() < 1e-20 && (rows[8].x0 - SEARCH_HI).abs() < 1e-14);
        for r in &rows {
            assert_eq!(*r, competitor_energy(r.x0, 0.6).unwrap());
        }
        assert!(sweep(0.6, 1).is_err() && sweep(1.5, 9).is_err());
    }
}

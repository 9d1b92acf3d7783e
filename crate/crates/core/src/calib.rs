//! Paired calibrations: one constant vector per region whose pairwise
//! differences are at most unit length and equal the fold normals on the cone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones2d::{cone_geometry, required_alpha, ConeGeometry, ConeSpec, Partition};
use crate::error::{domain, Error, Result};
use crate::geom::{check_alpha, Face, FaceTag, RotationY, Vector3};
use crate::scalar::{CompensatedSum, Real};

pub const ALIGNMENT_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;
pub const COEFF_TOL: f64 = 1e-12;
pub const FLUX_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    pub vectors: Vec<Vector3<T>>,
    /// Regions whose closure meets the boundary plane.
    pub gamma_adjacent: Vec<usize>,
}

impl<T: Real> Calibration<T> {
    pub fn region_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn pairwise_norms(&self) -> Vec<Vec<T>> {
        let w = &self.vectors;
        w.iter().map(|a| w.iter().map(|b| a.distance(b)).collect()).collect()
    }
}

pub fn t_plus_calibration<T: Real>() -> Calibration<T> {
    let s3 = T::lit(3.0).sqrt();
    let s6 = T::lit(6.0).sqrt();
    let two = T::lit(2.0);
    let (z, half) = (-T::one() / (two * s6), T::lit(0.5));
    Calibration {
        vectors: vec![
            Vector3::new(-T::one() / s3, T::zero(), z),
            Vector3::new(T::one() / (two * s3), -half, z),
            Vector3::new(T::one() / (two * s3), half, z),
            Vector3::new(T::zero(), T::zero(), half * T::lit(1.5).sqrt()),
        ],
        gamma_adjacent: vec![0, 1, 2],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YVariant {
    Y,
    YBar,
}

/// The planar Y calibration rotated with the cone; negated for the reflected cone.
pub fn rotated_y_calibration<T: Real>(beta: T, variant: YVariant) -> Result<Calibration<T>> {
    let rot = RotationY::new(beta)?;
    let s3 = T::lit(3.0).sqrt();
    let two = T::lit(2.0);
    let planar = [
        Vector3::new(-T::one() / s3, T::zero(), T::zero()),
        Vector3::new(T::one() / (two * s3), -T::lit(0.5), T::zero()),
        Vector3::new(T::one() / (two * s3), T::lit(0.5), T::zero()),
    ];
    let sign = match variant {
        YVariant::Y => T::one(),
        YVariant::YBar => -T::one(),
    };
    Ok(Calibration { vectors: planar.iter().map(|v| rot.apply(v) * sign).collect(), gamma_adjacent: vec![0, 1, 2] })
}

pub fn w_beta_calibration<T: Real>(beta: T) -> Result<Calibration<T>> {
    RotationY::new(beta)?;
    let h = T::lit(3.0).sqrt() / T::lit(2.0);
    let (s, c) = beta.sin_cos();
    let half = T::lit(0.5);
    Ok(Calibration {
        vectors: vec![
            Vector3::new(h * s, T::zero(), -h * c),
            Vector3::new(-h * s, T::zero(), -h * c),
            Vector3::new(T::zero(), half, T::zero()),
            Vector3::new(T::zero(), -half, T::zero()),
        ],
        gamma_adjacent: vec![0, 1, 2, 3],
    })
}

/// The calibration belonging to a cone family.
pub fn calibration_for<T: Real>(spec: &ConeSpec<T>) -> Result<Calibration<T>> {
    match *spec {
        ConeSpec::TPlus => Ok(t_plus_calibration()),
        ConeSpec::YBeta { beta } => rotated_y_calibration(beta, YVariant::Y),
        ConeSpec::YBarBeta { beta } => rotated_y_calibration(beta, YVariant::YBar),
        ConeSpec::WBeta { beta } => w_beta_calibration(beta),
        ConeSpec::Product { .. } => domain("products are checked by slicing, not calibrated"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairNorm<T> {
    pub regions: [usize; 2],
    pub norm: T,
    /// The pair is separated by a fold of the cone (otherwise the bound is only required
    /// because a competitor could create that interface).
    pub has_fold: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldAlignment<T> {
    pub regions: [usize; 2],
    /// `(w_j - w_i) . n_ij`.
    pub dot: T,
    pub defect: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoeff<T> {
    /// `(i, j)`: `i` over bare boundary, `j` over a cone sector of it.
    pub regions: [usize; 2],
    /// `(w_j - w_i) . z`.
    pub value: T,
    pub required: Option<T>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationVerdict {
    pub pass: bool,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport<T> {
    pub pairwise_norms: Vec<Vec<T>>,
    pub pairs: Vec<PairNorm<T>>,
    pub alignment_defects: Vec<FoldAlignment<T>>,
    pub boundary_coeffs: Vec<BoundaryCoeff<T>>,
    pub verdict: CalibrationVerdict,
}

fn check_labels<T: Real>(geom: &ConeGeometry<T>, cal: &Calibration<T>) -> Result<()> {
    if geom.region_count() != cal.region_count() {
        return Err(Error::Labeling(format!(
            "{} regions but {} calibration vectors",
            geom.region_count(),
            cal.region_count()
        )));
    }
    Ok(())
}

/// Checks norms, fold alignment and the boundary coefficients on the analytic fold planes.
pub fn verify_alignment<T: Real>(spec: &ConeSpec<T>, cal: &Calibration<T>) -> Result<CalibrationReport<T>> {
    let geom = cone_geometry(spec)?;
    check_labels(&geom, cal)?;
    let w = &cal.vectors;
    let mut reasons = Vec::new();

    let pairwise_norms = cal.pairwise_norms();
    let mut pairs = Vec::new();
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let norm = pairwise_norms[i][j];
            if !(norm <= T::one() + T::lit(NORM_TOL)) {
                reasons.push(format!("|w{} - w{}| = {norm} exceeds 1", i + 1, j + 1));
            }
            pairs.push(PairNorm { regions: [i, j], norm, has_fold: geom.fold(i, j).is_some() });
        }
    }

    let alignment_defects: Vec<FoldAlignment<T>> = geom
        .folds
        .iter()
        .map(|f| {
            let [i, j] = f.regions;
            let dot = (w[j] - w[i]).dot(&f.normal);
            FoldAlignment { regions: f.regions, dot, defect: (T::one() - dot).abs() }
        })
        .collect();
    for a in &alignment_defects {
        if !(a.defect <= T::lit(ALIGNMENT_TOL)) {
            reasons.push(format!("fold ({}, {}) misaligned by {}", a.regions[0] + 1, a.regions[1] + 1, a.defect));
        }
    }

    let required = required_alpha(spec)?.map(|r| r.alpha);
    let boundary_coeffs: Vec<BoundaryCoeff<T>> = geom
        .gamma_pairs
        .iter()
        .map(|&[i, j]| {
            let value = (w[j] - w[i]).z;
            let pass = required.map_or(true, |r| (value - r).abs() <= T::lit(COEFF_TOL));
            BoundaryCoeff { regions: [i, j], value, required, pass }
        })
        .collect();
    for b in boundary_coeffs.iter().filter(|b| !b.pass) {
        reasons.push(format!(
            "boundary coefficient ({}, {}) = {} differs from the required weight",
            b.regions[0] + 1,
            b.regions[1] + 1,
            b.value
        ));
    }

    Ok(CalibrationReport {
        pairwise_norms,
        pairs,
        alignment_defects,
        boundary_coeffs,
        verdict: CalibrationVerdict { pass: reasons.is_empty(), reasons },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFlux<T> {
    pub region: usize,
    /// `sum (w . n) area` over the region's boundary faces.
    pub flux: T,
    pub boundary_area: T,
}

impl<T: Real> RegionFlux<T> {
    pub fn balanced(&self) -> bool {
        self.flux.abs() <= T::lit(FLUX_TOL) * self.boundary_area
    }
}

pub fn face_flux<T: Real>(region: usize, faces: &[Face<T>], w: &Vector3<T>) -> RegionFlux<T> {
    let mut flux = CompensatedSum::new();
    let mut area = CompensatedSum::new();
    for f in faces {
        let a = f.area();
        flux.add(w.dot(&f.normal) * a);
        area.add(a);
    }
    RegionFlux { region, flux: flux.value(), boundary_area: area.value() }
}

/// Flux of each region's constant field through that region's boundary faces.
pub fn divergence_balance_faces<T: Real>(faces: &[Vec<Face<T>>], cal: &Calibration<T>) -> Result<Vec<RegionFlux<T>>> {
    if faces.len() != cal.region_count() {
        return Err(Error::Labeling(format!("{} regions but {} calibration vectors", faces.len(), cal.region_count())));
    }
    Ok(faces.par_iter().enumerate().map(|(i, fs)| face_flux(i, fs, &cal.vectors[i])).collect())
}

pub fn divergence_balance<T: Real>(partition: &Partition<T>, cal: &Calibration<T>) -> Result<Vec<RegionFlux<T>>> {
    divergence_balance_faces(&partition.region_faces(), cal)
}

/// Lower bound on the weighted energy of any competitor in the clip body,
/// read off the clip and boundary faces alone; equals the cone's energy when
/// the calibration is aligned.
pub fn lower_bound_constant<T: Real>(partition: &Partition<T>, cal: &Calibration<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let faces = partition.region_faces();
    if faces.len() != cal.region_count() {
        return Err(Error::Labeling("partition and calibration disagree on the region count".into()));
    }
    let mut c = CompensatedSum::new();
    for (i, fs) in faces.iter().enumerate() {
        let w = cal.vectors[i];
        for f in fs {
            match f.tag {
                FaceTag::Outer => c.add(w.dot(&f.normal) * f.area()),
                FaceTag::Gamma => {
                    let weight = if partition.cone_gamma[i] { alpha } else { T::zero() };
                    c.add((w.dot(&f.normal) + weight) * f.area());
                }
                FaceTag::Region(_) => {}
            }
        }
    }
    Ok(c.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones2d::{build, ClipRegion};
    use crate::geom::energy;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn betas() -> Vec<f64> {
        (1..=20).map(|k| std::f64::consts::FRAC_PI_2 * k as f64 / 20.0).collect()
    }

    #[test]
    fn t_plus_identities() {
        let cal = t_plus_calibration::<f64>();
        for (i, row) in cal.pairwise_norms().iter().enumerate() {
            for (j, n) in row.iter().enumerate() {
                if i != j {
                    assert!((n - 1.0).abs() < 1e-14);
                }
            }
        }
        let sum = cal.vectors.iter().fold(Vector3::zero(), |a, b| a + *b);
        assert!(sum.norm() < 1e-14);
        assert!(((cal.vectors[3] - cal.vectors[0]).z - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        // w_i = -v_i / |v_i - v_j| with |v_i - v_j| = sqrt(8/3)
        let v = crate::cones2d::cone_geometry(&ConeSpec::<f64>::TPlus).unwrap().spines;
        for i in 0..3 {
            assert!(cal.vectors[i].max_abs_diff(&(v[i] * -(3.0f64 / 8.0).sqrt())) < 1e-15);
        }
        let r = verify_alignment(&ConeSpec::TPlus, &cal).unwrap();
        assert!(r.verdict.pass, "{:?}", r.verdict);
        assert_eq!(r.alignment_defects.len(), 6);
        assert!(r.alignment_defects.iter().all(|a| a.defect <= 1e-12));
        assert!(r.boundary_coeffs.iter().all(|b| (b.value - (2.0f64 / 3.0).sqrt()).abs() < 1e-14));
    }

    #[test]
    fn t_plus_squared_norms_are_exactly_one() {
        // squared surds: w_i . w_i = 3/8 and w_i . w_j = -1/8, so |w_i - w_j|^2 = 1
        let third = Ratio::new(1i64, 3);
        let sq = [
            [third, Ratio::from_integer(0), Ratio::new(1, 24)],
            [Ratio::new(1, 12), Ratio::new(1, 4), Ratio::new(1, 24)],
        ];
        let n1: Ratio<i64> = sq[0].iter().copied().sum();
        let n2: Ratio<i64> = sq[1].iter().copied().sum();
        assert_eq!(n1, Ratio::new(3, 8));
        assert_eq!(n2, Ratio::new(3, 8));
        // w1 . w2 = -1/6 + 0 + 1/24
        let dot = Ratio::new(-1, 6) + Ratio::new(1, 24);
        assert_eq!(n1 + n2 - dot * 2, Ratio::from_integer(1));
    }

    #[test]
    fn rotated_y_identities() {
        let w0 = rotated_y_calibration(0.0f64, YVariant::Y).unwrap();
        assert!(w0.vectors[0].max_abs_diff(&Vector3::new(0.0, 0.0, 1.0 / 3f64.sqrt())) < 1e-16);
        for beta in betas() {
            for variant in [YVariant::Y, YVariant::YBar] {
                let cal = rotated_y_calibration(beta, variant).unwrap();
                for w in &cal.vectors {
                    assert!((w.norm() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
                }
                let spec = match variant {
                    YVariant::Y => ConeSpec::YBeta { beta },
                    YVariant::YBar => ConeSpec::YBarBeta { beta },
                };
                let r = verify_alignment(&spec, &cal).unwrap();
                assert!(r.verdict.pass, "{variant:?} {beta}: {:?}", r.verdict);
                for b in &r.boundary_coeffs {
                    assert!((b.value - 3f64.sqrt() / 2.0 * beta.cos()).abs() < 1e-14);
                }
            }
            let w = rotated_y_calibration(beta, YVariant::Y).unwrap().vectors;
            let (s, c) = beta.sin_cos();
            let r3 = 3f64.sqrt();
            assert!(w[1].max_abs_diff(&Vector3::new(s / (2.0 * r3), -0.5, -c / (2.0 * r3))) < 1e-15);
        }
    }

    #[test]
    fn w_beta_identities() {
        let flip = (1.0 / 3f64.sqrt()).asin();
        let at = w_beta_calibration(flip).unwrap();
        assert!((at.vectors[0].distance(&at.vectors[1]) - 1.0).abs() < 1e-15);
        let r = verify_alignment(&ConeSpec::WBeta { beta: flip }, &at).unwrap();
        assert!(r.verdict.pass, "{:?}", r.verdict);
        let pair = r.pairs.iter().find(|p| p.regions == [0, 1]).unwrap();
        assert!(!pair.has_fold);
        let quarter = std::f64::consts::FRAC_PI_4;
        let r = verify_alignment(&ConeSpec::WBeta { beta: quarter }, &w_beta_calibration(quarter).unwrap()).unwrap();
        assert!(!r.verdict.pass);
        assert!((r.pairwise_norms[0][1] - 1.224_744_871_391_589).abs() < 1e-14);
        for beta in betas() {
            let cal = w_beta_calibration(beta).unwrap();
            let norms = cal.pairwise_norms();
            assert!((norms[0][1] - 3f64.sqrt() * beta.sin()).abs() < 1e-15);
            for i in 0..4 {
                for j in i + 1..4 {
                    if (i, j) != (0, 1) {
                        assert!(norms[i][j] <= 1.0 + 1e-15);
                    }
                }
            }
            let r = verify_alignment(&ConeSpec::WBeta { beta }, &cal).unwrap();
            assert!(r.alignment_defects.iter().all(|a| a.defect <= 1e-12));
        }
    }

    #[test]
    fn labeling_mismatch() {
        let cal = t_plus_calibration::<f64>();
        assert!(matches!(verify_alignment(&ConeSpec::YBeta { beta: 0.5 }, &cal), Err(Error::Labeling(_))));
    }

    #[test]
    fn fluxes_vanish() {
        for spec in [ConeSpec::TPlus, ConeSpec::YBeta { beta: 0.6 }, ConeSpec::YBarBeta { beta: 0.9 }, ConeSpec::WBeta { beta: 0.4 }] {
            let geom = cone_geometry(&spec).unwrap();
            let part = Partition::new(&geom, &ClipRegion::default_for(&spec).unwrap()).unwrap();
            let cal = calibration_for(&spec).unwrap();
            for f in divergence_balance(&part, &cal).unwrap() {
                assert!(f.balanced(), "{} region {}: {:?}", spec.name(), f.region, f);
            }
        }
        let geom = cone_geometry(&ConeSpec::TPlus).unwrap();
        let part = Partition::new(&geom, &ClipRegion::Simplex).unwrap();
        let cal = t_plus_calibration::<f64>();
        let mut faces = part.region_faces();
        assert!(divergence_balance_faces(&faces, &cal).unwrap().iter().all(|f| f.balanced()));
        let removed = faces[0].remove(0);
        let expected: f64 = cal.vectors[0].dot(&removed.normal) * removed.area();
        let broken = divergence_balance_faces(&faces, &cal).unwrap();
        assert!(!broken[0].balanced());
        assert!((broken[0].flux + expected).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_equals_cone_energy() {
        let geom = cone_geometry(&ConeSpec::TPlus).unwrap();
        let part = Partition::new(&geom, &ClipRegion::SimplexCanonical).unwrap();
        let mesh = build(&ConeSpec::TPlus, &ClipRegion::SimplexCanonical, 1).unwrap().mesh;
        let t = (2.0f64 / 3.0).sqrt();
        let c = lower_bound_constant(&part, &t_plus_calibration(), t).unwrap();
        assert!((c - energy(&mesh, t).unwrap().j_alpha).abs() < 1e-9);
        for alpha in [t, 0.9, 1.0] {
            assert_eq!(energy(&mesh, alpha).unwrap().j_alpha, energy(&mesh, t).unwrap().j_alpha);
        }
        for spec in [ConeSpec::YBeta { beta: 0.6 }, ConeSpec::WBeta { beta: 0.3 }] {
            let clip = ClipRegion::default_for(&spec).unwrap();
            let part = Partition::new(&cone_geometry(&spec).unwrap(), &clip).unwrap();
            let alpha = 3f64.sqrt() / 2.0 * 0.6f64.cos();
            let c = lower_bound_constant(&part, &calibration_for(&spec).unwrap(), alpha).unwrap();
            let j = energy(&build(&spec, &clip, 1).unwrap().mesh, alpha).unwrap().j_alpha;
            assert!((c - j).abs() < 1e-9, "{}: {c} vs {j}", spec.name());
        }
    }

    proptest! {
        #[test]
        fn rotated_y_is_an_isometry(a in 0.0f64..1.5707, b in 0.0f64..1.5707) {
            let na = rotated_y_calibration(a, YVariant::Y).unwrap().pairwise_norms();
            let nb = rotated_y_calibration(b, YVariant::Y).unwrap().pairwise_norms();
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((na[i][j] - nb[i][j]).abs() < 1e-14);
                }
            }
        }

        #[test]
        fn tetrahedron_flux_vanishes_for_any_field(x in -2.0f64..2.0, y in -2.0f64..2.0, z in -2.0f64..2.0) {
            let geom = cone_geometry(&ConeSpec::TPlus).unwrap();
            let part = Partition::new(&geom, &ClipRegion::Simplex).unwrap();
            let w = Vector3::new(x, y, z);
            for (i, fs) in part.region_faces().iter().enumerate() {
                let f = face_flux(i, fs, &w);
                prop_assert!(f.flux.abs() <= 1e-12 * f.boundary_area.max(1.0));
            }
        }
    }
}

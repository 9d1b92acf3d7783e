//! Geodesic networks on the unit sphere: side-length relations for the
//! 120-degree polygons, junction angles, and how arcs may meet the equator.

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::cones1d::{classify_branches, BranchCone, Verdict, RAY_TOL};
use crate::error::{domain, Result};
use crate::geom::Vector3;
use crate::scalar::Real;

/// Distance from the unit sphere / equator tolerated for net nodes.
pub const SPHERE_TOL: f64 = 1e-10;
/// Tolerance on the 120-degree junction angles.
pub const JUNCTION_TOL: f64 = 1e-8;

fn checked_acos<T: Real>(c: T, what: &str) -> Result<T> {
    if !(c >= -T::one() && c <= T::one()) {
        return domain(format!("{what}: cosine {c} outside [-1, 1]"));
    }
    Ok(c.acos())
}

/// Cosine-level rectangle relation `c -> (3 - 5c) / (5 - 3c)`, exact in any field.
pub fn rect_cos_map<F: Num + Clone>(c: F) -> F {
    let k = |n: u8| (0..n).fold(F::zero(), |acc, _| acc + F::one());
    (k(3) - k(5) * c.clone()) / (k(5) - k(3) * c)
}

/// Adjacent side of a 120-degree spherical rectangle with side `a`.
pub fn rect_side<T: Real>(a: T) -> Result<T> {
    if !(a > T::zero() && a < T::PI()) {
        return domain(format!("side {a} outside (0, pi)"));
    }
    checked_acos(rect_cos_map(a.cos()), "rectangle side")
}

/// Same relation written in half angles: `cos(b/2) = 2 sin(a/2) / sqrt(1 + 3 sin^2(a/2))`.
pub fn rect_side_half_angle<T: Real>(a: T) -> Result<T> {
    if !(a > T::zero() && a < T::PI()) {
        return domain(format!("side {a} outside (0, pi)"));
    }
    let s = (a / T::lit(2.0)).sin();
    let c = T::lit(2.0) * s / (T::one() + T::lit(3.0) * s * s).sqrt();
    Ok(T::lit(2.0) * checked_acos(c, "rectangle half side")?)
}

/// `cos` of the side opposite two adjacent sides of a 120-degree pentagon,
/// given `cos a`, `cos b` and `sin a sin b`; exact in any field.
pub fn pentagon_cos<F: Num + Clone>(cos_a: F, cos_b: F, sin_product: F) -> F {
    let one = F::one();
    let two = one.clone() + one.clone();
    let third = one.clone() / (two.clone() + one);
    (third + cos_a.clone() + cos_b.clone() + cos_a * cos_b - sin_product) / two
}

/// Side of a 120-degree pentagon adjacent to neither `a` nor `b`.
pub fn pentagon_side<T: Real>(a: T, b: T) -> Result<T> {
    let c = pentagon_cos(a.cos(), b.cos(), a.sin() * b.sin());
    checked_acos(c, "pentagon side")
}

/// Side of the equiangular 120-degree triangle.
pub fn triangle_side<T: Real>() -> T {
    (-T::one() / T::lit(3.0)).acos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphericalPolygonClass {
    Hemisphere,
    Gore,
    Triangle,
    Rectangle,
    Pentagon,
}

impl SphericalPolygonClass {
    pub fn from_sides(n: usize) -> Result<Self> {
        Ok(match n {
            1 => Self::Hemisphere,
            2 => Self::Gore,
            3 => Self::Triangle,
            4 => Self::Rectangle,
            5 => Self::Pentagon,
            _ => return domain(format!("{n}-sided regions cannot occur")),
        })
    }

    pub fn sides(self) -> usize {
        self as usize + 1
    }
}

/// Geodesic graph on the closed upper hemisphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HemisphereNet<T> {
    pub nodes: Vec<Vector3<T>>,
    pub arcs: Vec<[usize; 2]>,
}

impl<T: Real> HemisphereNet<T> {
    pub fn new(nodes: Vec<Vector3<T>>, arcs: Vec<[usize; 2]>) -> Result<Self> {
        let net = Self { nodes, arcs };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(SPHERE_TOL);
        for (i, p) in self.nodes.iter().enumerate() {
            if !p.is_finite() || (p.norm() - T::one()).abs() > tol || p.z < -tol {
                return domain(format!("node {i} is not on the closed upper hemisphere"));
            }
        }
        for (k, &[i, j]) in self.arcs.iter().enumerate() {
            if i >= self.nodes.len() || j >= self.nodes.len() || i == j {
                return domain(format!("arc {k} has invalid endpoints"));
            }
            if self.arc_normal(k).is_none() {
                return domain(format!("arc {k} joins coincident or antipodal nodes"));
            }
            let mid = (self.nodes[i] + self.nodes[j]).normalized().expect("non-antipodal");
            if mid.z < -tol {
                return domain(format!("arc {k} dips below the equator"));
            }
        }
        Ok(())
    }

    pub fn is_equator_node(&self, i: usize) -> bool {
        self.nodes[i].z.abs() <= T::lit(SPHERE_TOL)
    }

    pub fn equator_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.is_equator_node(i)).collect()
    }

    /// Unit normal of the great circle carrying arc `k`, oriented from its first node to its second.
    pub fn arc_normal(&self, k: usize) -> Option<Vector3<T>> {
        let [i, j] = self.arcs[k];
        self.nodes[i].cross(&self.nodes[j]).normalized()
    }

    /// Unit tangents at `node` of all arcs incident to it, pointing along the arc.
    pub fn tangents_at(&self, node: usize) -> Vec<Vector3<T>> {
        let p = self.nodes[node];
        let mut out = Vec::new();
        for (k, &[i, j]) in self.arcs.iter().enumerate() {
            let n = match self.arc_normal(k) {
                Some(n) => n,
                None => continue,
            };
            if i == node {
                out.push(n.cross(&p));
            } else if j == node {
                out.push(p.cross(&n));
            }
        }
        out
    }

    pub fn degree(&self, node: usize) -> usize {
        self.arcs.iter().filter(|a| a[0] == node || a[1] == node).count()
    }
}

/// Cross-section of the cone over the tangent directions `dirs` at an equator
/// point `node`, as a ray set in the half-plane orthogonal to it.
///
/// The positive boundary direction of the section is `z x node`.
pub fn normal_section<T: Real>(node: &Vector3<T>, dirs: &[Vector3<T>]) -> Result<BranchCone<T>> {
    let e = Vector3::unit_z().cross(node);
    let mut rays: Vec<T> = dirs
        .iter()
        .map(|d| {
            let a = d.dot(&Vector3::unit_z()).atan2(d.dot(&e));
            // a ray in the boundary may come out as -0 or -pi
            if a < T::zero() {
                if a > -T::lit(RAY_TOL) {
                    T::zero()
                } else {
                    T::PI()
                }
            } else {
                a
            }
        })
        .collect();
    rays.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    rays.dedup_by(|a, b| (*a - *b).abs() <= T::lit(RAY_TOL));
    BranchCone::new(rays)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeIssue {
    pub node: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionReport {
    pub nodes_checked: usize,
    pub failures: Vec<NodeIssue>,
    pub pass: bool,
}

/// Every node off the equator must be a triple junction with 120-degree
/// angles; a node of degree two is accepted only as a straight continuation.
pub fn junction_check<T: Real>(net: &HemisphereNet<T>) -> JunctionReport {
    let tol = T::lit(JUNCTION_TOL);
    let third = T::lit(2.0) * T::PI() / T::lit(3.0);
    let mut failures = Vec::new();
    let mut checked = 0;
    for node in 0..net.nodes.len() {
        if net.is_equator_node(node) {
            continue;
        }
        checked += 1;
        let t = net.tangents_at(node);
        let fail = |r: String| NodeIssue { node, reason: r };
        match t.len() {
            3 => {
                for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                    let ang = t[a].angle_to(&t[b]);
                    if (ang - third).abs() > tol {
                        failures.push(fail(format!("arcs meet at {} rad instead of 2pi/3", ang)));
                        break;
                    }
                }
            }
            2 => {
                let ang = t[0].angle_to(&t[1]);
                if (ang - T::PI()).abs() > tol {
                    failures.push(fail(format!("two arcs meet at {} rad", ang)));
                }
            }
            n => failures.push(fail(format!("{n} incident arcs; expected 3"))),
        }
    }
    JunctionReport { nodes_checked: checked, pass: failures.is_empty(), failures }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorNode<T> {
    pub node: usize,
    /// Section angles from the positive boundary direction.
    pub rays: Vec<T>,
    pub verdict: Verdict<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquatorReport<T> {
    pub alpha: T,
    pub nodes: Vec<EquatorNode<T>>,
    pub pass: bool,
}

/// Classifies the section of the net at each equator node against the
/// half-plane catalog.
pub fn equator_check<T: Real>(net: &HemisphereNet<T>, alpha: T) -> Result<EquatorReport<T>> {
    let mut nodes = Vec::new();
    for node in net.equator_nodes() {
        let dirs = net.tangents_at(node);
        if dirs.is_empty() {
            continue;
        }
        let section = normal_section(&net.nodes[node], &dirs)?;
        let verdict = classify_branches(&section, alpha)?;
        nodes.push(EquatorNode { node, rays: section.rays().to_vec(), verdict });
    }
    let pass = nodes.iter().all(|n| n.verdict.is_minimal());
    Ok(EquatorReport { alpha, nodes, pass })
}

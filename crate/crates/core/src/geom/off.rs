//! ASCII OFF reader/writer plus the JSON sidecar carrying boundary-plane flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{TriMesh, Vector3};
use crate::scalar::Real;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaSidecar {
    pub gamma_triangles: Vec<usize>,
}

/// Formats a scalar with 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

pub fn write_off_string<T: Real>(mesh: &TriMesh<T>) -> String {
    let mut s = String::new();
    s.push_str("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", fmt17(v.x), fmt17(v.y), fmt17(v.z));
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn sidecar_of<T: Real>(mesh: &TriMesh<T>) -> GammaSidecar {
    GammaSidecar {
        gamma_triangles: mesh.gamma_flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect(),
    }
}

/// Parses OFF text into raw vertices and triangles.
pub fn parse_off<T: Real>(text: &str) -> Result<(Vec<Vector3<T>>, Vec<[usize; 3]>)> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let bad = |m: &str| Error::Parse(m.to_string());

    let first = lines.next().ok_or_else(|| bad("empty file"))?;
    let mut header: Vec<&str> = first.split_whitespace().collect();
    if header.first() != Some(&"OFF") {
        return Err(bad("missing OFF header"));
    }
    header.remove(0);
    let counts_line;
    if header.is_empty() {
        counts_line = lines.next().ok_or_else(|| bad("missing counts line"))?;
        header = counts_line.split_whitespace().collect();
    }
    if header.len() < 2 {
        return Err(bad("counts line needs V F [E]"));
    }
    let nv: usize = header[0].parse().map_err(|_| bad("bad vertex count"))?;
    let nf: usize = header[1].parse().map_err(|_| bad("bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let l = lines.next().ok_or_else(|| bad("truncated vertex list"))?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad coordinate on vertex {i}")))?;
        if xs.len() != 3 {
            return Err(Error::Parse(format!("vertex {i} needs 3 coordinates")));
        }
        vertices.push(Vector3::new(T::lit(xs[0]), T::lit(xs[1]), T::lit(xs[2])));
    }
    let mut triangles = Vec::with_capacity(nf);
    for f in 0..nf {
        let l = lines.next().ok_or_else(|| bad("truncated face list"))?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("bad index on face {f}")))?;
        if ids.len() != 4 || ids[0] != 3 {
            return Err(Error::Parse(format!("face {f} is not a triangle")));
        }
        triangles.push([ids[1], ids[2], ids[3]]);
    }
    Ok((vertices, triangles))
}

/// Assembles a mesh from OFF text and an optional sidecar; flags are validated.
pub fn mesh_from_off<T: Real>(text: &str, sidecar: Option<&GammaSidecar>) -> Result<TriMesh<T>> {
    let (vertices, triangles) = parse_off::<T>(text)?;
    let mut flags = vec![false; triangles.len()];
    if let Some(sc) = sidecar {
        for &t in &sc.gamma_triangles {
            *flags
                .get_mut(t)
                .ok_or_else(|| Error::Parse(format!("sidecar references triangle {t} of {}", triangles.len())))? =
                true;
        }
    }
    TriMesh::new(vertices, triangles, flags)
}

/// Sidecar path convention: `mesh.off` -> `mesh.gamma.json`.
pub fn sidecar_path(off_path: &Path) -> PathBuf {
    off_path.with_extension("gamma.json")
}

pub fn write_mesh<T: Real>(mesh: &TriMesh<T>, off_path: &Path) -> Result<PathBuf> {
    fs::write(off_path, write_off_string(mesh))?;
    let sc = sidecar_path(off_path);
    fs::write(&sc, serde_json::to_string(&sidecar_of(mesh))?)?;
    Ok(sc)
}

/// Reads `path` and, when present, its sidecar.
pub fn read_mesh<T: Real>(off_path: &Path) -> Result<TriMesh<T>> {
    let text = fs::read_to_string(off_path)?;
    let sc = sidecar_path(off_path);
    let sidecar: Option<GammaSidecar> =
        if sc.exists() { Some(serde_json::from_str(&fs::read_to_string(sc)?)?) } else { None };
    mesh_from_off(&text, sidecar.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> TriMesh<f64> {
        let v = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.1, 0.2, 1.0 / 3.0),
        ];
        TriMesh::new(v, vec![[0, 1, 2], [0, 1, 3]], vec![true, false]).unwrap()
    }

    #[test]
    fn header_layout() {
        let s = write_off_string(&sample());
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "OFF");
        assert_eq!(lines[1], "4 2 0");
        assert_eq!(lines[6], "3 0 1 2");
        let digits = lines[5].split_whitespace().nth(2).unwrap();
        assert_eq!(digits, "3.3333333333333331e-1");
    }

    #[test]
    fn flags_are_validated_on_load() {
        let s = write_off_string(&sample());
        let bad = GammaSidecar { gamma_triangles: vec![1] };
        assert!(mesh_from_off::<f64>(&s, Some(&bad)).is_err());
        let oob = GammaSidecar { gamma_triangles: vec![7] };
        assert!(mesh_from_off::<f64>(&s, Some(&oob)).is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_off::<f64>("").is_err());
        assert!(parse_off::<f64>("PLY\n").is_err());
        assert!(parse_off::<f64>("OFF\n1 1 0\n0 0 0\n4 0 0 0 0\n").is_err());
        assert!(parse_off::<f64>("OFF\n2 0 0\n0 0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(zs in proptest::collection::vec(0.0f64..10.0, 4)) {
            let mut m = sample();
            for (v, z) in m.vertices.iter_mut().zip(&zs).skip(3) {
                v.z = *z + 1e-3;
            }
            let sc = sidecar_of(&m);
            let back: TriMesh<f64> = mesh_from_off(&write_off_string(&m), Some(&sc)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}

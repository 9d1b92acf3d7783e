use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::{json, Value};
use slidecal::calib::{calibration_for, verify_alignment};
use slidecal::compete::{competitor_energy, find_better_competitor, sweep, GapReport};
use slidecal::cones1d::{classify_branches, BranchCone, Cone1D};
use slidecal::cones2d::{build, build_product, fubini_check, ClipRegion, ConeSpec};
use slidecal::evolve::{descend, jitter, t_plus_start, EvolveConfig};
use slidecal::geom::off::{fmt17, read_mesh, write_mesh};
use slidecal::geom::{energy, TriMesh, Vector3};
use slidecal::spherenet::{equator_check, junction_check, HemisphereNet};

use crate::args::*;

/// What a subcommand produced.
pub struct Outcome {
    /// False when a verification did not pass.
    pub pass: bool,
    pub outputs: Value,
    /// Files whose contents go into the input digest.
    pub inputs: Vec<PathBuf>,
}

impl Outcome {
    fn ok(outputs: Value) -> Self {
        Self { pass: true, outputs, inputs: Vec::new() }
    }
}

fn say(key: &str, x: f64) {
    println!("{key} = {}", fmt17(x));
}

fn profile(kind: ProfileKind, theta: Option<f64>) -> Result<Cone1D<f64>> {
    let need = || theta.context("--theta is required for sloped and vee profiles");
    Ok(match kind {
        ProfileKind::Gamma => Cone1D::Gamma,
        ProfileKind::Vertical => Cone1D::Vertical,
        ProfileKind::GammaPlusVertical => Cone1D::GammaPlusVertical,
        ProfileKind::Sloped => Cone1D::SlopedPlusHorizontal(need()?),
        ProfileKind::Vee => Cone1D::Vee(need()?),
    })
}

pub fn cone_spec(a: &ConeArgs) -> Result<ConeSpec<f64>> {
    let beta = || a.beta.context("--beta is required for this cone");
    let spec = match a.cone {
        ConeKind::TPlus => ConeSpec::TPlus,
        ConeKind::YBeta => ConeSpec::YBeta { beta: beta()? },
        ConeKind::YbarBeta => ConeSpec::YBarBeta { beta: beta()? },
        ConeKind::WBeta => ConeSpec::WBeta { beta: beta()? },
        ConeKind::Product => ConeSpec::Product { cone: profile(a.profile, a.theta)?, length: a.length },
    };
    spec.validate()?;
    Ok(spec)
}

pub fn clip_region(spec: &ConeSpec<f64>, kind: ClipKind, radius: f64) -> Result<ClipRegion<f64>> {
    Ok(match kind {
        ClipKind::Default => ClipRegion::default_for(spec)?,
        ClipKind::SimplexCanonical => ClipRegion::SimplexCanonical,
        ClipKind::Simplex => ClipRegion::Simplex,
        ClipKind::Prism => ClipRegion::default_prism(spec)?,
        ClipKind::Ball => ClipRegion::Ball { radius },
        ClipKind::Slab => ClipRegion::Slab { radius },
    })
}

fn mesh_summary(mesh: &TriMesh<f64>) -> Value {
    json!({
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "gamma_triangles": mesh.gamma_flags.iter().filter(|&&f| f).count(),
    })
}

fn save_mesh(mesh: &TriMesh<f64>, out: &Path) -> Result<Value> {
    let sidecar = write_mesh(mesh, out).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} and {}", out.display(), sidecar.display());
    Ok(json!({ "mesh": out, "sidecar": sidecar }))
}

fn load_mesh(path: &Path) -> Result<TriMesh<f64>> {
    read_mesh(path).with_context(|| format!("reading {}", path.display()))
}

pub fn build_cmd(a: &BuildArgs) -> Result<Outcome> {
    let spec = cone_spec(&a.cone)?;
    let clip = clip_region(&spec, a.clip, a.radius)?;
    let cm = build(&spec, &clip, a.refine)?;
    let e = energy(&cm.mesh, a.alpha)?;
    println!("cone = {}, clip = {}", spec.name(), clip.name());
    println!("vertices = {}, triangles = {}", cm.mesh.vertices.len(), cm.mesh.triangles.len());
    say("j", e.j_alpha);
    let files = save_mesh(&cm.mesh, &a.out)?;
    Ok(Outcome::ok(json!({ "spec": spec, "clip": clip, "mesh": mesh_summary(&cm.mesh), "energy": e, "files": files })))
}

pub fn energy_cmd(a: &EnergyArgs) -> Result<Outcome> {
    let mesh = load_mesh(&a.mesh)?;
    let e = energy(&mesh, a.alpha)?;
    say("j", e.j_alpha);
    say("area_off_gamma", e.area_off_gamma);
    say("area_on_gamma", e.area_on_gamma);
    Ok(Outcome { pass: true, outputs: json!({ "energy": e, "mesh": mesh_summary(&mesh) }), inputs: vec![a.mesh.clone()] })
}

pub fn calibrate_cmd(a: &CalibrateArgs) -> Result<Outcome> {
    let spec = cone_spec(&a.cone)?;
    let report = verify_alignment(&spec, &calibration_for(&spec)?)?;
    println!("cone = {}", spec.name());
    for p in &report.pairs {
        println!("norm {:?} = {}", p.regions, fmt17(p.norm));
    }
    for f in &report.alignment_defects {
        println!("alignment {:?} = {}", f.regions, fmt17(f.dot));
    }
    for c in &report.boundary_coeffs {
        println!("boundary {:?} = {}", c.regions, fmt17(c.value));
    }
    for r in &report.verdict.reasons {
        println!("reason: {r}");
    }
    println!("verdict = {}", if report.verdict.pass { "pass" } else { "fail" });
    if let Some(path) = &a.json {
        fs::write(path, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Outcome { pass: report.verdict.pass, outputs: json!({ "spec": spec, "report": report }), inputs: Vec::new() })
}

fn write_sweep(path: &Path, rows: &[GapReport<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["x0", "c", "area_B", "area_V", "j_quad", "j_bound", "gap_bound"])?;
    for r in rows {
        w.write_record(
            [r.x0, r.c, r.areas.area_b, r.areas.area_v, r.j_competitor_quadrature, r.j_competitor_bound, r.gap_bound]
                .map(fmt17),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn compete_cmd(a: &CompeteArgs) -> Result<Outcome> {
    let outputs = if let Some(x0) = a.x0 {
        let r = competitor_energy(x0, a.alpha)?;
        say("x0", r.x0);
        say("c", r.c);
        say("j_quad", r.j_competitor_quadrature);
        say("j_bound", r.j_competitor_bound);
        say("j_cone", r.j_cone);
        say("gap_bound", r.gap_bound);
        if let Some(path) = &a.csv {
            write_sweep(path, std::slice::from_ref(&r))?;
        }
        json!({ "competitor": r })
    } else {
        let found = find_better_competitor(a.alpha)?;
        match &found {
            None => println!("no better competitor"),
            Some(b) => {
                println!("better competitor");
                say("x0", b.x0);
                say("log_x0", b.log_x0);
                say("bracket", b.bracket);
                say("gap_bound", b.gap_bound);
                println!("quadrature_confirmed = {}", b.quadrature_confirmed);
                if let Some(r) = &b.report {
                    say("j_quad", r.j_competitor_quadrature);
                    say("j_cone", r.j_cone);
                }
            }
        }
        if let Some(path) = &a.csv {
            write_sweep(path, &sweep(a.alpha, a.points)?)?;
        }
        json!({ "better_competitor": found })
    };
    Ok(Outcome::ok(outputs))
}

pub fn evolve_cmd(a: &EvolveArgs) -> Result<Outcome> {
    let (start, inputs) = match &a.input {
        Some(path) => {
            let mesh = load_mesh(path)?;
            let mesh = if a.jitter > 0.0 { jitter(&mesh, a.jitter, a.seed)? } else { mesh };
            (mesh, vec![path.clone()])
        }
        None => (t_plus_start(a.seed)?, Vec::new()),
    };
    let mut cfg = EvolveConfig::new(a.alpha);
    cfg.max_iters = a.iters;
    if let Some(tol) = a.tol {
        cfg.tol = tol;
    }
    if let Some(step) = a.step {
        cfg.step = step;
    }
    let t = descend(&start, &cfg)?;
    let last = *t.energies.last().context("empty trace")?;
    say("j_start", t.energies[0]);
    say("j_final", last);
    say("gamma_contact_area", t.gamma_contact_area);
    println!("iterations = {}, collapsed_edges = {}, hit_max_iters = {}", t.iterations, t.collapsed_edges, t.hit_max_iters);
    let mut files = json!({});
    if let Some(out) = &a.out {
        files["final"] = save_mesh(&t.final_mesh, out)?;
    }
    if let Some(path) = &a.trace {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["iteration", "energy"])?;
        for (k, e) in t.energies.iter().enumerate() {
            w.write_record([k.to_string(), fmt17(*e)])?;
        }
        w.flush()?;
        files["trace"] = json!(path);
    }
    let outputs = json!({
        "alpha": a.alpha,
        "seed": a.seed,
        "j_start": t.energies[0],
        "j_final": last,
        "gamma_contact_area": t.gamma_contact_area,
        "iterations": t.iterations,
        "collapsed_edges": t.collapsed_edges,
        "hit_max_iters": t.hit_max_iters,
        "mesh": mesh_summary(&t.final_mesh),
        "files": files,
    });
    Ok(Outcome { pass: true, outputs, inputs })
}

#[derive(Deserialize)]
struct NetFile {
    nodes: Vec<[f64; 3]>,
    arcs: Vec<[usize; 2]>,
}

pub fn net_cmd(command: &NetCommand) -> Result<Outcome> {
    let NetCommand::Check { input, alpha } = command;
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let file: NetFile = serde_json::from_str(&text).context("net JSON must be {nodes: [[x,y,z]...], arcs: [[i,j]...]}")?;
    let net = HemisphereNet::new(file.nodes.iter().map(|&[x, y, z]| Vector3::new(x, y, z)).collect(), file.arcs)?;
    let junctions = junction_check(&net);
    let equator = equator_check(&net, *alpha)?;
    for f in &junctions.failures {
        println!("node {}: {}", f.node, f.reason);
    }
    for n in equator.nodes.iter().filter(|n| !n.verdict.is_minimal()) {
        println!("equator node {}: {:?}", n.node, n.verdict);
    }
    println!("junctions = {}, equator = {}", verdict(junctions.pass), verdict(equator.pass));
    Ok(Outcome {
        pass: junctions.pass && equator.pass,
        outputs: json!({ "junctions": junctions, "equator": equator }),
        inputs: vec![input.clone()],
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub fn classify1d_cmd(a: &Classify1dArgs) -> Result<Outcome> {
    let (text, inputs) = match (&a.rays, &a.input) {
        (Some(s), _) => (s.clone(), Vec::new()),
        (None, Some(p)) => (fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?, vec![p.clone()]),
        (None, None) => bail!("give --rays or --in"),
    };
    let rays: Vec<f64> = serde_json::from_str(&text).context("rays must be a JSON array of angles")?;
    let v = classify_branches(&BranchCone::new(rays)?, a.alpha)?;
    println!("{}", serde_json::to_string(&v)?);
    Ok(Outcome { pass: true, outputs: json!({ "verdict": v }), inputs })
}

pub fn fubini_cmd(a: &FubiniArgs) -> Result<Outcome> {
    let (mesh, inputs) = match &a.input {
        Some(p) => (load_mesh(p)?, vec![p.clone()]),
        None => (build_product(&profile(a.profile, a.theta)?, a.length, 1.0, a.refine)?, Vec::new()),
    };
    let axis = match a.axis {
        Axis::X => Vector3::unit_x(),
        Axis::Y => Vector3::unit_y(),
        Axis::Z => Vector3::unit_z(),
    };
    let r = fubini_check(&mesh, &axis, a.alpha, a.slices)?;
    say("integral", r.integral);
    say("direct", r.direct);
    // sections never weigh more than the surface they cut
    let pass = r.integral <= r.direct * (1.0 + 1e-9);
    println!("inequality = {}", verdict(pass));
    Ok(Outcome { pass, outputs: json!({ "fubini": r }), inputs })
}

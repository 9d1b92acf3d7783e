use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "slidecal", version, about = "Sliding-boundary minimal cones: meshes, energies, calibrations, competitors")]
pub struct Cli {
    /// Write a JSON run report (command, input digest, outputs, version, wall time).
    #[arg(long, global = true, value_name = "FILE")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Triangulate a cone inside a clip body and write it as OFF plus a boundary sidecar.
    Build(BuildArgs),
    /// Weighted energy of an OFF mesh.
    Energy(EnergyArgs),
    /// Check the paired calibration of a cone family.
    Calibrate(CalibrateArgs),
    /// Competitor family against the tetrahedral cone.
    Compete(CompeteArgs),
    /// Descend the weighted energy from a mesh (by default the jittered tetrahedral cone).
    Evolve(EvolveArgs),
    /// Spherical network checks.
    Net {
        #[command(subcommand)]
        command: NetCommand,
    },
    /// Classify a half-plane ray set.
    Classify1d(Classify1dArgs),
    /// Compare the integral of section energies with the energy of a mesh.
    Fubini(FubiniArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConeKind {
    TPlus,
    YBeta,
    YbarBeta,
    WBeta,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClipKind {
    /// The family's usual clip body.
    Default,
    SimplexCanonical,
    Simplex,
    Prism,
    Ball,
    Slab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileKind {
    Gamma,
    Vertical,
    GammaPlusVertical,
    Sloped,
    Vee,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Args)]
pub struct ConeArgs {
    #[arg(long, value_enum)]
    pub cone: ConeKind,
    /// Tilt of the Y and W families.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// One-dimensional profile of a product cone.
    #[arg(long, value_enum, default_value = "vertical")]
    pub profile: ProfileKind,
    /// Ray angle of a sloped or vee profile.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Length of a product cone along y.
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub cone: ConeArgs,
    #[arg(long, value_enum, default_value = "default")]
    pub clip: ClipKind,
    /// Radius of a ball or slab clip.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1)]
    pub refine: usize,
    /// Weight used for the printed energy.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    #[arg(long)]
    pub alpha: f64,
    /// OFF mesh; its sidecar is read when present.
    pub mesh: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub cone: ConeArgs,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompeteArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Evaluate a single competitor instead of searching.
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Number of sweep rows written to the CSV.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Start mesh; without it the jittered tetrahedral cone is used.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20000)]
    pub iters: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Jitter amplitude applied to an input mesh.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Stop once a sweep lowers the energy by less than this.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum NetCommand {
    /// Junction angles off the equator and half-plane sections on it.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
}

#[derive(Debug, Args)]
pub struct Classify1dArgs {
    /// JSON array of ray angles in [0, pi].
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub rays: Option<String>,
    /// File holding the JSON ray list.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct FubiniArgs {
    /// Mesh to slice; without it a product cone is built from the cone flags.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "vertical")]
    pub profile: ProfileKind,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, default_value_t = 4)]
    pub refine: usize,
    #[arg(long, value_enum, default_value = "y")]
    pub axis: Axis,
    #[arg(long, default_value_t = 100)]
    pub slices: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

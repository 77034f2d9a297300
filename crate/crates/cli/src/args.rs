use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wlcasimir::{Geometry, Method, QuadratureSpec};

#[derive(Debug, Parser)]
#[command(name = "wlcasimir", version, about = "Worldline Monte Carlo Casimir energies")]
pub struct Cli {
    /// Worker threads (0 = all cores); never changes the output.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    /// File of `key=value` lines supplying defaults for the subcommand flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a unit-loop ensemble file and print measure diagnostics.
    GenLoops(GenLoops),
    /// Interaction energy of one sphere-plate or cylinder-plate configuration (JSON).
    Energy(Energy),
    /// Normalized energy over a range of a/R (CSV).
    Scan(Scan),
    /// Energy density on a (rho, z) grid (CSV).
    DensityMap(DensityMap),
    /// Parallel-plate energy in D dimensions from loop extents (JSON).
    PpEnergy(PpEnergy),
    /// Extent moment <L^D> of a one-dimensional ensemble (JSON).
    PolymerMoment(PolymerMoment),
    /// Constrained polynomial fit of normalized energies (JSON).
    Fit(Fit),
    /// Zeroth-order PFA and reference curves at one configuration (JSON).
    Pfa(Pfa),
    /// Sphere PFA validity bound for a given tolerance (JSON).
    PfaBounds(PfaBounds),
}

pub const SUBCOMMANDS: [&str; 9] = [
    "gen-loops",
    "energy",
    "scan",
    "density-map",
    "pp-energy",
    "polymer-moment",
    "fit",
    "pfa",
    "pfa-bounds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryArg {
    Sphere,
    Cylinder,
}

impl GeometryArg {
    pub fn geometry(self) -> Geometry {
        match self {
            GeometryArg::Sphere => Geometry::SpherePlate,
            GeometryArg::Cylinder => Geometry::CylinderPlate,
        }
    }

    pub fn loop_dim(self) -> usize {
        match self {
            GeometryArg::Sphere => 3,
            GeometryArg::Cylinder => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Full,
    SmallDistance,
    Rotated,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Full => Method::Full,
            MethodArg::SmallDistance => Method::SmallDistance,
            MethodArg::Rotated => Method::Rotated,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenLoops {
    /// Number of loops.
    #[arg(long)]
    pub nl: usize,
    /// Points per loop.
    #[arg(long)]
    pub ppl: usize,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub dim: u8,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub blocks: usize,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

/// Loops read from a file or generated on the fly.
#[derive(Debug, Clone, Args, Serialize)]
pub struct LoopArgs {
    /// Ensemble file; overrides `--nl`, `--ppl` and `--seed`.
    #[arg(long, value_name = "FILE")]
    pub ensemble: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub nl: usize,
    #[arg(long, default_value_t = 10000)]
    pub ppl: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuadArgs {
    /// Force a method instead of dispatching on a/R.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, default_value_t = 8)]
    pub orientations: usize,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub angles: usize,
    #[arg(long, default_value_t = 50)]
    pub blocks: usize,
    /// Disable control variates.
    #[arg(long)]
    pub no_cv: bool,
}

impl QuadArgs {
    pub fn spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            method: self.method.map(Method::from),
            orientations: self.orientations,
            samples: self.samples,
            angles: self.angles,
            blocks: self.blocks,
            control_variates: !self.no_cv,
            ..QuadratureSpec::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Body {
    #[arg(long, value_enum)]
    pub geometry: GeometryArg,
    #[arg(long = "R", default_value_t = 1.0)]
    #[serde(rename = "R")]
    pub radius: f64,
    /// Degrees-of-freedom factor (1 for a scalar, 2 for the EM field).
    #[arg(long, default_value_t = 1.0)]
    pub cpp: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Energy {
    #[command(flatten)]
    #[serde(flatten)]
    pub body: Body,
    #[arg(long)]
    pub a: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub loops: LoopArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Scan {
    #[command(flatten)]
    #[serde(flatten)]
    pub body: Body,
    /// Explicit a/R values; overrides the range.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long, default_value_t = 0.005)]
    pub x_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub x_max: f64,
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    /// Space the range logarithmically.
    #[arg(long)]
    pub log: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub loops: LoopArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DensityMap {
    #[command(flatten)]
    #[serde(flatten)]
    pub body: Body,
    #[arg(long)]
    pub a: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rho_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 5)]
    pub rho_points: usize,
    /// Defaults to the plate.
    #[arg(long)]
    pub z_min: Option<f64>,
    /// Defaults to the bottom of the body.
    #[arg(long)]
    pub z_max: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub z_points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub loops: LoopArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PpEnergy {
    /// Spacetime dimension (integer, at least 2).
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub area: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub loops: LoopArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolymerMoment {
    /// Moment order, any real D >= 0.
    #[arg(long = "D")]
    #[serde(rename = "D")]
    pub dim: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub loops: LoopArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Fit {
    #[arg(long, value_enum)]
    pub geometry: GeometryArg,
    /// CSV with columns `x,y,yerr`; `#` lines and a header row are skipped.
    #[arg(long)]
    pub input: PathBuf,
    /// Polynomial order of the constrained fit `1 + c1 x + ...`.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: u8,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Pfa {
    #[command(flatten)]
    #[serde(flatten)]
    pub body: Body,
    #[arg(long)]
    pub a: f64,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PfaBounds {
    /// Extra relative tolerance granted to the worldline band.
    #[arg(long, default_value_t = 0.0)]
    pub tolerance: f64,
    /// Relative statistical width of the worldline band.
    #[arg(long, default_value_t = 0.001)]
    pub stat_width: f64,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

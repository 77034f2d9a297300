use std::path::Path;

use serde_json::{json, Value};

use wlcasimir::cylinder_plate::{self, CylinderPlateConfig};
use wlcasimir::loops::{exact_point_variance, exact_rms_step, measure_diagnostics};
use wlcasimir::parallel_plates::{self, ParallelPlatesConfig};
use wlcasimir::pfa::{self, Geometry, REFERENCE_FITS};
use wlcasimir::sphere_plate::{self, SpherePlateConfig};
use wlcasimir::stats::{constrained_fit, FitPoint};
use wlcasimir::{read_ensemble, write_ensemble, LoopGenerator, LoopParams, LoopSource, UnitLoopEnsemble};

use crate::args::*;
use crate::output::{provenance, write_csv, write_json};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Loops from a file or generated on demand.
pub enum Loops {
    File(UnitLoopEnsemble),
    Generated(LoopGenerator),
}

impl Loops {
    pub fn open(args: &LoopArgs, dim: usize) -> Result<Self> {
        Ok(match &args.ensemble {
            Some(path) => Loops::File(read_ensemble(path)?),
            None => Loops::Generated(LoopGenerator::new(LoopParams::new(args.nl, args.ppl, dim, args.seed)?)?),
        })
    }
}

impl LoopSource for Loops {
    fn n_loops(&self) -> usize {
        match self {
            Loops::File(e) => e.n_loops(),
            Loops::Generated(g) => g.n_loops(),
        }
    }
    fn n_points(&self) -> usize {
        match self {
            Loops::File(e) => e.n_points(),
            Loops::Generated(g) => g.n_points(),
        }
    }
    fn dim(&self) -> usize {
        match self {
            Loops::File(e) => e.dim(),
            Loops::Generated(g) => g.dim(),
        }
    }
    fn seed(&self) -> u64 {
        match self {
            Loops::File(e) => e.seed(),
            Loops::Generated(g) => g.seed(),
        }
    }
    fn loop_points<'a>(&'a self, index: usize, scratch: &'a mut Vec<f64>) -> &'a [f64] {
        match self {
            Loops::File(e) => e.loop_points(index, scratch),
            Loops::Generated(g) => g.loop_points(index, scratch),
        }
    }
}

fn to_json(v: &impl serde::Serialize) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// Loop metadata recorded next to the flags (a file's header wins over the flags).
fn loop_provenance(command: &str, config: &impl serde::Serialize, loops: &Loops) -> Value {
    let mut p = provenance(command, config);
    p["loops"] = json!({
        "nL": loops.n_loops(),
        "N": loops.n_points(),
        "dim": loops.dim(),
        "seed": loops.seed(),
    });
    p
}

pub fn gen_loops(args: &GenLoops) -> Result<()> {
    let e = UnitLoopEnsemble::generate(args.nl, args.ppl, args.dim as usize, args.seed)?;
    let checksum = write_ensemble(&e, &args.output)?;
    let d = measure_diagnostics(&e, args.blocks)?;
    let result = json!({
        "file": args.output.display().to_string(),
        "checksum": format!("{checksum:#018x}"),
        "nL": args.nl,
        "N": args.ppl,
        "dim": args.dim,
        "seed": args.seed,
        "variance": d.variance,
        "variance_expected": exact_point_variance(args.ppl),
        "variance_per_coord": d.variance_per_coord,
        "rms_step": d.rms_step,
        "rms_step_expected": exact_rms_step(args.ppl),
        "max_cm_ratio": d.max_cm_ratio,
    });
    write_json(None, result, provenance("gen-loops", args))?;
    Ok(())
}

fn energies(body: &Body, ratios: &[f64], loops: &Loops, quad: &QuadArgs) -> Result<Vec<sphere_plate::EnergyResult>> {
    let spec = quad.spec();
    Ok(match body.geometry {
        GeometryArg::Sphere => {
            let cfgs = ratios
                .iter()
                .map(|x| SpherePlateConfig::new(body.radius, x * body.radius)?.with_c_pp(body.cpp))
                .collect::<wlcasimir::Result<Vec<_>>>()?;
            sphere_plate::interaction_energies(&cfgs, loops, &spec)?
        }
        GeometryArg::Cylinder => {
            let cfgs = ratios
                .iter()
                .map(|x| CylinderPlateConfig::new(body.radius, x * body.radius)?.with_c_pp(body.cpp))
                .collect::<wlcasimir::Result<Vec<_>>>()?;
            cylinder_plate::energies_per_length(&cfgs, loops, &spec)?
        }
    })
}

pub fn energy(args: &Energy) -> Result<()> {
    let loops = Loops::open(&args.loops, args.body.geometry.loop_dim())?;
    if !(args.body.radius > 0.0) {
        return Err(CliError::Usage(format!("R must be positive, got {}", args.body.radius)));
    }
    let mut res = energies(&args.body, &[args.a / args.body.radius], &loops, &args.quad)?;
    let mut r = res.remove(0);
    // a / R * R need not round-trip
    r.a = args.a;
    let prov = loop_provenance("energy", args, &loops);
    write_json(args.output.as_deref(), to_json(&r), prov)?;
    Ok(())
}

fn scan_ratios(args: &Scan) -> Result<Vec<f64>> {
    if !args.ratios.is_empty() {
        return Ok(args.ratios.clone());
    }
    let (lo, hi, n) = (args.x_min, args.x_max, args.points);
    if n == 0 || !(lo > 0.0) || !(hi >= lo) {
        return Err(CliError::Usage(format!("bad scan range {lo}..{hi} with {n} points")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if args.log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect())
}

pub fn scan(args: &Scan) -> Result<()> {
    let loops = Loops::open(&args.loops, args.body.geometry.loop_dim())?;
    let ratios = scan_ratios(args)?;
    let res = energies(&args.body, &ratios, &loops, &args.quad)?;
    let rows = ratios.iter().zip(&res).map(|(x, r)| {
        vec![num(*x), num(r.normalized), num(r.normalized_err), num(r.energy), num(r.energy_err), r.method.to_string()]
    });
    let mut prov = loop_provenance("scan", args, &loops);
    prov["geometry"] = json!(args.body.geometry.geometry());
    write_csv(args.output.as_deref(), &prov, &["x", "E_normalized", "err", "E", "E_err", "method"], rows)?;
    Ok(())
}

fn grid_inclusive(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn grid_midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

pub fn density_map(args: &DensityMap) -> Result<()> {
    let (r, a) = (args.body.radius, args.a);
    let plate = -(r + a);
    let (z_lo, z_hi) = (args.z_min.unwrap_or(plate), args.z_max.unwrap_or(-r));
    if args.rho_points == 0 || args.z_points == 0 || !(args.rho_max >= args.rho_min) || !(z_hi >= z_lo) {
        return Err(CliError::Usage("empty density grid".into()));
    }
    if z_lo < plate {
        return Err(CliError::Usage(format!("z_min = {z_lo} lies below the plate at {plate}")));
    }
    let loops = Loops::open(&args.loops, args.body.geometry.loop_dim())?;
    let rhos = grid_inclusive(args.rho_min, args.rho_max, args.rho_points);
    // z nodes are cell midpoints so the default grid never touches the plate
    let zs = grid_midpoints(z_lo, z_hi, args.z_points);
    let mut rows = Vec::with_capacity(rhos.len() * zs.len());
    match args.body.geometry {
        GeometryArg::Sphere => {
            let cfg = SpherePlateConfig::new(r, a)?.with_c_pp(args.body.cpp)?;
            for &rho in &rhos {
                for &z in &zs {
                    let s = sphere_plate::density(&cfg, &[rho, 0.0, z], &loops)?;
                    rows.push(vec![num(rho), num(z), num(s.eps), num(s.eps_err)]);
                }
            }
        }
        GeometryArg::Cylinder => {
            let cfg = CylinderPlateConfig::new(r, a)?.with_c_pp(args.body.cpp)?;
            for &rho in &rhos {
                for &z in &zs {
                    let s = cylinder_plate::density_2d(&cfg, &[rho, z], &loops)?;
                    rows.push(vec![num(rho), num(z), num(s.eps), num(s.eps_err)]);
                }
            }
        }
    }
    let mut prov = loop_provenance("density-map", args, &loops);
    prov["geometry"] = json!(args.body.geometry.geometry());
    write_csv(args.output.as_deref(), &prov, &["rho", "z", "eps", "eps_err"], rows)?;
    Ok(())
}

pub fn pp_energy(args: &PpEnergy) -> Result<()> {
    let loops = Loops::open(&args.loops, 1)?;
    let cfg = ParallelPlatesConfig::new(args.a, args.area, args.dim)?;
    let r = parallel_plates::energy_from_extents(&cfg, &loops)?;
    let prov = loop_provenance("pp-energy", args, &loops);
    write_json(args.output.as_deref(), to_json(&r), prov)?;
    Ok(())
}

pub fn polymer_moment(args: &PolymerMoment) -> Result<()> {
    let loops = Loops::open(&args.loops, 1)?;
    let m = parallel_plates::polymer_moment(&loops, args.dim)?;
    let result = json!({
        "D": args.dim,
        "moment": m,
        "identity": parallel_plates::moment_identity(args.dim),
        "nL": loops.n_loops(),
        "N": loops.n_points(),
        "seed": loops.seed(),
    });
    write_json(args.output.as_deref(), result, loop_provenance("polymer-moment", args, &loops))?;
    Ok(())
}

/// `x,y,yerr` rows; `#` lines and a non-numeric header row are skipped,
/// further columns ignored.
pub fn read_fit_points(path: &Path) -> Result<Vec<FitPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let field = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
        match (field(0), field(1), field(2)) {
            (Some(x), Some(y), Some(sigma)) => points.push(FitPoint { x, y, sigma }),
            _ if i == 0 && points.is_empty() => continue,
            _ => return Err(CliError::Usage(format!("{}: row {} is not x,y,yerr", path.display(), i + 1))),
        }
    }
    Ok(points)
}

pub fn fit(args: &Fit) -> Result<()> {
    let points = read_fit_points(&args.input)?;
    let f = constrained_fit(&points, args.order as usize)?;
    let geometry = args.geometry.geometry();
    let linear = match geometry {
        Geometry::SpherePlate => REFERENCE_FITS.sphere_linear,
        Geometry::CylinderPlate => REFERENCE_FITS.cylinder_linear,
    };
    let mut result = to_json(&f);
    result["geometry"] = json!(geometry);
    result["n_points"] = json!(points.len());
    result["reference"] = to_json(REFERENCE_FITS.fit(geometry));
    result["reference_linear"] = to_json(&linear);
    write_json(args.output.as_deref(), result, provenance("fit", args))?;
    Ok(())
}

pub fn pfa_cmd(args: &Pfa) -> Result<()> {
    let (r, a) = (args.body.radius, args.a);
    if !(r > 0.0 && a > 0.0) {
        return Err(CliError::Usage(format!("need R > 0 and a > 0, got R = {r}, a = {a}")));
    }
    let g = args.body.geometry.geometry();
    let x = a / r;
    let mut result = json!({
        "geometry": g,
        "R": r,
        "a": a,
        "cpp": args.body.cpp,
        "x": x,
        "E_pfa0": pfa::pfa_zeroth(g, r, a, args.body.cpp),
    });
    if g == Geometry::SpherePlate {
        let (lo, hi) = pfa::pfa_band_sphere(r, a);
        result["pfa_band"] = json!([lo, hi]);
    }
    if let Ok((c, w)) = pfa::fit_curve(g, x) {
        result["fit_central"] = json!(c);
        result["fit_half_width"] = json!(w);
    }
    write_json(args.output.as_deref(), result, provenance("pfa", args))?;
    Ok(())
}

pub fn pfa_bounds(args: &PfaBounds) -> Result<()> {
    let b = pfa::sphere_validity_bound(args.stat_width, args.tolerance)?;
    let result = json!({
        "x_bound": b.x_bound,
        "tolerance": args.tolerance,
        "stat_width": args.stat_width,
        "at_lower_edge": b.at_lower_edge,
        "method": "scan of the reference sphere fit band against the PFA band on [0, 0.1], refined by bisection",
    });
    write_json(args.output.as_deref(), result, provenance("pfa-bounds", args))?;
    Ok(())
}

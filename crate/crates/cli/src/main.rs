//! `holomotion`: classification, conjugacies, boundary motions, gluing
//! experiments and coordinate renders for germs read from series JSON files.
//!
//! Exit codes: 0 success, 1 input error, 2 unsupported germ, 3 motion
//! inequality violated, 4 resolution or underflow limit.

use std::f64::consts::TAU;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use holomotion::gluing::{default_delta, glue, ConvergenceReport, GlueKind, GlueMesh, GluedMap, GluingError};
use holomotion::motions::{
    build_boettcher_motion, build_koenig_motion, verify_motion, BoundaryMotion, ExtensionProfile, MotionError,
    ParamGrid,
};
use holomotion::normal_forms::{
    boettcher_iterative, boettcher_radius, boettcher_series, classify, domain_radius, koenig_iterative, koenig_radius,
    koenig_series, normalize_leading, AnalyticGerm, ConjugacyResult, GermClass, NormalFormError,
};
use holomotion::series::{PowerSeries, SeriesError, DEFAULT_ORDER};

const EXIT_INPUT: u8 = 1;
const EXIT_UNSUPPORTED: u8 = 2;
const EXIT_CROSSING: u8 = 3;
const EXIT_RESOLUTION: u8 = 4;
const THREADS_VAR: &str = "HOLOMOTION_THREADS";
const ITERATIVE_SAMPLES: usize = 32;

#[derive(Parser, Debug)]
#[command(name = "holomotion", version, about = "Normal forms at fixed points via holomorphic motions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the fixed point at the origin and suggest a radius.
    Classify {
        germ: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the König or Böttcher conjugacy.
    Conjugate {
        germ: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Method::Series)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the boundary motion and check the motion axioms.
    Motion {
        germ: PathBuf,
        /// Base radius; defaults to δ/2 (König) or δ^n (Böttcher).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Points per boundary circle and samples per parameter circle.
        #[arg(long, default_value_t = 128)]
        mesh: usize,
        #[arg(long, default_value_t = 4)]
        param_circles: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Glue for each k and tabulate dilatation and residual convergence.
    Glue {
        germ: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        k_list: Vec<usize>,
        #[arg(long, default_value_t = 128)]
        mesh: usize,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value_t = Profile::ModeOptimal)]
        profile: Profile,
        /// Which glued maps get per-piece CSV dumps.
        #[arg(long, value_enum, default_value_t = Pieces::Last)]
        pieces: Pieces,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grayscale PGM of the level sets of the normal-form coordinate modulus.
    Render {
        germ: PathBuf,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        levels: usize,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Series,
    Iterative,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Profile {
    ModeOptimal,
    Linear,
}

impl From<Profile> for ExtensionProfile {
    fn from(p: Profile) -> Self {
        match p {
            Profile::ModeOptimal => ExtensionProfile::ModeOptimal,
            Profile::Linear => ExtensionProfile::Linear,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Pieces {
    All,
    Last,
    None,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<SeriesError> for Failure {
    fn from(e: SeriesError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<NormalFormError> for Failure {
    fn from(e: NormalFormError) -> Self {
        let code = match &e {
            NormalFormError::UnsupportedClass { .. } | NormalFormError::IncompatibleNormalForms(..) => EXIT_UNSUPPORTED,
            NormalFormError::NotAFixedPoint(_) | NormalFormError::NotNormalized(_) | NormalFormError::Series(_) => {
                EXIT_INPUT
            }
            NormalFormError::NoValidRadius
            | NormalFormError::DivergentCoefficients { .. }
            | NormalFormError::EscapedDomain { .. }
            | NormalFormError::BranchBreakdown { .. } => EXIT_RESOLUTION,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<MotionError> for Failure {
    fn from(e: MotionError) -> Self {
        let code = match &e {
            MotionError::NonCrossingViolated { .. } => EXIT_CROSSING,
            MotionError::NotInjectiveOnMesh { .. } => EXIT_RESOLUTION,
            MotionError::NormalForm(inner) => return inner.clone().into(),
            _ => EXIT_INPUT,
        };
        let message = match &e {
            MotionError::NonCrossingViolated { c, z, modulus, bound } => {
                format!("{e}\noffending sample: c = {c}, z = {z}, |h(c,z)| = {modulus:e}, bound = {bound:e}")
            }
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

impl From<GluingError> for Failure {
    fn from(e: GluingError) -> Self {
        let code = match &e {
            GluingError::KindMismatch { .. } => EXIT_UNSUPPORTED,
            GluingError::InvalidDelta(_) => EXIT_INPUT,
            GluingError::Motion(inner) => return inner.clone().into(),
            GluingError::NormalForm(inner) => return inner.clone().into(),
            GluingError::RadiusUnderflow { .. }
            | GluingError::BoundaryMismatch { .. }
            | GluingError::BranchAmbiguity { .. }
            | GluingError::RootFindingDivergence { .. }
            | GluingError::DegreeMismatch { .. } => EXIT_RESOLUTION,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    match configure_threads().and_then(|_| run(cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::input(format!("{THREADS_VAR} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Failure::input(e.to_string()))
}

fn run(command: Command) -> CliResult<u8> {
    match command {
        Command::Classify { germ, out } => classify_cmd(&germ, out.as_deref()),
        Command::Conjugate { germ, order, method, out } => conjugate_cmd(&germ, order, method, out.as_deref()),
        Command::Motion { germ, r, delta, mesh, param_circles, order, out } => {
            motion_cmd(&germ, MotionArgs { r, delta, mesh, param_circles, order }, out.as_deref())
        }
        Command::Glue { germ, k_list, mesh, delta, profile, pieces, out } => {
            glue_cmd(&germ, GlueArgs { k_list, mesh, delta, profile, pieces }, &out)
        }
        Command::Render { germ, grid, levels, order, out } => render_cmd(&germ, grid, levels, order, &out),
    }
}

fn load_germ(path: &Path) -> CliResult<AnalyticGerm> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let series: PowerSeries =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(classify(&series)?)
}

fn require_supported(germ: &AnalyticGerm) -> CliResult<()> {
    if germ.class() == GermClass::Unsupported {
        return Err(Failure {
            code: EXIT_UNSUPPORTED,
            message: "unsupported germ: |λ| = 1 or identically zero".into(),
        });
    }
    Ok(())
}

/// The germ a construction actually runs on: repelling germs through their
/// inverse, superattracting germs rescaled to `a_n = 1`.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
enum Working {
    Identity,
    Inverse,
    Rescale { b: Complex64 },
}

fn working_germ(germ: &AnalyticGerm) -> CliResult<(AnalyticGerm, Working)> {
    require_supported(germ)?;
    match germ.class() {
        GermClass::Repelling => Ok((classify(&germ.series().with_order(DEFAULT_ORDER).reverse()?)?, Working::Inverse)),
        GermClass::Superattracting => {
            let n = germ.degree().unwrap_or(2);
            let an = germ.series().coeff(n);
            if an == Complex64::new(1.0, 0.0) {
                return Ok((germ.clone(), Working::Identity));
            }
            let b = an.powf(1.0 / (n as f64 - 1.0));
            Ok((classify(&normalize_leading(germ.series(), b)?)?, Working::Rescale { b }))
        }
        _ => Ok((germ.clone(), Working::Identity)),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    germ: String,
    parameters: Value,
    files: Vec<String>,
}

fn write_manifest(path: &Path, command: &str, germ: &Path, parameters: Value, files: Vec<String>) -> CliResult<()> {
    let manifest =
        Manifest { command, version: env!("CARGO_PKG_VERSION"), germ: germ.display().to_string(), parameters, files };
    write_json(path, &manifest)
}

/// Write `documents` into `out` and list them in `out/manifest.json`.
fn emit(out: &Path, command: &str, germ: &Path, parameters: Value, documents: &[(&str, &Value)]) -> CliResult<()> {
    ensure_dir(out)?;
    for (name, doc) in documents {
        write_json(&out.join(name), doc)?;
    }
    let files = documents.iter().map(|(name, _)| name.to_string()).collect();
    write_manifest(&out.join("manifest.json"), command, germ, parameters, files)
}

fn to_value<T: Serialize>(value: &T) -> CliResult<Value> {
    serde_json::to_value(value).map_err(|e| Failure::input(e.to_string()))
}

fn classify_cmd(path: &Path, out: Option<&Path>) -> CliResult<u8> {
    let germ = load_germ(path)?;
    let (report, code) = match germ.class() {
        GermClass::Attracting | GermClass::Repelling => {
            let delta = koenig_series(&germ, DEFAULT_ORDER).ok().map(|r| r.delta);
            (json!({ "class": germ.class(), "lambda": germ.multiplier(), "delta": delta }), 0)
        }
        GermClass::Superattracting => {
            let delta = boettcher_radius(&germ).ok().map(|r| r.delta);
            let report = json!({
                "class": germ.class(),
                "degree": germ.degree(),
                "leading": germ.leading_coefficient(),
                "delta": delta,
            });
            (report, 0)
        }
        GermClass::Unsupported => (json!({ "class": germ.class() }), EXIT_UNSUPPORTED),
    };
    print_json(&report)?;
    if let Some(out) = out {
        emit(out, "classify", path, json!({}), &[("classify.json", &report)])?;
    }
    Ok(code)
}

fn series_conjugacy(germ: &AnalyticGerm, order: usize) -> CliResult<ConjugacyResult> {
    require_supported(germ)?;
    Ok(match germ.class() {
        GermClass::Superattracting => boettcher_series(germ, order)?,
        _ => koenig_series(germ, order)?,
    })
}

/// Validity radius of the iterative limits.
fn iterative_radius(germ: &AnalyticGerm) -> CliResult<f64> {
    require_supported(germ)?;
    Ok(match germ.class() {
        GermClass::Superattracting => boettcher_radius(germ)?.delta,
        _ => koenig_radius(germ)?,
    })
}

#[derive(Serialize)]
struct IterativeSample {
    z: Complex64,
    psi: Complex64,
}

#[derive(Serialize)]
struct IterativeReport {
    radius: f64,
    working: Working,
    samples: Vec<IterativeSample>,
    /// `sup |ψ(g(w)) - N(ψ(w))|` in the working coordinate.
    residual: f64,
}

/// Inverse conjugacy `ψ` on `ITERATIVE_SAMPLES` points of `|z| = radius`
/// by the classical limits.
fn iterative_conjugacy(germ: &AnalyticGerm, radius: f64) -> CliResult<IterativeReport> {
    let (work, working) = working_germ(germ)?;
    let to_working = |z: Complex64| match working {
        Working::Rescale { b } => b * z,
        _ => z,
    };
    let psi = |w: Complex64| -> CliResult<Complex64> {
        Ok(match work.class() {
            GermClass::Superattracting => boettcher_iterative(&work, w, 64)?,
            _ => koenig_iterative(&work, w, 400)?,
        })
    };
    let mut samples = Vec::with_capacity(ITERATIVE_SAMPLES);
    let mut residual = 0.0f64;
    for k in 0..ITERATIVE_SAMPLES {
        let z = Complex64::from_polar(radius, TAU * k as f64 / ITERATIVE_SAMPLES as f64);
        let w = to_working(z);
        let value = psi(w)?;
        let model = match work.class() {
            GermClass::Superattracting => value.powu(work.degree().unwrap_or(2) as u32),
            _ => work.series().coeff(1) * value,
        };
        residual = residual.max((psi(work.evaluate(w))? - model).norm());
        samples.push(IterativeSample { z, psi: value });
    }
    Ok(IterativeReport { radius, working, samples, residual })
}

fn conjugate_cmd(path: &Path, order: usize, method: Method, out: Option<&Path>) -> CliResult<u8> {
    if order == 0 {
        return Err(Failure::input("--order must be at least 1"));
    }
    let germ = load_germ(path)?;
    require_supported(&germ)?;
    let params = json!({ "order": order, "method": method });
    let mut docs: Vec<(&str, Value)> = Vec::new();
    let stdout = match method {
        Method::Series => {
            let r = to_value(&series_conjugacy(&germ, order)?)?;
            docs.push(("conjugacy.json", r.clone()));
            r
        }
        Method::Iterative => {
            let it = to_value(&iterative_conjugacy(&germ, iterative_radius(&germ)? / 8.0)?)?;
            docs.push(("iterative.json", it.clone()));
            it
        }
        Method::Both => {
            let series = series_conjugacy(&germ, order)?;
            let radius = series.delta.min(iterative_radius(&germ)?) / 8.0;
            let it = iterative_conjugacy(&germ, radius)?;
            let discrepancy =
                it.samples.iter().map(|s| (series.phi_inverse.evaluate(s.z) - s.psi).norm()).fold(0.0, f64::max);
            let cross = json!({ "radius": radius, "samples": it.samples.len(), "max_discrepancy": discrepancy });
            docs.push(("conjugacy.json", to_value(&series)?));
            docs.push(("iterative.json", to_value(&it)?));
            docs.push(("cross_oracle.json", cross.clone()));
            json!({ "conjugacy": docs[0].1, "iterative": docs[1].1, "cross_oracle": cross })
        }
    };
    print_json(&stdout)?;
    if let Some(out) = out {
        let refs: Vec<(&str, &Value)> = docs.iter().map(|(n, v)| (*n, v)).collect();
        emit(out, "conjugate", path, params, &refs)?;
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct MotionArgs {
    r: Option<f64>,
    delta: Option<f64>,
    mesh: usize,
    param_circles: usize,
    order: usize,
}

fn positive(name: &str, value: f64) -> CliResult<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::input(format!("--{name} must be positive and finite, got {value}")))
    }
}

fn motion_cmd(path: &Path, args: MotionArgs, out: Option<&Path>) -> CliResult<u8> {
    if args.mesh < 64 {
        return Err(Failure::input("--mesh must be at least 64"));
    }
    if args.param_circles == 0 {
        return Err(Failure::input("--param-circles must be at least 1"));
    }
    let germ = load_germ(path)?;
    let (work, working) = working_germ(&germ)?;
    let boettcher = work.class() == GermClass::Superattracting;
    let delta = match args.delta {
        Some(d) => positive("delta", d)?,
        None if boettcher => boettcher_radius(&work)?.delta,
        None => domain_radius(&work)?,
    };
    let r = match args.r {
        Some(r) => positive("r", r)?,
        None if boettcher => delta.powi(work.degree().unwrap_or(2) as i32),
        None => delta / 2.0,
    };
    let (kind, motion) = if boettcher {
        ("boettcher", BoundaryMotion::boettcher(&work, r, delta, args.order)?)
    } else {
        ("koenig", BoundaryMotion::koenig(&work, r, delta)?)
    };
    let grid = ParamGrid::uniform(motion.param_radius, args.param_circles, args.mesh);
    let (sample, margin) = if boettcher {
        build_boettcher_motion(&work, r, delta, &grid, args.mesh, args.order)?
    } else {
        build_koenig_motion(&work, r, delta, &grid, args.mesh)?
    };
    let report = verify_motion(&sample)?;
    let doc = json!({
        "kind": kind,
        "working": working,
        "r": r,
        "delta": delta,
        "param_radius": motion.param_radius,
        "param_circles": grid.circles,
        "points_per_circle": args.mesh,
        "report": report,
        "crossing": margin,
        "passed": report.passed(),
    });
    print_json(&doc)?;
    if let Some(out) = out {
        emit(out, "motion", path, to_value(&args)?, &[("motion.json", &doc)])?;
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct GlueArgs {
    k_list: Vec<usize>,
    mesh: usize,
    delta: Option<f64>,
    profile: Profile,
    pieces: Pieces,
}

fn write_pieces(dir: &Path, glued: &GluedMap, files: &mut Vec<String>, prefix: &str) -> CliResult<()> {
    for (pos, piece) in glued.pieces.iter().enumerate() {
        let name = format!("piece_{pos:03}_j{}.csv", piece.index);
        let mut w = BufWriter::new(fs::File::create(dir.join(&name))?);
        glued.write_piece_csv(pos, &mut w)?;
        w.flush()?;
        files.push(format!("{prefix}/{name}"));
    }
    Ok(())
}

fn glue_cmd(path: &Path, args: GlueArgs, out: &Path) -> CliResult<u8> {
    if args.k_list.is_empty() {
        return Err(Failure::input("--k-list must name at least one k"));
    }
    if args.mesh < 8 {
        return Err(Failure::input("--mesh must be at least 8"));
    }
    let germ = load_germ(path)?;
    let (work, working) = working_germ(&germ)?;
    let kind = match work.class() {
        GermClass::Superattracting => GlueKind::Boettcher,
        _ => GlueKind::Koenig,
    };
    let delta = match args.delta {
        Some(d) => positive("delta", d)?,
        None => default_delta(&work)?,
    };
    let mesh = GlueMesh::square(args.mesh).with_profile(args.profile.into());
    let maps = args.k_list.iter().map(|&k| glue(&work, k, delta, mesh)).collect::<Result<Vec<_>, _>>()?;
    let report = ConvergenceReport::from_glued(&work, kind, delta, &maps);

    ensure_dir(out)?;
    let mut files = Vec::new();
    let mut csv = BufWriter::new(fs::File::create(out.join("convergence.csv"))?);
    report.write_csv(&mut csv)?;
    csv.flush()?;
    files.push("convergence.csv".to_string());
    write_json(&out.join("convergence.json"), &report)?;
    files.push("convergence.json".to_string());
    let last = maps.len() - 1;
    for (pos, glued) in maps.iter().enumerate() {
        let prefix = format!("k{}", glued.decomposition.count);
        let dir = out.join(&prefix);
        ensure_dir(&dir)?;
        write_json(&dir.join("summary.json"), &glued.summary())?;
        files.push(format!("{prefix}/summary.json"));
        if args.pieces == Pieces::All || (args.pieces == Pieces::Last && pos == last) {
            write_pieces(&dir, glued, &mut files, &prefix)?;
        }
    }
    let mut params = to_value(&args)?;
    params["delta"] = json!(delta);
    params["working"] = to_value(&working)?;
    write_manifest(&out.join("manifest.json"), "glue", path, params, files)?;

    for row in &report.rows {
        println!(
            "k={} r_k={:e} K={:.9} residual={:e} boundary_defect={:e}",
            row.k, row.r_k, row.dilatation, row.residual, row.boundary_defect
        );
    }
    if let Some(a) = &report.agreement {
        println!("series agreement (k={}, |z|={:e}): {:e}", a.k, a.radius, a.max_defect);
    }
    Ok(0)
}

fn render_cmd(path: &Path, grid: usize, levels: usize, order: usize, out: &Path) -> CliResult<u8> {
    if grid == 0 {
        return Err(Failure::input("--grid must be at least 1"));
    }
    if levels == 0 {
        return Err(Failure::input("--levels must be at least 1"));
    }
    let germ = load_germ(path)?;
    let conj = series_conjugacy(&germ, order.max(1))?;
    let delta = conj.delta;
    let slope = conj.phi_inverse.coeff(1).norm();
    let pixels: Vec<u8> = (0..grid)
        .into_par_iter()
        .flat_map_iter(|i| {
            let conj = &conj;
            (0..grid).map(move |j| {
                let x = delta * ((2 * j + 1) as f64 / grid as f64 - 1.0);
                let y = delta * (1.0 - (2 * i + 1) as f64 / grid as f64);
                let z = Complex64::new(x, y);
                if z.norm() >= delta {
                    return 0;
                }
                let t = conj.phi_inverse.evaluate(z).norm() / (slope * delta);
                (255.0 * (0.5 + 0.5 * (TAU * levels as f64 * t).cos())).round() as u8
            })
        })
        .collect();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(out)?);
    write!(w, "P5\n{grid} {grid}\n255\n")?;
    w.write_all(&pixels)?;
    w.flush()?;
    let mut manifest = out.as_os_str().to_owned();
    manifest.push(".manifest.json");
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let params = json!({ "grid": grid, "levels": levels, "order": order, "delta": delta });
    write_manifest(Path::new(&manifest), "render", path, params, vec![name])?;
    Ok(0)
}

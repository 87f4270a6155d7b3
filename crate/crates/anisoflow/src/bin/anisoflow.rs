//! Command-line driver: Wulff geometry, curvature reports, flow runs, the
//! inequality suites, curve generation, and duality identity checks.
//!
//! Exit codes: 0 success, 1 inequality failure, 2 usage or spec error,
//! 3 invalid geometry, 4 solver failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anisoflow::curve::DEFAULT_CONVEXITY_TOL;
use anisoflow::flow::{normalized_monitor, run_flow, FlowConfig, StopReason};
use anisoflow::gen::{generate, GenSpec};
use anisoflow::io::{
    read_anisotropy, read_curve, read_genspec, write_batch_table, write_curve,
    write_geometry_table, write_svg, write_trace_table, Viewport,
};
use anisoflow::verify::{batch_verify, verify_one};
use anisoflow::{Anisotropy, Error, PolylineCurve, Result};

#[derive(Parser)]
#[command(
    name = "anisoflow",
    version,
    about = "Planar anisotropic geometry: Wulff shapes, curvature flow, inequality checks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the unit Wulff shape and print kappa and the profile bounds.
    Wulff(WulffArgs),
    /// Per-vertex geometry table and curvature summary for one curve.
    Curvature(CurvatureArgs),
    /// Run anisotropic curvature flow and export the trace.
    Flow(FlowArgs),
    /// Check the inequality suite on one curve or a seeded batch.
    Verify(VerifyArgs),
    /// Generate a curve from a seeded family.
    Gen(GenArgs),
    /// Check the norm duality identities on random samples.
    Identities(IdentitiesArgs),
}

#[derive(Args)]
struct AnisoOpt {
    /// Anisotropy file (JSON).
    #[arg(long, value_name = "PATH")]
    aniso: PathBuf,
    /// Override the anisotropy evaluation grid (power of two).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
}

impl AnisoOpt {
    fn load(&self) -> Result<Anisotropy> {
        let a = read_anisotropy(&self.aniso)?;
        match self.grid {
            Some(g) => Anisotropy::new(a.kind().clone(), g),
            None => Ok(a),
        }
    }
}

#[derive(Args)]
struct CurveSource {
    /// Curve file (JSON).
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    /// Generator family, e.g. 'bean' or 'convex:max_mode=6,amp=0.5'.
    #[arg(long, value_name = "FAMILY")]
    gen: Option<String>,
    /// Generator spec file (JSON).
    #[arg(long, value_name = "PATH")]
    spec: Option<PathBuf>,
    /// Vertex count for generated curves.
    #[arg(long, value_name = "M", default_value_t = 256)]
    vertices: usize,
    /// Seed for generated curves.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CurveSource {
    fn load(&self, a: &Anisotropy) -> Result<PolylineCurve> {
        match (&self.curve, &self.gen, &self.spec) {
            (Some(path), None, None) => read_curve(path),
            (None, Some(family), None) => generate(
                &GenSpec {
                    family: family.parse()?,
                    vertex_count: self.vertices,
                    seed: self.seed,
                },
                a,
            ),
            (None, None, Some(path)) => generate(&read_genspec(path)?, a),
            _ => Err(Error::InvalidConfig(
                "exactly one of --curve, --gen, --spec must be given".to_string(),
            )),
        }
    }
}

#[derive(Args)]
struct WulffArgs {
    #[command(flatten)]
    aniso: AnisoOpt,
    /// Vertex count of the written boundary.
    #[arg(long, value_name = "M", default_value_t = 512)]
    vertices: usize,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    aniso: AnisoOpt,
    #[command(flatten)]
    source: CurveSource,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    aniso: AnisoOpt,
    #[command(flatten)]
    source: CurveSource,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    cfl: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt_max: f64,
    #[arg(long)]
    t_end: Option<f64>,
    /// Stop when the area falls to this fraction of the initial area.
    #[arg(long, default_value_t = 0.02)]
    area_stop: f64,
    #[arg(long, default_value_t = 2.0)]
    resample_threshold: f64,
    /// Record one sample every this many steps.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Consecutive convex samples before the support-scheme handoff (0 = off).
    #[arg(long, default_value_t = 5)]
    handoff_run: usize,
    #[arg(long, default_value_t = 2_000_000)]
    max_steps: usize,
    /// Also write one numbered curve file per sample.
    #[arg(long)]
    snapshots: bool,
    /// Also write one SVG per sample (fixed viewport from the initial curve).
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    aniso: AnisoOpt,
    /// Verify a single curve file.
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    /// Verify a single generated curve.
    #[arg(long, value_name = "FAMILY")]
    gen: Option<String>,
    /// Verify a seeded batch drawn from this family.
    #[arg(long, value_name = "FAMILY")]
    batch: Option<String>,
    /// Batch size.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "M", default_value_t = 256)]
    vertices: usize,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    /// Anisotropy file; defaults to the Euclidean norm.
    #[arg(long, value_name = "PATH")]
    aniso: Option<PathBuf>,
    #[command(flatten)]
    source: CurveSource,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct IdentitiesArgs {
    #[command(flatten)]
    aniso: AnisoOpt,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidAnisotropy(_)
        | Error::InvalidConfig(_)
        | Error::Format(_)
        | Error::Io(_) => 2,
        Error::InvalidCurve(_)
        | Error::InvalidCurveAt { .. }
        | Error::NotConvex(_)
        | Error::ZeroVector => 3,
        Error::StepRejected(_) | Error::TraceTooShort(_) | Error::GeneratorExhausted { .. } => 4,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Wulff(args) => cmd_wulff(args),
        Cmd::Curvature(args) => cmd_curvature(args),
        Cmd::Flow(args) => cmd_flow(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Identities(args) => cmd_identities(args),
    }
}

fn cmd_wulff(args: WulffArgs) -> Result<u8> {
    let a = args.aniso.load()?;
    let (lo, hi) = a.bounds();
    let boundary = a.wulff_boundary(args.vertices)?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("wulff.json");
    write_curve(&path, &boundary)?;
    println!("kappa = {:.12e}", a.wulff_area());
    println!("a = {lo:.12e}");
    println!("b = {hi:.12e}");
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_curvature(args: CurvatureArgs) -> Result<u8> {
    let a = args.aniso.load()?;
    let c = args.source.load(&a)?;
    let geo = c.geometry(&a);
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("geometry.csv");
    let mut file = fs::File::create(&path)?;
    write_geometry_table(&mut file, &c, &geo)?;
    println!("kF_max = {:.12e}", geo.kf_max());
    println!("A = {:.12e}", geo.area);
    println!("P_F = {:.12e}", geo.aniso_perimeter);
    println!("convex = {}", c.is_convex(&a, DEFAULT_CONVEXITY_TOL));
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_flow(args: FlowArgs) -> Result<u8> {
    let a = args.aniso.load()?;
    let c = args.source.load(&a)?;
    let cfg = FlowConfig {
        cfl: args.cfl,
        dt_max: args.dt_max,
        t_end: args.t_end,
        area_stop_fraction: args.area_stop,
        resample_threshold: args.resample_threshold,
        snapshot_stride: args.stride,
        vertex_count: None,
        convex_handoff_run: args.handoff_run,
        max_steps: args.max_steps,
    };
    let viewport = Viewport::from_curve(&c, 0.05);
    let trace = run_flow(c.into(), &a, &cfg)?;
    fs::create_dir_all(&args.out)?;
    let trace_path = args.out.join("trace.csv");
    let mut file = fs::File::create(&trace_path)?;
    write_trace_table(&mut file, &trace)?;
    if args.snapshots || args.svg {
        for (i, (_, snap)) in trace.snapshots.iter().enumerate() {
            if args.snapshots {
                write_curve(&args.out.join(format!("snapshot_{i:05}.json")), snap)?;
            }
            if args.svg {
                write_svg(
                    &args.out.join(format!("snapshot_{i:05}.svg")),
                    &[(snap, "black")],
                    &viewport,
                )?;
            }
        }
    }
    let normalized = normalized_monitor(&trace);
    println!("stop_reason = {}", trace.stop_reason);
    match trace.first_convex_time() {
        Some(t) => println!("first_convex_time = {t:.12e}"),
        None => println!("first_convex_time = none"),
    }
    println!("normalized_margin = {:.12e}", normalized.margin);
    println!("samples = {}", trace.samples.len());
    println!("wrote {}", trace_path.display());
    Ok(match trace.stop_reason {
        StopReason::AreaFloor | StopReason::TimeHorizon => 0,
        _ => 4,
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let a = args.aniso.load()?;
    match (&args.curve, &args.gen, &args.batch) {
        (Some(path), None, None) => {
            let c = read_curve(path)?;
            verify_single(&c, &a)
        }
        (None, Some(family), None) => {
            let c = generate(
                &GenSpec {
                    family: family.parse()?,
                    vertex_count: args.vertices,
                    seed: args.seed,
                },
                &a,
            )?;
            verify_single(&c, &a)
        }
        (None, None, Some(family)) => {
            let spec = GenSpec {
                family: family.parse()?,
                vertex_count: args.vertices,
                seed: 0,
            };
            let summary = batch_verify(&spec, &a, args.n, args.seed)?;
            fs::create_dir_all(&args.out)?;
            let path = args.out.join("batch.csv");
            let mut file = fs::File::create(&path)?;
            write_batch_table(&mut file, &summary)?;
            println!("n = {}", summary.n);
            for (name, q) in &summary.quantiles {
                println!(
                    "{name}: min {:.3e}  q25 {:.3e}  median {:.3e}  q75 {:.3e}  max {:.3e}",
                    q[0], q[1], q[2], q[3], q[4]
                );
            }
            println!("failures = {}", summary.failures.len());
            for f in &summary.failures {
                println!("  curve {} (seed {}) failed {}", f.id, f.seed, f.name);
            }
            println!("wrote {}", path.display());
            Ok(if summary.failures.is_empty() { 0 } else { 1 })
        }
        _ => Err(Error::InvalidConfig(
            "exactly one of --curve, --gen, --batch must be given".to_string(),
        )),
    }
}

fn verify_single(c: &PolylineCurve, a: &Anisotropy) -> Result<u8> {
    let verdict = verify_one(0, 0, c, a)?;
    let mut failed = false;
    for report in &verdict.reports {
        println!("{report}");
        failed |= !report.pass;
    }
    println!("equality_gap = {:.12e}", verdict.gap);
    Ok(if failed { 1 } else { 0 })
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let a = match &args.aniso {
        Some(path) => read_anisotropy(path)?,
        None => Anisotropy::euclidean(),
    };
    let c = args.source.load(&a)?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("curve.json");
    write_curve(&path, &c)?;
    println!("vertices = {}", c.len());
    println!("A = {:.12e}", c.area());
    println!("convex = {}", c.is_convex(&a, DEFAULT_CONVEXITY_TOL));
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_identities(args: IdentitiesArgs) -> Result<u8> {
    let a = args.aniso.load()?;
    let mut failed = false;
    for report in a.check_duality(args.samples, args.seed) {
        println!("{report}");
        failed |= !report.pass;
    }
    Ok(if failed { 1 } else { 0 })
}

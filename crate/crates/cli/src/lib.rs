//! The `pcrecon` command line: octree building, headless grows, scripted
//! replay, accuracy benchmarks and the network service.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcrecon_core::grow::CancelToken;
use pcrecon_core::ingest::read_points;
use pcrecon_core::octree::{BuildConfig, Octree, MANIFEST_FILE};
use pcrecon_core::{Point3, Vec3};
use pcrecon_scanner::{run_accuracy_sweep, AccuracyReport, ScanConfig, ScanStream, SweepConfig};
use pcrecon_service::{Service, ServiceConfig};
use pcrecon_tools::script::{parse_script, run_step, Command};
use pcrecon_tools::session::ParamOverrides;
use pcrecon_tools::{export_json, export_obj, GrowReport, Session, ViewPose};

pub mod error;

pub use error::{CliError, Result};

/// Smallest per-cell budget the command line accepts.
pub const MIN_BUDGET: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "pcrecon", version, about = "Interactive point cloud reconstruction")]
pub struct Cli {
    /// More log output; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Build an out-of-core octree from a point file or a scan description.
    Build {
        /// XYZ or PLY points, or a `.json` scan configuration to simulate.
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8192)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grow segments from one seed point and write the report as JSON.
    Grow {
        octree: PathBuf,
        /// Seed point `X,Y,Z`.
        #[arg(long, value_parser = parse_vec3)]
        at: Vec3,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        params: GrowFlags,
    },
    /// Replay a session script and write the document and a step log.
    Replay {
        octree: PathBuf,
        script: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Random seed of grows that do not set one.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an accuracy sweep on simulated scans.
    Bench {
        /// Sweep configuration (JSON).
        sweep: PathBuf,
        /// Replaces the sweep's scan template (JSON).
        #[arg(long)]
        scan: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Serve octrees over WebSocket. Each is opened by its directory name.
    Serve {
        #[arg(required = true)]
        octrees: Vec<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value_t = 4)]
        progress_buffer: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

/// Overrides of the estimated growing parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct GrowFlags {
    /// Plane threshold (m).
    #[arg(long)]
    pub tp: Option<f64>,
    /// Target density (points per cubic metre).
    #[arg(long)]
    pub density: Option<f64>,
    /// Seed sphere radius (m).
    #[arg(long)]
    pub seed_radius: Option<f64>,
    /// Neighbor search radius (m).
    #[arg(long)]
    pub search_radius: Option<f64>,
    /// `on` keeps growing at the start level.
    #[arg(long)]
    pub level_lock: Option<Switch>,
    #[arg(long)]
    pub otsu: Option<Switch>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Viewer position `X,Y,Z` the parameters are estimated for; by default
    /// 2 m from the seed.
    #[arg(long, value_parser = parse_vec3)]
    pub eye: Option<Vec3>,
}

impl GrowFlags {
    pub fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            plane_threshold: self.tp,
            density: self.density,
            seed_radius: self.seed_radius,
            search_radius: self.search_radius,
            adaptive: self.level_lock.map(|s| !s.on()),
            otsu_prune: self.otsu.map(Switch::on),
            rng_seed: self.seed,
        }
    }

    pub fn view(&self, seed: Point3) -> Result<ViewPose> {
        let v = match self.eye {
            Some(eye) => ViewPose::look_at(eye, seed, Vec3::Z, 60f64.to_radians(), [1280, 720]),
            None => ViewPose::synthetic(seed),
        };
        v.map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected X,Y,Z, got {s:?}")),
    }
}

fn need(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} does not exist", path.display())))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Builds an octree under `outdir` and returns the manifest path. A `.json`
/// input is a scan configuration whose simulated points are streamed in.
pub fn cmd_build(input: &Path, outdir: &Path, budget: usize, seed: u64) -> Result<PathBuf> {
    need(input)?;
    if budget < MIN_BUDGET {
        return Err(CliError::Usage(format!("budget must be at least {MIN_BUDGET}")));
    }
    let cfg = BuildConfig {
        budget,
        seed,
        ..BuildConfig::default()
    };
    let is_scan = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let manifest = if is_scan {
        let scan: ScanConfig = read_json(input)?;
        let stream = ScanStream::new(scan)?;
        Octree::build_to_dir(stream.map(|s| s.point), outdir, cfg)?
    } else {
        let mut failed = None;
        let points = read_points(input)?.map_while(|r| r.map_err(|e| failed = Some(e)).ok());
        let built = Octree::build_to_dir(points, outdir, cfg);
        if let Some(e) = failed {
            return Err(e.into());
        }
        built?
    };
    log::info!(
        "built {} points into {} cells",
        manifest.point_count,
        manifest.cell_count
    );
    Ok(outdir.join(MANIFEST_FILE))
}

pub fn open_octree(dir: &Path) -> Result<Arc<Octree>> {
    need(dir)?;
    Ok(Arc::new(Octree::open_dir(dir)?))
}

/// One grow on a fresh session over `tree`.
pub fn grow_report(tree: Arc<Octree>, seed: Point3, flags: &GrowFlags) -> Result<GrowReport> {
    let mut session = Session::new(tree, flags.view(seed)?);
    Ok(session.grow_report(seed, &flags.overrides(), &CancelToken::new(), None)?)
}

/// Grows from `seed` and writes the report to `out`.
pub fn cmd_grow(octree: &Path, seed: Point3, flags: &GrowFlags, out: &Path) -> Result<GrowReport> {
    let report = grow_report(open_octree(octree)?, seed, flags)?;
    write_json(out, &report)?;
    Ok(report)
}

/// Files written by [`cmd_replay`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub document: PathBuf,
    pub obj: PathBuf,
    pub log: PathBuf,
}

/// Replays a script over `tree`, returning the session and its step log.
/// Grows without an explicit `rng=` use `seed` when given. The session
/// starts with the default view of the cloud's center.
pub fn replay(tree: Arc<Octree>, script: &str, seed: Option<u64>) -> Result<(Session, Vec<String>)> {
    let mut steps = parse_script(script)?;
    if let Some(seed) = seed {
        for s in &mut steps {
            if let Command::Grow { overrides, .. } = &mut s.command {
                overrides.rng_seed.get_or_insert(seed);
            }
        }
    }
    let view = ViewPose::synthetic(tree.root_bounds().center())?;
    let mut session = Session::new(tree, view);
    let mut log = Vec::with_capacity(steps.len());
    for s in &steps {
        let line = run_step(&mut session, s)?;
        log::info!("{line}");
        log.push(line);
    }
    Ok((session, log))
}

pub fn cmd_replay(octree: &Path, script: &Path, outdir: &Path, seed: Option<u64>) -> Result<ReplayOutput> {
    need(script)?;
    let tree = open_octree(octree)?;
    let text = fs::read_to_string(script).map_err(|e| CliError::io(script, e))?;
    let (session, log) = replay(tree, &text, seed)?;
    fs::create_dir_all(outdir).map_err(|e| CliError::io(outdir, e))?;
    let out = ReplayOutput {
        document: outdir.join("document.json"),
        obj: outdir.join("export.obj"),
        log: outdir.join("steps.log"),
    };
    let write = |p: &Path, s: String| fs::write(p, s).map_err(|e| CliError::io(p, e));
    write(&out.document, export_json(&session.document)?)?;
    write(&out.obj, export_obj(&session.document)?)?;
    write(&out.log, log.iter().map(|l| format!("{l}\n")).collect())?;
    Ok(out)
}

/// Runs the sweep and writes `runs.csv` and `summary.json` into `outdir`.
pub fn cmd_bench(
    sweep: &Path,
    scan: Option<&Path>,
    outdir: &Path,
    seed: Option<u64>,
    repetitions: Option<usize>,
) -> Result<AccuracyReport> {
    need(sweep)?;
    let mut cfg: SweepConfig = read_json(sweep)?;
    if let Some(p) = scan {
        need(p)?;
        cfg.scan = read_json(p)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = repetitions {
        cfg.repetitions = r;
    }
    let report = run_accuracy_sweep(&cfg)?;
    report.write(outdir)?;
    Ok(report)
}

/// Serves the octrees until the process ends.
pub fn cmd_serve(octrees: &[PathBuf], addr: &str, cfg: ServiceConfig) -> Result<()> {
    let mut svc = Service::new(cfg);
    for dir in octrees {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::Usage(format!("{} has no directory name", dir.display())))?;
        svc.add_cloud(name, open_octree(dir)?);
    }
    let handle = svc.spawn(addr)?;
    log::info!("listening on ws://{}", handle.local_addr());
    eprintln!("listening on ws://{}", handle.local_addr());
    handle.join();
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Build {
            input,
            out,
            budget,
            seed,
        } => {
            let m = cmd_build(&input, &out, budget, seed)?;
            println!("{}", m.display());
        }
        Cmd::Grow {
            octree,
            at,
            out,
            params,
        } => {
            let r = cmd_grow(&octree, at, &params, &out)?;
            println!(
                "{} segments, {} edges, {} corners",
                r.segments.len(),
                r.features.edges.len(),
                r.features.corners.len()
            );
        }
        Cmd::Replay {
            octree,
            script,
            out,
            seed,
        } => {
            let o = cmd_replay(&octree, &script, &out, seed)?;
            println!("{}", o.document.display());
        }
        Cmd::Bench {
            sweep,
            scan,
            out,
            seed,
            repetitions,
        } => {
            let r = cmd_bench(&sweep, scan.as_deref(), &out, seed, repetitions)?;
            for s in r.summary() {
                println!(
                    "{:?} {:?} noise={} rmse={} found={}/{}",
                    s.method,
                    s.detail,
                    s.noise,
                    fmt_opt(s.corner_rmse),
                    s.corners_found,
                    s.corners_found + s.corners_missed
                );
            }
        }
        Cmd::Serve {
            octrees,
            host,
            port,
            progress_buffer,
        } => {
            let cfg = ServiceConfig {
                progress_buffer,
                ..ServiceConfig::default()
            };
            cmd_serve(&octrees, &format!("{host}:{port}"), cfg)?;
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_USAGE } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pcrecon: {e}");
            e.exit_code()
        }
    }
}

//! Line-oriented session scripts for headless replay.
//!
//! ```text
//! # comments and blank lines are ignored
//! view eye=3,2,1.5 target=0,0,0 up=0,0,1 fov=60 size=1280x720
//! grow seed=point:0.05,0.05,0.05 tp=0.005 r=0.04
//! construct corner:0 corner:1 corner:2 corner:3
//! move id=1 from=corner:0 to=corner:1 along=edge:0
//! copy id=1 dir=0,0,1 dist=0.5
//! extrude id=1 dir=normal:0 length=0.3
//! extrude id=1 dir=find:edge:2@0.5/10,0 to=corner:4
//! undo
//! ```
//!
//! Snap references: `corner:I`, `edge:I@T`, `point:X,Y,Z`, `cursor:PX,PY`.
//! Directions: `X,Y,Z`, `normal:SEG`, `edge:I`, `find:SNAP/DX,DY`.

use std::collections::BTreeMap;

use pcrecon_core::grow::CancelToken;
use pcrecon_core::Vec3;

use crate::error::{Error, Result};
use crate::session::{DirRef, ParamOverrides, Session, SnapRef, StopRef, TranslateBy};
use crate::view::ViewPose;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    View(ViewPose),
    SnapRadius(f64),
    Grow { seed: SnapRef, overrides: ParamOverrides },
    Construct(Vec<SnapRef>),
    Translate { polygon: u32, by: TranslateBy, copy: bool },
    Extrude { polygon: u32, dir: DirRef, stop: StopRef },
    Undo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub line: usize,
    pub command: Command,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Script { line, msg: msg.into() }
}

fn floats(s: &str, n: usize) -> Option<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
    (v.len() == n && v.iter().all(|x| x.is_finite())).then_some(v)
}

fn vec3(s: &str) -> Option<Vec3> {
    floats(s, 3).map(|v| Vec3::new(v[0], v[1], v[2]))
}

pub fn parse_snap(s: &str) -> Option<SnapRef> {
    let (kind, rest) = s.split_once(':')?;
    match kind {
        "corner" => rest.parse().ok().map(SnapRef::Corner),
        "edge" => {
            let (i, t) = rest.split_once('@')?;
            Some(SnapRef::Edge(i.parse().ok()?, t.parse().ok()?))
        }
        "point" => vec3(rest).map(SnapRef::Point),
        "cursor" => floats(rest, 2).map(|v| SnapRef::Cursor([v[0], v[1]])),
        _ => None,
    }
}

pub fn parse_dir(s: &str) -> Option<DirRef> {
    if let Some(v) = vec3(s) {
        return Some(DirRef::Vector(v));
    }
    let (kind, rest) = s.split_once(':')?;
    match kind {
        "normal" => rest.parse().ok().map(DirRef::Normal),
        "edge" => rest.parse().ok().map(DirRef::Edge),
        "find" => {
            let (snap, g) = rest.rsplit_once('/')?;
            let g = floats(g, 2)?;
            Some(DirRef::Find(parse_snap(snap)?, [g[0], g[1]]))
        }
        _ => None,
    }
}

fn on_off(s: &str) -> Option<bool> {
    match s {
        "on" | "true" | "1" => Some(true),
        "off" | "false" | "0" => Some(false),
        _ => None,
    }
}

struct Args<'a> {
    line: usize,
    keyed: BTreeMap<&'a str, &'a str>,
    free: Vec<&'a str>,
}

impl<'a> Args<'a> {
    fn new(line: usize, words: impl Iterator<Item = &'a str>) -> Result<Self> {
        let mut keyed = BTreeMap::new();
        let mut free = Vec::new();
        for w in words {
            match w.split_once('=') {
                Some((k, v)) => {
                    if keyed.insert(k, v).is_some() {
                        return Err(err(line, format!("duplicate argument {k}")));
                    }
                }
                None => free.push(w),
            }
        }
        Ok(Self { line, keyed, free })
    }

    fn take(&mut self, k: &str) -> Option<&'a str> {
        self.keyed.remove(k)
    }

    fn parse<T>(&mut self, k: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>> {
        match self.take(k) {
            None => Ok(None),
            Some(v) => f(v).map(Some).ok_or_else(|| err(self.line, format!("bad value for {k}: {v}"))),
        }
    }

    fn need_parse<T>(&mut self, k: &str, f: impl Fn(&str) -> Option<T>) -> Result<T> {
        self.parse(k, f)?.ok_or_else(|| err(self.line, format!("missing {k}=")))
    }

    fn finish(self) -> Result<()> {
        if let Some(k) = self.keyed.keys().next() {
            return Err(err(self.line, format!("unknown argument {k}")));
        }
        if let Some(w) = self.free.first() {
            return Err(err(self.line, format!("unexpected {w}")));
        }
        Ok(())
    }
}

fn parse_line(line: usize, text: &str) -> Result<Option<Command>> {
    let text = text.trim();
    if text.is_empty() || text.starts_with('#') {
        return Ok(None);
    }
    let mut words = text.split_whitespace();
    let op = words.next().unwrap();
    let mut a = Args::new(line, words)?;
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
    let cmd = match op {
        "view" => {
            let eye = a.need_parse("eye", vec3)?;
            let up = a.parse("up", vec3)?.unwrap_or(Vec3::Z);
            let fov = a.parse("fov", num)?.unwrap_or(60.0).to_radians();
            let size = a
                .parse("size", |s| {
                    let (w, h) = s.split_once('x')?;
                    Some([w.parse().ok()?, h.parse().ok()?])
                })?
                .unwrap_or([1280, 720]);
            let forward = match (a.parse("target", vec3)?, a.parse("forward", vec3)?) {
                (Some(t), None) => t - eye,
                (None, Some(f)) => f,
                _ => return Err(err(line, "view needs exactly one of target= or forward=")),
            };
            Command::View(ViewPose::new(eye, forward, up, fov, size).map_err(|e| err(line, e.to_string()))?)
        }
        "snap" => Command::SnapRadius(a.need_parse("radius", num)?),
        "grow" => {
            let seed = a.need_parse("seed", parse_snap)?;
            let overrides = ParamOverrides {
                plane_threshold: a.parse("tp", num)?,
                density: a.parse("density", num)?,
                seed_radius: a.parse("rs", num)?,
                search_radius: a.parse("r", num)?,
                adaptive: a.parse("lock", on_off)?,
                otsu_prune: a.parse("otsu", on_off)?,
                rng_seed: a.parse("rng", |s| s.parse().ok())?,
            };
            Command::Grow { seed, overrides }
        }
        "construct" => {
            let v = std::mem::take(&mut a.free)
                .into_iter()
                .map(|w| parse_snap(w).ok_or_else(|| err(line, format!("bad snap reference {w}"))))
                .collect::<Result<Vec<_>>>()?;
            Command::Construct(v)
        }
        "move" | "copy" => {
            let polygon = a.need_parse("id", |s| s.parse().ok())?;
            let by = if a.keyed.contains_key("from") {
                TranslateBy::Snap {
                    from: a.need_parse("from", parse_snap)?,
                    to: a.need_parse("to", parse_snap)?,
                    along: a.parse("along", parse_dir)?,
                }
            } else {
                TranslateBy::Direction {
                    dir: a.need_parse("dir", parse_dir)?,
                    distance: a.need_parse("dist", num)?,
                }
            };
            Command::Translate {
                polygon,
                by,
                copy: op == "copy",
            }
        }
        "extrude" => {
            let polygon = a.need_parse("id", |s| s.parse().ok())?;
            let dir = a.need_parse("dir", parse_dir)?;
            let stop = match (a.parse("length", num)?, a.parse("to", parse_snap)?) {
                (Some(l), None) => StopRef::Length(l),
                (None, Some(s)) => StopRef::Target(s),
                _ => return Err(err(line, "extrude needs exactly one of length= or to=")),
            };
            Command::Extrude { polygon, dir, stop }
        }
        "undo" => Command::Undo,
        _ => return Err(err(line, format!("unknown command {op}"))),
    };
    a.finish()?;
    Ok(Some(cmd))
}

pub fn parse_script(text: &str) -> Result<Vec<Step>> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if let Some(command) = parse_line(i + 1, l)? {
            out.push(Step { line: i + 1, command });
        }
    }
    Ok(out)
}

/// Runs one step and describes its outcome in one log line.
pub fn run_step(session: &mut Session, step: &Step) -> Result<String> {
    let at = |e: Error| match e {
        Error::Script { .. } => e,
        other => err(step.line, other.to_string()),
    };
    let msg = match &step.command {
        Command::View(v) => {
            session.view = *v;
            "view".to_string()
        }
        Command::SnapRadius(r) => {
            session.snap_radius_px = *r;
            format!("snap radius {r}")
        }
        Command::Grow { seed, overrides } => {
            let p = session.resolve_snap(seed).map_err(at)?.position;
            let (params, res) = session.grow(p, overrides, &CancelToken::new(), None).map_err(at)?;
            let counts: Vec<String> = res.segments.iter().map(|s| s.inlier_count.to_string()).collect();
            format!(
                "grow r={:.6} tp={:.6} segments={} inliers=[{}] cells={} edges={} corners={}",
                params.search_radius,
                params.plane_threshold,
                res.segments.len(),
                counts.join(","),
                res.cells_processed,
                session.features.edges.len(),
                session.features.corners.len()
            )
        }
        Command::Construct(v) => {
            let d = session.construct(v).map_err(at)?;
            let p = &d.polygons[0];
            format!("construct polygon {} vertices={} area={:.6}", p.id, p.vertices.len(), p.area())
        }
        Command::Translate { polygon, by, copy } => {
            let d = session.translate(*polygon, by, *copy).map_err(at)?;
            let p = &d.polygons[0];
            let c = p.centroid();
            format!(
                "{} polygon {} -> {} centroid=({:.6},{:.6},{:.6})",
                if *copy { "copy" } else { "move" },
                polygon,
                p.id,
                c.x,
                c.y,
                c.z
            )
        }
        Command::Extrude { polygon, dir, stop } => {
            let d = session.extrude(*polygon, dir, stop).map_err(at)?;
            let pr = &d.prisms[0];
            format!("extrude polygon {} -> prism {} length={:.6}", polygon, pr.id, pr.length)
        }
        Command::Undo => {
            session.document.undo().map_err(at)?;
            "undo".to_string()
        }
    };
    Ok(format!("{}: {msg}", step.line))
}

/// Runs all steps, stopping at the first failure.
pub fn run_script(session: &mut Session, steps: &[Step]) -> Result<Vec<String>> {
    steps.iter().map(|s| run_step(session, s)).collect()
}

//! Repeated scan, reconstruct and compare runs over a list of noise levels.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pcrecon_core::grow::CancelToken;
use pcrecon_core::octree::{BuildConfig, Octree};
use pcrecon_core::{Point3, Vec3};
use pcrecon_tools::session::ParamOverrides;
use pcrecon_tools::{Session, ViewPose};

use crate::baseline::{ransac_baseline, BaselineConfig};
use crate::error::Result;
use crate::scan::{simulate_scan, GroundTruth, Scan, ScanConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ours,
    RansacBaseline,
}

/// Requested point spacing of the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detail {
    /// More than 2 cm between points.
    Low,
    /// 1 mm to 2 cm.
    Medium,
    /// Below 1 mm.
    High,
}

impl Detail {
    pub const ALL: [Detail; 3] = [Detail::Low, Detail::Medium, Detail::High];

    pub fn target_spacing(self) -> f64 {
        match self {
            Detail::Low => 0.03,
            Detail::Medium => 0.005,
            Detail::High => 0.0005,
        }
    }

    /// Density in points per cubic metre with the requested spacing.
    pub fn density(self) -> f64 {
        self.target_spacing().powi(-3)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Scan template; depth noise and seed are replaced per run.
    pub scan: ScanConfig,
    pub noise_levels: Vec<f64>,
    pub repetitions: usize,
    pub detail: Detail,
    /// Inlier threshold as a multiple of the depth noise.
    pub threshold_factor: f64,
    pub min_threshold: f64,
    /// Corners to reconstruct, by ground-truth index.
    pub corners: Vec<usize>,
    /// Offset of the scripted pick from the corner along the floor or
    /// ceiling diagonal.
    pub pick_offset: f64,
    /// Distance of the scripted view from the pick.
    pub view_distance: f64,
    pub octree_budget: usize,
    pub baseline: bool,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(scan: ScanConfig, noise_levels: Vec<f64>, repetitions: usize) -> Self {
        Self {
            scan,
            noise_levels,
            repetitions,
            detail: Detail::High,
            threshold_factor: 3.0,
            min_threshold: 1e-4,
            corners: (0..8).collect(),
            pick_offset: 0.15,
            view_distance: 2.0,
            octree_budget: 4096,
            baseline: true,
            seed: 0,
        }
    }

    pub fn threshold(&self, noise: f64) -> f64 {
        (self.threshold_factor * noise).max(self.min_threshold)
    }
}

/// One method on one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub detail: Detail,
    pub noise: f64,
    pub repetition: usize,
    /// RMS distance of inliers to their regression planes.
    pub inlier_rmse: f64,
    /// Per queried corner; `None` when it was not recovered.
    pub corner_errors: Vec<Option<f64>>,
}

impl RunRecord {
    pub fn found(&self) -> impl Iterator<Item = f64> + '_ {
        self.corner_errors.iter().flatten().copied()
    }

    pub fn corner_rmse(&self) -> Option<f64> {
        rms(self.found())
    }
}

fn rms(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (n > 0).then(|| (s / n as f64).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSummary {
    pub method: Method,
    pub detail: Detail,
    pub noise: f64,
    pub runs: usize,
    pub corners_found: usize,
    pub corners_missed: usize,
    /// Pooled over every recovered corner of every run.
    pub corner_rmse: Option<f64>,
    pub corner_mean: Option<f64>,
    pub corner_max: Option<f64>,
    pub inlier_rmse_mean: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub runs: Vec<RunRecord>,
}

#[derive(Serialize)]
struct CsvRow {
    method: Method,
    detail: Detail,
    noise: f64,
    repetition: usize,
    inlier_rmse: f64,
    corners_found: usize,
    corner_rmse: Option<f64>,
    corner_max: Option<f64>,
}

impl AccuracyReport {
    pub fn summary(&self) -> Vec<LevelSummary> {
        let mut groups: BTreeMap<(Method, Detail, u64), Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.runs {
            groups.entry((r.method, r.detail, r.noise.to_bits())).or_default().push(r);
        }
        let mut out: Vec<LevelSummary> = groups
            .into_values()
            .map(|rs| {
                let errs: Vec<f64> = rs.iter().flat_map(|r| r.found()).collect();
                let total: usize = rs.iter().map(|r| r.corner_errors.len()).sum();
                LevelSummary {
                    method: rs[0].method,
                    detail: rs[0].detail,
                    noise: rs[0].noise,
                    runs: rs.len(),
                    corners_found: errs.len(),
                    corners_missed: total - errs.len(),
                    corner_rmse: rms(errs.iter().copied()),
                    corner_mean: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
                    corner_max: errs.iter().copied().reduce(f64::max),
                    inlier_rmse_mean: rs.iter().map(|r| r.inlier_rmse).sum::<f64>() / rs.len() as f64,
                }
            })
            .collect();
        out.sort_by(|a, b| (a.method, a.detail).cmp(&(b.method, b.detail)).then(a.noise.total_cmp(&b.noise)));
        out
    }

    pub fn level(&self, method: Method, noise: f64) -> Option<LevelSummary> {
        self.summary().into_iter().find(|s| s.method == method && s.noise == noise)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.runs {
            w.serialize(CsvRow {
                method: r.method,
                detail: r.detail,
                noise: r.noise,
                repetition: r.repetition,
                inlier_rmse: r.inlier_rmse,
                corners_found: r.found().count(),
                corner_rmse: r.corner_rmse(),
                corner_max: r.found().reduce(f64::max),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `runs.csv` with one row per run and `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("runs.csv"), self.to_csv()?)?;
        let mut json = serde_json::to_string_pretty(&self.summary())?;
        json.push('\n');
        std::fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }
}

/// Seed of one run, mixed from the sweep seed and the run coordinates.
pub fn run_seed(seed: u64, level: usize, repetition: usize) -> u64 {
    let mut z = seed ^ ((level as u64) << 32) ^ repetition as u64;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The scripted pick for corner `i`: on the floor or ceiling, `offset`
/// along the diagonal into the room.
pub fn corner_pick(truth: &GroundTruth, i: usize, offset: f64) -> Point3 {
    let d = truth.inward(i);
    truth.corners[i] + Vec3::new(d.x, d.y, 0.0).normalize() * offset
}

/// The scripted view of a pick: `distance` away along the corner's
/// inward diagonal, looking back at the pick.
pub fn corner_view(truth: &GroundTruth, i: usize, pick: Point3, distance: f64) -> ViewPose {
    let eye = pick + truth.inward(i) * distance;
    ViewPose::look_at(eye, pick, Vec3::Z, 60f64.to_radians(), [1280, 720]).expect("diagonal view is valid")
}

/// Seed picks at the queried corners of one scan, grown and intersected.
pub fn reconstruct_corners(
    tree: &Arc<Octree>,
    truth: &GroundTruth,
    cfg: &SweepConfig,
    noise: f64,
    seed: u64,
) -> RunRecord {
    let overrides = ParamOverrides {
        plane_threshold: Some(cfg.threshold(noise)),
        density: Some(cfg.detail.density()),
        rng_seed: Some(seed),
        ..Default::default()
    };
    let (mut sq, mut n) = (0.0, 0u64);
    let corner_errors = cfg
        .corners
        .iter()
        .map(|&i| {
            let pick = corner_pick(truth, i, cfg.pick_offset);
            let mut session = Session::new(tree.clone(), corner_view(truth, i, pick, cfg.view_distance));
            session.grow(pick, &overrides, &CancelToken::new(), None).ok()?;
            for s in &session.segments {
                if let Ok(v) = s.regression.variance() {
                    sq += v * s.inlier_count as f64;
                    n += s.inlier_count;
                }
            }
            session
                .features
                .corners
                .iter()
                .map(|c| c.position.distance(truth.corners[i]))
                .reduce(f64::min)
        })
        .collect();
    RunRecord {
        method: Method::Ours,
        detail: cfg.detail,
        noise,
        repetition: 0,
        inlier_rmse: if n == 0 { 0.0 } else { (sq / n as f64).sqrt() },
        corner_errors,
    }
}

fn baseline_record(scan: &Scan, cfg: &SweepConfig, noise: f64, seed: u64) -> RunRecord {
    let mut bc = BaselineConfig::new(cfg.threshold(noise));
    bc.seed = seed;
    let queries: Vec<Point3> = cfg.corners.iter().map(|&i| scan.truth.corners[i]).collect();
    let (inlier_rmse, corner_errors) = match ransac_baseline(&scan.points, &queries, &bc) {
        Ok(res) => (
            res.inlier_rmse(&scan.points),
            res.corners
                .iter()
                .zip(&queries)
                .map(|(c, q)| c.map(|c| c.distance(*q)))
                .collect(),
        ),
        Err(_) => (0.0, vec![None; queries.len()]),
    };
    RunRecord {
        method: Method::RansacBaseline,
        detail: cfg.detail,
        noise,
        repetition: 0,
        inlier_rmse,
        corner_errors,
    }
}

/// Runs every (noise level, repetition) pair in parallel. Records come back
/// in level, repetition, method order regardless of scheduling.
pub fn run_accuracy_sweep(cfg: &SweepConfig) -> Result<AccuracyReport> {
    cfg.scan.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.noise_levels.len())
        .flat_map(|l| (0..cfg.repetitions).map(move |r| (l, r)))
        .collect();
    let runs: Vec<Vec<RunRecord>> = jobs
        .par_iter()
        .map(|&(l, rep)| -> Result<Vec<RunRecord>> {
            let noise = cfg.noise_levels[l];
            let seed = run_seed(cfg.seed, l, rep);
            let scan = simulate_scan(&ScanConfig {
                sigma_depth: noise,
                seed,
                ..cfg.scan
            })?;
            let tree = Octree::build_in_memory(
                scan.points.iter().copied(),
                BuildConfig {
                    seed,
                    ..BuildConfig::with_budget(cfg.octree_budget)
                },
            )?;
            let mut out = vec![reconstruct_corners(&Arc::new(tree), &scan.truth, cfg, noise, seed)];
            if cfg.baseline {
                out.push(baseline_record(&scan, cfg, noise, seed));
            }
            for r in &mut out {
                r.repetition = rep;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(AccuracyReport {
        runs: runs.into_iter().flatten().collect(),
    })
}

//! Acceptance criteria A1-A9, one line each. Exits non-zero when a criterion
//! outside `KNOWN_RED` fails. Pass a criterion id (`A3`) to run only that one.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use tungstenite::Message;

use pcrecon_cli::{cmd_build, cmd_grow, cmd_replay, open_octree, GrowFlags};
use pcrecon_core::grow::{grow, CancelToken, GrowParams, GrowProgress, GrowState};
use pcrecon_core::octree::{BuildConfig, Octree};
use pcrecon_core::{IncrementalPlaneRegression, SymMat3, Vec3};
use pcrecon_scanner::sweep::{corner_pick, corner_view};
use pcrecon_scanner::{
    run_accuracy_sweep, simulate_scan, Detail, GroundTruth, Method, ScanConfig, ScanWindow, SweepConfig,
};
use pcrecon_service::{ClientFrame, Request, Response, ServerFrame, Service, ServiceConfig};
use pcrecon_tools::session::ParamOverrides;
use pcrecon_tools::{GrowReport, Session, SnapKind, SnapResult, ViewPose};

/// Criteria that do not hold on this implementation; see the project notes.
const KNOWN_RED: &[&str] = &["A3", "A4"];

/// Repetitions per noise level in A3.
const A3_REPETITIONS: usize = 10;
const A3_NOISE: [f64; 5] = [0.001, 0.002, 0.005, 0.01, 0.02];
const A4_NOISE: f64 = 0.0015;
const A7_CACHE_BUDGET: usize = 64 << 20;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn mm(v: f64) -> String {
    format!("{:.3}mm", v * 1e3)
}

fn max_abs(v: Vec3) -> f64 {
    v.x.abs().max(v.y.abs()).max(v.z.abs())
}

fn two_pass(pts: &[Vec3]) -> SymMat3 {
    let n = pts.len() as f64;
    let mean = pts.iter().fold(Vec3::ZERO, |a, p| a + *p) / n;
    let mut m = [[0.0f64; 3]; 3];
    for p in pts {
        let d = (*p - mean).to_array();
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += d[i] * d[j];
            }
        }
    }
    m.iter_mut().flatten().for_each(|v| *v /= n - 1.0);
    SymMat3::from_rows(m)
}

fn a1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let spread = [Normal::new(0.0, 5.0).unwrap(), Normal::new(0.0, 2.0).unwrap(), Normal::new(0.0, 0.01).unwrap()];
    let mut worst = 0.0f64;
    let mut per_point = Vec::new();
    for n in [10_000usize, 100_000, 1_000_000] {
        let mut coord = || {
            let v: f64 = rng.gen_range(5e5..1e6);
            if rng.gen::<bool>() { v } else { -v }
        };
        let offset = Vec3::new(coord(), coord(), coord());
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                offset
                    + Vec3::new(spread[0].sample(&mut rng), spread[1].sample(&mut rng), spread[2].sample(&mut rng))
            })
            .collect();
        let t = Instant::now();
        let mut r = IncrementalPlaneRegression::new(pts[0]).unwrap();
        for (i, p) in pts[1..].iter().enumerate() {
            r.update(*p).unwrap();
            if i == n / 2 {
                r = r.recentered();
            }
        }
        let cov = r.recentered().covariance().unwrap();
        per_point.push(t.elapsed().as_secs_f64() / n as f64);
        // exact: both terms are within a factor two of each other
        let local: Vec<Vec3> = pts.iter().map(|p| *p - offset).collect();
        let oracle = two_pass(&local);
        worst = worst.max(cov.sub(&oracle).frobenius_norm() / oracle.frobenius_norm());
    }
    let scaling = per_point[2] / per_point[1];
    check(
        worst < 1e-9 && scaling < 3.0,
        format!(
            "max relative Frobenius error {worst:.2e} (< 1e-9); per-point time 1e6 vs 1e5 x{scaling:.2} (< 3, linear)"
        ),
    )
}

fn a2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.gen_range(3..200);
        let mut v = |s: f64| Vec3::new(rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s));
        let center = v(1e3);
        let pts: Vec<Vec3> = (0..n).map(|_| center + v(10.0)).collect();
        let target = center + if case % 2 == 0 { v(10.0) } else { v(1e3) };
        let rb = IncrementalPlaneRegression::from_points(&pts).unwrap().rebased(target);

        // rebuilt from scratch; cross sums are ordered (yz, xz, xy)
        let (mut s, mut sq, mut d) = (Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
        for p in &pts {
            let q = *p - target;
            s += q;
            sq += q.mul_elem(q);
            d += Vec3::new(q.y * q.z, q.x * q.z, q.x * q.y);
        }
        assert_eq!(rb.count, n as u64);
        assert_eq!(rb.reference, target);
        for (a, b) in [(rb.sum, s), (rb.sum_sq, sq), (rb.cross, d)] {
            worst = worst.max(max_abs(a - b) / max_abs(b).max(1.0));
        }
    }
    check(
        worst < 1e-12,
        format!("1000 cases, max entrywise error relative to sum scale {worst:.2e} (< 1e-12)"),
    )
}

fn a3() -> Check {
    let cfg = SweepConfig::new(ScanConfig::paper_room(0.0, 0), A3_NOISE.to_vec(), A3_REPETITIONS);
    let t = Instant::now();
    let report = run_accuracy_sweep(&cfg).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for noise in A3_NOISE {
        let ours = report.level(Method::Ours, noise).unwrap();
        let base = report.level(Method::RansacBaseline, noise).unwrap();
        let (o, b) = (ours.corner_rmse.unwrap_or(f64::INFINITY), base.corner_rmse.unwrap_or(f64::INFINITY));
        let ok = o <= noise && o <= 2.0 * b;
        pass &= ok;
        parts.push(format!(
            "s={} ours {} base {} x{:.2} found {}/{}{}",
            mm(noise),
            mm(o),
            mm(b),
            o / b,
            ours.corners_found,
            ours.corners_found + ours.corners_missed,
            if ok { "" } else { " !" }
        ));
    }
    check(
        pass,
        format!(
            "{} reps/level in {:.0}s, need ours <= s and <= 2x baseline: {}",
            A3_REPETITIONS,
            t.elapsed().as_secs_f64(),
            parts.join("; ")
        ),
    )
}

fn a4() -> Check {
    let room = ScanConfig::paper_room(A4_NOISE, 0);
    let truth = room.truth();
    let scan = ScanConfig {
        angular_step: 0.0005,
        window: ScanWindow::around(truth.corners[0] - room.scanner, 0.15),
        ..room
    };
    let mut rmse = Vec::new();
    for detail in Detail::ALL {
        let mut cfg = SweepConfig::new(scan, vec![A4_NOISE], 3);
        cfg.detail = detail;
        cfg.corners = vec![0];
        cfg.baseline = false;
        let r = run_accuracy_sweep(&cfg).unwrap();
        rmse.push(r.level(Method::Ours, A4_NOISE).and_then(|l| l.corner_rmse).unwrap_or(f64::INFINITY));
    }
    let (low, med, high) = (rmse[0], rmse[1], rmse[2]);
    let ok_low = (0.75e-3..=4.5e-3).contains(&low);
    let ok_med = (0.5 * A4_NOISE..=2.0 * A4_NOISE).contains(&med);
    let ok_high = high <= A4_NOISE;
    check(
        ok_low && ok_med && ok_high,
        format!(
            "noise {}: low {} in [0.750, 4.500] {}; medium {} in [{}, {}] {}; high {} <= noise {}; monotone {}",
            mm(A4_NOISE),
            mm(low),
            ok_low,
            mm(med),
            mm(0.5 * A4_NOISE),
            mm(2.0 * A4_NOISE),
            ok_med,
            mm(high),
            ok_high,
            low > med && med > high
        ),
    )
}

/// Unit plane halves at `rho` and `16 rho` points per square metre, with one
/// stray point so the root cube spans two metres.
fn two_density_plane(rho: f64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pts = vec![Vec3::ZERO, Vec3::new(0.0, 0.0, 2.0)];
    for _ in 0..rho as usize {
        pts.push(Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), 0.0));
    }
    for _ in 0..(16.0 * rho) as usize {
        pts.push(Vec3::new(1.0 + rng.gen::<f64>(), rng.gen::<f64>(), 0.0));
    }
    pts
}

fn a5() -> Check {
    let rho = 4096.0;
    let cfg = BuildConfig {
        max_level: 4,
        ..BuildConfig::with_budget(128)
    };
    let tree = Octree::build_in_memory(two_density_plane(rho), cfg).unwrap();
    let s = 0.5 / rho.sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, x) in [("sparse->dense", 0.5), ("dense->sparse", 1.5)] {
        let mut p = GrowParams::new(Vec3::new(x, 0.5, 0.0), s.powi(-3), 4.0 * s, 0.002);
        p.seed_radius = 0.1;
        let res = grow(GrowState::new(&tree, p).unwrap(), &CancelToken::new(), None).unwrap();
        let tr = &res.trace;
        let transitions = tr.coarsenings() + tr.refinements();
        let (mut n, mut inside) = (0, 0);
        for (_, _, ratio) in tr.processed() {
            n += 1;
            inside += usize::from((0.5..=4.0).contains(&ratio));
        }
        let frac = inside as f64 / n as f64;
        let ok = transitions == 1 && tr.is_disjoint() && frac >= 0.95;
        pass &= ok;
        parts.push(format!(
            "{name}: transitions {transitions} (1), disjoint {}, in band {inside}/{n} = {:.1}% (>= 95%)",
            tr.is_disjoint(),
            100.0 * frac
        ));
    }
    check(pass, parts.join("; "))
}

/// Every face of the box on a regular grid, with isotropic noise.
fn grid_room(room: [f64; 3], step: f64, sigma: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut out = Vec::new();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let (nb, nc) = ((room[b] / step).round() as usize, (room[c] / step).round() as usize);
        for side in [0.0, room[a]] {
            for i in 0..=nb {
                for j in 0..=nc {
                    let mut p = [0.0; 3];
                    p[a] = side;
                    p[b] = i as f64 * step;
                    p[c] = j as f64 * step;
                    let mut v = Vec3::from_array(p);
                    if sigma > 0.0 {
                        v += Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    }
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Corner errors (matched to distinct true corners), and per true edge the
/// direction error and support length error of the found edge on it.
fn room_features(sigma: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
    let room = [7.0, 5.0, 2.5];
    let truth = GroundTruth::new(room);
    let tree = Arc::new(Octree::build_in_memory(grid_room(room, 0.02, sigma, 11), BuildConfig::default()).unwrap());
    let mut s = Session::new(tree, ViewPose::synthetic(Vec3::ZERO).unwrap());
    let o = ParamOverrides {
        plane_threshold: Some((3.0 * sigma).max(1e-4)),
        density: Some(1e7),
        seed_radius: Some(0.3),
        search_radius: Some(0.05),
        ..Default::default()
    };
    for f in 0..6 {
        let mut c = (Vec3::from_array(room) * 0.5).to_array();
        c[f / 2] = if f % 2 == 0 { 0.0 } else { room[f / 2] };
        let c = Vec3::from_array(c);
        s.view = ViewPose::synthetic(c).unwrap();
        s.grow(c, &o, &CancelToken::new(), None).unwrap();
    }
    let fs = &s.features;
    let mut used = [false; 8];
    let mut corners = Vec::new();
    for c in &fs.corners {
        let (i, d) = truth
            .corners
            .iter()
            .map(|t| t.distance(c.position))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if !used[i] {
            used[i] = true;
            corners.push(d);
        }
    }
    let mut edges = Vec::new();
    for t in &truth.edges {
        let mid = (t.start + t.end) * 0.5;
        let found = fs
            .edges
            .iter()
            .filter(|e| e.line.distance(mid) < 0.05 && e.line.direction.dot(t.line.direction).abs() > 0.99)
            .min_by(|a, b| a.line.distance(mid).total_cmp(&b.line.distance(mid)));
        if let Some(e) = found {
            let ang = e.line.direction.dot(t.line.direction).abs().min(1.0).acos();
            edges.push((ang, (e.length() - t.length()).abs()));
        }
    }
    (corners, edges)
}

fn a6() -> Check {
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (c0, e0) = room_features(0.0);
    let (c1, e1) = room_features(0.001);
    let ang0 = worst(&e0.iter().map(|e| e.0).collect::<Vec<_>>());
    let len1 = worst(&e1.iter().map(|e| e.1).collect::<Vec<_>>());
    let ok0 = c0.len() == 8 && e0.len() == 12 && worst(&c0) <= 1e-6 && ang0 <= 1e-6;
    let ok1 = c1.len() == 8 && e1.len() == 12 && worst(&c1) <= 2e-3 && len1 <= 0.02;
    check(
        ok0 && ok1,
        format!(
            "noiseless: {}/8 corners max {:.1e}m (1e-6), {}/12 edges max {:.1e}rad (1e-6); \
             1mm: {}/8 corners max {} (2mm), {}/12 edges support length max {} (20mm)",
            c0.len(),
            worst(&c0),
            e0.len(),
            ang0,
            c1.len(),
            mm(worst(&c1)),
            e1.len(),
            mm(len1)
        ),
    )
}

/// Tiles of one square metre at 1 cm spacing, `side` by `side` of them, on
/// four heights 5 cm apart so that no two touching tiles are coplanar.
fn tiles(side: usize) -> impl Iterator<Item = Vec3> {
    (0..side * side).flat_map(move |t| {
        let (ti, tj) = (t / side, t % side);
        let z = 0.05 * (ti % 2 + 2 * (tj % 2)) as f64;
        (0..10_000).map(move |k| Vec3::new(ti as f64 + (k / 100) as f64 * 0.01, tj as f64 + (k % 100) as f64 * 0.01, z))
    })
}

struct TileRun {
    points: u64,
    cells: usize,
    touched: usize,
    peak: usize,
    area: f64,
    build_s: f64,
}

fn tile_run(side: usize) -> TileRun {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let m = Octree::build_to_dir(tiles(side), dir.path(), BuildConfig::default()).unwrap();
    let build_s = t.elapsed().as_secs_f64();
    let tree = Octree::open_dir(dir.path()).unwrap();
    let mid = (side / 2) as f64 + 0.5;
    let mut p = GrowParams::new(Vec3::new(mid, mid, 0.0), 1e6, 0.03, 0.005);
    p.seed_radius = 0.2;
    let res = grow(GrowState::new(&tree, p).unwrap(), &CancelToken::new(), None).unwrap();
    let io = tree.io_stats();
    TileRun {
        points: m.point_count,
        cells: tree.cell_count(),
        touched: io.touched,
        peak: io.peak_cached_bytes,
        area: res.segments.iter().map(|s| s.polygon.area).sum(),
        build_s,
    }
}

fn a7() -> Check {
    let small = tile_run(10);
    let big = tile_run(100);
    let frac = big.touched as f64 / big.cells as f64;
    let mib = |b: usize| b as f64 / (1 << 20) as f64;
    let ok = frac < 0.01
        && big.peak < A7_CACHE_BUDGET
        && small.peak < A7_CACHE_BUDGET
        && big.peak as f64 <= 1.25 * small.peak as f64
        && (big.area - 1.0).abs() < 0.1;
    check(
        ok,
        format!(
            "{:.0e} pts ({} cells, built in {:.0}s): touched {} = {:.3}% (< 1%), grown area {:.3} m2, peak cache {:.1} MiB; \
             {:.0e} pts: touched {}/{}, peak cache {:.1} MiB; budget {} MiB",
            big.points as f64,
            big.cells,
            big.build_s,
            big.touched,
            100.0 * frac,
            big.area,
            mib(big.peak),
            small.points as f64,
            small.touched,
            small.cells,
            mib(small.peak),
            A7_CACHE_BUDGET >> 20
        ),
    )
}

fn two_plane_flags() -> GrowFlags {
    GrowFlags {
        tp: Some(0.005),
        density: Some(1e6),
        seed_radius: Some(0.1),
        ..Default::default()
    }
}

fn service_grow(tree: Arc<Octree>, seed: Vec3, overrides: ParamOverrides) -> GrowReport {
    let mut svc = Service::new(ServiceConfig::default());
    svc.add_cloud("cloud", tree);
    let h = svc.spawn("127.0.0.1:0").unwrap();
    let (mut ws, _) = tungstenite::connect(format!("ws://{}", h.local_addr())).unwrap();
    let mut send = |body| {
        let f = ClientFrame::new(None, body);
        ws.send(Message::text(serde_json::to_string(&f).unwrap())).unwrap();
    };
    send(Request::Open { cloud: "cloud".into() });
    send(Request::View {
        pose: ViewPose::synthetic(seed).unwrap(),
    });
    let snap = SnapResult {
        kind: SnapKind::RawPoint,
        position: seed,
        feature: None,
        screen_distance: 0.0,
    };
    send(Request::Grow { seed: snap, overrides });
    let report = loop {
        let Message::Text(t) = ws.read().unwrap() else { continue };
        let f: ServerFrame = serde_json::from_str(t.as_str()).unwrap();
        match f.body {
            Response::GrowDone { report, .. } => break report,
            Response::GrowFailed { message, .. } | Response::Error { message, .. } => panic!("{message}"),
            _ => {}
        }
    };
    ws.close(None).unwrap();
    h.shutdown();
    report
}

fn a8() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let room = tmp.path().join("room");
    cmd_build(&fixture("room_scan.json"), &room, 4096, 0).unwrap();
    let out = cmd_replay(&room, &fixture("room.script"), &tmp.path().join("out"), Some(0)).unwrap();
    let same = |a: &Path, golden: &str| fs::read(a).unwrap() == fs::read(fixture("golden").join(golden)).unwrap();
    let doc_ok = same(&out.document, "room_document.json");
    let obj_ok = same(&out.obj, "room_export.obj");

    let plates = tmp.path().join("two_plane");
    cmd_build(&fixture("two_plane.xyz"), &plates, 256, 0).unwrap();
    let seed = Vec3::new(0.04, 0.5, 0.04);
    let flags = two_plane_flags();
    let path = tmp.path().join("report.json");
    cmd_grow(&plates, seed, &flags, &path).unwrap();
    let cli: GrowReport = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let remote = service_grow(open_octree(&plates).unwrap(), seed, flags.overrides());
    let svc_ok = remote == cli;
    check(
        doc_ok && obj_ok && svc_ok,
        format!(
            "replay document.json identical {doc_ok}, export.obj identical {obj_ok}; \
             service report equals CLI report {svc_ok} ({} segments, {} edges)",
            cli.segments.len(),
            cli.features.edges.len()
        ),
    )
}

/// Largest difference between two JSON trees of the same shape, relative
/// to magnitude for numbers above one; `None` when the shapes differ.
fn json_diff(a: &Value, b: &Value) -> Option<f64> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64()?, y.as_f64()?);
            Some((x - y).abs() / x.abs().max(1.0))
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).try_fold(0.0f64, |m, (p, q)| Some(m.max(json_diff(p, q)?)))
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x
            .iter()
            .try_fold(0.0f64, |m, (k, p)| Some(m.max(json_diff(p, y.get(k)?)?))),
        _ => (a == b).then_some(0.0),
    }
}

fn a9() -> Check {
    let scan = simulate_scan(&ScanConfig::paper_room(0.001, 3)).unwrap();
    let tree = Arc::new(Octree::build_in_memory(scan.points, BuildConfig::with_budget(4096)).unwrap());
    let pick = corner_pick(&scan.truth, 0, 0.15);
    let session = Session::new(tree.clone(), corner_view(&scan.truth, 0, pick, 2.0));
    let o = ParamOverrides {
        plane_threshold: Some(0.003),
        density: Some(Detail::High.density()),
        ..Default::default()
    };
    let p = session.grow_params(pick, &o).unwrap();
    let quiet = grow(GrowState::new(&tree, p).unwrap(), &CancelToken::new(), None).unwrap();
    let mut calls = 0;
    let mut cb = |_: &GrowProgress| calls += 1;
    let loud = grow(GrowState::new(&tree, p).unwrap(), &CancelToken::new(), Some(&mut cb)).unwrap();
    let a = serde_json::json!({"segments": quiet.segments, "trace": quiet.trace, "cells": quiet.cells_processed});
    let b = serde_json::json!({"segments": loud.segments, "trace": loud.trace, "cells": loud.cells_processed});
    let diff = json_diff(&a, &b);
    let ok = diff.is_some_and(|d| d <= 1e-12) && calls == loud.cells_processed && calls > 1;
    check(
        ok,
        format!(
            "{} segments over {} cells; callback on every cell ({calls} calls) vs none: max field difference {} (<= 1e-12)",
            quiet.segments.len(),
            quiet.cells_processed,
            diff.map_or("shape mismatch".into(), |d| format!("{d:.1e}"))
        ),
    )
}

fn main() {
    let only: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(&str, &str, fn() -> Check); 9] = [
        ("A1", "incremental/batch equivalence", a1),
        ("A2", "rebase correctness", a2),
        ("A3", "desk-scale corner accuracy", a3),
        ("A4", "detail sweep shape", a4),
        ("A5", "adaptive resolution", a5),
        ("A6", "feature geometry", a6),
        ("A7", "out-of-core locality", a7),
        ("A8", "determinism and replay", a8),
        ("A9", "callback independence", a9),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        if only.as_deref().is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let c = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("panicked: {msg}"))
        });
        let known = KNOWN_RED.contains(&id);
        let tag = match (c.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{id} {tag} {name} [{:.1}s]: {}", t.elapsed().as_secs_f64(), c.detail);
        if !c.pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}

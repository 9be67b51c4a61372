use pcrecon_core::{Plane, Point3, Vec3};
use pcrecon_scanner::scan::{angles, cast};
use pcrecon_scanner::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noiseless(step: f64) -> ScanConfig {
    ScanConfig {
        angular_step: step,
        sigma_angle: 0.0,
        ..ScanConfig::paper_room(0.0, 3)
    }
}

#[test]
fn truth_has_closed_box_topology() {
    let t = GroundTruth::new([7.0, 5.0, 2.5]);
    assert_eq!(t.corners.len(), 8);
    assert_eq!(t.edges.len(), 12);
    let total: f64 = t.edges.iter().map(|e| e.length()).sum();
    assert!((total - 4.0 * 14.5).abs() < 1e-12);
    for e in &t.edges {
        for f in e.faces {
            assert!(t.faces[f].distance(e.start) < 1e-12);
            assert!(t.faces[f].distance(e.end) < 1e-12);
        }
        assert!(e.line.distance(e.end) < 1e-12);
    }
    for i in 0..8 {
        for f in GroundTruth::corner_faces(i) {
            assert!(t.faces[f].distance(t.corners[i]) < 1e-12);
        }
        let inside = t.corners[i] + t.inward(i) * 0.1;
        assert!((0..3).all(|a| inside[a] > 0.0 && inside[a] < t.room[a]));
    }
}

#[test]
fn cast_hits_the_first_wall() {
    let (t, f) = cast([7.0, 5.0, 2.5], Vec3::new(3.5, 2.5, 1.25), Vec3::X).unwrap();
    assert!((t - 3.5).abs() < 1e-12);
    assert_eq!(f, 1);
    let (_, f) = cast([7.0, 5.0, 2.5], Vec3::new(3.5, 2.5, 1.25), Vec3::new(0.1, 0.0, -1.0).normalize()).unwrap();
    assert_eq!(f, 4);
}

#[test]
fn window_is_centered_on_its_direction() {
    let d = Vec3::new(-1.0, 2.0, 0.5);
    let w = ScanWindow::around(d, 0.1);
    let (az, el) = angles(d);
    assert!(((w.azimuth[0] + w.azimuth[1]) / 2.0 - az).abs() < 1e-12);
    assert!(((w.elevation[0] + w.elevation[1]) / 2.0 - el).abs() < 1e-12);
}

#[test]
fn paper_room_is_desk_scale() {
    let scan = simulate_scan(&ScanConfig::paper_room(0.001, 1)).unwrap();
    assert!((100_000..=1_000_000).contains(&scan.points.len()));
    assert_eq!(scan.points.len(), scan.faces.len());
}

#[test]
fn noiseless_points_lie_on_their_faces() {
    let scan = simulate_scan(&noiseless(0.01)).unwrap();
    for (p, &f) in scan.points.iter().zip(&scan.faces) {
        assert!(scan.truth.faces[f as usize].distance(*p) < 1e-9);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let ok = ScanConfig::paper_room(0.0, 0);
    let bad = [
        ScanConfig { room: [0.0, 5.0, 2.5], ..ok },
        ScanConfig { scanner: Vec3::new(8.0, 1.0, 1.0), ..ok },
        ScanConfig { angular_step: 0.0, ..ok },
        ScanConfig { sigma_depth: -1.0, ..ok },
    ];
    for c in bad {
        assert!(matches!(simulate_scan(&c), Err(Error::Config(_))));
    }
}

/// Expected points per square metre on a face for a regular angular grid.
fn grid_density(cfg: &ScanConfig, p: Point3, normal: Vec3) -> f64 {
    let v = p - cfg.scanner;
    let r = v.norm();
    let (_, el) = angles(v);
    (v / r).dot(normal).abs() / (cfg.angular_step.powi(2) * r * r * el.cos())
}

fn count_within(points: &[Point3], plane: &Plane, c: Point3, radius: f64) -> usize {
    points
        .iter()
        .filter(|p| plane.distance(**p) < 1e-6 && p.distance(c) <= radius)
        .count()
}

#[test]
fn density_is_anisotropic_as_the_grid_predicts() {
    let cfg = noiseless(ScanConfig::paper_room(0.0, 0).angular_step);
    let scan = simulate_scan(&cfg).unwrap();
    let t = &scan.truth;
    let near = (Vec3::new(2.6, 0.0, 1.45), 2usize, 0.1);
    let far = (Vec3::new(6.5, 4.5, 0.0), 4usize, 0.5);
    let mut measured = [0.0; 2];
    for (k, (c, f, radius)) in [near, far].into_iter().enumerate() {
        let n = count_within(&scan.points, &t.faces[f], c, radius) as f64;
        measured[k] = n / (std::f64::consts::PI * radius * radius);
        let expected = grid_density(&cfg, c, t.faces[f].normal);
        assert!((measured[k] / expected - 1.0).abs() < 0.2, "{k}: {} vs {expected}", measured[k]);
    }
    assert!(measured[0] / measured[1] >= 10.0);
}

#[test]
fn depth_noise_shows_up_scaled_by_incidence() {
    let sigma = 0.001;
    let cfg = ScanConfig {
        sigma_depth: sigma,
        ..noiseless(0.01)
    };
    let scan = simulate_scan(&cfg).unwrap();
    let (mut res, mut cos2) = (0.0, 0.0);
    for (p, &f) in scan.points.iter().zip(&scan.faces) {
        let face = &scan.truth.faces[f as usize];
        res += face.signed_distance(*p).powi(2);
        cos2 += (*p - cfg.scanner).normalize().dot(face.normal).powi(2);
    }
    let n = scan.points.len() as f64;
    let (rms, expected) = ((res / n).sqrt(), sigma * (cos2 / n).sqrt());
    assert!((rms / expected - 1.0).abs() < 0.03, "{rms} vs {expected}");
}

#[test]
fn scans_are_deterministic_per_seed() {
    let cfg = ScanConfig {
        angular_step: 0.02,
        ..ScanConfig::paper_room(0.005, 9)
    };
    let a = simulate_scan(&cfg).unwrap();
    let b = simulate_scan(&cfg).unwrap();
    assert_eq!(a.points, b.points);
    let c = simulate_scan(&ScanConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.points, c.points);
    let streamed: Vec<Point3> = ScanStream::new(cfg).unwrap().map(|s| s.point).collect();
    assert_eq!(streamed, a.points);
}

#[test]
fn baseline_recovers_the_noiseless_box() {
    let scan = simulate_scan(&noiseless(0.005)).unwrap();
    let res = ransac_baseline(&scan.points, &scan.truth.corners, &BaselineConfig::new(1e-4)).unwrap();
    assert_eq!(res.planes.len(), 6);
    for p in &res.planes {
        let n = p.plane.normal;
        let axis_aligned = [n.x, n.y, n.z].iter().any(|c| (c.abs() - 1.0).abs() < 1e-6);
        assert!(axis_aligned, "{n:?}");
    }
    for (c, t) in res.corners.iter().zip(&scan.truth.corners) {
        assert!(c.unwrap().distance(*t) < 1e-6);
    }
    let rmse = res.inlier_rmse(&scan.points);
    assert!(rmse < 1e-5, "{rmse}");
}

#[test]
fn baseline_plane_survives_half_outliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let normal = Vec3::new(0.3, -0.2, 1.0).normalize();
    let truth = Plane::from_normal(Vec3::new(0.5, 0.5, 0.5), normal);
    let mut pts = Vec::new();
    for _ in 0..2000 {
        let (u, v) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let e = rng.gen_range(-0.001..0.001);
        pts.push(truth.origin + truth.tangent * u + truth.bitangent * v + normal * e);
        pts.push(Vec3::new(rng.gen(), rng.gen(), rng.gen()));
    }
    let mut cfg = BaselineConfig::new(0.003);
    cfg.ransac.max_planes = 1;
    let res = ransac_baseline(&pts, &[], &cfg).unwrap();
    let angle = res.planes[0].plane.normal.dot(normal).abs().min(1.0).acos();
    assert!(angle.to_degrees() <= 1.0, "{}", angle.to_degrees());
}

#[test]
fn baseline_needs_a_plane() {
    let pts = vec![Vec3::ZERO, Vec3::X];
    assert!(matches!(
        ransac_baseline(&pts, &[], &BaselineConfig::new(0.01)),
        Err(Error::NoPlaneFound)
    ));
}

#[test]
fn noiseless_corners_hit_the_numerical_floor() {
    let mut cfg = SweepConfig::new(ScanConfig::paper_room(0.0, 0), vec![0.0], 1);
    cfg.scan.sigma_angle = 0.0;
    let report = run_accuracy_sweep(&cfg).unwrap();
    for m in [Method::Ours, Method::RansacBaseline] {
        let s = report.level(m, 0.0).unwrap();
        assert!(s.corners_found >= 6, "{m:?} found {}", s.corners_found);
        assert!(s.corner_max.unwrap() <= 1e-6, "{m:?} {:?}", s.corner_max);
    }
}

#[test]
fn error_grows_with_noise() {
    let mut cfg = SweepConfig::new(ScanConfig::paper_room(0.0, 0), vec![0.001, 0.01], 1);
    cfg.corners = vec![0, 1, 5];
    cfg.baseline = false;
    let report = run_accuracy_sweep(&cfg).unwrap();
    let lo = report.level(Method::Ours, 0.001).unwrap().corner_rmse.unwrap();
    let hi = report.level(Method::Ours, 0.01).unwrap().corner_rmse.unwrap();
    assert!(lo < hi, "{lo} vs {hi}");
    assert!(hi <= 0.01);
    let again = run_accuracy_sweep(&cfg).unwrap();
    assert_eq!(report.to_csv().unwrap(), again.to_csv().unwrap());
}

#[test]
fn report_pools_corners_and_writes_files() {
    let rec = |method, noise, errs: Vec<Option<f64>>| RunRecord {
        method,
        detail: Detail::High,
        noise,
        repetition: 0,
        inlier_rmse: 0.5,
        corner_errors: errs,
    };
    let report = AccuracyReport {
        runs: vec![
            rec(Method::Ours, 0.002, vec![Some(3.0), None]),
            rec(Method::Ours, 0.002, vec![Some(4.0), Some(0.0)]),
            rec(Method::RansacBaseline, 0.002, vec![Some(1.0), Some(1.0)]),
        ],
    };
    let ours = report.level(Method::Ours, 0.002).unwrap();
    assert_eq!((ours.runs, ours.corners_found, ours.corners_missed), (2, 3, 1));
    assert!((ours.corner_rmse.unwrap() - (25.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(ours.corner_max, Some(4.0));

    let csv = report.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("method,detail,noise"));
    assert!(lines[3].starts_with("ransac-baseline,high,"));

    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path()).unwrap();
    let back: Vec<LevelSummary> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(std::fs::read_to_string(dir.path().join("runs.csv")).unwrap(), csv);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stream_stays_on_the_box(
        x in 1.0..10.0f64, y in 1.0..10.0f64, z in 1.0..4.0f64,
        fx in 0.05..0.95f64, fy in 0.05..0.95f64, fz in 0.05..0.95f64,
        seed in 0u64..1000,
    ) {
        let cfg = ScanConfig {
            room: [x, y, z],
            scanner: Vec3::new(fx * x, fy * y, fz * z),
            angular_step: 0.05,
            sigma_depth: 0.0,
            sigma_angle: 0.0,
            window: ScanWindow::FULL,
            seed,
        };
        let stream = ScanStream::new(cfg).unwrap();
        let beams = stream.beams();
        let samples: Vec<_> = stream.collect();
        prop_assert_eq!(samples.len(), beams);
        let truth = cfg.truth();
        for s in samples {
            prop_assert!(truth.faces[s.face as usize].distance(s.point) < 1e-9);
            for a in 0..3 {
                prop_assert!(s.point[a] >= -1e-9 && s.point[a] <= cfg.room[a] + 1e-9);
            }
        }
    }
}

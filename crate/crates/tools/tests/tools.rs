use pcrecon_core::features::{synthesize_features, FeatureSet};
use pcrecon_core::grow::Segment;
use pcrecon_core::{Point3, Vec3};
use pcrecon_tools::direction::direction_candidates;
use pcrecon_tools::document::Op;
use pcrecon_tools::snap::closest_on_segment;
use pcrecon_tools::{
    estimate_params, export_json, export_obj, find_direction, import_json, polygon_construct, polygon_extrude,
    polygon_move_copy, snap_cursor, Error, ExtrudeStop, ParamConfig, ReconstructionDocument, SnapKind, Translation,
    ViewPose,
};
use proptest::prelude::*;

fn grid(origin: Vec3, u: Vec3, v: Vec3, n: usize) -> Vec<Vec3> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            out.push(origin + u * (a as f64 / n as f64) + v * (b as f64 / n as f64));
        }
    }
    out
}

/// Floor and two walls of a unit box corner at the origin.
fn box_corner() -> (Vec<Segment>, FeatureSet) {
    let segs: Vec<Segment> = [
        grid(Vec3::ZERO, Vec3::X, Vec3::Y, 50),
        grid(Vec3::ZERO, Vec3::Y, Vec3::Z, 50),
        grid(Vec3::ZERO, Vec3::X, Vec3::Z, 50),
    ]
    .iter()
    .enumerate()
    .map(|(i, p)| Segment::from_points(i as u32, p, 0.1).unwrap())
    .collect();
    let fs = synthesize_features(&segs, 0.02);
    (segs, fs)
}

fn view_of(target: Point3, eye: Point3) -> ViewPose {
    ViewPose::look_at(eye, target, Vec3::Z, 60f64.to_radians(), [1000, 800]).unwrap()
}

fn square() -> Vec<Point3> {
    vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
    ]
}

#[test]
fn seed_radius_is_a_tenth_of_the_view_width() {
    let cfg = ParamConfig::default();
    let p0 = Vec3::new(0.0, 5.0, 0.0);
    // Horizontal fov so that the width at depth 5 is exactly 3 m.
    let half = (1.5f64 / 5.0).atan();
    let fov_y = 2.0 * (half.tan() / 1.5).atan();
    let v = ViewPose::new(Vec3::ZERO, Vec3::Y, Vec3::Z, fov_y, [1500, 1000]).unwrap();
    let p = estimate_params(&v, p0, 0.01, &cfg).unwrap();
    assert!((p.seed_radius - 0.3).abs() < 1e-12);
    assert!((p.search_radius - 0.02).abs() < 1e-15);
    assert_eq!(p.plane_threshold, cfg.plane_threshold);
    let far = estimate_params(&v, p0 * 2.0, 0.01, &cfg).unwrap();
    assert!((far.seed_radius - 2.0 * p.seed_radius).abs() < 1e-12);
    assert!(matches!(estimate_params(&v, -p0, 0.01, &cfg), Err(Error::InvalidView(_))));
}

#[test]
fn density_spans_the_configured_range() {
    let cfg = ParamConfig::default();
    assert!((cfg.density_at(cfg.z_near) - 10_000.0).abs() < 1e-9);
    assert!((cfg.density_at(cfg.z_far) - 100.0).abs() < 1e-9);
    assert!((cfg.density_at(10.0) - 1_000.0).abs() < 1e-9);
    assert_eq!(cfg.density_at(0.1), 10_000.0);
    assert_eq!(cfg.density_at(1e4), 100.0);
}

#[test]
fn corner_wins_over_a_closer_edge() {
    let (segs, fs) = box_corner();
    let v = view_of(Vec3::ZERO, Vec3::new(3.0, 2.5, 2.0));
    let c = v.project(Vec3::ZERO).unwrap();
    let cursor = [c[0] + 3.0, c[1]];
    let s = snap_cursor(&v, cursor, &fs, &segs, None, 8.0).unwrap();
    assert_eq!(s.kind, SnapKind::Corner);
    assert!(s.position.norm() < 1e-9);
    assert!((s.screen_distance - 3.0).abs() < 1e-6);
}

#[test]
fn edge_midpoint_snaps_onto_the_line() {
    let (segs, fs) = box_corner();
    let v = view_of(Vec3::new(0.5, 0.5, 0.0), Vec3::new(3.0, 2.5, 2.0));
    let (ei, e) = fs.edges.iter().enumerate().find(|(_, e)| e.line.direction.cross(Vec3::X).norm() < 1e-9).unwrap();
    let mid = e.start.lerp(e.end, 0.5);
    let cursor = v.project(mid).unwrap();
    let s = snap_cursor(&v, cursor, &fs, &segs, None, 8.0).unwrap();
    assert_eq!(s.kind, SnapKind::Edge);
    assert_eq!(s.feature, Some(ei as u32));
    // Closest point of the cursor ray to the x axis: the ray meets it.
    let ray = v.ray(cursor);
    let t = -ray.origin.z / ray.direction.z;
    let hit = ray.at(t);
    assert!(s.position.distance(Vec3::new(hit.x, 0.0, 0.0)) < 1e-9);
    let again = snap_cursor(&v, cursor, &fs, &segs, None, 8.0).unwrap();
    assert_eq!(s, again);
}

#[test]
fn plane_hit_without_nearby_features() {
    let (segs, fs) = box_corner();
    let v = view_of(Vec3::new(0.6, 0.6, 0.0), Vec3::new(3.0, 2.5, 2.0));
    let target = Vec3::new(0.6, 0.6, 0.0);
    let s = snap_cursor(&v, v.project(target).unwrap(), &fs, &segs, None, 8.0).unwrap();
    assert_eq!(s.kind, SnapKind::Plane);
    assert_eq!(s.feature, Some(0));
    assert!(s.position.distance(target) < 1e-9);
    // Off every polygon: raw point or a miss.
    let sky = [5.0, 5.0];
    assert!(snap_cursor(&v, sky, &fs, &segs, None, 8.0).is_none());
    let raw = v.ray(sky).at(10.0);
    let r = snap_cursor(&v, sky, &fs, &segs, Some(raw), 8.0).unwrap();
    assert_eq!(r.kind, SnapKind::RawPoint);
}

#[test]
fn floor_normal_faces_the_viewer() {
    let (segs, fs) = box_corner();
    let v = view_of(Vec3::new(0.6, 0.6, 0.0), Vec3::new(3.0, 2.5, 2.0));
    let s = snap_cursor(&v, v.project(Vec3::new(0.6, 0.6, 0.0)).unwrap(), &fs, &segs, None, 8.0).unwrap();
    let d = find_direction(&v, &s, &fs, &segs, [0.0, 0.0]).unwrap();
    assert!(d.distance(Vec3::Z) < 1e-9);
}

#[test]
fn gesture_selects_the_best_aligned_candidate() {
    let (segs, fs) = box_corner();
    let v = view_of(Vec3::new(0.0, 0.0, 0.5), Vec3::new(3.0, 2.5, 1.0));
    let (ei, e) = fs.edges.iter().enumerate().find(|(_, e)| e.line.direction.cross(Vec3::Z).norm() < 1e-9).unwrap();
    let p = e.start.lerp(e.end, 0.5);
    let s = snap_cursor(&v, v.project(p).unwrap(), &fs, &segs, None, 8.0).unwrap();
    assert_eq!((s.kind, s.feature), (SnapKind::Edge, Some(ei as u32)));
    assert!(find_direction(&v, &s, &fs, &segs, [0.0, 0.0]).unwrap().cross(Vec3::Z).norm() < 1e-9);
    let gesture = [25.0, 3.0];
    let got = find_direction(&v, &s, &fs, &segs, gesture).unwrap();
    assert!(got.z.abs() < 1e-9, "horizontal tangent expected, got {got:?}");
    // Enumerate both signs of every candidate and score their screen images.
    let p0 = v.project(s.position).unwrap();
    let score = |d: Vec3| {
        let q = v.project(s.position + d * 1e-3).unwrap();
        let w = [q[0] - p0[0], q[1] - p0[1]];
        (w[0] * gesture[0] + w[1] * gesture[1]) / w[0].hypot(w[1])
    };
    let best = direction_candidates(&s, &fs, &segs)
        .unwrap()
        .into_iter()
        .flat_map(|d| [d, -d])
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap();
    assert!(got.distance(best) < 1e-12);
}

#[test]
fn construct_validates_the_loop() {
    let tri = [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)];
    let p = polygon_construct(1, &tri, None).unwrap();
    for v in &p.vertices {
        assert!(p.frame.distance(*v) < 1e-12);
    }
    assert!((p.area() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    let line = [Vec3::ZERO, Vec3::X, Vec3::X * 2.0];
    assert!(matches!(polygon_construct(1, &line, None), Err(Error::DegeneratePolygon)));
    let bowtie = [Vec3::ZERO, Vec3::new(1.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
    assert!(matches!(polygon_construct(1, &bowtie, None), Err(Error::SelfIntersecting)));
    assert!(matches!(polygon_construct(1, &tri[..2], None), Err(Error::TooFewVertices(2))));
    let mut bent = square();
    bent[2].z = 0.01;
    assert!(matches!(polygon_construct(1, &bent, None), Err(Error::NotCoplanar(_))));
    let wall = [Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 1.5), Vec3::new(0.0, 0.0, 1.5)];
    assert!((polygon_construct(1, &wall, None).unwrap().area() - 3.0).abs() < 1e-12);
}

#[test]
fn translations_are_exact() {
    let p = polygon_construct(1, &square(), None).unwrap();
    let zero = Translation::Direction {
        direction: Vec3::X,
        distance: 0.0,
    };
    assert_eq!(polygon_move_copy(&p, &zero, false, 1).vertices, p.vertices);
    let a = Vec3::new(0.0, 0.0, 0.0);
    let b = Vec3::new(0.3, -1.2, 2.5);
    let m = polygon_move_copy(&p, &Translation::Snap { anchor: a, target: b, constraint: None }, true, 2);
    for (u, v) in p.vertices.iter().zip(&m.vertices) {
        assert!((*v - *u).distance(b - a) < 1e-15);
    }
    let u = Vec3::new(1.0, 1.0, 0.0).normalize();
    let c = polygon_move_copy(&p, &Translation::Snap { anchor: a, target: b, constraint: Some(u) }, false, 1);
    let want = u * (b - a).dot(u);
    for (x, y) in p.vertices.iter().zip(&c.vertices) {
        assert!((*y - *x).distance(want) < 1e-15);
    }
}

#[test]
fn extrusion_lengths_and_errors() {
    let p = polygon_construct(1, &square(), None).unwrap();
    let pr = polygon_extrude(&p, Vec3::Z, ExtrudeStop::Length(1.0), 2).unwrap();
    let faces = pr.faces(&p);
    assert_eq!(faces.len(), 6);
    let target = Vec3::new(5.0, -3.0, 0.30);
    let t = polygon_extrude(&p, Vec3::Z, ExtrudeStop::Target(target), 2).unwrap();
    assert!((t.length - 0.30).abs() < 1e-9);
    let slanted = polygon_extrude(&p, Vec3::new(1.0, 0.0, 1.0), ExtrudeStop::Target(target), 2).unwrap();
    let cap_z = (slanted.direction * slanted.length).z;
    assert!((cap_z - 0.30).abs() < 1e-9);
    assert!(matches!(polygon_extrude(&p, Vec3::X, ExtrudeStop::Length(1.0), 2), Err(Error::ParallelDirection)));
    assert!(matches!(
        polygon_extrude(&p, Vec3::Z, ExtrudeStop::Length(-1.0), 2),
        Err(Error::NonPositiveLength(_))
    ));
    assert!(polygon_extrude(&p, -Vec3::Z, ExtrudeStop::Target(target), 2).is_err());
}

#[test]
fn unit_cube_exports_six_faces_eight_vertices() {
    let mut doc = ReconstructionDocument::new();
    doc.apply(Op::Construct { vertices: square(), plane: None }).unwrap();
    doc.apply(Op::Extrude { polygon: 1, direction: Vec3::Z, stop: ExtrudeStop::Length(1.0) }).unwrap();
    let obj = export_obj(&doc).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 6);
    // Every edge of a closed, consistently wound mesh is used once each way.
    let mut edges = std::collections::BTreeMap::new();
    for l in obj.lines().filter(|l| l.starts_with("f ")) {
        let ids: Vec<usize> = l[2..].split(' ').map(|t| t.parse().unwrap()).collect();
        for k in 0..ids.len() {
            *edges.entry((ids[k], ids[(k + 1) % ids.len()])).or_insert(0) += 1;
        }
    }
    for (&(a, b), &n) in &edges {
        assert_eq!(n, 1);
        assert_eq!(edges.get(&(b, a)), Some(&1));
    }
    let empty = export_obj(&ReconstructionDocument::new()).unwrap();
    assert!(empty.lines().all(|l| l.starts_with('#')));
}

#[test]
fn json_export_is_a_fixpoint_and_journal_replays() {
    let mut doc = ReconstructionDocument::new();
    doc.apply(Op::Construct { vertices: square(), plane: None }).unwrap();
    doc.apply(Op::Copy {
        polygon: 1,
        translation: Translation::Direction { direction: Vec3::new(0.1, 0.7, 0.3).normalize(), distance: 1.0 / 3.0 },
    })
    .unwrap();
    doc.apply(Op::Extrude { polygon: 2, direction: Vec3::Z, stop: ExtrudeStop::Length(0.123456789) }).unwrap();
    let json = export_json(&doc).unwrap();
    let back = import_json(&json).unwrap();
    assert_eq!(back, doc);
    assert_eq!(export_json(&back).unwrap(), json);
    let replayed = ReconstructionDocument::replay(&doc.journal).unwrap();
    assert_eq!(export_json(&replayed).unwrap(), json);

    let mut undone = doc.clone();
    undone.undo().unwrap();
    assert_eq!(undone.prisms.len(), 0);
    assert_eq!(undone.polygons.len(), 2);
    undone.undo().unwrap();
    undone.undo().unwrap();
    assert_eq!(undone, ReconstructionDocument::new());
    assert!(matches!(undone.undo(), Err(Error::EmptyJournal)));
}

#[test]
fn failed_ops_leave_the_document_unchanged() {
    let mut doc = ReconstructionDocument::new();
    doc.apply(Op::Construct { vertices: square(), plane: None }).unwrap();
    let before = doc.clone();
    assert!(doc.apply(Op::Extrude { polygon: 1, direction: Vec3::X, stop: ExtrudeStop::Length(1.0) }).is_err());
    assert!(doc.apply(Op::Move { polygon: 9, translation: Translation::Direction { direction: Vec3::X, distance: 1.0 } }).is_err());
    assert_eq!(doc, before);
}

#[test]
fn closest_point_on_segment_clamps() {
    let ray = pcrecon_core::Ray::new(Vec3::new(5.0, 1.0, 0.0), -Vec3::Y);
    let p = closest_on_segment(&ray, Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0));
    assert_eq!(p, Vec3::new(1.0, 0.0, 0.0));
}

proptest! {
    #[test]
    fn density_falls_and_seed_radius_grows_with_distance(z1 in 0.2f64..200.0, z2 in 0.2f64..200.0) {
        let cfg = ParamConfig::default();
        let v = ViewPose::new(Vec3::ZERO, Vec3::Y, Vec3::Z, 1.0, [800, 600]).unwrap();
        let a = estimate_params(&v, Vec3::new(0.0, z1, 0.0), 0.01, &cfg).unwrap();
        let b = estimate_params(&v, Vec3::new(0.0, z2, 0.0), 0.01, &cfg).unwrap();
        if z1 <= z2 {
            prop_assert!(a.density >= b.density);
        }
        prop_assert!((a.seed_radius / z1 - b.seed_radius / z2).abs() < 1e-12);
    }

    #[test]
    fn random_polygons_stay_coplanar_after_edits(
        n in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
        len in 0.01f64..3.0,
    ) {
        let normal = Vec3::new(n.0, n.1, n.2).normalize();
        let u = normal.any_orthonormal();
        let w = normal.cross(u);
        let ring: Vec<Point3> = (0..7)
            .map(|k| {
                let a = k as f64 / 7.0 * std::f64::consts::TAU;
                Vec3::new(1.0, 2.0, 3.0) + u * a.cos() + w * (0.5 * a.sin())
            })
            .collect();
        let mut doc = ReconstructionDocument::new();
        doc.apply(Op::Construct { vertices: ring, plane: None }).unwrap();
        doc.apply(Op::Copy {
            polygon: 1,
            translation: Translation::Direction { direction: Vec3::new(shift.0, shift.1, shift.2).try_normalize().unwrap_or(Vec3::X), distance: 1.0 },
        }).unwrap();
        doc.apply(Op::Extrude { polygon: 2, direction: normal, stop: ExtrudeStop::Length(len) }).unwrap();
        for p in &doc.polygons {
            for v in &p.vertices {
                prop_assert!(v.is_finite());
                prop_assert!(p.frame.distance(*v) < 1e-6);
            }
            prop_assert!(p.area() > 0.0);
        }
        let obj = export_obj(&doc).unwrap();
        prop_assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 1 + 9);
    }
}

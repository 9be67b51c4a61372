use std::sync::Arc;

use pcrecon_core::octree::{BuildConfig, Octree};
use pcrecon_core::Vec3;
use pcrecon_tools::script::{parse_script, run_script, Command};
use pcrecon_tools::session::SnapRef;
use pcrecon_tools::{export_obj, Error, Session, ViewPose};

fn patch(origin: Vec3, u: Vec3, v: Vec3, step: f64) -> Vec<Vec3> {
    let n = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            out.push(origin + u * (a as f64 * step) + v * (b as f64 * step));
        }
    }
    out
}

fn corner_session() -> Session {
    let mut pts = patch(Vec3::ZERO, Vec3::X, Vec3::Y, 0.01);
    pts.extend(patch(Vec3::new(0.0, 0.0, 0.01), Vec3::X, Vec3::Z, 0.01));
    pts.extend(patch(Vec3::new(0.0, 0.01, 0.01), Vec3::Y, Vec3::Z, 0.01));
    let tree = Octree::build_in_memory(pts, BuildConfig::with_budget(4096)).unwrap();
    let view = ViewPose::look_at(Vec3::new(2.5, 2.0, 1.8), Vec3::new(0.3, 0.3, 0.3), Vec3::Z, 1.0, [1280, 720]).unwrap();
    Session::new(Arc::new(tree), view)
}

const SCRIPT: &str = "
# three walls of a corner
grow seed=point:0.5,0.5,0 tp=0.004 r=0.06 rs=0.08 density=3000
grow seed=point:0.5,0,0.5 tp=0.004 r=0.06 rs=0.08 density=3000
grow seed=point:0,0.5,0.5 tp=0.004 r=0.06 rs=0.08 density=3000
construct corner:0 point:0.4,0,0 point:0.4,0.4,0 point:0,0.4,0
extrude id=1 dir=0,0,1 length=0.25
copy id=1 dir=0,0,1 dist=0.5
undo
extrude id=1 dir=normal:0 to=point:0,0,0.3
";

#[test]
fn script_builds_a_box_on_the_grown_floor() {
    let steps = parse_script(SCRIPT).unwrap();
    assert_eq!(steps.len(), 8);
    assert_eq!(steps[0].line, 3);
    let mut s = corner_session();
    let log = run_script(&mut s, &steps).unwrap();
    assert_eq!(log.len(), 8);
    assert_eq!(s.segments.len(), 3);
    assert_eq!(s.features.edges.len(), 3);
    assert_eq!(s.features.corners.len(), 1);
    assert!(s.features.corners[0].position.norm() < 0.01);
    assert_eq!(s.features.generation, 3);
    assert!(log[3].starts_with("6: construct polygon 1 vertices=4"));

    let doc = &s.document;
    assert_eq!(doc.polygons.len(), 1);
    assert_eq!(doc.prisms.len(), 2);
    assert!((doc.prisms[1].length - 0.3).abs() < 0.01);
    let obj = export_obj(doc).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 12);

    // Same inputs, same log.
    let mut again = corner_session();
    assert_eq!(run_script(&mut again, &steps).unwrap(), log);
}

#[test]
fn parse_errors_carry_the_line() {
    let cases = [
        ("grow tp=0.1", 1),
        ("\nextrude id=1 dir=0,0,1", 2),
        ("\n\nmove id=1 dir=0,0,1 dist=x", 3),
        ("frobnicate", 1),
        ("undo now", 1),
        ("view eye=0,0,1", 1),
        ("construct corner:a", 1),
        ("snap radius=1 radius=2", 1),
    ];
    for (text, line) in cases {
        match parse_script(text) {
            Err(Error::Script { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    let ok = parse_script("view eye=1,2,3 target=0,0,0 fov=45 size=640x480\nsnap radius=20\nconstruct cursor:1.5,2 edge:0@0.25 corner:3").unwrap();
    assert!(matches!(ok[0].command, Command::View(_)));
    assert_eq!(ok[1].command, Command::SnapRadius(20.0));
    assert_eq!(
        ok[2].command,
        Command::Construct(vec![SnapRef::Cursor([1.5, 2.0]), SnapRef::Edge(0, 0.25), SnapRef::Corner(3)])
    );
}

#[test]
fn runtime_errors_name_the_line() {
    let mut s = corner_session();
    let steps = parse_script("undo").unwrap();
    assert!(matches!(run_script(&mut s, &steps), Err(Error::Script { line: 1, .. })));
    let steps = parse_script("construct corner:0 corner:1 corner:2").unwrap();
    assert!(matches!(run_script(&mut s, &steps), Err(Error::Script { line: 1, .. })));
}

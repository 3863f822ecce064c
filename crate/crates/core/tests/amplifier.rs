mod common;

use tabletop_core::amplifier::{record_demo, retarget_demo, segment_demo, validate_trajectory, DemoStep};
use tabletop_core::sim::Action;
use tabletop_core::{Error, SimConfig, Variation};

fn shifted(v: &Variation, dx: f64, dy: f64) -> Variation {
    let mut out = v.clone();
    out.id = format!("{}~shift", v.id);
    for o in &mut out.scene.objects {
        o.pose.x += dx;
        o.pose.y += dy;
    }
    out
}

#[test]
fn recorded_demo_replays() {
    let cfg = SimConfig::default();
    for key in ["coffee", "fastfood", "plates"] {
        let v = common::base(key, 7);
        let demo = record_demo(&v, &cfg).unwrap();
        assert_eq!(demo.segments.len(), demo.segment_poses.len());
        let r = validate_trajectory(&demo, &v, &cfg);
        assert!(r.success && r.violations.is_empty(), "{key}: {:?}", r.violations);
    }
}

#[test]
fn identity_retarget_keeps_structure() {
    let cfg = SimConfig::default();
    let v = common::base("fastfood", 7);
    let demo = record_demo(&v, &cfg).unwrap();
    let again = retarget_demo(&demo, &v, &cfg).unwrap();
    assert_eq!(again.segments.len(), demo.segments.len());
    assert_eq!(again.segment_poses, demo.segment_poses);
    let r = validate_trajectory(&again, &v, &cfg);
    assert!(r.success, "{:?}", r.violations);
}

#[test]
fn translated_scene_is_reached() {
    let cfg = SimConfig::default();
    let v = common::base("coffee", 7);
    let demo = record_demo(&v, &cfg).unwrap();
    for (dx, dy) in [(0.04, 0.0), (0.0, -0.03), (-0.02, 0.02)] {
        let target = shifted(&v, dx, dy);
        let moved = retarget_demo(&demo, &target, &cfg).unwrap();
        assert_eq!(moved.variation_id, target.id);
        for (a, b) in demo.segment_poses.iter().zip(&moved.segment_poses) {
            assert!((b.x - a.x - dx).abs() < 1e-9 && (b.y - a.y - dy).abs() < 1e-9);
        }
        let r = validate_trajectory(&moved, &target, &cfg);
        assert!(r.success, "({dx}, {dy}): {:?}", r.violations);
    }
}

#[test]
fn missing_anchor_is_reported() {
    let cfg = SimConfig::default();
    let v = common::base("coffee", 7);
    let demo = record_demo(&v, &cfg).unwrap();
    let anchor = demo.segments[0].anchor.clone();
    let mut target = v.clone();
    target.scene.objects.retain(|o| o.instance_name != anchor);
    let err = retarget_demo(&demo, &target, &cfg).unwrap_err();
    assert!(matches!(err, Error::AnchorMissing(ref a) if *a == anchor), "{err:?}");
}

#[test]
fn segmentation_needs_annotations() {
    let bare = vec![DemoStep { action: Action::NoOp, anchor: None }; 3];
    assert!(matches!(segment_demo(&bare), Err(Error::MissingAnnotations)));
    let steps = vec![
        DemoStep { action: Action::NoOp, anchor: None },
        DemoStep { action: Action::Grasp, anchor: Some("a".into()) },
        DemoStep { action: Action::NoOp, anchor: None },
        DemoStep { action: Action::Release, anchor: Some("b".into()) },
    ];
    let segs = segment_demo(&steps).unwrap();
    assert_eq!(segs.iter().map(|s| (s.anchor.as_str(), s.start, s.end)).collect::<Vec<_>>(), [("a", 0, 2), ("b", 3, 3)]);
}

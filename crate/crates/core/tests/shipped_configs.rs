//! Every scenario and rig file shipped in `scenarios/` must load cleanly.

use std::path::PathBuf;

use canebot_core::rig::RigConfig;
use canebot_core::scenario::Scenario;

fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_parse_and_validate() {
    let mut seen = 0;
    for entry in std::fs::read_dir(scenarios_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json")
            || path.file_stem().and_then(|s| s.to_str()) == Some("rig_default")
        {
            continue;
        }
        let s = Scenario::from_file(&path)
            .unwrap_or_else(|e| panic!("{} failed to load: {e}", path.display()));
        s.load_rig()
            .unwrap_or_else(|e| panic!("{} rig failed: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 7, "expected the shipped scenario set, found {seen}");
}

#[test]
fn shipped_rig_matches_the_builtin_default() {
    let shipped = RigConfig::from_file(&scenarios_dir().join("rig_default.json")).unwrap();
    let builtin = RigConfig::default();
    assert_eq!(shipped.leg_radius, builtin.leg_radius);
    assert_eq!(shipped.attachment_arm, builtin.attachment_arm);
    assert_eq!(shipped.attachment_offset, builtin.attachment_offset);
    for i in 0..4 {
        let id = canebot_core::rig::CameraId::new(i).unwrap();
        let d = (shipped.camera_pose(id).trans - builtin.camera_pose(id).trans).norm();
        assert!(d < 1e-12, "camera {i} offset {d}");
    }
}

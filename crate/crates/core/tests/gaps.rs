use std::path::PathBuf;

use scalelab_core::{assemble, scenario, GapId, GapStatus, ScenarioConfig};

fn preset(rel: &str) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(rel);
    scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Subtrees that differ from the default deployment, ignoring the raw
/// scenario (which carries the toggles themselves).
fn changed(sc: &ScenarioConfig) -> Vec<&'static str> {
    let base = assemble(&preset("sockshop-default.json")).unwrap();
    let asm = assemble(sc).unwrap();
    base.differing_subtrees(&asm)
        .into_iter()
        .filter(|s| *s != "base")
        .collect()
}

#[test]
fn each_gap_touches_only_its_own_subtree() {
    for g in GapId::ALL {
        let mut sc = preset("sockshop-default.json");
        sc.gaps.set_active(g, true);
        let diff = changed(&sc);
        assert!(
            diff.iter().all(|s| *s == g.mechanism()),
            "{}: {diff:?}",
            g.code()
        );
    }
}

#[test]
fn per_gap_presets_activate_exactly_one_gap() {
    for (i, g) in GapId::ALL.iter().enumerate() {
        let sc = preset(&format!("g{:02}.json", i + 1));
        let asm = assemble(&sc).unwrap();
        for (other, status) in &asm.status {
            let want = if other == g {
                GapStatus::Active
            } else {
                GapStatus::Inactive
            };
            assert_eq!(*status, want, "g{:02}.json: {}", i + 1, other.code());
        }
        assert!(
            changed(&sc).iter().all(|s| *s == g.mechanism()),
            "g{:02}.json",
            i + 1
        );
    }
}

#[test]
fn remediation_overrides_its_gap() {
    let asm = assemble(&preset("benchmark-remediated.json")).unwrap();
    assert!(asm.status.values().all(|s| *s == GapStatus::Remediated));
    let mut both = preset("benchmark-as-found.json");
    both.remediations = preset("benchmark-remediated.json").remediations;
    let asm = assemble(&both).unwrap();
    assert!(asm.status.values().all(|s| *s == GapStatus::Remediated));
}

#[test]
fn as_found_preset_activates_every_representable_gap() {
    let asm = assemble(&preset("benchmark-as-found.json")).unwrap();
    for (g, s) in &asm.status {
        // With probes removed there is nothing left to misconfigure.
        let want = if *g == GapId::G5 {
            GapStatus::NotRepresentable
        } else {
            GapStatus::Active
        };
        assert_eq!(*s, want, "{}", g.code());
    }
}

#[test]
fn every_preset_validates() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets");
    let mut seen = 0;
    for dir in [root.clone(), root.join("acceptance")] {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "json") && p.file_name().unwrap() != "schema.json"
            {
                let v = scenario::validate_file(&p);
                assert!(v.is_ok(), "{}: {:?}", p.display(), v.errors);
                seen += 1;
            }
        }
    }
    assert!(seen >= 27, "found only {seen} presets");
}

#[test]
fn shipped_gain_schedule_is_the_default() {
    use scalelab_core::autoscalers::fixed_pid::FixedPidParams;
    let sc = preset("fixed-pid.json");
    let shipped: FixedPidParams = serde_json::from_value(sc.autoscaler.params).unwrap();
    assert_eq!(shipped, FixedPidParams::default());
}

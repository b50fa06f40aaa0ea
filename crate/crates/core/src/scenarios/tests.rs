use super::format::{Check, Expected, ScenarioFile};
use super::*;

fn quick() -> RunOptions {
    RunOptions {
        samples: 30,
        ..RunOptions::default()
    }
}

fn verdicts(r: &Report) -> String {
    r.assertions
        .iter()
        .map(|a| format!("{}: {:?} ({:.3e}) {}", a.name, a.verdict, a.max_residual, a.note.clone().unwrap_or_default()))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn builtin_files_parse_validate_and_round_trip() {
    let reg = Registry::builtin().unwrap();
    assert_eq!(reg.names().len(), 21);
    assert!(reg.names().contains(&OBSTRUCTION.to_string()));
    for name in reg.names() {
        let Some(file) = reg.get(&name) else { continue };
        file.validate().unwrap();
        let again = ScenarioFile::from_toml(&file.to_toml().unwrap()).unwrap();
        assert_eq!(&again, file, "{name}");
    }
}

#[test]
fn unknown_scenario_is_an_error() {
    assert!(run_scenario("nonexistent", &quick()).is_err());
}

#[test]
fn minus_identity_scenario_passes() {
    let r = run_scenario("prop_4_1", &quick()).unwrap();
    assert!(r.passed(), "{}", verdicts(&r));
    assert_eq!(r.assertions.len(), 2);
}

#[test]
fn punctured_plane_cocycle_scenario_passes() {
    let r = run_scenario("example_6_2_cocycle", &quick()).unwrap();
    assert!(r.passed(), "{}", verdicts(&r));
}

#[test]
fn obstruction_reports_jump_and_non_extendability() {
    let r = run_scenario(OBSTRUCTION, &quick()).unwrap();
    assert!(r.passed(), "{}", verdicts(&r));
    let jump = r.assertions.iter().find(|a| a.name == "u_y_jump_is_pi").unwrap();
    assert!(jump.max_residual <= 1e-6);
    let ext = r.assertions.iter().find(|a| a.name == "u_y_extends_continuously").unwrap();
    assert_eq!(ext.expected, Expected::Fail);
    assert!((ext.max_residual - std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&run_scenario("example_3_2", &quick()).unwrap()).unwrap();
    let b = serde_json::to_string(&run_scenario("example_3_2", &quick()).unwrap()).unwrap();
    assert_eq!(a, b);
    let other = RunOptions { seed: 7, ..quick() };
    let c = serde_json::to_string(&run_scenario("example_3_2", &other).unwrap()).unwrap();
    assert_ne!(a, c);
}

#[test]
fn expected_fail_needs_a_witness() {
    let small = EqualityReport::scalar(1e-6, 1e-9);
    assert_eq!(judge(&small, Expected::Pass), Verdict::Fail);
    assert_eq!(judge(&small, Expected::Fail), Verdict::Fail);
    let big = EqualityReport::scalar(0.5, 1e-9);
    assert_eq!(judge(&big, Expected::Fail), Verdict::Pass);
    let zero = EqualityReport::scalar(0.0, 1e-9);
    assert_eq!(judge(&zero, Expected::Pass), Verdict::Pass);
}

const CURVED_CONTEXT: &str = r#"
name = "curved_context"

[chart]
coords = ["x", "y"]
bounds = [[-1.0, 1.0], [-1.0, 1.0]]

[context]
connection = "lc"

[[bind]]
name = "g"
kind = "diagonal_metric"
entries = ["1 + y^2", "exp(x)"]

[[bind]]
name = "lc"
kind = "levi_civita"
metric = "g"

[[bind]]
name = "id"
kind = "identity"

[[assert]]
name = "anything"
probe = "symmetric"
cochain = "id"
reference = "n/a"
"#;

#[test]
fn curved_context_is_a_setup_error() {
    let file = ScenarioFile::from_toml(CURVED_CONTEXT).unwrap();
    let err = run_file(&file, &quick()).unwrap_err();
    assert!(matches!(err, Error::Scenario { .. }), "{err}");
}

#[test]
fn validation_rejects_forward_and_missing_references() {
    let mut file = ScenarioFile::from_toml(CURVED_CONTEXT).unwrap();
    file.bindings.swap(0, 1);
    assert!(file.validate().is_err());
    let mut file = ScenarioFile::from_toml(CURVED_CONTEXT).unwrap();
    file.assertions[0].check = Check::Symmetric { cochain: "nope".into() };
    assert!(file.validate().is_err());
    assert!(ScenarioFile::from_toml("name = 3").is_err());
}

#[test]
fn load_dir_overrides_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let text = CURVED_CONTEXT.replace("curved_context", "prop_4_1");
    std::fs::write(dir.path().join("prop_4_1.toml"), text).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let mut reg = Registry::builtin().unwrap();
    reg.load_dir(dir.path()).unwrap();
    assert_eq!(reg.names().len(), 21);
    assert!(reg.run("prop_4_1", &quick()).is_err());
}

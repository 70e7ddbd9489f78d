use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynext_cli::{execute, run_scenario, Construction, Options};
use dynext_core::certificate::Format;
use dynext_core::scenario::Scenario;

fn dynext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynext")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.scn");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn nilpotent_operator_factors_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "[factor-operator]\nmatrix = 0 1; 0 0\nrho = 1\ndepth = 10000\n");
    let out = dynext(&["factor-operator", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("[PASS] T π(e_i) = π(ρ U e_i)"));
    assert!(text.contains("320 covered basis indices"));
}

#[test]
fn interval_covers_verify_from_flags() {
    let out = dynext(&["verify-covers", "--space", "interval", "--depth", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("[9, 45, 225, 1125, 5625, 28125]"));
}

#[test]
fn rho_below_the_norm_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "[factor-operator]\nmatrix = 0 2; 0 0\nrho = 1\n");
    let out = dynext(&["run", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("first failure: dynext seed=0 / factor-operator / enumeration: NormBoundViolated"));
}

#[test]
fn non_invariant_set_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "[invariant-tower]\nmap = square\npoints = 1/3\n");
    let out = dynext(&["invariant-tower", "--scenario", &path]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("T(1/3) = 1/9 is not in Z"));
}

#[test]
fn malformed_scenarios_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("[lift-map]\nspace interval\n", "line 2"),
        ("[lift-map]\nmap = cube\n", "line 2"),
        ("[factor-operator]\nmatrix = 1 2; 3\n", "line 2"),
        ("[no-such-thing]\n", "unknown construction"),
        ("[lift-map]\ndepth = many\n", "`depth`"),
    ] {
        let path = write_scenario(dir.path(), text);
        let out = dynext(&["run", "--scenario", &path]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(needle), "{text}");
    }
    assert_eq!(dynext(&["run"]).status.code(), Some(2));
    assert_eq!(dynext(&["lift-map", "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn certificates_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "[lift-map]\nspace = circle\nmap = rotation-family\ndepth = 4\nsamples = 10\n\n[generalized-extension]\nsamples = 5\n",
    );
    let run = |seed: &str, out: &str| {
        let target = dir.path().join(out);
        let o = dynext(&[
            "run",
            "--scenario",
            &path,
            "--seed",
            seed,
            "--out",
            target.to_str().unwrap(),
            "--format",
            "tree",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        fs::read_to_string(target.join("certificate.txt")).unwrap()
    };
    let a = run("9", "a");
    assert_eq!(a, run("9", "b"));
    assert!(a.starts_with("[PASS] dynext seed=9\n"));
    assert!(run("10", "c").starts_with("[PASS] dynext seed=10\n"));
    let summary = fs::read_to_string(dir.path().join("a/summary.txt")).unwrap();
    assert!(summary.contains("PASS  lift-map") && summary.ends_with("overall: PASS\n"));
}

#[test]
fn subcommands_select_their_sections() {
    let scenario = Scenario::parse("[verify-covers]\nspace = cantor\n\n[invariant-tower]\ndyadic = 4\n").unwrap();
    let opts = Options { depth: Some(3), ..Options::default() };
    let only = run_scenario(&scenario, Some(Construction::InvariantTower), &opts).unwrap();
    assert_eq!(only.children.len(), 1);
    assert!(only.passed());
    let all = run_scenario(&scenario, None, &opts).unwrap();
    assert_eq!(all.children.len(), 2);
    assert!(run_scenario(&scenario, Some(Construction::LiftMap), &opts).is_err());
}

#[test]
fn every_construction_passes_on_defaults() {
    let opts = Options { depth: Some(3), samples: Some(4), ..Options::default() };
    for kind in Construction::ALL {
        let report = execute(None, Some(kind), &opts, Format::Text).unwrap();
        assert!(report.passed(), "{}", report.rendered());
        assert_eq!(report.exit_code(), 0);
        assert_eq!(Construction::from_name(kind.name()), Some(kind));
    }
}

#[test]
fn rotation_powers_are_falsified() {
    let scenario = Scenario::parse("[contractive-extension]\nfamily = rotation-family\ndepth = 12\n").unwrap();
    let cert = run_scenario(&scenario, None, &Options::default()).unwrap();
    let (path, witness) = cert.first_failure().unwrap();
    assert!(path.ends_with("controlled powers"));
    assert!(witness.starts_with("falsified"));
}

#[test]
fn shipped_scenarios_behave() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let showcase = dynext(&["run", "--scenario", &format!("{dir}/showcase.scn"), "--depth", "4", "--samples", "4"]);
    assert_eq!(showcase.status.code(), Some(0), "{}", stdout(&showcase));
    let negative = dynext(&["run", "--scenario", &format!("{dir}/negative.scn")]);
    assert_eq!(negative.status.code(), Some(1));
    assert_eq!(stdout(&negative).matches("witness:").count(), 3);
}

use std::path::Path;
use std::process::{Command, Output};

fn wbflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wbflow")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const SMALL: &str = "[domain]\nn_cells = 6\n[model]\npreset = \"log\"\nv = { constant = 0.0, slope = 0.3 }\nrho_d = { lower = 1.2, upper = 0.9 }\n[initial]\namplitude = 0.2\n[scheme]\ntau = 0.1\nt_final = 0.2\n";

#[test]
fn solve_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = wbflow(&["solve", "small.toml", "-o", "res"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("status: ok"), "{stdout}");
    let traj = std::fs::read_to_string(dir.path().join("res/trajectory.csv")).unwrap();
    assert!(traj.starts_with("# schema=wbflow.trajectory.v1 model="));
    assert_eq!(traj.lines().nth(1), Some("step,t,x,rho,h,phi_star"));
    assert_eq!(traj.lines().count(), 2 + 3 * 6);
    let diag = std::fs::read_to_string(dir.path().join("res/diagnostics.csv")).unwrap();
    assert!(diag.starts_with("# schema=wbflow.diagnostics.v1"));
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = wbflow(&["oracle", "small.toml", "--dry-run", "-o", "res"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(!dir.path().join("res").exists());
}

#[test]
fn repeated_runs_match_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    for d in ["a", "b"] {
        for cmd in ["solve", "oracle", "compare"] {
            assert!(wbflow(&[cmd, "small.toml", "-o", d], dir.path()).status.success());
        }
    }
    for f in ["trajectory.csv", "diagnostics.csv", "reference.csv", "profile.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn verify_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = wbflow(&["verify", "--dry-run"], dir.path());
    assert!(out.status.success(), "{}{}", text(&out.stdout), text(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("neg.toml"), "[model]\nq = -1.0\n").unwrap();
    let out = wbflow(&["solve", "neg.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("Q>=0"), "{}", text(&out.stderr));

    std::fs::write(dir.path().join("typo.toml"), "[scheme]\ntua = 0.1\n").unwrap();
    let out = wbflow(&["solve", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("tua"));

    let out = wbflow(&["solve", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(5));

    let out = wbflow(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_prints_round_trippable_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let out = wbflow(&["config", "small.toml"], dir.path());
    assert!(out.status.success());
    let rendered = text(&out.stdout);
    assert!(rendered.contains("[solver]") && rendered.contains("n_cells = 6"), "{rendered}");
    std::fs::write(dir.path().join("full.toml"), &rendered).unwrap();
    let again = wbflow(&["config", "full.toml"], dir.path());
    assert_eq!(text(&again.stdout), rendered);
}

use std::path::PathBuf;
use std::process::{Command, Output};

const SMALL: &str = "\
bs_antennas = 4
irs_elements = 100
low_users = 2
high_users = 1
seed = 3
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-codesign"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("irs-codesign-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn small_config() -> PathBuf {
    let p = scratch("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn validate_passes() {
    let cfg = small_config();
    let out = run(&["validate", "--config", cfg.to_str().unwrap(), "--trials", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn power_sweep_writes_csv() {
    let cfg = small_config();
    let csv = scratch("sweep.csv");
    let out = run(&[
        "power-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "sinr=0,5",
        "--schemes",
        "NoIrs_MMSE,DftCodebook_MMSE",
        "--trials",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("experiment,sweep,scheme,metric,value,trials,stderr,seed"));
    assert!(lines.filter(|l| l.contains("power_dbm")).count() >= 4);
}

#[test]
fn ser_sweep_to_stdout() {
    let cfg = small_config();
    let out = run(&[
        "ser-sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--sweep",
        "power=0,10",
        "--schemes",
        "ProposedDiversity,NullSpaceNoIrs",
        "--trials",
        "1",
        "--pairs",
        "50",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.contains(",ser,")).count(), 4);
}

#[test]
fn bad_arguments_exit_with_one() {
    let cases: [&[&str]; 4] = [
        &["power-sweep", "--sweep", "nonsense=1"],
        &["power-sweep", "--sweep", "sinr=0", "--schemes", "NotAScheme"],
        &["power-sweep", "--sweep", "sinr=0", "--schemes", "ProposedDiversity"],
        &["convergence", "--config", "/nonexistent/file.cfg"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
